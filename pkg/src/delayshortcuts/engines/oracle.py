"""Exact round-based reference: trip scanning plus full Dijkstra transfers per round.

Each round scans every trip and boards it at its first index reachable from
the previous round's labels, so no FIFO assumption is made. Vehicle
arrivals then seed a multi-source Dijkstra over the whole transfer graph.
"""
from __future__ import annotations

import heapq

from ..delays import DelayedTimetable
from ..timetable import TransferGraph
from .common import INF, EngineConfig, Journey, ParetoSet, Query, TripLeg, walk_leg

_SEED = -2


def _dijkstra(g: TransferGraph, seeds: dict[int, int]) -> tuple[list[float], list[int]]:
    dist = [INF] * g.num_vertices
    parent = [-1] * g.num_vertices
    heap = []
    for v, t in seeds.items():
        dist[v], parent[v] = t, _SEED
        heap.append((t, v))
    heapq.heapify(heap)
    out = g.out
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for w, v in out[u]:
            nd = d + w
            if nd < dist[v]:
                dist[v], parent[v] = nd, u
                heapq.heappush(heap, (nd, v))
    return dist, parent


def oracle_query(dtt: DelayedTimetable, g: TransferGraph, q: Query, cfg: EngineConfig | None = None) -> ParetoSet:
    tt = dtt.timetable
    max_rounds = (cfg or EngineConfig()).max_rounds
    arr, dep, buf = dtt.arr, dtt.dep, dtt.buffer
    ev_stop = tt.ev_stop.tolist()
    n_stops = tt.num_stops

    d0, p0 = _dijkstra(g, {q.source: q.dep_time})
    labels = [d0]
    parents = [p0]
    vehicle: list[dict[int, tuple[int, int, int, int]]] = [{}]
    for _ in range(max_rounds):
        prev = labels[-1]
        veh: dict[int, tuple[int, int, int, int]] = {}
        for trip in tt.trips:
            evs = trip.events
            board = -1
            for i, e in enumerate(evs):
                if board >= 0:
                    s = ev_stop[e]
                    cur = veh.get(s)
                    if cur is None or arr[e] < cur[0]:
                        veh[s] = (arr[e], trip.id, board, i)
                elif i < len(evs) - 1:
                    s = ev_stop[e]
                    if prev[s] + buf[s] <= dep[e]:
                        board = i
        dk, pk = _dijkstra(g, {s: v[0] for s, v in veh.items()})
        cur = [a if a <= b else b for a, b in zip(prev, dk)]
        if cur[:n_stops] == prev[:n_stops]:
            break
        labels.append(cur)
        parents.append(pk)
        vehicle.append(veh)

    journeys = []
    best = INF
    for k, lab in enumerate(labels):
        if lab[q.target] < best:
            best = lab[q.target]
            journeys.append(Journey(int(best), k, _unpack(tt, g, labels, parents, vehicle, q, k)))
    return ParetoSet(tuple(journeys))


def _unpack(tt, g, labels, parents, vehicle, q: Query, k: int) -> tuple:
    legs = []
    v = q.target
    while True:
        while k > 0 and labels[k][v] == labels[k - 1][v]:
            k -= 1
        par = parents[k]
        if k == 0:
            path = [v]
            while path[-1] != q.source:
                path.append(par[path[-1]])
            leg = walk_leg(g, tuple(reversed(path)))
            if leg:
                legs.append(leg)
            break
        path = [v]
        while par[path[-1]] != _SEED:
            path.append(par[path[-1]])
        leg = walk_leg(g, tuple(reversed(path)))
        if leg:
            legs.append(leg)
        _, trip, board, alight = vehicle[k][path[-1]]
        legs.append(TripLeg(trip, board, alight))
        v = tt.events[tt.trips[trip].events[board]].stop
        k -= 1
    legs.reverse()
    return tuple(legs)

