"""Time-dependent Dijkstra on a stop graph with per-hop connection lists.

Each (stop, next stop) pair keeps the connections between them sorted by
departure, with dominated ones removed (a later departure that does not
arrive strictly earlier). That makes every edge FIFO but ignores buffer
times, so networks with buffers are refused.
"""
from __future__ import annotations

import bisect
import heapq

from ..delays import DelayedTimetable
from ..timetable import TransferGraph
from .common import INF, Journey, Query, TripLeg, WalkLeg


class BufferTimeError(ValueError):
    """Raised for networks where dominated-connection filtering is unsound."""


def build_td_edges(dtt: DelayedTimetable) -> list[list[tuple[int, list[int], list[tuple[int, int, int]]]]]:
    """Per stop: ``(head, departures, [(arrival, trip, index)])`` with dominated entries dropped."""
    tt = dtt.timetable
    hops: dict[tuple[int, int], list[tuple[int, int, int, int]]] = {}
    for c in dtt.connections:
        hops.setdefault((c.dep_stop, c.arr_stop), []).append((c.dep_time, c.arr_time, c.trip, c.event_index))
    out: list[list] = [[] for _ in tt.stops]
    for (u, v), lst in sorted(hops.items()):
        lst.sort()
        kept: list[tuple[int, int, int, int]] = []
        for item in reversed(lst):
            # scanning from the latest departure, keep only strictly earlier arrivals
            if not kept or item[1] < kept[-1][1]:
                kept.append(item)
        kept.reverse()
        out[u].append((v, [x[0] for x in kept], [(x[1], x[2], x[3]) for x in kept]))
    return out


def td_dijkstra_query(dtt: DelayedTimetable, g: TransferGraph, q: Query) -> Journey | None:
    tt = dtt.timetable
    if tt.has_buffers():
        raise BufferTimeError("TD-Dijkstra refuses networks with nonzero buffer times")
    td = dtt.cache.get("td_edges")
    if td is None:
        td = dtt.cache["td_edges"] = build_td_edges(dtt)
    n_stops = tt.num_stops
    dist = [INF] * g.num_vertices
    parent: list = [None] * g.num_vertices
    dist[q.source] = q.dep_time
    heap = [(q.dep_time, q.source)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == q.target:
            break
        for w, v in g.out[u]:
            if d + w < dist[v]:
                dist[v], parent[v] = d + w, ("walk", u, w)
                heapq.heappush(heap, (d + w, v))
        if u < n_stops:
            for v, deps, conns in td[u]:
                p = bisect.bisect_left(deps, d)
                if p < len(deps):
                    a, trip, idx = conns[p]
                    if a < dist[v]:
                        dist[v], parent[v] = a, ("ride", u, trip, idx)
                        heapq.heappush(heap, (a, v))
    if dist[q.target] == INF:
        return None
    legs: list = []
    v = q.target
    while v != q.source:
        p = parent[v]
        if p[0] == "walk":
            _, u, w = p
            if legs and isinstance(legs[-1], WalkLeg):
                nxt = legs.pop()
                legs.append(WalkLeg((u,) + nxt.path, w + nxt.duration))
            else:
                legs.append(WalkLeg((u, v), w))
        else:
            _, u, trip, idx = p
            if legs and isinstance(legs[-1], TripLeg) and legs[-1].trip == trip and legs[-1].board == idx + 1:
                nxt = legs.pop()
                legs.append(TripLeg(trip, idx, nxt.alight))
            else:
                legs.append(TripLeg(trip, idx, idx + 1))
        v = u
    legs.reverse()
    return Journey(int(dist[q.target]), sum(isinstance(x, TripLeg) for x in legs), tuple(legs))
