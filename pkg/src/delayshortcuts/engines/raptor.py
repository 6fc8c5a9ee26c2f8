"""Round-based Pareto search over the shortcut-augmented transfer graph.

Delays can make trips of one route overtake each other, so per scenario the
routes are split into lines: groups of trips that never overtake. Scanning a
line can then switch to an earlier trip whenever the label allows.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass

from ..delays import DelayedTimetable
from ..timetable import TransferGraph
from .common import INF, EngineConfig, Journey, ParetoSet, Query, TripLeg, WalkLeg, walk_leg, walk_path


@dataclass
class Line:
    stops: tuple[int, ...]
    trips: list[int]              # ordered, componentwise non-decreasing times
    deps: list[list[int]]         # deps[i][k]: delayed departure of trips[k] at stop index i


def build_lines(dtt: DelayedTimetable) -> tuple[list[Line], list[list[tuple[int, int]]]]:
    """FIFO lines for the scenario and, per stop, the (line, stop index) pairs serving it."""
    tt = dtt.timetable
    arr, dep = dtt.arr, dtt.dep
    lines: list[Line] = []
    for route in tt.routes:
        order = sorted(route.trips, key=lambda t: (dep[tt.trips[t].events[0]], t))
        groups: list[list[int]] = []
        for t in order:
            evs = tt.trips[t].events
            for grp in groups:
                prev = tt.trips[grp[-1]].events
                if all(arr[p] <= arr[e] and dep[p] <= dep[e] for p, e in zip(prev, evs)):
                    grp.append(t)
                    break
            else:
                groups.append([t])
        for grp in groups:
            n = len(route.stop_sequence)
            deps = [[dep[tt.trips[t].events[i]] for t in grp] for i in range(n)]
            lines.append(Line(route.stop_sequence, grp, deps))
    serving: list[list[tuple[int, int]]] = [[] for _ in tt.stops]
    for li, line in enumerate(lines):
        for i, s in enumerate(line.stops):
            serving[s].append((li, i))
    return lines, serving


def raptor_query(dtt: DelayedTimetable, g: TransferGraph, q: Query, cfg: EngineConfig | None = None) -> ParetoSet:
    cfg = cfg or EngineConfig("raptor")
    tt = dtt.timetable
    cached = dtt.cache.get("raptor_lines")
    if cached is None:
        cached = dtt.cache["raptor_lines"] = build_lines(dtt)
    lines, serving = cached
    n_stops = tt.num_stops
    arr, buf = dtt.arr, dtt.buffer
    trip_events = [t.events for t in tt.trips]
    early = cfg.early_pruning

    fwd, fpar = g.distances_from(q.source)
    bwd, bpar = g.distances_from(q.target, reverse=True)
    prev = [q.dep_time + d for d in fwd[:n_stops]]
    best = list(prev)
    target_best = q.dep_time + fwd[q.target]
    journeys_at: list[tuple[int, tuple]] = []   # (round, target parent)
    if target_best < INF:
        journeys_at.append((0, None))
    round_parent: list[dict[int, tuple]] = [{}]
    round_vehicle: list[dict[int, tuple]] = [{}]
    marked = {s for s in range(n_stops) if prev[s] < INF}

    for k in range(1, cfg.max_rounds + 1):
        if not marked:
            break
        queue: dict[int, int] = {}
        for s in marked:
            for li, i in serving[s]:
                if queue.get(li, i + 1) > i:
                    queue[li] = i
        cur = list(prev)
        par: dict[int, tuple] = {}
        veh: dict[int, tuple] = {}
        improved: dict[int, int] = {}
        round_target = None
        for li in sorted(queue):
            line = lines[li]
            pos = -1
            board = -1
            n = len(line.stops)
            for i in range(queue[li], n):
                s = line.stops[i]
                if pos >= 0:
                    t = line.trips[pos]
                    a = arr[trip_events[t][i]]
                    if a < best[s] and a < target_best:
                        leg = (t, board, i)
                        cur[s] = best[s] = a
                        par[s] = veh[s] = ("trip", leg)
                        improved[s] = a
                        if a + bwd[s] < target_best:
                            target_best = a + bwd[s]
                            round_target = (leg, s)
                if i < n - 1 and prev[s] < INF:
                    need = prev[s] + buf[s]
                    p = bisect.bisect_left(line.deps[i], need)
                    if p < len(line.trips) and (pos < 0 or p < pos):
                        pos, board = p, i
        marked = set(improved)
        out = g.out
        for s in sorted(improved):
            a = improved[s]
            for w, v in out[s]:
                na = a + w
                if early and na >= target_best:
                    break
                if v < n_stops and na < best[v] and na < target_best:
                    cur[v] = best[v] = na
                    par[v] = ("walk", s, w)
                    marked.add(v)
        if round_target is not None:
            journeys_at.append((k, round_target))
        round_parent.append(par)
        round_vehicle.append(veh)
        prev = cur

    journeys = []
    for k, tp in journeys_at:
        if tp is None:
            leg = walk_leg(g, walk_path(fpar, q.source, q.target))
            journeys.append(Journey(int(q.dep_time + fwd[q.target]), 0, (leg,) if leg else ()))
            continue
        trip_leg, s = tp
        legs = []
        leg = walk_leg(g, walk_path(bpar, s, q.target, reverse=True))
        if leg:
            legs.append(leg)
        _unpack(tt, g, fpar, q, round_parent, round_vehicle, k, trip_leg, legs)
        legs.reverse()
        t, _, alight = trip_leg
        a = arr[trip_events[t][alight]]
        journeys.append(Journey(int(a + bwd[s]), sum(isinstance(x, TripLeg) for x in legs), tuple(legs)))
    return ParetoSet(tuple(journeys))


def _unpack(tt, g, fpar, q, round_parent, round_vehicle, k, trip_leg, legs) -> None:
    """Append legs backwards, starting from a trip leg taken in round ``k``."""
    while True:
        legs.append(TripLeg(*trip_leg))
        t, b, _ = trip_leg
        s = tt.events[tt.trips[t].events[b]].stop
        k -= 1
        j = k
        while j > 0 and s not in round_parent[j]:
            j -= 1
        if j == 0:
            leg = walk_leg(g, walk_path(fpar, q.source, s))
            if leg:
                legs.append(leg)
            return
        p = round_parent[j][s]
        if p[0] == "walk":
            _, u, w = p
            legs.append(WalkLeg((u, s), w))
            trip_leg = round_vehicle[j][u][1]
        else:
            trip_leg = p[1]
        k = j
