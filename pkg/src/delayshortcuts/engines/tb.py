"""Trip-based Pareto search over event-level shortcuts with delay activation.

Transfers between trips come only from the event shortcut set (walking to
another stop) and from boarding another trip at the same stop. Trips are
grouped into the scenario's FIFO lines: reaching a trip at some index also
marks every later trip of its line as reached there. With
``activation="use"`` inactive shortcuts are skipped; with ``"ignore"`` every
shortcut that is physically catchable under the delayed times is used.
"""
from __future__ import annotations

import bisect

from ..delays import DelayedTimetable
from ..shortcuts.model import EventShortcutSet
from ..timetable import TransferGraph
from .raptor import build_lines
from .common import INF, EngineConfig, Journey, ParetoSet, Query, TripLeg, WalkLeg, walk_leg, walk_path


def tb_query(dtt: DelayedTimetable, es: EventShortcutSet, q: Query, cfg: EngineConfig | None = None,
             g: TransferGraph | None = None) -> ParetoSet:
    cfg = cfg or EngineConfig("tb")
    tt = dtt.timetable
    g = g or tt.transfer_graph
    arr, dep, buf = dtt.arr, dtt.dep, dtt.buffer
    ev_stop = tt.ev_stop.tolist()
    ev_trip = tt.ev_trip.tolist()
    ev_idx = tt.ev_index.tolist()
    trip_events = [t.events for t in tt.trips]
    cached = dtt.cache.get("raptor_lines")
    if cached is None:
        cached = dtt.cache["raptor_lines"] = build_lines(dtt)
    lines, serving = cached
    line_of = dtt.cache.get("tb_line_of")
    if line_of is None:
        line_of = [(0, 0)] * len(trip_events)
        for li, line in enumerate(lines):
            for pos, t in enumerate(line.trips):
                line_of[t] = (li, pos)
        dtt.cache["tb_line_of"] = line_of
    use_active = cfg.activation == "use"
    active = es.active.tolist()
    sc_dst = es.dst.tolist()
    sc_tt = es.travel_time.tolist()

    fwd, fpar = g.distances_from(q.source)
    bwd, bpar = g.distances_from(q.target, reverse=True)
    reached = [len(evs) for evs in trip_events]
    target_best = q.dep_time + fwd[q.target]
    journeys = []
    if target_best < INF:
        leg = walk_leg(g, walk_path(fpar, q.source, q.target))
        journeys.append(Journey(int(target_best), 0, (leg,) if leg else ()))

    # segment: (trip, first index, end index, parent); parent is ("init", stop) or
    # (round, segment, alight index, walk) with walk = None for same-stop transfers
    rounds: list[list[tuple]] = []
    queue: list[tuple] = []

    def enqueue(t: int, i: int, parent) -> None:
        if i < reached[t]:
            queue.append((t, i, reached[t], parent))
            li, pos = line_of[t]
            for t2 in lines[li].trips[pos:]:
                if reached[t2] <= i:
                    break
                reached[t2] = i

    def board_at(s: int, time: int, parent) -> None:
        """Earliest catchable trip of every line serving ``s`` (not at its last stop)."""
        for li, i in serving[s]:
            line = lines[li]
            if i == len(line.stops) - 1:
                continue
            deps = line.deps[i]
            p = bisect.bisect_left(deps, time)
            if p < len(deps) and deps[p] < target_best:
                enqueue(line.trips[p], i, parent)

    for s in range(tt.num_stops):
        if fwd[s] < INF:
            board_at(s, q.dep_time + fwd[s] + buf[s], ("init", s))

    for k in range(1, cfg.max_rounds + 1):
        if not queue:
            break
        current, queue = queue, []
        rounds.append(current)
        found = None
        for si, (t, i, end, _) in enumerate(current):
            evs = trip_events[t]
            last = len(evs) - 1
            for j in range(i + 1, min(end, last) + 1):
                e = evs[j]
                a = arr[e]
                if a >= target_best:
                    break
                s = ev_stop[e]
                if a + bwd[s] < target_best:
                    target_best = a + bwd[s]
                    found = (si, j, s)
                for x in es.out(e):
                    if use_active and not active[x]:
                        continue
                    b = sc_dst[x]
                    if a + sc_tt[x] + buf[ev_stop[b]] <= dep[b]:
                        enqueue(ev_trip[b], ev_idx[b], (k - 1, si, j, (s, ev_stop[b], sc_tt[x])))
                board_at(s, a + buf[s], (k - 1, si, j, None))
        if found is not None:
            si, j, s = found
            legs = []
            leg = walk_leg(g, walk_path(bpar, s, q.target, reverse=True))
            if leg:
                legs.append(leg)
            _unpack(tt, g, fpar, q, rounds, k - 1, si, j, legs)
            legs.reverse()
            journeys.append(Journey(int(target_best), k, tuple(legs)))
    return ParetoSet(tuple(journeys))


def _unpack(tt, g, fpar, q, rounds, r, si, j, legs) -> None:
    while True:
        t, i, _, parent = rounds[r][si]
        legs.append(TripLeg(t, i, j))
        if parent[0] == "init":
            leg = walk_leg(g, walk_path(fpar, q.source, parent[1]))
            if leg:
                legs.append(leg)
            return
        r, si, j, walk = parent
        if walk is not None:
            u, v, w = walk
            legs.append(WalkLeg((u, v), w))
