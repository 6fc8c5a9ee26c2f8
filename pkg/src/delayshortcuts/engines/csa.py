"""Connection scan over the shortcut-augmented transfer graph (earliest arrival only)."""
from __future__ import annotations

import bisect

from ..delays import DelayedTimetable
from ..timetable import TransferGraph
from .common import INF, Journey, Query, TripLeg, WalkLeg, walk_leg, walk_path


def csa_query(dtt: DelayedTimetable, g: TransferGraph, q: Query) -> Journey | None:
    """Earliest arrival at ``q.target``; ``None`` when unreachable.

    Initial and final walking use full Dijkstra searches over ``g``; between
    trips only single edges of ``g`` are relaxed.
    """
    tt = dtt.timetable
    n_stops = tt.num_stops
    buf = dtt.buffer
    conns = dtt.connections
    keys = dtt.cache.get("csa_keys")
    if keys is None:
        keys = dtt.cache["csa_keys"] = [c.dep_time for c in conns]
    fwd, fpar = g.distances_from(q.source)
    bwd, bpar = g.distances_from(q.target, reverse=True)

    label = [q.dep_time + d for d in fwd[:n_stops]]
    parent: list = [None] * n_stops
    best = q.dep_time + fwd[q.target]
    best_par = None
    boarded = [-1] * len(tt.trips)
    out = g.out
    for c in conns[bisect.bisect_left(keys, q.dep_time):]:
        if c.dep_time >= best:
            break
        t = c.trip
        board = boarded[t]
        if board < 0:
            if label[c.dep_stop] + buf[c.dep_stop] > c.dep_time:
                continue
            board = boarded[t] = c.event_index
        a, s = c.arr_time, c.arr_stop
        leg = (t, board, c.event_index + 1)
        if a + bwd[s] < best:
            best, best_par = a + bwd[s], (leg, s)
        if a < label[s]:
            label[s], parent[s] = a, ("trip", leg)
            for w, v in out[s]:
                if v < n_stops and a + w < label[v]:
                    label[v], parent[v] = a + w, ("walk", leg, s, w)
    if best == INF:
        return None
    legs = []
    if best_par is None:
        leg = walk_leg(g, walk_path(fpar, q.source, q.target))
        return Journey(int(best), 0, (leg,) if leg else ())
    (trip_leg, s) = best_par
    leg = walk_leg(g, walk_path(bpar, s, q.target, reverse=True))
    if leg:
        legs.append(leg)
    while True:
        t, b, _ = trip_leg
        legs.append(TripLeg(*trip_leg))
        s = tt.events[tt.trips[t].events[b]].stop
        p = parent[s]
        if p is None:
            leg = walk_leg(g, walk_path(fpar, q.source, s))
            if leg:
                legs.append(leg)
            break
        if p[0] == "walk":
            _, trip_leg, u, w = p
            legs.append(WalkLeg((u, s), w))
        else:
            trip_leg = p[1]
    legs.reverse()
    return Journey(int(best), sum(isinstance(x, TripLeg) for x in legs), tuple(legs))
