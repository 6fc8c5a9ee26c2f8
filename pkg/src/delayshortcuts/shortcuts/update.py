"""Scenario updates: deactivation of invalid shortcuts and replacement search."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..delays import DelayedTimetable, DelayScenario
from ..timetable import Timetable
from .model import EventShortcutSet


@dataclass
class UpdateReport:
    removed_infeasible: int = 0
    removed_interval: int = 0
    replacements_added: int = 0
    reactivated: int = 0
    origins_invalidated: int = 0
    origins_without_replacement: int = 0
    active_after: int = 0
    invalidated: dict[int, list[int]] = field(default_factory=dict, repr=False)

    @property
    def removed(self) -> int:
        return self.removed_infeasible + self.removed_interval


def _delayed(tt: Timetable, sc: DelayScenario) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    arr, dep = tt.ev_arr.copy(), tt.ev_dep.copy()
    da = np.zeros(tt.num_events, dtype=np.int64)
    for e, (a, d) in sc.delays.items():
        arr[e] += a
        dep[e] += d
        da[e] = a
    return arr, dep, da


def update_basic(es: EventShortcutSet, sc: DelayScenario, tt: Timetable) -> UpdateReport:
    """Deactivate shortcuts that are (a) infeasible under ``sc`` or (b) outside their interval.

    A shortcut failing both tests is counted under (a).
    """
    arr, dep, da = _delayed(tt, sc)
    act = es.active.copy()
    buf = tt.buffer[tt.ev_stop[es.dst]]
    infeasible = act & (arr[es.src] + es.travel_time + buf > dep[es.dst])
    realised = da[es.src]
    outside = act & ~infeasible & ((realised < es.dmin) | (realised > es.dmax))
    off = infeasible | outside
    es.active[off] = False
    rep = UpdateReport(int(infeasible.sum()), int(outside.sum()))
    for i in np.flatnonzero(off).tolist():
        rep.invalidated.setdefault(int(es.src[i]), []).append(i)
    rep.origins_invalidated = len(rep.invalidated)
    rep.active_after = es.num_active
    return rep


def update_with_replacement(es: EventShortcutSet, sc: DelayScenario, tt: Timetable,
                            basic: UpdateReport | None = None) -> UpdateReport:
    """Basic update, then one replacement per (invalidated delayed origin, target stop).

    Only origins with a nonzero realised arrival delay are searched: an
    undelayed event receives no delay update, so the zero scenario adds
    nothing.
    Target stops are those of the origin's invalidated shortcuts that no
    active shortcut of the same origin still reaches. The new
    shortcut goes to the earliest event at the target that is catchable under
    the delayed times; an existing inactive shortcut to that event is
    reactivated instead of duplicated.
    """
    rep = basic if basic is not None else update_basic(es, sc, tt)
    dtt = DelayedTimetable(tt, sc)
    arr, dep, buf = dtt.arr, dtt.dep, dtt.buffer
    ev_stop, ev_trip = tt.ev_stop, tt.ev_trip
    g = tt.transfer_graph
    dist_cache: dict[int, list[float]] = {}
    new_src, new_dst, new_tt, new_d = [], [], [], []
    pending: set[tuple[int, int]] = set()
    for a in sorted(rep.invalidated):
        if not sc.arr_delay(a):
            continue
        u = int(ev_stop[a])
        if u not in dist_cache:
            dist_cache[u] = g.distances_from(u)[0]
        dist = dist_cache[u]
        covered = {int(ev_stop[es.dst[i]]) for i in es.out(a) if es.active[i]}
        targets = sorted({int(ev_stop[es.dst[i]]) for i in rep.invalidated[a]} - covered)
        got = 0
        for t in targets:
            if t == u or dist[t] == float("inf"):
                continue
            w = int(dist[t])
            b = dtt.earliest_departure(t, arr[a] + w + buf[t], exclude_trip=int(ev_trip[a]))
            if b is None:
                continue
            got += 1
            idx = es.find(a, b)
            if idx is not None:
                if not es.active[idx]:
                    es.active[idx] = True
                    rep.reactivated += 1
                continue
            if (a, b) in pending:
                continue
            pending.add((a, b))
            new_src.append(a)
            new_dst.append(b)
            new_tt.append(w)
            new_d.append(int(sc.arr_delay(a)))
        if targets and not got:
            rep.origins_without_replacement += 1
    es.extend(new_src, new_dst, new_tt, new_d, new_d, replacement=True)
    rep.replacements_added = len(new_src)
    rep.active_after = es.num_active
    return rep
