"""Brute-force event-level shortcut computation for small networks.

For every boarding event ``e`` at stop ``s`` the builder runs two rounds of
vectorised trip scanning from ``(s, dep(e) - buffer(s))`` with full walking
(all-pairs stop distances over the transfer graph). A transfer ``a -> b`` is
kept when ``a`` lies on the trip of ``e`` after ``e``, ``b`` is catchable from
``a`` by walking to another stop, and the trip of ``b`` later reaches some stop
strictly earlier than any journey with fewer trips and no later than any
two-trip journey. Ties are kept, so the set errs on the large side.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra as sp_dijkstra

from ..delays import DelayScenario
from ..timetable import Timetable
from .model import EventShortcutSet

DEFAULT_SAMPLES = 8
DEFAULT_PAIR_LIMIT = 20_000_000
_ROW_BATCH = 64
_BIG = np.iinfo(np.int64).max // 4


class BudgetExceededError(RuntimeError):
    pass


def stop_distances(tt: Timetable) -> np.ndarray:
    """All-pairs shortest walking time between stops (``inf`` when unreachable)."""
    g = tt.transfer_graph
    edges = g.edges()
    nv = g.num_vertices
    if edges:
        u, v, w = (np.array(col, dtype=np.int64) for col in zip(*edges))
    else:
        u = v = w = np.zeros(0, dtype=np.int64)
    mat = csr_matrix((w.astype(float), (u, v)), shape=(nv, nv))
    n = tt.num_stops
    return sp_dijkstra(mat, directed=True, indices=np.arange(n))[:, :n]


def builder_scenarios(tt: Timetable, delta_max: int, samples: int = DEFAULT_SAMPLES,
                      seed: int = 0, extra=()) -> list[DelayScenario]:
    """Zero, worst case, ``samples`` uniform-per-trip draws, then ``extra``; duplicates removed."""
    out = [DelayScenario.zero(delta_max)]
    if delta_max > 0:
        out.append(DelayScenario.uniform(tt, delta_max))
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            draw = rng.integers(0, delta_max + 1, size=len(tt.trips)).tolist()
            out.append(DelayScenario.per_trip(tt, draw, delta_max))
    out.extend(extra)
    seen, uniq = set(), []
    for sc in out:
        key = tuple(sc.delays.items())
        if key not in seen:
            seen.add(key)
            uniq.append(sc)
    return uniq


@dataclass
class _Static:
    n: int
    stop: np.ndarray
    trip: np.ndarray
    idx: np.ndarray
    last: np.ndarray
    buf_ev: np.ndarray
    trip_start: np.ndarray       # first event of each trip (within this view)
    trip_len: np.ndarray
    by_stop: np.ndarray          # event positions sorted by stop
    stop_start: np.ndarray       # reduceat offsets into by_stop
    stop_present: np.ndarray     # stop id of each reduceat group
    Dint: np.ndarray             # int walking times, _BIG when unreachable


def _distance_matrix(D: np.ndarray) -> np.ndarray:
    return np.where(np.isfinite(D), D, _BIG).astype(np.int64)


def _view(tt: Timetable, Dint: np.ndarray, events: np.ndarray) -> _Static:
    """Static arrays restricted to ``events`` (whole trips, in id order)."""
    stop, trip, idx = tt.ev_stop[events], tt.ev_trip[events], tt.ev_index[events]
    new_trip = np.r_[True, trip[1:] != trip[:-1]] if len(trip) else np.zeros(0, bool)
    trip_start = np.flatnonzero(new_trip)
    trip_len = np.diff(np.r_[trip_start, len(events)])
    local_trip = np.cumsum(new_trip) - 1
    last = idx == trip_len[local_trip] - 1
    by_stop = np.argsort(stop, kind="stable")
    sorted_stops = stop[by_stop]
    first = np.r_[True, sorted_stops[1:] != sorted_stops[:-1]] if len(sorted_stops) else np.zeros(0, bool)
    stop_start = np.flatnonzero(first)
    return _Static(tt.num_stops, stop, local_trip, idx, last, tt.buffer[stop], trip_start, trip_len,
                   by_stop, stop_start, sorted_stops[stop_start], Dint)


def _per_stop_min(st: _Static, vals: np.ndarray) -> np.ndarray:
    """Row-wise minimum of per-event ``vals`` grouped by stop -> (rows, n)."""
    out = np.full((vals.shape[0], st.n), _BIG, dtype=np.int64)
    if len(st.stop_start):
        out[:, st.stop_present] = np.minimum.reduceat(vals[:, st.by_stop], st.stop_start, axis=1)
    return out


def _walk(st: _Static, at_stop: np.ndarray) -> np.ndarray:
    """Row-wise ``min_u at_stop[u] + D[u, v]``."""
    return np.min(at_stop[:, :, None] + st.Dint[None, :, :], axis=1)


def _scan(st: _Static, label: np.ndarray, dep: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One round: board each trip at its first feasible index, return (reached mask, earliest index)."""
    ok = (label[:, st.stop] + st.buf_ev <= dep[None, :]) & ~st.last[None, :]
    first = np.minimum.reduceat(np.where(ok, st.idx[None, :], _BIG), st.trip_start, axis=1)
    reached = st.idx[None, :] > first[:, st.trip]
    return reached, first


def _pairs_for_scenario(tt: Timetable, Dint: np.ndarray, sc: DelayScenario) -> np.ndarray:
    """Encoded ``a * |E| + b`` pairs needed under ``sc``."""
    ne = tt.num_events
    arr_all = tt.ev_arr.copy()
    dep_all = tt.ev_dep.copy()
    for e, (da, dd) in sc.delays.items():
        arr_all[e] += da
        dep_all[e] += dd
    trip_first = np.array([t.events[0] for t in tt.trips], dtype=np.int64)
    trip_len = np.array([len(t.events) for t in tt.trips], dtype=np.int64)
    # latest boardable departure per trip
    trip_latest = dep_all[trip_first + trip_len - 2]
    last_all = tt.ev_index == trip_len[tt.ev_trip] - 1
    sources = np.flatnonzero(~last_all)
    tau_all = dep_all[sources] - tt.buffer[tt.ev_stop[sources]]
    order = np.argsort(tau_all, kind="stable")
    sources, tau_all = sources[order], tau_all[order]
    found: list[np.ndarray] = []
    for lo in range(0, len(sources), _ROW_BATCH):
        src = sources[lo:lo + _ROW_BATCH]
        tau = tau_all[lo:lo + _ROW_BATCH]
        keep_trips = np.flatnonzero(trip_latest >= tau[0])
        events = np.concatenate([np.arange(trip_first[t], trip_first[t] + trip_len[t]) for t in keep_trips])
        st = _view(tt, Dint, events)
        arr, dep = arr_all[events], dep_all[events]
        pos = np.searchsorted(events, src)
        best0 = tau[:, None] + Dint[st.stop[pos]]
        reach1, _ = _scan(st, best0, dep)
        best1 = np.minimum(_walk(st, _per_stop_min(st, np.where(reach1, arr[None, :], _BIG))), best0)
        reach2, first2 = _scan(st, best1, dep)
        best2 = _walk(st, _per_stop_min(st, np.where(reach2, arr[None, :], _BIG)))
        ev_best2 = best2[:, st.stop]
        opt = reach2 & (arr[None, :] == ev_best2) & (ev_best2 < best1[:, st.stop])
        cmax = np.maximum.reduceat(np.where(opt, st.idx[None, :], -1), st.trip_start, axis=1)
        # candidate boarding events b per row: before an optimal alighting, not on the source trip
        cand = ((st.idx[None, :] < cmax[:, st.trip]) & (st.idx[None, :] >= first2[:, st.trip])
                & ~st.last[None, :] & (st.trip[None, :] != st.trip[pos][:, None]))
        rows, bpos = np.nonzero(cand)
        if not len(rows):
            continue
        b_stop, b_dep, b_buf = st.stop[bpos], dep[bpos], st.buf_ev[bpos]
        src_pos = pos[rows]
        remaining = st.trip_len[st.trip[src_pos]] - 1 - st.idx[src_pos]
        for k in range(1, int(remaining.max()) + 1):
            live = remaining >= k
            apos = src_pos + k
            a_stop = st.stop[np.where(live, apos, 0)]
            ok = live & (a_stop != b_stop)
            ok &= arr[np.where(live, apos, 0)] + Dint[a_stop, b_stop] + b_buf <= b_dep
            if ok.any():
                found.append(events[apos[ok]] * ne + events[bpos[ok]])
    if not found:
        return np.zeros(0, dtype=np.int64)
    return np.unique(np.concatenate(found))


def build_event_shortcuts(tt: Timetable, delta_max: int, samples: int = DEFAULT_SAMPLES, seed: int = 0,
                          scenarios=(), pair_limit: int = DEFAULT_PAIR_LIMIT) -> EventShortcutSet:
    """Enumerate needed transfers under the builder scenarios and annotate delay intervals.

    ``scenarios`` are added to the zero, worst-case and sampled scenarios.
    Each kept shortcut is feasible in the undelayed timetable at ``dmin``;
    pairs only ever needed at origin delays beyond their slack are dropped.
    """
    if delta_max < 0:
        raise ValueError("delta_max must be >= 0")
    Dint = _distance_matrix(stop_distances(tt))
    ne = tt.num_events
    stop_of, buf_of = tt.ev_stop, tt.buffer[tt.ev_stop]
    best_delay: dict[int, int] = {}
    total = 0
    base_arr, base_dep = tt.ev_arr, tt.ev_dep
    for sc in builder_scenarios(tt, delta_max, samples, seed, scenarios):
        pairs = _pairs_for_scenario(tt, Dint, sc)
        total += len(pairs)
        if total > pair_limit:
            raise BudgetExceededError(f"enumerated {total} pairs, limit is {pair_limit}")
        a, b = pairs // ne, pairs % ne
        da = np.array([sc.arr_delay(x) for x in a.tolist()], dtype=np.int64)
        slack = base_dep[b] - base_arr[a] - Dint[stop_of[a], stop_of[b]] - buf_of[b]
        keep = (da <= slack) & (da <= delta_max)
        for key, d in zip(pairs[keep].tolist(), da[keep].tolist()):
            old = best_delay.get(key)
            if old is None or d < old:
                best_delay[key] = d
    keys = np.array(sorted(best_delay), dtype=np.int64)
    a, b = keys // ne, keys % ne
    tt_ab = Dint[stop_of[a], stop_of[b]]
    dmin = np.array([best_delay[k] for k in keys.tolist()], dtype=np.int64)
    slack = base_dep[b] - base_arr[a] - tt_ab - buf_of[b]
    dmax = np.minimum(slack, delta_max)
    return EventShortcutSet(ne, delta_max, a, b, tt_ab, dmin, dmax)


def feasible_event_transfers(tt: Timetable, sc: DelayScenario | None = None,
                             delta_max: int = 0) -> EventShortcutSet:
    """Every walking transfer catchable under ``sc``: a complete set for testing engines.

    For each arrival event and each other walking-reachable stop, one shortcut
    to the earliest catchable event of every other trip at that stop.
    Intervals are set to ``[0, delta_max]``; only the ignore-annotations mode
    should read this set.
    """
    sc = sc or DelayScenario.zero()
    ne = tt.num_events
    st = _view(tt, _distance_matrix(stop_distances(tt)), np.arange(ne))
    arr = tt.ev_arr.copy()
    dep = tt.ev_dep.copy()
    for e, (da, dd) in sc.delays.items():
        arr[e] += da
        dep[e] += dd
    cand = np.flatnonzero(~st.last)
    src_l, dst_l = [], []
    for a in range(ne):
        if st.idx[a] == 0:
            continue
        b = cand[(st.stop[cand] != st.stop[a]) & (st.trip[cand] != st.trip[a])]
        ok = arr[a] + st.Dint[st.stop[a], st.stop[b]] + st.buf_ev[b] <= dep[b]
        b = b[ok]
        if not len(b):
            continue
        # earliest catchable index per (trip, stop)
        order = np.lexsort((st.idx[b], st.stop[b], st.trip[b]))
        b = b[order]
        key = st.trip[b] * st.n + st.stop[b]
        first = np.r_[True, key[1:] != key[:-1]]
        b = b[first]
        src_l.append(np.full(len(b), a, dtype=np.int64))
        dst_l.append(b)
    if not src_l:
        return EventShortcutSet(ne, delta_max)
    a = np.concatenate(src_l)
    b = np.concatenate(dst_l)
    tt_ab = st.Dint[st.stop[a], st.stop[b]]
    z = np.zeros(len(a), dtype=np.int64)
    return EventShortcutSet(ne, delta_max, a, b, tt_ab, z, z + delta_max)
