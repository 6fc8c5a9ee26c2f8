import numpy as np
from hypothesis import given, settings, strategies as st

from delayshortcuts.bench import AccuracyReport, evaluate_accuracy
from delayshortcuts.delays import DelayedTimetable, DelayScenario, generate_incident_scenario
from delayshortcuts.engines import EngineConfig, Journey, ParetoSet, Query, oracle_query, raptor_query
from delayshortcuts.shortcuts import build_event_shortcuts, merge_into_transfer_graph, project, update_basic
from delayshortcuts.synth import generate_network

SLOW = settings(max_examples=15, deadline=None)

networks = st.builds(lambda seed, n: generate_network(seed, n_stops=n, service=(11 * 3600, 15 * 3600)),
                     st.integers(0, 10_000), st.integers(10, 24))


@SLOW
@given(networks, st.sampled_from([0, 60, 180]), st.integers(0, 100))
def test_projection_superset_and_minimal(tt, delta, seed):
    es = build_event_shortcuts(tt, delta, samples=2, seed=seed)
    ss = project(es, tt)
    best = {}
    for a, b, w in zip(es.src.tolist(), es.dst.tolist(), es.travel_time.tolist()):
        key = (tt.events[a].stop, tt.events[b].stop)
        assert ss.weight(*key) is not None and ss.weight(*key) <= w
        best[key] = min(best.get(key, w), w)
    assert {(u, v): w for u, v, w in ss.edges()} == best


@SLOW
@given(networks, st.integers(0, 100))
def test_projection_and_merge_idempotent(tt, seed):
    es = build_event_shortcuts(tt, 60, samples=1, seed=seed)
    ss = project(es, tt)
    assert project(es, tt) == ss
    g1 = merge_into_transfer_graph(ss, tt.transfer_graph)
    assert merge_into_transfer_graph(ss, g1) == g1


@SLOW
@given(networks, st.integers(0, 10_000), st.sampled_from([60, 300, 3600]))
def test_delayed_timetable_monotone(tt, seed, cap):
    sc = generate_incident_scenario(tt, seed, delta_max=cap)
    dtt = DelayedTimetable(tt, sc)
    assert dtt.is_monotone()
    assert np.all(dtt.arr_np >= tt.ev_arr) and np.all(dtt.dep_np >= tt.ev_dep)
    assert all(0 <= a <= cap and 0 <= d <= cap for a, d in sc.delays.values())


@SLOW
@given(networks, st.integers(0, 10_000))
def test_active_shortcuts_valid_after_update(tt, seed):
    es = build_event_shortcuts(tt, 120, samples=1, seed=seed)
    sc = generate_incident_scenario(tt, seed, delta_max=120)
    update_basic(es, sc, tt)
    dtt = DelayedTimetable(tt, sc)
    for i in np.flatnonzero(es.active).tolist():
        a, b = int(es.src[i]), int(es.dst[i])
        assert es.dmin[i] <= sc.arr_delay(a) <= es.dmax[i]
        assert dtt.arr[a] + es.travel_time[i] + dtt.buffer[tt.events[b].stop] <= dtt.dep[b]


@SLOW
@given(networks, st.integers(0, 10_000), st.lists(st.tuples(st.integers(0, 99), st.integers(0, 99),
                                                           st.integers(11 * 3600, 14 * 3600)), min_size=1,
                                                 max_size=15))
def test_pareto_sets_valid_and_raptor_agrees(tt, seed, raw):
    sc = generate_incident_scenario(tt, seed, delta_max=300, window=(11 * 3600, 13 * 3600))
    dtt = DelayedTimetable(tt, sc)
    n = tt.num_stops
    for s, t, dep in raw:
        q = Query(s % n, t % n, dep)
        o = oracle_query(dtt, tt.transfer_graph, q)
        pts = o.points()
        assert all(x[0] > y[0] and x[1] < y[1] for x, y in zip(pts, pts[1:]))
        assert all(arr >= dep for arr, _ in pts)
        r = raptor_query(dtt, tt.transfer_graph, q, EngineConfig("raptor"))
        assert r.points() == pts


@given(st.lists(st.lists(st.tuples(st.integers(0, 500), st.integers(0, 5)), max_size=4), max_size=30),
       st.integers(0, 1000))
def test_accuracy_self_zero_and_denominator_monotone(raw, extra):
    sets = []
    for pts in raw:
        front, best = [], None
        for arr, k in sorted(set(pts), key=lambda x: (x[1], x[0])):
            if best is None or arr < best:
                front.append(Journey(arr, k))
                best = arr
        sets.append(ParetoSet(tuple(front)))
    qs = [Query(0, 1, 0)] * len(sets)
    self_rep = evaluate_accuracy(sets, sets, qs, "oracle")
    assert self_rep.failed_queries == self_rep.failed_journeys == 0
    empty = [ParetoSet()] * len(sets)
    rep = evaluate_accuracy(empty, sets, qs, "x", all_total=len(sets) + extra)
    assert rep.failed_queries <= rep.affected_total
    assert rep.failed_journeys <= rep.journeys_affected_total
    if rep.fq_pct_all is not None and rep.fq_pct_affected is not None:
        assert rep.fq_pct_all <= rep.fq_pct_affected
    assert isinstance(rep, AccuracyReport)


def test_zero_scenario_is_identity():
    tt = generate_network(1, n_stops=20)
    dtt = DelayedTimetable(tt, DelayScenario.zero())
    assert dtt.arr == tt.ev_arr.tolist() and dtt.dep == tt.ev_dep.tolist()
