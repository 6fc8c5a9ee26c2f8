import csv

import pytest

from delayshortcuts.bench import (AFFECTED_WINDOW, REPORT_COLUMNS, ReportRow, RunManifest, emit_report, engine_spec,
                                  evaluate_accuracy, filter_affected, gen_queries, missed_journeys, prepare_scenario,
                                  read_report_csv, run_all, run_benchmark)
from delayshortcuts.delays import DelayScenario, generate_incident_scenario
from delayshortcuts.engines import Journey, ParetoSet, Query
from delayshortcuts.shortcuts import build_event_shortcuts
from delayshortcuts.synth import generate_network


@pytest.fixture(scope="module")
def net():
    tt = generate_network(51, n_stops=40)
    es = build_event_shortcuts(tt, 120, samples=2, seed=51)
    sc = generate_incident_scenario(tt, 9, delta_max=120)
    return tt, es, sc


def test_gen_queries_deterministic_and_in_window(net):
    tt, _, _ = net
    a = gen_queries(tt, 3, 200, (13 * 3600, 14 * 3600))
    assert a.queries == gen_queries(tt, 3, 200, (13 * 3600, 14 * 3600)).queries
    assert a.queries != gen_queries(tt, 4, 200, (13 * 3600, 14 * 3600)).queries
    assert all(13 * 3600 <= q.dep_time < 14 * 3600 and q.source != q.target for q in a)
    assert len(gen_queries(tt, 3, 0)) == 0
    with pytest.raises(ValueError):
        gen_queries(tt, 3, 5, (0, 10 ** 6))


def test_filter_affected(net):
    tt, _, sc = net
    cand = gen_queries(tt, 1, 300, AFFECTED_WINDOW)
    assert len(filter_affected(tt, tt.transfer_graph, DelayScenario.zero(120), cand)) == 0
    aff = filter_affected(tt, tt.transfer_graph, sc, cand)
    assert 0 < len(aff) < len(cand) and aff.sampled == 300
    capped = filter_affected(tt, tt.transfer_graph, sc, cand, count=2)
    assert capped.queries == aff.queries[:2] and not capped.exhausted
    assert filter_affected(tt, tt.transfer_graph, sc, cand, count=10 ** 4).exhausted


def test_delayed_only_trip_makes_query_affected():
    from delayshortcuts.timetable import Stop, make_timetable
    tt = make_timetable([Stop(0, "a", 0), Stop(1, "b", 0)], [(0, 1)], [(0, [(0, 100, 100), (1, 200, 200)])], [])
    sc = DelayScenario.per_trip(tt, [30], delta_max=30)
    assert len(filter_affected(tt, tt.transfer_graph, sc, [Query(0, 1, 0)])) == 1


def test_missed_journeys_rules():
    ref = ParetoSet((Journey(100, 1), Journey(90, 2)))
    assert missed_journeys(ref, ref) == 0
    assert missed_journeys(ref, ParetoSet((Journey(100, 1),))) == 1
    assert missed_journeys(ref, ParetoSet((Journey(90, 1),))) == 0
    assert missed_journeys(ref, ParetoSet()) == 2
    # single-criterion results are judged on earliest arrival only
    assert missed_journeys(ref, ParetoSet((Journey(90, 5),)), single_criterion=True) == 0
    assert missed_journeys(ref, ParetoSet((Journey(95, 1),)), single_criterion=True) == 1


def test_accuracy_of_engines(net):
    tt, es, sc = net
    ctx = prepare_scenario(tt, es, sc)
    qs = filter_affected(tt, tt.transfer_graph, sc, gen_queries(tt, 2, 300, AFFECTED_WINDOW))
    oracle = run_all(engine_spec("oracle"), ctx, qs.queries)
    assert evaluate_accuracy(oracle, oracle, qs, "oracle").failed_queries == 0
    for name in ("csa", "raptor", "raptor-ep", "tb"):
        spec = engine_spec(name)
        rep = evaluate_accuracy(run_all(spec, ctx, qs.queries), oracle, qs, name, spec.single_criterion)
        if name != "tb":
            assert rep.failed_queries == 0, name
        assert rep.all_total == 300
        if rep.fq_pct_all is not None:
            assert rep.fq_pct_all <= rep.fq_pct_affected
    csa = evaluate_accuracy(run_all(engine_spec("csa"), ctx, qs.queries), oracle, qs, "csa", True)
    assert csa.failed_journeys is None and csa.row()["F.J"] is None


def test_percentages():
    ref = [ParetoSet((Journey(10, 1),))] * 4
    eng = [ParetoSet()] + ref[1:]
    rep = evaluate_accuracy(eng, ref, [Query(0, 1, 0)] * 4, "x", all_total=30)
    assert (rep.fq_pct_affected, rep.fq_pct_all) == (25.0, 3.33)
    empty = evaluate_accuracy([], [], [], "x")
    assert empty.fq_pct_affected is None


def test_run_benchmark(net):
    tt, es, sc = net
    ctx = prepare_scenario(tt, es, sc)
    qs = gen_queries(tt, 5, 40).queries
    specs = [engine_spec(n) for n in ("oracle", "csa", "raptor")]
    rep = run_benchmark(specs, qs, ctx, repetitions=2, warmup=5)
    assert len(rep) == 3
    assert rep.get("oracle").speedup == pytest.approx(1.0)
    assert all(r.ms_per_query > 0 for r in rep)
    assert rep.get("csa").ms_per_query < rep.get("oracle").ms_per_query
    one = run_benchmark([engine_spec("csa")], qs, ctx)
    assert len(one) == 1 and one.get("csa").speedup is None


def test_emit_report(tmp_path):
    c, md = emit_report([], tmp_path, "empty")
    assert c.read_text().strip() == ",".join(REPORT_COLUMNS)
    rows = [ReportRow("oracle", 2.5, 1.0, 0, 0, 0.0, 0.0), ReportRow("csa", 0.5, 5.0, 1, None, 3.98, 0.5)]
    c, md = emit_report(rows, tmp_path, "r")
    back = read_report_csv(c)
    assert [r.engine for r in back] == ["oracle", "csa"] and back[1].fj is None and back[1].pct_affected == 3.98
    header = md.read_text().splitlines()[0]
    assert header.count("|") == len(REPORT_COLUMNS) + 1
    with open(c, newline="") as fh:
        assert next(csv.reader(fh)) == list(REPORT_COLUMNS)


def test_manifest_toml_and_unknown_keys(tmp_path):
    p = tmp_path / "m.toml"
    p.write_text('synth_stops = 30\ndeltas = [0, 60]\nrandom_window = [3600, 7200]\n')
    m = RunManifest.load(p)
    assert m.synth_stops == 30 and m.deltas == [0, 60] and m.random_window == (3600, 7200)
    bad = tmp_path / "b.json"
    bad.write_text('{"nope": 1}')
    with pytest.raises(ValueError):
        RunManifest.load(bad)
