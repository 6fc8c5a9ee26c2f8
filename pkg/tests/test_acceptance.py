"""One test per acceptance criterion; each prints a single pass/fail line."""
import random
from collections import defaultdict

import pytest

from delayshortcuts.bench import (RunManifest, evaluate_accuracy, filter_affected, gen_queries, prepare_scenario,
                                  run_all, engine_spec)
from delayshortcuts.cli import cmd_bench
from delayshortcuts.delays import DelayedTimetable, DelayScenario, generate_incident_scenario
from delayshortcuts.engines import (BufferTimeError, EngineConfig, ParetoSet, Journey, Query, csa_query,
                                    extract_earliest_arrival, oracle_query, raptor_query, td_dijkstra_query)
from delayshortcuts.fixtures import adversarial, four_trips
from delayshortcuts.shortcuts import build_event_shortcuts, compression_stats, project
from delayshortcuts.synth import generate_network

NETWORK_SEEDS = list(range(101, 121))
QUERIES = 500
DELTA = 120
SAMPLES = 2


def _stops_for(seed):
    return 25 + (seed * 37) % 76          # 25..100


@pytest.fixture(scope="module")
def corpus():
    """20 synthetic networks, each with its built set and per-scenario engine results."""
    nets = []
    for seed in NETWORK_SEEDS:
        tt = generate_network(seed, n_stops=_stops_for(seed))
        es = build_event_shortcuts(tt, DELTA, samples=SAMPLES, seed=seed)
        scenarios = {
            "zero": DelayScenario.zero(DELTA),
            "worst": DelayScenario.uniform(tt, DELTA),
            "incident": generate_incident_scenario(tt, seed, delta_max=DELTA),
        }
        rng = random.Random(seed)
        queries = [Query(rng.randrange(tt.num_stops), rng.randrange(tt.num_stops),
                         rng.randrange(12 * 3600, 14 * 3600)) for _ in range(QUERIES)]
        runs = {}
        for name, sc in scenarios.items():
            ctx = prepare_scenario(tt, es, sc, replacement=True)
            g = tt.transfer_graph
            res = []
            for q in queries:
                o = oracle_query(ctx.dtt, g, q)
                res.append((o, csa_query(ctx.dtt, ctx.augmented, q),
                            raptor_query(ctx.dtt, ctx.augmented, q, EngineConfig("raptor", early_pruning=True)),
                            raptor_query(ctx.dtt, ctx.augmented, q, EngineConfig("raptor", early_pruning=False)),
                            td_dijkstra_query(ctx.dtt, g, q)))
            runs[name] = (ctx, res)
        nets.append((seed, tt, es, runs))
    return nets


def test_c01_oracle_equivalence(corpus, record_acceptance):
    bad = defaultdict(int)
    pairs = 0
    for seed, tt, es, runs in corpus:
        for name, (ctx, res) in runs.items():
            for o, c, rep, rne, _ in res:
                pairs += 1
                ea = extract_earliest_arrival(o)
                bad["csa"] += (c.arrival_time if c else None) != ea
                bad["raptor-ep"] += rep.points() != o.points()
                bad["raptor"] += rne.points() != o.points()
    total = sum(bad.values())
    sizes = sorted(_stops_for(s) for s in NETWORK_SEEDS)
    ok = record_acceptance(1, "oracle equivalence", total == 0,
                           f"{pairs} query-scenario pairs on {len(corpus)} networks ({sizes[0]}-{sizes[-1]} stops, "
                           f"seeds {NETWORK_SEEDS[0]}..{NETWORK_SEEDS[-1]}), mismatches {dict(bad)}, tolerance 0")
    assert ok


def _superset_violations(es, tt, active_only):
    ss = project(es, tt, active_only=active_only)
    bad = 0
    for x in range(len(es)):
        if active_only and not es.active[x]:
            continue
        w = ss.weight(int(tt.ev_stop[es.src[x]]), int(tt.ev_stop[es.dst[x]]))
        bad += w is None or w > es.travel_time[x]
    return bad


def _minimality_violations(es, tt, active_only):
    ss = project(es, tt, active_only=active_only)
    pre = {}
    for x in range(len(es)):
        if active_only and not es.active[x]:
            continue
        key = (int(tt.ev_stop[es.src[x]]), int(tt.ev_stop[es.dst[x]]))
        w = int(es.travel_time[x])
        pre[key] = min(pre.get(key, w), w)
    bad = sum(1 for u, v, w in ss.edges() if pre.get((u, v)) != w)
    return bad + len(set(pre) ^ {(u, v) for u, v, _ in ss.edges()})


def test_c02_superset_property(corpus, record_acceptance):
    checked = bad = 0
    for _, tt, es, runs in corpus:
        sets = [(es, False)] + [(ctx.shortcuts, True) for ctx, _ in runs.values()]
        for s, active in sets:
            checked += 1
            bad += _superset_violations(s, tt, active)
    ok = record_acceptance(2, "superset property", bad == 0, f"{checked} shortcut sets, violations {bad}")
    assert ok


def test_c03_projection_minimality(corpus, record_acceptance):
    checked = bad = 0
    for _, tt, es, runs in corpus:
        sets = [(es, False)] + [(ctx.shortcuts, True) for ctx, _ in runs.values()]
        for s, active in sets:
            checked += 1
            bad += _minimality_violations(s, tt, active)
    ok = record_acceptance(3, "projection minimality", bad == 0, f"{checked} stop sets, violations {bad}")
    assert ok


def test_c04_four_trips(record_acceptance):
    tt = four_trips()
    es = build_event_shortcuts(tt, 0)
    ss = project(es, tt)
    cs = compression_stats(es, ss)
    ok = record_acceptance(4, "four-trip fixture", (cs.event_count, cs.stop_count, cs.count_ratio) == (6, 2, 3.0),
                           f"event {cs.event_count}, stop {cs.stop_count}, ratio {cs.count_ratio}, expected 6/2/3")
    assert ok


def _fq(tt, es, sc, queries, names, replacement):
    ctx = prepare_scenario(tt, es, sc, replacement=replacement)
    ref = run_all(engine_spec("oracle"), ctx, queries)
    out = {}
    for name in names:
        spec = engine_spec(name, "use")
        out[name] = evaluate_accuracy(run_all(spec, ctx, queries), ref, queries, name,
                                      spec.single_criterion).failed_queries
    return out


def test_c05_error_mechanism(record_acceptance):
    tt, extra, query_sc = adversarial()
    es = build_event_shortcuts(tt, 300, samples=0, scenarios=extra)
    queries = [Query(0, 3, t) for t in range(0, 60, 5)]
    adv = _fq(tt, es, query_sc, queries, ["tb", "csa", "raptor", "raptor-ep"], replacement=False)
    fixture_ok = adv["tb"] >= 1 and adv["csa"] == adv["raptor"] == adv["raptor-ep"] == 0

    configs = []
    for seed in (201, 202, 203):
        net = generate_network(seed, n_stops=40)
        for delta in (0, 120):
            built = build_event_shortcuts(net, delta, samples=SAMPLES, seed=seed)
            sc = generate_incident_scenario(net, seed, delta_max=max(delta, 60))
            cand = gen_queries(net, seed, 400, (12 * 3600, 13 * 3600))
            aff = filter_affected(net, net.transfer_graph, sc, cand)
            off = _fq(net, built, sc, aff.queries, ["tb"], replacement=False)["tb"]
            on = _fq(net, built, sc, aff.queries, ["tb"], replacement=True)["tb"]
            configs.append((seed, delta, len(aff), off, on))
    mono_ok = all(on <= off for *_, off, on in configs)
    detail = (f"adversarial F.Q {adv}; tb F.Q without/with replacement per (seed, delta, affected): "
              + ", ".join(f"({s},{d},{n}):{a}/{b}" for s, d, n, a, b in configs))
    ok = record_acceptance(5, "error mechanism", fixture_ok and mono_ok, detail)
    assert ok


def test_c06_normalization(record_acceptance):
    ref = [ParetoSet((Journey(100, 1),)) for _ in range(1000)]
    eng = [ParetoSet() if i < 222 else ParetoSet((Journey(100, 1),)) for i in range(1000)]
    rep = evaluate_accuracy(eng, ref, [Query(0, 1, 0)] * 1000, "tb", all_total=5572)
    ok = record_acceptance(6, "normalization arithmetic", rep.failed_queries == 222 and rep.fq_pct_all == 3.98,
                           f"F.Q {rep.failed_queries} / {rep.all_total} -> {rep.fq_pct_all}%, expected 3.98%")
    assert ok


def test_c07_compression_trend(record_acceptance):
    totals = {0: [0, 0], 300: [0, 0]}
    rising = 0
    seeds = list(range(301, 311))
    for seed in seeds:
        tt = generate_network(seed, n_stops=40)
        ratios = []
        for delta in (0, 300):
            es = build_event_shortcuts(tt, delta, seed=seed)
            ss = project(es, tt)
            totals[delta][0] += len(es)
            totals[delta][1] += len(ss)
            ratios.append(len(es) / len(ss))
        rising += ratios[1] > ratios[0]
    (e0, s0), (e3, s3) = totals[0], totals[300]
    r0, r3 = e0 / s0, e3 / s3
    eg, sg = e3 / e0, s3 / s0
    ok = r3 > r0 and sg < eg
    detail = (f"family of {len(seeds)} networks (seeds {seeds[0]}..{seeds[-1]}, 40 stops): count ratio "
              f"{r0:.2f} -> {r3:.2f}, event growth {eg:.3f}x, stop growth {sg:.3f}x; "
              f"ratio rose on {rising}/{len(seeds)} single networks")
    ok = record_acceptance(7, "compression trend", ok, detail)
    assert ok


def test_c08_td_dijkstra_contract(corpus, record_acceptance):
    pairs = bad = 0
    for _, tt, _, runs in corpus:
        assert not tt.has_buffers()
        for ctx, res in runs.values():
            for o, _, _, _, td in res:
                pairs += 1
                bad += (td.arrival_time if td else None) != extract_earliest_arrival(o)
    refused = 0
    for seed in (401, 402, 403):
        tt = generate_network(seed, n_stops=30, buffers=True)
        assert tt.has_buffers()
        try:
            td_dijkstra_query(DelayedTimetable(tt), tt.transfer_graph, Query(0, 1, 12 * 3600))
        except BufferTimeError:
            refused += 1
    ok = record_acceptance(8, "td-dijkstra contract", pairs >= 10000 and bad == 0 and refused == 3,
                           f"{pairs} buffer-free pairs, mismatches {bad}; refused {refused}/3 buffered networks")
    assert ok


def test_c09_replacement_volume(corpus, record_acceptance):
    worst = 0.0
    total_added = total_active = 0
    for seed, tt, es, runs in corpus:
        for extra in range(3):
            sc = generate_incident_scenario(tt, seed * 10 + extra, delta_max=DELTA)
            ctx = prepare_scenario(tt, es, sc, replacement=True)
            rep = ctx.update
            frac = rep.replacements_added / max(1, rep.active_after)
            worst = max(worst, frac)
            total_added += rep.replacements_added
            total_active += rep.active_after
    ok = record_acceptance(9, "replacement volume", worst < 0.02,
                           f"worst {100 * worst:.3f}% of the active set, overall {total_added}/{total_active}, "
                           f"bound 2%, {3 * len(corpus)} incident scenarios")
    assert ok


def test_c10_determinism(tmp_path, record_acceptance):
    m = RunManifest(synth_seed=5, synth_stops=30, deltas=[0, 120], builder_samples=2, random_queries=60,
                    affected_queries=15, affected_candidates=300)
    path = tmp_path / "manifest.json"
    path.write_text(m.to_json(), encoding="utf-8")
    a = cmd_bench(str(path), tmp_path / "run1")
    b = cmd_bench(str(path), tmp_path / "run2")
    same = {k: a[k].read_bytes() == b[k].read_bytes() for k in ("accuracy", "stats")}
    ok = record_acceptance(10, "determinism", all(same.values()), f"byte-identical {same}")
    assert ok
