"""Query workloads, accuracy evaluation, timing and report emission."""
from __future__ import annotations

import csv
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .delays import DelayedTimetable, DelayScenario
from .engines import (BufferTimeError, EngineConfig, Journey, ParetoSet, Query, csa_query, oracle_query,
                      raptor_query, tb_query, td_dijkstra_query)
from .shortcuts import (EventShortcutSet, UpdateReport, merge_into_transfer_graph, project, update_basic,
                        update_with_replacement)
from .timetable import MAX_TIME, Timetable, TransferGraph

RANDOM_WINDOW = (13 * 3600, 14 * 3600)
AFFECTED_WINDOW = (12 * 3600, 13 * 3600)
REPORT_COLUMNS = ("engine", "ms/q", "speedup", "F.Q", "F.J", "%affected", "%all")
ACCURACY_COLUMNS = ("engine", "replacement", "F.Q", "F.J", "affected_total", "all_total",
                    "journeys_affected_total", "FQ_pct_affected", "FJ_pct_affected", "FQ_pct_all", "FJ_pct_all")
SINGLE_CRITERION = ("csa", "td")


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("TS_THREADS", "1")))
    except ValueError:
        return 1


# --- queries -----------------------------------------------------------------

@dataclass(frozen=True)
class QuerySet:
    queries: tuple[Query, ...]
    seed: int
    window: tuple[int, int]
    kind: str = "random"
    sampled: int = 0            # candidates drawn (affected sets only)
    exhausted: bool = False     # fewer affected queries found than requested

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)


def query_stream(tt: Timetable, seed: int, window: tuple[int, int]) -> Iterable[Query]:
    """Endless deterministic stream of (source, target, departure) with source != target."""
    lo, hi = window
    if not (0 <= lo < hi <= MAX_TIME):
        raise ValueError(f"window {window} outside the service day")
    n = tt.num_stops
    rng = np.random.default_rng(seed)
    while True:
        s = int(rng.integers(n))
        t = (s + 1 + int(rng.integers(n - 1))) % n if n > 1 else s
        yield Query(s, t, int(rng.integers(lo, hi)))


def gen_queries(tt: Timetable, seed: int, count: int, window: tuple[int, int] = RANDOM_WINDOW) -> QuerySet:
    stream = query_stream(tt, seed, window)
    return QuerySet(tuple(next(stream) for _ in range(count)), seed, tuple(window), "random", count)


def filter_affected(tt: Timetable, g: TransferGraph, sc: DelayScenario, qs: QuerySet | Iterable[Query],
                    count: int | None = None, max_rounds: int = 8) -> QuerySet:
    """Keep queries whose oracle Pareto set under ``sc`` differs from the undelayed one.

    Draws from ``qs`` in order until ``count`` are found or the input runs out.
    """
    cfg = EngineConfig("oracle", max_rounds)
    base = DelayedTimetable(tt)
    delayed = DelayedTimetable(tt, sc)
    kept, sampled = [], 0
    for q in qs:
        if count is not None and len(kept) >= count:
            break
        sampled += 1
        if oracle_query(delayed, g, q, cfg).points() != oracle_query(base, g, q, cfg).points():
            kept.append(q)
    seed = getattr(qs, "seed", -1)
    window = getattr(qs, "window", AFFECTED_WINDOW)
    exhausted = count is not None and len(kept) < count
    return QuerySet(tuple(kept), seed, tuple(window), "affected", sampled, exhausted)


# --- per-scenario preparation -----------------------------------------------

@dataclass
class ScenarioContext:
    """Everything the engines need for one scenario, prepared before any query."""
    tt: Timetable
    scenario: DelayScenario
    dtt: DelayedTimetable
    shortcuts: EventShortcutSet           # updated copy
    augmented: TransferGraph              # transfer graph plus active stop shortcuts
    tb_graph: TransferGraph               # transfer graph plus every event shortcut's stop pair
    update: UpdateReport
    update_seconds: float
    prepare_seconds: float


def prepare_scenario(tt: Timetable, es: EventShortcutSet, sc: DelayScenario, replacement: bool = True) -> ScenarioContext:
    t0 = time.perf_counter()
    upd = es.copy()
    rep = update_with_replacement(upd, sc, tt) if replacement else update_basic(upd, sc, tt)
    t1 = time.perf_counter()
    g = tt.transfer_graph
    augmented = merge_into_transfer_graph(project(upd, tt, active_only=True), g)
    tb_graph = merge_into_transfer_graph(project(upd, tt), g)
    dtt = DelayedTimetable(tt, sc)
    dtt.connections  # noqa: B018  (sorting cost belongs to preparation)
    t2 = time.perf_counter()
    return ScenarioContext(tt, sc, dtt, upd, augmented, tb_graph, rep, t1 - t0, t2 - t1)


@dataclass(frozen=True)
class EngineSpec:
    name: str
    cfg: EngineConfig

    @property
    def single_criterion(self) -> bool:
        return self.cfg.kind in SINGLE_CRITERION


def engine_spec(name: str, activation: str = "use", max_rounds: int = 8) -> EngineSpec:
    """Known names: oracle, csa, raptor, raptor-ep, tb, td."""
    table = {
        "oracle": EngineConfig("oracle", max_rounds),
        "csa": EngineConfig("csa", max_rounds),
        "raptor": EngineConfig("raptor", max_rounds, early_pruning=False),
        "raptor-ep": EngineConfig("raptor", max_rounds, early_pruning=True),
        "tb": EngineConfig("tb", max_rounds, activation=activation),
        "td": EngineConfig("td", max_rounds),
    }
    if name not in table:
        raise ValueError(f"unknown engine {name!r}; choose from {sorted(table)}")
    return EngineSpec(name, table[name])


def _as_pareto(j: Journey | None) -> ParetoSet:
    return ParetoSet((j,)) if j is not None else ParetoSet()


def run_engine(spec: EngineSpec, ctx: ScenarioContext, q: Query) -> ParetoSet:
    kind = spec.cfg.kind
    if kind == "oracle":
        return oracle_query(ctx.dtt, ctx.tt.transfer_graph, q, spec.cfg)
    if kind == "csa":
        return _as_pareto(csa_query(ctx.dtt, ctx.augmented, q))
    if kind == "raptor":
        return raptor_query(ctx.dtt, ctx.augmented, q, spec.cfg)
    if kind == "tb":
        return tb_query(ctx.dtt, ctx.shortcuts, q, spec.cfg)
    if kind == "td":
        return _as_pareto(td_dijkstra_query(ctx.dtt, ctx.tt.transfer_graph, q))
    raise ValueError(kind)


def run_all(spec: EngineSpec, ctx: ScenarioContext, qs: Sequence[Query]) -> list[ParetoSet]:
    """Results in query order; worker count from ``TS_THREADS`` does not change them."""
    workers = thread_count()
    if workers == 1:
        return [run_engine(spec, ctx, q) for q in qs]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(lambda q: run_engine(spec, ctx, q), qs))


# --- accuracy ----------------------------------------------------------------

def _pct(num: int, den: int) -> float | None:
    return round(100.0 * num / den, 2) if den else None


@dataclass(frozen=True)
class AccuracyReport:
    """F.J is None for single-criterion engines, which are scored on earliest arrival only."""
    engine: str
    failed_queries: int
    failed_journeys: int | None
    affected_total: int
    all_total: int
    journeys_affected_total: int
    replacement: bool = True

    def __post_init__(self):
        if self.failed_queries > self.affected_total:
            raise ValueError("F.Q cannot exceed the number of evaluated queries")
        if self.failed_journeys is not None and self.failed_journeys > self.journeys_affected_total:
            raise ValueError("F.J cannot exceed the number of reference journeys")

    @property
    def fq_pct_affected(self) -> float | None:
        return _pct(self.failed_queries, self.affected_total)

    @property
    def fj_pct_affected(self) -> float | None:
        return None if self.failed_journeys is None else _pct(self.failed_journeys, self.journeys_affected_total)

    @property
    def fq_pct_all(self) -> float | None:
        return _pct(self.failed_queries, self.all_total)

    @property
    def fj_pct_all(self) -> float | None:
        return None if self.failed_journeys is None else _pct(self.failed_journeys, self.all_total)

    def row(self) -> dict:
        return {"engine": self.engine, "replacement": "on" if self.replacement else "off",
                "F.Q": self.failed_queries, "F.J": self.failed_journeys,
                "affected_total": self.affected_total, "all_total": self.all_total,
                "journeys_affected_total": self.journeys_affected_total,
                "FQ_pct_affected": self.fq_pct_affected, "FJ_pct_affected": self.fj_pct_affected,
                "FQ_pct_all": self.fq_pct_all, "FJ_pct_all": self.fj_pct_all}


def missed_journeys(reference: ParetoSet, result: ParetoSet, single_criterion: bool = False) -> int:
    """Reference journeys with no result journey at least as good.

    For single-criterion engines only the earliest reference arrival counts
    and trips are ignored.
    """
    if single_criterion:
        if not len(reference):
            return 0
        best = min(j.arrival_time for j in reference)
        return 0 if any(j.arrival_time <= best for j in result) else 1
    return sum(1 for r in reference
               if not any(j.arrival_time <= r.arrival_time and j.num_trips <= r.num_trips for j in result))


def evaluate_accuracy(engine: Callable[[Query], ParetoSet] | Sequence[ParetoSet],
                      oracle: Callable[[Query], ParetoSet] | Sequence[ParetoSet],
                      qs: QuerySet | Sequence[Query], name: str = "engine", single_criterion: bool = False,
                      all_total: int | None = None, replacement: bool = True) -> AccuracyReport:
    """F.Q / F.J of ``engine`` against ``oracle`` over ``qs``.

    Either side may be a callable per query or precomputed results in query
    order. ``all_total`` defaults to the number of candidates sampled.
    """
    queries = list(qs)
    eng = engine if not callable(engine) else [engine(q) for q in queries]
    ref = oracle if not callable(oracle) else [oracle(q) for q in queries]
    fq = fj = jt = 0
    for r, e in zip(ref, eng):
        miss = missed_journeys(r, e, single_criterion)
        jt += len(r)
        fj += miss
        fq += 1 if miss else 0
    total = all_total if all_total is not None else max(getattr(qs, "sampled", 0), len(queries))
    return AccuracyReport(name, fq, None if single_criterion else fj, len(queries), total, jt, replacement)


# --- timing ------------------------------------------------------------------

@dataclass(frozen=True)
class TimingRow:
    engine: str
    ms_per_query: float               # mean over all repetitions
    median_ms: float                  # median of the per-repetition means
    speedup: float | None             # oracle mean / engine mean


@dataclass(frozen=True)
class TimingReport:
    rows: tuple[TimingRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def get(self, engine: str) -> TimingRow:
        for r in self.rows:
            if r.engine == engine:
                return r
        raise KeyError(engine)


def run_benchmark(engines: Sequence[EngineSpec], qs: Sequence[Query], ctx: ScenarioContext,
                  repetitions: int = 1, warmup: int = 10) -> TimingReport:
    """Single-threaded wall-clock timing; the first ``warmup`` queries are run once unmeasured.

    Speedups are relative to an ``oracle`` entry when one is in ``engines``.
    """
    queries = list(qs)
    rows: list[tuple[str, float, float]] = []
    for spec in engines:
        for q in queries[:warmup]:
            run_engine(spec, ctx, q)
        reps = []
        for _ in range(max(1, repetitions)):
            t0 = time.perf_counter()
            for q in queries:
                run_engine(spec, ctx, q)
            reps.append(1000.0 * (time.perf_counter() - t0) / max(1, len(queries)))
        rows.append((spec.name, float(np.mean(reps)), float(np.median(reps))))
    base = next((m for n, m, _ in rows if n == "oracle"), None)
    return TimingReport(tuple(TimingRow(n, m, med, (base / m if base is not None and m > 0 else None))
                              for n, m, med in rows))


# --- reports -----------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.2f}"
    return str(x)


@dataclass
class ReportRow:
    engine: str
    ms_per_query: float | None = None
    speedup: float | None = None
    fq: int | None = None
    fj: int | None = None
    pct_affected: float | None = None
    pct_all: float | None = None

    def cells(self) -> list[str]:
        ms = None if self.ms_per_query is None else round(self.ms_per_query, 3)
        return [self.engine, _fmt_ms(ms), _fmt(self.speedup), _fmt(self.fq), _fmt(self.fj),
                _fmt(self.pct_affected), _fmt(self.pct_all)]


def _fmt_ms(x) -> str:
    return "" if x is None else f"{x:.3f}"


def emit_report(rows: Sequence[ReportRow], out_dir, stem: str = "report") -> tuple[Path, Path]:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        csv_path, md_path = out / f"{stem}.csv", out / f"{stem}.md"
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(REPORT_COLUMNS)
            for r in rows:
                w.writerow(r.cells())
        lines = ["| " + " | ".join(REPORT_COLUMNS) + " |", "|" + "---|" * len(REPORT_COLUMNS)]
        lines += ["| " + " | ".join(r.cells()) + " |" for r in rows]
        md_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return csv_path, md_path


def read_report_csv(path) -> list[ReportRow]:
    def num(x, kind):
        return None if x == "" else kind(x)

    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(ReportRow(rec["engine"], num(rec["ms/q"], float), num(rec["speedup"], float),
                                  num(rec["F.Q"], int), num(rec["F.J"], int),
                                  num(rec["%affected"], float), num(rec["%all"], float)))
    return rows


def write_csv(path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    p = Path(path)
    with open(p, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(columns), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(v) if not isinstance(v, str) else v for k, v in r.items()})
    return p


def dataset_hash(dataset_dir) -> str:
    h = hashlib.sha256()
    for name in sorted(os.listdir(dataset_dir)):
        p = Path(dataset_dir) / name
        if p.is_file() and p.suffix == ".csv":
            h.update(name.encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@dataclass
class RunManifest:
    """Inputs of one benchmark run; written next to its outputs."""
    dataset: str | None = None           # directory with CSV files; generated when None
    synth_seed: int = 1
    synth_stops: int = 50
    synth_buffers: bool = False
    deltas: list[int] = field(default_factory=lambda: [0, 300])
    builder_samples: int = 8
    builder_seed: int = 0
    scenario_seed: int = 42
    scenario_window: tuple[int, int] = AFFECTED_WINDOW
    incident_max: int = 3600
    query_seed: int = 7
    random_queries: int = 200
    random_window: tuple[int, int] = RANDOM_WINDOW
    affected_queries: int = 50
    affected_candidates: int = 2000
    engines: list[str] = field(default_factory=lambda: ["oracle", "csa", "raptor", "raptor-ep", "tb", "td"])
    activation: str = "use"
    replacement: list[bool] = field(default_factory=lambda: [False, True])
    max_rounds: int = 8
    repetitions: int = 1

    @classmethod
    def load(cls, path) -> "RunManifest":
        p = Path(path)
        text = p.read_text(encoding="utf-8")
        if p.suffix == ".toml":
            try:
                import tomllib
            except ModuleNotFoundError:  # Python < 3.11
                import tomli as tomllib
            doc = tomllib.loads(text)
        else:
            doc = json.loads(text)
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        for key in ("scenario_window", "random_window"):
            if key in doc:
                doc[key] = tuple(doc[key])
        if doc.get("dataset"):
            d = Path(doc["dataset"])
            doc["dataset"] = str(d if d.is_absolute() else (p.parent / d))
        return cls(**doc)

    def to_json(self, **extra) -> str:
        doc = asdict(self)
        doc.update(extra)
        return json.dumps(doc, indent=1, sort_keys=True)


def run_bench(manifest: RunManifest, out_dir, log: Callable[[str], None] = lambda s: None) -> dict[str, Path]:
    """Full pipeline: network, shortcuts per Δ, scenario, queries, accuracy, timing, reports.

    ``accuracy.csv`` and ``stats.csv`` depend only on the manifest; timings
    go to ``timing.csv`` and the report tables.
    """
    from .delays import generate_incident_scenario
    from .shortcuts import build_event_shortcuts, compression_stats, timed_project
    from .synth import generate_network
    from .timetable import load_timetable, save_timetable

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    m = manifest
    if m.dataset:
        tt = load_timetable(m.dataset)
        data_dir = Path(m.dataset)
    else:
        tt = generate_network(m.synth_seed, n_stops=m.synth_stops, buffers=m.synth_buffers)
        data_dir = save_timetable(tt, out / "dataset")
    sc = generate_incident_scenario(tt, m.scenario_seed, delta_max=m.incident_max, window=m.scenario_window)
    sc.save(out / "scenario.json")
    g = tt.transfer_graph

    random_qs = gen_queries(tt, m.query_seed, m.random_queries, m.random_window)
    candidates = gen_queries(tt, m.query_seed + 1, m.affected_candidates, m.scenario_window)
    affected = filter_affected(tt, g, sc, candidates, m.affected_queries, m.max_rounds)
    log(f"affected queries: {len(affected)} of {affected.sampled} sampled"
        + (" (exhausted)" if affected.exhausted else ""))

    specs = []
    for name in m.engines:
        spec = engine_spec(name, m.activation, m.max_rounds)
        if spec.cfg.kind == "td" and tt.has_buffers():
            log("td skipped: network has buffer times")
            continue
        specs.append(spec)
    oracle_spec = engine_spec("oracle", max_rounds=m.max_rounds)
    base_ctx = prepare_scenario(tt, EventShortcutSet(tt.num_events, 0), sc, replacement=False)
    oracle_aff = run_all(oracle_spec, base_ctx, affected.queries)
    oracle_rand = run_all(oracle_spec, base_ctx, random_qs.queries)

    stats_rows, acc_rows, timing_rows, time_rows, report_rows = [], [], [], [], []
    for delta in m.deltas:
        es = build_event_shortcuts(tt, delta, samples=m.builder_samples, seed=m.builder_seed)
        ss, proj_s = timed_project(es, tt)
        cs = compression_stats(es, ss, proj_s)
        stats_rows.append({"delta": delta, "event_count": cs.event_count, "stop_count": cs.stop_count,
                           "count_ratio": cs.count_ratio, "event_bytes": cs.event_bytes,
                           "stop_bytes": cs.stop_bytes, "memory_ratio": cs.memory_ratio})
        time_rows.append({"delta": delta, "stage": "projection", "seconds": f"{proj_s:.6f}"})
        es.save(out / f"events_d{delta}.bin")
        ss.save(out / f"stops_d{delta}.bin")
        for repl in m.replacement:
            ctx = prepare_scenario(tt, es, sc, replacement=repl)
            tag = "on" if repl else "off"
            time_rows.append({"delta": delta, "stage": f"update_{tag}", "seconds": f"{ctx.update_seconds:.6f}"})
            stats_rows[-1].update({f"removed_{tag}": ctx.update.removed, f"replaced_{tag}":
                                   ctx.update.replacements_added + ctx.update.reactivated})
            timing = run_benchmark(specs, random_qs.queries, ctx, m.repetitions)
            for spec in specs:
                res_aff = run_all(spec, ctx, affected.queries)
                acc = evaluate_accuracy(res_aff, oracle_aff, affected, spec.name, spec.single_criterion,
                                        replacement=repl)
                res_rand = run_all(spec, ctx, random_qs.queries)
                acc_rand = evaluate_accuracy(res_rand, oracle_rand, random_qs, spec.name, spec.single_criterion,
                                             replacement=repl)
                acc_rows.append({"delta": delta, "queries": "affected", **acc.row()})
                acc_rows.append({"delta": delta, "queries": "random", **acc_rand.row()})
                t = timing.get(spec.name)
                timing_rows.append({"delta": delta, "replacement": tag, "engine": spec.name,
                                    "ms_per_query": f"{t.ms_per_query:.4f}", "median_ms": f"{t.median_ms:.4f}",
                                    "speedup": t.speedup})
                report_rows.append((delta, tag, ReportRow(spec.name, t.ms_per_query, t.speedup, acc.failed_queries,
                                                         acc.failed_journeys, acc.fq_pct_affected, acc.fq_pct_all)))
            log(f"delta={delta} replacement={tag}: " + ", ".join(
                f"{r.engine} F.Q={r.fq}" for d, tg, r in report_rows if d == delta and tg == tag))

    stats_cols = ["delta", "event_count", "stop_count", "count_ratio", "event_bytes", "stop_bytes", "memory_ratio"]
    for repl in m.replacement:
        tag = "on" if repl else "off"
        stats_cols += [f"removed_{tag}", f"replaced_{tag}"]
    paths = {
        "stats": write_csv(out / "stats.csv", stats_cols, stats_rows),
        "accuracy": write_csv(out / "accuracy.csv", ("delta", "queries") + ACCURACY_COLUMNS, acc_rows),
        "timing": write_csv(out / "timing.csv", ("delta", "replacement", "engine", "ms_per_query", "median_ms", "speedup"),
                            timing_rows),
        "stage_times": write_csv(out / "stage_times.csv", ("delta", "stage", "seconds"), time_rows),
    }
    for delta in m.deltas:
        for repl in m.replacement:
            tag = "on" if repl else "off"
            rows = [r for d, tg, r in report_rows if d == delta and tg == tag]
            c, md = emit_report(rows, out, f"report_d{delta}_repl-{tag}")
            paths[f"report_d{delta}_{tag}"] = c
    (out / "run_manifest.json").write_text(
        manifest.to_json(dataset_sha256=dataset_hash(data_dir), affected_sampled=affected.sampled,
                         affected_found=len(affected)) + "\n", encoding="utf-8")
    paths["manifest"] = out / "run_manifest.json"
    return paths


__all__ = [
    "AccuracyReport", "BufferTimeError", "EngineSpec", "QuerySet", "ReportRow", "RunManifest", "ScenarioContext",
    "TimingReport", "TimingRow", "dataset_hash", "emit_report", "engine_spec", "evaluate_accuracy", "filter_affected",
    "gen_queries", "missed_journeys", "prepare_scenario", "query_stream", "read_report_csv", "run_all",
    "run_bench", "run_benchmark", "write_csv",
]
