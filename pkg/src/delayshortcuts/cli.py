"""Command-line front end: gen-synth, gen-delays, build, update, query, bench, verify."""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__

log = logging.getLogger("delayshortcuts")

EVENTS_FILE = "events.bin"
STOPS_FILE = "stops.bin"


class CliError(Exception):
    def __init__(self, msg: str, code: int = 1):
        super().__init__(msg)
        self.code = code


def parse_time(text: str) -> int:
    """Seconds, ``HH:MM`` or ``HH:MM:SS``."""
    parts = text.strip().split(":")
    try:
        nums = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad time {text!r}") from None
    if len(nums) == 1:
        return nums[0]
    if len(nums) in (2, 3):
        return nums[0] * 3600 + nums[1] * 60 + (nums[2] if len(nums) == 3 else 0)
    raise argparse.ArgumentTypeError(f"bad time {text!r}")


def parse_window(text: str) -> tuple[int, int]:
    if ".." not in text:
        raise argparse.ArgumentTypeError(f"window must look like start..end, got {text!r}")
    a, b = text.split("..", 1)
    lo, hi = parse_time(a), parse_time(b)
    if lo >= hi:
        raise argparse.ArgumentTypeError(f"empty window {text!r}")
    return lo, hi


def on_off(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def file_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, command: str, args: argparse.Namespace, inputs: dict[str, str], **extra) -> Path:
    """Echo every argument plus content hashes of the inputs."""
    params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in vars(args).items()
              if k not in ("func",) and not callable(v)}
    params = {k: (str(v) if isinstance(v, Path) else v) for k, v in params.items()}
    doc = {"command": command, "version": __version__, "args": params, "inputs": inputs, **extra}
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"manifest-{command}.json"
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _load_dataset(path):
    from .bench import dataset_hash
    from .timetable import load_timetable

    p = Path(path)
    if not p.is_dir():
        raise CliError(f"dataset not found: {p}", 2)
    return load_timetable(p), dataset_hash(p)


def _load_shortcuts(path, delta: int | None):
    from .shortcuts import EventShortcutSet

    p = Path(path)
    f = p / EVENTS_FILE if p.is_dir() else p
    if not f.is_file():
        raise CliError(f"shortcut file not found: {f}", 2)
    es = EventShortcutSet.load(f)
    if delta is not None and es.delta_max != delta:
        raise CliError(f"{f} was built for delta={es.delta_max}, not {delta}")
    return es, f


def _load_scenario(path, tt, delta: int | None = None):
    from .delays import DelayScenario, load_scenario

    if path is None:
        return DelayScenario.zero(delta or 0), None
    p = Path(path)
    if not p.is_file():
        raise CliError(f"scenario not found: {p}", 2)
    return load_scenario(p, tt), p


# --- commands ----------------------------------------------------------------

def cmd_gen_synth(args) -> int:
    from .synth import generate_network
    from .timetable import save_timetable

    over = {"n_stops": args.stops}
    if args.routes is not None:
        if args.routes < 2:
            raise CliError("--routes must be at least 2")
        over["n_lines"] = (args.routes + 1) // 2
    if args.trips_per_route is not None:
        over["trips_per_route"] = args.trips_per_route
    if args.buffer is not None:
        over["buffer_time"] = args.buffer
    if args.random_buffers:
        over["buffers"] = True
    if args.walk_radius is not None:
        over["walk_radius"] = args.walk_radius
    try:
        tt = generate_network(args.seed, **over)
    except ValueError as exc:
        raise CliError(f"invalid parameters: {exc}") from exc
    out = save_timetable(tt, args.out)
    write_manifest(out, "gen-synth", args, {})
    print(f"wrote {out}: {tt.num_stops} stops, {len(tt.routes)} routes, {len(tt.trips)} trips, "
          f"{tt.num_events} events")
    return 0


def cmd_gen_delays(args) -> int:
    from .delays import DEFAULT_WINDOW, generate_incident_scenario

    tt, dhash = _load_dataset(args.dataset)
    window = args.window or DEFAULT_WINDOW
    sc = generate_incident_scenario(tt, args.seed, delta_max=args.delta, window=window)
    out = Path(args.out)
    (out.parent if out.suffix == ".json" else out).mkdir(parents=True, exist_ok=True)
    path = sc.save(out if out.suffix == ".json" else out / "scenario.json")
    write_manifest(path.parent, "gen-delays", args, {"dataset": dhash})
    print(f"wrote {path}: {len(sc.incidents)} incidents")
    return 0


def cmd_build(args) -> int:
    from .bench import write_csv
    from .shortcuts import build_event_shortcuts, compression_stats, timed_project

    tt, dhash = _load_dataset(args.dataset)
    es = build_event_shortcuts(tt, args.delta, samples=args.samples, seed=args.seed)
    ss, proj_s = timed_project(es, tt)
    cs = compression_stats(es, ss, proj_s)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    es.save(out / EVENTS_FILE)
    ss.save(out / STOPS_FILE)
    write_csv(out / "stats.csv", ("delta", "event_count", "stop_count", "count_ratio", "event_bytes",
                                  "stop_bytes", "memory_ratio"),
              [{"delta": args.delta, "event_count": cs.event_count, "stop_count": cs.stop_count,
                "count_ratio": cs.count_ratio, "event_bytes": cs.event_bytes, "stop_bytes": cs.stop_bytes,
                "memory_ratio": cs.memory_ratio}])
    write_manifest(out, "build", args, {"dataset": dhash}, projection_seconds=round(proj_s, 6))
    ratio = "n/a" if cs.count_ratio is None else f"{cs.count_ratio:.2f}"
    print(f"event shortcuts {cs.event_count}, stop shortcuts {cs.stop_count}, ratio {ratio}, "
          f"projection {proj_s * 1000:.1f} ms")
    return 0


def cmd_update(args) -> int:
    from .shortcuts import project, update_basic, update_with_replacement

    tt, dhash = _load_dataset(args.dataset)
    es, es_path = _load_shortcuts(args.shortcuts, args.delta)
    sc, sc_path = _load_scenario(args.scenario, tt, es.delta_max)
    rep = update_with_replacement(es, sc, tt) if args.replacement else update_basic(es, sc, tt)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    es.save(out / EVENTS_FILE)
    project(es, tt, active_only=True).save(out / STOPS_FILE)
    summary = {k: v for k, v in vars(rep).items() if k != "invalidated"}
    (out / "update.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    inputs = {"dataset": dhash, "shortcuts": file_hash(es_path)}
    if sc_path is not None:
        inputs["scenario"] = file_hash(sc_path)
    write_manifest(out, "update", args, inputs)
    print(" ".join(f"{k}={v}" for k, v in summary.items()))
    return 0


def _format_journey(tt, j) -> str:
    from .engines import TripLeg

    parts = []
    for leg in j.legs:
        if isinstance(leg, TripLeg):
            trip = tt.trips[leg.trip]
            a = tt.events[trip.events[leg.board]].stop
            b = tt.events[trip.events[leg.alight]].stop
            parts.append(f"trip {trip.name or leg.trip} {tt.stops[a].id}->{tt.stops[b].id}")
        else:
            parts.append(f"walk {leg.duration}s")
    return f"arrival {_clock(j.arrival_time)} trips {j.num_trips}: " + (", ".join(parts) or "stay")


def _clock(t: int) -> str:
    return f"{t // 3600:02d}:{t // 60 % 60:02d}:{t % 60:02d}"


def cmd_query(args) -> int:
    from .bench import engine_spec, prepare_scenario, run_engine
    from .engines import BufferTimeError, Query
    from .shortcuts import EventShortcutSet

    tt, _ = _load_dataset(args.dataset)
    if args.shortcuts:
        es, _ = _load_shortcuts(args.shortcuts, args.delta)
    else:
        es = EventShortcutSet(tt.num_events, args.delta or 0)
    sc, _ = _load_scenario(args.scenario, tt, es.delta_max)
    ids = {s.id: i for i, s in enumerate(tt.stops)}
    try:
        src, dst = ids.get(args.source, None), ids.get(args.target, None)
        if src is None:
            src = int(args.source)
        if dst is None:
            dst = int(args.target)
    except ValueError:
        raise CliError(f"unknown stop {args.source!r} or {args.target!r}") from None
    if not (0 <= src < tt.num_stops and 0 <= dst < tt.num_stops):
        raise CliError("stop index out of range")
    ctx = prepare_scenario(tt, es, sc, replacement=args.replacement)
    q = Query(src, dst, args.time)
    for name in args.engines:
        spec = engine_spec(name, args.activation)
        try:
            ps = run_engine(spec, ctx, q)
        except BufferTimeError as exc:
            print(f"{name}: refused ({exc})")
            continue
        if not len(ps):
            print(f"{name}: unreachable")
        for j in ps:
            print(f"{name}: {_format_journey(tt, j)}")
    return 0


def cmd_bench(args_or_manifest, out_dir=None) -> dict:
    """Run the benchmark pipeline from a manifest (path, RunManifest or parsed args)."""
    from .bench import RunManifest, run_bench

    if isinstance(args_or_manifest, RunManifest):
        m = args_or_manifest
    elif isinstance(args_or_manifest, (str, Path)):
        m = RunManifest.load(args_or_manifest)
    else:
        args = args_or_manifest
        m = RunManifest.load(args.config) if args.config else RunManifest()
        over = {}
        if args.dataset:
            over["dataset"] = str(args.dataset)
        if args.delta is not None:
            over["deltas"] = [args.delta]
        if args.seed is not None:
            over["scenario_seed"] = args.seed
        if args.window is not None:
            over["scenario_window"] = args.window
        if args.engines is not None:
            over["engines"] = args.engines
        if args.activation is not None:
            over["activation"] = args.activation
        if args.replacement is not None:
            over["replacement"] = [args.replacement]
        m = RunManifest(**{**m.__dict__, **over})
        out_dir = args.out
    if m.dataset and not Path(m.dataset).is_dir():
        raise CliError(f"dataset not found: {m.dataset}", 2)
    return run_bench(m, out_dir or "bench-out", log=log.info)


def _cmd_bench(args) -> int:
    paths = cmd_bench(args)
    for k, p in paths.items():
        print(f"{k}: {p}")
    return 0


def cmd_verify(args) -> int:
    """Check stored artifacts: superset, minimality, interval sanity, file consistency."""
    import numpy as np

    from .shortcuts import StopShortcutSet, project

    tt, _ = _load_dataset(args.dataset)
    es, es_path = _load_shortcuts(args.shortcuts, args.delta)
    problems = []
    if es.num_events != tt.num_events:
        problems.append(f"shortcut file expects {es.num_events} events, dataset has {tt.num_events}")
    else:
        ss = project(es, tt, active_only=args.active_only)
        for x in range(len(es)):
            if args.active_only and not es.active[x]:
                continue
            u, v = int(tt.ev_stop[es.src[x]]), int(tt.ev_stop[es.dst[x]])
            w = ss.weight(u, v)
            if w is None or w > es.travel_time[x]:
                problems.append(f"superset violated by shortcut {x} ({u}->{v})")
        # replacement records carry the realised delay, which may exceed delta
        built = ~es.replacement
        if np.any(es.dmin > es.dmax) or np.any(es.dmin < 0) or np.any(es.dmax[built] > es.delta_max):
            problems.append("delay interval outside [0, delta]")
        stops_path = Path(args.shortcuts) / STOPS_FILE if Path(args.shortcuts).is_dir() else None
        if stops_path is not None and stops_path.is_file():
            stored = StopShortcutSet.load(stops_path)
            ref = project(es, tt, active_only=bool(np.any(~es.active)))
            if stored != ref:
                problems.append(f"{stops_path} is not the minimum-weight projection of {es_path}")
    for p in problems[:20]:
        print(p)
    print(f"verify: {'FAIL' if problems else 'ok'} ({len(problems)} problems, {len(es)} shortcuts)")
    return 1 if problems else 0


# --- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="delayshortcuts", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-synth", help="write a seeded synthetic dataset")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--stops", type=int, default=50)
    s.add_argument("--routes", type=int, help="route count; lines run both ways, so rounded up to even")
    s.add_argument("--trips-per-route", type=int)
    s.add_argument("--buffer", type=int, help="buffer time at every stop (seconds)")
    s.add_argument("--random-buffers", action="store_true")
    s.add_argument("--walk-radius", type=float, help="transfer density knob (metres)")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_gen_synth)

    s = sub.add_parser("gen-delays", help="write an incident delay scenario")
    s.add_argument("--dataset", type=Path, required=True)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--delta", type=int, default=3600, help="largest incident delay (seconds)")
    s.add_argument("--window", type=parse_window)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_gen_delays)

    s = sub.add_parser("build", help="build event shortcuts and their projection")
    s.add_argument("--dataset", type=Path, required=True)
    s.add_argument("--delta", type=int, default=0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--samples", type=int, default=8, help="random delay samples per build")
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_build)

    s = sub.add_parser("update", help="apply a delay scenario to built shortcuts")
    s.add_argument("--dataset", type=Path, required=True)
    s.add_argument("--shortcuts", type=Path, required=True)
    s.add_argument("--scenario", type=Path)
    s.add_argument("--delta", type=int)
    s.add_argument("--replacement", type=on_off, default=True)
    s.add_argument("--out", type=Path, required=True)
    s.set_defaults(func=cmd_update)

    s = sub.add_parser("query", help="answer one query with one or more engines")
    s.add_argument("--dataset", type=Path, required=True)
    s.add_argument("--shortcuts", type=Path)
    s.add_argument("--scenario", type=Path)
    s.add_argument("--delta", type=int)
    s.add_argument("--engines", type=lambda x: x.split(","), default=["oracle"])
    s.add_argument("--activation", choices=("use", "ignore"), default="use")
    s.add_argument("--replacement", type=on_off, default=True)
    s.add_argument("--source", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--time", type=parse_time, required=True)
    s.set_defaults(func=cmd_query)

    s = sub.add_parser("bench", help="run the benchmark pipeline")
    s.add_argument("--config", type=Path, help="manifest file (TOML or JSON)")
    s.add_argument("--dataset", type=Path)
    s.add_argument("--delta", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--window", type=parse_window)
    s.add_argument("--engines", type=lambda x: x.split(","))
    s.add_argument("--activation", choices=("use", "ignore"))
    s.add_argument("--replacement", type=on_off)
    s.add_argument("--out", type=Path, default=Path("bench-out"))
    s.set_defaults(func=_cmd_bench)

    s = sub.add_parser("verify", help="check stored shortcut artifacts against a dataset")
    s.add_argument("--dataset", type=Path, required=True)
    s.add_argument("--shortcuts", type=Path, required=True)
    s.add_argument("--delta", type=int)
    s.add_argument("--active-only", action="store_true")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    from .shortcuts import ShortcutFileError
    from .timetable import TimetableError

    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (TimetableError, ShortcutFileError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
