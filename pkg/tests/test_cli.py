import csv
from pathlib import Path

import pytest

from delayshortcuts.cli import main
from delayshortcuts.shortcuts import StopShortcutSet
from delayshortcuts.timetable import load_timetable

TINY = Path(__file__).parent / "data" / "tiny"


@pytest.fixture(scope="module")
def synth(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth") / "ds"
    assert main(["gen-synth", "--seed", "3", "--stops", "50", "--routes", "10", "--trips-per-route", "5",
                 "--out", str(out)]) == 0
    return out


def test_build_tiny(tmp_path):
    out = tmp_path / "b"
    assert main(["build", "--dataset", str(TINY), "--delta", "0", "--out", str(out)]) == 0
    assert (out / "events.bin").is_file() and (out / "stops.bin").is_file()
    with open(out / "stats.csv", newline="") as fh:
        row = next(csv.DictReader(fh))
    assert row["delta"] == "0"
    again = tmp_path / "b2"
    main(["build", "--dataset", str(TINY), "--delta", "0", "--out", str(again)])
    assert (out / "events.bin").read_bytes() == (again / "events.bin").read_bytes()
    assert (out / "stops.bin").read_bytes() == (again / "stops.bin").read_bytes()


def test_missing_dataset(tmp_path, capsys):
    missing = tmp_path / "nowhere"
    assert main(["build", "--dataset", str(missing), "--out", str(tmp_path / "o")]) == 2
    assert str(missing) in capsys.readouterr().err


def test_gen_synth(synth, tmp_path):
    tt = load_timetable(synth)
    assert tt.num_stops == 50 and len(tt.routes) == 10
    assert all(len(r.trips) == 5 for r in tt.routes)
    other = tmp_path / "again"
    main(["gen-synth", "--seed", "3", "--stops", "50", "--routes", "10", "--trips-per-route", "5",
          "--out", str(other)])
    for f in sorted(synth.glob("*.csv")):
        assert f.read_bytes() == (other / f.name).read_bytes(), f.name


def test_gen_synth_buffer(tmp_path):
    out = tmp_path / "buf"
    assert main(["gen-synth", "--seed", "1", "--stops", "20", "--buffer", "45", "--out", str(out)]) == 0
    assert {s.buffer_time for s in load_timetable(out).stops} == {45}


def test_gen_synth_rejects_bad_parameters(tmp_path):
    assert main(["gen-synth", "--stops", "1", "--out", str(tmp_path / "x")]) == 1


def test_query_outputs(synth, capsys):
    base = ["query", "--dataset", str(synth)]
    tt = load_timetable(synth)
    s = str(tt.stops[0].id)
    assert main(base + ["--source", s, "--target", s, "--time", "12:00"]) == 0
    assert "arrival 12:00:00 trips 0" in capsys.readouterr().out
    assert main(base + ["--source", s, "--target", str(tt.stops[7].id), "--time", "23:59:59",
                        "--engines", "oracle,csa"]) == 0
    assert capsys.readouterr().out.count("unreachable") == 2


def test_query_oracle_and_csa_agree(synth, capsys):
    tt = load_timetable(synth)
    for t in ("12:00", "12:17", "13:05"):
        main(["query", "--dataset", str(synth), "--source", str(tt.stops[1].id), "--target", str(tt.stops[30].id),
              "--time", t, "--engines", "oracle,csa"])
        lines = capsys.readouterr().out.splitlines()
        oracle = [ln.split()[2] for ln in lines if ln.startswith("oracle: arrival")]
        csa = [ln.split()[2] for ln in lines if ln.startswith("csa: arrival")]
        assert (min(oracle) if oracle else None) == (csa[0] if csa else None)


def test_update_and_verify(synth, tmp_path, capsys):
    b, sc, u = tmp_path / "b", tmp_path / "sc.json", tmp_path / "u"
    assert main(["build", "--dataset", str(synth), "--delta", "120", "--samples", "2", "--out", str(b)]) == 0
    assert main(["verify", "--dataset", str(synth), "--shortcuts", str(b)]) == 0
    assert main(["gen-delays", "--dataset", str(synth), "--delta", "120", "--out", str(sc)]) == 0
    assert main(["update", "--dataset", str(synth), "--shortcuts", str(b), "--scenario", str(sc),
                 "--out", str(u)]) == 0
    assert main(["verify", "--dataset", str(synth), "--shortcuts", str(u)]) == 0
    assert "verify: ok" in capsys.readouterr().out
    # a stop file that is not the projection is caught
    tt = load_timetable(synth)
    StopShortcutSet(tt.num_stops, {}).save(u / "stops.bin")
    assert main(["verify", "--dataset", str(synth), "--shortcuts", str(u)]) == 1


def test_verify_wrong_dataset(tmp_path):
    b = tmp_path / "b"
    main(["build", "--dataset", str(TINY), "--out", str(b)])
    other = tmp_path / "o"
    main(["gen-synth", "--stops", "20", "--out", str(other)])
    assert main(["verify", "--dataset", str(other), "--shortcuts", str(b)]) == 1


def _bench(tmp_path, name, engines):
    cfg = tmp_path / f"{name}.toml"
    cfg.write_text("synth_stops = 30\ndeltas = [60]\nbuilder_samples = 1\nrandom_queries = 30\n"
                   "affected_queries = 10\naffected_candidates = 200\nreplacement = [true]\n"
                   f"engines = {engines!r}\n".replace("'", '"'))
    out = tmp_path / name
    assert main(["bench", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "report_d60_repl-on.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_bench_oracle_only_is_exact(tmp_path):
    rows = _bench(tmp_path, "o", ["oracle"])
    assert len(rows) == 1 and rows[0]["F.Q"] == "0" and rows[0]["%all"] == "0.00"


def test_bench_all_engines(tmp_path):
    names = ["oracle", "csa", "raptor", "raptor-ep", "tb", "td"]
    rows = _bench(tmp_path, "all", names)
    assert [r["engine"] for r in rows] == names
    assert all(r["F.Q"] == "0" for r in rows if r["engine"] != "tb")
    assert all(r["F.J"] == "" for r in rows if r["engine"] in ("csa", "td"))


def test_bench_missing_dataset(tmp_path):
    assert main(["bench", "--dataset", str(tmp_path / "none"), "--out", str(tmp_path / "o")]) == 2
