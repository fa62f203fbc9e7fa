import json
from pathlib import Path

import pytest

from atlaas import experiment as ex
from atlaas.cli import main
from atlaas.profiles import load_profiles, load_taxonomy

SMALL = ["--peers", "30", "--cycles", "50", "--clusters", "2", "--queries", "6", "--set", "workload.start_cycle=45"]


def _read(out: Path, name: str) -> list[dict]:
    return [json.loads(line) for line in (out / name).read_text().splitlines()]


# -- gen-dataset -----------------------------------------------------------------------


def test_gen_dataset_defaults(tmp_path, capsys):
    assert main(["gen-dataset", "--out", str(tmp_path)]) == 0
    tax = load_taxonomy((tmp_path / "taxonomy.txt").read_text())
    profs = load_profiles((tmp_path / "profiles.txt").read_text())
    assert len(tax) == 200
    assert len(profs) == 5000
    out = capsys.readouterr().out
    assert "labels: 200" in out and "histogram" in out


def test_gen_dataset_minimal(tmp_path):
    assert main(["gen-dataset", "--labels", "1", "--peers", "1", "--out", str(tmp_path)]) == 0
    assert len(load_taxonomy((tmp_path / "taxonomy.txt").read_text())) == 1
    assert [p.weights for _, p in load_profiles((tmp_path / "profiles.txt").read_text())] == [{0: 1.0}]


def test_gen_dataset_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    flags = ["gen-dataset", "--peers", "300", "--clusters", "3", "--seed", "9"]
    assert main(flags + ["--out", str(a)]) == 0
    assert main(flags + ["--out", str(b)]) == 0
    for name in ("taxonomy.txt", "profiles.txt", "dataset.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_unwritable_output_exits_2(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["gen-dataset", "--peers", "1", "--out", str(blocker / "sub")]) == 2
    assert "cannot write" in capsys.readouterr().err


def test_out_defaults_to_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("ATLAAS_OUT", str(tmp_path))
    assert main(["gen-dataset", "--labels", "5", "--peers", "2"]) == 0
    assert (tmp_path / "dataset" / "profiles.txt").exists()


# -- run ------------------------------------------------------------------------------------


def test_smoke_run(tmp_path, capsys):
    assert main(["run", "--peers", "1", "--cycles", "10", "--seed", "1", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "recall" in out and "seeds: 1" in out
    assert (tmp_path / "seed1" / "metrics.jsonl").exists()


@pytest.mark.parametrize("flags", [["--peers", "0"], ["--set", "workload.tll=2"], ["--set", "nothing"]])
def test_invalid_spec_exits_2(tmp_path, flags):
    assert main(["run", "--out", str(tmp_path)] + flags) == 2


def test_flood_baseline_adds_columns(tmp_path, capsys):
    assert main(["run", *SMALL, "--seed", "1", "--baseline", "flood", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "flood_recall" in out and "peers_contacted_ratio" in out
    (row,) = _read(tmp_path, "summary.jsonl")
    assert row["queries"] == 6
    assert row["recall"] <= row["flood_recall"] <= 1.0


def test_report_is_a_pure_fold(tmp_path, capsys):
    assert main(["run", *SMALL, "--seed", "2", "--seed", "3", "--baseline", "flood", "--out", str(tmp_path)]) == 0
    rows = _read(tmp_path, "summary.jsonl")
    folded = {r["seed"]: r for r in ex.report(tmp_path)}
    for row in rows:
        again = folded[row["seed"]]
        for key, value in ex.summarize(ex.load_records(tmp_path / f"seed{row['seed']}" / "queries.jsonl")).items():
            assert row[key] == value == again[key]
    capsys.readouterr()
    assert main(["report", str(tmp_path)]) == 0
    assert "seed2" in capsys.readouterr().out


def test_report_on_missing_dir_exits_2(tmp_path):
    assert main(["report", str(tmp_path / "nope")]) == 2
    assert main(["report", str(tmp_path)]) == 2


def test_spec_file_round_trip(tmp_path):
    spec = ex.ExperimentSpec(name="tiny", sim=ex.smoke_config(), seeds=[4])
    spec.dump(tmp_path / "spec.json")
    assert ex.ExperimentSpec.load(tmp_path / "spec.json") == spec
    assert main(["run", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "o")]) == 0
    assert [r["seed"] for r in _read(tmp_path / "o", "summary.jsonl")] == [4]


# -- sweep ------------------------------------------------------------------------------------


def test_sweep_counts_rows(tmp_path):
    flags = ["sweep", "--peers", "12", "--cycles", "5", "--seed", "1", "--seed", "2", "--axis", "workload.ttl=1,2,3"]
    assert main(flags + ["--out", str(tmp_path)]) == 0
    rows = _read(tmp_path, "sweep.jsonl")
    assert len(rows) == 3 * 2
    assert [(r["workload.ttl"], r["seed"]) for r in rows] == [(t, s) for t in (1, 2, 3) for s in (1, 2)]


def test_sweep_axes_in_stable_order():
    spec = ex.ExperimentSpec(sweep={"workload.theta": [0.3, 0.5], "workload.ttl": [1, 2]})
    assert ex.cells(spec) == [
        {"workload.theta": 0.3, "workload.ttl": 1},
        {"workload.theta": 0.3, "workload.ttl": 2},
        {"workload.theta": 0.5, "workload.ttl": 1},
        {"workload.theta": 0.5, "workload.ttl": 2},
    ]


@pytest.mark.parametrize("axis", ["workload.ttl=", "workload.ttl", "workload.nope=1,2"])
def test_bad_axis_exits_2(tmp_path, axis):
    assert main(["sweep", "--peers", "3", "--axis", axis, "--out", str(tmp_path)]) == 2


def test_sweep_without_axis_exits_2(tmp_path):
    assert main(["sweep", "--peers", "3", "--out", str(tmp_path)]) == 2


def test_default_seeds():
    spec = ex.ExperimentSpec(seeds=[])
    spec.validate()
    assert spec.seeds == [1, 2, 3, 4, 5]
    assert ex.ExperimentSpec.from_dict({"name": "x"}).seeds == [1, 2, 3, 4, 5]
    with pytest.raises(ValueError):
        ex.ExperimentSpec(seeds=[1, 1]).validate()


@pytest.mark.slow
def test_recall_falls_with_theta_on_reference_dataset(tmp_path):
    spec = ex.ExperimentSpec(name="theta", sim=ex.reference_config(), seeds=[1])
    spec.sim.cycles = 57
    spec.sim.quality_every = 0
    spec.sim.workload.n_queries = 20
    spec.sim.workload.flood_baseline = False
    spec.sweep = {"workload.theta": [0.3, 0.5, 0.7]}
    rows = ex.run_spec(spec, tmp_path)
    recalls = [r["recall"] for r in rows]
    assert recalls == sorted(recalls, reverse=True)
    # theta only filters replies, so the per-query records agree outside of matches
    per_cell = [ex.load_records(p) for p in sorted(tmp_path.rglob("queries.jsonl"))]
    for lo, hi in zip(per_cell, per_cell[1:]):
        for a, b in zip(lo, hi):
            assert {m[0] for m in b["matches"]} <= {m[0] for m in a["matches"]} or len(a["matches"]) == 10
            assert a["recall"] >= b["recall"]
