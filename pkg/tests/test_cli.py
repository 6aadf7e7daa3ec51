import csv
import json
import math
from pathlib import Path

import pytest
import yaml

from wasep import cli, runner
from wasep.config import ConfigError, DEFAULT_THRESHOLDS, load, resolve, validate
from wasep.report import REPORT_SCHEMA, numeric_view
from wasep.verification import experiments

ROOT = Path(__file__).resolve().parents[1]
DATA = Path(__file__).resolve().parent / "data"

SMALL = {"schema": "v1", "experiment": "proposition", "epsilon": 0.1, "t_macro": 0.5,
         "window": {"a": -1.0, "b": 1.0, "lattice_extent": "auto"}, "runs": 4,
         "root_seed": 42, "sample_times": 4}


def write(tmp_path, cfg, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(cfg))
    return p


def test_shipped_configs_validate():
    for path in sorted((ROOT / "configs").glob("*.yaml")):
        assert validate(yaml.safe_load(path.read_text())) == [], path


def test_reversed_window_names_both_keys(capsys):
    code = cli.main(["validate", "--config", str(DATA / "bad-window.yaml")])
    err = capsys.readouterr().err
    assert code == 1
    assert "window.a" in err and "window.b" in err


def test_every_offending_key_is_listed():
    bad = {"schema": "v2", "experiment": "proposition", "epsilon": 1.5, "runs": 0,
           "window": {"a": 0.0, "b": 1.0, "extent": 3}, "colour": "red"}
    keys = {k for k, _ in validate(bad)}
    assert {"schema", "epsilon", "runs", "root_seed", "window", "t_macro"} <= keys
    assert "<root>" in keys  # the unknown top-level key
    with pytest.raises(ConfigError) as err:
        resolve(bad)
    assert "colour" in str(err.value) and "extent" in str(err.value)


def test_resolve_fills_defaults():
    params = resolve(SMALL)
    assert params["thresholds"] == DEFAULT_THRESHOLDS
    assert params["window"]["buffer_factor"] == 3.0
    assert experiments.resolve_window(params, 0.1).lattice_extent == 160
    p = resolve({**SMALL, "thresholds": {"oracle_tv": 0.02}})
    assert p["thresholds"]["oracle_tv"] == 0.02


def test_load_rejects_bad_yaml(tmp_path):
    p = tmp_path / "x.yaml"
    p.write_text("a: [1, 2\n")
    with pytest.raises(ConfigError):
        load(p)


def test_run_is_bitwise_reproducible(tmp_path, capsys):
    cfg = write(tmp_path, SMALL)
    out = tmp_path / "out"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    assert cli.main(["run", "--config", str(cfg), "--out", str(out), "--jobs", "2"]) == 0
    a, b = sorted(out.glob("proposition-seed42-*.json"))
    ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
    assert numeric_view(ra) == numeric_view(rb)
    # same bytes apart from the wall-clock block
    strip = lambda r: json.dumps(numeric_view(r), sort_keys=True)
    assert strip(ra) == strip(rb)
    csvs = sorted(out.glob("proposition-seed42-*-samples.csv"))
    assert csvs[0].read_bytes() == csvs[1].read_bytes()
    assert (out / "PLOTS.md").exists()


def test_report_contents_and_schema(tmp_path):
    import jsonschema
    report, paths = runner.run_config(SMALL, out_dir=tmp_path)
    stored = json.loads(paths[0].read_text())
    jsonschema.validate(stored, REPORT_SCHEMA)
    assert stored["schema"] == "v1" and stored["verdict"] == "pass"
    assert stored["config"] == SMALL
    assert stored["resolved"]["lattice_extents"] == {"0.1": 160}
    assert [r["run"] for r in stored["runs"]] == [0, 1, 2, 3]
    assert stored["seeds"]["runs"][1]["stream"] == stored["runs"][1]["seeds"]["stream"]
    assert all(r["tv_identity"] for r in stored["runs"])


def test_seed_override(tmp_path):
    report, _ = runner.run_config(SMALL, seed_override=7, write=False)
    assert report["config"]["root_seed"] == 7
    assert report["seeds"]["root_seed"] == 7
    base, _ = runner.run_config(SMALL, write=False)
    assert base["runs"][0]["seeds"] != report["runs"][0]["seeds"]


def test_failing_verdict_exits_2(tmp_path):
    cfg = {"schema": "v1", "experiment": "oracle", "runs": 2, "root_seed": 1,
           "oracle": {"n_sites": 6, "topology": "ring", "epsilon": 0.04, "t_micro": 1.0,
                      "samples": 200}}
    assert cli.main(["run", "--config", str(write(tmp_path, cfg)),
                     "--out", str(tmp_path / "o")]) == 2


def test_replay(tmp_path, capsys):
    _, paths = runner.run_config(SMALL, out_dir=tmp_path)
    assert cli.main(["replay", "--report", str(paths[0]), "--run", "2"]) == 0
    data = json.loads(paths[0].read_text())
    data["runs"][2]["samples"][1]["count"] += 1
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(data))
    assert cli.main(["replay", "--report", str(tampered), "--run", "2"]) == 2
    assert "samples" in capsys.readouterr().out
    assert cli.main(["replay", "--report", str(tampered), "--run", "99"]) == 1


def test_scan_csv_tv_identity(tmp_path):
    cfg = {"schema": "v1", "experiment": "epsilon-scan", "epsilons": [0.2, 0.1],
           "t_macro": 0.5, "window": {"a": -1.0, "b": 1.0}, "runs": 5, "root_seed": 3}
    report, paths = runner.run_config(cfg, out_dir=tmp_path)
    runs_csv = next(p for p in paths if p.name.endswith("-runs.csv"))
    with open(runs_csv) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 10
    assert list(rows[0]) == ["epsilon", "run", "count", "tv_int", "tv", "rhs_int", "rhs",
                             "bracket"]
    for row in rows:
        eps, count = float(row["epsilon"]), int(row["count"])
        assert count * 2 * math.sqrt(eps) == float(row["tv"])
        assert int(row["tv_int"]) <= int(row["rhs_int"])


def test_abort_writes_quarantine(tmp_path, monkeypatch, capsys):
    real, summarize = experiments.RUNNERS["proposition"]

    def flaky(params, run_index):
        if run_index == 2:
            raise RuntimeError("boom")
        return real(params, run_index)

    monkeypatch.setitem(experiments.RUNNERS, "proposition", (flaky, summarize))
    out = tmp_path / "o"
    assert cli.main(["run", "--config", str(write(tmp_path, SMALL)), "--out", str(out)]) == 1
    q = list((out / "quarantine").glob("*.json"))
    assert len(q) == 1
    partial = json.loads(q[0].read_text())
    assert [r["run"] for r in partial["runs"]] == [0, 1] and "boom" in partial["error"]
    assert not list(out.glob("proposition-*.json"))


def test_benchmark_subcommand(capsys):
    code = cli.main(["benchmark", "--sites", "1001", "--events", "2e5", "--target", "1"])
    res = json.loads(capsys.readouterr().out)
    assert code == 0 and res["pass"] and res["events"] >= 2e5 * 0.9


def test_usage_errors_exit_1(capsys):
    assert cli.main(["frobnicate"]) == 1
    assert cli.main(["run"]) == 1
    assert cli.main(["validate", "--config", "/nonexistent.yaml"]) == 1
