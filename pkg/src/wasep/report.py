"""JSON run reports, CSV datasets, and the suggested-plots README."""

from __future__ import annotations

import csv
import json
import math
from importlib import metadata
from pathlib import Path

import jsonschema

from .config import SCHEMA_VERSION

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "suite", "config", "resolved", "runs", "aggregates", "verdict",
                 "seeds", "tool_version", "wall_clock"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "suite": {"type": "string"},
        "config": {"type": "object"},
        "resolved": {"type": "object"},
        "runs": {"type": "array", "items": {"type": "object", "required": ["run"]}},
        "aggregates": {"type": "object"},
        "verdict": {"enum": ["pass", "fail"]},
        "seeds": {
            "type": "object",
            "required": ["root_seed", "derivation", "runs"],
            "properties": {"root_seed": {"type": "integer"}, "derivation": {"type": "string"},
                           "runs": {"type": "array"}},
        },
        "tool_version": {"type": "string"},
        "wall_clock": {"type": "object"},
    },
}

SEED_DERIVATION = ("SeedSequence(entropy=root_seed, spawn_key=(run_index, purpose))"
                   ".generate_state(1, uint64)[0]; purpose 0=stream 1=uniforms 2=noise "
                   "3=brownian")


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def _clean(obj):
    """Replace non-finite floats by None so the output is strict JSON."""
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def validate_report(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), indent=1, allow_nan=False) + "\n"


def numeric_view(report: dict) -> dict:
    """The report minus the fields allowed to differ between identical reruns."""
    return {k: v for k, v in report.items() if k != "wall_clock"}


def next_stem(out_dir: Path, suite: str, root_seed: int) -> str:
    """First unused ``<suite>-seed<root>-<n>`` name; reports are never overwritten."""
    n = 0
    while (out_dir / f"{suite}-seed{root_seed}-{n:03d}.json").exists():
        n += 1
    return f"{suite}-seed{root_seed}-{n:03d}"


def write_report(report: dict, out_dir, stem: str | None = None) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    validate_report(_clean(report))
    stem = stem or next_stem(out_dir, report["suite"], report["seeds"]["root_seed"])
    path = out_dir / f"{stem}.json"
    with open(path, "x") as fh:
        fh.write(dumps(report))
    return path


def quarantine(out_dir, stem: str, payload: dict) -> Path:
    """Write whatever a failed invocation produced under ``<out>/quarantine``."""
    q = Path(out_dir) / "quarantine"
    q.mkdir(parents=True, exist_ok=True)
    n = 0
    while (q / f"{stem}-partial{n}.json").exists():
        n += 1
    path = q / f"{stem}-partial{n}.json"
    with open(path, "x") as fh:
        fh.write(json.dumps(_clean(payload), indent=1, default=str) + "\n")
    return path


# datasets ---------------------------------------------------------------------------

def _proposition_rows(report):
    cols = ("run", "t_macro", "count", "rhs_int", "lhs", "rhs", "tv_int", "pass")
    rows = [{"run": r["run"], **{k: s[k] for k in cols[1:]}}
            for r in report["runs"] for s in r["samples"]]
    return {"samples": (cols, rows)}


def _scan_rows(report):
    cols = ("epsilon", "run", "count", "tv_int", "tv", "rhs_int", "rhs", "bracket")
    rows = [{k: r[k] for k in cols} for r in report["runs"]]
    qcols = ("epsilon", "statistic", "q25", "q50", "q75", "q90")
    qrows = []
    agg = report["aggregates"]
    for eps in agg["epsilons"]:
        for stat in ("tv", "rhs", "bracket"):
            qrows.append({"epsilon": eps, "statistic": stat, **agg[stat][repr(eps)]})
    return {"runs": (cols, rows), "quantiles": (qcols, qrows)}


def _kernel_rows(report):
    cols = ("x", "mean", "se", "kernel", "pass")
    return {"kernel": (cols, report["aggregates"]["points"])}


def _she_rows(report):
    out = _kernel_rows(report)
    out["tv"] = (("run", "path", "tv"), [{"run": r["run"], "path": i, "tv": v}
                                         for r in report["runs"] for i, v in enumerate(r["tv"])])
    return out


def _lipschitz_rows(report):
    cols = ("run", "quotient", "bound", "increments_ordered", "increment_violations",
            "statistical_pass")
    return {"runs": (cols, [{k: r[k] for k in cols} for r in report["runs"]])}


def _ordering_rows(report):
    cols = ("run", "events", "violations")
    return {"runs": (cols, [{k: r[k] for k in cols} for r in report["runs"]])}


def _oracle_rows(report):
    counts = [sum(c) for c in zip(*(r["counts"] for r in report["runs"]))]
    total = sum(counts)
    exact = report["aggregates"]["exact"]
    cols = ("state", "occupancy", "count", "empirical", "exact")
    n = (len(counts) - 1).bit_length()
    rows = [{"state": s, "occupancy": format(s, f"0{n}b")[::-1], "count": c,
             "empirical": c / total, "exact": exact[s]} for s, c in enumerate(counts)]
    return {"states": (cols, rows)}


DATASETS = {
    "proposition": _proposition_rows,
    "epsilon-scan": _scan_rows,
    "heat-kernel": _kernel_rows,
    "she": _she_rows,
    "lipschitz": _lipschitz_rows,
    "ordering": _ordering_rows,
    "oracle": _oracle_rows,
    "equilibrium": _oracle_rows,
}


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def write_csv(path, columns, rows) -> Path:
    with open(path, "x", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    return Path(path)


def write_datasets(report: dict, out_dir, stem: str) -> list[Path]:
    make = DATASETS.get(report["suite"])
    if make is None:
        return []
    return [write_csv(Path(out_dir) / f"{stem}-{name}.csv", cols, rows)
            for name, (cols, rows) in make(report).items()]


PLOTS_README = """\
# Suggested plots

CSV files carry a header row. In gnuplot:

    set datafile separator comma
    set key autotitle columnhead

## epsilon-scan

- `*-runs.csv`: `tv` against `bracket` per run. Every point lies on or below the
  diagonal.

      plot '<file>' using 8:5 with points, x

- `*-quantiles.csv`: quantiles of `tv` and `rhs` against epsilon on a log x axis;
  flat curves indicate tightness.

## proposition

- `*-samples.csv`: `lhs` and `rhs` against `t_macro` for a few runs (columns 5, 6
  against 2). `rhs - lhs` is the slack and never goes negative.

## heat-kernel and she

- `*-kernel.csv`: `mean` with `se` error bars against `x`, overlaid with the
  `kernel` column.

      plot '<file>' using 1:2:3 with yerrorbars, '' using 1:4 with lines

- `she` `*-tv.csv`: histogram of `tv` for comparison with the epsilon-scan medians.

## lipschitz

- `*-runs.csv`: histogram of `quotient`, with a vertical line at the bound.

## oracle and equilibrium

- `*-states.csv`: `empirical` and `exact` against the state index. The `occupancy`
  column spells the configuration left to right.
"""


def write_plots_readme(out_dir) -> Path:
    path = Path(out_dir) / "PLOTS.md"
    if not path.exists():
        path.write_text(PLOTS_README)
    return path
