"""Run fan-out and report assembly."""

from __future__ import annotations

import copy
import json
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import report as rpt
from . import seeding
from .config import SCHEMA_VERSION, resolve, resolved_extents
from .verification.experiments import RUNNERS, n_runs


class SuiteAborted(RuntimeError):
    def __init__(self, message: str, records: list[dict]):
        super().__init__(message)
        self.records = records


def _plain(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def normalise(record: dict) -> dict:
    """JSON round trip, so in-memory records equal what a report stores."""
    return json.loads(json.dumps(rpt._clean(record), default=_plain))


def run_one(params: dict, run_index: int) -> dict:
    return normalise(RUNNERS[params["experiment"]][0](params, run_index))


def execute(params: dict, jobs: int = 1) -> list[dict]:
    """All runs of the suite, sorted by run index whatever the completion order."""
    n = n_runs(params)
    records: list[dict] = []
    try:
        if jobs <= 1:
            for r in range(n):
                records.append(run_one(params, r))
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(run_one, params, r) for r in range(n)]
                for fut in as_completed(futures):
                    records.append(fut.result())
    except Exception as err:
        raise SuiteAborted(f"{type(err).__name__}: {err}",
                           sorted(records, key=lambda r: r["run"])) from err
    return sorted(records, key=lambda r: r["run"])


def seed_table(root_seed: int, n: int) -> dict:
    purposes = {"stream": seeding.STREAM, "uniforms": seeding.UNIFORMS,
                "noise": seeding.NOISE, "brownian": seeding.BROWNIAN}
    runs = [{"run": r, **{k: seeding.derive_seed(root_seed, r, p) for k, p in purposes.items()}}
            for r in range(n)]
    return {"root_seed": root_seed, "derivation": rpt.SEED_DERIVATION, "runs": runs}


def build_report(raw: dict, params: dict, records: list[dict], started: str,
                 seconds: float) -> dict:
    aggregates, passed = RUNNERS[params["experiment"]][1](params, records)
    return {
        "schema": SCHEMA_VERSION,
        "suite": params["experiment"],
        "config": raw,
        "resolved": {"thresholds": params["thresholds"],
                     "lattice_extents": resolved_extents(params),
                     "runs": n_runs(params)},
        "runs": records,
        "aggregates": normalise(aggregates),
        "verdict": "pass" if passed else "fail",
        "seeds": seed_table(params["root_seed"], n_runs(params)),
        "tool_version": rpt.tool_version(),
        "wall_clock": {"started": started, "seconds": seconds},
    }


def run_config(raw: dict, jobs: int = 1, seed_override: int | None = None,
               out_dir=None, write: bool = True):
    """Validate, execute, and (optionally) write the report and datasets.

    Returns ``(report, paths)``.  On an exception inside a run the completed records
    go to ``<out>/quarantine`` and ``SuiteAborted`` propagates.
    """
    raw = copy.deepcopy(raw)
    if seed_override is not None:
        raw["root_seed"] = int(seed_override)
    params = resolve(raw)
    out = out_dir or params["output"]
    started = datetime.now(timezone.utc).isoformat(timespec="seconds")
    t0 = time.perf_counter()
    try:
        records = execute(params, jobs)
    except SuiteAborted as err:
        if write:
            stem = f"{params['experiment']}-seed{params['root_seed']}"
            rpt.quarantine(out, stem, {"config": raw, "error": str(err), "runs": err.records})
        raise
    report = build_report(raw, params, records, started, time.perf_counter() - t0)
    paths = []
    if write:
        Path(out).mkdir(parents=True, exist_ok=True)
        stem = rpt.next_stem(Path(out), report["suite"], params["root_seed"])
        paths.append(rpt.write_report(report, out, stem))
        paths.extend(rpt.write_datasets(report, out, stem))
        paths.append(rpt.write_plots_readme(out))
    return report, paths


def replay(report: dict, run_index: int) -> tuple[dict, dict]:
    """Re-execute one run from a report's config echo; returns ``(stored, fresh)``."""
    params = resolve(report["config"])
    stored = next((r for r in report["runs"] if r["run"] == run_index), None)
    if stored is None:
        raise KeyError(f"report has no run {run_index}")
    return stored, run_one(params, run_index)
