"""Command line: ``wasep run|validate|replay|benchmark``.

Exit status is 0 when the verdict is pass, 2 when it is fail, and 1 for usage,
config, or runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import yaml

from . import runner
from .benchmark import benchmark
from .config import DEFAULT_THRESHOLDS, ConfigError, validate

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


def _read_config(path) -> dict:
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except OSError as err:
        raise ConfigError([("--config", str(err))]) from err
    except yaml.YAMLError as err:
        raise ConfigError([("<file>", f"not valid YAML: {err}")]) from err
    problems = validate(raw)
    if problems:
        raise ConfigError(problems)
    return raw


def cmd_validate(args) -> int:
    _read_config(args.config)
    print(f"{args.config}: ok")
    return EXIT_PASS


def cmd_run(args) -> int:
    raw = _read_config(args.config)
    try:
        report, paths = runner.run_config(raw, jobs=args.jobs, seed_override=args.seed_override,
                                          out_dir=args.out)
    except runner.SuiteAborted as err:
        print(f"aborted: {err}; partial records written to quarantine/", file=sys.stderr)
        return EXIT_ERROR
    print(f"{report['suite']}: {report['verdict']} ({len(report['runs'])} runs, "
          f"{report['wall_clock']['seconds']:.1f} s)")
    for p in paths:
        print(f"  wrote {p}")
    return EXIT_PASS if report["verdict"] == "pass" else EXIT_FAIL


def cmd_replay(args) -> int:
    report = json.loads(Path(args.report).read_text())
    stored, fresh = runner.replay(report, args.run)
    if stored == fresh:
        print(f"run {args.run}: reproduced bitwise")
        return EXIT_PASS
    diff = sorted(k for k in set(stored) | set(fresh) if stored.get(k) != fresh.get(k))
    print(f"run {args.run}: differs in {', '.join(diff)}")
    return EXIT_FAIL


def cmd_benchmark(args) -> int:
    res = benchmark(n_sites=args.sites, events=int(args.events), seed=args.seed,
                    ordering_hook=args.ordering_hook)
    target = args.target
    res["target_events_per_second"] = target
    res["pass"] = res["events_per_second"] >= target
    print(json.dumps(res, indent=1))
    return EXIT_PASS if res["pass"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wasep", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute the suite named in a config")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("--out", help="output directory (default: the config's output key)")
    p.add_argument("--seed-override", type=int, help="replace the config's root_seed")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a config against the schema")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="re-execute one run of a report and compare")
    p.add_argument("--report", required=True)
    p.add_argument("--run", type=int, default=0)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("benchmark", help="event-loop throughput")
    p.add_argument("--sites", type=int, default=10_001)
    p.add_argument("--events", type=float, default=2e7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ordering-hook", action="store_true")
    p.add_argument("--target", type=float,
                   default=DEFAULT_THRESHOLDS["benchmark_events_per_second"])
    p.set_defaults(func=cmd_benchmark)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_PASS
    try:
        return args.func(args)
    except ConfigError as err:
        print(err, file=sys.stderr)
        return EXIT_ERROR
    except (OSError, KeyError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
