"""Experiment configuration: YAML files checked against a versioned schema.

A config names one suite and its parameters::

    schema: v1
    experiment: proposition
    epsilon: 0.1
    t_macro: 1.0
    window: {a: -1.0, b: 1.0, lattice_extent: auto, topology: reflecting-segment}
    runs: 100
    root_seed: 20240101
    thresholds: {}        # overrides of DEFAULT_THRESHOLDS
    output: results

``lattice_extent: auto`` resolves to ``ceil(max(|a|,|b|)/eps + buffer_factor*t/eps^2)``
with ``buffer_factor`` 3 unless the window block sets it.
"""

from __future__ import annotations

import copy
from pathlib import Path

import jsonschema
import yaml

SCHEMA_VERSION = "v1"

EXPERIMENTS = ("proposition", "ordering", "equilibrium", "heat-kernel", "epsilon-scan",
               "lipschitz", "she", "oracle")

# Every statistical pass threshold lives here; configs may override any of them.
DEFAULT_THRESHOLDS = {
    "oracle_tv": 0.01,
    "generator_row_tol": 1e-12,
    "probability_tol": 1e-12,
    "sector_invariance_tol": 1e-10,
    "kernel_rel_tol": 0.05,
    "kernel_se_mult": 2.0,
    "scan_median_drift": 0.20,
    "scan_q90_growth": 0.50,
    "lipschitz_se_mult": 4.0,
    "lipschitz_slack_sqrt_eps": 2.0,
    "lipschitz_pass_fraction": 0.95,
    "she_zero_noise_tol": 1e-3,
    "she_clamp_fraction": 1e-6,
    "she_scan_agreement": 0.30,
    "benchmark_events_per_second": 1e6,
}

_number = {"type": "number"}
_positive = {"type": "number", "exclusiveMinimum": 0}
_phi = {
    "type": "object",
    "required": ["kind"],
    "properties": {
        "kind": {"enum": ["linear", "sine", "piecewise", "zero"]},
        "slope": _number, "amplitude": _number, "period": _positive,
        "breakpoints": {"type": "array", "items": {"type": "array", "items": _number,
                                                   "minItems": 2, "maxItems": 2}},
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "experiment", "runs", "root_seed"],
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "experiment": {"enum": list(EXPERIMENTS)},
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "epsilons": {"type": "array", "minItems": 1,
                     "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}},
        "t_macro": _positive,
        "window": {
            "type": "object",
            "required": ["a", "b"],
            "properties": {
                "a": _number, "b": _number,
                "lattice_extent": {"oneOf": [{"const": "auto"},
                                             {"type": "integer", "minimum": 1}]},
                "topology": {"enum": ["reflecting-segment", "ring"]},
                "buffer_factor": _positive,
            },
            "additionalProperties": False,
        },
        "replicas": {"type": "array", "items": {"type": "string"}},
        "runs": {"type": "integer", "minimum": 1},
        "root_seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
        "sample_times": {"type": "integer", "minimum": 1},
        "points": {"type": "array", "minItems": 1, "items": _number},
        "step_origin": {"type": "integer"},
        "phi": _phi,
        "M": {"type": "number", "minimum": 0},
        "grid_points": {"type": "integer", "minimum": 2},
        "oracle": {
            "type": "object",
            "required": ["n_sites", "t_micro", "samples"],
            "properties": {
                "n_sites": {"type": "integer", "minimum": 2, "maximum": 12},
                "topology": {"enum": ["reflecting-segment", "ring"]},
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
                "symmetric": {"type": "boolean"},
                "t_micro": {"type": "number", "minimum": 0},
                "samples": {"type": "integer", "minimum": 1},
                "initial": {
                    "type": "object",
                    "required": ["kind"],
                    "properties": {
                        "kind": {"enum": ["product", "sector", "point"]},
                        "density": {"type": "number", "minimum": 0, "maximum": 1},
                        "particles": {"type": "integer", "minimum": 0},
                        "occupied": {"type": "array", "items": {"type": "integer",
                                                                "minimum": 0}},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
        "she": {
            "type": "object",
            "required": ["dx", "dt", "paths_per_run"],
            "properties": {"dx": _positive, "dt": _positive,
                           "paths_per_run": {"type": "integer", "minimum": 1},
                           "phi": _phi},
            "additionalProperties": False,
        },
        "thresholds": {
            "type": "object",
            "properties": {k: _number for k in DEFAULT_THRESHOLDS},
            "additionalProperties": False,
        },
        "output": {"type": "string"},
    },
    "additionalProperties": False,
}

# keys each suite needs beyond the common ones
SUITE_KEYS = {
    "proposition": ("epsilon", "t_macro", "window"),
    "ordering": ("epsilon", "t_macro", "window"),
    "epsilon-scan": ("epsilons", "t_macro", "window"),
    "heat-kernel": ("epsilon", "t_macro", "window", "points"),
    "lipschitz": ("epsilon", "t_macro", "window", "phi"),
    "equilibrium": ("oracle",),
    "oracle": ("oracle",),
    "she": ("t_macro", "window", "points", "she"),
}


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` lists every offending key with a reason."""

    def __init__(self, problems: list[tuple[str, str]]):
        self.problems = problems
        super().__init__("invalid config:\n" + "\n".join(f"  {k}: {m}" for k, m in problems))


def _key(path) -> str:
    return ".".join(str(p) for p in path) or "<root>"


def validate(raw: dict) -> list[tuple[str, str]]:
    """All schema and consistency problems as ``(dotted key, message)`` pairs."""
    if not isinstance(raw, dict):
        return [("<root>", "config must be a mapping")]
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    problems = []
    for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
        if err.validator == "required":
            missing = err.message.split("'")[1]
            problems.append((_key(list(err.absolute_path) + [missing]), err.message))
        else:
            problems.append((_key(err.absolute_path), err.message))
    w = raw.get("window")
    if isinstance(w, dict) and isinstance(w.get("a"), (int, float)) \
            and isinstance(w.get("b"), (int, float)) and w["a"] >= w["b"]:
        problems.append(("window.a", f"must be < window.b (got a={w['a']}, b={w['b']})"))
        problems.append(("window.b", f"must be > window.a (got a={w['a']}, b={w['b']})"))
    exp = raw.get("experiment")
    for k in SUITE_KEYS.get(exp, ()):
        if k not in raw:
            problems.append((k, f"required by experiment {exp!r}"))
    if exp in ("oracle", "equilibrium"):
        o = raw.get("oracle", {})
        if isinstance(o, dict) and not o.get("symmetric") and "epsilon" not in o:
            problems.append(("oracle.epsilon", "required unless oracle.symmetric is true"))
        if exp == "equilibrium" and isinstance(o, dict) and o.get("topology") == "reflecting-segment":
            problems.append(("oracle.topology", "equilibrium invariance is defined on rings"))
    return problems


def resolve(raw: dict) -> dict:
    """Validated config plus defaults; the returned dict is what the suites consume."""
    problems = validate(raw)
    if problems:
        raise ConfigError(problems)
    params = copy.deepcopy(raw)
    params["thresholds"] = {**DEFAULT_THRESHOLDS, **raw.get("thresholds", {})}
    if "window" in params:
        params["window"].setdefault("lattice_extent", "auto")
        params["window"].setdefault("topology", "reflecting-segment")
        params["window"].setdefault("buffer_factor", 3.0)
    params.setdefault("output", "results")
    return params


def resolved_extents(params: dict) -> dict[str, int]:
    """Lattice extent actually used for each epsilon of the config."""
    from .verification.experiments import resolve_window
    if "window" not in params:
        return {}
    eps = params.get("epsilons") or ([params["epsilon"]] if "epsilon" in params else [])
    return {repr(e): resolve_window(params, e).lattice_extent for e in eps}


def load(path) -> dict:
    text = Path(path).read_text()
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as err:
        raise ConfigError([("<file>", f"not valid YAML: {err}")]) from err
    return resolve(raw)


def dump(params: dict) -> str:
    return yaml.safe_dump(params, sort_keys=False)
