"""Experiment suites.

Every suite is split into a per-run function ``run_<name>(params, run_index)``
returning a JSON-ready record, and ``summarize_<name>(params, records)`` returning
``(aggregates, passed)``.  ``params`` is a resolved experiment config (see
``wasep.config``); all random inputs of run ``r`` derive from
``(params["root_seed"], r)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from ..dynamics import CoupledEnsemble, EventStream, OrderingHook, OrderingViolation, evolve
from ..initial import phi_from_spec, step_profile
from ..lattice import (ScalingConstants, SiteConfiguration, Topology, WindowSpec, auto_extent,
                       scaling_constants)
from ..observables import (hopf_cole, log_hopf_cole, proposition_report, tv_integer)
from .. import seeding, she
from .checks import (LIPSCHITZ_ORDER, PROPOSITION_ORDER, check_proposition, lipschitz_bound_check,
                     lipschitz_ensemble, proposition_ensemble)
from .oracle import (OracleSpec, exact_distribution, generator, point_mass, product_law,
                     tv_distance, tv_noise_floor, uniform_sector)


def resolve_window(params: dict, epsilon: float) -> WindowSpec:
    w = params["window"]
    L = w.get("lattice_extent", "auto")
    if L == "auto":
        L = auto_extent(w["a"], w["b"], epsilon, params["t_macro"], w.get("buffer_factor", 3.0))
    return WindowSpec(a=w["a"], b=w["b"], lattice_extent=int(L),
                      topology=w.get("topology", Topology.SEGMENT.value))


def _scaling(params: dict, epsilon: float | None = None) -> ScalingConstants:
    return scaling_constants(params["epsilon"] if epsilon is None else epsilon, unit_gamma=True)


def quantiles(values: Sequence[float]) -> dict[str, float]:
    q = np.quantile(np.asarray(values, dtype=float), [0.25, 0.5, 0.75, 0.9])
    return {"q25": float(q[0]), "q50": float(q[1]), "q75": float(q[2]), "q90": float(q[3])}


# proposition ---------------------------------------------------------------------

def sample_times(t_macro: float, n_intermediate: int) -> list[float]:
    return [t_macro * k / n_intermediate for k in range(n_intermediate + 1)]


def run_proposition(params: dict, run_index: int) -> dict:
    sc = _scaling(params)
    window = resolve_window(params, sc.epsilon)
    seeds = seeding.run_seeds(params["root_seed"], run_index)
    ens = proposition_ensemble(sc, window, seeds["stream"], seeds["uniforms"])
    samples = []
    for t in sample_times(params["t_macro"], params.get("sample_times", 10)):
        rep = check_proposition(ens, window, sc, [t])[0]
        tv = tv_integer(ens.height("step"), ens.height("eq"), window.a, window.b, sc.epsilon)
        samples.append({"t_macro": t, "count": rep.count, "rhs_int": rep.rhs_int, "lhs": rep.lhs,
                        "rhs": rep.rhs, "slack": rep.slack, "pass": rep.passed,
                        "equality": rep.equality, "tv_int": tv, "tv_identity": tv == 2 * rep.count})
    return {"run": run_index, "seeds": seeds, "lattice_extent": window.lattice_extent,
            "samples": samples, "all_pass": all(s["pass"] for s in samples),
            "equality_at_zero": samples[0]["equality"],
            "tv_identity": all(s["tv_identity"] for s in samples),
            "stream": ens.stream.state()}


def summarize_proposition(params: dict, records: list[dict]):
    n = len(records)
    agg = {
        "runs": n,
        "pass_fraction": sum(r["all_pass"] for r in records) / n,
        "equality_at_zero_fraction": sum(r["equality_at_zero"] for r in records) / n,
        "tv_identity_fraction": sum(r["tv_identity"] for r in records) / n,
        "min_slack": min(s["slack"] for r in records for s in r["samples"]),
    }
    passed = (agg["pass_fraction"] == 1.0 and agg["equality_at_zero_fraction"] == 1.0
              and agg["tv_identity_fraction"] == 1.0)
    return agg, passed


def decoupled_proposition(params: dict, run_index: int) -> dict:
    """Negative control: the four replicas run on independent streams."""
    sc = _scaling(params)
    window = resolve_window(params, sc.epsilon)
    seeds = seeding.run_seeds(params["root_seed"], run_index)
    base = proposition_ensemble(sc, window, seeds["stream"], seeds["uniforms"])
    t_micro = params["t_macro"] / sc.epsilon ** 2
    finals = {}
    for i, name in enumerate(base.names):
        stream = EventStream(seeding.derive_seed(seeds["stream"], i), sc, window)
        solo = CoupledEnsemble({name: base.configuration(name)}, stream)
        evolve(solo, t_micro)
        finals[name] = solo
    rep = proposition_report(finals["step"].configuration("step"),
                             finals["eq"].configuration("eq"), finals["max"].height("max"),
                             finals["min"].height("min"), sc, window, params["t_macro"])
    return {"run": run_index, "count": rep.count, "rhs_int": rep.rhs_int, "pass": rep.passed}


# ordering ------------------------------------------------------------------------

def run_ordering(params: dict, run_index: int) -> dict:
    sc = _scaling(params)
    window = resolve_window(params, sc.epsilon)
    seeds = seeding.run_seeds(params["root_seed"], run_index)
    ens = proposition_ensemble(sc, window, seeds["stream"], seeds["uniforms"])
    record = {"run": run_index, "seeds": seeds, "lattice_extent": window.lattice_extent,
              "violations": 0, "violation": None}
    try:
        evolve(ens, params["t_macro"] / sc.epsilon ** 2, [OrderingHook(PROPOSITION_ORDER)])
    except OrderingViolation as v:
        record["violations"] = 1
        record["violation"] = {"event": v.event_index, "time": v.time, "site": v.site,
                               "pair": list(v.pair) if v.pair else None,
                               "neighbourhood": v.neighbourhood}
    record["events"] = ens.stream.index
    record["particle_counts"] = ens.particle_counts()
    return record


def summarize_ordering(params: dict, records: list[dict]):
    agg = {"runs": len(records), "violations": sum(r["violations"] for r in records),
           "events_checked": sum(r["events"] for r in records)}
    return agg, agg["violations"] == 0


# epsilon scan ----------------------------------------------------------------------

@dataclass
class ScanResult:
    epsilons: list[float]
    runs: dict[str, int] = field(default_factory=dict)
    tv: dict[str, dict] = field(default_factory=dict)
    rhs: dict[str, dict] = field(default_factory=dict)
    bracket: dict[str, dict] = field(default_factory=dict)
    median_drift: list[float] = field(default_factory=list)
    q90_rhs_growth: list[float] = field(default_factory=list)
    identity_holds: bool = True
    domination_holds: bool = True
    quantiles_monotone: bool = True
    tight: bool = True

    def as_dict(self) -> dict:
        return asdict(self)


def _scan_epsilon(params: dict, run_index: int) -> float:
    return params["epsilons"][run_index // params["runs"]]


def scan_record(sc: ScalingConstants, window: WindowSpec, stream_seed: int,
                uniform_seed: int, t_macro: float) -> dict:
    ens = proposition_ensemble(sc, window, stream_seed, uniform_seed)
    evolve(ens, t_macro / sc.epsilon ** 2)
    rep = proposition_report(ens.configuration("step"), ens.configuration("eq"),
                             ens.height("max"), ens.height("min"), sc, window, t_macro)
    tv_int = tv_integer(ens.height("step"), ens.height("eq"), window.a, window.b, sc.epsilon)
    s = math.sqrt(sc.epsilon)
    return {"epsilon": sc.epsilon, "count": rep.count, "tv_int": tv_int, "tv": s * tv_int,
            "rhs_int": rep.rhs_int, "rhs": rep.rhs, "bracket": s * rep.rhs_int,
            "identity": tv_int == 2 * rep.count, "dominated": tv_int <= rep.rhs_int,
            "lattice_extent": window.lattice_extent}


def run_epsilon_scan(params: dict, run_index: int) -> dict:
    eps = _scan_epsilon(params, run_index)
    sc = _scaling(params, eps)
    window = resolve_window(params, eps)
    seeds = seeding.run_seeds(params["root_seed"], run_index)
    rec = scan_record(sc, window, seeds["stream"], seeds["uniforms"], params["t_macro"])
    return {"run": run_index, "seeds": seeds, **rec}


def summarize_epsilon_scan(params: dict, records: list[dict]):
    th = params["thresholds"]
    res = ScanResult(epsilons=list(params["epsilons"]))
    for eps in res.epsilons:
        rs = [r for r in records if r["epsilon"] == eps]
        key = repr(eps)
        res.runs[key] = len(rs)
        res.tv[key] = quantiles([r["tv"] for r in rs])
        res.rhs[key] = quantiles([r["rhs"] for r in rs])
        res.bracket[key] = quantiles([r["bracket"] for r in rs])
        for q in (res.tv[key], res.rhs[key], res.bracket[key]):
            if not q["q25"] <= q["q50"] <= q["q75"] <= q["q90"]:
                res.quantiles_monotone = False
    res.identity_holds = all(r["identity"] for r in records)
    res.domination_holds = all(r["dominated"] for r in records)
    keys = [repr(e) for e in res.epsilons]
    for k0, k1 in zip(keys, keys[1:]):
        m0, m1 = res.tv[k0]["q50"], res.tv[k1]["q50"]
        res.median_drift.append(abs(m1 - m0) / m0 if m0 > 0 else math.inf)
        g0, g1 = res.rhs[k0]["q90"], res.rhs[k1]["q90"]
        res.q90_rhs_growth.append(g1 / g0 - 1 if g0 > 0 else math.inf)
    res.tight = (all(d < th["scan_median_drift"] for d in res.median_drift)
                 and all(g < th["scan_q90_growth"] for g in res.q90_rhs_growth))
    passed = res.identity_holds and res.domination_holds and res.quantiles_monotone and res.tight
    return res.as_dict(), passed


def epsilon_scan(epsilons: Sequence[float] = (0.1, 0.05, 0.02), runs: int = 100,
                 root_seed: int = 0, t_macro: float = 1.0, a: float = -1.0, b: float = 1.0,
                 thresholds: dict | None = None) -> tuple[ScanResult, list[dict]]:
    """Sequential scan; returns the summary and the per-run records."""
    from ..config import DEFAULT_THRESHOLDS
    params = {"epsilons": list(epsilons), "runs": runs, "root_seed": root_seed,
              "t_macro": t_macro, "window": {"a": a, "b": b, "lattice_extent": "auto"},
              "thresholds": {**DEFAULT_THRESHOLDS, **(thresholds or {})}}
    records = [run_epsilon_scan(params, r) for r in range(runs * len(epsilons))]
    agg, _ = summarize_epsilon_scan(params, records)
    return ScanResult(**agg), records


# heat kernel -----------------------------------------------------------------------

def run_heat_kernel(params: dict, run_index: int) -> dict:
    sc = scaling_constants(params["epsilon"])
    window = resolve_window(params, sc.epsilon)
    window.check_scale(sc.epsilon)
    seed = seeding.derive_seed(params["root_seed"], run_index)
    origin = params.get("step_origin", 1)
    ens = CoupledEnsemble({"step": step_profile(window, origin)},
                          EventStream(seed, sc, window))
    t = params["t_macro"]
    evolve(ens, t / sc.epsilon ** 2)
    h = ens.height("step")
    return {"run": run_index, "seed": seed,
            "log_Z": [log_hopf_cole(h, sc, t, x) for x in params["points"]]}


def kernel_comparison(points, samples: np.ndarray, t: float, rel_tol: float,
                      se_mult: float) -> tuple[list[dict], bool]:
    """Per-point sample mean vs the Gaussian heat kernel, pass at max(se_mult SE, rel_tol)."""
    rows = []
    for x, col in zip(points, samples.T):
        mean = float(col.mean())
        se = float(col.std(ddof=1) / math.sqrt(col.size))
        k = float(she.heat_kernel(t, x))
        ok = abs(mean - k) <= max(se_mult * se, rel_tol * k)
        rows.append({"x": x, "mean": mean, "se": se, "kernel": k, "pass": ok})
    return rows, all(r["pass"] for r in rows)


def symmetry_pairs(rows: list[dict]) -> list[dict]:
    by_x = {r["x"]: r for r in rows}
    out = []
    for x in sorted(k for k in by_x if k > 0):
        if -x in by_x:
            a, b = by_x[x], by_x[-x]
            joint = math.hypot(a["se"], b["se"])
            out.append({"x": x, "diff": a["mean"] - b["mean"], "joint_se": joint,
                        "within_2se": abs(a["mean"] - b["mean"]) <= 2 * joint})
    return out


def summarize_heat_kernel(params: dict, records: list[dict]):
    th = params["thresholds"]
    z = np.exp(np.array([r["log_Z"] for r in records]))
    rows, ok = kernel_comparison(params["points"], z, params["t_macro"],
                                 th["kernel_rel_tol"], th["kernel_se_mult"])
    return {"samples": len(records), "points": rows, "symmetry": symmetry_pairs(rows)}, ok


def heat_kernel_mean_test(epsilon: float, t_macro: float, n_samples: int, points,
                          root_seed: int = 0, lattice_extent="auto", step_origin: int = 1,
                          thresholds: dict | None = None):
    from ..config import DEFAULT_THRESHOLDS
    span = max(abs(x) for x in points)
    params = {"epsilon": epsilon, "t_macro": t_macro, "points": list(points),
              "root_seed": root_seed, "step_origin": step_origin,
              "window": {"a": -span, "b": span, "lattice_extent": lattice_extent},
              "thresholds": {**DEFAULT_THRESHOLDS, **(thresholds or {})}}
    records = [run_heat_kernel(params, r) for r in range(n_samples)]
    return summarize_heat_kernel(params, records)


def light_cone_extent(span: float, epsilon: float, t_macro: float, sigmas: float = 8.0) -> int:
    """Extent beyond which no influence from the window arrives by ``t/eps^2`` except with
    probability ``P(Poisson(T) > T + sigmas sqrt(T))``."""
    T = t_macro / epsilon ** 2
    return math.ceil(span / epsilon + T + sigmas * math.sqrt(T)) + 2


# Lipschitz perturbation -------------------------------------------------------------

def lipschitz_grid(a: float, b: float, n: int) -> list[float]:
    return [float(x) for x in np.round(np.linspace(a, b, n), 12)]


def run_lipschitz(params: dict, run_index: int) -> dict:
    sc = _scaling(params)
    window = resolve_window(params, sc.epsilon)
    seeds = seeding.run_seeds(params["root_seed"], run_index)
    phi = phi_from_spec(params["phi"])
    M = params.get("M", phi.lipschitz)
    ens = lipschitz_ensemble(phi, M, sc, window, seeds["stream"], seeds["uniforms"])
    th = params["thresholds"]
    record = {"run": run_index, "seeds": seeds, "lattice_extent": window.lattice_extent,
              "ordering_violation": None}
    try:
        evolve(ens, params["t_macro"] / sc.epsilon ** 2, [OrderingHook(LIPSCHITZ_ORDER)])
    except OrderingViolation as v:
        record["ordering_violation"] = {"event": v.event_index, "site": v.site,
                                        "pair": list(v.pair) if v.pair else None}
        return {**record, "increments_ordered": False, "increment_violations": -1,
                "quotient": None, "bound": None, "statistical_pass": False}
    grid = lipschitz_grid(window.a, window.b, params.get("grid_points", 11))
    rep = lipschitz_bound_check(ens, M, window, grid, sc, th["lipschitz_se_mult"],
                                th["lipschitz_slack_sqrt_eps"])
    return {**record, "increments_ordered": rep.increments_ordered,
            "increment_violations": rep.increment_violations, "quotient": rep.quotient,
            "bound": rep.bound, "statistical_pass": rep.statistical_pass}


def summarize_lipschitz(params: dict, records: list[dict]):
    th = params["thresholds"]
    n = len(records)
    quotients = [r["quotient"] for r in records if r["quotient"] is not None]
    agg = {"runs": n,
           "exact_fraction": sum(r["increments_ordered"] for r in records) / n,
           "statistical_fraction": sum(r["statistical_pass"] for r in records) / n,
           "max_quotient": max(quotients, default=None),
           "median_quotient": float(np.median(quotients)) if quotients else None}
    return agg, (agg["exact_fraction"] == 1.0
                 and agg["statistical_fraction"] >= th["lipschitz_pass_fraction"])


# exact oracle ----------------------------------------------------------------------

def oracle_initial(n_sites: int, spec: dict) -> np.ndarray:
    kind = spec.get("kind", "product")
    if kind == "product":
        return product_law(n_sites, spec.get("density", 0.5))
    if kind == "sector":
        return uniform_sector(n_sites, spec["particles"])
    if kind == "point":
        return point_mass(n_sites, list(spec["occupied"]))
    raise ValueError(f"unknown initial law {kind!r}")


def _oracle_scaling(o: dict) -> ScalingConstants:
    if o.get("symmetric", False):
        return ScalingConstants.symmetric()
    return scaling_constants(o["epsilon"])


def _oracle_window(o: dict) -> WindowSpec:
    n = o["n_sites"]
    if Topology(o.get("topology", "ring")) is Topology.RING:
        return WindowSpec.ring(n)
    if n % 2 == 0:
        raise ValueError("segment oracle windows need an odd number of sites")
    return WindowSpec(a=-1.0, b=1.0, lattice_extent=n // 2)


def sample_states(window: WindowSpec, scaling: ScalingConstants, t_micro: float,
                  initial: np.ndarray, samples: int, seed: int) -> np.ndarray:
    """Histogram over bit-mask states of independent simulator runs to ``t_micro``."""
    n = window.n_sites
    rng = np.random.default_rng(seed)
    starts = rng.choice(2 ** n, size=samples, p=initial / initial.sum())
    bits = np.arange(n, dtype=np.uint64)
    weights = (np.uint64(1) << bits)
    counts = np.zeros(2 ** n, dtype=np.int64)
    template = SiteConfiguration(np.zeros(n, dtype=np.uint8), window)
    for i, s in enumerate(starts):
        stream = EventStream((seed + i + 1) & 0xFFFFFFFFFFFFFFFF, scaling, window)
        ens = CoupledEnsemble({"x": template}, stream)
        ens.packed[:] = (np.uint64(s) >> bits) & np.uint64(1)
        evolve(ens, t_micro)
        counts[int((ens.packed * weights).sum())] += 1
    return counts


def run_oracle(params: dict, run_index: int) -> dict:
    o = params["oracle"]
    window = _oracle_window(o)
    sc = _oracle_scaling(o)
    pi0 = oracle_initial(window.n_sites, o.get("initial", {"kind": "product"}))
    total, runs = o["samples"], params["runs"]
    share = total // runs + (1 if run_index < total % runs else 0)
    seed = seeding.derive_seed(params["root_seed"], run_index)
    counts = sample_states(window, sc, o["t_micro"], pi0, share, seed)
    return {"run": run_index, "seed": seed, "samples": share, "counts": counts.tolist()}


run_equilibrium = run_oracle


def summarize_oracle(params: dict, records: list[dict]):
    th = params["thresholds"]
    o = params["oracle"]
    window = _oracle_window(o)
    sc = _oracle_scaling(o)
    n = window.n_sites
    pi0 = oracle_initial(n, o.get("initial", {"kind": "product"}))
    exact = exact_distribution(OracleSpec(n, window.topology, sc, o["t_micro"], pi0))
    counts = np.sum([r["counts"] for r in records], axis=0)
    emp = counts / counts.sum()
    G = generator(n, window.topology, sc)
    row_err = float(np.abs(np.asarray(G.sum(axis=1)).ravel()).max())
    agg = {"samples": int(counts.sum()), "tv": tv_distance(emp, exact),
           "tv_noise_floor": tv_noise_floor(exact, int(counts.sum())),
           "generator_row_sum_max": row_err, "exact_mass_error": abs(float(exact.sum()) - 1.0),
           "exact": exact.tolist()}
    passed = (agg["tv"] < th["oracle_tv"] and row_err <= th["generator_row_tol"]
              and agg["exact_mass_error"] <= th["probability_tol"])
    if window.topology is Topology.RING:
        inv = 0.0
        for k in range(n + 1):
            pi = uniform_sector(n, k)
            out = exact_distribution(OracleSpec(n, window.topology, sc, o["t_micro"], pi))
            inv = max(inv, float(np.abs(out - pi).max()))
        agg["sector_invariance_error"] = inv
        passed = passed and inv <= th["sector_invariance_tol"]
    return agg, passed


summarize_equilibrium = summarize_oracle


def equilibrium_invariance_test(scaling: ScalingConstants, n_sites: int, t_micro: float,
                                samples: int, particles: int | None = 2, root_seed: int = 0,
                                thresholds: dict | None = None):
    """MC from an invariant law on a ring vs the exact law at ``t_micro``.

    ``particles=None`` starts from the density-1/2 product measure (all sectors);
    an integer starts uniform on that particle sector.
    """
    from ..config import DEFAULT_THRESHOLDS
    window = WindowSpec.ring(n_sites)
    init = uniform_sector(n_sites, particles) if particles is not None else product_law(n_sites)
    seed = seeding.derive_seed(root_seed, 0)
    counts = sample_states(window, scaling, t_micro, init, samples, seed)
    exact = exact_distribution(OracleSpec(n_sites, Topology.RING, scaling, t_micro, init))
    th = {**DEFAULT_THRESHOLDS, **(thresholds or {})}
    emp = counts / counts.sum()
    tv = tv_distance(emp, exact)
    return {"tv": tv, "tv_noise_floor": tv_noise_floor(exact, samples),
            "invariance_error": float(np.abs(exact - init).max()),
            "pass": tv < th["oracle_tv"]}


# stochastic heat equation -------------------------------------------------------------

def _she_grid(params: dict) -> she.SheGrid:
    s = params["she"]
    return she.SheGrid.for_horizon(s["dx"], s["dt"], params["t_macro"])


def she_tv(h_delta: np.ndarray, h_eq: np.ndarray, grid: she.SheGrid, a: float, b: float):
    """TV on ``[a, b]`` of ``H - (H_eq - H_eq(0))`` along the last axis."""
    x = grid.x
    sel = (x >= a - 1e-12) & (x <= b + 1e-12)
    i0 = grid.index(0.0)
    diff = h_delta - (h_eq - h_eq[..., i0:i0 + 1])
    return np.abs(np.diff(diff[..., sel], axis=-1)).sum(axis=-1)


def run_she(params: dict, run_index: int) -> dict:
    grid = _she_grid(params)
    s = params["she"]
    n_paths = s["paths_per_run"]
    noise_seed = seeding.derive_seed(params["root_seed"], run_index, seeding.NOISE)
    b_seed = seeding.derive_seed(params["root_seed"], run_index, seeding.BROWNIAN)
    phi = phi_from_spec(s["phi"]) if s.get("phi") else None
    z_eq = she.brownian_data(grid, b_seed, phi, n_paths=n_paths)
    z_delta = np.broadcast_to(she.delta_data(grid), z_eq.shape)
    traj = she.integrate_she(grid, noise_seed, np.stack([z_delta, z_eq], axis=1), n_paths)
    final = traj.final
    idx = [grid.index(x) for x in params["points"]]
    interior = final[..., 1:-1]
    positive = bool(np.all(interior > 0))
    w = params["window"]
    tv = (she_tv(she.log_field(interior[:, 0]), she.log_field(interior[:, 1]),
                 _interior_grid(grid), w["a"], w["b"]).tolist() if positive else [])
    return {"run": run_index, "noise_seed": noise_seed, "brownian_seed": b_seed,
            "Z": final[:, 0, idx].tolist(), "tv": tv, "positive": positive,
            "clamped": traj.clamped, "updates": traj.updates}


class _interior_grid:
    """Grid view with the two Dirichlet cells dropped."""

    def __init__(self, grid: she.SheGrid):
        self.x = grid.x[1:-1]
        self._g = grid

    def index(self, x: float) -> int:
        return self._g.index(x) - 1


def summarize_she(params: dict, records: list[dict]):
    th = params["thresholds"]
    grid = _she_grid(params)
    z = np.array([row for r in records for row in r["Z"]])
    rows, kernel_ok = kernel_comparison(params["points"], z, params["t_macro"],
                                        th["kernel_rel_tol"], th["kernel_se_mult"])
    zero = she.integrate_she(grid, 0, she.delta_data(grid), noise=False).final[0, 0]
    err0 = float(zero[grid.index(0.0)] - she.heat_kernel(params["t_macro"], 0.0))
    clamped = sum(r["clamped"] for r in records)
    updates = sum(r["updates"] for r in records)
    tvs = [v for r in records for v in r["tv"]]
    agg = {"paths": int(z.shape[0]), "points": rows, "zero_noise_error_at_0": err0,
           "clamp_fraction": clamped / max(updates, 1),
           "positive": all(r["positive"] for r in records),
           "tv": quantiles(tvs) if tvs else None}
    passed = (kernel_ok and abs(err0) <= th["she_zero_noise_tol"]
              and agg["clamp_fraction"] < th["she_clamp_fraction"] and agg["positive"])
    return agg, passed


# buffer adequacy ---------------------------------------------------------------------

def buffer_doubling_check(epsilon: float, t_macro: float, a: float, b: float, seeds: int = 20,
                          lattice_extent: int | None = None, root_seed: int = 0) -> dict:
    """Compare window observables on extents ``L`` and ``2L`` driven by one master stream.

    Both lattices draw events and uniforms on the ``2L`` lattice, so any difference
    comes from the boundary at ``L``.  Each observable passes when the mean absolute
    change stays below its Monte Carlo standard error across seeds.
    """
    sc = scaling_constants(epsilon, unit_gamma=True)
    L = lattice_extent or auto_extent(a, b, epsilon, t_macro)
    small = WindowSpec(a, b, L)
    big = WindowSpec(a, b, 2 * L)
    names = ("count", "rhs_int", "tv_int", "flux_step", "flux_eq", "h_step_b", "h_eq_a")
    rows = {n: [] for n in names}
    changes = {n: [] for n in names}
    for r in range(seeds):
        sd = seeding.run_seeds(root_seed, r)
        obs = []
        for w in (small, big):
            ens = proposition_ensemble(sc, w, sd["stream"], sd["uniforms"], master_extent=2 * L)
            evolve(ens, t_macro / epsilon ** 2)
            rep = proposition_report(ens.configuration("step"), ens.configuration("eq"),
                                     ens.height("max"), ens.height("min"), sc, w, t_macro)
            hs, he = ens.height("step"), ens.height("eq")
            lo_site = math.ceil(a / epsilon)
            hi_site = math.floor(b / epsilon)
            obs.append({"count": rep.count, "rhs_int": rep.rhs_int,
                        "tv_int": tv_integer(hs, he, a, b, epsilon),
                        "flux_step": ens.flux("step").net_crossings,
                        "flux_eq": ens.flux("eq").net_crossings,
                        "h_step_b": hs.at(hi_site), "h_eq_a": he.at(lo_site)})
        for n in names:
            rows[n].append(obs[1][n])
            changes[n].append(obs[1][n] - obs[0][n])
    report = {}
    for n in names:
        vals = np.array(rows[n], dtype=float)
        se = float(vals.std(ddof=1) / math.sqrt(seeds)) if seeds > 1 else math.inf
        change = float(np.mean(np.abs(changes[n])))
        report[n] = {"mean_abs_change": change, "se": se, "pass": change < se or change == 0.0}
    report["pass"] = all(v["pass"] for v in report.values() if isinstance(v, dict))
    report["lattice_extent"] = L
    return report


RUNNERS = {
    "proposition": (run_proposition, summarize_proposition),
    "ordering": (run_ordering, summarize_ordering),
    "epsilon-scan": (run_epsilon_scan, summarize_epsilon_scan),
    "heat-kernel": (run_heat_kernel, summarize_heat_kernel),
    "lipschitz": (run_lipschitz, summarize_lipschitz),
    "equilibrium": (run_equilibrium, summarize_equilibrium),
    "oracle": (run_oracle, summarize_oracle),
    "she": (run_she, summarize_she),
}


def n_runs(params: dict) -> int:
    if params["experiment"] == "epsilon-scan":
        return params["runs"] * len(params["epsilons"])
    return params["runs"]
