"""Pathwise checks on coupled ensembles: discrepancy bound, orderings, Lipschitz sandwich."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..dynamics import CoupledEnsemble, EventStream, OrderingHook, evolve
from ..initial import (DensityProfile, UniformField, lipschitz_profile, product_measure,
                       sitewise_meet_join, step_profile)
from ..lattice import ScalingConstants, WindowSpec, lattice_point
from ..observables import PropositionReport, proposition_report

PROPOSITION_REPLICAS = ("step", "eq", "min", "max")
# min <= step ^ eq <= step, eq <= step v eq <= max, as pairs of replicas
PROPOSITION_ORDER = (("min", "step"), ("min", "eq"), ("step", "max"), ("eq", "max"))

LIPSCHITZ_REPLICAS = ("min", "max", "eq", "plus", "minus", "phi")
LIPSCHITZ_ORDER = (("minus", "min"), ("min", "phi"), ("min", "eq"), ("phi", "max"),
                   ("eq", "max"), ("max", "plus"), ("minus", "phi"), ("phi", "plus"),
                   ("minus", "eq"), ("eq", "plus"))


def proposition_ensemble(scaling: ScalingConstants, window: WindowSpec, stream_seed: int,
                         uniform_seed: int, master_extent: int | None = None) -> CoupledEnsemble:
    """``step``, ``eq`` (density 1/2), and their sitewise meet/join on one stream."""
    window.check_scale(scaling.epsilon)
    step = step_profile(window)
    u = UniformField.draw(window, uniform_seed, master_extent)
    eq = product_measure(DensityProfile.constant(0.5, window), u)
    lo, hi = sitewise_meet_join(step, eq)
    stream = EventStream(stream_seed, scaling, window, master_extent)
    return CoupledEnsemble({"step": step, "eq": eq, "min": lo, "max": hi}, stream)


def lipschitz_ensemble(phi, M: float, scaling: ScalingConstants, window: WindowSpec,
                       stream_seed: int, uniform_seed: int) -> CoupledEnsemble:
    window.check_scale(scaling.epsilon)
    prof = lipschitz_profile(phi, M, scaling.epsilon, window)
    u = UniformField.draw(window, uniform_seed)
    eq = product_measure(DensityProfile.constant(0.5, window), u)
    c_phi = product_measure(prof.phi, u)
    lo, hi = sitewise_meet_join(c_phi, eq)
    stream = EventStream(stream_seed, scaling, window)
    return CoupledEnsemble({"min": lo, "max": hi, "eq": eq, "plus": product_measure(prof.plus, u),
                            "minus": product_measure(prof.minus, u), "phi": c_phi}, stream)


def _require(ensemble: CoupledEnsemble, names: Sequence[str]) -> None:
    missing = [n for n in names if n not in ensemble.names]
    if missing:
        raise KeyError(f"ensemble lacks replicas {missing}")


def check_proposition(ensemble: CoupledEnsemble, window: WindowSpec, scaling: ScalingConstants,
                      sample_times: Sequence[float], order_hook: bool = False
                      ) -> list[PropositionReport]:
    """Evolve through the macroscopic ``sample_times`` and compare both sides at each."""
    _require(ensemble, PROPOSITION_REPLICAS)
    hooks = [OrderingHook(PROPOSITION_ORDER)] if order_hook else []
    reports = []
    for t in sorted(sample_times):
        t_micro = t / scaling.epsilon ** 2
        if t_micro < ensemble.time:
            raise ValueError(f"sample time {t} precedes the ensemble clock")
        evolve(ensemble, t_micro - ensemble.time, hooks)
        reports.append(proposition_report(
            ensemble.configuration("step"), ensemble.configuration("eq"),
            ensemble.height("max"), ensemble.height("min"), scaling, window, t))
    return reports


@dataclass
class OrderingResult:
    passed: bool
    checked: list[tuple[str, str]] = field(default_factory=list)
    skipped: list[tuple[str, str]] = field(default_factory=list)
    violation: dict | None = None


def check_ordering(ensemble: CoupledEnsemble, pairs: Sequence[tuple[str, str]]) -> OrderingResult:
    """Sitewise ``lo <= hi`` for every declared pair.

    Pairs whose initial configurations were not ordered are skipped, not failed.
    """
    res = OrderingResult(True)
    for a, b in pairs:
        ia, ib = ensemble._bit(a), ensemble._bit(b)
        init = ensemble.initial_packed
        lo0 = (init >> np.uint64(ia)) & np.uint64(1)
        hi0 = (init >> np.uint64(ib)) & np.uint64(1)
        if np.any(lo0 > hi0):
            res.skipped.append((a, b))
            continue
        res.checked.append((a, b))
        bad = ensemble.first_violation([(a, b)])
        if bad is not None and res.passed:
            site, _ = bad
            res.passed = False
            res.violation = {"site": site, "time": ensemble.time, "pair": [a, b],
                             "neighbourhood": ensemble.neighbourhood(site)}
    return res


@dataclass
class LipschitzReport:
    increments_ordered: bool
    increment_violations: int
    quotient: float
    slack: float
    bound: float

    @property
    def statistical_pass(self) -> bool:
        return self.quotient <= self.bound


def grid_standard_error(M: float, epsilon: float, spacing: float) -> float:
    """Standard deviation of one grid-cell quotient of ``h~ - h~eq``.

    Under shared uniforms the two replicas differ on a site with probability at most
    ``rho_d = sqrt(eps) M / 2``; a cell of width ``spacing`` spans ``spacing/eps``
    sites and each discrepancy moves the rescaled difference by ``2 sqrt(eps)``.
    """
    rho_d = 0.5 * math.sqrt(epsilon) * M
    n = spacing / epsilon
    return 2 * math.sqrt(epsilon) * math.sqrt(n * rho_d * (1 - rho_d)) / spacing


def lipschitz_bound_check(ensemble: CoupledEnsemble, M: float, window: WindowSpec,
                          grid: Sequence[float], scaling: ScalingConstants,
                          se_mult: float = 4.0, sqrt_eps_mult: float = 2.0) -> LipschitzReport:
    """Exact increment sandwich on all grid pairs plus the empirical Lipschitz quotient."""
    _require(ensemble, ("minus", "phi", "plus", "eq"))
    e = scaling.epsilon
    grid = sorted(grid)
    sites = [lattice_point(g, e) for g in grid]
    hm, h, hp, heq = (ensemble.height(n) for n in ("minus", "phi", "plus", "eq"))
    vm = np.array([hm.at(s) for s in sites])
    v = np.array([h.at(s) for s in sites])
    vp = np.array([hp.at(s) for s in sites])
    veq = np.array([heq.at(s) for s in sites])
    bad = 0
    quotient = 0.0
    for i, j in itertools.combinations(range(len(sites)), 2):
        dm, d, dp = vm[j] - vm[i], v[j] - v[i], vp[j] - vp[i]
        if not dm <= d <= dp:
            bad += 1
        diff = (v[j] - veq[j]) - (v[i] - veq[i])
        quotient = max(quotient, math.sqrt(e) * abs(int(diff)) / (grid[j] - grid[i]))
    spacing = min(b - a for a, b in zip(grid, grid[1:]))
    slack = sqrt_eps_mult * math.sqrt(e) + se_mult * grid_standard_error(M, e, spacing)
    return LipschitzReport(bad == 0, bad, quotient, slack, M + slack)
