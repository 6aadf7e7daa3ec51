"""Rescaled heights, microscopic Hopf-Cole transforms and discrepancy statistics.

Increments over an observation interval ``[a, b]`` always run from the site just
left of ``ceil(a/eps)`` to ``floor(b/eps)``, so that every observed site contributes
its spin once.  With that convention the counting identities below are exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .lattice import (HeightField, ScalingConstants, SiteConfiguration, WindowSpec,
                      lattice_point, observation_sites)


class Discrepancy(NamedTuple):
    count: int
    value: float


@dataclass(frozen=True)
class PropositionReport:
    """Both sides of the discrepancy bound at one sample time.

    ``lhs = sqrt(eps) * count`` and ``rhs = sqrt(eps) * rhs_int / 2``; the verdict
    compares ``2 * count`` with ``rhs_int`` as integers.
    """

    t_macro: float
    count: int
    rhs_int: int
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def equality(self) -> bool:
        return 2 * self.count == self.rhs_int

    @property
    def passed(self) -> bool:
        return 2 * self.count <= self.rhs_int


def _site_in_window(window: WindowSpec, x: int) -> None:
    if not window.first_site <= x <= window.last_site:
        raise ValueError(f"lattice point {x} lies outside [{window.first_site}, {window.last_site}]")


def closure_sites(a: float, b: float, epsilon: float) -> tuple[int, int]:
    """Endpoints ``(x_a - 1, x_b)`` of the lattice path covering ``[a, b]``."""
    lo, hi = observation_sites(a, b, epsilon)
    if hi < lo:
        raise ValueError(f"[{a}, {b}] contains no lattice site at eps={epsilon}")
    return lo - 1, hi


def rescaled_height(h: HeightField, scaling: ScalingConstants, x: float) -> float:
    """``sqrt(eps) * h(trunc(x / eps))``."""
    site = lattice_point(x, scaling.epsilon)
    _site_in_window(h.window, site)
    return scaling.sqrt_eps * h.at(site)


def log_hopf_cole(h: HeightField, scaling: ScalingConstants, t_macro: float, x: float,
                  unit_gamma: bool = False) -> float:
    site = lattice_point(x, scaling.epsilon)
    _site_in_window(h.window, site)
    gamma = 1.0 if unit_gamma else 0.5 / scaling.sqrt_eps
    return (math.log(gamma) - scaling.lam * h.at(site)
            + scaling.v * t_macro / scaling.epsilon ** 2)


def hopf_cole(h: HeightField, scaling: ScalingConstants, t_macro: float, x: float,
              unit_gamma: bool = False) -> float:
    """``gamma * exp(-lam * h(x/eps) + v * t / eps^2)``; the drift uses microscopic time."""
    return math.exp(log_hopf_cole(h, scaling, t_macro, x, unit_gamma))


def height_from_hopf_cole(log_z: float, scaling: ScalingConstants, t_macro: float,
                          unit_gamma: bool = False) -> float:
    """Invert ``log_hopf_cole`` back to the rescaled height."""
    gamma = 1.0 if unit_gamma else 0.5 / scaling.sqrt_eps
    s_over_lam = scaling.sqrt_eps / scaling.lam
    return (-s_over_lam * (log_z - math.log(gamma))
            + s_over_lam * scaling.v * t_macro / scaling.epsilon ** 2)


def discrepancy_sum(c1: SiteConfiguration, c2: SiteConfiguration, scaling: ScalingConstants,
                    window: WindowSpec) -> Discrepancy:
    """``sqrt(eps) * #{x in [a/eps, b/eps] : c1(x) != c2(x)}``."""
    if c1.window != c2.window or c1.window != window:
        raise ValueError("configurations and window disagree")
    lo, hi = observation_sites(window.a, window.b, scaling.epsilon)
    _site_in_window(window, lo)
    _site_in_window(window, hi)
    sl = slice(window.index(lo), window.index(hi) + 1)
    count = int(np.count_nonzero(c1.occupancy[sl] != c2.occupancy[sl]))
    return Discrepancy(count, scaling.sqrt_eps * count)


def interval_increment(h: HeightField, a: float, b: float, epsilon: float) -> int:
    left, right = closure_sites(a, b, epsilon)
    _site_in_window(h.window, left)
    _site_in_window(h.window, right)
    return h.at(right) - h.at(left)


def proposition_rhs_int(h_max: HeightField, h_min: HeightField, scaling: ScalingConstants,
                        a: float, b: float) -> int:
    if h_max.window != h_min.window:
        raise ValueError("height fields live on different windows")
    e = scaling.epsilon
    return interval_increment(h_max, a, b, e) - interval_increment(h_min, a, b, e)


def proposition_rhs(h_max: HeightField, h_min: HeightField, scaling: ScalingConstants,
                    a: float, b: float) -> float:
    """Half the max-minus-min difference of rescaled interval increments."""
    return scaling.sqrt_eps * proposition_rhs_int(h_max, h_min, scaling, a, b) / 2


def proposition_report(step: SiteConfiguration, eq: SiteConfiguration, h_max: HeightField,
                       h_min: HeightField, scaling: ScalingConstants, window: WindowSpec,
                       t_macro: float) -> PropositionReport:
    d = discrepancy_sum(step, eq, scaling, window)
    r = proposition_rhs_int(h_max, h_min, scaling, window.a, window.b)
    return PropositionReport(t_macro, d.count, r, d.value, scaling.sqrt_eps * r / 2)


def total_variation(f, interval: tuple[float, float] | None = None, grid=None) -> float:
    """Sum of absolute increments of ``f`` over the grid points inside ``interval``."""
    f = np.asarray(f)
    if grid is not None and interval is not None:
        g = np.asarray(grid, dtype=float)
        f = f[(g >= interval[0]) & (g <= interval[1])]
    if f.size < 2:
        raise ValueError("total variation needs at least two grid points")
    return float(np.abs(np.diff(f)).sum())


def height_difference_path(h: HeightField, h_ref: HeightField, a: float, b: float,
                           epsilon: float) -> np.ndarray:
    """Integer path ``h - h_ref`` on the closure sites of ``[a, b]``."""
    left, right = closure_sites(a, b, epsilon)
    _site_in_window(h.window, left)
    _site_in_window(h.window, right)
    sl = slice(h.window.index(left), h.window.index(right) + 1)
    return np.asarray(h.values[sl], dtype=np.int64) - np.asarray(h_ref.values[sl], dtype=np.int64)


def tv_integer(h: HeightField, h_eq: HeightField, a: float, b: float, epsilon: float) -> int:
    """``TV(h - h_eq)`` over the interval in lattice units; times ``sqrt(eps)`` it is the rescaled TV."""
    return int(total_variation(height_difference_path(h, h_eq, a, b, epsilon)))


OBSERVABLE_COLUMNS = ("replica", "t_macro", "x_macro", "h", "h_tilde", "Z")


def observable_rows(heights: dict[str, HeightField], scaling: ScalingConstants, t_macro: float,
                    points: Iterable[float], unit_gamma: bool = True) -> list[dict]:
    rows = []
    for name, h in heights.items():
        for x in points:
            site = lattice_point(x, scaling.epsilon)
            rows.append({
                "replica": name, "t_macro": t_macro, "x_macro": x, "h": h.at(site),
                "h_tilde": rescaled_height(h, scaling, x),
                "Z": hopf_cole(h, scaling, t_macro, x, unit_gamma=unit_gamma),
            })
    return rows


def write_observables_csv(path, rows: Iterable[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=OBSERVABLE_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
