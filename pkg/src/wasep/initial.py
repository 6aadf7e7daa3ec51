"""Initial configurations: step, product measures, meets/joins, Lipschitz profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .lattice import SiteConfiguration, Topology, WindowSpec


@dataclass
class DensityProfile:
    densities: np.ndarray
    window: WindowSpec

    def __post_init__(self):
        rho = np.asarray(self.densities, dtype=float)
        if rho.shape != (self.window.n_sites,):
            raise ValueError(f"expected {self.window.n_sites} densities, got {rho.shape}")
        if rho.size and (rho.min() < 0.0 or rho.max() > 1.0):
            raise ValueError("densities must lie in [0, 1]")
        self.densities = rho

    @classmethod
    def constant(cls, rho: float, window: WindowSpec) -> "DensityProfile":
        return cls(np.full(window.n_sites, float(rho)), window)


@dataclass
class UniformField:
    """One uniform per site, shared by every product-measure replica of a run."""

    u: np.ndarray
    window: WindowSpec

    @classmethod
    def draw(cls, window: WindowSpec, seed, master_extent: int | None = None) -> "UniformField":
        """Uniforms keyed by site: drawn on ``[-M, M]`` and cut down to the window.

        Windows of different extents sharing ``seed`` and ``M`` agree on common sites.
        """
        m = master_extent or window.lattice_extent
        if window.topology is Topology.RING or m == window.lattice_extent:
            return cls(np.random.default_rng(seed).random(window.n_sites), window)
        if m < window.lattice_extent:
            raise ValueError("master_extent must cover the window")
        u = np.random.default_rng(seed).random(2 * m + 1)
        lo = m - window.lattice_extent
        return cls(u[lo:lo + window.n_sites], window)


def step_profile(window: WindowSpec, origin: int = 0) -> SiteConfiguration:
    """``eta(x) = 1{x >= origin}``.

    ``origin=0`` is the step used throughout the coupling arguments; ``origin=1``
    gives the symmetric wedge ``h(0, x) = |x|``.
    """
    if window.topology is Topology.RING:
        raise ValueError("step data needs a segment")
    return SiteConfiguration((window.sites >= origin).astype(np.uint8), window)


def product_measure(profile: DensityProfile, uniforms: UniformField) -> SiteConfiguration:
    if profile.window != uniforms.window:
        raise ValueError("profile and uniforms live on different windows")
    return SiteConfiguration((uniforms.u < profile.densities).astype(np.uint8), profile.window)


def sitewise_meet_join(c1: SiteConfiguration, c2: SiteConfiguration):
    if c1.window != c2.window:
        raise ValueError("configurations live on different windows")
    return (SiteConfiguration(np.minimum(c1.occupancy, c2.occupancy), c1.window),
            SiteConfiguration(np.maximum(c1.occupancy, c2.occupancy), c1.window))


# Lipschitz perturbations ---------------------------------------------------------

class Phi(NamedTuple):
    """A Lipschitz function together with its declared Lipschitz constant."""

    func: Callable[[np.ndarray], np.ndarray]
    lipschitz: float
    spec: dict


def linear_phi(slope: float) -> Phi:
    return Phi(lambda s: slope * np.asarray(s, dtype=float), abs(slope),
               {"kind": "linear", "slope": slope})


def sine_phi(amplitude: float, period: float) -> Phi:
    k = 2 * math.pi / period
    return Phi(lambda s: amplitude * np.sin(k * np.asarray(s, dtype=float)),
               abs(amplitude) * k, {"kind": "sine", "amplitude": amplitude, "period": period})


def piecewise_phi(breakpoints: Sequence[Sequence[float]]) -> Phi:
    """Linear interpolation through ``(position, value)`` pairs, flat outside."""
    pts = sorted((float(x), float(y)) for x, y in breakpoints)
    if len(pts) < 2:
        raise ValueError("need at least two breakpoints")
    xs = np.array([x for x, _ in pts])
    ys = np.array([y for _, y in pts])
    if np.any(np.diff(xs) <= 0):
        raise ValueError("breakpoint positions must be distinct")
    m = float(np.max(np.abs(np.diff(ys) / np.diff(xs))))
    return Phi(lambda s: np.interp(np.asarray(s, dtype=float), xs, ys), m,
               {"kind": "piecewise", "breakpoints": [list(p) for p in pts]})


def phi_from_spec(spec: dict) -> Phi:
    kind = spec.get("kind")
    if kind == "zero":
        return Phi(lambda s: np.zeros_like(np.asarray(s, dtype=float)), 0.0, {"kind": "zero"})
    if kind == "linear":
        return linear_phi(spec["slope"])
    if kind == "sine":
        return sine_phi(spec["amplitude"], spec["period"])
    if kind == "piecewise":
        return piecewise_phi(spec["breakpoints"])
    raise ValueError(f"unknown phi kind {kind!r}")


class LipschitzProfiles(NamedTuple):
    phi: DensityProfile
    plus: DensityProfile
    minus: DensityProfile


def lipschitz_profile(phi, M: float, epsilon: float, window: WindowSpec) -> LipschitzProfiles:
    """Density ``rho(x+1) = 1/2 + (phi(eps x) - phi(eps (x-1))) / (2 sqrt(eps))``.

    ``phi`` is a callable or a ``Phi``.  The Lipschitz bound ``M`` is checked on the
    window's lattice points (plus their midpoints) before any density is built;
    the extremal profiles ``(1 +- sqrt(eps) M) / 2`` come back alongside.
    """
    f = phi.func if isinstance(phi, Phi) else phi
    if M < 0:
        raise ValueError("Lipschitz constant must be non-negative")
    s = math.sqrt(epsilon)
    if s * M > 1.0:
        raise ValueError(f"sqrt(eps) * M = {s * M:.3g} > 1: densities leave [0, 1]")
    x = window.sites.astype(float)
    grid = epsilon * np.concatenate(([x[0] - 2], x - 1, x - 0.5))
    grid.sort()
    vals = np.asarray(f(grid), dtype=float)
    slopes = np.abs(np.diff(vals)) / np.diff(grid)
    if slopes.size and slopes.max() > M * (1 + 1e-9) + 1e-12:
        raise ValueError(f"phi has slope {slopes.max():.6g} on the window, exceeding M = {M}")
    # density at site x uses phi at eps (x - 1) and eps (x - 2)
    rho = 0.5 + 0.5 / s * (np.asarray(f(epsilon * (x - 1)), dtype=float)
                           - np.asarray(f(epsilon * (x - 2)), dtype=float))
    lo, hi = 0.5 * (1 - s * M), 0.5 * (1 + s * M)
    if rho.min() < lo - 1e-9 or rho.max() > hi + 1e-9:
        raise ValueError("density profile leaves [(1 - sqrt(eps) M)/2, (1 + sqrt(eps) M)/2]")
    # rounding must not break the sandwich minus <= phi <= plus under shared uniforms
    rho = np.clip(rho, lo, hi)
    return LipschitzProfiles(DensityProfile(rho, window), DensityProfile.constant(hi, window),
                             DensityProfile.constant(lo, window))
