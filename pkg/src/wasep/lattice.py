"""Lattice windows, occupancy configurations, height fields and scaling constants."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Topology(str, Enum):
    SEGMENT = "reflecting-segment"
    RING = "ring"


def lattice_point(x: float, epsilon: float) -> int:
    """Lattice site of the macroscopic point ``x``, rounded toward zero.

    Quotients within 1e-9 of an integer snap to it, so ``0.3 / 0.1`` maps to 3.
    """
    r = x / epsilon
    n = round(r)
    if abs(r - n) <= 1e-9 * max(1.0, abs(r)):
        return int(n)
    return math.trunc(r)


def observation_sites(a: float, b: float, epsilon: float) -> tuple[int, int]:
    """First and last lattice site of ``[a/eps, b/eps] ∩ Z``."""
    ra, rb = a / epsilon, b / epsilon
    na, nb = round(ra), round(rb)
    lo = int(na) if abs(ra - na) <= 1e-9 * max(1.0, abs(ra)) else math.ceil(ra)
    hi = int(nb) if abs(rb - nb) <= 1e-9 * max(1.0, abs(rb)) else math.floor(rb)
    return lo, hi


@dataclass(frozen=True)
class WindowSpec:
    """Observation interval ``[a, b]`` (macroscopic) and the simulated lattice.

    Sites run from ``-lattice_extent`` to ``-lattice_extent + n_sites - 1``.  On the
    reflecting segment ``n_sites`` is always ``2 * lattice_extent + 1``; rings may
    choose any size (``WindowSpec.ring``).
    """

    a: float
    b: float
    lattice_extent: int
    topology: Topology = Topology.SEGMENT
    n_sites: int = field(default=0)

    def __post_init__(self):
        object.__setattr__(self, "topology", Topology(self.topology))
        if self.lattice_extent < 1:
            raise ValueError(f"lattice_extent must be positive, got {self.lattice_extent}")
        if not self.a < self.b:
            raise ValueError(f"need a < b, got a={self.a}, b={self.b}")
        n = self.n_sites or 2 * self.lattice_extent + 1
        if self.topology is Topology.SEGMENT and n != 2 * self.lattice_extent + 1:
            raise ValueError("segment windows span [-L, L]; n_sites cannot be overridden")
        if n < 2:
            raise ValueError("need at least two sites")
        object.__setattr__(self, "n_sites", n)

    @classmethod
    def ring(cls, n_sites: int) -> "WindowSpec":
        return cls(a=-1.0, b=1.0, lattice_extent=max(1, n_sites // 2),
                   topology=Topology.RING, n_sites=n_sites)

    @classmethod
    def auto(cls, a: float, b: float, epsilon: float, t_macro: float,
             buffer_factor: float = 3.0) -> "WindowSpec":
        """Segment sized by ``L = ceil(max(|a|,|b|)/eps + buffer_factor * t/eps^2)``."""
        L = auto_extent(a, b, epsilon, t_macro, buffer_factor)
        return cls(a=a, b=b, lattice_extent=L)

    @property
    def first_site(self) -> int:
        return -self.lattice_extent

    @property
    def last_site(self) -> int:
        return self.first_site + self.n_sites - 1

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.first_site, self.last_site + 1)

    @property
    def n_bonds(self) -> int:
        return self.n_sites if self.topology is Topology.RING else self.n_sites - 1

    def index(self, x: int) -> int:
        if not self.first_site <= x <= self.last_site:
            raise IndexError(f"site {x} outside lattice [{self.first_site}, {self.last_site}]")
        return x - self.first_site

    def check_scale(self, epsilon: float) -> None:
        """Raise unless the observation window sits strictly inside the lattice."""
        if self.topology is Topology.RING:
            return
        L = self.lattice_extent
        if math.ceil(abs(self.a) / epsilon) >= L or math.ceil(abs(self.b) / epsilon) >= L:
            raise ValueError(
                f"window [{self.a}, {self.b}] at eps={epsilon} does not fit inside [-{L}, {L}]")


def auto_extent(a: float, b: float, epsilon: float, t_macro: float,
                buffer_factor: float = 3.0) -> int:
    return math.ceil(max(abs(a), abs(b)) / epsilon + buffer_factor * t_macro / epsilon ** 2)


@dataclass
class SiteConfiguration:
    """Occupancy bits ``eta(x)`` over the sites of ``window``."""

    occupancy: np.ndarray
    window: WindowSpec

    def __post_init__(self):
        occ = np.asarray(self.occupancy)
        if occ.shape != (self.window.n_sites,):
            raise ValueError(f"expected {self.window.n_sites} sites, got shape {occ.shape}")
        if occ.size and (occ.min() < 0 or occ.max() > 1):
            raise ValueError("occupancy entries must be 0 or 1")
        self.occupancy = occ.astype(np.uint8)

    @property
    def topology(self) -> Topology:
        return self.window.topology

    def spins(self) -> np.ndarray:
        return 2 * self.occupancy.astype(np.int64) - 1

    @property
    def n_particles(self) -> int:
        return int(self.occupancy.sum())

    def at(self, x: int) -> int:
        return int(self.occupancy[self.window.index(x)])

    def leq(self, other: "SiteConfiguration") -> bool:
        """Sitewise ordering ``self <= other``."""
        _same_window(self, other)
        return bool(np.all(self.occupancy <= other.occupancy))

    def __eq__(self, other):
        if not isinstance(other, SiteConfiguration):
            return NotImplemented
        return self.window == other.window and np.array_equal(self.occupancy, other.occupancy)


def _same_window(c1: SiteConfiguration, c2: SiteConfiguration) -> None:
    if c1.window != c2.window:
        raise ValueError("configurations live on different windows")


@dataclass(frozen=True)
class FluxCounter:
    """Net number of particles that crossed from site 1 to site 0."""

    net_crossings: int = 0


@dataclass
class HeightField:
    values: np.ndarray
    window: WindowSpec

    def at(self, x: int) -> int:
        return int(self.values[self.window.index(x)])

    @property
    def flux(self) -> FluxCounter:
        h0 = self.at(0)
        return FluxCounter(h0 // 2)


@dataclass(frozen=True)
class ScalingConstants:
    epsilon: float
    p: float
    q: float
    gamma: float
    lam: float
    v: float

    @property
    def sqrt_eps(self) -> float:
        return math.sqrt(self.epsilon)

    @classmethod
    def symmetric(cls) -> "ScalingConstants":
        """Zero-asymmetry rates ``p = q = 1/2`` (the eps -> 0 limit of the jump rates)."""
        return cls(epsilon=0.0, p=0.5, q=0.5, gamma=1.0, lam=0.0, v=0.0)


def scaling_constants(epsilon: float, unit_gamma: bool = False) -> ScalingConstants:
    """Jump probabilities and Hopf-Cole constants for asymmetry ``sqrt(epsilon)``.

    ``lam = artanh(sqrt(eps)) = log(q/p)/2`` and ``v = 1 - sqrt(1 - eps)`` are
    evaluated from their closed forms.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    s = math.sqrt(epsilon)
    p = 0.5 - 0.5 * s
    q = 0.5 + 0.5 * s
    gamma = 1.0 if unit_gamma else 0.5 / s
    lam = math.atanh(s)
    # p + q - 2 sqrt(pq) with pq = (1 - eps)/4; written to avoid cancellation
    v = epsilon / (1.0 + math.sqrt(1.0 - epsilon))
    return ScalingConstants(epsilon=epsilon, p=p, q=q, gamma=gamma, lam=lam, v=v)


def height_field(config: SiteConfiguration, flux: FluxCounter | int) -> HeightField:
    """Height profile anchored at ``h(0) = 2N`` with increments ``2 eta - 1``."""
    if config.topology is Topology.RING:
        raise ValueError("height function is undefined on a ring")
    n = flux.net_crossings if isinstance(flux, FluxCounter) else int(flux)
    w = config.window
    i0 = w.index(0)
    spins = config.spins()
    csum = np.concatenate(([0], np.cumsum(spins)))
    # csum[k] = sum of spins at indices < k; h(x) - h(0) = sum_{0 < y <= x} spin(y)
    values = 2 * n + csum[1:] - csum[i0 + 1]
    return HeightField(values=values.astype(np.int64), window=w)


def increments_from_height(h: HeightField) -> np.ndarray:
    """Spins ``h(x) - h(x-1)`` at every site but the leftmost."""
    inc = np.diff(np.asarray(h.values, dtype=np.int64))
    if inc.size and not np.all(np.abs(inc) == 1):
        bad = int(np.flatnonzero(np.abs(inc) != 1)[0])
        raise ValueError(f"height increment {inc[bad]} at site {h.window.first_site + bad + 1}")
    return inc
