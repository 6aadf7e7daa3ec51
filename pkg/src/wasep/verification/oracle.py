"""Exact law of the exclusion process on tiny lattices.

States are bit masks: bit ``i`` set means lattice index ``i`` (left to right) is
occupied.  The law at time ``t`` is ``pi_0 exp(t G)``, computed with
``scipy.sparse.linalg.expm_multiply`` on the sparse generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from ..lattice import ScalingConstants, Topology

MAX_ORACLE_SITES = 12


@dataclass
class OracleSpec:
    n_sites: int
    topology: Topology
    scaling: ScalingConstants
    t_micro: float
    initial: np.ndarray

    def __post_init__(self):
        self.topology = Topology(self.topology)
        if not 2 <= self.n_sites <= MAX_ORACLE_SITES:
            raise ValueError(f"oracle handles 2..{MAX_ORACLE_SITES} sites, got {self.n_sites}")
        self.initial = np.asarray(self.initial, dtype=float)
        if self.initial.shape != (2 ** self.n_sites,):
            raise ValueError(f"initial law must have {2 ** self.n_sites} entries")
        if abs(self.initial.sum() - 1.0) > 1e-12 or self.initial.min() < 0:
            raise ValueError("initial law is not a probability vector")


def bonds(n_sites: int, topology: Topology) -> list[tuple[int, int]]:
    out = [(i, i + 1) for i in range(n_sites - 1)]
    if Topology(topology) is Topology.RING:
        out.append((n_sites - 1, 0))
    return out


def generator(n_sites: int, topology: Topology, scaling: ScalingConstants) -> sparse.csr_matrix:
    """Rate matrix ``G[s, s']``: rightward jumps at rate ``p``, leftward at ``q``."""
    if n_sites > MAX_ORACLE_SITES:
        raise ValueError(f"2^{n_sites} states exceeds the oracle limit")
    n = 2 ** n_sites
    rows, cols, vals = [], [], []
    for s in range(n):
        for i, j in bonds(n_sites, topology):
            oi, oj = (s >> i) & 1, (s >> j) & 1
            if oi and not oj:
                rate = scaling.p  # i -> j is rightward
            elif oj and not oi:
                rate = scaling.q
            else:
                continue
            rows.append(s)
            cols.append(s ^ (1 << i) ^ (1 << j))
            vals.append(rate)
    G = sparse.csr_matrix((vals, (rows, cols)), shape=(n, n))
    G = G - sparse.diags(np.asarray(G.sum(axis=1)).ravel())
    return G.tocsr()


def exact_distribution(spec: OracleSpec) -> np.ndarray:
    G = generator(spec.n_sites, spec.topology, spec.scaling)
    if spec.t_micro == 0:
        return spec.initial.copy()
    out = expm_multiply(spec.t_micro * G.T, spec.initial)
    return np.clip(out, 0.0, None)


def popcounts(n_sites: int) -> np.ndarray:
    s = np.arange(2 ** n_sites)
    return np.array([bin(v).count("1") for v in s])


def uniform_sector(n_sites: int, k: int) -> np.ndarray:
    pi = (popcounts(n_sites) == k).astype(float)
    return pi / comb(n_sites, k)


def product_law(n_sites: int, rho: float = 0.5) -> np.ndarray:
    k = popcounts(n_sites)
    return rho ** k * (1 - rho) ** (n_sites - k)


def point_mass(n_sites: int, occupied: list[int]) -> np.ndarray:
    pi = np.zeros(2 ** n_sites)
    pi[sum(1 << i for i in occupied)] = 1.0
    return pi


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())


def tv_noise_floor(pi: np.ndarray, samples: int) -> float:
    """Expected TV between ``pi`` and an empirical law of ``samples`` draws (normal approx.)."""
    return 0.5 * float(np.sum(np.sqrt(2 * pi * (1 - pi) / (np.pi * samples))))
