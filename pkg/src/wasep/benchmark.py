"""Throughput of the compiled event loop."""

from __future__ import annotations

import time

from .dynamics import OrderingHook, evolve
from .lattice import WindowSpec, scaling_constants
from .verification.checks import PROPOSITION_ORDER, proposition_ensemble


def benchmark(n_sites: int = 10_001, events: int = 20_000_000, epsilon: float = 0.1,
              seed: int = 0, ordering_hook: bool = False) -> dict:
    """Time ``events`` stream events on the four-replica proposition ensemble.

    The first call also compiles the kernel, so a short warm-up run precedes the
    timed one.
    """
    L = (n_sites - 1) // 2
    window = WindowSpec(a=-1.0, b=1.0, lattice_extent=L)
    sc = scaling_constants(epsilon, unit_gamma=True)
    hooks = [OrderingHook(PROPOSITION_ORDER)] if ordering_hook else []
    warm = proposition_ensemble(sc, window, seed + 1, seed + 2)
    evolve(warm, 1000 / window.n_bonds, hooks)
    ens = proposition_ensemble(sc, window, seed, seed + 2)
    duration = events / window.n_bonds
    t0 = time.perf_counter()
    evolve(ens, duration, hooks)
    seconds = time.perf_counter() - t0
    return {"n_sites": window.n_sites, "replicas": len(ens.names), "events": ens.applied_events,
            "seconds": seconds, "events_per_second": ens.applied_events / seconds,
            "ordering_hook": ordering_hook}
