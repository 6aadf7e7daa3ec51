"""Shared Poissonian event stream and the basic coupling of several replicas.

Every bond ``(x, x+1)`` carries a rightward clock of rate ``p`` and a leftward clock
of rate ``q``.  Superposed over ``n`` bonds this is one Poisson process of rate
``n`` whose events pick a uniform bond and a direction with probabilities
``(p, q)``.  All replicas of a ``CoupledEnsemble`` read the same events.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from . import _kernels
from .lattice import (FluxCounter, HeightField, ScalingConstants, SiteConfiguration,
                      Topology, WindowSpec, height_field)

MAX_REPLICAS = 64


class Direction(str, Enum):
    RIGHTWARD = "rightward"
    LEFTWARD = "leftward"


@dataclass(frozen=True)
class Event:
    time: float
    bond: int
    direction: Direction

    @property
    def source(self) -> int:
        return self.bond if self.direction is Direction.RIGHTWARD else self.bond + 1

    @property
    def target(self) -> int:
        return self.bond + 1 if self.direction is Direction.RIGHTWARD else self.bond


class EventStream:
    """Deterministic event source keyed by a 64-bit seed.

    ``master_extent`` widens the bond universe to ``[-M, M]``; events drawn on bonds
    outside ``window`` are consumed without effect.  Two windows sharing a seed and a
    master extent therefore see identical events on their common bonds.
    """

    def __init__(self, seed: int, scaling: ScalingConstants, window: WindowSpec,
                 master_extent: int | None = None):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.scaling = scaling
        self.window = window
        if window.topology is Topology.RING:
            if master_extent not in (None, window.lattice_extent):
                raise ValueError("rings have no master lattice")
            master_extent = None
        self.master_extent = master_extent or window.lattice_extent
        if self.master_extent < window.lattice_extent:
            raise ValueError("master_extent must cover the window")
        self.index = 0
        self.time = 0.0
        self._key = np.uint64(_kernels.stream_key(np.uint64(self.seed)))

    @property
    def n_master_bonds(self) -> int:
        if self.window.topology is Topology.RING:
            return self.window.n_bonds
        return 2 * self.master_extent

    @property
    def bond_offset(self) -> int:
        return self.master_extent - self.window.lattice_extent

    def state(self) -> dict:
        return {"seed": self.seed, "index": self.index, "time": self.time,
                "master_extent": self.master_extent}

    @classmethod
    def from_state(cls, state: dict, scaling: ScalingConstants,
                   window: WindowSpec) -> "EventStream":
        s = cls(state["seed"], scaling, window, state.get("master_extent"))
        s.index = int(state["index"])
        s.time = float(state["time"])
        return s

    def peek(self) -> Event:
        bond, right, gap = _kernels.event_draws(self._key, self.index,
                                                self.n_master_bonds, self.scaling.p)
        b = int(bond) - self.bond_offset + self.window.first_site
        return Event(self.time + float(gap), b,
                     Direction.RIGHTWARD if right else Direction.LEFTWARD)


def next_event(stream: EventStream) -> Event:
    """Consume and return the next event of ``stream``."""
    e = stream.peek()
    stream.index += 1
    stream.time = e.time
    return e


class OrderingViolation(AssertionError):
    def __init__(self, message: str, event_index: int, time: float, site: int | None = None,
                 pair: tuple[str, str] | None = None, neighbourhood: dict | None = None):
        super().__init__(message)
        self.event_index = event_index
        self.time = time
        self.site = site
        self.pair = pair
        self.neighbourhood = neighbourhood or {}


class HookFailure(AssertionError):
    def __init__(self, message: str, event_index: int, time: float, neighbourhood: dict):
        super().__init__(message)
        self.event_index = event_index
        self.time = time
        self.neighbourhood = neighbourhood


@dataclass(frozen=True)
class OrderingHook:
    """Sitewise ``lo <= hi`` for every pair, asserted after every event."""

    pairs: tuple[tuple[str, str], ...]


class CoupledEnsemble:
    """Named replicas on one window, driven by one ``EventStream``.

    Occupancies are bit-packed: ``packed[i]`` has bit ``r`` set when replica ``r``
    occupies lattice index ``i``.
    """

    def __init__(self, replicas: dict[str, SiteConfiguration], stream: EventStream,
                 fluxes: dict[str, int] | None = None):
        if not replicas:
            raise ValueError("ensemble needs at least one replica")
        if len(replicas) > MAX_REPLICAS:
            raise ValueError(f"at most {MAX_REPLICAS} replicas")
        windows = {c.window for c in replicas.values()}
        if len(windows) != 1 or stream.window not in windows:
            raise ValueError("replicas and stream must share one window")
        self.window = stream.window
        self.stream = stream
        self.names = list(replicas)
        self.packed = np.zeros(self.window.n_sites, dtype=np.uint64)
        for r, c in enumerate(replicas.values()):
            self.packed |= c.occupancy.astype(np.uint64) << np.uint64(r)
        self.initial_packed = self.packed.copy()
        self.fluxes = np.zeros(MAX_REPLICAS, dtype=np.int64)
        for name, n in (fluxes or {}).items():
            self.fluxes[self.names.index(name)] = n
        self.time = stream.time
        self.applied_events = 0  # stream events run through the update rule

    @property
    def scaling(self) -> ScalingConstants:
        return self.stream.scaling

    def _bit(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no replica named {name!r}; have {self.names}") from None

    def configuration(self, name: str) -> SiteConfiguration:
        occ = (self.packed >> np.uint64(self._bit(name))) & np.uint64(1)
        return SiteConfiguration(occ.astype(np.uint8), self.window)

    def flux(self, name: str) -> FluxCounter:
        return FluxCounter(int(self.fluxes[self._bit(name)]))

    def height(self, name: str) -> HeightField:
        return height_field(self.configuration(name), self.flux(name))

    def replicas(self) -> dict[str, tuple[SiteConfiguration, FluxCounter]]:
        return {n: (self.configuration(n), self.flux(n)) for n in self.names}

    def particle_counts(self) -> dict[str, int]:
        return {n: self.configuration(n).n_particles for n in self.names}

    def masks(self, pairs: Iterable[tuple[str, str]]) -> tuple[np.ndarray, np.ndarray]:
        pairs = list(pairs)
        lo = np.array([1 << self._bit(a) for a, _ in pairs], dtype=np.uint64)
        hi = np.array([1 << self._bit(b) for _, b in pairs], dtype=np.uint64)
        return lo, hi

    def first_violation(self, pairs: Iterable[tuple[str, str]]):
        """``(site, pair)`` of the leftmost ordering violation, or ``None``."""
        for a, b in pairs:
            lo = (self.packed >> np.uint64(self._bit(a))) & np.uint64(1)
            hi = (self.packed >> np.uint64(self._bit(b))) & np.uint64(1)
            bad = np.flatnonzero(lo > hi)
            if bad.size:
                return self.window.first_site + int(bad[0]), (a, b)
        return None

    def neighbourhood(self, site: int, radius: int = 5) -> dict[str, str]:
        lo = max(self.window.first_site, site - radius)
        hi = min(self.window.last_site, site + radius)
        sl = slice(self.window.index(lo), self.window.index(hi) + 1)
        return {f"{n}[{lo}..{hi}]": "".join(map(str, self.configuration(n).occupancy[sl]))
                for n in self.names}


def _run(ens: CoupledEnsemble, t_end: float, max_events: int, lo, hi):
    s = ens.stream
    w = ens.window
    origin = w.index(0) if w.first_site <= 0 < w.last_site or w.topology is Topology.RING else -1
    k, t, applied, status, site = _kernels.run_events(
        ens.packed, ens.fluxes, w.topology is Topology.RING, s.bond_offset,
        s.n_master_bonds, origin, s._key, s.scaling.p, s.index, s.time, t_end,
        max_events, lo, hi)
    s.index = int(k)
    s.time = float(t)
    return int(applied), int(status), int(site)


def apply_event(ensemble: CoupledEnsemble, e: Event) -> CoupledEnsemble:
    """Apply one event to every replica: exclusion rule plus flux bookkeeping.

    Plain-Python counterpart of the compiled loop; ``apply_event(ens,
    next_event(ens.stream))`` advances an ensemble by exactly one stream event.
    Bonds outside the window but inside the stream's master lattice are no-ops.
    """
    if e.time < ensemble.time:
        raise ValueError(f"event at t={e.time} precedes ensemble time {ensemble.time}")
    w = ensemble.window
    ring = w.topology is Topology.RING
    last_bond = w.last_site if ring else w.last_site - 1
    if not w.first_site <= e.bond <= last_bond:
        m = ensemble.stream.master_extent
        if ring or not -m <= e.bond < m:
            raise ValueError(f"bond ({e.bond}, {e.bond + 1}) outside the stream lattice")
        ensemble.time = e.time
        return ensemble
    x = w.index(e.bond)
    y = (x + 1) % w.n_sites
    src, dst = (x, y) if e.direction is Direction.RIGHTWARD else (y, x)
    packed = ensemble.packed
    moved = int(packed[src]) & ~int(packed[dst]) & 0xFFFFFFFFFFFFFFFF
    if moved:
        packed[src] = np.uint64(int(packed[src]) ^ moved)
        packed[dst] = np.uint64(int(packed[dst]) | moved)
        if e.bond == 0:
            step = -1 if e.direction is Direction.RIGHTWARD else 1
            for r in range(len(ensemble.names)):
                if moved >> r & 1:
                    ensemble.fluxes[r] += step
    ensemble.time = e.time
    return ensemble


Hook = Callable[[CoupledEnsemble], None]


def evolve(ensemble: CoupledEnsemble, duration: float, hooks: Sequence = (),
           stride: int = 1) -> CoupledEnsemble:
    """Apply stream events up to microscopic time ``ensemble.time + duration``.

    ``OrderingHook`` entries are checked inside the event loop after every event.
    Other hooks are callables run every ``stride`` events; an ``AssertionError``
    from one aborts with a ``HookFailure``.
    """
    if duration < 0:
        raise ValueError("duration must be non-negative")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    t_end = ensemble.time + duration
    pairs: list[tuple[str, str]] = []
    callables: list[Hook] = []
    for h in hooks:
        if isinstance(h, OrderingHook):
            pairs.extend(h.pairs)
        else:
            callables.append(h)
    lo, hi = ensemble.masks(pairs)
    if pairs:
        bad = ensemble.first_violation(pairs)
        if bad is not None:
            site, pair = bad
            raise OrderingViolation(
                f"{pair[0]} <= {pair[1]} fails at site {site} before evolution",
                ensemble.stream.index, ensemble.time, site, pair, ensemble.neighbourhood(site))
    chunk = stride if callables else np.iinfo(np.int64).max
    while True:
        applied, status, site = _run(ensemble, t_end, chunk, lo, hi)
        ensemble.applied_events += applied
        if status == _kernels.VIOLATION:
            ensemble.time = ensemble.stream.time
            found = ensemble.first_violation(pairs)
            pair = found[1] if found else None
            raise OrderingViolation(
                f"ordering {pair} violated at site {ensemble.window.first_site + site} "
                f"by event #{ensemble.stream.index - 1}",
                ensemble.stream.index - 1, ensemble.time, ensemble.window.first_site + site,
                pair, ensemble.neighbourhood(ensemble.window.first_site + site))
        if status == _kernels.REACHED_END:
            break
        ensemble.time = ensemble.stream.time
        for h in callables:
            try:
                h(ensemble)
            except AssertionError as err:
                raise HookFailure(f"hook {getattr(h, '__name__', h)!r} failed: {err}",
                                  ensemble.stream.index - 1, ensemble.time,
                                  ensemble.neighbourhood(0)) from err
    ensemble.time = t_end
    for h in callables:
        try:
            h(ensemble)
        except AssertionError as err:
            raise HookFailure(f"hook {getattr(h, '__name__', h)!r} failed: {err}",
                              ensemble.stream.index - 1, ensemble.time,
                              ensemble.neighbourhood(0)) from err
    return ensemble
