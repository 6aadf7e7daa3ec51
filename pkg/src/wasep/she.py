"""Reference integrator for the multiplicative stochastic heat equation.

One step is diffusion followed by the noise factor::

    Z <- (Z + dt/2 * lap Z) * max(1 - dW, floor),   dW ~ N(0, dt/dx) per cell

which is the explicit Euler update with the noise applied to the diffused field.
The diffusion part is positive when ``dt <= dx^2/2`` and the floored factor is
positive, so strict positivity holds by construction.  Boundaries are Dirichlet
zero at ``-X`` and ``X``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

CLAMP_FLOOR = 1e-6
OVERFLOW_GUARD = 1e200


class SheInstability(RuntimeError):
    pass


@dataclass(frozen=True)
class SheGrid:
    dx: float
    dt: float
    extent: float
    horizon: float

    def __post_init__(self):
        if self.dt > self.dx ** 2 / 2 * (1 + 1e-12):
            raise ValueError(f"dt={self.dt} violates dt <= dx^2/2 = {self.dx ** 2 / 2}")
        n = self.extent / self.dx
        if abs(n - round(n)) > 1e-9:
            raise ValueError("extent must be a multiple of dx")

    @property
    def x(self) -> np.ndarray:
        m = int(round(self.extent / self.dx))
        return np.arange(-m, m + 1) * self.dx

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def index(self, x: float) -> int:
        return int(round((x + self.extent) / self.dx))

    @classmethod
    def for_horizon(cls, dx: float, dt: float, horizon: float) -> "SheGrid":
        """Grid with ``X >= 6 sqrt(T)`` rounded up to a multiple of ``dx``."""
        extent = math.ceil(6 * math.sqrt(horizon) / dx) * dx
        return cls(dx=dx, dt=dt, extent=extent, horizon=horizon)


def delta_data(grid: SheGrid) -> np.ndarray:
    z = np.zeros(grid.x.size)
    z[grid.index(0.0)] = 1.0 / grid.dx
    return z


def brownian_path(grid: SheGrid, seed, n_paths: int | None = None) -> np.ndarray:
    """Two-sided standard Brownian motion on the grid, pinned at ``B(0) = 0``."""
    rng = np.random.default_rng(seed)
    m = int(round(grid.extent / grid.dx))
    shape = (m,) if n_paths is None else (n_paths, m)
    right = np.cumsum(rng.normal(0.0, math.sqrt(grid.dx), shape), axis=-1)
    left = np.cumsum(rng.normal(0.0, math.sqrt(grid.dx), shape), axis=-1)[..., ::-1]
    zero = np.zeros(shape[:-1] + (1,))
    return np.concatenate((left, zero, right), axis=-1)


def brownian_data(grid: SheGrid, seed, phi=None, n_paths: int | None = None) -> np.ndarray:
    b = brownian_path(grid, seed, n_paths)
    if phi is not None:
        f = phi.func if hasattr(phi, "func") else phi
        b = b + np.asarray(f(grid.x), dtype=float)
    z = np.exp(-b)
    z[..., 0] = z[..., -1] = 0.0
    return z


def noise_increments(grid: SheGrid, seed, n_paths: int = 1):
    """Yield the per-step noise arrays ``dW`` of shape ``(n_paths, n_cells)``."""
    rng = np.random.default_rng(seed)
    sd = math.sqrt(grid.dt / grid.dx)
    for _ in range(grid.n_steps):
        yield rng.normal(0.0, sd, (n_paths, grid.x.size))


@dataclass
class SheTrajectory:
    grid: SheGrid
    times: np.ndarray
    z: np.ndarray  # (n_saves, n_paths, n_ic, n_cells)
    clamped: int
    updates: int

    @property
    def clamp_fraction(self) -> float:
        return self.clamped / max(self.updates, 1)

    @property
    def final(self) -> np.ndarray:
        return self.z[-1]


def integrate_she(grid: SheGrid, seed, initial: np.ndarray | Sequence[np.ndarray],
                  n_paths: int = 1, noise: bool = True,
                  save_times: Sequence[float] | None = None) -> SheTrajectory:
    """Integrate ``dZ = Z''/2 dt - Z dW`` for each initial datum with shared noise.

    ``initial`` is one profile, a stack ``(n_ic, n_cells)`` evolved with the same
    noise (the continuum basic coupling), or ``(n_paths, n_ic, n_cells)`` when the
    initial data differ across noise paths.  Paths ``0..n_paths-1`` get independent
    noise.  Only the final time is stored unless ``save_times`` is given.
    """
    z0 = np.asarray(initial, dtype=float)
    if z0.ndim == 1:
        z0 = z0[None, :]
    if z0.ndim == 2:
        z = np.broadcast_to(z0, (n_paths,) + z0.shape).copy()
    else:
        if z0.shape[0] != n_paths:
            raise ValueError("per-path initial data must have n_paths rows")
        z = z0.copy()
    if z.shape[-1] != grid.x.size:
        raise ValueError(f"initial data has {z.shape[-1]} cells, grid has {grid.x.size}")
    z[..., 0] = z[..., -1] = 0.0
    r = 0.5 * grid.dt / grid.dx ** 2
    steps = grid.n_steps
    save_steps = {steps} if save_times is None else {int(round(t / grid.dt)) for t in save_times}
    saved, times = [], []
    if 0 in save_steps:
        saved.append(z.copy())
        times.append(0.0)
    clamped = 0
    updates = 0
    noise_iter = noise_increments(grid, seed, n_paths) if noise else None
    for n in range(1, steps + 1):
        lap = np.zeros_like(z)
        lap[..., 1:-1] = z[..., 2:] - 2 * z[..., 1:-1] + z[..., :-2]
        z += r * lap
        if noise_iter is not None:
            dw = next(noise_iter)[:, None, :]
            factor = 1.0 - dw
            low = factor < CLAMP_FLOOR
            if low.any():
                clamped += int(low[..., 1:-1].sum()) * z.shape[1]
                factor = np.maximum(factor, CLAMP_FLOOR)
            z *= factor
            updates += z.shape[0] * z.shape[1] * (z.shape[2] - 2)
        z[..., 0] = z[..., -1] = 0.0
        if n % 50 == 0 or n == steps:
            top = np.max(np.abs(z))
            if not np.isfinite(top) or top > OVERFLOW_GUARD:
                raise SheInstability(
                    f"|Z| = {top:.3g} at step {n} (t={n * grid.dt:.4g}); dx={grid.dx}, "
                    f"dt={grid.dt}, X={grid.extent}")
        if n in save_steps:
            saved.append(z.copy())
            times.append(n * grid.dt)
    return SheTrajectory(grid, np.array(times), np.stack(saved), clamped, updates)


def log_field(z: np.ndarray) -> np.ndarray:
    """``H = -log Z``; interior cells must be strictly positive."""
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("non-positive Z: upstream instability")
    return -np.log(z)


def heat_kernel(t: float, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.exp(-x ** 2 / (2 * t)) / math.sqrt(2 * math.pi * t)


def trajectory_rows(traj: SheTrajectory, path: int = 0, ic: int = 0) -> list[dict]:
    rows = []
    for t, zt in zip(traj.times, traj.z):
        for x, z in zip(traj.grid.x, zt[path, ic]):
            rows.append({"t": float(t), "x": float(x), "Z": float(z),
                         "H": float(-math.log(z)) if z > 0 else float("inf")})
    return rows
