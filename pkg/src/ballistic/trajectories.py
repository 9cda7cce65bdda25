"""Averaged trajectories integrated through the emergent velocity field."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .currents import EPS_REL, CombinedFrame, DegenerateFieldError
from .physics import GridSpec, ParameterError, PhysicalParams, SlitSpec
from .analytic import gaussian_density


class Seeding(str, Enum):
    EQUIDISTANT = "equidistant"
    EQUAL_FLUX = "equal-flux"
    PER_SLIT = "per-slit"


class SeedRangeError(ParameterError):
    pass


MAX_SHEAR_STEP = 0.5
MAX_SUBSTEPS = 256


@dataclass(frozen=True, eq=False)
class TrajectorySet:
    """Paths as an (n_paths, nt) array; rows after truncation hold NaN."""

    t: np.ndarray
    x: np.ndarray
    seeding: Seeding
    source_slit: np.ndarray
    truncated: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.x.shape[0]

    def path(self, k: int) -> list[tuple[float, float]]:
        return [(float(t), float(x)) for t, x in zip(self.t, self.x[k])]


def seed_equidistant(frame0: CombinedFrame, n: int, span: float, grid: GridSpec,
                     centre: float | None = None) -> np.ndarray:
    """n seeds evenly spread over ``span``; centre defaults to the density centroid."""
    if n < 1:
        raise ParameterError("need at least one seed")
    if centre is None:
        P = np.asarray(frame0.P_tot)
        centre = float(np.sum(P * grid.x) / np.sum(P))
    lo, hi = centre - 0.5 * span, centre + 0.5 * span
    if span < 0 or lo < grid.x_min or hi > grid.x_max:
        raise SeedRangeError(f"seed span [{lo:.6g}, {hi:.6g}] leaves the grid")
    if n == 1:
        return np.array([float(centre)])
    return centre + np.linspace(-0.5 * span, 0.5 * span, n)


def _cdf(P: np.ndarray, dx: float) -> np.ndarray:
    """Cumulative integral at the nodes, trapezoid plus the Euler-Maclaurin end term."""
    P = np.clip(np.asarray(P, dtype=float), 0.0, None)
    c = np.concatenate([[0.0], np.cumsum(0.5 * (P[1:] + P[:-1]) * dx)])
    if P.size >= 3:
        dP = np.gradient(P, dx)
        c = c - dx * dx / 12.0 * (dP - dP[0])
    return np.maximum.accumulate(np.maximum(c, 0.0))


def _cdf_spline(P: np.ndarray, grid: GridSpec) -> CubicHermiteSpline:
    """C1 cubic through the node CDF whose slope at every node is P itself."""
    P = np.clip(np.asarray(P, dtype=float), 0.0, None)
    return CubicHermiteSpline(grid.x, _cdf(P, grid.dx), P)


def _quantiles(P: np.ndarray, grid: GridSpec, q: np.ndarray) -> np.ndarray:
    P = np.clip(np.asarray(P, dtype=float), 0.0, None)
    c = _cdf(P, grid.dx)
    total = c[-1]
    if not total > 0:
        raise DegenerateFieldError("initial density integrates to zero")
    target = np.asarray(q, dtype=float) * total
    i = np.clip(np.searchsorted(c, target, side="right") - 1, 0, len(c) - 2)
    lo, hi = grid.x[i], grid.x[i + 1]
    span = np.where(c[i + 1] > c[i], c[i + 1] - c[i], 1.0)
    x = lo + np.clip((target - c[i]) / span, 0.0, 1.0) * grid.dx
    spline = _cdf_spline(P, grid)
    slope = spline.derivative()
    for _ in range(8):
        d = slope(x)
        step = np.where(d > 0, (spline(x) - target) / np.where(d > 0, d, 1.0), 0.0)
        x = np.clip(x - step, lo, hi)
    return x


def seed_equal_flux(frame0: CombinedFrame, n: int, grid: GridSpec) -> np.ndarray:
    """Seeds at the k/(n+1) quantiles of the initial distribution."""
    if n < 2:
        raise ParameterError("equal-flux seeding needs n >= 2")
    q = np.arange(1, n + 1) / (n + 1)
    return _quantiles(frame0.P_tot, grid, q)


def seed_per_slit(slits: Sequence[SlitSpec], params: PhysicalParams, n_per_slit: int,
                  grid: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Equal path counts per slit at quantiles of each slit's own Gaussian.

    Returns ``(seeds, source_slit)`` sorted by position.
    """
    if n_per_slit < 1:
        raise ParameterError("need at least one path per slit")
    q = np.arange(1, n_per_slit + 1) / (n_per_slit + 1)
    seeds, src = [], []
    for i, s in enumerate(slits):
        seeds.append(_quantiles(gaussian_density(s, params, grid.x, 0.0), grid, q))
        src.append(np.full(n_per_slit, i))
    seeds_a = np.concatenate(seeds)
    src_a = np.concatenate(src)
    order = np.argsort(seeds_a, kind="stable")
    return seeds_a[order], src_a[order]


def _velocity_at(frames: Sequence[CombinedFrame], k: int, frac: float, xq: np.ndarray,
                 xs: np.ndarray):
    """Bilinear v_tot and P_tot at positions xq, time k + frac (in frame units)."""
    f0 = frames[k]
    v = np.interp(xq, xs, f0.v_tot)
    P = np.interp(xq, xs, f0.P_tot)
    if frac > 0.0:
        f1 = frames[k + 1]
        v = (1.0 - frac) * v + frac * np.interp(xq, xs, f1.v_tot)
        P = (1.0 - frac) * P + frac * np.interp(xq, xs, f1.P_tot)
    return v, P


def advance_trajectories(seeds, frames: Sequence[CombinedFrame], grid: GridSpec, *,
                         substeps: int = 1, source_slit=None,
                         seeding: Seeding | str = Seeding.EQUIDISTANT) -> TrajectorySet:
    """Explicit midpoint integration of dx/dt = v_tot(x, t).

    ``substeps`` is the minimum number of midpoint steps per frame interval. An
    interval is split further when the velocity shear at the current path
    positions would let neighbouring paths overtake one another, i.e. until
    h * |dv/dx| <= MAX_SHEAR_STEP. v_tot is interpolated linearly in time
    between frames. A path whose interpolated P_tot falls below
    1e-30 of the frame peak is truncated: it is flagged and its remaining
    points are NaN.
    """
    if len(frames) < grid.nt:
        raise ParameterError(f"{len(frames)} frames supplied, grid expects {grid.nt}")
    if substeps < 1:
        raise ParameterError("substeps must be >= 1")
    xs = grid.x
    seeds = np.clip(np.asarray(seeds, dtype=float).ravel(), grid.x_min, grid.x_max)
    n = seeds.size
    out = np.full((n, grid.nt), np.nan)
    out[:, 0] = seeds
    alive = np.ones(n, dtype=bool)
    truncated = np.zeros(n, dtype=bool)
    peaks = [float(np.max(f.P_tot)) for f in frames[:grid.nt]]
    shear = [np.abs(np.gradient(np.asarray(f.v_tot, dtype=float), grid.dx)) for f in frames[:grid.nt]]
    x = seeds.copy()
    for k in range(grid.nt - 1):
        live = x[alive]
        g_max = 0.0
        if live.size:
            g_max = float(max(np.max(np.interp(live, xs, shear[k])), np.max(np.interp(live, xs, shear[k + 1]))))
        m = min(MAX_SUBSTEPS, max(substeps, int(math.ceil(grid.dt * g_max / MAX_SHEAR_STEP))))
        h = grid.dt / m
        for s in range(m):
            a = s / m
            b = (s + 0.5) / m
            v1, P1 = _velocity_at(frames, k, a, x, xs)
            xm = np.clip(x + 0.5 * h * v1, grid.x_min, grid.x_max)
            v2, P2 = _velocity_at(frames, k, b, xm, xs)
            floor = EPS_REL * max(peaks[k], peaks[k + 1])
            dead = alive & ((P1 <= floor) | (P2 <= floor))
            if np.any(dead):
                truncated |= dead
                alive &= ~dead
            x = np.where(alive, np.clip(x + h * v2, grid.x_min, grid.x_max), np.nan)
        out[:, k + 1] = x
    src = np.full(n, -1) if source_slit is None else np.asarray(source_slit, dtype=int)
    return TrajectorySet(t=grid.t.copy(), x=out, seeding=Seeding(seeding), source_slit=src,
                         truncated=truncated)


def count_crossings(ts: TrajectorySet) -> int:
    """Adjacent-path order inversions summed over all time steps."""
    if ts.n_paths < 2:
        raise ParameterError("need at least two paths")
    a, b = ts.x[:-1], ts.x[1:]
    with np.errstate(invalid="ignore"):
        inv = a > b
    return int(np.count_nonzero(inv))


def tube_fluxes(ts: TrajectorySet, frames: Sequence[CombinedFrame], grid: GridSpec) -> np.ndarray:
    """Probability between adjacent paths at every frame, shape (n_paths-1, nt)."""
    out = np.empty((ts.n_paths - 1, len(ts.t)))
    for k in range(len(ts.t)):
        cx = _cdf_spline(frames[k].P_tot, grid)(ts.x[:, k])
        out[:, k] = np.diff(cx)
    return out
