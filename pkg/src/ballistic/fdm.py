"""Finite-difference evolution of one slit's density under ballistic diffusion.

dP/dt = D_t d2P/dx2 with D_t = D^2 t / sigma0^2 = u0^2 t. Both ends are
reflecting: the boundary rows use a doubled (2d) off-diagonal, which keeps the
trapezoid integral of P exactly invariant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.interpolate import CubicSpline

from . import kernels
from .analytic import gaussian_density
from .physics import GridSpec, ParameterError, PhysicalParams, SlitSpec

INSTABILITY_THRESHOLD = 1e-6
BOUNDARY_THRESHOLD = 1e-12


class Scheme(str, Enum):
    EXPLICIT = "explicit"
    CRANK_NICOLSON = "crank-nicolson"

    @classmethod
    def parse(cls, value: "Scheme | str") -> "Scheme":
        if isinstance(value, Scheme):
            return value
        key = str(value).strip().lower().replace("_", "-")
        aliases = {"cn": "crank-nicolson", "cranknicolson": "crank-nicolson", "implicit": "crank-nicolson"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ParameterError(f"unknown scheme {value!r}; expected 'explicit' or 'crank-nicolson'") from None


class NumericalError(RuntimeError):
    """Base class for failures of the numerical machinery."""


class StabilityError(NumericalError):
    pass


class SingularSystemError(NumericalError):
    pass


class DomainTooNarrowWarning(UserWarning):
    pass


class InstabilityWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SlitField:
    values: np.ndarray
    t_index: int
    slit_id: int | str
    scheme: Scheme


def diffusivity(slit: SlitSpec, params: PhysicalParams, t: float) -> float:
    """Time-dependent coefficient D_t = D^2 t / sigma0^2."""
    D = params.diffusion_const
    return D * D * t / slit.sigma0 ** 2


def max_stable_dt(grid: GridSpec, slit: SlitSpec, params: PhysicalParams) -> float:
    """Largest explicit step keeping d = D_t dt/dx^2 <= 1/2 up to step nt."""
    return grid.dx * slit.sigma0 / (params.diffusion_const * math.sqrt(2.0 * grid.nt))


def _check_field(field: SlitField, grid: GridSpec) -> np.ndarray:
    values = np.asarray(field.values, dtype=float)
    if values.shape != (grid.nx,):
        raise ParameterError(f"field has shape {values.shape}, grid expects ({grid.nx},)")
    return values


def step_explicit(field: SlitField, slit: SlitSpec, params: PhysicalParams, grid: GridSpec,
                  *, allow_unstable: bool = False) -> SlitField:
    values = _check_field(field, grid)
    dt_max = max_stable_dt(grid, slit, params)
    if grid.dt > dt_max * (1.0 + 1e-12) and not allow_unstable:
        raise StabilityError(f"dt={grid.dt:.6g} s exceeds the explicit limit {dt_max:.6g} s")
    # D at the new time level
    t_new = (field.t_index + 1) * grid.dt
    d = diffusivity(slit, params, t_new) * grid.dt / grid.dx ** 2
    out = kernels.explicit_step(np.ascontiguousarray(values), d)
    return SlitField(out, field.t_index + 1, field.slit_id, Scheme.EXPLICIT)


def solve_tridiagonal(lower, diag, upper, rhs) -> np.ndarray:
    """Thomas algorithm. ``lower[0]`` and ``upper[-1]`` are ignored."""
    arrays = [np.ascontiguousarray(a, dtype=float) for a in (lower, diag, upper, rhs)]
    n = arrays[1].shape[0]
    if any(a.ndim != 1 or a.shape[0] != n for a in arrays):
        raise ParameterError("tridiagonal bands and rhs must be 1-D with equal length")
    try:
        return kernels.thomas(*arrays)
    except ZeroDivisionError as exc:
        raise SingularSystemError(str(exc)) from None


def step_crank_nicolson(field: SlitField, slit: SlitSpec, params: PhysicalParams,
                        grid: GridSpec) -> SlitField:
    values = _check_field(field, grid)
    # D at the half step
    t_half = (field.t_index + 0.5) * grid.dt
    d = diffusivity(slit, params, t_half) * grid.dt / grid.dx ** 2
    try:
        out = kernels.cn_step(np.ascontiguousarray(values), d)
    except ZeroDivisionError as exc:
        raise SingularSystemError(str(exc)) from None
    return SlitField(out, field.t_index + 1, field.slit_id, Scheme.CRANK_NICOLSON)


def initial_field(slit: SlitSpec, params: PhysicalParams, grid: GridSpec,
                  scheme: Scheme | str = Scheme.CRANK_NICOLSON, slit_id: int | str = 0) -> SlitField:
    return SlitField(gaussian_density(slit, params, grid.x, 0.0), 0, slit_id, Scheme.parse(scheme))


def evolve_slit(slit: SlitSpec, params: PhysicalParams, grid: GridSpec,
                scheme: Scheme | str = Scheme.CRANK_NICOLSON, *, slit_id: int | str = 0,
                allow_unstable: bool = False) -> list[SlitField]:
    """Evolve one slit over ``grid.nt`` frames (frame 0 is the initial Gaussian).

    Warns with :class:`DomainTooNarrowWarning` if the boundary density exceeds
    1e-12 of the peak, and with :class:`InstabilityWarning` if any node drops
    below -1e-6 of the peak.
    """
    scheme = Scheme.parse(scheme)
    if scheme is Scheme.EXPLICIT and not allow_unstable:
        dt_max = max_stable_dt(grid, slit, params)
        if grid.dt > dt_max * (1.0 + 1e-12):
            raise StabilityError(f"dt={grid.dt:.6g} s exceeds the explicit limit {dt_max:.6g} s")
    buf = np.empty((grid.nt, grid.nx))
    field = initial_field(slit, params, grid, scheme, slit_id)
    buf[0] = field.values
    fields = [SlitField(buf[0], 0, slit_id, scheme)]
    dx2 = grid.dx ** 2
    step = kernels.explicit_step if scheme is Scheme.EXPLICIT else kernels.cn_step
    lag = 1.0 if scheme is Scheme.EXPLICIT else 0.5
    p = np.ascontiguousarray(buf[0])
    try:
        for k in range(1, grid.nt):
            d = diffusivity(slit, params, (k - 1 + lag) * grid.dt) * grid.dt / dx2
            p = step(p, d)
            buf[k] = p
            fields.append(SlitField(buf[k], k, slit_id, scheme))
    except ZeroDivisionError as exc:
        raise SingularSystemError(str(exc)) from None
    peaks = np.max(np.abs(buf), axis=1)
    edge = np.maximum(np.abs(buf[:, 0]), np.abs(buf[:, -1]))
    if np.any(edge > BOUNDARY_THRESHOLD * peaks):
        warnings.warn("boundary density exceeds 1e-12 of the peak; widen the x-domain",
                      DomainTooNarrowWarning, stacklevel=2)
    if first_unstable_frame(fields) is not None:
        warnings.warn("field developed negative oscillations (unstable run)",
                      InstabilityWarning, stacklevel=2)
    return fields


def lab_frame_values(field: SlitField, slit: SlitSpec, grid: GridSpec) -> np.ndarray:
    """Density in the lab frame: the solver spreads P about the fixed centre x0,
    and the drift x0 -> x0 + vx t is applied here by cubic-spline interpolation.
    Linear interpolation would skew the profile by O(dx^2) between nodes."""
    values = np.asarray(field.values, dtype=float)
    if slit.vx == 0.0 or field.t_index == 0:
        return values
    shift = slit.vx * field.t_index * grid.dt
    x = grid.x
    xq = x - shift
    out = CubicSpline(x, values)(xq)
    out[(xq < x[0]) | (xq > x[-1])] = 0.0
    return out


def first_unstable_frame(fields: list[SlitField], threshold: float = INSTABILITY_THRESHOLD) -> int | None:
    """Index of the first frame with a node below -threshold * peak, else None."""
    for f in fields:
        v = f.values
        peak = float(np.max(np.abs(v)))
        if peak > 0 and float(np.min(v)) < -threshold * peak:
            return f.t_index
    return None


def is_unstable(fields: list[SlitField], threshold: float = INSTABILITY_THRESHOLD) -> bool:
    return first_unstable_frame(fields, threshold) is not None


def trapezoid_mass(values: np.ndarray, dx: float) -> float:
    v = np.asarray(values, dtype=float)
    return float(dx * (v.sum() - 0.5 * (v[0] + v[-1])))


def stack(fields: list[SlitField]) -> np.ndarray:
    """Frames as an (nt, nx) array."""
    return np.vstack([f.values for f in fields])
