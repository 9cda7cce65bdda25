"""Closed-form fields of a single freely spreading Gaussian.

Every function takes a :class:`SlitSpec` plus :class:`PhysicalParams` and is
vectorised over ``x``; ``t`` is a scalar time in seconds. These are used both
to drive the current rules (velocities and phases) and as test oracles for
the finite-difference solver.
"""

from __future__ import annotations

import math

import numpy as np

from .physics import ParameterError, PhysicalParams, SlitSpec


class TimeDomainError(ParameterError):
    pass


def _check_t(t: float) -> float:
    t = float(t)
    if not t >= 0.0:
        raise TimeDomainError(f"time must be >= 0, got {t!r}")
    return t


def _u0(slit: SlitSpec, params: PhysicalParams) -> float:
    return params.diffusion_const / slit.sigma0


def sigma_of_t(slit: SlitSpec, params: PhysicalParams, t: float) -> float:
    """sigma(t) = sigma0 * sqrt(1 + u0^2 t^2 / sigma0^2)."""
    t = _check_t(t)
    s0 = slit.sigma0
    return s0 * math.sqrt(1.0 + (_u0(slit, params) * t / s0) ** 2)


def offset(slit: SlitSpec, x, t: float) -> np.ndarray:
    """xi = x - x0 - vx t, the distance from the drifting centre."""
    return np.asarray(x, dtype=float) - slit.x0 - slit.vx * t


def gaussian_density(slit: SlitSpec, params: PhysicalParams, x, t: float) -> np.ndarray:
    s = sigma_of_t(slit, params, t)
    xi = offset(slit, x, t)
    return np.exp(-0.5 * (xi / s) ** 2) / (math.sqrt(2.0 * math.pi) * s)


def kinematic_fields(slit: SlitSpec, params: PhysicalParams, x, t: float):
    """Average velocity and acceleration fields ``(v_tot, a_tot)``."""
    s = sigma_of_t(slit, params, t)
    u0 = _u0(slit, params)
    xi = offset(slit, x, t)
    v = slit.vx + xi * u0 ** 2 * t / s ** 2
    a = xi * u0 ** 2 * slit.sigma0 ** 2 / s ** 4
    return v, a


def osmotic_velocity(slit: SlitSpec, params: PhysicalParams, x, t: float) -> np.ndarray:
    """u = -(hbar/2m) dP/dx / P, which for a Gaussian is linear in xi."""
    s = sigma_of_t(slit, params, t)
    return offset(slit, x, t) * params.hbar / (2.0 * params.mass * s ** 2)


def trajectory(slit: SlitSpec, params: PhysicalParams, xi0: float, t: float) -> float:
    """Smoothed path x0 + vx t + xi0 sigma(t)/sigma0."""
    return slit.x0 + slit.vx * t + xi0 * sigma_of_t(slit, params, t) / slit.sigma0


def phase_of(slit: SlitSpec, params: PhysicalParams, total_energy: float, x, t: float) -> np.ndarray:
    """Action phase S/hbar of one Gaussian channel; x is taken relative to x0."""
    t = _check_t(t)
    m, hbar = params.mass, params.hbar
    v = slit.vx
    u0 = _u0(slit, params)
    s = sigma_of_t(slit, params, t)
    xr = np.asarray(x, dtype=float) - slit.x0
    action = (m * v * xr
              + 0.5 * m * u0 ** 2 * ((xr - v * t) / s) ** 2 * t
              - m * v ** 2 * t
              - total_energy * t)
    return action / hbar


def phase_difference(slit_i: SlitSpec, slit_j: SlitSpec, params: PhysicalParams,
                     total_energy: float, x, t: float) -> np.ndarray:
    """phi_ij = (phi_j + dphi_j(t)) - (phi_i + dphi_i(t)), expanded term by term.

    With a shifter on slit i only this is the usual phi_j - phi'_i. The shared
    energy term cancels, so ``total_energy`` only appears for signature parity.
    """
    t = _check_t(t)
    m, hbar = params.mass, params.hbar
    x = np.asarray(x, dtype=float)
    vi, vj = slit_i.vx, slit_j.vx
    ui, uj = _u0(slit_i, params), _u0(slit_j, params)
    si, sj = sigma_of_t(slit_i, params, t), sigma_of_t(slit_j, params, t)
    xi_i = x - slit_i.x0 - vi * t
    xi_j = x - slit_j.x0 - vj * t
    linear = (m / hbar) * (vj * (x - slit_j.x0) - vi * (x - slit_i.x0) - (vj ** 2 - vi ** 2) * t)
    quad = (m * t / (2.0 * hbar)) * (uj ** 2 * xi_j ** 2 / sj ** 2 - ui ** 2 * xi_i ** 2 / si ** 2)
    shift = slit_j.phase(t) - slit_i.phase(t)
    return linear + quad + shift
