"""Projection-rule combination of per-slit channels.

Each slit i contributes an amplitude R_i, a convective velocity v_i and an
osmotic velocity u_i; every pair carries a phase difference phi_ij. From those
the total intensity, the total current and the emergent velocity follow:

    P_tot = sum_i R_i^2 + sum_{i<j} 2 R_i R_j cos(phi_ij)
    J_tot = sum_i R_i^2 v_i
            + sum_{i<j} R_i R_j [(v_i + v_j) cos(phi_ij) + (u_i - u_j) sin(phi_ij)]

Only x-components are stored; the shared forward velocity drops out.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .analytic import kinematic_fields, osmotic_velocity, phase_of
from .fdm import NumericalError, SlitField, lab_frame_values
from .physics import GridSpec, ParameterError, PhysicalParams, SlitSpec

R_FLOOR = 1e-300
EPS_REL = 1e-30


class Coherence(str, Enum):
    COHERENT = "coherent"
    INCOHERENT = "incoherent"

    @classmethod
    def parse(cls, value: "Coherence | str") -> "Coherence":
        if isinstance(value, Coherence):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ParameterError(f"unknown coherence {value!r}; expected 'coherent' or 'incoherent'") from None


class ShapeError(ParameterError):
    pass


class DegenerateFieldError(NumericalError):
    pass


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Per-slit grids, shape (n_slits, nx); ``phi`` is (n, n, nx), antisymmetric."""

    R: np.ndarray
    v: np.ndarray
    u: np.ndarray
    phi: np.ndarray
    dx: float

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def pairs(self):
        return np.triu_indices(self.n, 1)


@dataclass(frozen=True, eq=False)
class CombinedFrame:
    P_tot: np.ndarray
    J_tot: np.ndarray
    v_tot: np.ndarray
    J_e: np.ndarray
    t_index: int = 0
    t: float = 0.0


def _osmotic_from_amplitude(R: np.ndarray, dx: float, hbar: float, mass: float,
                            fallback: np.ndarray) -> np.ndarray:
    """u = -(hbar/m) dR/dx / R by central differences; closed form where R underflows."""
    dR = np.gradient(R, dx, edge_order=2)
    bad = R < R_FLOOR
    # a central difference touching an underflowed neighbour is meaningless too
    bad[1:-1] |= (R[:-2] < R_FLOOR) | (R[2:] < R_FLOOR)
    bad[0] |= R[1] < R_FLOOR
    bad[-1] |= R[-2] < R_FLOOR
    with np.errstate(divide="ignore", invalid="ignore"):
        u = -(hbar / mass) * dR / R
    return np.where(bad, fallback, u)


def build_channels(frames: Sequence[SlitField], slits: Sequence[SlitSpec], params: PhysicalParams,
                   t: float, grid: GridSpec, total_energy: float = 0.0) -> ChannelSet:
    if len(frames) != len(slits):
        raise ShapeError(f"{len(frames)} fields for {len(slits)} slits")
    if not slits:
        raise ShapeError("at least one slit is required")
    x = grid.x
    n = len(slits)
    idx = {f.t_index for f in frames}
    if len(idx) > 1:
        raise ShapeError(f"slit fields are at different time steps: {sorted(idx)}")
    R = np.empty((n, grid.nx))
    v = np.empty_like(R)
    u = np.empty_like(R)
    for i, (f, s) in enumerate(zip(frames, slits)):
        vals = np.asarray(f.values, dtype=float)
        if vals.shape != (grid.nx,):
            raise ShapeError(f"slit {i} field has shape {vals.shape}, expected ({grid.nx},)")
        vals = lab_frame_values(f, s, grid)
        # CN roundoff can leave tiny negative tails; amplitudes need P >= 0
        R[i] = s.amplitude_scale * np.sqrt(np.clip(vals, 0.0, None))
        v[i] = kinematic_fields(s, params, x, t)[0]
        u[i] = _osmotic_from_amplitude(R[i], grid.dx, params.hbar, params.mass,
                                       osmotic_velocity(s, params, x, t))
    # one phase per slit, then phi_ij = Phi_j - Phi_i by broadcasting; this is
    # algebraically the expanded phase_difference form (checked in the tests)
    Phi = np.stack([phase_of(s, params, total_energy, x, t) + s.phase(t) for s in slits])
    phi = Phi[None, :, :] - Phi[:, None, :]
    return ChannelSet(R=R, v=v, u=u, phi=phi, dx=grid.dx)


def _cos_sin(ch: ChannelSet, coherence: Coherence):
    iu, ju = ch.pairs()
    RR = ch.R[iu] * ch.R[ju]
    if coherence is Coherence.COHERENT:
        ph = ch.phi[iu, ju]
        return iu, ju, RR, np.cos(ph), np.sin(ph)
    # incoherent superposition: interference term dropped, sin factor set to one
    return iu, ju, RR, np.zeros_like(RR), np.ones_like(RR)


def relational_intensities(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT):
    """Per-channel ``(P_v, P_u)`` grids of shape (n, nx); entries may be negative."""
    coherence = Coherence.parse(coherence)
    Pv = ch.R ** 2
    Pu = np.zeros_like(Pv)
    iu, ju, RR, c, s = _cos_sin(ch, coherence)
    for k in range(len(iu)):
        i, j = iu[k], ju[k]
        Pv[i] += RR[k] * c[k]
        Pv[j] += RR[k] * c[k]
        # lower index takes +sin, higher -sin
        Pu[i] += RR[k] * s[k]
        Pu[j] -= RR[k] * s[k]
    return Pv, Pu


def total_intensity(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT) -> np.ndarray:
    """Coherent: the perfect square |sum_j R_j exp(i phi_0j)|^2, nonnegative node by node.

    It equals sum_i R_i^2 + sum_{i<j} 2 R_i R_j cos(phi_ij) analytically; the
    square form keeps rounding from producing negative nodes in the far tails.
    """
    coherence = Coherence.parse(coherence)
    if coherence is Coherence.COHERENT and ch.n > 1:
        psi = ch.phi[0]
        re = np.sum(ch.R * np.cos(psi), axis=0)
        im = np.sum(ch.R * np.sin(psi), axis=0)
        return re * re + im * im
    return np.sum(ch.R ** 2, axis=0)


def convective_current(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT) -> np.ndarray:
    """The v-weighted part of J_tot (everything except the entangling term)."""
    coherence = Coherence.parse(coherence)
    J = np.sum(ch.R ** 2 * ch.v, axis=0)
    if ch.n > 1 and coherence is Coherence.COHERENT:
        iu, ju, RR, c, _ = _cos_sin(ch, coherence)
        J = J + np.sum(RR * (ch.v[iu] + ch.v[ju]) * c, axis=0)
    return J


def entangling_current(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT,
                       *, form: str = "velocity", hbar: float | None = None,
                       mass: float | None = None) -> np.ndarray:
    """J_e = sum_{i<j} R_i R_j (u_i - u_j) sin(phi_ij).

    ``form="gradient"`` evaluates the equivalent (hbar/m)(R_i R_j' - R_j R_i')
    expression from numerical derivatives of R and needs ``hbar`` and ``mass``.
    """
    if ch.n < 2:
        raise ParameterError("the entangling current needs at least two slits")
    coherence = Coherence.parse(coherence)
    iu, ju, RR, _, s = _cos_sin(ch, coherence)
    if form == "velocity":
        return np.sum(RR * (ch.u[iu] - ch.u[ju]) * s, axis=0)
    if form == "gradient":
        if hbar is None or mass is None:
            raise ParameterError("gradient form needs hbar and mass")
        dR = np.gradient(ch.R, ch.dx, axis=1, edge_order=2)
        terms = ch.R[iu] * dR[ju] - ch.R[ju] * dR[iu]
        return (hbar / mass) * np.sum(terms * s, axis=0)
    raise ParameterError(f"unknown form {form!r}")


def total_current(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT) -> np.ndarray:
    J = convective_current(ch, coherence)
    if ch.n > 1:
        J = J + entangling_current(ch, coherence)
    return J


def emergent_velocity(P_tot: np.ndarray, J_tot: np.ndarray) -> np.ndarray:
    """v_tot = J/P where P > 1e-30 * peak; other nodes copy the nearest valid node."""
    P = np.asarray(P_tot, dtype=float)
    J = np.asarray(J_tot, dtype=float)
    if P.shape != J.shape:
        raise ShapeError(f"P_tot {P.shape} and J_tot {J.shape} differ in shape")
    peak = float(np.max(P)) if P.size else 0.0
    if not peak > 0.0:
        raise DegenerateFieldError("P_tot is identically zero")
    valid = P > EPS_REL * peak
    v = np.zeros_like(P)
    v[valid] = J[valid] / P[valid]
    if not np.all(valid):
        good = np.flatnonzero(valid)
        pos = np.searchsorted(good, np.arange(P.size))
        left = good[np.clip(pos - 1, 0, good.size - 1)]
        right = good[np.clip(pos, 0, good.size - 1)]
        idx = np.arange(P.size)
        nearest = np.where(np.abs(idx - left) <= np.abs(right - idx), left, right)
        v = v[nearest]
    return v


def combine(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT, *,
            t_index: int = 0, t: float = 0.0) -> CombinedFrame:
    coherence = Coherence.parse(coherence)
    P = total_intensity(ch, coherence)
    Jc = convective_current(ch, coherence)
    Je = entangling_current(ch, coherence) if ch.n > 1 else np.zeros_like(P)
    J = Jc + Je
    return CombinedFrame(P_tot=P, J_tot=J, v_tot=emergent_velocity(P, J), J_e=Je,
                         t_index=t_index, t=t)
