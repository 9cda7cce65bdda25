"""Scenario pipeline, named experiment builders and screen measurements.

:func:`run_scenario` follows the four-stage procedure: initialise each slit's
Gaussian, evolve it with the finite-difference solver, attach phases and
combine the channels into P_tot / J_tot, then integrate trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Sequence

import numpy as np

from .analytic import gaussian_density
from .config import ConfigError, ScenarioConfig, TrajectoryRequest
from .currents import (ChannelSet, CombinedFrame, Coherence, build_channels, combine,
                       convective_current, entangling_current)
from .fdm import NumericalError, Scheme, SlitField, evolve_slit, lab_frame_values, max_stable_dt
from .physics import (NEUTRON_MASS, GridSpec, ParameterError, PhaseSchedule, PhysicalParams,
                      SlitSpec)
from .trajectories import (Seeding, TrajectorySet, advance_trajectories, seed_equal_flux,
                           seed_equidistant, seed_per_slit)

# tails below exp(-m^2/2) with m = 8.5 stay under the 1e-12 boundary threshold
DOMAIN_MARGIN = 8.5


class NoRecurrenceError(NumericalError):
    pass


class CalibrationError(NumericalError):
    pass


class ExtremaError(ParameterError):
    """A screen has too few extrema for a fringe measurement."""


class Attenuation(str, Enum):
    DETERMINISTIC = "deterministic"
    STOCHASTIC = "stochastic"


@dataclass(frozen=True, eq=False)
class ScreenRecord:
    """Forward screen (density vs x at y = L) or sideways screen (flux vs y at x = x_s).

    ``reference`` is the incoherent baseline sum_i a_i w_i P_i on forward
    screens; fringe measurements divide by it.
    """

    orientation: str
    coordinate: np.ndarray
    accumulated: np.ndarray
    position: float
    reference: np.ndarray | None = None
    frame_index: int | None = None

    def total(self) -> float:
        if self.orientation == "forward":
            return float(np.trapezoid(self.accumulated, self.coordinate))
        return float(np.sum(self.accumulated))


@dataclass(frozen=True)
class TalbotResult:
    y_T_observed: float
    z_T_formula: float
    t_T_steps: int
    peak_correlation: float

    @property
    def relative_deviation(self) -> float:
        return abs(self.y_T_observed - self.z_T_formula) / self.z_T_formula


@dataclass(frozen=True, eq=False)
class ScenarioResult:
    frames: list[CombinedFrame]
    trajectories: TrajectorySet | None
    screen: ScreenRecord
    slit_fields: list[list[SlitField]]
    config: ScenarioConfig

    def __iter__(self):
        return iter((self.frames, self.trajectories, self.screen))


# ------------------------------------------------------------- pipeline

def evolve_all(cfg: ScenarioConfig) -> list[list[SlitField]]:
    if not cfg.slits:
        raise ConfigError("scenario has no slits")
    return [evolve_slit(s, cfg.params, cfg.grid, cfg.scheme, slit_id=i)
            for i, s in enumerate(cfg.slits)]


def channels_at(fields: list[list[SlitField]], slits: Sequence[SlitSpec], params: PhysicalParams,
                grid: GridSpec, k: int) -> ChannelSet:
    return build_channels([f[k] for f in fields], slits, params, k * grid.dt, grid)


def combine_frames(fields: list[list[SlitField]], slits: Sequence[SlitSpec], params: PhysicalParams,
                   grid: GridSpec, coherence: Coherence | str = Coherence.COHERENT) -> list[CombinedFrame]:
    coherence = Coherence.parse(coherence)
    return [combine(channels_at(fields, slits, params, grid, k), coherence, t_index=k, t=k * grid.dt)
            for k in range(grid.nt)]


def incoherent_baseline(fields: list[list[SlitField]], slits: Sequence[SlitSpec], grid: GridSpec,
                        k: int) -> np.ndarray:
    return sum(s.amplitude_scale ** 2 * np.clip(lab_frame_values(f[k], s, grid), 0.0, None)
               for f, s in zip(fields, slits))


def _trajectories(cfg: ScenarioConfig, frames: list[CombinedFrame]) -> TrajectorySet | None:
    req = cfg.trajectory
    g = cfg.grid
    if req.mode == "none":
        return None
    src = None
    if req.mode == "equidistant":
        span = req.span
        if span is None:
            xs = [s.x0 for s in cfg.slits]
            span = (max(xs) - min(xs)) + 4.0 * max(s.sigma0 for s in cfg.slits)
        seeds = seed_equidistant(frames[0], req.count, span, g)
    elif req.mode == "equal-flux":
        seeds = seed_equal_flux(frames[0], req.count, g)
    else:
        seeds, src = seed_per_slit(cfg.slits, cfg.params, req.count, g)
    return advance_trajectories(seeds, frames, g, substeps=req.substeps, source_slit=src,
                                seeding=Seeding(req.mode))


def screen_frame_index(params: PhysicalParams, grid: GridSpec, distance: float) -> int:
    """Nearest frame whose mapped forward distance equals ``distance``."""
    k = int(round(float(params.t_of_y(distance)) / grid.dt))
    if k < 0 or k > grid.nt - 1:
        raise ParameterError(f"screen at y={distance:.6g} m lies outside the simulated run "
                             f"(last frame maps to y={float(params.y_of_t(grid.t[-1])):.6g} m)")
    return k


def forward_screen(frames: list[CombinedFrame], fields, cfg: ScenarioConfig, k: int) -> ScreenRecord:
    return ScreenRecord("forward", cfg.grid.x.copy(), np.clip(frames[k].P_tot, 0.0, None),
                        float(cfg.params.y_of_t(k * cfg.grid.dt)),
                        reference=incoherent_baseline(fields, cfg.slits, cfg.grid, k), frame_index=k)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    fields = evolve_all(cfg)
    frames = combine_frames(fields, cfg.slits, cfg.params, cfg.grid, cfg.coherence)
    traj = _trajectories(cfg, frames)
    if cfg.side_screen_x is not None:
        screen = side_screen_flux(frames, cfg.side_screen_x, cfg.grid, cfg.params)
    else:
        k = (screen_frame_index(cfg.params, cfg.grid, cfg.screen_distance)
             if cfg.screen_distance is not None else cfg.grid.nt - 1)
        screen = forward_screen(frames, fields, cfg, k)
    return ScenarioResult(frames, traj, screen, fields, cfg)


# -------------------------------------------------------------- builders

def auto_grid(slits: Sequence[SlitSpec], params: PhysicalParams, t_end: float, nx: int, nt: int,
              margin: float = DOMAIN_MARGIN) -> GridSpec:
    """Symmetric-enough domain holding every slit's Gaussian to ``margin`` widths at t_end."""
    from .analytic import sigma_of_t
    lo = min(s.x0 + min(0.0, s.vx * t_end) - margin * sigma_of_t(s, params, t_end) for s in slits)
    hi = max(s.x0 + max(0.0, s.vx * t_end) + margin * sigma_of_t(s, params, t_end) for s in slits)
    return GridSpec(lo, hi, nx, t_end / (nt - 1), nt)


def neutron(wavelength: float) -> PhysicalParams:
    return PhysicalParams(NEUTRON_MASS, wavelength)


def single_slit_config(*, wavelength: float = 1.8e-9, width: float = 22e-6, ratio: float = 1 / 3,
                       distance: float = 5.0, nx: int = 2001, nt: int = 400,
                       scheme: Scheme | str = Scheme.CRANK_NICOLSON, n_paths: int = 21) -> ScenarioConfig:
    params = neutron(wavelength)
    slits = (SlitSpec(0.0, ratio * width),)
    grid = auto_grid(slits, params, float(params.t_of_y(distance)), nx, nt)
    return ScenarioConfig(params, grid, slits, scheme=scheme,
                          trajectory=TrajectoryRequest("equal-flux", n_paths),
                          screen_distance=distance)


def double_slit_config(*, wavelength: float = 1.8e-9, width: float = 22e-6, separation: float = 200e-6,
                       ratio: float = 1 / 3, distance: float = 5.0, transmission: float = 1.0,
                       phase: PhaseSchedule | None = None, vx: float = 0.0,
                       coherence: Coherence | str = Coherence.COHERENT, nx: int = 4001, nt: int = 400,
                       scheme: Scheme | str = Scheme.CRANK_NICOLSON, n_paths: int = 50,
                       t_end: float | None = None) -> ScenarioConfig:
    """Two equal Gaussian slits; slit 0 carries ``phase``, slit 1 the ``transmission``.

    ``vx`` is the inward drift: slit 0 moves with +vx, slit 1 with -vx.
    """
    params = neutron(wavelength)
    s0 = ratio * width
    slits = (SlitSpec(-0.5 * separation, s0, vx=vx, phase=phase or PhaseSchedule()),
             SlitSpec(0.5 * separation, s0, vx=-vx, transmission=transmission))
    if t_end is None:
        t_end = float(params.t_of_y(distance))
    grid = auto_grid(slits, params, t_end, nx, nt)
    screen = distance if float(params.t_of_y(distance)) <= grid.t[-1] * (1 + 1e-12) else None
    return ScenarioConfig(params, grid, slits, scheme=scheme, coherence=coherence,
                          # seeds inside the openings: the gap holds ~1e-40 of the peak
                          trajectory=TrajectoryRequest("per-slit", max(1, n_paths // 2)),
                          screen_distance=screen)


@dataclass(frozen=True)
class TalbotSetup:
    n_slits: int
    d: float
    dx: float
    dt: float
    wavelength: float = 1e-9
    nx: int = 1000
    nt: int = 400


TALBOT_SETUPS = {
    7: TalbotSetup(7, 1.06e-9, 0.0378e-9, 1.92e-14),
    # 1100 nodes keep the wider sigma0 = d/8 carpet clear of the reflecting ends
    27: TalbotSetup(27, 0.53e-9, 0.0265e-9, 0.48e-14, nx=1100),
}
# sigma0 / d: slit openings of d/2 with sigma0 = opening / 4 (centre of the
# 0.10-0.16 band where the 7-slit recurrence step is insensitive to sigma0)
TALBOT_SIGMA_RATIO = 0.125


def multislit_config(n_slits: int, d: float, *, wavelength: float = 1e-9,
                     sigma_ratio: float = TALBOT_SIGMA_RATIO, dx: float | None = None,
                     dt: float = 1.92e-14, nx: int = 1000, nt: int = 400,
                     scheme: Scheme | str = Scheme.CRANK_NICOLSON, n_paths: int = 0) -> ScenarioConfig:
    """N equal slits with period ``d`` centred on x = 0."""
    if n_slits < 1:
        raise ParameterError("need at least one slit")
    params = neutron(wavelength)
    centres = (np.arange(n_slits) - 0.5 * (n_slits - 1)) * d
    slits = tuple(SlitSpec(float(c), sigma_ratio * d) for c in centres)
    if dx is None:
        dx = d / 28.0
    half = 0.5 * (nx - 1) * dx
    grid = GridSpec(-half, half, nx, dt, nt)
    traj = TrajectoryRequest("per-slit", n_paths) if n_paths else TrajectoryRequest()
    return ScenarioConfig(params, grid, slits, scheme=scheme, trajectory=traj)


def talbot_config(n_slits: int = 7, **overrides) -> ScenarioConfig:
    s = TALBOT_SETUPS[n_slits]
    kw = dict(wavelength=s.wavelength, dx=s.dx, dt=s.dt, nx=s.nx, nt=s.nt)
    kw.update(overrides)
    return multislit_config(s.n_slits, s.d, **kw)


SWEEPER_SIGMA0 = 7.33e-6
SWEEPER_SEPARATION = 200e-6


def sweeper_config(a: float, *, coherence: Coherence | str = Coherence.COHERENT,
                   wavelength: float = 1.8e-9, sigma0: float = SWEEPER_SIGMA0,
                   separation: float = SWEEPER_SEPARATION, t_over_tk: float = 10.0,
                   nx: int = 4001, nt: int = 801, n_per_slit: int = 20,
                   substeps: int = 2) -> ScenarioConfig:
    """Strong beam (weight 1) at -separation/2, attenuated beam (transmission a) at +separation/2."""
    params = neutron(wavelength)
    slits = (SlitSpec(-0.5 * separation, sigma0), SlitSpec(0.5 * separation, sigma0, transmission=a))
    t_k = sigma0 ** 2 / params.diffusion_const
    grid = auto_grid(slits, params, t_over_tk * t_k, nx, nt)
    return ScenarioConfig(params, grid, slits, coherence=coherence,
                          trajectory=TrajectoryRequest("per-slit", n_per_slit, substeps=substeps),
                          side_screen_x=0.5 * separation + 3.0 * sigma0)


def incoherent_config(a: float = 1e-8, **kw) -> ScenarioConfig:
    return sweeper_config(a, coherence=Coherence.INCOHERENT, **kw)


def phase_shift_configs(*, t_end_over_tk: float = 3.0, nx: int = 1201, nt: int = 301):
    """Pair of double-slit runs: 3 pi ramped early, and 5 pi ramped later.

    Returns ``(cfg_3pi, cfg_5pi, t_after)`` where ``t_after`` is the time after
    which both shifts are complete.
    """
    params = neutron(1.8e-9)
    s0 = SWEEPER_SIGMA0
    t_k = s0 ** 2 / params.diffusion_const
    T = t_end_over_tk * t_k
    early = PhaseSchedule.ramp(0.2 * T, 0.4 * T, 3 * math.pi)
    late = PhaseSchedule.ramp(0.5 * T, 0.7 * T, 5 * math.pi)
    out = []
    for sched in (early, late):
        slits = (SlitSpec(-2.5 * s0, s0, phase=sched), SlitSpec(2.5 * s0, s0))
        grid = auto_grid(slits, params, T, nx, nt)
        out.append(ScenarioConfig(params, grid, slits))
    return out[0], out[1], 0.7 * T


# ----------------------------------------------------------------- Talbot

def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    return float(a @ b) / den if den > 0 else 0.0


def talbot_correlations(frames: Sequence[CombinedFrame], d: float, grid: GridSpec, n_slits: int,
                        centre: float = 0.0):
    """Per-frame correlation with the initial pattern shifted by d/2 and unshifted.

    The window excludes the outer two grating periods on each side.
    """
    x = grid.x
    mask = np.abs(x - centre) <= (0.5 * n_slits - 2.0) * d
    P0 = np.asarray(frames[0].P_tot)
    ref_shift = np.interp(x - 0.5 * d, x, P0)[mask]
    ref = P0[mask]
    shifted = np.array([_pearson(np.asarray(f.P_tot)[mask], ref_shift) for f in frames])
    unshifted = np.array([_pearson(np.asarray(f.P_tot)[mask], ref) for f in frames])
    return shifted, unshifted


def talbot_distance_estimate(frames: Sequence[CombinedFrame], d: float, params: PhysicalParams,
                             grid: GridSpec, n_slits: int, centre: float = 0.0,
                             threshold: float = 0.9) -> TalbotResult:
    """Earliest frame maximising the d/2-shifted correlation; y_T = v_y t*."""
    if n_slits < 5:
        raise ParameterError("Talbot estimate needs at least 5 grating periods")
    z_T = d * d / params.wavelength
    y_end = float(params.y_of_t((len(frames) - 1) * grid.dt))
    if not y_end > 2.0 * z_T:
        raise ParameterError(f"run reaches y={y_end:.4g} m, needs more than 2 z_T = {2 * z_T:.4g} m")
    shifted, _ = talbot_correlations(frames, d, grid, n_slits, centre)
    k = int(np.argmax(shifted))  # argmax returns the earliest index on ties
    if shifted[k] < threshold:
        raise NoRecurrenceError(f"best shifted correlation {shifted[k]:.3f} is below {threshold}")
    return TalbotResult(y_T_observed=float(params.y_of_t(k * grid.dt)), z_T_formula=z_T,
                        t_T_steps=k, peak_correlation=float(shifted[k]))


# ------------------------------------------------------------ attenuation

def _check_a(a: float) -> float:
    a = float(a)
    if not 0.0 <= a <= 1.0:
        raise ParameterError(f"transmission factor must lie in [0, 1], got {a!r}")
    return a


def attenuated_intensity(mode: Attenuation | str, a: float, P1, phi) -> np.ndarray:
    """Screen law for a beam of intensity P1 interfering with its attenuated partner."""
    a = _check_a(a)
    mode = Attenuation(mode)
    P1 = np.asarray(P1, dtype=float)
    c = np.cos(np.asarray(phi, dtype=float))
    k = a if mode is Attenuation.DETERMINISTIC else math.sqrt(a)
    return P1 * (1.0 + a + 2.0 * k * c)


def attenuation_screens(a: float, cfg: ScenarioConfig | None = None) -> dict[Attenuation, ScreenRecord]:
    """Forward screens for both attenuation modes on a two-slit setup.

    Deterministic (chopper): the pair is open a fraction a of the time and
    slit 1 is blocked otherwise, so the screen is (1 - a) P_single + a P_pair.
    Stochastic (absorber): slit 1 is permanently attenuated to intensity a.
    Both share the incoherent baseline P_0 + a P_1.
    """
    a = _check_a(a)
    if cfg is None:
        cfg = double_slit_config()
    if len(cfg.slits) != 2:
        raise ParameterError("attenuation screens need exactly two slits")
    open_slits = tuple(replace(s, transmission=1.0) for s in cfg.slits)
    base = replace(cfg, slits=open_slits)
    fields = evolve_all(base)
    k = screen_frame_index(cfg.params, cfg.grid, cfg.screen_distance) \
        if cfg.screen_distance is not None else cfg.grid.nt - 1
    g, p = cfg.grid, cfg.params
    P_pair = combine(channels_at(fields, open_slits, p, g, k)).P_tot
    P_single = open_slits[0].amplitude_scale ** 2 * np.clip(lab_frame_values(fields[0][k], open_slits[0], g), 0.0, None)
    weak = (open_slits[0], replace(open_slits[1], transmission=a))
    P_sto = combine(channels_at(fields, weak, p, g, k)).P_tot
    ref = incoherent_baseline(fields, weak, g, k)
    y = float(p.y_of_t(k * g.dt))
    det = (1.0 - a) * P_single + a * P_pair
    return {Attenuation.DETERMINISTIC: ScreenRecord("forward", g.x.copy(), np.clip(det, 0, None), y, ref, k),
            Attenuation.STOCHASTIC: ScreenRecord("forward", g.x.copy(), np.clip(P_sto, 0, None), y, ref, k)}


def _refine(y: np.ndarray, i: int) -> tuple[float, float]:
    """Parabolic vertex through nodes i-1, i, i+1 as (fractional index, value)."""
    a, b, c = y[i - 1], y[i], y[i + 1]
    den = a - 2.0 * b + c
    if den == 0.0:
        return float(i), float(b)
    off = 0.5 * (a - c) / den
    return i + off, float(b - 0.25 * (a - c) * off)


def _extrema(I: np.ndarray):
    mx = [i for i in range(1, len(I) - 1) if I[i] >= I[i - 1] and I[i] > I[i + 1]]
    mn = [i for i in range(1, len(I) - 1) if I[i] <= I[i - 1] and I[i] < I[i + 1]]
    return mx, mn


def _normalised(screen: ScreenRecord, floor: float = 1e-3):
    I = np.asarray(screen.accumulated, dtype=float)
    if screen.reference is None:
        keep = np.ones(I.size, dtype=bool)
        return I, keep
    ref = np.asarray(screen.reference, dtype=float)
    keep = ref > floor * ref.max()
    out = np.zeros_like(I)
    out[keep] = I[keep] / ref[keep]
    return out, keep


def visibility_estimate(screen: ScreenRecord) -> float:
    """(I_max - I_min)/(I_max + I_min) at the central fringe.

    When the screen carries a baseline the pattern is divided by it first, so
    the envelope does not bias the contrast. I_max is the parabolic vertex of
    the maximum nearest the centre; I_min is the polynomial through up to two
    refined minima on each side, evaluated at the maximum.
    """
    I, keep = _normalised(screen)
    idx = np.flatnonzero(keep)
    lo, hi = int(idx[0]), int(idx[-1])
    sub = I[lo:hi + 1]
    mx, mn = _extrema(sub)
    if len(mx) + len(mn) < 3 or not mx:
        raise ExtremaError(f"screen has {len(mx)} maxima and {len(mn)} minima; need >= 3 extrema")
    # the central fringe sits at the middle of the screen coordinate, which can
    # lie off the middle of the baseline window when one beam is weak
    x = np.asarray(screen.coordinate, dtype=float)
    c = (0.5 * (x[0] + x[-1]) - x[0]) / (x[1] - x[0]) - lo
    im = min(mx, key=lambda i: abs(i - c))
    xm, Imax = _refine(sub, im)
    mins = [_refine(sub, i) for i in mn]
    left = sorted((m for m in mins if m[0] < xm), key=lambda m: -m[0])[:2]
    right = sorted((m for m in mins if m[0] > xm), key=lambda m: m[0])[:2]
    if not left or not right:
        raise ExtremaError("central maximum is not bracketed by minima")
    pts = left + right
    X = np.array([q[0] for q in pts]) - xm
    Y = np.array([q[1] for q in pts])
    Imin = float(np.polyval(np.polyfit(X, Y, len(pts) - 1), 0.0))
    return (Imax - Imin) / (Imax + Imin)


def fringe_spacing(screen: ScreenRecord, n_fringes: int = 3) -> float:
    """Mean distance between refined maxima around the centre of the screen."""
    I, keep = _normalised(screen)
    mx, _ = _extrema(np.where(keep, I, 0.0))
    mx = [i for i in mx if keep[i - 1] and keep[i + 1]]
    if len(mx) < 2:
        raise ExtremaError("need at least two maxima")
    x = np.asarray(screen.coordinate)
    dx = x[1] - x[0]
    pos = np.array([x[0] + _refine(I, i)[0] * dx for i in mx])
    centre = 0.5 * (x[0] + x[-1])
    order = np.argsort(np.abs(pos - centre))[: n_fringes + 1]
    pos = np.sort(pos[order])
    return float(np.mean(np.diff(pos)))


# ------------------------------------------------------- sideways screen

def side_screen_flux(frames: Sequence[CombinedFrame], x_s: float, grid: GridSpec,
                     params: PhysicalParams, stop: float | None = None) -> ScreenRecord:
    """Flux through x = x_s accumulated per time step.

    ``accumulated[k]`` is the trapezoid integral of J(x_s, t) over the step
    ending at frame k (``accumulated[0] = 0``); ``coordinate`` maps the frame
    times to y = v_y t. ``stop`` is a fractional frame index after which the
    screen is closed; the partial step uses linear interpolation of J.
    """
    if not grid.x_min <= x_s <= grid.x_max:
        raise ParameterError(f"x_s={x_s!r} lies outside the grid")
    J = np.array([float(np.interp(x_s, grid.x, f.J_tot)) for f in frames])
    acc = np.zeros(J.size)
    acc[1:] = 0.5 * (J[1:] + J[:-1]) * grid.dt
    if stop is not None:
        stop = float(np.clip(stop, 0.0, J.size - 1))
        k = int(math.floor(stop))
        frac = stop - k
        acc[k + 1:] = 0.0
        if frac > 0.0:
            J_stop = J[k] + frac * (J[k + 1] - J[k])
            acc[k + 1] = 0.5 * (J[k] + J_stop) * frac * grid.dt
    return ScreenRecord("sideways", params.y_of_t(grid.t[:J.size]), acc, float(x_s))


def mass_beyond(frames: Sequence[CombinedFrame], x_s: float, grid: GridSpec) -> np.ndarray:
    """Probability right of x_s in every frame (trapezoid, with the partial cell)."""
    x = grid.x
    out = np.empty(len(frames))
    j = int(np.searchsorted(x, x_s))
    for k, f in enumerate(frames):
        P = np.asarray(f.P_tot)
        if j >= x.size:
            out[k] = 0.0
            continue
        tail = np.trapezoid(P[j:], x[j:]) if x.size - j > 1 else 0.0
        if j > 0:
            Ps = np.interp(x_s, x, P)
            tail += 0.5 * (Ps + P[j]) * (x[j] - x_s)
        out[k] = tail
    return out


@dataclass(frozen=True, eq=False)
class SweeperResult:
    a: float
    screen: ScreenRecord
    flux: float
    weak_weight: float
    crossing: float | None
    mass_beyond: np.ndarray
    scenario: ScenarioResult

    @property
    def relative_error(self) -> float:
        return abs(self.flux - self.weak_weight) / self.weak_weight


def sweeper_run(a: float, cfg: ScenarioConfig | None = None) -> SweeperResult:
    """Sideways-screen flux of the attenuated beam.

    The screen stays open until the separatrix between the strong and weak
    tubes reaches x_s. By flux preservation that is the moment the probability
    right of x_s first equals the weak weight a; it is located by linear
    interpolation between frames.
    """
    if cfg is None:
        cfg = sweeper_config(a)
    res = run_scenario(cfg)
    g = cfg.grid
    x_s = cfg.side_screen_x if cfg.side_screen_x is not None else cfg.slits[-1].x0 + 3 * cfg.slits[-1].sigma0
    weak = cfg.slits[-1].amplitude_scale ** 2
    M = mass_beyond(res.frames, x_s, g)
    hit = np.flatnonzero(M >= weak)
    crossing = None
    if hit.size and hit[0] > 0:
        k = int(hit[0])
        crossing = (k - 1) + (weak - M[k - 1]) / (M[k] - M[k - 1])
    screen = side_screen_flux(res.frames, x_s, g, cfg.params, stop=crossing)
    return SweeperResult(a=a, screen=screen, flux=screen.total(), weak_weight=weak,
                         crossing=crossing, mass_beyond=M, scenario=res)


# ------------------------------------------------------------ calibration

@dataclass(frozen=True)
class CalibrationSetup:
    wavelength: float = 1.845e-9
    widths: tuple[float, float] = (21.9e-6, 22.5e-6)
    separation: float = 126.3e-6
    distance: float = 5.0
    mass: float = NEUTRON_MASS


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    ratio: float
    ratios: np.ndarray
    errors: np.ndarray


def _calibration_slits(setup: CalibrationSetup, ratio: float) -> tuple[SlitSpec, SlitSpec]:
    w1, w2 = setup.widths
    c = 0.5 * setup.separation
    # intensities proportional to the opening widths
    wmax = max(w1, w2)
    return (SlitSpec(-c, ratio * w1, weight=w1 / wmax), SlitSpec(c, ratio * w2, weight=w2 / wmax))


def simulated_profile(setup: CalibrationSetup, ratio: float, x, *, nx: int = 3001, nt: int = 400,
                      scheme: Scheme | str = Scheme.CRANK_NICOLSON) -> np.ndarray:
    """Finite-difference forward-screen profile for sigma0 = ratio * width, sampled at x."""
    params = PhysicalParams(setup.mass, setup.wavelength)
    slits = _calibration_slits(setup, ratio)
    T = float(params.t_of_y(setup.distance))
    x = np.asarray(x, dtype=float)
    grid = auto_grid(slits, params, T, nx, nt)
    if x.min() < grid.x_min or x.max() > grid.x_max:
        half = max(abs(x.min()), abs(x.max()), grid.x_max)
        grid = GridSpec(-half, half, nx, grid.dt, nt)
    fields = [evolve_slit(s, params, grid, scheme, slit_id=i) for i, s in enumerate(slits)]
    P = combine(channels_at(fields, slits, params, grid, grid.nt - 1)).P_tot
    return np.interp(x, grid.x, P)


def analytic_profile(setup: CalibrationSetup, ratio: float, x) -> np.ndarray:
    """Closed-form counterpart of :func:`simulated_profile` on a uniform x grid."""
    params = PhysicalParams(setup.mass, setup.wavelength)
    slits = _calibration_slits(setup, ratio)
    T = float(params.t_of_y(setup.distance))
    x = np.asarray(x, dtype=float)
    g = GridSpec(float(x[0]), float(x[-1]), x.size, T, 1)
    if not np.allclose(g.x, x, rtol=0.0, atol=1e-9 * g.dx):
        raise ParameterError("analytic_profile needs a uniform x grid")
    frames = [SlitField(gaussian_density(s, params, g.x, T), 0, i, Scheme.CRANK_NICOLSON)
              for i, s in enumerate(slits)]
    return combine(build_channels(frames, slits, params, T, g)).P_tot


def _area_normalise(x: np.ndarray, I: np.ndarray) -> np.ndarray:
    area = float(np.trapezoid(I, x))
    if not area > 0:
        raise CalibrationError("profile has no positive area")
    return I / area


def calibrate_sigma0(x, measured, setup: CalibrationSetup = CalibrationSetup(), *,
                     ratios=None, min_fringes: int = 5, **sim_kw) -> CalibrationResult:
    """Grid search of sigma0 / width over [0.2, 0.5] by area-normalised L2 distance."""
    x = np.asarray(x, dtype=float)
    measured = np.asarray(measured, dtype=float)
    if x.shape != measured.shape or x.ndim != 1 or x.size < 5:
        raise ParameterError("measured curve must be a 1-D sample with matching x")
    if not np.all(np.diff(x) > 0):
        raise ParameterError("measured x must be strictly increasing")
    span = float(np.ptp(measured))
    mx, _ = _extrema(measured)
    if span <= 1e-12 * max(1.0, float(np.max(np.abs(measured)))) or len(mx) < min_fringes:
        raise CalibrationError(f"measured curve shows {len(mx)} fringes; need >= {min_fringes}")
    target = _area_normalise(x, measured)
    if ratios is None:
        ratios = np.round(np.arange(0.2, 0.5 + 1e-9, 0.005), 6)
    ratios = np.asarray(ratios, dtype=float)
    errs = np.array([math.sqrt(float(np.trapezoid(
        (_area_normalise(x, simulated_profile(setup, r, x, **sim_kw)) - target) ** 2, x)))
        for r in ratios])
    i = int(np.argmin(errs))
    if i == 0 or i == ratios.size - 1:
        raise CalibrationError(f"L2 distance is minimal at the search boundary ratio {ratios[i]:.3f}")
    return CalibrationResult(ratio=float(ratios[i]), ratios=ratios, errors=errs)


# ------------------------------------------------------ current dominance

def entangling_dominance(ch: ChannelSet, coherence: Coherence | str = Coherence.COHERENT) -> float:
    """max |J_e| / max |convective part of J_tot| on one frame."""
    Je = entangling_current(ch, coherence)
    Jc = convective_current(ch, coherence)
    den = float(np.max(np.abs(Jc)))
    return float(np.max(np.abs(Je))) / den if den > 0 else math.inf


# ---------------------------------------------------- solver studies

@dataclass(frozen=True)
class ConvergenceStudy:
    scheme: Scheme
    nx: tuple[int, ...]
    nt: tuple[int, ...]
    errors: tuple[float, ...]

    @property
    def factors(self) -> tuple[float, ...]:
        e = self.errors
        return tuple(e[i] / e[i + 1] for i in range(len(e) - 1))


def _max_relative_error(fields: list[SlitField], slit: SlitSpec, params: PhysicalParams,
                        grid: GridSpec, n_checks: int = 8) -> float:
    err = 0.0
    for k in range(0, grid.nt, max(1, (grid.nt - 1) // n_checks)):
        exact = gaussian_density(slit, params, grid.x, k * grid.dt)
        err = max(err, float(np.max(np.abs(fields[k].values - exact)) / np.max(exact)))
    return err


def convergence_study(scheme: Scheme | str, *, t_over_tk: float = 0.3, nx0: int = 201,
                      nt0: int | None = None, levels: int = 2, d_max: float = 0.2,
                      wavelength: float = 1.8e-9, sigma0: float = SWEEPER_SIGMA0) -> ConvergenceStudy:
    """Error against the closed form while dx and dt are halved together.

    Without ``nt0`` the coarsest step count puts the final explicit
    coefficient d at ``d_max``; each halving of both steps doubles d, so
    ``d_max * 2**(levels - 1)`` must stay below 1/2 for the explicit scheme.
    The domain spans 9 sigma(T) on each side.
    """
    scheme = Scheme.parse(scheme)
    params = neutron(wavelength)
    slit = SlitSpec(0.0, sigma0)
    D = params.diffusion_const
    T = t_over_tk * sigma0 ** 2 / D
    half = 9.0 * sigma0 * math.sqrt(1.0 + t_over_tk ** 2)
    if nt0 is None:
        dx = 2.0 * half / (nx0 - 1)
        nt0 = int(math.ceil(D * D * T * T / (d_max * sigma0 ** 2 * dx * dx))) + 1
    nxs, nts, errs = [], [], []
    for lev in range(levels):
        nx, nt = (nx0 - 1) * 2 ** lev + 1, (nt0 - 1) * 2 ** lev + 1
        grid = GridSpec(-half, half, nx, T / (nt - 1), nt)
        fields = evolve_slit(slit, params, grid, scheme)
        nxs.append(nx)
        nts.append(nt)
        errs.append(_max_relative_error(fields, slit, params, grid))
    return ConvergenceStudy(scheme, tuple(nxs), tuple(nts), tuple(errs))


def explicit_probe_grid(factor: float, *, nt: int = 8000, dx: float = 0.05,
                        margin: float = DOMAIN_MARGIN) -> tuple[SlitSpec, PhysicalParams, GridSpec]:
    """Unit-D single slit (hbar = 1, m = 1/2, sigma0 = 1) stepped at factor * dt_max.

    The domain is sized to hold the spread at the end of the run, so any
    negative node comes from the scheme and not from the reflecting ends.
    """
    params = PhysicalParams(0.5, 1.0, hbar=1.0)
    slit = SlitSpec(0.0, 1.0)
    T = factor * dx / math.sqrt(2.0 * nt) * (nt - 1)
    half = margin * math.sqrt(1.0 + T * T)
    nx = int(2.0 * half / dx) + 1
    probe = GridSpec(-half, half, nx, 1.0, nt)
    grid = GridSpec(-half, half, nx, factor * max_stable_dt(probe, slit, params), nt)
    return slit, params, grid
