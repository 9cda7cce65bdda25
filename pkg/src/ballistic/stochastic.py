"""Bouncer and walker toy model: Langevin walker ensembles, the driven damped
oscillator, and the balance of their work-energies per period.

Random numbers: every ensemble member owns a Philox-4x64 counter-based stream
keyed by ``(seed, member)``; standard normals come from those uniforms by the
Box-Muller transform. The generator description is stored with each result.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .physics import ParameterError

RNG_NAME = "numpy Philox4x64-10, key=(seed, member); Box-Muller normals"
BATCH_DOUBLES = 8_000_000


def _positive(name: str, value: float, allow_zero: bool = False) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0 or (value == 0 and not allow_zero):
        raise ParameterError(f"{name} must be {'>= 0' if allow_zero else 'positive'}, got {value!r}")
    return value


@dataclass(frozen=True)
class WalkerConfig:
    mass: float
    zeta: float
    lambda_noise: float
    dt: float
    n_steps: int
    n_ensemble: int
    rng_seed: int = 0
    n_dims: int = 1
    u0: float = 0.0
    record_every: int = 1

    def __post_init__(self) -> None:
        _positive("mass", self.mass)
        _positive("zeta", self.zeta)
        _positive("lambda_noise", self.lambda_noise, allow_zero=True)
        _positive("dt", self.dt)
        for name in ("n_steps", "n_ensemble", "n_dims", "record_every"):
            if int(getattr(self, name)) < 1:
                raise ParameterError(f"{name} must be >= 1")
        if self.zeta * self.dt >= 0.1:
            raise ParameterError(f"zeta*dt = {self.zeta * self.dt:.3g} must stay below 0.1")
        if int(self.rng_seed) < 0:
            raise ParameterError("rng_seed must be a non-negative integer")

    @property
    def stationary_u2(self) -> float:
        """<u^2> per dimension, lambda / (2 zeta m^2)."""
        return self.lambda_noise / (2.0 * self.zeta * self.mass ** 2)

    @property
    def diffusion(self) -> float:
        """D = lambda / (2 zeta^2 m^2)."""
        return self.lambda_noise / (2.0 * self.zeta ** 2 * self.mass ** 2)


@dataclass(frozen=True)
class BouncerConfig:
    mass: float
    omega0: float
    gamma: float
    F0: float
    dt: float
    n_steps: int

    def __post_init__(self) -> None:
        _positive("mass", self.mass)
        _positive("omega0", self.omega0)
        _positive("gamma", self.gamma, allow_zero=True)
        _positive("dt", self.dt)
        if not math.isfinite(self.F0):
            raise ParameterError("F0 must be finite")
        if int(self.n_steps) < 1:
            raise ParameterError("n_steps must be >= 1")

    @property
    def omega(self) -> float:
        """Driving frequency; the model drives at resonance."""
        return self.omega0

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.omega0

    @property
    def slowest_rate(self) -> float:
        """Decay rate of the slowest homogeneous mode."""
        g, w = self.gamma, self.omega0
        return g if g <= w else g - math.sqrt(g * g - w * w)

    @property
    def transient_time(self) -> float:
        # 10/gamma, lengthened to 10 e-folds of the slow mode when overdamped
        if self.gamma == 0.0:
            return 0.0
        return max(10.0 / self.gamma, 10.0 / self.slowest_rate)


@dataclass(frozen=True, eq=False)
class WalkerEnsemble:
    t: np.ndarray
    u: np.ndarray  # (n_ensemble, n_records, n_dims)
    x: np.ndarray
    config: WalkerConfig
    rng: str = RNG_NAME


@dataclass(frozen=True, eq=False)
class BouncerRun:
    t: np.ndarray
    x: np.ndarray
    v: np.ndarray
    config: BouncerConfig
    amplitude: float
    phase: float
    fit_start: float


# --------------------------------------------------------------- walker

def _normals(gen: np.random.Generator, n: int) -> np.ndarray:
    """Box-Muller standard normals from the generator's uniforms."""
    half = (n + 1) // 2
    u1 = 1.0 - gen.random(half)  # (0, 1], keeps the log finite
    u2 = gen.random(half)
    r = np.sqrt(-2.0 * np.log(u1))
    z = np.concatenate([r * np.cos(2.0 * math.pi * u2), r * np.sin(2.0 * math.pi * u2)])
    return z[:n]


def simulate_walker(cfg: WalkerConfig) -> WalkerEnsemble:
    """Euler-Maruyama: u <- u - zeta u dt + sqrt(lambda dt)/m N(0,1); x <- x + u dt.

    Members are processed in batches; each member draws its whole noise
    sequence from its own stream, so results do not depend on the batching.
    """
    ne, nd = int(cfg.n_ensemble), int(cfg.n_dims)
    n_steps, every = int(cfg.n_steps), int(cfg.record_every)
    n_rec = n_steps // every + 1
    U = np.empty((ne, n_rec, nd))
    X = np.empty((ne, n_rec, nd))
    decay = 1.0 - cfg.zeta * cfg.dt
    kick = math.sqrt(cfg.lambda_noise * cfg.dt) / cfg.mass
    batch = max(1, BATCH_DOUBLES // max(1, n_steps * nd))
    for lo in range(0, ne, batch):
        hi = min(ne, lo + batch)
        u = np.full((hi - lo, nd), float(cfg.u0))
        x = np.zeros((hi - lo, nd))
        U[lo:hi, 0], X[lo:hi, 0] = u, x
        noise = None
        if kick > 0:
            noise = np.stack([_normals(np.random.Generator(np.random.Philox(key=[int(cfg.rng_seed), k])),
                                       n_steps * nd).reshape(n_steps, nd) for k in range(lo, hi)], axis=1)
            noise *= kick
        rec = 1
        for j in range(n_steps):
            u *= decay
            if noise is not None:
                u += noise[j]
            x += u * cfg.dt
            if (j + 1) % every == 0:
                U[lo:hi, rec], X[lo:hi, rec] = u, x
                rec += 1
    t = np.arange(n_rec) * every * cfg.dt
    return WalkerEnsemble(t=t, u=U, x=X, config=cfg)


def stationary_mask(ens: WalkerEnsemble) -> np.ndarray:
    return ens.t >= 10.0 / ens.config.zeta


def mean_square_velocity(ens: WalkerEnsemble) -> tuple[float, float]:
    """Stationary <u^2> per dimension and its standard error.

    The standard error treats ensemble members as the independent samples,
    each contributing its own time average.
    """
    mask = stationary_mask(ens)
    if mask.sum() < 2:
        raise ParameterError("run too short: no stationary samples after 10/zeta")
    per_member = np.mean(ens.u[:, mask, :] ** 2, axis=(1, 2))
    se = float(np.std(per_member, ddof=1) / math.sqrt(per_member.size)) if per_member.size > 1 else math.inf
    return float(per_member.mean()), se


def velocity_autocorrelation(ens: WalkerEnsemble, max_lag: int):
    """Stationary <u(t) u(t + lag)> for lags 0..max_lag (in record units)."""
    mask = np.flatnonzero(stationary_mask(ens))
    if mask.size <= max_lag + 1:
        raise ParameterError("stationary window shorter than the requested lag range")
    u = ens.u[:, mask, :]
    n = u.shape[1]
    C = np.array([np.mean(u[:, : n - k, :] * u[:, k:, :]) for k in range(max_lag + 1)])
    lags = np.arange(max_lag + 1) * (ens.t[1] - ens.t[0])
    return lags, C


def fit_decay_rate(lags: np.ndarray, C: np.ndarray, floor: float = 0.05) -> float:
    """Rate of an exponential fitted to C(lag) from a log-linear least-squares fit."""
    keep = C > floor * C[0]
    if keep.sum() < 3:
        raise ParameterError("too few positive correlation points to fit")
    slope = np.polyfit(lags[keep], np.log(C[keep]), 1)[0]
    return float(-slope)


def estimate_msd(ens: WalkerEnsemble, window_frac: float = 0.5):
    """Slope of <x^2(t)> (per dimension) over the late part of the run.

    The window starts after the transient 10/zeta and covers at least the
    last ``window_frac`` of the run. Returns ``(slope, t_window, msd)``.
    """
    t = ens.t
    msd = np.mean(ens.x ** 2, axis=(0, 2))
    t_start = max(10.0 / ens.config.zeta, t[-1] * (1.0 - window_frac))
    keep = t >= t_start
    if keep.sum() < 3 or (t[-1] - t_start) < 5.0 / ens.config.zeta:
        raise ParameterError("late-time window is too short for an MSD slope")
    slope = float(np.polyfit(t[keep], msd[keep], 1)[0])
    return slope, t[keep], msd[keep]


# -------------------------------------------------------------- bouncer

def fit_oscillation(t: np.ndarray, x: np.ndarray, omega: float) -> tuple[float, float]:
    """Least-squares r, phi for x = r cos(omega t + phi)."""
    A = np.column_stack([np.cos(omega * t), np.sin(omega * t)])
    (a, b), *_ = np.linalg.lstsq(A, x, rcond=None)
    return float(math.hypot(a, b)), float(math.atan2(-b, a))


def simulate_bouncer(cfg: BouncerConfig, x0: float = 0.0, v0: float = 0.0) -> BouncerRun:
    """RK4 integration from rest, with r and phi fitted after the transient."""
    xs, vs = kernels.bouncer_rk4(float(x0), float(v0), cfg.omega0, cfg.gamma, cfg.F0 / cfg.mass,
                                 cfg.omega, cfg.dt, int(cfg.n_steps))
    t = np.arange(int(cfg.n_steps) + 1) * cfg.dt
    t_fit = cfg.transient_time
    keep = t >= t_fit
    if keep.sum() < 8 or t[-1] - t_fit < cfg.period:
        raise ParameterError(f"run of {t[-1]:.4g} s does not cover a period after the "
                             f"transient {t_fit:.4g} s")
    r, phi = fit_oscillation(t[keep], xs[keep], cfg.omega)
    return BouncerRun(t=t, x=np.asarray(xs), v=np.asarray(vs), config=cfg, amplitude=r, phase=phi,
                      fit_start=t_fit)


def last_period(run: BouncerRun) -> slice:
    n = int(round(run.config.period / run.config.dt))
    if n + 1 > run.t.size or run.t[-1 - n] < run.fit_start:
        raise ParameterError("no full stationary period available")
    return slice(run.t.size - 1 - n, run.t.size)


def bouncer_work(run: BouncerRun) -> float:
    """Friction work over the last period, integral of 2 gamma m v^2 dt."""
    s = last_period(run)
    c = run.config
    return float(np.trapezoid(2.0 * c.gamma * c.mass * run.v[s] ** 2, run.t[s]))


def bouncer_energy(run: BouncerRun) -> np.ndarray:
    """E_kin + E_pot along the last stationary period."""
    s = last_period(run)
    c = run.config
    return 0.5 * c.mass * run.v[s] ** 2 + 0.5 * c.mass * c.omega0 ** 2 * run.x[s] ** 2


# -------------------------------------------------------------- balance

@dataclass(frozen=True)
class BalanceReport:
    W_bouncer: float
    W_walker: float
    ratio: float
    W_bouncer_target: float
    W_walker_target: float
    amplitude: float
    phase: float
    u2: float
    u2_se: float
    period: float
    n_dims: int
    rng: str = RNG_NAME
    notes: tuple[str, ...] = field(default_factory=tuple)


def work_energy_balance(walker: WalkerConfig, bouncer: BouncerConfig, hbar: float = 1.0,
                        ensemble: WalkerEnsemble | None = None,
                        run: BouncerRun | None = None) -> BalanceReport:
    """Both work-energies per bouncer period tau = 2 pi / omega0.

    W_bouncer integrates the friction power over one stationary period.
    W_walker = tau m zeta <u^2> with <u^2> summed over the walker dimensions.
    Targets: 2 pi gamma m omega0 r^2 and 2 tau zeta E_zp with E_zp = hbar omega0 / 2.
    """
    if not math.isclose(walker.mass, bouncer.mass, rel_tol=1e-12):
        raise ParameterError("walker and bouncer must share the mass")
    run = run or simulate_bouncer(bouncer)
    ens = ensemble or simulate_walker(walker)
    tau = bouncer.period
    u2, se = mean_square_velocity(ens)
    n = walker.n_dims
    W_b = bouncer_work(run)
    W_w = tau * walker.mass * walker.zeta * u2 * n
    E_zp = 0.5 * hbar * bouncer.omega0
    return BalanceReport(
        W_bouncer=W_b, W_walker=W_w, ratio=W_w / W_b if W_b > 0 else math.inf,
        W_bouncer_target=2.0 * math.pi * bouncer.gamma * bouncer.mass * bouncer.omega0 * run.amplitude ** 2,
        W_walker_target=2.0 * tau * walker.zeta * E_zp * n,
        amplitude=run.amplitude, phase=run.phase, u2=u2, u2_se=se, period=tau, n_dims=n)


def balanced_configs(*, hbar: float = 1.0, mass: float = 1.0, omega0: float = 1.0,
                     n_ensemble: int = 40_000, seed: int = 0, n_dims: int = 1,
                     zeta_dt: float = 0.003, t_total: float | None = None,
                     record_every: int | None = None) -> tuple[WalkerConfig, BouncerConfig]:
    """Synthetic-unit pair with zeta = gamma = 2 omega0 and m r^2 omega0 = hbar.

    The walker noise is set so m <u^2> = hbar omega0 (its zero-point share),
    and the bouncer force so the resonant amplitude r = sqrt(hbar/(m omega0)).
    """
    zeta = gamma = 2.0 * omega0
    r = math.sqrt(hbar / (mass * omega0))
    F0 = 2.0 * gamma * mass * omega0 * r
    lam = 2.0 * zeta * mass * hbar * omega0
    dt_w = zeta_dt / zeta
    if t_total is None:
        t_total = 30.0 / zeta
    n_steps = int(round(t_total / dt_w))
    if record_every is None:
        record_every = max(1, n_steps // 200)
    walker = WalkerConfig(mass, zeta, lam, dt_w, n_steps, n_ensemble, seed, n_dims,
                          record_every=record_every)
    tau = 2.0 * math.pi / omega0
    dt_b = tau / 2000.0
    b_probe = BouncerConfig(mass, omega0, gamma, F0, dt_b, 1)
    n_b = int(math.ceil((b_probe.transient_time + 3.0 * tau) / dt_b))
    bouncer = BouncerConfig(mass, omega0, gamma, F0, dt_b, n_b)
    return walker, bouncer
