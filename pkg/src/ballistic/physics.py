"""Physical constants, slit and grid specifications, derived quantities."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

HBAR = 1.054571817e-34
H_PLANCK = 2.0 * math.pi * HBAR
NEUTRON_MASS = 1.675e-27


class ParameterError(ValueError):
    """Raised when a physical or numerical parameter is out of range."""


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ParameterError(msg)


def _finite(value: float, name: str) -> float:
    value = float(value)
    _require(math.isfinite(value), f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class PhysicalParams:
    """Particle mass, action constant and forward wavelength.

    ``diffusion_const`` and ``forward_velocity`` are recomputed from the
    stored fields on every access so they can never drift out of sync.
    """

    mass: float
    wavelength: float
    hbar: float = HBAR

    def __post_init__(self) -> None:
        for name in ("mass", "wavelength", "hbar"):
            value = _finite(getattr(self, name), name)
            _require(value > 0, f"{name} must be positive, got {value!r}")
            object.__setattr__(self, name, value)

    @property
    def diffusion_const(self) -> float:
        return self.hbar / (2.0 * self.mass)

    @property
    def forward_velocity(self) -> float:
        # v_y = hbar * k_y / m with k_y = 2 pi / lambda
        return self.hbar * (2.0 * math.pi / self.wavelength) / self.mass

    def y_of_t(self, t):
        """Map elapsed time onto the forward coordinate, y = v_y t."""
        return self.forward_velocity * np.asarray(t, dtype=float)

    def t_of_y(self, y):
        return np.asarray(y, dtype=float) / self.forward_velocity


def derive_params(mass: float, wavelength: float, hbar: float = HBAR) -> PhysicalParams:
    """Build a :class:`PhysicalParams` record, validating both inputs."""
    return PhysicalParams(mass=mass, wavelength=wavelength, hbar=hbar)


@dataclass(frozen=True)
class PhaseSchedule:
    """Piecewise-linear phase shift t -> dphi(t), constant outside its knots.

    ``knots`` is a tuple of ``(t, dphi)`` pairs with nondecreasing t. An
    empty schedule is identically zero.
    """

    knots: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        knots = tuple((_finite(t, "knot time"), _finite(p, "knot phase")) for t, p in self.knots)
        for (t0, p0), (t1, p1) in zip(knots, knots[1:]):
            _require(t1 >= t0, "phase schedule knot times must be nondecreasing")
            _require(t1 > t0 or p1 == p0, "phase schedule must be continuous (jump at a repeated knot time)")
        object.__setattr__(self, "knots", knots)

    @classmethod
    def ramp(cls, t1: float, t2: float, dphi: float) -> "PhaseSchedule":
        """Zero up to t1, linear up to ``dphi`` at t2, flat afterwards."""
        _require(t2 >= t1, f"ramp end t2={t2!r} precedes start t1={t1!r}")
        _require(t2 > t1 or dphi == 0.0, "a nonzero ramp needs t2 > t1")
        return cls(((t1, 0.0), (t2, dphi)))

    @property
    def is_zero(self) -> bool:
        return all(p == 0.0 for _, p in self.knots)

    def __call__(self, t: float) -> float:
        if not self.knots:
            return 0.0
        ts, ps = zip(*self.knots)
        return float(np.interp(t, ts, ps))


@dataclass(frozen=True)
class SlitSpec:
    """One Gaussian channel."""

    x0: float
    sigma0: float
    vx: float = 0.0
    weight: float = 1.0
    transmission: float = 1.0
    phase: PhaseSchedule = field(default_factory=PhaseSchedule)

    def __post_init__(self) -> None:
        for name in ("x0", "sigma0", "vx", "weight", "transmission"):
            object.__setattr__(self, name, _finite(getattr(self, name), name))
        _require(self.sigma0 > 0, f"sigma0 must be positive, got {self.sigma0!r}")
        _require(self.weight >= 0, f"weight must be >= 0, got {self.weight!r}")
        _require(0.0 <= self.transmission <= 1.0,
                 f"transmission must lie in [0, 1], got {self.transmission!r}")

    @property
    def amplitude_scale(self) -> float:
        """Factor on the unit amplitude, sqrt(weight * a)."""
        return math.sqrt(self.weight * self.transmission)


@dataclass(frozen=True)
class GridSpec:
    x_min: float
    x_max: float
    nx: int
    dt: float
    nt: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "x_min", _finite(self.x_min, "x_min"))
        object.__setattr__(self, "x_max", _finite(self.x_max, "x_max"))
        object.__setattr__(self, "dt", _finite(self.dt, "dt"))
        for name in ("nx", "nt"):
            value = getattr(self, name)
            _require(isinstance(value, (int, np.integer)) and not isinstance(value, bool),
                     f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        _require(self.x_max > self.x_min, "x_max must exceed x_min")
        _require(self.nx >= 3, f"nx must be >= 3, got {self.nx}")
        _require(self.dt > 0, f"dt must be positive, got {self.dt!r}")
        _require(self.nt >= 1, f"nt must be >= 1, got {self.nt}")
        _require(self.dx > 0, "grid spacing underflows to zero")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def t(self) -> np.ndarray:
        """Frame times; frame k sits at k * dt."""
        return np.arange(self.nt) * self.dt

    def with_time(self, dt: float, nt: int) -> "GridSpec":
        return GridSpec(self.x_min, self.x_max, self.nx, dt, nt)


@dataclass(frozen=True)
class DerivedSlitQuantities:
    u0: float
    t_kink: float


def derive_slit(slit: SlitSpec, params: PhysicalParams) -> DerivedSlitQuantities:
    """u0 = D / sigma0 and the kink time sigma0^2 / D."""
    D = params.diffusion_const
    return DerivedSlitQuantities(u0=D / slit.sigma0, t_kink=slit.sigma0 ** 2 / D)
