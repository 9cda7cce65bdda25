"""Line-oriented ``key = value`` scenario configuration.

Sections are ``[physics]``, ``[grid]``, ``[run]`` (each at most once) and any
number of ``[slit]`` sections. ``#`` starts a comment. Stochastic-lab runs use
``[walker]`` and ``[bouncer]`` sections instead; see :func:`parse_lab_config`.
The full key table lives in ``docs/config.md``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

from .currents import Coherence
from .fdm import Scheme
from .physics import (HBAR, GridSpec, ParameterError, PhaseSchedule, PhysicalParams,
                      SlitSpec)

OUTPUT_KINDS = ("field-csv", "traj-csv", "heatmap", "screen-csv")
TRAJECTORY_MODES = ("none", "equidistant", "equal-flux", "per-slit")


class ConfigError(ValueError):
    """Config problem; ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = f"line {line}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True)
class TrajectoryRequest:
    mode: str = "none"
    count: int = 0
    span: float | None = None
    substeps: int = 1

    def __post_init__(self) -> None:
        if self.mode not in TRAJECTORY_MODES:
            raise ConfigError(f"unknown trajectory mode {self.mode!r}", key="trajectory_mode")
        if self.count < 0 or self.substeps < 1:
            raise ConfigError("trajectory count must be >= 0 and substeps >= 1", key="trajectory_count")
        if self.mode != "none" and self.count < 1:
            raise ConfigError("trajectory mode needs trajectory_count >= 1", key="trajectory_count")


@dataclass(frozen=True)
class ScenarioConfig:
    params: PhysicalParams
    grid: GridSpec
    slits: tuple[SlitSpec, ...]
    scheme: Scheme = Scheme.CRANK_NICOLSON
    coherence: Coherence = Coherence.COHERENT
    trajectory: TrajectoryRequest = field(default_factory=TrajectoryRequest)
    outputs: tuple[str, ...] = ()
    screen_distance: float | None = None
    side_screen_x: float | None = None
    heatmap_gamma: float = 0.5

    def __post_init__(self) -> None:
        object.__setattr__(self, "slits", tuple(self.slits))
        if not self.slits:
            raise ConfigError("scenario has no slits", key="slit")
        object.__setattr__(self, "outputs", tuple(self.outputs))
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        object.__setattr__(self, "coherence", Coherence.parse(self.coherence))
        for kind in self.outputs:
            if kind not in OUTPUT_KINDS:
                raise ConfigError(f"unknown output kind {kind!r}", key="outputs")
        if not self.heatmap_gamma > 0:
            raise ConfigError("heatmap_gamma must be positive", key="heatmap_gamma")


# ---------------------------------------------------------------- parsing

def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("not finite")
    return value


def _int(text: str) -> int:
    value = float(text)
    if value != int(value):
        raise ValueError("not an integer")
    return int(value)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(_float(p) for p in text.split(",") if p.strip())


def _knots(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        t, _, p = part.partition(":")
        if not _:
            raise ValueError("knots are written t:phase")
        out.append((_float(t), _float(p)))
    return tuple(out)


def _words(text: str) -> tuple[str, ...]:
    return tuple(w.strip() for w in text.split(",") if w.strip())


SCENARIO_KEYS: dict[str, dict[str, Callable[[str], object]]] = {
    "physics": {"mass": _float, "wavelength": _float, "hbar": _float},
    "grid": {"x_min": _float, "x_max": _float, "nx": _int, "dt": _float, "nt": _int},
    "run": {"scheme": str, "coherence": str, "trajectory_mode": str, "trajectory_count": _int,
            "trajectory_span": _float, "trajectory_substeps": _int, "outputs": _words,
            "screen_distance": _float, "side_screen_x": _float, "heatmap_gamma": _float},
    "slit": {"x0": _float, "sigma0": _float, "vx": _float, "weight": _float,
             "transmission": _float, "phase_ramp": _floats, "phase_knots": _knots},
}
REQUIRED = {"physics": ("mass", "wavelength"), "grid": ("x_min", "x_max", "nx", "dt", "nt"),
            "slit": ("x0", "sigma0")}
REPEATABLE = {"slit"}


@dataclass
class _Section:
    name: str
    line: int
    values: dict[str, object] = field(default_factory=dict)
    lines: dict[str, int] = field(default_factory=dict)


def _tokenize(text: str, schema: dict[str, dict[str, Callable[[str], object]]],
              repeatable: set[str]) -> list[_Section]:
    sections: list[_Section] = []
    seen: set[str] = set()
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {raw.strip()!r}", lineno)
            name = line[1:-1].strip().lower()
            if name not in schema:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in seen and name not in repeatable:
                raise ConfigError(f"duplicate [{name}] section", lineno)
            seen.add(name)
            current = _Section(name, lineno)
            sections.append(current)
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", lineno)
        key, value = key.strip().lower(), value.strip()
        if current is None:
            raise ConfigError(f"key {key!r} appears before any section header", lineno, key)
        conv = schema[current.name].get(key)
        if conv is None:
            raise ConfigError(f"unknown key {key!r} in [{current.name}]", lineno, key)
        if key in current.values:
            raise ConfigError(f"duplicate key {key!r} in [{current.name}]", lineno, key)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno, key)
        try:
            current.values[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value {value!r} for {key!r}: {exc}", lineno, key) from None
        current.lines[key] = lineno
    return sections


def _require_keys(sec: _Section, required: tuple[str, ...]) -> None:
    for key in required:
        if key not in sec.values:
            raise ConfigError(f"[{sec.name}] is missing required key {key!r}", sec.line, key)


def _semantic(sec: _Section, build: Callable[[], object]):
    try:
        return build()
    except ParameterError as exc:
        msg = str(exc)
        key = next((k for k in sec.values if k in msg), None)
        line = sec.lines.get(key, sec.line) if key else sec.line
        raise ConfigError(f"[{sec.name}] {msg}", line, key) from None


def _slit_from(sec: _Section) -> SlitSpec:
    v = sec.values
    if "phase_ramp" in v and "phase_knots" in v:
        raise ConfigError("use either phase_ramp or phase_knots, not both", sec.lines["phase_knots"],
                          "phase_knots")
    phase = PhaseSchedule()
    if "phase_ramp" in v:
        ramp = v["phase_ramp"]
        if len(ramp) != 3:
            raise ConfigError("phase_ramp takes t1, t2, dphi", sec.lines["phase_ramp"], "phase_ramp")
        phase = _semantic(sec, lambda: PhaseSchedule.ramp(*ramp))
    elif "phase_knots" in v:
        phase = _semantic(sec, lambda: PhaseSchedule(v["phase_knots"]))
    return _semantic(sec, lambda: SlitSpec(
        x0=v["x0"], sigma0=v["sigma0"], vx=v.get("vx", 0.0), weight=v.get("weight", 1.0),
        transmission=v.get("transmission", 1.0), phase=phase))


def parse_config(text: str) -> ScenarioConfig:
    sections = _tokenize(text, SCENARIO_KEYS, REPEATABLE)
    by_name = {s.name: s for s in sections if s.name not in REPEATABLE}
    for name in ("physics", "grid"):
        if name not in by_name:
            raise ConfigError(f"missing [{name}] section")
        _require_keys(by_name[name], REQUIRED[name])
    slit_secs = [s for s in sections if s.name == "slit"]
    if not slit_secs:
        raise ConfigError("at least one [slit] section is required")
    for s in slit_secs:
        _require_keys(s, REQUIRED["slit"])

    ph = by_name["physics"]
    params = _semantic(ph, lambda: PhysicalParams(ph.values["mass"], ph.values["wavelength"],
                                                  ph.values.get("hbar", HBAR)))
    gs = by_name["grid"]
    g = gs.values
    grid = _semantic(gs, lambda: GridSpec(g["x_min"], g["x_max"], g["nx"], g["dt"], g["nt"]))
    slits = tuple(_slit_from(s) for s in slit_secs)

    run = by_name.get("run", _Section("run", 0))
    r = run.values

    def run_value(key, parse):
        try:
            return parse(r[key])
        except ParameterError as exc:
            raise ConfigError(str(exc), run.lines.get(key), key) from None

    scheme = run_value("scheme", Scheme.parse) if "scheme" in r else Scheme.CRANK_NICOLSON
    coherence = run_value("coherence", Coherence.parse) if "coherence" in r else Coherence.COHERENT
    try:
        traj = TrajectoryRequest(mode=str(r.get("trajectory_mode", "none")).lower(),
                                 count=r.get("trajectory_count", 0),
                                 span=r.get("trajectory_span"),
                                 substeps=r.get("trajectory_substeps", 1))
        cfg = ScenarioConfig(params=params, grid=grid, slits=slits, scheme=scheme,
                             coherence=coherence, trajectory=traj,
                             outputs=r.get("outputs", ()),
                             screen_distance=r.get("screen_distance"),
                             side_screen_x=r.get("side_screen_x"),
                             heatmap_gamma=r.get("heatmap_gamma", 0.5))
    except ConfigError as exc:
        raise ConfigError(str(exc), run.lines.get(exc.key), exc.key) from None
    return cfg


# ---------------------------------------------------------- serialization

def _num(x: float) -> str:
    return repr(float(x))


def serialize_config(cfg: ScenarioConfig) -> str:
    p, g = cfg.params, cfg.grid
    lines = ["[physics]", f"mass = {_num(p.mass)}", f"wavelength = {_num(p.wavelength)}",
             f"hbar = {_num(p.hbar)}", "",
             "[grid]", f"x_min = {_num(g.x_min)}", f"x_max = {_num(g.x_max)}", f"nx = {g.nx}",
             f"dt = {_num(g.dt)}", f"nt = {g.nt}", "",
             "[run]", f"scheme = {cfg.scheme.value}", f"coherence = {cfg.coherence.value}",
             f"trajectory_mode = {cfg.trajectory.mode}",
             f"trajectory_count = {cfg.trajectory.count}",
             f"trajectory_substeps = {cfg.trajectory.substeps}",
             f"heatmap_gamma = {_num(cfg.heatmap_gamma)}"]
    if cfg.trajectory.span is not None:
        lines.append(f"trajectory_span = {_num(cfg.trajectory.span)}")
    if cfg.outputs:
        lines.append(f"outputs = {', '.join(cfg.outputs)}")
    if cfg.screen_distance is not None:
        lines.append(f"screen_distance = {_num(cfg.screen_distance)}")
    if cfg.side_screen_x is not None:
        lines.append(f"side_screen_x = {_num(cfg.side_screen_x)}")
    for s in cfg.slits:
        lines += ["", "[slit]", f"x0 = {_num(s.x0)}", f"sigma0 = {_num(s.sigma0)}",
                  f"vx = {_num(s.vx)}", f"weight = {_num(s.weight)}",
                  f"transmission = {_num(s.transmission)}"]
        if s.phase.knots:
            knots = ", ".join(f"{_num(t)}:{_num(ph)}" for t, ph in s.phase.knots)
            lines.append(f"phase_knots = {knots}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------- lab sections

LAB_KEYS: dict[str, dict[str, Callable[[str], object]]] = {
    "walker": {"mass": _float, "zeta": _float, "lambda_noise": _float, "dt": _float,
               "n_steps": _int, "n_ensemble": _int, "seed": _int, "n_dims": _int,
               "u0": _float, "record_every": _int},
    "bouncer": {"mass": _float, "omega0": _float, "gamma": _float, "f0": _float, "dt": _float,
                "n_steps": _int},
    "lab": {"hbar": _float},
}


def parse_lab_config(text: str) -> dict[str, dict[str, object]]:
    """Raw validated key maps for ``[walker]``, ``[bouncer]`` and ``[lab]``."""
    return {s.name: dict(s.values) for s in _tokenize(text, LAB_KEYS, set())}
