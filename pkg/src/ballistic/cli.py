"""Command-line entry point: ``ballistic <subcommand> [flags]``.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from . import experiments as ex
from . import stochastic as st
from .config import OUTPUT_KINDS, ConfigError, ScenarioConfig, parse_config, parse_lab_config
from .fdm import NumericalError, Scheme
from .output import (fmt, render_heatmap, write_field_csv, write_screen_csv,
                     write_trajectory_csv)
from .physics import ParameterError
from .trajectories import count_crossings

COMMANDS = ("single", "double", "multislit", "talbot", "attenuate", "sweeper", "incoherent",
            "walker", "calibrate")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse exits with 2 by default; usage errors are 1 here
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ballistic", description="Ballistic-diffusion multi-slit and bouncer-walker runs.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="scenario file in the key = value format")
        s.add_argument("--out", type=Path, help="directory for requested output files")
        s.add_argument("--scheme", choices=[m.value for m in Scheme] + ["cn"],
                       help="override the finite-difference scheme")
        s.add_argument("--seed", type=int, help="walker ensemble seed")
        s.add_argument("--outputs", help=f"comma list out of {', '.join(OUTPUT_KINDS)}")
        if name in ("attenuate", "sweeper", "incoherent"):
            s.add_argument("--a", type=float, help="transmission factor of the weak beam")
        if name in ("multislit", "talbot"):
            s.add_argument("--slits", type=int, help="number of slits")
        if name == "walker":
            s.add_argument("--ensemble", type=int, help="number of ensemble members")
        if name == "calibrate":
            s.add_argument("--data", type=Path, help="two-column CSV: x [m], intensity")
    return p


# ------------------------------------------------------------- helpers

def _config_text(path: Path) -> str:
    """Read a config file; a bare name such as ``talbot7.cfg`` falls back to the bundled samples."""
    if not path.exists() and path.parent == Path("."):
        bundled = resources.files("ballistic").joinpath("configs", path.name)
        if bundled.is_file():
            return bundled.read_text(encoding="utf-8")
    return path.read_text(encoding="utf-8")


def _load_scenario(args) -> ScenarioConfig | None:
    if args.config is None:
        return None
    return parse_config(_config_text(args.config))


def _adjust(cfg: ScenarioConfig, args) -> ScenarioConfig:
    changes = {}
    if args.scheme:
        changes["scheme"] = Scheme.parse(args.scheme)
    if args.outputs:
        changes["outputs"] = tuple(w.strip() for w in args.outputs.split(",") if w.strip())
    return dataclasses.replace(cfg, **changes) if changes else cfg


def _emit(res: ex.ScenarioResult, args, stem: str) -> list[Path]:
    """Write the configured outputs under ``--out``.

    Outputs named in a config file are skipped (with a note) when no ``--out``
    is given; an explicit ``--outputs`` flag without ``--out`` is an error.
    """
    cfg = res.config
    out = args.out
    if not cfg.outputs:
        return []
    if out is None:
        if args.outputs:
            raise ConfigError("--outputs needs an --out directory", key="outputs")
        print(f"note: skipping {', '.join(cfg.outputs)} (no --out directory)", file=sys.stderr)
        return []
    written = []
    for kind in cfg.outputs:
        if kind == "field-csv":
            written.append(write_field_csv(res.frames, cfg.grid, out / f"{stem}_field.csv"))
        elif kind == "heatmap":
            written.append(render_heatmap(res.frames, out / f"{stem}.pgm", cfg.heatmap_gamma))
        elif kind == "screen-csv":
            written.append(write_screen_csv(res.screen, out / f"{stem}_screen.csv"))
        elif kind == "traj-csv":
            if res.trajectories is None:
                raise ConfigError("traj-csv needs a trajectory_mode other than none", key="outputs")
            written.append(write_trajectory_csv(res.trajectories, out / f"{stem}_traj.csv"))
    return written


def _crossings(res: ex.ScenarioResult) -> str:
    ts = res.trajectories
    if ts is None or ts.n_paths < 2:
        return ""
    return f" crossings={count_crossings(ts)} truncated={int(ts.truncated.sum())}"


def _uniform_spacing(cfg: ScenarioConfig) -> float:
    xs = np.sort([s.x0 for s in cfg.slits])
    if xs.size < 2:
        raise ConfigError("a grating needs at least two slits")
    gaps = np.diff(xs)
    if not np.allclose(gaps, gaps[0], rtol=1e-9):
        raise ConfigError("grating slits must be equally spaced")
    return float(gaps[0])


# ------------------------------------------------------------ commands

def _cmd_scenario(builder: Callable[[], ScenarioConfig], metric: Callable[[ex.ScenarioResult], str]):
    def run(args) -> str:
        cfg = _adjust(_load_scenario(args) or builder(args), args)
        res = ex.run_scenario(cfg)
        files = _emit(res, args, args.command)
        return metric(res) + _crossings(res) + (f" files={len(files)}" if files else "")
    return run


def _single_metric(res: ex.ScenarioResult) -> str:
    P = res.screen.accumulated
    x = res.screen.coordinate
    m = float(np.trapezoid(P * x, x) / np.trapezoid(P, x))
    width = math.sqrt(float(np.trapezoid(P * (x - m) ** 2, x) / np.trapezoid(P, x)))
    return f"screen_y={res.screen.position:.6g} m sigma={width:.6g} m"


def _double_metric(res: ex.ScenarioResult) -> str:
    return (f"screen_y={res.screen.position:.6g} m fringe_spacing={ex.fringe_spacing(res.screen):.6g} m "
            f"visibility={ex.visibility_estimate(res.screen):.4f}")


def _multislit_metric(res: ex.ScenarioResult) -> str:
    return f"slits={len(res.config.slits)} frames={len(res.frames)} peak_P={float(np.max(res.screen.accumulated)):.6g}"


def _multislit_default(args) -> ScenarioConfig:
    n = args.slits or 7
    return ex.talbot_config(n) if n in ex.TALBOT_SETUPS else ex.multislit_config(n, 1.06e-9)


def cmd_talbot(args) -> str:
    cfg = _load_scenario(args)
    if cfg is None:
        cfg = ex.talbot_config(args.slits or 7)
    cfg = _adjust(cfg, args)
    d = _uniform_spacing(cfg)
    res = ex.run_scenario(cfg)
    centre = float(np.mean([s.x0 for s in cfg.slits]))
    tr = ex.talbot_distance_estimate(res.frames, d, cfg.params, cfg.grid, len(cfg.slits), centre)
    files = _emit(res, args, "talbot")
    return (f"slits={len(cfg.slits)} d={d:.6g} m y_T={tr.y_T_observed:.6g} m z_T={tr.z_T_formula:.6g} m "
            f"step={tr.t_T_steps} corr={tr.peak_correlation:.4f}" + (f" files={len(files)}" if files else ""))


def cmd_attenuate(args) -> str:
    a = 0.25 if args.a is None else args.a
    cfg = _load_scenario(args)
    if cfg is not None:
        cfg = _adjust(cfg, args)
    screens = ex.attenuation_screens(a, cfg)
    parts = [f"a={a:g}"]
    for mode, scr in screens.items():
        V = ex.visibility_estimate(scr)
        law = 2 * a / (1 + a) if mode is ex.Attenuation.DETERMINISTIC else 2 * math.sqrt(a) / (1 + a)
        parts.append(f"V_{mode.value}={V:.5f} (law {law:.5f})")
        if args.out is not None:
            write_screen_csv(scr, args.out / f"attenuate_{mode.value}_screen.csv")
    areas = [s.total() for s in screens.values()]
    parts.append(f"area_ratio={areas[1] / areas[0]:.8f}")
    return " ".join(parts)


def _sweeper_like(args, incoherent: bool) -> str:
    a = 1e-8 if args.a is None else args.a
    cfg = _load_scenario(args)
    if cfg is None:
        cfg = ex.incoherent_config(a) if incoherent else ex.sweeper_config(a)
    cfg = _adjust(cfg, args)
    if args.config is not None:
        a = cfg.slits[-1].transmission
    r = ex.sweeper_run(a, cfg)
    files = _emit(r.scenario, args, args.command)
    if args.out is not None and "screen-csv" not in cfg.outputs:
        files.append(write_screen_csv(r.screen, args.out / f"{args.command}_side_screen.csv"))
    flux = f"flux/a={r.flux / r.weak_weight:.5f}" if r.crossing is not None else "flux/a=n/a (no crossing)"
    return f"a={a:g} {flux}" + _crossings(r.scenario) + (f" files={len(files)}" if files else "")


def _walker_configs(args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.ensemble is not None:
        kw["n_ensemble"] = args.ensemble
    hbar = 1.0
    raw = {}
    if args.config is not None:
        raw = parse_lab_config(_config_text(args.config))
        hbar = float(raw.get("lab", {}).get("hbar", 1.0))
    walker, bouncer = st.balanced_configs(hbar=hbar, **kw)
    if "walker" in raw:
        w = dict(raw["walker"])
        if "seed" in w:
            w["rng_seed"] = w.pop("seed")
        if args.seed is not None:
            w["rng_seed"] = args.seed
        if args.ensemble is not None:
            w["n_ensemble"] = args.ensemble
        walker = dataclasses.replace(walker, **w)
    if "bouncer" in raw:
        b = dict(raw["bouncer"])
        if "f0" in b:
            b["F0"] = b.pop("f0")
        bouncer = dataclasses.replace(bouncer, **b)
    return walker, bouncer, hbar


def cmd_walker(args) -> str:
    walker, bouncer, hbar = _walker_configs(args)
    ens = st.simulate_walker(walker)
    rep = st.work_energy_balance(walker, bouncer, hbar, ensemble=ens)
    slope, _, _ = st.estimate_msd(ens)
    rows = [("W_bouncer", rep.W_bouncer), ("W_bouncer_target", rep.W_bouncer_target),
            ("W_walker", rep.W_walker), ("W_walker_target", rep.W_walker_target),
            ("ratio", rep.ratio), ("u2", rep.u2), ("u2_se", rep.u2_se),
            ("msd_slope", slope), ("two_D", 2 * walker.diffusion),
            ("amplitude", rep.amplitude), ("phase", rep.phase),
            ("seed", walker.rng_seed), ("n_ensemble", walker.n_ensemble)]
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "walker_report.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# rng: {rep.rng}\nquantity,value\n")
            for k, v in rows:
                fh.write(f"{k},{fmt(v)}\n")
    return (f"W_bouncer/(2 pi gamma hbar)={rep.W_bouncer / (2 * math.pi * bouncer.gamma * hbar):.5f} "
            f"W_walker/W_bouncer={rep.ratio:.4f} msd_slope/2D={slope / (2 * walker.diffusion):.4f} "
            f"seed={walker.rng_seed}")


def cmd_calibrate(args) -> str:
    setup = ex.CalibrationSetup()
    if args.data is not None:
        data = np.loadtxt(args.data, delimiter=",", comments="#", ndmin=2,
                          skiprows=_header_rows(args.data))
        if data.shape[1] < 2:
            raise ConfigError(f"{args.data}: need two columns x,intensity")
        r = ex.calibrate_sigma0(data[:, 0], data[:, 1], setup)
        return f"sigma0/width={r.ratio:.3f} L2={float(r.errors.min()):.4g}"
    x = np.linspace(-800e-6, 800e-6, 1601)
    planted = 0.30
    r = ex.calibrate_sigma0(x, ex.analytic_profile(setup, planted, x), setup)
    return f"synthetic planted={planted:.3f} recovered={r.ratio:.3f}"


def _header_rows(path: Path) -> int:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
    try:
        [float(v) for v in first.split(",")]
        return 0
    except ValueError:
        return 1


HANDLERS = {
    "single": _cmd_scenario(lambda a: ex.single_slit_config(), _single_metric),
    "double": _cmd_scenario(lambda a: ex.double_slit_config(), _double_metric),
    "multislit": _cmd_scenario(_multislit_default, _multislit_metric),
    "talbot": cmd_talbot,
    "attenuate": cmd_attenuate,
    "sweeper": lambda args: _sweeper_like(args, False),
    "incoherent": lambda args: _sweeper_like(args, True),
    "walker": cmd_walker,
    "calibrate": cmd_calibrate,
}


def cli_main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command is None:
        print(parser.format_help().rstrip(), file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    try:
        summary = HANDLERS[args.command](args)
    except (ConfigError, ParameterError, OSError) as exc:
        print(f"{args.command}: configuration error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"{args.command}: numerical failure: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: {summary} runtime={time.perf_counter() - t0:.2f}s")
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
