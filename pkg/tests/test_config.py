import math
from importlib import resources

import pytest
from hypothesis import given, strategies as st

from ballistic.config import (ConfigError, ScenarioConfig, TrajectoryRequest, parse_config,
                              parse_lab_config, serialize_config)
from ballistic.currents import Coherence
from ballistic.fdm import Scheme
from ballistic.physics import GridSpec, PhaseSchedule, PhysicalParams, SlitSpec

MINIMAL = """
[physics]
mass = 1.675e-27
wavelength = 1.8e-9

[grid]
x_min = -1e-4
x_max = 1e-4
nx = 101
dt = 1e-6
nt = 10

[slit]
x0 = 0
sigma0 = 7.33e-6
"""


def bundled(name):
    return resources.files("ballistic").joinpath("configs", name).read_text(encoding="utf-8")


def test_minimal_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.scheme is Scheme.CRANK_NICOLSON
    assert cfg.coherence is Coherence.COHERENT
    assert cfg.trajectory == TrajectoryRequest()
    assert cfg.outputs == () and cfg.heatmap_gamma == 0.5
    assert cfg.slits == (SlitSpec(0.0, 7.33e-6),)
    assert cfg.params.hbar == pytest.approx(1.054571817e-34, rel=0, abs=0)


def test_duplicate_grid_section():
    text = MINIMAL + "\n[grid]\nnx = 5\n"
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert "duplicate" in str(err.value) and err.value.line == text.splitlines().index("[grid]", 8) + 1


@pytest.mark.parametrize("bad, line, key", [
    ("nx = ten", 10, "nx"),
    ("colour = red", 10, "colour"),
    ("nx 101", 10, None),
])
def test_syntax_errors_carry_line_numbers(bad, line, key):
    lines = MINIMAL.splitlines()
    lines[9] = bad  # the nx line
    with pytest.raises(ConfigError) as err:
        parse_config("\n".join(lines))
    assert err.value.line == line and err.value.key == key


def test_semantic_errors_name_the_key():
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL.replace("sigma0 = 7.33e-6", "sigma0 = -1"))
    assert err.value.key == "sigma0"
    with pytest.raises(ConfigError) as err:
        parse_config(MINIMAL + "\n[run]\nscheme = leapfrog\n")
    assert err.value.key == "scheme"
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + "\n[run]\noutputs = movie\n")


def test_missing_pieces():
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.split("[slit]")[0])
    with pytest.raises(ConfigError):
        parse_config(MINIMAL.replace("nt = 10", ""))
    with pytest.raises(ConfigError):
        parse_config("x0 = 1\n" + MINIMAL)


def test_talbot7_sample():
    cfg = parse_config(bundled("talbot7.cfg"))
    xs = sorted(s.x0 for s in cfg.slits)
    assert len(xs) == 7
    for a, b in zip(xs, xs[1:]):
        assert b - a == pytest.approx(1.06e-9, rel=1e-9)
    assert cfg.params.wavelength == 1e-9


@pytest.mark.parametrize("name", ["single.cfg", "double.cfg", "talbot7.cfg", "talbot27.cfg",
                                  "sweeper.cfg", "incoherent.cfg"])
def test_bundled_samples_parse(name):
    cfg = parse_config(bundled(name))
    assert parse_config(serialize_config(cfg)) == cfg


def test_lab_sample():
    raw = parse_lab_config(bundled("walker.cfg"))
    assert set(raw) == {"lab", "walker", "bouncer"}
    assert raw["walker"]["zeta"] == raw["bouncer"]["gamma"] == 2 * raw["bouncer"]["omega0"]


finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False, allow_infinity=False)
positive = st.floats(min_value=1e-6, max_value=1e3, allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    params = PhysicalParams(draw(positive), draw(positive), draw(positive))
    lo = draw(finite)
    grid = GridSpec(lo, lo + draw(positive), draw(st.integers(3, 50)), draw(positive), draw(st.integers(1, 30)))
    slits = []
    for _ in range(draw(st.integers(1, 4))):
        phase = PhaseSchedule()
        if draw(st.booleans()):
            t1 = draw(st.floats(0, 10))
            phase = PhaseSchedule.ramp(t1, t1 + draw(positive), draw(finite))
        slits.append(SlitSpec(draw(finite), draw(positive), draw(finite), draw(positive),
                              draw(st.floats(0, 1)), phase))
    mode = draw(st.sampled_from(["none", "equidistant", "equal-flux", "per-slit"]))
    traj = TrajectoryRequest(mode, 0 if mode == "none" else draw(st.integers(1, 50)),
                             draw(st.none() | positive), draw(st.integers(1, 4)))
    outputs = tuple(draw(st.lists(st.sampled_from(["field-csv", "traj-csv", "heatmap", "screen-csv"]),
                                  unique=True)))
    return ScenarioConfig(params, grid, tuple(slits), draw(st.sampled_from(list(Scheme))),
                          draw(st.sampled_from(list(Coherence))), traj, outputs,
                          draw(st.none() | positive), draw(st.none() | finite), draw(positive))


@given(configs())
def test_round_trip(cfg):
    assert parse_config(serialize_config(cfg)) == cfg


def test_round_trip_keeps_exact_floats():
    cfg = parse_config(MINIMAL.replace("1.8e-9", repr(math.pi * 1e-9)))
    assert parse_config(serialize_config(cfg)).params.wavelength == math.pi * 1e-9
