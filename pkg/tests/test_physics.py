import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ballistic.physics import (HBAR, NEUTRON_MASS, GridSpec, ParameterError, PhaseSchedule,
                               PhysicalParams, SlitSpec, derive_params, derive_slit)

H = 2 * math.pi * 1.054571817e-34
positive = st.floats(1e-30, 1e30, allow_nan=False, allow_infinity=False)


def test_hbar_fixed():
    assert HBAR == 1.054571817e-34


def test_neutron_forward_velocity():
    p = derive_params(1.675e-27, 1e-9)
    assert p.forward_velocity == pytest.approx(H / (1e-9 * 1.675e-27), rel=1e-14)
    assert p.forward_velocity == pytest.approx(3.956e2, rel=1e-3)


def test_synthetic_unit_mass_gives_unit_diffusion():
    assert PhysicalParams(HBAR / 2, 1e-9).diffusion_const == 1.0


@pytest.mark.parametrize("mass, lam", [(0.0, 1e-9), (-1.0, 1e-9), (1.0, 0.0), (1.0, -2.0),
                                       (math.nan, 1.0), (1.0, math.inf)])
def test_invalid_params_rejected(mass, lam):
    with pytest.raises(ParameterError):
        derive_params(mass, lam)


@given(positive, positive)
def test_diffusion_constant_recomputable(mass, lam):
    p = derive_params(mass, lam)
    assert p.diffusion_const == HBAR / (2 * mass)
    assert p.forward_velocity > 0
    assert derive_params(mass, lam) == p


@given(st.floats(1e-9, 1e-3), st.floats(1e-27, 1e-24))
def test_slit_derived_quantities(sigma0, mass):
    p = PhysicalParams(mass, 1e-9)
    q = derive_slit(SlitSpec(0.0, sigma0), p)
    assert q.u0 * sigma0 == pytest.approx(p.diffusion_const, rel=1e-15)
    assert q.t_kink * p.diffusion_const == pytest.approx(sigma0 ** 2, rel=1e-15)


def test_y_t_mapping_roundtrip():
    p = PhysicalParams(NEUTRON_MASS, 1.8e-9)
    assert float(p.t_of_y(p.y_of_t(1e-3))) == pytest.approx(1e-3, rel=1e-15)


@pytest.mark.parametrize("kw", [dict(sigma0=0.0), dict(sigma0=-1.0), dict(weight=-0.1),
                                dict(transmission=1.5), dict(transmission=-0.01)])
def test_slit_invariants(kw):
    base = dict(x0=0.0, sigma0=1.0)
    base.update(kw)
    with pytest.raises(ParameterError):
        SlitSpec(**base)


@given(st.floats(0, 1), st.floats(0, 4))
def test_amplitude_scale_is_root_of_weight_times_a(a, w):
    assert SlitSpec(0.0, 1.0, weight=w, transmission=a).amplitude_scale == pytest.approx(math.sqrt(w * a))


@pytest.mark.parametrize("args", [(0.0, 1.0, 2, 1.0, 1), (1.0, 0.0, 5, 1.0, 1), (0.0, 1.0, 5, 0.0, 1),
                                  (0.0, 1.0, 5, 1.0, 0), (0.0, 1.0, 5.5, 1.0, 1)])
def test_grid_invariants(args):
    with pytest.raises(ParameterError):
        GridSpec(*args)


def test_grid_spacing_and_times():
    g = GridSpec(-1.0, 1.0, 5, 0.1, 4)
    assert g.dx == 0.5
    np.testing.assert_allclose(g.x, [-1, -0.5, 0, 0.5, 1])
    np.testing.assert_allclose(g.t, [0, 0.1, 0.2, 0.3])


def test_phase_ramp():
    s = PhaseSchedule.ramp(1.0, 3.0, math.pi)
    assert s(0.0) == 0.0 and s(1.0) == 0.0
    assert s(2.0) == pytest.approx(math.pi / 2)
    assert s(3.0) == pytest.approx(math.pi) and s(10.0) == pytest.approx(math.pi)
    assert PhaseSchedule()(5.0) == 0.0


def test_phase_schedule_rejects_jump():
    with pytest.raises(ParameterError):
        PhaseSchedule(((1.0, 0.0), (1.0, 1.0)))
    with pytest.raises(ParameterError):
        PhaseSchedule(((2.0, 0.0), (1.0, 1.0)))


@given(st.lists(st.tuples(st.floats(0, 10), st.floats(-10, 10)), min_size=1, max_size=6))
def test_phase_schedule_continuous(raw):
    knots, t_prev = [], -1.0
    for t, p in sorted(raw):
        if t <= t_prev:
            continue
        knots.append((t, p))
        t_prev = t
    s = PhaseSchedule(tuple(knots))
    ts = np.linspace(-1, 11, 2001)
    vals = np.array([s(t) for t in ts])
    slopes = [abs(p1 - p0) / (t1 - t0) for (t0, p0), (t1, p1) in zip(knots, knots[1:])] or [0.0]
    assert np.max(np.abs(np.diff(vals))) <= max(slopes) * (ts[1] - ts[0]) * (1 + 1e-9) + 1e-12
