import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ballistic.analytic import gaussian_density, sigma_of_t
from ballistic.experiments import convergence_study, explicit_probe_grid
from ballistic.fdm import (DomainTooNarrowWarning, InstabilityWarning, Scheme, SingularSystemError,
                           SlitField, StabilityError, diffusivity, evolve_slit, first_unstable_frame,
                           initial_field, max_stable_dt, solve_tridiagonal, step_crank_nicolson,
                           step_explicit, trapezoid_mass)
from ballistic.physics import GridSpec, PhysicalParams, SlitSpec


def _rel_linf(a, b):
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def test_max_stable_dt_direct(unit, unit_slit):
    # dx = 1, sigma0 = 1, D = 1, nt = 2
    assert max_stable_dt(GridSpec(0.0, 2.0, 3, 1.0, 2), unit_slit, unit) == pytest.approx(0.5)


def test_max_stable_dt_scaling(unit, unit_slit):
    a = max_stable_dt(GridSpec(-5, 5, 101, 1.0, 100), unit_slit, unit)
    b = max_stable_dt(GridSpec(-5, 5, 101, 1.0, 200), unit_slit, unit)
    assert b / a == pytest.approx(1 / math.sqrt(2), rel=1e-14)


def test_explicit_limit_keeps_last_coefficient_at_half(unit, unit_slit):
    g0 = GridSpec(-5, 5, 101, 1.0, 300)
    dt = max_stable_dt(g0, unit_slit, unit)
    d_last = diffusivity(unit_slit, unit, 300 * dt) * dt / g0.dx ** 2
    assert d_last == pytest.approx(0.5, rel=1e-12)


def test_instability_probe():
    slit, params, grid = explicit_probe_grid(1.05)
    with pytest.warns(InstabilityWarning):
        fields = evolve_slit(slit, params, grid, Scheme.EXPLICIT, allow_unstable=True)
    k = first_unstable_frame(fields)
    assert k is not None and k < grid.nt
    v = fields[-1].values
    assert v.min() < -1e-6 * np.abs(v).max()


def test_unstable_step_refused(unit, unit_slit):
    slit, params, grid = explicit_probe_grid(1.05, nt=50)
    with pytest.raises(StabilityError):
        evolve_slit(slit, params, grid, Scheme.EXPLICIT)
    f = initial_field(slit, params, grid, Scheme.EXPLICIT)
    with pytest.raises(StabilityError):
        step_explicit(f, slit, params, grid)
    step_explicit(f, slit, params, grid, allow_unstable=True)


def test_stable_explicit_run_is_clean():
    slit, params, grid = explicit_probe_grid(0.9)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        fields = evolve_slit(slit, params, grid, Scheme.EXPLICIT)
    assert first_unstable_frame(fields) is None


@pytest.mark.parametrize("step", ["explicit", "cn"])
def test_constant_field_unchanged(unit, unit_slit, step):
    g = GridSpec(-3, 3, 31, 0.01, 10)
    f = SlitField(np.full(31, 2.5), 3, 0, Scheme.EXPLICIT)
    out = (step_explicit(f, unit_slit, unit, g) if step == "explicit"
           else step_crank_nicolson(f, unit_slit, unit, g))
    np.testing.assert_allclose(out.values, 2.5, rtol=1e-14)
    assert out.t_index == 4


def test_explicit_uses_new_step_coefficient(unit, unit_slit):
    g = GridSpec(-3, 3, 31, 0.01, 100)
    rng = np.random.default_rng(0)
    p = rng.random(31)
    f = SlitField(p, 5, 0, Scheme.EXPLICIT)
    d = unit.diffusion_const ** 2 * (6 * g.dt) / unit_slit.sigma0 ** 2 * g.dt / g.dx ** 2
    q = np.concatenate([[p[1]], p, [p[-2]]])
    np.testing.assert_allclose(step_explicit(f, unit_slit, unit, g).values,
                               p + d * (q[2:] - 2 * p + q[:-2]), rtol=1e-13)


def test_cn_uses_half_step_coefficient(unit, unit_slit):
    from scipy.linalg import solve_banded
    g = GridSpec(-3, 3, 31, 0.05, 100)
    rng = np.random.default_rng(1)
    p = rng.random(31)
    f = SlitField(p, 7, 0, Scheme.CRANK_NICOLSON)
    d = unit.diffusion_const ** 2 * (7.5 * g.dt) / unit_slit.sigma0 ** 2 * g.dt / g.dx ** 2
    n = 31
    q = np.concatenate([[p[1]], p, [p[-2]]])
    rhs = d * q[:-2] + (2 - 2 * d) * p + d * q[2:]
    ab = np.zeros((3, n))
    ab[1] = 2 + 2 * d
    ab[0, 1:] = -d
    ab[2, :-1] = -d
    ab[0, 1] = -2 * d
    ab[2, n - 2] = -2 * d
    np.testing.assert_allclose(step_crank_nicolson(f, unit_slit, unit, g).values,
                               solve_banded((1, 1), ab, rhs), rtol=1e-12)


def test_spike_mass_conserved_one_step(unit, unit_slit):
    g = GridSpec(-5, 5, 101, 0.01, 10)
    p = np.zeros(101)
    p[40] = 1.0
    f = SlitField(p, 0, 0, Scheme.EXPLICIT)
    out = step_explicit(f, unit_slit, unit, g)
    assert trapezoid_mass(out.values, g.dx) == pytest.approx(trapezoid_mass(p, g.dx), rel=1e-12)


def test_explicit_gaussian_200_steps():
    slit, params, grid = explicit_probe_grid(0.9, nt=201)
    fields = evolve_slit(slit, params, grid, Scheme.EXPLICIT)
    for k in (50, 100, 200):
        assert _rel_linf(fields[k].values, gaussian_density(slit, params, grid.x, k * grid.dt)) < 1e-2


def test_cn_gaussian_with_ten_times_larger_step():
    slit, params, grid = explicit_probe_grid(0.9, nt=201)
    coarse = grid.with_time(10 * grid.dt, 21)
    fields = evolve_slit(slit, params, coarse, Scheme.CRANK_NICOLSON)
    for k in (5, 10, 20):
        assert _rel_linf(fields[k].values, gaussian_density(slit, params, coarse.x, k * coarse.dt)) < 1e-2


def test_cn_and_explicit_agree_at_small_step():
    slit, params, grid = explicit_probe_grid(0.1, nt=401)
    a = evolve_slit(slit, params, grid, Scheme.EXPLICIT)
    b = evolve_slit(slit, params, grid, Scheme.CRANK_NICOLSON)
    assert max(_rel_linf(x.values, y.values) for x, y in zip(a, b)) < 1e-4


def test_solve_tridiagonal_front_end():
    np.testing.assert_allclose(solve_tridiagonal([0, 0, 0], [1, 1, 1], [0, 0, 0], [1, 2, 3]), [1, 2, 3])
    with pytest.raises(SingularSystemError):
        solve_tridiagonal([0.0, 1.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0])
    with pytest.raises(ValueError):
        solve_tridiagonal([0, 0], [1, 1, 1], [0, 0, 0], [1, 2, 3])


@pytest.mark.parametrize("scheme", ["explicit", "crank-nicolson"])
def test_second_moment_tracks_closed_form(scheme):
    slit, params, grid = explicit_probe_grid(0.9, nt=400)
    fields = evolve_slit(slit, params, grid, scheme)
    x = grid.x
    for k in range(0, grid.nt, 20):
        P = fields[k].values
        m2 = np.trapezoid(P * x * x, x) / np.trapezoid(P, x)
        assert math.sqrt(m2) == pytest.approx(sigma_of_t(slit, params, k * grid.dt), rel=1e-2)


def test_kink_time_quadruples_for_double_width(unit):
    a, b = SlitSpec(0.0, 2.0), SlitSpec(0.0, 1.0)
    # both runs reach beyond the wide slit's kink (t_k = 4)
    g = GridSpec(-100, 100, 2001, 0.05, 201)

    def fitted_tk(slit):
        fields = evolve_slit(slit, unit, g)
        t = g.t
        s2 = [np.trapezoid(f.values * g.x ** 2, g.x) for f in fields]
        slope, icpt = np.polyfit(t ** 2, s2, 1)
        return math.sqrt(icpt) / math.sqrt(slope)  # sigma0 / u0

    assert fitted_tk(a) / fitted_tk(b) == pytest.approx(4.0, rel=1e-2)


def test_zero_steps_returns_initial_frame(unit, unit_slit):
    g = GridSpec(-10, 10, 201, 0.1, 1)
    fields = evolve_slit(unit_slit, unit, g)
    assert len(fields) == 1 and fields[0].t_index == 0
    np.testing.assert_array_equal(fields[0].values, gaussian_density(unit_slit, unit, g.x, 0.0))


def test_narrow_domain_warns(unit, unit_slit):
    with pytest.warns(DomainTooNarrowWarning):
        evolve_slit(unit_slit, unit, GridSpec(-3, 3, 61, 0.05, 20))


def test_cn_mass_drift_per_step(unit, unit_slit):
    g = GridSpec(-40, 40, 801, 0.05, 100)
    fields = evolve_slit(unit_slit, unit, g)
    m = np.array([trapezoid_mass(f.values, g.dx) for f in fields])
    assert np.max(np.abs(np.diff(m)) / m[:-1]) < 1e-9


def test_explicit_mass_drift_per_step():
    slit, params, grid = explicit_probe_grid(0.9, nt=400)
    fields = evolve_slit(slit, params, grid, Scheme.EXPLICIT)
    m = np.array([trapezoid_mass(f.values, grid.dx) for f in fields])
    assert np.max(np.abs(np.diff(m)) / m[:-1]) < 1e-8


@given(st.sampled_from(["explicit", "crank-nicolson"]), st.floats(0.5, 2.0), st.integers(10, 60))
def test_even_initial_condition_stays_even(scheme, s0, nt):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    slit = SlitSpec(0.0, s0)
    probe = GridSpec(-20, 20, 401, 1.0, nt)
    g = probe.with_time(0.9 * max_stable_dt(probe, slit, p), nt)
    fields = evolve_slit(slit, p, g, scheme)
    v = fields[-1].values
    assert np.max(np.abs(v - v[::-1])) <= 1e-12 * np.max(v)


@given(st.floats(0.5, 2.0), st.floats(0.0, 0.3))
def test_cn_positive_and_conservative(s0, dt):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    slit = SlitSpec(0.0, s0)
    g = GridSpec(-30, 30, 301, max(dt, 1e-3), 30)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DomainTooNarrowWarning)
        fields = evolve_slit(slit, p, g)
    m0 = trapezoid_mass(fields[0].values, g.dx)
    for f in fields:
        assert f.values.min() >= -1e-12 * f.values.max()
        assert trapezoid_mass(f.values, g.dx) == pytest.approx(m0, rel=1e-9)


def test_convergence_orders():
    ex = convergence_study("explicit")
    cn = convergence_study("crank-nicolson", t_over_tk=1.0, nx0=101, nt0=51)
    assert ex.factors[0] == pytest.approx(2.0, rel=0.25)
    assert cn.factors[0] == pytest.approx(4.0, rel=0.25)
