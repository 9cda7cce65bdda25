import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from ballistic.analytic import (TimeDomainError, gaussian_density, kinematic_fields,
                                osmotic_velocity, phase_difference, phase_of, sigma_of_t, trajectory)
from ballistic.physics import NEUTRON_MASS, PhaseSchedule, PhysicalParams, SlitSpec, derive_slit

times = st.floats(0.0, 20.0)
centres = st.floats(-5.0, 5.0)
widths = st.floats(0.2, 3.0)
drifts = st.floats(-2.0, 2.0)


def test_sigma_identity_and_kink(unit, unit_slit):
    assert sigma_of_t(unit_slit, unit, 0.0) == 1.0
    s = SlitSpec(0.0, 7.33e-6)
    p = PhysicalParams(NEUTRON_MASS, 1.8e-9)
    tk = derive_slit(s, p).t_kink
    assert sigma_of_t(s, p, tk) == pytest.approx(math.sqrt(2) * s.sigma0, rel=1e-12)


def test_sigma_direct_value(unit, unit_slit):
    # sigma0 = 1 and u0 = D / sigma0 = 1
    assert sigma_of_t(unit_slit, unit, 2.0) == pytest.approx(math.sqrt(5.0), rel=1e-15)


def test_negative_time_rejected(unit, unit_slit):
    with pytest.raises(TimeDomainError):
        sigma_of_t(unit_slit, unit, -1e-9)
    with pytest.raises(TimeDomainError):
        phase_of(unit_slit, unit, 0.0, 0.0, -1.0)


@given(widths, times, times)
def test_sigma_monotone(s0, t1, t2):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    s = SlitSpec(0.0, s0)
    lo, hi = sorted((t1, t2))
    assert sigma_of_t(s, p, lo) <= sigma_of_t(s, p, hi)


@given(centres, widths, drifts, times)
def test_density_peak_and_normalisation(x0, s0, vx, t):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    s = SlitSpec(x0, s0, vx=vx)
    sig = sigma_of_t(s, p, t)
    c = x0 + vx * t
    assert float(gaussian_density(s, p, c, t)) == pytest.approx(1 / (math.sqrt(2 * math.pi) * sig))
    x = np.linspace(c - 8 * sig, c + 8 * sig, 4001)
    assert np.trapezoid(gaussian_density(s, p, x, t), x) == pytest.approx(1.0, abs=1e-9)


def test_second_moment_by_quadrature(unit, unit_slit):
    for t in (0.0, 0.5, 3.0):
        sig = sigma_of_t(unit_slit, unit, t)
        m2, _ = quad(lambda x: x * x * float(gaussian_density(unit_slit, unit, x, t)), -60, 60,
                     points=[0.0], limit=200)
        assert m2 == pytest.approx(1 + t * t, rel=1e-9)
        assert m2 == pytest.approx(sig ** 2, rel=1e-9)


def test_kinematic_centre_line_and_t0(unit):
    s = SlitSpec(1.0, 0.7, vx=0.3)
    v, a = kinematic_fields(s, unit, 1.0 + 0.3 * 2.0, 2.0)
    assert float(v) == pytest.approx(0.3) and float(a) == pytest.approx(0.0, abs=1e-15)
    v0, _ = kinematic_fields(s, unit, np.linspace(-3, 3, 7), 0.0)
    np.testing.assert_allclose(v0, 0.3)


def test_acceleration_is_time_derivative_along_path(unit):
    s = SlitSpec(0.5, 0.8, vx=0.2)
    xi0 = 0.6
    for t in (0.3, 1.0, 4.0):
        h = 1e-4
        vp = float(kinematic_fields(s, unit, trajectory(s, unit, xi0, t + h), t + h)[0])
        vm = float(kinematic_fields(s, unit, trajectory(s, unit, xi0, t - h), t - h)[0])
        a = float(kinematic_fields(s, unit, trajectory(s, unit, xi0, t), t)[1])
        assert (vp - vm) / (2 * h) == pytest.approx(a, rel=1e-6)


def test_osmotic_centre_and_mean(unit):
    s = SlitSpec(0.3, 1.2, vx=-0.1)
    t = 1.7
    c = 0.3 - 0.1 * t
    assert float(osmotic_velocity(s, unit, c, t)) == 0.0
    sig = sigma_of_t(s, unit, t)
    x = np.linspace(c - 8 * sig, c + 8 * sig, 8001)
    P = gaussian_density(s, unit, x, t)
    assert abs(np.trapezoid(P * osmotic_velocity(s, unit, x, t), x)) < 1e-9


def test_osmotic_matches_amplitude_gradient(unit):
    s = SlitSpec(0.0, 1.0)
    t = 0.8
    x = np.linspace(-6, 6, 12001)
    R = np.sqrt(gaussian_density(s, unit, x, t))
    u_num = -(unit.hbar / unit.mass) * np.gradient(R, x, edge_order=2) / R
    u = osmotic_velocity(s, unit, x, t)
    inner = slice(10, -10)
    rel = np.max(np.abs(u_num[inner] - u[inner])) / np.max(np.abs(u[inner]))
    assert rel < 1e-6


def test_weighted_means_of_derivatives_vanish(unit):
    s = SlitSpec(0.0, 1.0)
    t = 1.3
    sig = sigma_of_t(s, unit, t)
    x = np.linspace(-8 * sig, 8 * sig, 16001)
    P = gaussian_density(s, unit, x, t)
    d1 = -x / sig ** 2 * P
    d2 = (x ** 2 / sig ** 4 - 1 / sig ** 2) * P
    # <dP/P> and <d2P/P> under P are the plain integrals of dP and d2P
    assert abs(np.trapezoid(d1, x)) < 1e-8
    assert abs(np.trapezoid(d2, x)) < 1e-8


@given(st.floats(-3, 3), times)
def test_xi_scales_like_sigma(xi0, t):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    s = SlitSpec(0.2, 0.9, vx=0.4)
    xi = trajectory(s, p, xi0, t) - s.x0 - s.vx * t
    assert xi == pytest.approx(xi0 * sigma_of_t(s, p, t) / s.sigma0, rel=1e-12, abs=1e-14)


def test_probability_inside_moving_offset_is_constant(unit):
    s = SlitSpec(0.0, 1.0, vx=0.5)
    xi0 = 0.7

    def mass(t):
        lo, hi = s.vx * t, trajectory(s, unit, xi0, t)
        x = np.linspace(lo, hi, 4001)
        return np.trapezoid(gaussian_density(s, unit, x, t), x)

    m0 = mass(0.0)
    for t in (0.5, 2.0, 7.0):
        assert mass(t) == pytest.approx(m0, abs=1e-6)


def test_velocity_field_reconstructs_paths(unit):
    from scipy.integrate import solve_ivp
    s = SlitSpec(0.0, 1.0, vx=0.1)
    xi0 = 0.8
    sol = solve_ivp(lambda t, x: kinematic_fields(s, unit, x, t)[0], (0.0, 5.0), [xi0],
                    rtol=1e-11, atol=1e-12, dense_output=True)
    for t in (1.0, 2.5, 5.0):
        assert sol.sol(t)[0] == pytest.approx(trajectory(s, unit, xi0, t), rel=1e-4)


def test_phase_centre_line_only_energy_term(unit):
    s = SlitSpec(0.4, 0.9)
    for t in (0.0, 0.7, 3.0):
        assert float(phase_of(s, unit, 2.5, 0.4, t)) == pytest.approx(-2.5 * t / unit.hbar, abs=1e-14)


def test_phase_against_action_quadrature(unit):
    s = SlitSpec(0.3, 0.8, vx=0.25)
    E = 1.3
    u0 = unit.diffusion_const / s.sigma0
    for t in (0.4, 2.0):
        for x in (-1.5, 0.9, 2.2):
            xr = x - s.x0

            def mv(xp):
                # m v_tot with xi = x' - v t measured from the slit origin
                return unit.mass * (s.vx + u0 ** 2 * t / (s.sigma0 ** 2 + u0 ** 2 * t ** 2) * (xp - s.vx * t))

            integral, _ = quad(mv, s.vx * t, xr, epsabs=1e-14, epsrel=1e-13)
            expected = (integral - E * t) / unit.hbar
            assert float(phase_of(s, unit, E, x, t)) == pytest.approx(expected, rel=1e-8)


@given(centres, widths, drifts, times, st.floats(-10, 10))
def test_identical_slits_have_zero_phase_difference(x0, s0, vx, t, x):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    s = SlitSpec(x0, s0, vx=vx)
    assert float(phase_difference(s, s, p, 0.0, x, t)) == 0.0


def test_phase_difference_symmetric_midpoint(unit):
    a, b = SlitSpec(-1.0, 0.5), SlitSpec(1.0, 0.5)
    for t in (0.0, 1.0, 4.0):
        assert float(phase_difference(a, b, unit, 0.0, 0.0, t)) == pytest.approx(0.0, abs=1e-12)


def test_constant_shifter_shifts_uniformly(unit):
    a, b = SlitSpec(-1.0, 0.5), SlitSpec(1.0, 0.5)
    a_pi = SlitSpec(-1.0, 0.5, phase=PhaseSchedule(((0.0, math.pi),)))
    x = np.linspace(-4, 4, 41)
    d = phase_difference(a_pi, b, unit, 0.0, x, 1.5) - phase_difference(a, b, unit, 0.0, x, 1.5)
    np.testing.assert_allclose(d, -math.pi, rtol=0, atol=1e-12)


@given(st.floats(0.3, 2.0), st.floats(0.3, 2.0), drifts, drifts, st.floats(0.01, 10))
def test_expanded_difference_equals_direct_subtraction(s1, s2, v1, v2, t):
    p = PhysicalParams(0.5, 1.0, hbar=1.0)
    a = SlitSpec(-1.0, s1, vx=v1, phase=PhaseSchedule.ramp(0.0, 5.0, 2.0))
    b = SlitSpec(1.5, s2, vx=v2)
    x = np.linspace(-6, 6, 25)
    direct = (phase_of(b, p, 0.0, x, t) + b.phase(t)) - (phase_of(a, p, 0.0, x, t) + a.phase(t))
    got = phase_difference(a, b, p, 0.0, x, t)
    np.testing.assert_allclose(got, direct, rtol=1e-9, atol=1e-9 * (1 + np.max(np.abs(direct))))


def test_unequal_widths_give_asymmetric_field(unit):
    a, b = SlitSpec(-1.0, 1.0), SlitSpec(1.0, 0.5)
    x = np.linspace(-4, 4, 81)
    phi = phase_difference(a, b, unit, 0.0, x, 1.0)
    assert np.max(np.abs(phi)) > 0.1
    assert np.max(np.abs(phi + phi[::-1])) > 0.1
