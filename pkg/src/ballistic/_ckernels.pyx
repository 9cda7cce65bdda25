# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops. Semantics mirror ``ballistic._pykernels`` exactly."""

import numpy as np
from libc.math cimport cos

BACKEND = "cython"


def thomas(double[::1] lower, double[::1] diag, double[::1] upper, double[::1] rhs):
    """Solve a tridiagonal system; lower[0] and upper[n-1] are ignored."""
    cdef Py_ssize_t n = diag.shape[0], i
    if lower.shape[0] != n or upper.shape[0] != n or rhs.shape[0] != n:
        raise ValueError("tridiagonal bands and rhs must share length")
    out = np.empty(n)
    cp_arr = np.empty(n)
    cdef double[::1] x = out
    cdef double[::1] cp = cp_arr
    cdef double denom
    if n == 0:
        return out
    denom = diag[0]
    if denom == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    cp[0] = upper[0] / denom
    x[0] = rhs[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i] * cp[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        cp[i] = upper[i] / denom
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return out


def cn_step(double[::1] p, double d):
    """One Crank-Nicolson step with mirrored (2d) boundary rows at both ends."""
    cdef Py_ssize_t n = p.shape[0], i
    out = np.empty(n)
    cp_arr = np.empty(n)
    cdef double[::1] x = out
    cdef double[::1] cp = cp_arr
    cdef double b = 2.0 + 2.0 * d, denom, r, lo, up
    # forward sweep with the right-hand side formed on the fly
    r = (2.0 - 2.0 * d) * p[0] + 2.0 * d * p[1]
    cp[0] = -2.0 * d / b
    x[0] = r / b
    for i in range(1, n):
        lo = -2.0 * d if i == n - 1 else -d
        up = -d
        if i == n - 1:
            r = 2.0 * d * p[i - 1] + (2.0 - 2.0 * d) * p[i]
        else:
            r = d * p[i - 1] + (2.0 - 2.0 * d) * p[i] + d * p[i + 1]
        denom = b - lo * cp[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        cp[i] = up / denom
        x[i] = (r - lo * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return out


def explicit_step(double[::1] p, double d):
    cdef Py_ssize_t n = p.shape[0], i
    out = np.empty(n)
    cdef double[::1] q = out
    q[0] = p[0] + 2.0 * d * (p[1] - p[0])
    q[n - 1] = p[n - 1] + 2.0 * d * (p[n - 2] - p[n - 1])
    for i in range(1, n - 1):
        q[i] = p[i] + d * (p[i + 1] - 2.0 * p[i] + p[i - 1])
    return out


cdef inline double _accel(double x, double v, double t, double w0sq, double two_gamma,
                          double f_over_m, double omega) noexcept nogil:
    return f_over_m * cos(omega * t) - w0sq * x - two_gamma * v


def bouncer_rk4(double x0, double v0, double omega0, double gamma, double f_over_m,
                double omega, double dt, Py_ssize_t n_steps):
    """RK4 for x'' + omega0^2 x + 2 gamma x' = (F0/m) cos(omega t)."""
    xs_arr = np.empty(n_steps + 1)
    vs_arr = np.empty(n_steps + 1)
    cdef double[::1] xs = xs_arr
    cdef double[::1] vs = vs_arr
    cdef double w0sq = omega0 * omega0, tg = 2.0 * gamma
    cdef double x = x0, v = v0, t = 0.0, h2 = 0.5 * dt
    cdef double k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v
    cdef Py_ssize_t k
    xs[0] = x
    vs[0] = v
    with nogil:
        for k in range(n_steps):
            t = k * dt
            k1x = v
            k1v = _accel(x, v, t, w0sq, tg, f_over_m, omega)
            k2x = v + h2 * k1v
            k2v = _accel(x + h2 * k1x, k2x, t + h2, w0sq, tg, f_over_m, omega)
            k3x = v + h2 * k2v
            k3v = _accel(x + h2 * k2x, k3x, t + h2, w0sq, tg, f_over_m, omega)
            k4x = v + dt * k3v
            k4v = _accel(x + dt * k3x, k4x, t + dt, w0sq, tg, f_over_m, omega)
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
            v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
            xs[k + 1] = x
            vs[k + 1] = v
    return xs_arr, vs_arr
