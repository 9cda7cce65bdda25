"""Pure-Python reference versions of the compiled kernels.

Used when the extension is not built, or when ``BALLISTIC_BACKEND=python``.
The loops run over plain Python floats, which is several times faster than
indexing numpy arrays element by element.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def thomas(lower, diag, upper, rhs) -> np.ndarray:
    """Solve a tridiagonal system; lower[0] and upper[n-1] are ignored."""
    a = [float(v) for v in lower]
    b = [float(v) for v in diag]
    c = [float(v) for v in upper]
    r = [float(v) for v in rhs]
    n = len(b)
    if len(a) != n or len(c) != n or len(r) != n:
        raise ValueError("tridiagonal bands and rhs must share length")
    if n == 0:
        return np.empty(0)
    cp = [0.0] * n
    x = [0.0] * n
    denom = b[0]
    if denom == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    cp[0] = c[0] / denom
    x[0] = r[0] / denom
    for i in range(1, n):
        denom = b[i] - a[i] * cp[i - 1]
        if denom == 0.0:
            raise ZeroDivisionError(f"zero pivot at row {i}")
        cp[i] = c[i] / denom
        x[i] = (r[i] - a[i] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] -= cp[i] * x[i + 1]
    return np.array(x)


def cn_step(p, d: float) -> np.ndarray:
    """One Crank-Nicolson step with mirrored (2d) boundary rows at both ends."""
    p = np.asarray(p, dtype=float)
    n = p.shape[0]
    rhs = (2.0 - 2.0 * d) * p
    rhs[1:-1] += d * (p[:-2] + p[2:])
    rhs[0] += 2.0 * d * p[1]
    rhs[-1] += 2.0 * d * p[-2]
    lower = np.full(n, -d)
    upper = np.full(n, -d)
    upper[0] = -2.0 * d
    lower[-1] = -2.0 * d
    return thomas(lower, np.full(n, 2.0 + 2.0 * d), upper, rhs)


def explicit_step(p, d: float) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.empty_like(p)
    q[1:-1] = p[1:-1] + d * (p[2:] - 2.0 * p[1:-1] + p[:-2])
    q[0] = p[0] + 2.0 * d * (p[1] - p[0])
    q[-1] = p[-1] + 2.0 * d * (p[-2] - p[-1])
    return q


def bouncer_rk4(x0: float, v0: float, omega0: float, gamma: float, f_over_m: float,
                omega: float, dt: float, n_steps: int):
    """RK4 for x'' + omega0^2 x + 2 gamma x' = (F0/m) cos(omega t)."""
    w0sq = omega0 * omega0
    tg = 2.0 * gamma
    cos = math.cos

    def acc(x, v, t):
        return f_over_m * cos(omega * t) - w0sq * x - tg * v

    xs = [0.0] * (n_steps + 1)
    vs = [0.0] * (n_steps + 1)
    x, v = float(x0), float(v0)
    xs[0], vs[0] = x, v
    h2 = 0.5 * dt
    for k in range(n_steps):
        t = k * dt
        k1x = v
        k1v = acc(x, v, t)
        k2x = v + h2 * k1v
        k2v = acc(x + h2 * k1x, k2x, t + h2)
        k3x = v + h2 * k2v
        k3v = acc(x + h2 * k2x, k3x, t + h2)
        k4x = v + dt * k3v
        k4v = acc(x + dt * k3x, k4x, t + dt)
        x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        xs[k + 1] = x
        vs[k + 1] = v
    return np.array(xs), np.array(vs)
