"""Pure-Python/numpy versions of the compiled kernels."""

import numpy as np


def kummer_series(a, b, z, rel_tol=1e-16, max_terms=10000):
    """Partial sum of 1F1(a; b; z) and the number of terms used (-1 if capped)."""
    if z == 0:
        return 1.0, 1
    term = 1.0
    total = 1.0
    for k in range(max_terms):
        term *= (a + k) / (b + k) * z / (k + 1)
        total += term
        if abs(term) < rel_tol * abs(total):
            return total, k + 2
    return total, -1


def wigner_laguerre(rho, xvec, yvec):
    """Wigner function of a Hermitian ``rho`` on the grid ``x + iy``.

    Returns an array indexed ``[iy, ix]``.
    """
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    X, Y = np.meshgrid(np.asarray(xvec, float), np.asarray(yvec, float))
    r2 = X * X + Y * Y
    lag_x = 4.0 * r2
    step = 2.0 * (X - 1j * Y)
    t = np.ones_like(step)
    acc = np.zeros_like(r2)
    for k in range(dim):
        if k > 0:
            t = t * step / np.sqrt(k)
        c = np.zeros_like(step)
        g_prev = np.zeros_like(r2)
        g_cur = np.ones_like(r2)
        sign = 1.0
        for n in range(dim - k):
            c += sign * rho[n + k, n] * g_cur
            g_next = ((2 * n + 1 + k - lag_x) * g_cur
                      - np.sqrt(n * (n + k)) * g_prev) / np.sqrt((n + 1) * (n + k + 1))
            g_prev, g_cur = g_cur, g_next
            sign = -sign
        acc += (1.0 if k == 0 else 2.0) * (c * t).real
    return 2.0 / np.pi * np.exp(-2.0 * r2) * acc
