# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; ``_core_py`` holds the reference implementations."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, fabs

cnp.import_array()


def kummer_series(double a, double b, double z, double rel_tol=1e-16,
                  long max_terms=10000):
    """Partial sum of 1F1(a; b; z) and the number of terms used (-1 if capped)."""
    cdef double term = 1.0
    cdef double total = 1.0
    cdef long k = 0
    if z == 0.0:
        return 1.0, 1
    while k < max_terms:
        term *= (a + k) / (b + k) * z / (k + 1)
        total += term
        k += 1
        if fabs(term) < rel_tol * fabs(total):
            return total, k + 1
    return total, -1


def wigner_laguerre(cnp.complex128_t[:, ::1] rho, double[::1] xvec, double[::1] yvec):
    """Wigner function of a Hermitian ``rho`` on the grid ``x + iy``.

    Returns an array indexed ``[iy, ix]``.
    """
    cdef Py_ssize_t dim = rho.shape[0]
    cdef Py_ssize_t nx = xvec.shape[0]
    cdef Py_ssize_t ny = yvec.shape[0]
    out = np.empty((ny, nx), dtype=np.float64)
    cdef double[:, ::1] w = out
    cdef Py_ssize_t ix, iy, k, n
    cdef double x, y, r2, lag_x, acc, sign, g_prev, g_cur, g_next, tr, ti, t_re, t_im
    cdef double c_re, c_im, step_re, step_im, inv
    cdef double two_over_pi = 0.6366197723675814
    with nogil:
        for iy in range(ny):
            y = yvec[iy]
            for ix in range(nx):
                x = xvec[ix]
                r2 = x * x + y * y
                lag_x = 4.0 * r2
                acc = 0.0
                # t_k = (2 conj(alpha))^k / sqrt(k!)
                t_re = 1.0
                t_im = 0.0
                for k in range(dim):
                    if k > 0:
                        inv = 1.0 / sqrt(<double>k)
                        step_re = 2.0 * x * inv
                        step_im = -2.0 * y * inv
                        tr = t_re * step_re - t_im * step_im
                        ti = t_re * step_im + t_im * step_re
                        t_re = tr
                        t_im = ti
                    c_re = 0.0
                    c_im = 0.0
                    g_prev = 0.0
                    g_cur = 1.0
                    sign = 1.0
                    for n in range(dim - k):
                        c_re += sign * g_cur * rho[n + k, n].real
                        c_im += sign * g_cur * rho[n + k, n].imag
                        g_next = ((2 * n + 1 + k - lag_x) * g_cur
                                  - sqrt(<double>(n * (n + k))) * g_prev) \
                            / sqrt(<double>((n + 1) * (n + k + 1)))
                        g_prev = g_cur
                        g_cur = g_next
                        sign = -sign
                    if k == 0:
                        acc += c_re * t_re - c_im * t_im
                    else:
                        acc += 2.0 * (c_re * t_re - c_im * t_im)
                w[iy, ix] = two_over_pi * exp(-2.0 * r2) * acc
    return out
