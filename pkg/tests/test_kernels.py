import math

import mpmath
import numpy as np
import pytest
from scipy.special import eval_genlaguerre, factorial, hyp1f1

from kerrsync import _kernels
from kerrsync._kernels import _core_py

from .conftest import random_density

try:
    from kerrsync._kernels import _core as _core_c
except ImportError:  # pragma: no cover - extension not built
    _core_c = None

needs_ext = pytest.mark.skipif(_core_c is None, reason="compiled extension not built")
BACKENDS = [_core_py] + ([_core_c] if _core_c is not None else [])


def wigner_oracle(rho, xs):
    """Direct sum over matrix elements with scipy's Laguerre polynomials."""
    dim = rho.shape[0]
    X, Y = np.meshgrid(xs, xs)
    alpha = X + 1j * Y
    lag_x = 4 * np.abs(alpha) ** 2
    acc = np.zeros_like(alpha)
    for m in range(dim):
        for n in range(m + 1):
            k = m - n
            t = ((-1) ** n * math.sqrt(factorial(n) / factorial(m)) * (2 * np.conj(alpha)) ** k
                 * eval_genlaguerre(n, k, lag_x))
            acc += rho[m, n] * t
            if k:
                acc += rho[n, m] * np.conj(t)
    return (2 / np.pi * np.exp(-2 * np.abs(alpha) ** 2) * acc).real


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("a,b,z", [(1.0, 1.0, 1.0), (2.0, 3.0, 0.5), (1.0, 0.3, 0.3),
                                   (8.0, 12.0, 30.0), (0.5, 1.5, -2.0)])
def test_kummer_backends_against_scipy(backend, a, b, z):
    total, nterms = backend.kummer_series(a, b, z, 1e-16, 10_000)
    assert nterms > 0
    assert total == pytest.approx(float(mpmath.hyp1f1(a, b, z)), rel=1e-13)
    assert total == pytest.approx(hyp1f1(a, b, z), rel=1e-12)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_kummer_cap_reported(backend):
    _, nterms = backend.kummer_series(1.0, 1.0, 500.0, 1e-16, 20)
    assert nterms == -1


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def test_wigner_backend_against_oracle(backend, rng):
    rho = random_density(9, rng)
    xs = np.linspace(-3, 3, 41)
    got = backend.wigner_laguerre(np.ascontiguousarray(rho), xs, xs)
    assert np.max(np.abs(got - wigner_oracle(rho, xs))) <= 1e-12


@needs_ext
def test_backends_agree(rng):
    rho = np.ascontiguousarray(random_density(25, rng))
    xs = np.linspace(-5, 5, 61)
    ys = np.linspace(-4, 4, 47)
    a = _core_c.wigner_laguerre(rho, xs, ys)
    b = _core_py.wigner_laguerre(rho, xs, ys)
    assert a.shape == (47, 61)
    assert np.max(np.abs(a - b)) <= 1e-12
    for args in [(3.0, 22.0, 20.0), (1.0, 7.0, 40.0)]:
        assert _core_c.kummer_series(*args, 1e-16, 10_000) == pytest.approx(
            _core_py.kummer_series(*args, 1e-16, 10_000), rel=1e-14)


def test_backend_selection_reported():
    assert _kernels.BACKEND in ("cython", "python")
    if _core_c is not None:
        assert _kernels.BACKEND == "cython" or _kernels.os.environ.get("KERRSYNC_PURE_PYTHON")


def test_pure_python_switch(monkeypatch):
    import importlib
    monkeypatch.setenv("KERRSYNC_PURE_PYTHON", "1")
    mod = importlib.reload(_kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.wigner_laguerre is _core_py.wigner_laguerre
    finally:
        monkeypatch.delenv("KERRSYNC_PURE_PYTHON")
        importlib.reload(_kernels)
