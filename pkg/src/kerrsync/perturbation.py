"""Weak-drive perturbation theory around the undriven limit cycle.

The undriven steady state is diagonal with a closed form in terms of
Kummer's function; the first-order response to the drive lives on the
first off-diagonals and is a sum of Lorentzian resonances at
``Delta = K(2m + 1)``.
"""

from __future__ import annotations

import dataclasses
import functools
import math
import warnings

import mpmath
import numpy as np

from . import _kernels
from .errors import (
    PerturbationValidityWarning,
    PrecisionError,
    TruncationError,
    UnboundedAmplitudeError,
    VacuumStateError,
)
from .hilbert import ModelParams, choose_truncation

__all__ = [
    "PerturbationTerms",
    "kummer_phi",
    "rho0_diagonal",
    "gamma_m",
    "lambda_m",
    "rho1_offdiagonal",
    "perturbation_terms",
    "first_order_state",
    "sync_measure_perturbative",
    "is_perturbative",
]

EXTENDED_PRECISION_ABOVE = 50.0
MAX_TERMS = 10_000


def kummer_phi(a: float, b: float, z: float, *, extended: bool | None = None) -> float:
    """Kummer's confluent hypergeometric function ``1F1(a; b; z)``.

    Sums ``sum_k (a)_k / (b)_k z^k / k!`` until a term drops below 1e-16 of
    the partial sum. With ``extended`` (default: when ``z > 50``) the series
    is accumulated in 40-digit arithmetic.

    Raises
    ------
    PrecisionError
        If the series has not converged after 10^4 terms.
    """
    if b <= 0 and float(b).is_integer():
        raise ValueError(f"b must not be a non-positive integer, got {b!r}")
    if extended is None:
        extended = abs(z) > EXTENDED_PRECISION_ABOVE
    if not extended:
        total, nterms = _kernels.kummer_series(float(a), float(b), float(z), 1e-16, MAX_TERMS)
        if nterms < 0:
            raise PrecisionError(f"1F1({a}, {b}, {z}) did not converge in {MAX_TERMS} terms")
        return total

    with mpmath.workdps(40):
        a_, b_, z_ = mpmath.mpf(a), mpmath.mpf(b), mpmath.mpf(z)
        term = mpmath.mpf(1)
        total = mpmath.mpf(1)
        eps = mpmath.mpf("1e-16")
        for k in range(MAX_TERMS):
            term *= (a_ + k) / (b_ + k) * z_ / (k + 1)
            total += term
            if abs(term) < eps * abs(total):
                return float(total)
    raise PrecisionError(f"1F1({a}, {b}, {z}) did not converge in {MAX_TERMS} terms")


def _log_kummer(a, b, z):
    value = kummer_phi(a, b, z)
    if math.isfinite(value):
        return math.log(value)
    with mpmath.workdps(40):
        return float(mpmath.log(mpmath.hyp1f1(a, b, z)))


def rho0_diagonal(r: float, dim: int, *, tail_tol: float = 1e-8) -> np.ndarray:
    """Fock populations of the undriven steady state.

    ``p_n = r^n Phi(1+n, r+n, r) / [(r)_n Phi(1, r, 2r)]`` with
    ``r = gamma1 / gamma2`` and ``(r)_n`` the rising factorial.

    Raises
    ------
    TruncationError
        If more than ``tail_tol`` of the probability lies at ``n >= dim``.
    """
    if not r > 0:
        raise ValueError(f"r must be positive, got {r!r}")
    return np.array(_rho0_cached(float(r), int(dim), float(tail_tol)))


@functools.lru_cache(maxsize=256)
def _rho0_cached(r, dim, tail_tol):
    n = np.arange(dim)
    log_norm = _log_kummer(1.0, r, 2.0 * r)
    log_p = np.array([
        k * math.log(r) - (math.lgamma(r + k) - math.lgamma(r))
        + _log_kummer(1.0 + k, r + k, r) - log_norm
        for k in n
    ])
    p = np.exp(log_p)
    tail = 1.0 - p.sum()
    if tail > tail_tol:
        raise TruncationError(
            f"dim={dim} leaves {tail:.2e} of the undriven distribution outside the space")
    return tuple(p / p.sum())


def gamma_m(m, params: ModelParams):
    """Linewidth ``Gamma_m = gamma1 (2m + 3) + 2 gamma2 m^2`` of the m -> m+1 coherence."""
    m = np.asarray(m)
    out = np.asarray(params.gamma1 * (2 * m + 3) + 2 * params.gamma2 * m**2, dtype=float)
    return out if out.ndim else float(out)


def lambda_m(m, params: ModelParams):
    """Diagonal of the unperturbed Liouvillian on ``|m+1><m|``.

    ``lambda = i[Delta - K(2m + 1)] - Gamma_m / 2``
    """
    m = np.asarray(m)
    out = np.asarray(1j * (params.detuning - params.kerr * (2 * m + 1))
                     - 0.5 * np.asarray(gamma_m(m, params)))
    return out if out.ndim else complex(out)


def is_perturbative(params: ModelParams) -> bool:
    """``E << gamma1 + gamma2 << K``, read as factors of 0.3."""
    rates = params.gamma1 + params.gamma2
    return params.drive < 0.3 * rates and rates < 0.3 * params.kerr


@dataclasses.dataclass(frozen=True)
class PerturbationTerms:
    r: float
    rho0_diag: np.ndarray
    lambdas: np.ndarray
    gammas: np.ndarray
    rho1_offdiag: np.ndarray
    valid: bool


def perturbation_terms(params: ModelParams, dim: int | None = None) -> PerturbationTerms:
    """Every ingredient of the first-order steady state in one record."""
    if params.gamma2 == 0:
        raise UnboundedAmplitudeError("the undriven state needs gamma2 > 0")
    dim = choose_truncation(params) if dim is None else int(dim)
    p = rho0_diagonal(params.ratio, dim)
    m = np.arange(dim - 1)
    lam = lambda_m(m, params)
    rho1 = np.sqrt(m + 1) * params.drive * (p[:-1] - p[1:]) / lam
    return PerturbationTerms(
        r=params.ratio,
        rho0_diag=p,
        lambdas=lam,
        gammas=gamma_m(m, params),
        rho1_offdiag=rho1,
        valid=is_perturbative(params),
    )


def rho1_offdiagonal(params: ModelParams, dim: int | None = None) -> np.ndarray:
    """First-order coherences ``rho1[m+1, m]`` for ``m = 0 .. dim-2``.

    Warns with :class:`PerturbationValidityWarning` outside the weak-drive,
    large-anharmonicity regime.
    """
    terms = perturbation_terms(params, dim)
    if not terms.valid:
        warnings.warn(
            f"E={params.drive}, gamma1+gamma2={params.gamma1 + params.gamma2}, "
            f"K={params.kerr} violate E << gamma1+gamma2 << K",
            PerturbationValidityWarning, stacklevel=2)
    return terms.rho1_offdiag


def first_order_state(params: ModelParams, dim: int | None = None) -> np.ndarray:
    """``rho0 + rho1`` as a dense matrix."""
    terms = perturbation_terms(params, dim)
    rho = np.diag(terms.rho0_diag).astype(complex)
    idx = np.arange(len(terms.rho1_offdiag))
    rho[idx + 1, idx] = terms.rho1_offdiag
    rho[idx, idx + 1] = np.conj(terms.rho1_offdiag)
    return rho


def sync_measure_perturbative(params: ModelParams, dim: int | None = None) -> complex:
    """Synchronization measure ``<a>/sqrt(<a^dag a>)`` of ``rho0 + rho1``.

    ``S = sum_m (p_m - p_{m+1}) (m + 1) E / (lambda_m sqrt(<n>))``, with
    ``<n>`` taken in the undriven state. Its modulus peaks near
    ``Delta = K(2m + 1)``.
    """
    terms = perturbation_terms(params, dim)
    p = terms.rho0_diag
    mean_n = float(np.dot(np.arange(len(p)), p))
    if mean_n <= 1e-14:
        raise VacuumStateError("undriven state has zero occupation")
    m = np.arange(len(p) - 1)
    weights = (p[:-1] - p[1:]) * (m + 1)
    return complex(np.sum(weights * params.drive / terms.lambdas) / math.sqrt(mean_n))
