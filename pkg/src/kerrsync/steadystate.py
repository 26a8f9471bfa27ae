"""Steady states of the rotating-frame and lab-frame master equations."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp

from .errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    PropagatorAccuracyError,
    TruncationError,
)
from .hilbert import Anharmonicity, ModelParams, choose_truncation
from .liouvillian import LabGenerator, build_rotating, trace_row, unvec

__all__ = [
    "solve_steady",
    "periodic_steady",
    "propagator",
    "steady_state",
    "check_density_matrix",
    "TAIL_TOLERANCE",
]

TAIL_TOLERANCE = 1e-8
RESIDUAL_TOLERANCE = 1e-9


def _dim_of(L) -> int:
    n2 = L.shape[0]
    dim = int(round(math.sqrt(n2)))
    if dim * dim != n2 or L.shape[0] != L.shape[1]:
        raise ValueError(f"superoperator shape {L.shape} is not N^2 x N^2")
    return dim


def _finalize(x: np.ndarray, dim: int) -> np.ndarray:
    rho = unvec(x, dim)
    rho = 0.5 * (rho + rho.conj().T)
    return rho / np.trace(rho).real


def check_density_matrix(rho, *, tol=1e-10, psd_tol=1e-8) -> dict:
    """Trace, hermiticity and positivity diagnostics of ``rho``."""
    rho = np.asarray(rho)
    evals = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    out = {
        "trace_error": abs(np.trace(rho) - 1.0),
        "hermiticity_error": float(np.max(np.abs(rho - rho.conj().T))),
        "min_eigenvalue": float(evals[0]),
        "tail": float(rho[-1, -1].real),
    }
    out["ok"] = (out["trace_error"] <= tol and out["hermiticity_error"] <= tol
                 and out["min_eigenvalue"] >= -psd_tol)
    return out


def solve_steady(L, *, trace_row_index=0, tol=RESIDUAL_TOLERANCE, return_info=False):
    """Steady state of a time-independent Liouvillian.

    One equation of ``L vec(rho) = 0`` is replaced by the trace condition
    ``Tr rho = 1`` and the resulting square system is factorized directly.

    Parameters
    ----------
    L : sparse matrix
        ``N^2 x N^2`` generator in column-stacking convention.
    trace_row_index : int
        Row of ``L`` overwritten by the trace constraint. Only population
        rows ``j * (N + 1)`` are linearly dependent, so the index must be
        one of them.
    tol : float
        Bound on ``max|L vec(rho)|`` relative to the infinity norm of ``L``.
    return_info : bool
        Also return a dict of solver diagnostics.

    Returns
    -------
    rho : ndarray
        Hermitian, unit-trace density matrix.
    info : dict, optional
    """
    start = time.perf_counter()
    L = sp.csr_matrix(L, dtype=complex)
    dim = _dim_of(L)
    n2 = dim * dim
    if not 0 <= trace_row_index < n2 or trace_row_index % (dim + 1):
        raise ValueError(f"trace_row_index must address a population row j*(N+1), "
                         f"got {trace_row_index}")

    A = L.tolil(copy=True)
    A[trace_row_index, :] = sp.csr_matrix(trace_row(dim).conj()[None, :])
    b = np.zeros(n2, dtype=complex)
    b[trace_row_index] = 1.0
    try:
        lu = spla.splu(A.tocsc())
        x = lu.solve(b)
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(
            f"augmented steady-state system is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DegenerateSteadyStateError("steady-state solve produced non-finite values")

    rho = _finalize(x, dim)
    scale = spla.norm(L, np.inf)
    residual = float(np.max(np.abs(L @ rho.reshape(-1, order="F"))))
    info = {
        "dim": dim,
        "residual": residual,
        "relative_residual": residual / scale if scale > 0 else residual,
        "tail": float(rho[-1, -1].real),
        "solve_time": time.perf_counter() - start,
    }
    if info["relative_residual"] > tol:
        raise ConvergenceError(
            f"steady-state residual {info['relative_residual']:.3e} exceeds {tol:.1e}", info)
    if return_info:
        return rho, info
    return rho


def _integrate_block(generator, period, block, substeps, rtol, atol):
    n2 = block.shape[0]
    ncol = block.shape[1]
    matvec = getattr(generator, "matvec", None)

    def rhs(t, y):
        Y = y.reshape(n2, ncol)
        if matvec is not None:
            return matvec(t, Y).ravel()
        return (generator(t) @ Y).ravel()

    sol = solve_ivp(rhs, (0.0, period), block.ravel(), method="DOP853",
                    rtol=rtol, atol=atol, max_step=period / substeps)
    if not sol.success:
        raise PropagatorAccuracyError(f"propagator integration failed: {sol.message}")
    return sol.y[:, -1].reshape(n2, ncol), sol.nfev


def propagator(generator, period, substeps=100, *, rtol=1e-10, atol=1e-12,
               column_blocks=1, workers=1):
    """One-period propagator ``Phi(T)`` of ``dPhi/dt = L(t) Phi``, ``Phi(0) = I``.

    The identity is split into ``column_blocks`` fixed column groups that are
    integrated independently; ``workers`` only controls how many run at
    once, so the result does not depend on it.

    Returns
    -------
    P : ndarray
    nfev : int
        Total right-hand-side evaluations.
    """
    if substeps < 100:
        raise ValueError("substeps must be >= 100")
    n2 = generator(0.0).shape[0]
    eye = np.eye(n2, dtype=complex)
    edges = np.linspace(0, n2, int(column_blocks) + 1).astype(int)
    blocks = [eye[:, lo:hi] for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]

    def run(block):
        return _integrate_block(generator, period, block, substeps, rtol, atol)

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, blocks))
    else:
        results = [run(b) for b in blocks]
    P = np.hstack([r[0] for r in results])
    return P, sum(r[1] for r in results)


def periodic_steady(generator, period, substeps=100, *, rtol=1e-10, atol=1e-12,
                    column_blocks=1, workers=1, unit_tol=1e-6, return_info=False):
    """Stroboscopic steady state of a time-periodic Liouvillian.

    The state returned is the one seen at times ``t = n * period`` in the long
    time limit, i.e. at zero drive phase. It is the fixed point of the
    one-period propagator, taken as the eigenvector whose eigenvalue is
    closest to one.

    Parameters
    ----------
    generator : callable
        ``t -> L(t)``, sparse ``N^2 x N^2``. An optional ``matvec(t, X)``
        attribute is used when present.
    period : float
    substeps : int
        Minimum number of integrator steps per period.
    unit_tol : float
        Accepted distance of the fixed-point eigenvalue from one.
    """
    start = time.perf_counter()
    P, nfev = propagator(generator, period, substeps, rtol=rtol, atol=atol,
                         column_blocks=column_blocks, workers=workers)
    n2 = P.shape[0]
    dim = int(round(math.sqrt(n2)))

    evals, evecs = np.linalg.eig(P)
    dist = np.abs(evals - 1.0)
    order = np.argsort(dist)
    if dist[order[0]] > unit_tol:
        raise PropagatorAccuracyError(
            f"no propagator eigenvalue within {unit_tol:g} of 1 "
            f"(closest: {evals[order[0]]:.12g})")
    if n2 > 1 and dist[order[1]] <= unit_tol:
        raise DegenerateSteadyStateError(
            f"{int(np.sum(dist <= unit_tol))} propagator eigenvalues within {unit_tol:g} of 1")

    rho = _finalize(evecs[:, order[0]], dim)
    tr = trace_row(dim).conj()
    info = {
        "dim": dim,
        "eigenvalue": complex(evals[order[0]]),
        "gap": float(dist[order[1]]) if n2 > 1 else math.inf,
        "trace_preservation": float(np.max(np.abs(tr @ P - tr))),
        "residual": float(np.max(np.abs(P @ rho.reshape(-1, order="F")
                                        - rho.reshape(-1, order="F")))),
        "tail": float(rho[-1, -1].real),
        "nfev": nfev,
        "solve_time": time.perf_counter() - start,
    }
    if return_info:
        return rho, info
    return rho


def steady_state(params: ModelParams, dim=None, *, tail_tol=TAIL_TOLERANCE,
                 max_dim=160, substeps=100, return_info=False, **solver_kw):
    """Steady state of the model, growing the Fock space until converged.

    Starts from :func:`~kerrsync.hilbert.choose_truncation` (or ``dim``) and
    enlarges the space by 50% until the top-level population is at most
    ``tail_tol``. Kerr models use :func:`solve_steady`; Duffing models use
    :func:`periodic_steady` and return the state at zero drive phase.
    """
    dim = choose_truncation(params) if dim is None else int(dim)
    attempts = []
    while True:
        if params.anharmonicity is Anharmonicity.DUFFING:
            gen = LabGenerator(params, dim)
            rho, info = periodic_steady(gen, gen.period, substeps, return_info=True, **solver_kw)
        else:
            rho, info = solve_steady(build_rotating(params, dim), return_info=True, **solver_kw)
        attempts.append(dim)
        if info["tail"] <= tail_tol:
            break
        new_dim = int(math.ceil(1.5 * dim))
        if new_dim > max_dim:
            raise TruncationError(
                f"tail population {info['tail']:.2e} still above {tail_tol:g} at dim={dim}; "
                f"next step would exceed max_dim={max_dim}")
        dim = new_dim
    info["attempts"] = attempts
    if return_info:
        return rho, info
    return rho
