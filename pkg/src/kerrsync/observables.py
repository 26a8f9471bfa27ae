"""Observables of a steady state: phase locking, Wigner function, spectrum."""

from __future__ import annotations

import dataclasses
import math
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import trapezoid

from . import _kernels
from .errors import VacuumStateError, WignerDomainWarning
from .hilbert import ModelParams, annihilation
from .liouvillian import build_rotating, vec
from .steadystate import steady_state

__all__ = [
    "SyncMeasure",
    "PhaseDistribution",
    "WignerGrid",
    "Spectrum",
    "EntrainmentPoint",
    "sync_measure",
    "phase_distribution",
    "wigner",
    "fock_probabilities",
    "power_spectrum",
    "spectrum_argmax",
    "entrainment_curve",
]


@dataclasses.dataclass(frozen=True)
class SyncMeasure:
    """``S = <a> / sqrt(<a^dag a>) = |S| e^{i theta}``."""

    magnitude: float
    phase: float

    @property
    def value(self) -> complex:
        return self.magnitude * complex(math.cos(self.phase), math.sin(self.phase))


def _mean_a(rho):
    rho = np.asarray(rho)
    return complex(np.sum(np.sqrt(np.arange(1, rho.shape[0])) * np.diagonal(rho, -1)))


def sync_measure(rho) -> SyncMeasure:
    """Phase-locking measure of a density matrix.

    Raises
    ------
    VacuumStateError
        If ``<a^dag a>`` is at most 1e-14.
    """
    rho = np.asarray(rho)
    mean_n = float(np.dot(np.arange(rho.shape[0]), np.diagonal(rho).real))
    if mean_n <= 1e-14:
        raise VacuumStateError("<a^dag a> vanishes; the phase is undefined")
    s = _mean_a(rho) / math.sqrt(mean_n)
    return SyncMeasure(magnitude=abs(s), phase=math.atan2(s.imag, s.real))


@dataclasses.dataclass(frozen=True)
class PhaseDistribution:
    phi: np.ndarray
    values: np.ndarray

    @property
    def step(self) -> float:
        return 2 * math.pi / len(self.phi)


def phase_distribution(rho, n_phi: int = 256) -> PhaseDistribution:
    """``P(phi) = <phi|rho|phi> / 2pi`` with ``|phi> = sum_n e^{i n phi}|n>``."""
    if n_phi < 64:
        raise ValueError("n_phi must be at least 64")
    rho = np.asarray(rho)
    phi = 2 * math.pi * np.arange(n_phi) / n_phi
    total = np.full(n_phi, np.trace(rho).real)
    for k in range(1, rho.shape[0]):
        # rho[m, n] e^{i phi (n - m)} with m - n = k, plus the conjugate pair
        c = np.sum(np.diagonal(rho, -k))
        total += 2 * np.real(c * np.exp(-1j * k * phi))
    return PhaseDistribution(phi=phi, values=total / (2 * math.pi))


@dataclasses.dataclass(frozen=True)
class WignerGrid:
    """Wigner function sampled at ``alpha = x + iy``; ``values[iy, ix]``."""

    x: np.ndarray
    y: np.ndarray
    values: np.ndarray

    @property
    def cell_area(self) -> float:
        return float((self.x[1] - self.x[0]) * (self.y[1] - self.y[0]))

    @property
    def norm(self) -> float:
        return float(self.values.sum() * self.cell_area)

    @property
    def minimum(self) -> float:
        return float(self.values.min())


def wigner(rho, xvec, yvec=None, *, warn=True) -> WignerGrid:
    """Wigner function normalized to unit integral over ``d^2 alpha``.

    Evaluated from the Fock-basis matrix elements with normalized
    generalized Laguerre polynomials and their three-term recurrence. The
    vacuum peaks at ``2/pi``.
    """
    rho = np.asarray(rho, dtype=complex)
    rho = np.ascontiguousarray(0.5 * (rho + rho.conj().T))
    xvec = np.ascontiguousarray(xvec, dtype=float)
    yvec = xvec if yvec is None else np.ascontiguousarray(yvec, dtype=float)
    values = _kernels.wigner_laguerre(rho, xvec, yvec)
    grid = WignerGrid(x=xvec, y=yvec, values=values)
    if warn:
        edge = max(np.abs(values[0]).max(), np.abs(values[-1]).max(),
                   np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
        if edge > 1e-4 * np.abs(values).max():
            warnings.warn("Wigner function is not negligible on the grid boundary",
                          WignerDomainWarning, stacklevel=2)
    return grid


def fock_probabilities(rho) -> np.ndarray:
    return np.diagonal(np.asarray(rho)).real.copy()


@dataclasses.dataclass(frozen=True)
class Spectrum:
    """Incoherent emission spectrum.

    ``omega_rot`` is the frequency in the frame of the drive and
    ``omega_rel = Delta + omega_rot`` the lab frequency measured from the
    bare oscillator frequency; the drive sits at ``omega_rot = 0``.
    """

    omega_rot: np.ndarray
    omega_rel: np.ndarray
    values: np.ndarray
    fluctuation_number: float

    def integral(self) -> float:
        """``(1/2pi) int P d omega`` by the trapezoidal rule."""
        return float(trapezoid(self.values, self.omega_rot) / (2 * math.pi))


SINGULAR_SHIFT = 1e-6


def power_spectrum(L, rho_ss, omega_grid, *, detuning: float = 0.0,
                   workers: int = 1) -> Spectrum:
    """Fluctuation spectrum by the quantum regression theorem.

    ``P(w) = int e^{-i w t} <da^dag(t) da(0)> dt`` with ``da = a - <a>``;
    for each ``w`` the resolvent equation ``(L - i w) x = -vec(da rho)`` is
    solved directly and ``P = 2 Re Tr[da^dag x]``. A mode oscillating as
    ``e^{-i nu t}`` in the rotating frame produces a peak at ``w = nu``.

    Parameters
    ----------
    L : sparse matrix
        Time-independent rotating-frame Liouvillian.
    rho_ss : ndarray
        Its steady state.
    omega_grid : array_like
        Rotating-frame frequencies.
    detuning : float
        ``Delta``, used only to build the ``omega_rel`` axis.
    workers : int
        Threads sharing the frequency points; every point is an
        independent solve, so the values do not depend on it.
    """
    rho_ss = np.asarray(rho_ss)
    dim = rho_ss.shape[0]
    a = annihilation(dim).toarray()
    mean_a = np.trace(a @ rho_ss)
    da = a - mean_a * np.eye(dim)
    rhs = -vec(da @ rho_ss)
    pairing = vec(da.conj())  # Tr[da^dag X] = vec(conj(da)) . vec(X)
    fluct = float(np.trace(da.conj().T @ da @ rho_ss).real)

    L = sp.csc_matrix(L, dtype=complex)
    eye = sp.identity(dim * dim, dtype=complex, format="csc")
    omega = np.asarray(omega_grid, dtype=float)

    def point(w):
        return _resolvent_point(L, eye, w, rhs, pairing)

    if workers > 1 and omega.size > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.fromiter(pool.map(point, omega), float, omega.size)
    else:
        values = np.fromiter(map(point, omega), float, omega.size)
    return Spectrum(omega_rot=omega, omega_rel=omega + detuning, values=values,
                    fluctuation_number=fluct)


def _resolvent_point(L, eye, w, rhs, pairing):
    # w = 0 is an exact eigenvalue of L (the steady state itself)
    trials = [w] if abs(w) > 1e-12 else []
    trials += [w + SINGULAR_SHIFT, w - SINGULAR_SHIFT]
    for trial in trials:
        try:
            x = spla.splu(L - 1j * trial * eye).solve(rhs)
        except RuntimeError:
            continue
        if np.all(np.isfinite(x)):
            return 2.0 * float(np.real(pairing @ x))
    raise np.linalg.LinAlgError(f"resolvent singular near omega={w}")


def spectrum_argmax(omega, values) -> float:
    """Location of the maximum; ties go to the smallest ``|omega|``."""
    omega = np.asarray(omega)
    values = np.asarray(values)
    ties = np.flatnonzero(values == values.max())
    return float(omega[ties[np.argmin(np.abs(omega[ties]))]])


@dataclasses.dataclass(frozen=True)
class EntrainmentPoint:
    detuning: float
    peak_rel: float
    peak_value: float
    entrained: bool
    dim: int


def entrainment_curve(params: ModelParams, delta_grid, omega_rel_grid, dim=None):
    """Spectral peak versus detuning.

    For every ``Delta`` the steady state and its spectrum on the
    ``omega_rel`` grid are computed. A point counts as entrained when the
    peak lies within two grid steps of the drive, ``omega_rel = Delta``.

    Returns
    -------
    list of EntrainmentPoint
    """
    omega_rel = np.asarray(omega_rel_grid, dtype=float)
    step = float(np.min(np.diff(omega_rel)))
    if step <= 0:
        raise ValueError("omega grid must be strictly increasing")
    if np.max(np.diff(omega_rel)) > params.gamma1 / 10 * (1 + 1e-9):
        raise ValueError("omega grid must resolve gamma1/10")
    out = []
    for delta in np.asarray(delta_grid, dtype=float):
        p = params.replace(detuning=float(delta))
        rho, info = steady_state(p, dim, return_info=True)
        L = build_rotating(p, info["dim"])
        spec = power_spectrum(L, rho, omega_rel - delta, detuning=delta)
        peak = spectrum_argmax(spec.omega_rel, spec.values)
        out.append(EntrainmentPoint(
            detuning=float(delta),
            peak_rel=peak,
            peak_value=float(spec.values.max()),
            entrained=abs(peak - delta) <= 2 * step * (1 + 1e-9),
            dim=info["dim"],
        ))
    return out
