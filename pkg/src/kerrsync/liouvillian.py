"""Sparse Liouvillian superoperators.

Density matrices are vectorized by stacking columns: element ``rho[i, j]``
lives at index ``j * N + i``. Under this convention ``vec(A X B)`` equals
``kron(B.T, A) @ vec(X)``.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, WrongFrameError
from .hilbert import (
    Anharmonicity,
    ModelParams,
    annihilation,
    duffing_term,
    hamiltonian_rotating,
    identity,
    number,
)

__all__ = [
    "vec",
    "unvec",
    "trace_row",
    "spre",
    "spost",
    "commutator",
    "dissipator",
    "build_rotating",
    "build_lab",
    "LabGenerator",
]


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(-1, order="F")


def unvec(x: np.ndarray, dim: int | None = None) -> np.ndarray:
    x = np.asarray(x)
    if dim is None:
        dim = int(round(np.sqrt(x.size)))
    return x.reshape(dim, dim, order="F")


def trace_row(dim: int) -> np.ndarray:
    """Row vector ``vec(I)^dag``; its product with ``vec(rho)`` is ``Tr rho``."""
    return vec(np.eye(dim, dtype=complex))


def spre(op) -> sp.csr_matrix:
    """Superoperator of left multiplication ``X -> op X``."""
    op = sp.csr_matrix(op)
    return sp.kron(identity(op.shape[0]), op, format="csr")


def spost(op) -> sp.csr_matrix:
    """Superoperator of right multiplication ``X -> X op``."""
    op = sp.csr_matrix(op)
    return sp.kron(op.T, identity(op.shape[0]), format="csr")


def commutator(h) -> sp.csr_matrix:
    """Superoperator of ``X -> -i[h, X]``."""
    return (-1j * (spre(h) - spost(h))).tocsr()


def dissipator(x) -> sp.csr_matrix:
    """Superoperator of ``D[x] rho = 2 x rho x^dag - x^dag x rho - rho x^dag x``.

    Note the factor 2 on the jump term: ``(gamma/2) D[x]`` relaxes at rate
    ``gamma``.
    """
    x = sp.csr_matrix(x, dtype=complex)
    if x.shape[0] != x.shape[1]:
        raise ValueError(f"collapse operator must be square, got shape {x.shape}")
    eye = identity(x.shape[0])
    xdx = (x.getH() @ x).tocsr()
    out = 2 * sp.kron(x.conj(), x) - sp.kron(eye, xdx) - sp.kron(xdx.T, eye)
    return out.tocsr()


def _lindblad_part(params: ModelParams, dim: int) -> sp.csr_matrix:
    a = annihilation(dim)
    ad = a.getH().tocsr()
    out = 0.5 * params.gamma1 * dissipator(ad) + 0.5 * params.gamma2 * dissipator(a @ a)
    if params.kappa_nbar > 0:
        # (nbar + 1) ~ nbar for the damping channel of a hot bath
        out = out + 0.5 * params.kappa_nbar * (dissipator(ad) + dissipator(a))
    return out.tocsr()


def build_rotating(params: ModelParams, dim: int) -> sp.csr_matrix:
    """Time-independent Liouvillian of the Kerr model in the drive frame."""
    if params.anharmonicity is not Anharmonicity.KERR:
        raise WrongFrameError("Duffing model is time dependent; use build_lab")
    h = hamiltonian_rotating(params, dim)
    out = commutator(h) + _lindblad_part(params, dim)
    out.eliminate_zeros()
    return out.tocsr()


class LabGenerator:
    """Time-periodic lab-frame Liouvillian of the Duffing model.

    Calling the instance with a time ``t`` returns the sparse generator at
    that time. The drive is the only time-dependent piece, so the generator
    is stored as ``L0 + e^{i w t} L+ + e^{-i w t} L-``.

    Parameters
    ----------
    params : ModelParams
        Must describe a Duffing oscillator (``omega_m`` set).
    dim : int
        Fock-space dimension.
    """

    def __init__(self, params: ModelParams, dim: int):
        if params.anharmonicity is not Anharmonicity.DUFFING:
            raise WrongFrameError("Kerr model lives in the rotating frame; use build_rotating")
        if params.omega_m is None:
            raise ConfigurationError("lab-frame generator requires omega_m")
        self.params = params
        self.dim = int(dim)
        self.frequency = params.drive_frequency
        if not self.frequency > 0:
            raise ConfigurationError(
                f"drive frequency must be positive, got {self.frequency!r}")
        self.period = 2 * np.pi / self.frequency

        a = annihilation(dim)
        h0 = params.omega_m * number(dim) + duffing_term(params.kerr, dim)
        static = commutator(h0) + _lindblad_part(params, dim)
        static.eliminate_zeros()
        self.static = static.tocsr()
        # H1 = iE(a e^{iwt} - a^dag e^{-iwt})
        self.plus = commutator(1j * params.drive * a)
        self.minus = commutator(-1j * params.drive * a.getH())
        self.time_dependent = params.drive != 0

    def __call__(self, t: float) -> sp.csr_matrix:
        if not self.time_dependent:
            return self.static
        phase = np.exp(1j * self.frequency * t)
        return (self.static + phase * self.plus + np.conj(phase) * self.minus).tocsr()

    def matvec(self, t: float, x: np.ndarray) -> np.ndarray:
        """``L(t) @ x`` without assembling the summed sparse matrix."""
        out = self.static @ x
        if self.time_dependent:
            phase = np.exp(1j * self.frequency * t)
            out += phase * (self.plus @ x)
            out += np.conj(phase) * (self.minus @ x)
        return out


def build_lab(params: ModelParams, dim: int, t: float) -> sp.csr_matrix:
    """Lab-frame Duffing Liouvillian at time ``t``."""
    return LabGenerator(params, dim)(t)
