"""Truncated Fock-space operators and the oscillator Hamiltonians.

All rates are measured in units of the one-phonon anti-damping rate
``gamma1``; frequencies share the same unit.
"""

from __future__ import annotations

import dataclasses
import enum
import math

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConfigurationError,
    InvalidDimensionError,
    UnboundedAmplitudeError,
    WrongFrameError,
)

__all__ = [
    "Anharmonicity",
    "ModelParams",
    "annihilation",
    "number",
    "identity",
    "hamiltonian_rotating",
    "hamiltonian_lab",
    "duffing_term",
    "choose_truncation",
]

MIN_TRUNCATION = 12


class Anharmonicity(str, enum.Enum):
    KERR = "kerr"
    DUFFING = "duffing"


@dataclasses.dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the driven van der Pol oscillator.

    Parameters
    ----------
    gamma1 : float
        One-phonon anti-damping (gain) rate.
    gamma2 : float
        Two-phonon damping rate.
    kerr : float
        Anharmonicity ``K``. For the Duffing model the quartic term is
        ``(K/6)(a + a^dag)^4``.
    detuning : float
        Drive detuning ``Delta = omega_d - omega_m``.
    drive : float
        Coherent drive amplitude ``E``.
    omega_m : float, optional
        Harmonic frequency; only used by the lab-frame Duffing model.
    kappa_nbar : float
        Thermal heating strength ``nbar * kappa``.
    anharmonicity : Anharmonicity
        ``KERR`` (rotating frame, time independent) or ``DUFFING`` (lab frame).
    """

    gamma1: float = 1.0
    gamma2: float = 1.0
    kerr: float = 0.0
    detuning: float = 0.0
    drive: float = 0.0
    omega_m: float | None = None
    kappa_nbar: float = 0.0
    anharmonicity: Anharmonicity = Anharmonicity.KERR

    def __post_init__(self):
        object.__setattr__(self, "anharmonicity", Anharmonicity(self.anharmonicity))
        for name in ("gamma1", "gamma2", "kerr", "drive", "kappa_nbar"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ConfigurationError(f"{name} must be finite and >= 0, got {value!r}")
        if not np.isfinite(self.detuning):
            raise ConfigurationError("detuning must be finite")
        if self.gamma1 == 0 and self.gamma2 == 0:
            raise ConfigurationError("gamma1 and gamma2 cannot both vanish")
        if self.anharmonicity is Anharmonicity.DUFFING:
            if self.omega_m is None or not self.omega_m > 0:
                raise ConfigurationError("the Duffing model requires omega_m > 0")

    @property
    def ratio(self) -> float:
        """``r = gamma1 / gamma2``."""
        if self.gamma2 == 0:
            return math.inf
        return self.gamma1 / self.gamma2

    @property
    def drive_frequency(self) -> float:
        """Lab-frame drive frequency of the Duffing model.

        The quartic term renormalizes the harmonic frequency by ``K`` within
        the rotating-wave approximation (level gaps ``omega_m + 2K(n + 1)``), so
        the detuning is measured from ``omega_m + K``. With this reference the
        Duffing resonances sit at ``Delta = K(2m + 1)`` exactly as in the
        Kerr model.
        """
        if self.omega_m is None:
            raise ConfigurationError("drive_frequency requires omega_m")
        shift = self.kerr if self.anharmonicity is Anharmonicity.DUFFING else 0.0
        return self.omega_m + shift + self.detuning

    def replace(self, **changes) -> "ModelParams":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["anharmonicity"] = self.anharmonicity.value
        return out


def _check_dim(dim) -> int:
    if int(dim) != dim or dim < 2:
        raise InvalidDimensionError(f"Fock dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def annihilation(dim: int) -> sp.csr_matrix:
    """Annihilation operator with ``a[n-1, n] = sqrt(n)``."""
    dim = _check_dim(dim)
    return sp.diags(np.sqrt(np.arange(1, dim, dtype=float)), 1,
                    shape=(dim, dim), format="csr", dtype=complex)


def number(dim: int) -> sp.csr_matrix:
    dim = _check_dim(dim)
    return sp.diags(np.arange(dim, dtype=float), 0, format="csr", dtype=complex)


def identity(dim: int) -> sp.csr_matrix:
    return sp.identity(_check_dim(dim), dtype=complex, format="csr")


def hamiltonian_rotating(params: ModelParams, dim: int) -> sp.csr_matrix:
    """Kerr Hamiltonian in the frame of the drive.

    ``H = -Delta n + K n^2 + iE(a - a^dag)``
    """
    if params.anharmonicity is not Anharmonicity.KERR:
        raise WrongFrameError("Duffing model is time dependent; use hamiltonian_lab")
    a = annihilation(dim)
    n = np.arange(dim, dtype=float)
    h0 = sp.diags(-params.detuning * n + params.kerr * n**2, 0, format="csr", dtype=complex)
    return (h0 + 1j * params.drive * (a - a.getH())).tocsr()


def duffing_term(kerr: float, dim: int) -> sp.csr_matrix:
    """``(K/6)(a + a^dag)^4`` in a ``dim``-level space.

    The fourth power is taken at ``dim + 4`` levels and then cropped, so the
    top rows carry the couplings to levels that the crop removes.
    """
    dim = _check_dim(dim)
    big = annihilation(dim + 4).toarray()
    x = big + big.conj().T
    x4 = np.linalg.matrix_power(x, 4)[:dim, :dim].real
    return sp.csr_matrix(kerr / 6.0 * x4, dtype=complex)


def hamiltonian_lab(params: ModelParams, dim: int, t: float) -> sp.csr_matrix:
    """Lab-frame Duffing Hamiltonian at time ``t``.

    ``H = omega_m n + (K/6)(a + a^dag)^4 + iE(a e^{i w_d t} - a^dag e^{-i w_d t})``
    with ``w_d`` given by :attr:`ModelParams.drive_frequency`.
    """
    if params.anharmonicity is not Anharmonicity.DUFFING:
        raise WrongFrameError("Kerr model lives in the rotating frame; use hamiltonian_rotating")
    a = annihilation(dim)
    phase = np.exp(1j * params.drive_frequency * t)
    h0 = params.omega_m * number(dim) + duffing_term(params.kerr, dim)
    h1 = 1j * params.drive * (phase * a - np.conj(phase) * a.getH())
    return (h0 + h1).tocsr()


def choose_truncation(params: ModelParams) -> int:
    """Initial Fock-space dimension for a steady-state solve.

    Covers the undriven number distribution (mean ``r/2``, variance ``3r/4``)
    with a six-sigma margin plus room for the coherent displacement. Solvers
    still audit the top-level population and grow the space when needed.
    """
    if params.gamma2 == 0:
        raise UnboundedAmplitudeError(
            "gamma2 = 0: one-phonon gain without two-phonon loss has no limit cycle")
    r = params.ratio
    core = math.ceil(r / 2 + 6 * math.sqrt(3 * r / 4))
    shift = math.ceil(4 * params.drive / (params.gamma1 + params.gamma2))
    return max(MIN_TRUNCATION, core + shift)
