"""Driven van der Pol oscillator with Kerr anharmonicity.

Steady states of the quantum master equation in the rotating frame and of
its lab-frame Duffing variant, closed-form perturbation theory, phase
space and spectral observables, and the semiclassical Fokker-Planck model.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import *  # noqa: F401,F403
from .hilbert import (
    Anharmonicity,
    ModelParams,
    annihilation,
    choose_truncation,
    hamiltonian_lab,
    hamiltonian_rotating,
)
from .liouvillian import LabGenerator, build_lab, build_rotating, dissipator
from .observables import (
    entrainment_curve,
    fock_probabilities,
    phase_distribution,
    power_spectrum,
    sync_measure,
    wigner,
)
from .perturbation import (
    gamma_m,
    kummer_phi,
    lambda_m,
    perturbation_terms,
    rho0_diagonal,
    rho1_offdiagonal,
    sync_measure_perturbative,
)
from .semiclassical import (
    build_fp_operator,
    classical_steady_state,
    classical_sync_measure,
    drift_diffusion_fields,
    solve_fp_steady,
)
from .steadystate import periodic_steady, solve_steady, steady_state
from .sweep import Axis, SweepSpec, emit, recipe, run_sweep

__all__ = [
    "KERNEL_BACKEND",
    "Anharmonicity",
    "ModelParams",
    "annihilation",
    "choose_truncation",
    "hamiltonian_lab",
    "hamiltonian_rotating",
    "LabGenerator",
    "build_lab",
    "build_rotating",
    "dissipator",
    "entrainment_curve",
    "fock_probabilities",
    "phase_distribution",
    "power_spectrum",
    "sync_measure",
    "wigner",
    "gamma_m",
    "kummer_phi",
    "lambda_m",
    "perturbation_terms",
    "rho0_diagonal",
    "rho1_offdiagonal",
    "sync_measure_perturbative",
    "build_fp_operator",
    "classical_steady_state",
    "classical_sync_measure",
    "drift_diffusion_fields",
    "solve_fp_steady",
    "periodic_steady",
    "solve_steady",
    "steady_state",
    "Axis",
    "SweepSpec",
    "emit",
    "recipe",
    "run_sweep",
]
