"""Semiclassical Fokker-Planck model of the driven oscillator.

The phase-space density ``W(x, y)`` with ``alpha = x + iy`` obeys

    dW/dt = -div(v W) + (1/2) lap(D W)

with drift ``v = -(Gamma/2 + i Omega) alpha - E`` and the amplitude
dependent rates

    Gamma = -gamma1 + 2 gamma2 (|alpha|^2 - 1)
    Omega = -Delta + 2K (|alpha|^2 - 1)
    D     = gamma1/4 + (gamma2/2)(2|alpha|^2 - 1)

The steady state is computed on a Cartesian grid with a zero-density
boundary, using conservative central differences.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    GridRefinementError,
    UnboundedAmplitudeError,
    VacuumStateError,
)
from .hilbert import ModelParams
from .observables import SyncMeasure

__all__ = [
    "SemiclassicalFields",
    "GridSpec",
    "FokkerPlanckOperator",
    "FPGrid",
    "drift_diffusion_fields",
    "default_grid",
    "build_fp_operator",
    "solve_fp_steady",
    "classical_sync_measure",
    "radial_marginal",
    "classical_steady_state",
]

AMPLITUDE_VARIANCE = 3.0 / 8.0
PECLET_LIMIT = 2.0
# nodes whose undriven weight is below e^-30 of the peak are not audited
PECLET_WEIGHT_CUTOFF = 30.0


@dataclasses.dataclass(frozen=True)
class SemiclassicalFields:
    """Drift and diffusion fields plus the Gaussian limit-cycle statistics."""

    params: ModelParams

    def damping(self, amplitude):
        p = self.params
        return -p.gamma1 + 2 * p.gamma2 * (np.asarray(amplitude) ** 2 - 1)

    def frequency(self, amplitude):
        p = self.params
        return -p.detuning + 2 * p.kerr * (np.asarray(amplitude) ** 2 - 1)

    def diffusion(self, amplitude):
        p = self.params
        return p.gamma1 / 4 + p.gamma2 / 2 * (2 * np.asarray(amplitude) ** 2 - 1)

    @property
    def amplitude_mean(self) -> float:
        """Limit-cycle radius ``A0``, the zero of the damping rate."""
        return math.sqrt(1 + self.params.gamma1 / (2 * self.params.gamma2))

    @property
    def amplitude_var(self) -> float:
        return AMPLITUDE_VARIANCE

    @property
    def diffusion_at_A0(self) -> float:
        return (3 * self.params.gamma1 + 2 * self.params.gamma2) / 4

    @property
    def sigma_omega(self) -> float:
        """Frequency spread ``|dOmega/dA| sigma_A = 4 K A0 sigma_A`` (scale only)."""
        return 4 * self.params.kerr * self.amplitude_mean * math.sqrt(AMPLITUDE_VARIANCE)

    def radial_potential(self, amplitude):
        """``-log`` of the undriven radial density with frozen diffusion, up to a constant."""
        p = self.params
        a2 = np.asarray(amplitude) ** 2
        return (p.gamma2 * (a2 - 1) ** 2 - p.gamma1 * a2) / (2 * self.diffusion_at_A0)


def drift_diffusion_fields(params: ModelParams) -> SemiclassicalFields:
    if params.gamma2 == 0:
        raise UnboundedAmplitudeError("gamma2 = 0: the drift has no stable limit cycle")
    return SemiclassicalFields(params)


@dataclasses.dataclass(frozen=True)
class GridSpec:
    """Square grid ``[-half_width, half_width]^2`` with spacing ``h``.

    ``h`` is rounded down so that the origin is a node.
    """

    half_width: float
    h: float

    @property
    def points(self) -> int:
        return 2 * int(math.ceil(self.half_width / self.h - 1e-9)) + 1

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / (self.points - 1)

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points)


def _peclet_region(fields: SemiclassicalFields, amplitude):
    v = fields.radial_potential(amplitude)
    a_grid = np.linspace(0, max(np.max(amplitude), fields.amplitude_mean), 2001)
    vmin = np.min(fields.radial_potential(a_grid))
    return v - vmin <= PECLET_WEIGHT_CUTOFF


def _max_radial_drift(fields: SemiclassicalFields, half_width):
    a = np.linspace(0, half_width * math.sqrt(2), 4001)
    mask = _peclet_region(fields, a)
    drift = np.abs(fields.damping(a) / 2) * a
    return float(np.max(drift[mask])) if mask.any() else 0.0


def default_grid(params: ModelParams, *, h: float | None = None) -> GridSpec:
    """Box of half-width ``A0 + 6 max(sigma_A, 1)``; ``h`` small enough for the Peclet audit."""
    fields = drift_diffusion_fields(params)
    sigma = math.sqrt(AMPLITUDE_VARIANCE)
    half = fields.amplitude_mean + 6 * max(sigma, 1.0)
    if h is None:
        h = min(0.1, sigma / 4)
        drift = _max_radial_drift(fields, half)
        if drift > 0:
            h = min(h, 0.95 * PECLET_LIMIT * fields.diffusion_at_A0 / drift)
    return GridSpec(half_width=half, h=h)


@dataclasses.dataclass
class FokkerPlanckOperator:
    """Discretized generator acting on the interior nodes of the grid."""

    matrix: sp.csr_matrix
    axis: np.ndarray
    h: float
    diffusion_mode: str
    params: ModelParams
    max_peclet: float

    @property
    def points(self) -> int:
        return self.axis.size


def _resolve_diffusion_mode(mode, fields, amp):
    if mode not in ("auto", "amplitude", "frozen"):
        raise ValueError(f"unknown diffusion mode {mode!r}")
    if mode == "auto":
        return "amplitude" if np.min(fields.diffusion(amp)) > 0 else "frozen"
    if mode == "amplitude" and np.min(fields.diffusion(amp)) <= 0:
        raise GridRefinementError(
            "amplitude-dependent diffusion is not positive on the grid; use diffusion='frozen'")
    return mode


def build_fp_operator(params: ModelParams, grid: GridSpec | None = None, *,
                      diffusion: str = "auto", check_peclet: bool = True) -> FokkerPlanckOperator:
    """Sparse central-difference discretization of the Fokker-Planck generator.

    Drift enters in flux form with face-centred velocities, diffusion as the
    five-point Laplacian of ``D W``. Nodes on the box edge hold ``W = 0``
    and are not unknowns.

    Parameters
    ----------
    params : ModelParams
    grid : GridSpec, optional
        Defaults to :func:`default_grid`.
    diffusion : {'auto', 'amplitude', 'frozen'}
        ``amplitude`` uses ``D(|alpha|)`` node by node; ``frozen`` uses
        ``D(A0)`` everywhere. ``auto`` picks ``amplitude`` when it is
        positive on the whole grid.
    check_peclet : bool
        Audit the cell Peclet number of the radial drift where the density
        is not negligible.

    Raises
    ------
    GridRefinementError
        If the cell Peclet number exceeds 2 inside the audited region.
    """
    fields = drift_diffusion_fields(params)
    grid = default_grid(params) if grid is None else grid
    axis = grid.axis
    h = grid.spacing
    m = axis.size
    X, Y = np.meshgrid(axis, axis)  # [iy, ix]
    amp = np.hypot(X, Y)

    mode = _resolve_diffusion_mode(diffusion, fields, amp)
    d0 = fields.diffusion_at_A0

    radial = np.abs(fields.damping(amp) / 2) * amp
    audited = _peclet_region(fields, amp)
    max_pe = float(np.max(radial[audited]) * h / d0) if audited.any() else 0.0
    if check_peclet and max_pe > PECLET_LIMIT:
        need = PECLET_LIMIT * d0 / np.max(radial[audited])
        raise GridRefinementError(
            f"cell Peclet number {max_pe:.2f} > {PECLET_LIMIT}; refine to h <= {need:.4f}")

    def velocity(x, y):
        alpha = x + 1j * y
        a = np.abs(alpha)
        mu = -(fields.damping(a) / 2 + 1j * fields.frequency(a)) * alpha - params.drive
        return mu.real, mu.imag

    node = np.arange(m * m).reshape(m, m)  # node[iy, ix]
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    # x faces between (iy, ix) and (iy, ix + 1)
    vx, _ = velocity(X[:, :-1] + h / 2, Y[:, :-1])
    c = vx / (2 * h)
    left, right = node[:, :-1], node[:, 1:]
    add(left, left, -c)
    add(left, right, -c)
    add(right, left, c)
    add(right, right, c)
    # y faces between (iy, ix) and (iy + 1, ix)
    _, vy = velocity(X[:-1, :], Y[:-1, :] + h / 2)
    c = vy / (2 * h)
    low, high = node[:-1, :], node[1:, :]
    add(low, low, -c)
    add(low, high, -c)
    add(high, low, c)
    add(high, high, c)

    dnode = fields.diffusion(amp) if mode == "amplitude" else np.full_like(amp, d0)
    k = 0.5 / h**2
    add(node, node, -4 * k * dnode)
    add(node[:, 1:], node[:, :-1], k * dnode[:, :-1])
    add(node[:, :-1], node[:, 1:], k * dnode[:, 1:])
    add(node[1:, :], node[:-1, :], k * dnode[:-1, :])
    add(node[:-1, :], node[1:, :], k * dnode[1:, :])

    full = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(m * m, m * m)).tocsr()
    interior = node[1:-1, 1:-1].ravel()
    matrix = full[interior][:, interior].tocsr()
    return FokkerPlanckOperator(matrix=matrix, axis=axis, h=h, diffusion_mode=mode,
                                params=params, max_peclet=max_pe)


@dataclasses.dataclass(frozen=True)
class FPGrid:
    """Steady-state density on the full grid (edge nodes are zero)."""

    axis: np.ndarray
    h: float
    values: np.ndarray
    residual: float
    boundary_mass: float
    diffusion_mode: str

    @property
    def x(self):
        return self.axis

    @property
    def y(self):
        return self.axis

    @property
    def norm(self) -> float:
        return float(self.values.sum() * self.h**2)

    def clipped(self) -> np.ndarray:
        """Density with negative undershoots set to zero, for display."""
        return np.clip(self.values, 0.0, None)


def solve_fp_steady(op: FokkerPlanckOperator, *, normalization_row: int = 0,
                    tol: float = 1e-8, refine: int = 2) -> FPGrid:
    """Null vector of the discrete generator with ``sum W h^2 = 1``.

    The sparse LU solution is polished by ``refine`` steps of iterative
    refinement.

    Raises
    ------
    DegenerateSteadyStateError
        If the augmented system is singular.
    ConvergenceError
        If the relative residual exceeds ``tol``.
    """
    A = op.matrix
    n = A.shape[0]
    aug = A.tolil(copy=True)
    aug[normalization_row, :] = np.full((1, n), op.h**2)
    b = np.zeros(n)
    b[normalization_row] = 1.0
    aug = aug.tocsc()
    try:
        lu = spla.splu(aug)
    except RuntimeError as exc:
        raise DegenerateSteadyStateError(f"Fokker-Planck system is singular: {exc}") from exc
    w = lu.solve(b)
    for _ in range(refine):
        w += lu.solve(b - aug @ w)

    # normwise backward error against |A||w|. The replaced row is left out: its
    # defect is the probability flux through the truncated boundary, which is
    # reported separately through boundary_mass.
    r = np.abs(A @ w)
    r[normalization_row] = 0.0
    scale = np.max(abs(A) @ np.abs(w))
    residual = float(np.max(r) / scale) if scale > 0 else 0.0
    m = op.points
    values = np.zeros((m, m))
    values[1:-1, 1:-1] = w.reshape(m - 2, m - 2)
    ring = np.zeros((m, m), dtype=bool)
    ring[1:-1, 1:-1] = True
    ring[2:-2, 2:-2] = False
    boundary_mass = float(np.abs(values[ring]).sum() * op.h**2)
    if residual > tol:
        raise ConvergenceError(f"Fokker-Planck residual {residual:.2e} exceeds {tol:g}",
                               {"residual": residual})
    return FPGrid(axis=op.axis, h=op.h, values=values, residual=residual,
                  boundary_mass=boundary_mass, diffusion_mode=op.diffusion_mode)


def classical_sync_measure(fp: FPGrid) -> SyncMeasure:
    """``S_c = int alpha W / sqrt(int |alpha|^2 W)`` by midpoint quadrature."""
    X, Y = np.meshgrid(fp.axis, fp.axis)
    w = fp.values * fp.h**2
    first = complex(np.sum((X + 1j * Y) * w))
    second = float(np.sum((X * X + Y * Y) * w))
    if second <= 1e-14:
        raise VacuumStateError("second moment of the classical density vanishes")
    s = first / math.sqrt(second)
    return SyncMeasure(magnitude=abs(s), phase=math.atan2(s.imag, s.real))


def radial_marginal(fp: FPGrid, edges) -> np.ndarray:
    """Probability density of ``|alpha|`` on the given bin edges."""
    X, Y = np.meshgrid(fp.axis, fp.axis)
    hist, _ = np.histogram(np.hypot(X, Y).ravel(), bins=edges,
                           weights=(fp.values * fp.h**2).ravel())
    return hist / np.diff(edges)


def classical_steady_state(params: ModelParams, grid: GridSpec | None = None,
                           *, diffusion: str = "auto") -> FPGrid:
    """Build and solve in one call."""
    return solve_fp_steady(build_fp_operator(params, grid, diffusion=diffusion))
