import numpy as np
import pytest
import scipy.sparse as sp

from kerrsync.errors import (
    ConvergenceError,
    DegenerateSteadyStateError,
    PropagatorAccuracyError,
    TruncationError,
)
from kerrsync.hilbert import ModelParams
from kerrsync.liouvillian import LabGenerator, build_rotating, trace_row
from kerrsync.observables import sync_measure
from kerrsync.perturbation import rho0_diagonal
from kerrsync.steadystate import (
    check_density_matrix,
    periodic_steady,
    propagator,
    solve_steady,
    steady_state,
)
from kerrsync.sweep import FIG2, FIG3, FIG4


def dense_null_state(L):
    """Eigenvector of the eigenvalue of smallest modulus, as a density matrix."""
    vals, vecs = np.linalg.eig(L.toarray())
    v = vecs[:, np.argmin(np.abs(vals))]
    dim = int(round(np.sqrt(len(v))))
    rho = v.reshape(dim, dim, order="F")
    return rho / np.trace(rho)


def test_undriven_matches_closed_form():
    for kerr, delta in [(0.0, 0.0), (50.0, 37.0)]:
        p = ModelParams(gamma1=1.0, gamma2=7.0, kerr=kerr, detuning=delta)
        rho = solve_steady(build_rotating(p, 14))
        assert np.max(np.abs(rho - np.diag(rho0_diagonal(p.ratio, 14)))) <= 1e-8


def test_quantum_limit_populations():
    p = ModelParams(gamma1=1e-3, gamma2=1.0)
    rho = steady_state(p)
    assert rho[0, 0].real == pytest.approx(2 / 3, abs=2e-3)
    assert rho[1, 1].real == pytest.approx(1 / 3, abs=2e-3)


def test_fig2_peak_against_dense_null_space():
    p = FIG2.replace(detuning=50.0)
    L = build_rotating(p, 14)
    rho, info = solve_steady(L, return_info=True)
    brute = dense_null_state(L)
    assert sync_measure(rho).magnitude == pytest.approx(sync_measure(brute).magnitude, rel=1e-8)
    assert info["relative_residual"] <= 1e-9


@pytest.mark.parametrize("row", [13, 26, 143])
def test_trace_row_index_irrelevant(row):
    L = build_rotating(FIG4.replace(detuning=30.0), 12)
    ref = solve_steady(L)
    assert np.allclose(solve_steady(L, trace_row_index=row), ref, atol=1e-11)


@pytest.mark.parametrize("row", [1, 7, 144])
def test_trace_row_must_be_population(row):
    with pytest.raises(ValueError):
        solve_steady(build_rotating(FIG4, 12), trace_row_index=row)


@pytest.mark.parametrize("params", [
    FIG2.replace(detuning=d) for d in (0.0, 50.0, 100.0, 150.0)
] + [FIG3.replace(detuning=d, drive=e) for d, e in ((50.0, 5.0), (120.0, 0.5))]
  + [FIG4.replace(detuning=d) for d in (25.0, 75.0, 125.0)])
def test_density_matrix_properties(params):
    rho, info = steady_state(params, return_info=True)
    checks = check_density_matrix(rho)
    assert checks["ok"], checks
    assert info["relative_residual"] <= 1e-9
    assert info["tail"] <= 1e-8
    assert sync_measure(rho).magnitude <= 1.0


@pytest.mark.parametrize("params", [FIG2.replace(detuning=50.0), FIG3.replace(detuning=75.0),
                                    FIG4.replace(detuning=125.0)])
def test_uniqueness_gap(params):
    vals = np.linalg.eigvals(build_rotating(params, 10).toarray())
    second = np.sort(np.abs(vals))[1]
    assert second > 1e-6 * params.gamma1


def test_truncation_escalation():
    p = ModelParams(gamma1=1.0, gamma2=0.05)
    rho, info = steady_state(p, dim=12, return_info=True)
    assert info["attempts"][0] == 12 and len(info["attempts"]) > 1
    assert info["tail"] <= 1e-8
    with pytest.raises(TruncationError):
        steady_state(p, dim=12, max_dim=16)


def test_degenerate_generator():
    # no dissipation at all: every diagonal state is stationary
    dim = 4
    L = sp.csr_matrix((dim * dim, dim * dim), dtype=complex)
    with pytest.raises(DegenerateSteadyStateError):
        solve_steady(L)


def test_residual_guard():
    L = build_rotating(FIG2, 8)
    with pytest.raises(ConvergenceError) as err:
        solve_steady(L, tol=0.0)
    assert "relative_residual" in err.value.diagnostics


def duffing(**kw):
    return FIG2.replace(anharmonicity="duffing", **kw)


def test_periodic_matches_static_solve_without_drive():
    p = duffing(drive=0.0, omega_m=100.0, kerr=2.0)
    gen = LabGenerator(p, 8)
    rho = periodic_steady(gen, gen.period)
    assert np.max(np.abs(rho - solve_steady(gen.static))) <= 1e-7


def test_propagator_trace_preserving_and_worker_independent():
    gen = LabGenerator(duffing(omega_m=100.0, kerr=2.0, detuning=2.0), 6)
    P1, _ = propagator(gen, gen.period, column_blocks=4, workers=1)
    P2, _ = propagator(gen, gen.period, column_blocks=4, workers=3)
    assert np.array_equal(P1, P2)
    tr = trace_row(6).conj()
    assert np.max(np.abs(tr @ P1 - tr)) <= 1e-8
    P3, _ = propagator(gen, gen.period)
    assert np.max(np.abs(P3 - P1)) <= 1e-8


def test_propagator_rejects_few_substeps():
    gen = LabGenerator(duffing(omega_m=100.0, kerr=2.0), 4)
    with pytest.raises(ValueError):
        propagator(gen, gen.period, substeps=50)


def test_periodic_wrong_period_detected():
    gen = LabGenerator(duffing(omega_m=100.0, kerr=2.0, detuning=3.0), 6)

    class Shifted:
        def __call__(self, t):
            return gen(t) + sp.identity(36, format="csr") * 0.5

    with pytest.raises(PropagatorAccuracyError):
        periodic_steady(Shifted(), gen.period)


def test_duffing_close_to_kerr_at_large_omega():
    kerr = FIG2.replace(detuning=150.0)
    lab = duffing(omega_m=1000 * 50.0, detuning=150.0)
    s_kerr = sync_measure(steady_state(kerr)).magnitude
    s_lab = sync_measure(steady_state(lab)).magnitude
    assert s_lab == pytest.approx(s_kerr, rel=0.05)
