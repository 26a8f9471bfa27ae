import math

import numpy as np
import pytest

from kerrsync.errors import (
    ConfigurationError,
    InvalidDimensionError,
    UnboundedAmplitudeError,
    WrongFrameError,
)
from kerrsync.hilbert import (
    Anharmonicity,
    ModelParams,
    annihilation,
    choose_truncation,
    duffing_term,
    hamiltonian_lab,
    hamiltonian_rotating,
    number,
)
from kerrsync.steadystate import steady_state


def duffing(**kw):
    base = dict(gamma1=1.0, gamma2=7.0, anharmonicity=Anharmonicity.DUFFING, omega_m=500.0)
    base.update(kw)
    return ModelParams(**base)


def test_annihilation_small():
    assert np.array_equal(annihilation(2).toarray(), [[0, 1], [0, 0]])
    assert annihilation(3)[1, 2] == pytest.approx(math.sqrt(2))


def test_number_operator_from_ladder():
    a = annihilation(10)
    n = (a.getH() @ a).toarray()
    assert np.allclose(n, np.diag(np.arange(10)))


@pytest.mark.parametrize("dim", [0, 1, -3, 2.5])
def test_bad_dimension(dim):
    with pytest.raises(InvalidDimensionError):
        annihilation(dim)


def test_rotating_hamiltonian_examples():
    h = hamiltonian_rotating(ModelParams(kerr=1.0), 3).toarray()
    assert np.allclose(h, np.diag([0, 1, 4]))
    h = hamiltonian_rotating(ModelParams(drive=2.25), 2).toarray()
    assert np.allclose(h, [[0, 2.25j], [-2.25j, 0]])
    # Delta = K puts |0> and |1> on resonance in the drive frame
    h = hamiltonian_rotating(ModelParams(kerr=3.0, detuning=3.0), 4).toarray()
    assert h[1, 1] - h[0, 0] == pytest.approx(0.0)


def test_rotating_hamiltonian_rejects_duffing():
    with pytest.raises(WrongFrameError):
        hamiltonian_rotating(duffing(), 4)


@pytest.mark.parametrize("dim", [4, 9, 17])
def test_hamiltonians_hermitian(dim):
    p = ModelParams(gamma2=2.0, kerr=3.0, detuning=-1.2, drive=0.7)
    h = hamiltonian_rotating(p, dim).toarray()
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))
    d = duffing(kerr=0.5, drive=0.3, detuning=0.1)
    for t in (0.0, 0.37, 1.9):
        h = hamiltonian_lab(d, dim, t).toarray()
        assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))


def test_kerr_commutes_with_number():
    p = ModelParams(kerr=2.0, detuning=0.3)
    h = hamiltonian_rotating(p, 12)
    n = number(12)
    assert (h @ n - n @ h).count_nonzero() == 0


def test_lab_hamiltonian_harmonic_and_periodic():
    p = duffing(kerr=0.0, omega_m=3.0)
    assert np.allclose(hamiltonian_lab(p, 5, 0.0).toarray(), np.diag(3.0 * np.arange(5)))
    p = duffing(kerr=0.2, omega_m=3.0, drive=1.1, detuning=0.4)
    period = 2 * math.pi / p.drive_frequency
    h0 = hamiltonian_lab(p, 6, 0.0).toarray()
    assert np.allclose(h0, hamiltonian_lab(p, 6, period).toarray(), atol=1e-12)
    drive_part = h0 - hamiltonian_lab(p.replace(drive=0.0), 6, 0.0).toarray()
    a = annihilation(6).toarray()
    assert np.allclose(drive_part, 1j * 1.1 * (a - a.conj().T))


def test_lab_hamiltonian_requires_omega_m():
    with pytest.raises(ConfigurationError):
        ModelParams(anharmonicity="duffing")
    with pytest.raises(WrongFrameError):
        hamiltonian_lab(ModelParams(), 4, 0.0)


@pytest.mark.parametrize("dim", [3, 5, 12])
def test_duffing_vacuum_expectation(dim):
    # <0|(a + a^dag)^4|0> = 3, so the quartic term shifts the vacuum by K/2
    assert duffing_term(6.0 * 0.7, dim)[0, 0].real == pytest.approx(0.7 * 3)
    assert duffing_term(2.0, dim)[0, 0].real == pytest.approx(1.0)


def test_duffing_number_conserving_part_matches_kerr_levels():
    kerr, omega = 0.01, 10.0
    h = hamiltonian_lab(duffing(kerr=kerr, omega_m=omega), 10, 0.0).toarray().real
    levels = np.diag(h)
    n = np.arange(10)
    # diagonal of (K/6)(a+a^dag)^4 is K(n^2 + n + 1/2) away from the crop edge
    assert np.allclose(levels[:6], omega * n[:6] + kerr * (n[:6] ** 2 + n[:6] + 0.5))
    gaps = np.diff(levels[:6])
    assert np.allclose(gaps, omega + 2 * kerr * n[:5] + 2 * kerr)


def test_truncation_consistency():
    small = hamiltonian_rotating(ModelParams(kerr=1.3, drive=0.4, detuning=2.0), 6).toarray()
    big = hamiltonian_rotating(ModelParams(kerr=1.3, drive=0.4, detuning=2.0), 11).toarray()
    assert np.array_equal(small, big[:6, :6])
    assert np.allclose(duffing_term(1.0, 6).toarray(), duffing_term(1.0, 11).toarray()[:6, :6])


def test_choose_truncation():
    assert choose_truncation(ModelParams(gamma2=7.0, drive=2.25)) >= 12
    p = ModelParams(gamma1=1.0, gamma2=1 / 40)
    r = p.ratio
    assert choose_truncation(p) >= r / 2 + 6 * math.sqrt(3 * r / 4)
    with pytest.raises(UnboundedAmplitudeError):
        choose_truncation(ModelParams(gamma2=0.0))


def test_choose_truncation_covers_fig4_regime():
    p = ModelParams(gamma2=0.8, drive=4.5, kerr=25.0, detuning=25.0)
    rho, info = steady_state(p, return_info=True)
    assert info["tail"] <= 1e-8


def test_params_validation():
    with pytest.raises(ConfigurationError):
        ModelParams(gamma1=-1.0)
    with pytest.raises(ConfigurationError):
        ModelParams(gamma1=0.0, gamma2=0.0)
    with pytest.raises(ConfigurationError):
        ModelParams(drive=float("nan"))
    assert ModelParams(gamma1=2.0, gamma2=4.0).ratio == 0.5
