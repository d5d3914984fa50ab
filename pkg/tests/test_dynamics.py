import numpy as np
import pytest
from scipy.stats import unitary_group

from fluxgates.dynamics import (DecoherenceRates, DrivenSystem, bloch_trajectory, closed_fidelity,
                                computational_channel, coupler_excited_set, drive_strength_per_flux,
                                identity_fidelity, identity_scan, jump_operators, open_fidelity,
                                process_tomography, propagate_lindblad, propagate_unitary, single_qubit,
                                unitary_process_matrix, unwanted_transition)
from fluxgates.errors import InvalidParameters, NearResonantWarning, NotAChannel, TruncationWarning
from fluxgates.pulses import SQRT_ISWAP, TWO_PI, PulseSpec, bessel_zero


def toy_system(rng, n_extra=2, scale=0.05):
    """Two uncoupled qubits plus a few higher levels; random Hermitian drives."""
    E = np.array([0.0, 0.035, 0.058, 0.093] + list(1.0 + 0.3 * np.arange(n_extra)))
    N = E.size
    drives = {}
    for k in "abc":
        A = rng.normal(size=(N, N)) * scale
        drives[k] = 0.5 * (A + A.T)
    weight = np.zeros(N)
    weight[4:] = 1.0
    return DrivenSystem(E, drives, np.arange(4), {0: (0, 0, 0, 0), 1: (0, 1, 0, 0), 2: (1, 0, 0, 0),
                                                  3: (1, 1, 0, 0)}, None, weight)


@pytest.fixture
def toy(rng):
    return toy_system(rng)


def test_closed_fidelity_trivial_cases(rng):
    U = unitary_group.rvs(4, random_state=1)
    assert closed_fidelity(U, U) == pytest.approx(1.0)
    assert closed_fidelity(np.exp(0.7j) * U, U) == pytest.approx(1.0)
    assert closed_fidelity(np.zeros((4, 4)), U) == 0.0
    # an orthogonal unitary: only the Tr(U^dag U) term survives
    assert closed_fidelity(np.diag([1, -1, 1, -1]), np.eye(4)) == pytest.approx(4 / 20)
    with pytest.raises(InvalidParameters):
        closed_fidelity(np.eye(3), np.eye(4))


def test_closed_fidelity_penalizes_leakage():
    U = np.diag([1, 1, 1, np.sqrt(0.9)])
    assert closed_fidelity(U, np.eye(4)) < closed_fidelity(np.eye(4), np.eye(4))


def test_free_evolution(toy):
    res = propagate_unitary(toy, [], 7.0)
    assert np.allclose(res.U, np.diag(np.exp(-1j * TWO_PI * toy.energies * 7.0)), atol=1e-12)


def test_interaction_and_lab_frames_agree(toy):
    p = PulseSpec("c", 0.0, 0.3, TWO_PI * 0.05, 1, t_start=2.0)
    ui = propagate_unitary(toy, [p], 30.0).U
    ul = propagate_unitary(toy, [p], 30.0, frame="lab").U
    assert np.allclose(ui, ul, atol=1e-8)
    assert propagate_unitary(toy, [p], 30.0).unitarity_defect < 1e-9


def test_sampled_populations(toy):
    p = PulseSpec("c", 0.0, 0.3, TWO_PI * 0.05, 1, t_start=2.0)
    res = propagate_unitary(toy, [p], 30.0, initial=[0], sample_times=[0.0, 10.0, 30.0])
    assert res.populations.shape == (3, toy.n_states, 1)
    assert np.allclose(res.populations.sum(axis=1), 1.0, atol=1e-9)
    assert res.populations[0, 0, 0] == pytest.approx(1.0)


def test_truncation_warning(rng):
    sys_ = toy_system(rng, n_extra=2, scale=0.0)
    drives = dict(sys_.drives)
    M = np.zeros((6, 6))
    M[0, 5] = M[5, 0] = 1.0
    drives["c"] = M
    sys_ = DrivenSystem(sys_.energies, drives, sys_.comp, sys_.labels)
    p = PulseSpec("c", 0.0, 1.0, TWO_PI * 1.3, 3)
    with pytest.warns(TruncationWarning):
        propagate_unitary(sys_, [p], p.duration)


def test_truncate_checks(toy):
    assert toy.truncate(5).n_states == 5
    with pytest.raises(InvalidParameters):
        toy.truncate(3)


def test_rates_validation_and_presets():
    assert DecoherenceRates.named("none").is_zero
    c = DecoherenceRates.named("conservative")
    assert c.gamma1_a > DecoherenceRates.optimistic().gamma1_a
    with pytest.raises(InvalidParameters):
        DecoherenceRates(gamma1_a=-1.0)
    with pytest.raises(InvalidParameters):
        DecoherenceRates.named("pessimistic")
    assert len(jump_operators(c)) == 4


def test_lindblad_zero_rates_is_unitary(toy, rng):
    p = PulseSpec("c", 0.0, 0.3, TWO_PI * 0.05, 1, t_start=1.0)
    psi = rng.normal(size=6) + 1j * rng.normal(size=6)
    psi /= np.linalg.norm(psi)
    rho = np.outer(psi, psi.conj())
    U = propagate_unitary(toy, [p], 25.0).U
    out = propagate_lindblad(toy, [p], DecoherenceRates(), rho, 25.0)
    assert np.allclose(out, U @ rho @ U.conj().T, atol=1e-8)


def test_dephasing_decay(toy):
    g = 50.0  # 1/us
    rho = np.zeros((6, 6), complex)
    rho[0, 0] = rho[1, 1] = rho[0, 1] = rho[1, 0] = 0.5   # (|00> + |01>)/sqrt2, qubit b coherence
    t = 20.0
    out = propagate_lindblad(toy, [], DecoherenceRates(gammaphi_b=g), rho, t)
    free = np.exp(-1j * TWO_PI * (toy.energies[0] - toy.energies[1]) * t)
    assert out[0, 1] == pytest.approx(0.5 * free * np.exp(-2 * g * 1e-3 * t), abs=1e-9)
    assert out[0, 0].real == pytest.approx(0.5, abs=1e-12)


def test_relaxation_decay(toy):
    g = 40.0
    rho = np.zeros((6, 6), complex)
    rho[2, 2] = 1.0   # |10>
    t = 15.0
    out = propagate_lindblad(toy, [], DecoherenceRates(gamma1_a=g), rho, t)
    assert out[2, 2].real == pytest.approx(np.exp(-g * 1e-3 * t), abs=1e-9)
    assert out[0, 0].real == pytest.approx(1 - np.exp(-g * 1e-3 * t), abs=1e-9)


def test_lindblad_trace_and_positivity(toy, rng):
    p = PulseSpec("c", 0.0, 0.3, TWO_PI * 0.05, 2, t_start=1.0)
    A = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    rho = A @ A.conj().T
    rho /= np.trace(rho)
    out = propagate_lindblad(toy, [p], DecoherenceRates(30, 20, 10, 40), rho, 45.0)
    assert np.trace(out).real == pytest.approx(1.0, abs=1e-9)
    assert np.allclose(out, out.conj().T, atol=1e-10)
    assert np.linalg.eigvalsh(out).min() > -1e-9


def test_tomography_identity_and_unitary(rng):
    U = unitary_group.rvs(4, random_state=3)
    chi = process_tomography(lambda r: U @ r @ U.conj().T, 4)
    target = unitary_process_matrix(U)
    assert np.allclose(chi.chi, target.chi, atol=1e-10)
    assert chi.is_physical()
    assert open_fidelity(chi, target) == pytest.approx(1.0, abs=1e-10)
    ident = process_tomography(lambda r: r, 4)
    assert ident.chi[0, 0].real == pytest.approx(1.0)


def test_tomography_depolarizing():
    d, p = 4, 0.1

    def channel(r):
        return (1 - p) * r + p * np.trace(r) * np.eye(d) / d
    chi = process_tomography(channel, d)
    chi_00 = 1 - p + p / d ** 2
    expected = (d * chi_00 + 1) / (d + 1)
    assert open_fidelity(chi, unitary_process_matrix(np.eye(d))) == pytest.approx(expected, abs=1e-12)


def test_tomography_single_qubit_dimension():
    chi = process_tomography(lambda r: r, 2)
    assert chi.chi.shape == (4, 4)
    with pytest.raises(InvalidParameters):
        process_tomography(lambda r: r, 3)


def test_not_a_channel():
    with pytest.raises(NotAChannel):
        process_tomography(lambda r: r @ r, 4)


def test_open_matches_closed_without_decoherence(toy):
    p = PulseSpec("c", 0.0, 0.2, TWO_PI * 0.05, 1, t_start=1.0)
    U = propagate_unitary(toy, [p], 22.0, initial=toy.comp).U[toy.comp]
    ch = computational_channel(toy, [p], DecoherenceRates(), 22.0)
    chi = process_tomography(ch, 4)
    target = unitary_process_matrix(SQRT_ISWAP)
    assert open_fidelity(chi, target) == pytest.approx(closed_fidelity(U, SQRT_ISWAP), abs=1e-6)


def test_unwanted_transition_zero_without_drive(toy):
    p = PulseSpec("c", 0.0, 0.0, TWO_PI * 0.05, 2)
    assert unwanted_transition(toy, "00", "11", p) == 0.0
    with pytest.raises(InvalidParameters):
        unwanted_transition(toy, "00", "00", p)


def test_unwanted_transition_matches_numerics():
    """Weak drive on a three-level toy: second-order estimate vs integration."""
    E = np.array([0.0, 0.035, 0.058, 0.093, 1.2])
    h = np.zeros((5, 5))
    # 00 -> 11 only through the upper level
    h[0, 4] = h[4, 0] = 0.4
    h[3, 4] = h[4, 3] = 0.3
    weight = np.array([0, 0, 0, 0, 1.0])
    sys_ = DrivenSystem(E, {"a": 0 * h, "b": 0 * h, "c": h}, np.arange(4), {}, None, weight)
    p = PulseSpec("c", 0.0, 0.01, TWO_PI * 0.0234, 2)
    U = propagate_unitary(sys_, [p], p.duration, rtol=1e-12, atol=1e-13).U
    numeric = abs(U[3, 0]) ** 2
    est = unwanted_transition(sys_, "00", "11", p)
    assert est == pytest.approx(numeric, rel=0.05)
    assert unwanted_transition(sys_, "00", "11", p, virtual_set=[]) == 0.0
    assert coupler_excited_set(sys_) == [4]


def test_unwanted_transition_near_resonance_warns(toy):
    # drive within 1e-4 of the 00 -> 01 transition
    p = PulseSpec("c", 0.0, 0.01, TWO_PI * 0.035 * (1 + 1e-4), 2)
    with pytest.warns(NearResonantWarning):
        unwanted_transition(toy, "00", "01", p)


def test_single_qubit_identity_design_point(params):
    sq = single_qubit(params, "b")
    assert sq.omega_q / TWO_PI == pytest.approx(0.037, rel=0.02)
    wd = 5.3 * sq.omega_q
    dphi = bessel_zero(1) * wd / 2 / drive_strength_per_flux(sq)
    assert identity_fidelity(sq, wd, dphi) > 0.9999
    # no drive: free evolution over one period is not the identity
    assert identity_fidelity(sq, wd, 0.0) < 0.99


def test_identity_scan_shape_and_workers(params):
    rows = identity_scan(params, [3.0, 5.0], [0.0, 0.3], workers=1)
    assert [r[:2] for r in rows] == [(3.0, 0.0), (3.0, 0.3 / TWO_PI), (5.0, 0.0), (5.0, 0.3 / TWO_PI)]
    rows2 = identity_scan(params, [3.0, 5.0], [0.0, 0.3], workers=2)
    assert rows == rows2
    with pytest.raises(InvalidParameters):
        identity_scan(params, [], [0.1])


def test_bloch_trajectory(params):
    sq = single_qubit(params, "b")
    wd = 3.3 * sq.omega_q
    dphi = bessel_zero(1) * wd / 2 / drive_strength_per_flux(sq)
    rows = np.array(bloch_trajectory(params, wd, dphi, psi0=(1, 1), n_samples=51))
    assert rows.shape == (51, 4)
    r = np.linalg.norm(rows[:, 1:], axis=1)
    assert np.all(r <= 1 + 1e-9)
    # identity: final state equals initial state |+>
    assert rows[-1, 1:] == pytest.approx(rows[0, 1:], abs=5e-2)
    assert rows[0, 1:] == pytest.approx([1, 0, 0], abs=1e-12)


@pytest.mark.slow
def test_full_model_frames_agree(driven):
    """Lab-frame and interaction-frame integration of an identity pulse in the full model."""
    c = driven.comp
    p = PulseSpec("a", 0.0, 0.44, TWO_PI / 9.6588 * 2, 2, t_start=1.0)
    ui = propagate_unitary(driven, [p], 12.0, initial=c).U
    ul = propagate_unitary(driven, [p], 12.0, initial=c, frame="lab").U
    assert np.max(np.abs(ui - ul)) < 1e-6
    # the block leaks ~1e-6, so compare with its self-overlap rather than 1
    assert closed_fidelity(ul[c], ui[c]) == pytest.approx(closed_fidelity(ui[c], ui[c]), abs=1e-9)
