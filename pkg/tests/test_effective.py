import numpy as np
import pytest

from fluxgates import DisorderParams, FluxPoint
from fluxgates import circuit as ci
from fluxgates.effective import (TWO_PI, ac_coupling, contour_point, coupling_strength, disorder_sweet_spot_shift,
                                 dressed_drive_elements, effective_params, exact_effective_hamiltonian,
                                 exact_sweet_spot, find_off_position, flux_sensitivity, lamb_shift,
                                 omega_coeff, pauli_coefficients, sensitivity_map, sw_first_order,
                                 sweet_spot_shift)
from fluxgates.errors import InvalidParameters, NoOffPosition
from fluxgates.spectrum import computational_energies, full_eigensystem


def second_order_cross(params, flux, disorder):
    """Independent oracle: X terms of the second-order SW cross term between coupling and disorder."""
    basis = ci.bare_basis(params, flux.phi_c)
    Vm, Vp = ci.coupling_parts(basis)
    Hd = ci.disorder_terms(basis, disorder)
    E = basis.energies
    P = basis.computational_indices()
    Q = np.setdiff1d(np.arange(basis.dim), P)
    inv = 1 / (E[P][:, None] - E[Q][None, :])

    def h2(W):
        A = W[np.ix_(P, Q)]
        return 0.5 * ((A * inv) @ A.T + A @ (A * inv).T)

    c = pauli_coefficients(h2(Vm + Vp + Hd) - h2(Vm + Vp) - h2(Hd))
    return c["XI"], c["IX"]


def test_contour_cancels_single_qubit_terms(params):
    for x in (0.2, 0.27, 0.35):
        fp = contour_point(params, TWO_PI * x)
        assert np.allclose(omega_coeff(params, fp), 0.0, atol=1e-14)
        da, db = sweet_spot_shift(params, TWO_PI * x)
        assert da == pytest.approx(-db)
        assert fp.delta_phi_a == pytest.approx(da)


def test_sweet_spot_shift_vanishes_at_zero_coupler_flux(params):
    assert np.allclose(sweet_spot_shift(params, 0.0), 0.0, atol=1e-10)


def test_omega_coeff_linear_in_detuning(params):
    fp = contour_point(params, 1.7)
    off = FluxPoint(fp.phi_a + 1e-3, fp.phi_b, fp.phi_c)
    Om_a, Om_b = omega_coeff(params, off)
    p01 = ci.qubit_mode(params, "a").x[0, 1]
    assert Om_a == pytest.approx(params.E_L * p01 * 1e-3, rel=1e-9)
    assert Om_b == pytest.approx(0.0, abs=1e-14)


def test_coupling_decomposition_and_first_order_small(params):
    fp = contour_point(params, TWO_PI * 0.27)
    J, Jm, Jp = coupling_strength(params, fp)
    assert J == pytest.approx(Jm - Jp)
    assert Jp > 0
    sw = sw_first_order(params, fp)
    assert sw.max_small_parameter() < 0.15


def test_theta_plus_coupling_scales_with_oscillator_length(params):
    sw1 = sw_first_order(params, TWO_PI * 0.27)
    p2 = params.replace(E_Cplus=2 * params.E_Cplus)
    sw2 = sw_first_order(p2, TWO_PI * 0.27)
    # G ~ (E_C+ / E_Lc)^(1/4)
    assert sw2.G["a"][0, 1] / sw1.G["a"][0, 1] == pytest.approx(2 ** 0.25, rel=1e-12)


def test_cutoff_convergence(params):
    fp = contour_point(params, TWO_PI * 0.3)
    J1 = coupling_strength(params, fp)[0]
    chi1 = lamb_shift(params, fp)
    J2 = coupling_strength(params, fp, cutoffs=(10, 12))[0]
    chi2 = lamb_shift(params, fp, cutoffs=(10, 12))
    assert J2 == pytest.approx(J1, rel=5e-3)
    # the Lamb shift itself moves by a few percent; the renormalized frequency by far less
    wa = ci.qubit_mode(params, "a").energies[1] - ci.qubit_mode(params, "a").energies[0]
    assert wa + chi2[0] == pytest.approx(wa + chi1[0], rel=5e-3)


def test_off_position_effective(params, off_effective):
    assert off_effective.phi_c / TWO_PI == pytest.approx(0.2647, abs=5e-4)
    assert abs(coupling_strength(params, off_effective)[0]) < 1e-6


def test_no_off_position_outside_bracket(params):
    with pytest.raises(NoOffPosition):
        find_off_position(params, bracket=(0.05, 0.2))


def test_find_off_position_mode_checked(params):
    with pytest.raises(InvalidParameters):
        find_off_position(params, "approximate")


def test_effective_vs_exact_spectrum_along_contour(params):
    """Lowest four levels of H_eff within 1.5 % of exact diagonalization on the sweet-spot contour."""
    for x in (0.15, 0.27, 0.43):
        fp, _, Ex = exact_sweet_spot(params, TWO_PI * x)
        E = np.linalg.eigvalsh(effective_params(params, fp.phi_c).hamiltonian())
        assert np.allclose(E[1:] - E[0], Ex[1:] - Ex[0], rtol=0.015, atol=0)


def test_exact_projection_reproduces_dressed_energies(params):
    fp = contour_point(params, TWO_PI * 0.27)
    H4, E = exact_effective_hamiltonian(params, fp)
    assert np.allclose(H4, H4.conj().T)
    assert np.allclose(np.linalg.eigvalsh(H4), E, atol=1e-12)


def test_exact_sweet_spot_cancels_x_terms(params):
    fp, H4, _ = exact_sweet_spot(params, TWO_PI * 0.27)
    c = pauli_coefficients(H4)
    assert abs(c["XI"]) < 1e-8 and abs(c["IX"]) < 1e-8
    # close to the first-order contour
    fp1 = contour_point(params, TWO_PI * 0.27)
    assert fp.delta_phi_a == pytest.approx(fp1.delta_phi_a, rel=0.1)


def test_flux_sensitivity_range(params, off_effective):
    s = flux_sensitivity(params, off_effective.phi_c)
    assert 30 < s < 300


def test_flux_sensitivity_vanishes_without_coupler_junction_asymmetry(params):
    # at phi_c = 0 the coupler potential is even in phi_c, so dJ_-/dPhi_c = 0
    assert flux_sensitivity(params, 0.0) < 1e-3


def test_sensitivity_map_order_and_workers(params):
    ejc, ecm = [2.0, 3.0], [params.E_Cminus]
    r1 = sensitivity_map(params, ejc, ecm, workers=1)
    assert [row[:2] for row in r1] == [(2.0, params.E_Cminus), (3.0, params.E_Cminus)]
    r2 = sensitivity_map(params, ejc, ecm, workers=2)
    assert np.allclose(np.array(r1, float), np.array(r2, float), equal_nan=True)


@pytest.mark.parametrize("disorder", [DisorderParams(dE_L=0.05), DisorderParams(dE_Lprime=0.05)])
def test_disorder_shift_matches_second_order_oracle(params, disorder):
    fp = contour_point(params, TWO_PI * 0.27)
    xi, ix = second_order_cross(params, fp, disorder)
    dOm = disorder_sweet_spot_shift(params, disorder, fp)
    # H_eff carries -Omega X
    assert -dOm[0] == pytest.approx(xi, rel=1e-3)
    assert -dOm[1] == pytest.approx(ix, rel=1e-3)


def test_capacitive_disorder_null(params):
    fp = contour_point(params, TWO_PI * 0.27)
    dis = DisorderParams(dC=0.05)
    assert np.allclose(disorder_sweet_spot_shift(params, dis, fp), 0.0, atol=1e-10)
    assert np.allclose(second_order_cross(params, fp, dis), 0.0, atol=1e-10)


def test_disorder_x_shift_in_exact_model(params):
    """Inductive disorder at fixed flux produces the predicted exact X coefficients."""
    fp = exact_sweet_spot(params, TWO_PI * 0.27)[0]
    dis = DisorderParams(dE_L=0.05)
    c = pauli_coefficients(exact_effective_hamiltonian(params, fp, dis)[0])
    dOm = disorder_sweet_spot_shift(params, dis, fp)
    assert c["XI"] == pytest.approx(-dOm[0], rel=0.25)
    assert c["IX"] == pytest.approx(-dOm[1], rel=0.25)


def test_drive_element_methods(params, off_effective):
    M = dressed_drive_elements(params, off_effective, "c")
    assert np.allclose(M, M.T)
    J_semi = ac_coupling(params, off_effective, "semi")
    assert abs(J_semi) * 1e3 == pytest.approx(14.3, rel=0.02)
    with pytest.raises(InvalidParameters):
        dressed_drive_elements(params, off_effective, "d")
    with pytest.raises(InvalidParameters):
        dressed_drive_elements(params, off_effective, "c", method="guess")
