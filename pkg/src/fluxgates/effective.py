"""Effective two-qubit model from a Schrieffer-Wolff (SW) expansion.

The qubits couple dispersively to the coupler modes theta_- (tunable) and
theta_+ (harmonic). To second order the low-energy Hamiltonian is

    H_eff = -sum_mu (w'_mu / 2) Z_mu + J X_a X_b - sum_mu Omega_mu X_mu

with J = J_- - J_+ and w'_mu = w_mu + chi_mu. This module evaluates these
coefficients, locates the sweet-spot contour (Omega_a = Omega_b = 0) and the
"off position" on it where J vanishes, and computes computational-subspace
matrix elements of the flux-drive operators either exactly or from the
second-order generator.
"""
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .circuit import (bare_basis, coupler_minus_mode, coupler_plus_mode, coupling_parts,
                      assemble_static_hamiltonian, drive_operators, qubit_mode,
                      theta_minus_expectation, DEFAULT_DIMS, DEFAULT_ENERGY_CUTOFF)
from .errors import InvalidParameters, NoOffPosition, NonDispersive, NumericalError
from .params import FluxPoint
from .parallel import parallel_map
from .spectrum import diagonalize, full_eigensystem

TWO_PI = 2 * np.pi
QUBIT_CUTOFF = 6      # qubit levels j' = 0..5 in the virtual sums
COUPLER_CUTOFF = 7    # coupler levels n = 0..6
DISPERSIVE_GUARD = 0.05  # h*GHz

PAULI = {"I": np.eye(2), "X": np.array([[0.0, 1.0], [1.0, 0.0]]),
         "Y": np.array([[0.0, -1j], [1j, 0.0]]), "Z": np.diag([1.0, -1.0])}


def _phi_c(flux):
    return float(flux.phi_c if isinstance(flux, FluxPoint) else flux)


@dataclass(frozen=True, eq=False)
class SWCoefficients:
    """First-order SW couplings, small parameters and denominators.

    Arrays are indexed [j, j', n] (theta_-) or [j, j'] (theta_+) with j in
    {0, 1}. Entries excluded by the primed-sum rule (n = 0 with j' < 2) are
    NaN in ``eps1`` and ``delta``.
    """
    g: dict
    G: dict
    eps1: dict
    eta1: dict
    delta: dict
    Delta: dict
    ell_osc: float
    qubit_energies: dict
    qubit_phi: dict
    coupler_energies: np.ndarray
    theta_0n: np.ndarray
    omega_plus: float

    def max_small_parameter(self):
        vals = [np.nanmax(np.abs(self.eps1[m])) for m in "ab"]
        vals += [np.nanmax(np.abs(self.eta1[m])) for m in "ab"]
        return float(max(vals))


def sw_first_order(params, flux, cutoffs=(QUBIT_CUTOFF, COUPLER_CUTOFF), guard=DISPERSIVE_GUARD):
    """First-order SW coefficients at coupler flux ``flux`` (FluxPoint or phi_c).

    g^mu_{jj',0n} = (-1)^mu (E_L/2) <0|theta_-|n><j|phi_mu|j'>
    G^mu_{jj'}    = (E_L/2) (2 E_C+/E_Lc)^(1/4) <j|phi_mu|j'>
    eps1 = g / (E_jj' - E_n0),  eta1 = G / (E_jj' - w_+)
    """
    nq, nc = cutoffs
    if nq < 2 or nc < 2:
        raise InvalidParameters("cutoffs must keep at least two levels per mode")
    phi_c = _phi_c(flux)
    cm = coupler_minus_mode(params, phi_c, max(nc, DEFAULT_DIMS[2]))
    En = cm.energies[:nc] - cm.energies[0]
    th = cm.x[0, :nc].copy()
    ell = (8 * params.E_Cplus / params.E_Lc) ** 0.25
    wp = np.sqrt(8 * params.E_Cplus * params.E_Lc)
    EL = params.E_L
    out = {k: {} for k in ("g", "G", "eps1", "eta1", "delta", "Delta", "E", "phi")}
    allowed = np.ones((nq, nc), bool)
    allowed[:2, 0] = False
    for mu, which in enumerate("ab"):
        q = qubit_mode(params, which, max(nq, DEFAULT_DIMS[0]))
        Eq, ph = q.energies[:nq], q.x[:2, :nq]
        Ejj = Eq[:2, None] - Eq[None, :]                                  # [j, j']
        g = (-1) ** mu * EL / 2 * ph[:, :, None] * th[None, None, :]      # [j, j', n]
        delta = Ejj[:, :, None] - En[None, None, :]
        delta = np.where(allowed[None], delta, np.nan)
        if np.nanmin(np.abs(delta)) < guard:
            raise NonDispersive(f"qubit {which}: theta_- denominator below guard at phi_c={phi_c:.4f}")
        G = EL / 2 * ell / np.sqrt(2) * ph
        Delta = Ejj - wp
        if np.min(np.abs(Delta)) < guard:
            raise NonDispersive(f"qubit {which}: theta_+ denominator below guard")
        out["g"][which], out["G"][which] = g, G
        out["eps1"][which], out["eta1"][which] = g / delta, G / Delta
        out["delta"][which], out["Delta"][which] = delta, Delta
        out["E"][which], out["phi"][which] = Eq, q.x[:nq, :nq]
    return SWCoefficients(out["g"], out["G"], out["eps1"], out["eta1"], out["delta"], out["Delta"],
                          ell, out["E"], out["phi"], En, th, wp)


def sweet_spot_shift(params, phi_c):
    """First-order sweet-spot flux offsets (dphi_a, dphi_b) = (-t/2, +t/2), t = <0_-|theta_-|0_->."""
    t = theta_minus_expectation(params, float(phi_c))
    return -t / 2, t / 2


def contour_point(params, phi_c):
    """FluxPoint on the first-order sweet-spot contour."""
    da, db = sweet_spot_shift(params, phi_c)
    return FluxPoint.from_shifts(da, db, float(phi_c))


def omega_coeff(params, flux):
    """Residual single-qubit X strengths (Omega_a, Omega_b) in h*GHz.

    Omega_mu = E_L <0|phi_mu|1> [dphi_mu + (-1)^mu <0_-|theta_-|0_->/2]
    """
    t = theta_minus_expectation(params, flux.phi_c)
    out = []
    for mu, (which, d) in enumerate((("a", flux.delta_phi_a), ("b", flux.delta_phi_b))):
        p01 = qubit_mode(params, which).x[0, 1]
        out.append(params.E_L * p01 * (d + (-1) ** mu * t / 2))
    return tuple(out)


def lamb_shift(params, flux, cutoffs=(QUBIT_CUTOFF, COUPLER_CUTOFF), sw=None):
    """Qubit-frequency renormalizations (chi_a, chi_b) in h*GHz.

    chi_j = sum_{j'} [ sum'_n g^2 / (E_jj' - E_n0) + G^2 / (E_jj' - w_+) ]
    and chi = chi_1 - chi_0; the primed sum admits n = 0 only for j' >= 2.
    """
    sw = sw or sw_first_order(params, flux, cutoffs)
    out = []
    for which in "ab":
        chi_j = np.nansum(sw.g[which] * sw.eps1[which], axis=(1, 2))
        chi_j = chi_j + np.sum(sw.G[which] * sw.eta1[which], axis=1)
        out.append(float(chi_j[1] - chi_j[0]))
    return tuple(out)


def coupling_strength(params, flux, cutoffs=(QUBIT_CUTOFF, COUPLER_CUTOFF), sw=None):
    """XX coupling (J, J_minus, J_plus) in h*GHz, J = J_minus - J_plus."""
    sw = sw or sw_first_order(params, flux, cutoffs)
    pa = sw.qubit_phi["a"][0, 1]
    pb = sw.qubit_phi["b"][0, 1]
    Ea = sw.qubit_energies["a"][0] - sw.qubit_energies["a"][1]
    Eb = sw.qubit_energies["b"][0] - sw.qubit_energies["b"][1]

    def bracket(d):
        return 1 / (d - Ea) + 1 / (d + Ea) + 1 / (d - Eb) + 1 / (d + Eb)

    dn = sw.coupler_energies[1:]
    EL = params.E_L
    J_minus = float(np.sum((EL / 2) ** 2 * sw.theta_0n[1:] ** 2 * pa * pb / 2 * bracket(dn)))
    G0 = EL / 2 * sw.ell_osc / np.sqrt(2)
    J_plus = float(G0 ** 2 * pa * pb / 2 * bracket(sw.omega_plus))
    return J_minus - J_plus, J_minus, J_plus


@dataclass(frozen=True)
class EffectiveParams:
    """Coefficients of the effective two-qubit Hamiltonian.

    Frequencies ``omega_*`` are angular (rad/ns); J, Omega and chi in h*GHz.
    """
    omega_a_prime: float
    omega_b_prime: float
    J: float
    J_minus: float
    J_plus: float
    Omega_a: float
    Omega_b: float
    chi_a: float
    chi_b: float

    def hamiltonian(self):
        """4x4 H_eff in h*GHz, basis |00>, |01>, |10>, |11> (qubit a first)."""
        X, Z, I = PAULI["X"], PAULI["Z"], PAULI["I"]
        wa, wb = self.omega_a_prime / TWO_PI, self.omega_b_prime / TWO_PI
        H = -wa / 2 * np.kron(Z, I) - wb / 2 * np.kron(I, Z) + self.J * np.kron(X, X)
        return H - self.Omega_a * np.kron(X, I) - self.Omega_b * np.kron(I, X)


def effective_params(params, flux, cutoffs=(QUBIT_CUTOFF, COUPLER_CUTOFF)):
    """SW effective parameters at ``flux`` (FluxPoint, or phi_c for the contour)."""
    if not isinstance(flux, FluxPoint):
        flux = contour_point(params, flux)
    sw = sw_first_order(params, flux, cutoffs)
    chi_a, chi_b = lamb_shift(params, flux, sw=sw)
    J, Jm, Jp = coupling_strength(params, flux, sw=sw)
    Om_a, Om_b = omega_coeff(params, flux)
    wa = sw.qubit_energies["a"][1] - sw.qubit_energies["a"][0]
    wb = sw.qubit_energies["b"][1] - sw.qubit_energies["b"][0]
    return EffectiveParams(TWO_PI * (wa + chi_a), TWO_PI * (wb + chi_b), J, Jm, Jp,
                           Om_a, Om_b, chi_a, chi_b)


def pauli_coefficients(H4):
    """Coefficients c_PQ = Tr[(P x Q) H] / 4 of a 4x4 operator."""
    return {p + q: complex(np.trace(np.kron(PAULI[p], PAULI[q]) @ H4) / 4).real
            for p in "IXYZ" for q in "IXYZ"}


def exact_effective_hamiltonian(params, flux, disorder=None, n_levels=4, **kw):
    """Effective Hamiltonian from exact diagonalization (des Cloizeaux projection).

    The lowest four dressed states are mapped onto the four computational
    bare states by the unitary closest to their overlap matrix, giving a
    Hermitian 4x4 H_eff with the exact dressed energies as its spectrum.
    Returns (H4 in h*GHz, dressed energies).
    """
    H, basis = assemble_static_hamiltonian(params, flux, disorder, **kw)
    es = diagonalize(H, n_levels)
    M = es.states[basis.computational_indices(), :4]
    U, s, Wh = np.linalg.svd(M)
    if s.min() < 0.5:
        raise NonDispersive("computational states strongly hybridized with the coupler")
    W = U @ Wh
    E = es.energies[:4]
    return (W * E) @ W.conj().T, E


def exact_sweet_spot(params, phi_c, tol=1e-8, maxiter=25, **kw):
    """Qubit fluxes at which the exact X_a and X_b coefficients vanish.

    Newton iteration starting from the first-order contour; the initial slope
    d c_XI / d dphi_a = -E_L <0|phi_a|1> is refined by secant updates.
    Returns (FluxPoint, H4, energies).
    """
    d = np.array(sweet_spot_shift(params, phi_c))
    slope = -params.E_L * np.array([qubit_mode(params, "a").x[0, 1], qubit_mode(params, "b").x[0, 1]])
    prev = None
    for _ in range(maxiter):
        fp = FluxPoint.from_shifts(d[0], d[1], float(phi_c))
        H4, E = exact_effective_hamiltonian(params, fp, **kw)
        c = pauli_coefficients(H4)
        om = np.array([c["XI"], c["IX"]])
        if np.all(np.abs(om) < tol):
            return fp, H4, E
        if prev is not None:
            dd, dom = d - prev[0], om - prev[1]
            ok = np.abs(dd) > 1e-14
            slope[ok] = dom[ok] / dd[ok]
        prev = (d.copy(), om)
        d = d - om / slope
    raise NumericalError("exact sweet-spot iteration did not converge")


def exact_coupling(params, phi_c, **kw):
    """Exact XX coefficient on the exact sweet-spot contour."""
    fp, H4, E = exact_sweet_spot(params, phi_c, **kw)
    return pauli_coefficients(H4)["XX"]


def find_off_position(params, mode="effective", bracket=(0.05, 0.45), n_grid=41, tol_GHz=1e-6,
                      **kw):
    """Coupler flux on the sweet-spot contour where the XX coupling vanishes.

    mode='effective': root of the SW coupling J(phi_c) by bracketed root
    finding, on the first-order contour.
    mode='exact': root of the exactly computed XX coefficient, with the
    qubit fluxes refined so that the exact X coefficients vanish too. The
    search starts from the effective root.
    """
    if mode not in ("effective", "exact"):
        raise InvalidParameters("mode must be 'effective' or 'exact'")
    xs = np.linspace(bracket[0], bracket[1], n_grid)

    def J(x):
        try:
            return coupling_strength(params, TWO_PI * x)[0]
        except NonDispersive:
            return np.nan

    Js = np.array([J(x) for x in xs])
    roots = [k for k in range(n_grid - 1)
             if np.isfinite(Js[k]) and np.isfinite(Js[k + 1]) and Js[k] * Js[k + 1] < 0]
    if not roots:
        raise NoOffPosition("J(phi_c) does not change sign on the contour search interval")
    k = roots[0]
    x_eff = brentq(J, xs[k], xs[k + 1], xtol=1e-12)
    if abs(J(x_eff)) > tol_GHz:
        raise NumericalError("effective off-position root not converged")
    if mode == "effective":
        return contour_point(params, TWO_PI * x_eff)

    def Jx(x):
        return exact_coupling(params, TWO_PI * x, **kw)

    for width in (0.005, 0.015, 0.04):
        lo, hi = x_eff - width, x_eff + width
        flo, fhi = Jx(lo), Jx(hi)
        if flo * fhi < 0:
            x_ex = brentq(Jx, lo, hi, xtol=1e-7)
            return exact_sweet_spot(params, TWO_PI * x_ex, **kw)[0]
    raise NoOffPosition("exact XX coefficient does not change sign near the effective root")


def flux_sensitivity(params, phi_c=None, steps=(1e-4, 2e-4)):
    """|dJ_minus/dPhi_c| at the off position in h*MHz per flux quantum.

    Central differences at two step sizes (in units of Phi0); a warning is
    issued when they disagree by more than 1%.
    """
    if phi_c is None:
        phi_c = find_off_position(params).phi_c
    x0 = phi_c / TWO_PI
    vals = []
    for h in steps:
        jp = coupling_strength(params, TWO_PI * (x0 + h))[1]
        jm = coupling_strength(params, TWO_PI * (x0 - h))[1]
        vals.append((jp - jm) / (2 * h) * 1e3)
    if abs(vals[0] - vals[1]) > 0.01 * abs(vals[0]) + 1e-6:
        warnings.warn("flux-sensitivity finite differences disagree by more than 1%")
    return abs(vals[0])


def _sensitivity_cell(args):
    params, EJc, ECm = args
    try:
        p = params.replace(E_Jc=EJc, E_Cminus=ECm)
        off = find_off_position(p)
        chi_a = lamb_shift(p, off)[0]
        return EJc, ECm, flux_sensitivity(p, off.phi_c), chi_a * 1e3
    except (NoOffPosition, NonDispersive, InvalidParameters, NumericalError):
        return EJc, ECm, np.nan, np.nan


def sensitivity_map(params, EJc_values, ECm_values, workers=1):
    """Rows (E_Jc, E_Cminus, |dJ_-/dPhi_c| [MHz/Phi0], chi_a [MHz]) over a grid.

    Cells without an off position or outside the dispersive regime yield NaN.
    Row order is fixed (E_Jc outer, E_Cminus inner) regardless of ``workers``.
    """
    cells = [(params, float(a), float(b)) for a in EJc_values for b in ECm_values]
    return parallel_map(_sensitivity_cell, cells, workers)


def disorder_sweet_spot_shift(params, disorder, flux, sw=None):
    """Change (dOmega_a, dOmega_b) of the X coefficients due to inductive disorder.

    The cross term between the theta_+ coupling and the disorder term
    theta_+ theta_- gives H^(2) = -sum_mu g_ind (eta_01 + eta_10) X_mu with
    g_ind = ell_osc/(4 sqrt 2) (E_L dE_L + E_L' dE_L') <0_-|theta_-|0_->.
    Both orderings of the two virtual transitions contribute equally, hence
    no factor 1/2. Capacitive disorder does not contribute at this order.
    """
    sw = sw or sw_first_order(params, flux)
    g_ind = (sw.ell_osc / (4 * np.sqrt(2)) * (params.E_L * disorder.dE_L + params.E_Lprime * disorder.dE_Lprime)
             * sw.theta_0n[0])
    return tuple(g_ind * (sw.eta1[m][0, 1] + sw.eta1[m][1, 0]) for m in "ab")


def _semi_analytic(params, phi_c, include_coupler_loop=False, dims=DEFAULT_DIMS,
                   energy_cutoff=DEFAULT_ENERGY_CUTOFF):
    """Computational-subspace drive matrices from the second-order SW generator.

    P = computational bare states, Q = all others. With S1 = V_PQ/(E_P - E_Q)
    (S1m its theta_- part) and S2 = (S1m Vm_QQ - Vm_PP S1m)/(E_P - E_Q),

      h_eff = h_PP + [S1 + S2, h]_PP + 1/2 (SS h_PP + h_PP SS + 2 S1m h_QQ S1m^T),

    with SS = -S1m S1m^T. theta_+ contributions are dropped beyond first
    order. Unless ``include_coupler_loop`` is set, h_QQ elements connecting two
    states that both carry a theta_- excitation are omitted from the last
    term, reproducing the published semi-analytic expressions.
    """
    basis = bare_basis(params, phi_c, dims, energy_cutoff)
    Vm, Vp = coupling_parts(basis)
    E0 = basis.energies
    P = basis.computational_indices()
    Q = np.setdiff1d(np.arange(basis.dim), P)
    den = E0[P][:, None] - E0[Q][None, :]
    S1 = (Vm + Vp)[np.ix_(P, Q)] / den
    S1m = Vm[np.ix_(P, Q)] / den
    S2 = (S1m @ Vm[np.ix_(Q, Q)] - Vm[np.ix_(P, P)] @ S1m) / den
    SS = -S1m @ S1m.T
    if include_coupler_loop:
        mask = 1.0
    else:
        nq = basis.labels[Q, 2]
        mask = ~((nq[:, None] >= 1) & (nq[None, :] >= 1))
    out = []
    for h in drive_operators(params, basis):
        h = h.matrix
        hPP, hPQ, hQQ = h[np.ix_(P, P)], h[np.ix_(P, Q)], h[np.ix_(Q, Q)] * mask
        M = hPP + (S1 + S2) @ hPQ.T + hPQ @ (S1 + S2).T
        M = M + 0.5 * (SS @ hPP + hPP @ SS + 2 * S1m @ hQQ @ S1m.T)
        out.append(0.5 * (M + M.T))
    return dict(zip("abc", out))


def dressed_drive_elements(params, flux, which, method="exact", include_coupler_loop=False, **kw):
    """4x4 matrix of h_which between computational dressed states (h*GHz).

    method='exact' sandwiches the drive operator between numerically exact
    dressed states (sign gauge: dominant bare amplitude positive);
    method='semi' uses the second-order generator expansion.
    """
    if which not in ("a", "b", "c"):
        raise InvalidParameters("which must be 'a', 'b' or 'c'")
    if method == "semi":
        return _semi_analytic(params, flux.phi_c, include_coupler_loop)[which]
    if method != "exact":
        raise InvalidParameters("method must be 'exact' or 'semi'")
    es, basis = full_eigensystem(params, flux, **kw)
    h = drive_operators(params, basis)["abc".index(which)].matrix
    C = es.states[:, es.computational_indices()]
    M = C.conj().T @ h @ C
    return 0.5 * (M + M.conj().T).real


def ac_coupling(params, flux, method="exact", **kw):
    """J_ac = (<00|h_c|11> + <01|h_c|10>)/2 in h*GHz."""
    M = dressed_drive_elements(params, flux, "c", method, **kw)
    return 0.5 * (M[0, 3] + M[1, 2])
