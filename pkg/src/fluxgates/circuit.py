"""Operator representations of the coupled two-fluxonium circuit.

Each fluxonium-like mode (the two qubits and the tunable coupler mode theta_-)
is diagonalized in the harmonic-oscillator basis of its quadratic part. The
harmonic coupler mode theta_+ is kept analytic. The full Hamiltonian

    H = H0 + V + H_dis

is then assembled in a product basis of mode eigenstates |l_a, m_b, n_-, p_+>,
optionally pruned to the states whose bare energy lies below a cutoff.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BasisIncompatible, InvalidParameters, NonHermitian, TruncationTooSmall
from .params import DisorderParams

QUBIT_BASIS_SIZE = 110
COUPLER_BASIS_SIZE = 110
DEFAULT_DIMS = (12, 12, 8, 6)
DEFAULT_ENERGY_CUTOFF = 100.0  # h*GHz above the bare ground state

MODE_NAMES = ("a", "b", "minus", "plus")


@dataclass(frozen=True, eq=False)
class OperatorRep:
    """A dense operator together with the basis it is written in.

    ``labels`` is set for (possibly pruned) product bases and holds one row of
    mode occupations (l_a, m_b, n_-, p_+) per basis state. Without labels the
    matrix dimension must equal prod(dims).
    """
    matrix: np.ndarray
    basis_tag: str
    dims: tuple
    labels: np.ndarray = None

    def __post_init__(self):
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise BasisIncompatible("operator matrix must be square")
        if self.labels is None:
            if int(np.prod(self.dims)) != m.shape[0]:
                raise BasisIncompatible(f"dims {self.dims} do not match matrix size {m.shape[0]}")
        elif len(self.labels) != m.shape[0]:
            raise BasisIncompatible("label count does not match matrix size")

    @property
    def dim(self):
        return self.matrix.shape[0]

    def hermiticity_error(self):
        m = self.matrix
        scale = max(np.linalg.norm(m), 1e-300)
        return np.linalg.norm(m - m.conj().T) / scale

    def is_hermitian(self, tol=1e-10):
        return self.hermiticity_error() <= tol


def _check_energies(*vals):
    for v in vals:
        if not np.isfinite(v) or v <= 0:
            raise InvalidParameters(f"energies must be positive, got {v}")


def oscillator_operators(E_C, E_L, size):
    """Phase and charge operators in the oscillator basis of 4 E_C n^2 + E_L phi^2 / 2.

    Returns (phi, n, ell) with phi = ell/sqrt(2) (a + a^dag),
    n = i/(sqrt(2) ell) (a^dag - a) and ell = (8 E_C / E_L)^(1/4).
    """
    _check_energies(E_C, E_L)
    ell = (8.0 * E_C / E_L) ** 0.25
    a = np.diag(np.sqrt(np.arange(1, size)), 1)
    phi = ell / np.sqrt(2.0) * (a + a.T)
    n = 1j / (np.sqrt(2.0) * ell) * (a.T - a)
    return phi, n, ell


def _cos_sin(phi):
    w, v = np.linalg.eigh(phi)
    return (v * np.cos(w)) @ v.T, (v * np.sin(w)) @ v.T


def _fluxonium_like(E_C, E_L, E_J, offset, size, linear=0.0):
    """4 E_C n^2 + E_L x^2 / 2 - E_J cos(x + offset) - linear * x."""
    x, n, _ = oscillator_operators(E_C, E_L, size)
    c, s = _cos_sin(x)
    H = np.sqrt(8.0 * E_C * E_L) * np.diag(np.arange(size) + 0.5)
    H = H - E_J * (c * np.cos(offset) - s * np.sin(offset))
    if linear:
        H = H - linear * x
    return H, x, n


def build_fluxonium(params, which, delta_phi=0.0, basis_size=QUBIT_BASIS_SIZE):
    """Single fluxonium qubit biased near half flux.

    The external-flux deviation delta_phi enters through the inductive term,
    which to linear order adds -E_L * delta_phi * phi.
    """
    if basis_size < 40:
        raise TruncationTooSmall("fluxonium basis_size must be at least 40")
    E_J, E_C = params.qubit(which)
    H, x, n = _fluxonium_like(E_C, params.E_L, E_J, np.pi, basis_size,
                              linear=params.E_L * delta_phi)
    tag = f"oscillator:{which}"
    dims = (basis_size,)
    return OperatorRep(H, tag, dims), OperatorRep(x, tag, dims), OperatorRep(n, tag, dims)


def build_coupler_minus(params, phi_c, basis_size=COUPLER_BASIS_SIZE):
    """Tunable fluxonium-like coupler mode theta_-."""
    if basis_size < 30:
        raise TruncationTooSmall("coupler basis_size must be at least 30")
    H, x, n = _fluxonium_like(params.E_Cminus, params.E_Lc, params.E_Jc, phi_c, basis_size)
    tag = "oscillator:minus"
    dims = (basis_size,)
    return OperatorRep(H, tag, dims), OperatorRep(x, tag, dims), OperatorRep(n, tag, dims)


def build_coupler_plus(params, basis_size=DEFAULT_DIMS[3]):
    """Harmonic coupler mode theta_+ (exact in its own number basis)."""
    if basis_size < 5:
        raise TruncationTooSmall("theta_+ basis_size must be at least 5")
    x, n, _ = oscillator_operators(params.E_Cplus, params.E_Lc, basis_size)
    w = np.sqrt(8.0 * params.E_Cplus * params.E_Lc)
    H = w * np.diag(np.arange(basis_size) + 0.5)
    tag = "oscillator:plus"
    dims = (basis_size,)
    return OperatorRep(H, tag, dims), OperatorRep(x, tag, dims), OperatorRep(n, tag, dims)


@dataclass(frozen=True, eq=False)
class ModeSpectrum:
    """Lowest eigenstates of one mode and its operators in that eigenbasis.

    ``x`` is the phase-like operator (phi or theta), real symmetric.
    ``p`` is the charge operator divided by i, real antisymmetric.
    """
    energies: np.ndarray
    x: np.ndarray
    p: np.ndarray
    vectors: np.ndarray

    @property
    def n(self):
        return 1j * self.p


def mode_spectrum(H, x, n, keep):
    """Diagonalize a mode Hamiltonian and express x, n in its eigenbasis.

    Gauge: the largest oscillator-basis amplitude of each eigenvector is made
    positive, then the first excited state is flipped if needed so that
    <0|x|1> > 0.
    """
    Hm = H.matrix if isinstance(H, OperatorRep) else H
    xm = x.matrix if isinstance(x, OperatorRep) else x
    nm = n.matrix if isinstance(n, OperatorRep) else n
    E, V = np.linalg.eigh(Hm)
    E, V = E[:keep], V[:, :keep].copy()
    big = np.argmax(np.abs(V), axis=0)
    V *= np.sign(V[big, np.arange(keep)])
    xe = V.T @ xm @ V
    if keep > 1 and xe[0, 1] < 0:
        V[:, 1] *= -1
        xe = V.T @ xm @ V
    pe = V.T @ np.imag(nm) @ V
    return ModeSpectrum(E, 0.5 * (xe + xe.T), 0.5 * (pe - pe.T), V)


@lru_cache(maxsize=32)
def qubit_mode(params, which, keep=DEFAULT_DIMS[0], basis_size=QUBIT_BASIS_SIZE):
    """Eigen-decomposition of qubit ``which`` at its half-flux sweet spot."""
    return mode_spectrum(*build_fluxonium(params, which, 0.0, basis_size), keep)


@lru_cache(maxsize=256)
def coupler_minus_mode(params, phi_c, keep=DEFAULT_DIMS[2], basis_size=COUPLER_BASIS_SIZE):
    return mode_spectrum(*build_coupler_minus(params, float(phi_c), basis_size), keep)


@lru_cache(maxsize=32)
def coupler_plus_mode(params, keep=DEFAULT_DIMS[3]):
    H, x, n = build_coupler_plus(params, keep)
    return ModeSpectrum(np.diag(H.matrix).copy(), x.matrix.copy(), np.imag(n.matrix).copy(),
                        np.eye(keep))


def theta_minus_expectation(params, phi_c, basis_size=COUPLER_BASIS_SIZE):
    """<0_-|theta_-|0_->, the coupler ground-state phase expectation."""
    return float(coupler_minus_mode(params, float(phi_c), 2, basis_size).x[0, 0])


@dataclass(frozen=True, eq=False)
class BareBasis:
    """Product basis of mode eigenstates, possibly pruned by bare energy."""
    params: object
    phi_c: float
    dims: tuple
    labels: np.ndarray
    energies: np.ndarray
    modes: tuple

    @property
    def dim(self):
        return len(self.labels)

    def index(self, label):
        hit = np.flatnonzero((self.labels == np.asarray(label)).all(axis=1))
        if hit.size == 0:
            raise KeyError(f"bare state {tuple(label)} not in basis")
        return int(hit[0])

    def computational_indices(self):
        return np.array([self.index((l, m, 0, 0)) for l in (0, 1) for m in (0, 1)])

    def operator(self, factors, coeff=1.0):
        """Matrix of coeff * (F_a x F_b x F_- x F_+) restricted to the basis.

        ``factors`` maps a mode index (0..3) to its matrix in the mode
        eigenbasis; missing modes contribute the identity.
        """
        L = self.labels
        out = np.full((self.dim, self.dim), float(coeff))
        for k in range(4):
            lk = L[:, k]
            if k in factors:
                out *= factors[k][np.ix_(lk, lk)]
            else:
                out *= lk[:, None] == lk[None, :]
        return out


def bare_basis(params, phi_c, dims=DEFAULT_DIMS, energy_cutoff=DEFAULT_ENERGY_CUTOFF,
               basis_sizes=(QUBIT_BASIS_SIZE, COUPLER_BASIS_SIZE)):
    """Product basis at coupler flux phi_c.

    States with bare energy more than ``energy_cutoff`` above the bare ground
    state are dropped (``None`` keeps the full product). The computational
    states |l, m, 0, 0> with l, m in {0, 1} are always kept.
    """
    dims = tuple(int(d) for d in dims)
    if len(dims) != 4 or min(dims[:3]) < 2 or dims[3] < 1:
        raise TruncationTooSmall(f"invalid product dims {dims}")
    qa = qubit_mode(params, "a", dims[0], basis_sizes[0])
    qb = qubit_mode(params, "b", dims[1], basis_sizes[0])
    cm = coupler_minus_mode(params, float(phi_c), dims[2], basis_sizes[1])
    cp = coupler_plus_mode(params, max(dims[3], 5))
    Es = (qa.energies, qb.energies, cm.energies, cp.energies[:dims[3]])
    grid = np.indices(dims).reshape(4, -1).T
    bare = Es[0][grid[:, 0]] + Es[1][grid[:, 1]] + Es[2][grid[:, 2]] + Es[3][grid[:, 3]]
    if energy_cutoff is not None:
        keep = bare - bare.min() <= energy_cutoff
        keep |= (grid[:, 2] == 0) & (grid[:, 3] == 0) & (grid[:, 0] < 2) & (grid[:, 1] < 2)
        grid, bare = grid[keep], bare[keep]
    if dims[3] < cp.energies.size:
        cp = ModeSpectrum(cp.energies[:dims[3]], cp.x[:dims[3], :dims[3]],
                          cp.p[:dims[3], :dims[3]], np.eye(dims[3]))
    return BareBasis(params, float(phi_c), dims, grid, bare, (qa, qb, cm, cp))


def _basis_for(params, flux, basis, dims, energy_cutoff):
    if basis is None:
        return bare_basis(params, flux.phi_c, dims, energy_cutoff)
    if basis.params != params or abs(basis.phi_c - flux.phi_c) > 1e-15:
        raise BasisIncompatible("basis was built for different parameters or coupler flux")
    return basis


def coupling_parts(basis):
    """Static coupling V split into its theta_- and theta_+ parts (no flux offsets)."""
    qa, qb, cm, cp = basis.modes
    EL = basis.params.E_L
    V_minus = basis.operator({0: qa.x, 2: cm.x}, -EL / 2) + basis.operator({1: qb.x, 2: cm.x}, EL / 2)
    V_plus = basis.operator({0: qa.x, 3: cp.x}, -EL / 2) + basis.operator({1: qb.x, 3: cp.x}, -EL / 2)
    return V_minus, V_plus


def offset_terms(basis, delta_phi_a, delta_phi_b):
    """Sum over qubits of (E_L/2) dphi_mu [-2 phi_mu + theta_+ + (-1)^mu theta_-]."""
    qa, qb, cm, cp = basis.modes
    EL = basis.params.E_L
    out = np.zeros((basis.dim, basis.dim))
    for mu, (d, q) in enumerate(((delta_phi_a, qa), (delta_phi_b, qb))):
        if d == 0:
            continue
        out += basis.operator({mu: q.x}, -EL * d)
        out += basis.operator({3: cp.x}, EL / 2 * d)
        out += basis.operator({2: cm.x}, (-1) ** mu * EL / 2 * d)
    return out


def disorder_terms(basis, disorder):
    """H_dis = (E_L dE_L + E_L' dE_L')/4 theta_+ theta_- - 4 E_C- dC n_+ n_-."""
    p = basis.params
    qa, qb, cm, cp = basis.modes
    out = np.zeros((basis.dim, basis.dim))
    g = 0.25 * (p.E_L * disorder.dE_L + p.E_Lprime * disorder.dE_Lprime)
    if g:
        out += basis.operator({2: cm.x, 3: cp.x}, g)
    if disorder.dC:
        # n_+ n_- = (i p_+)(i p_-) = -p_+ p_-
        out += basis.operator({2: cm.p, 3: cp.p}, 4.0 * p.E_Cminus * disorder.dC)
    return out


def assemble_static_hamiltonian(params, flux, disorder=None, dims=DEFAULT_DIMS,
                                energy_cutoff=DEFAULT_ENERGY_CUTOFF, basis=None):
    """H0 + V + H_dis in the (pruned) product bare basis at ``flux``."""
    disorder = disorder or DisorderParams()
    basis = _basis_for(params, flux, basis, dims, energy_cutoff)
    V_minus, V_plus = coupling_parts(basis)
    H = np.diag(basis.energies) + V_minus + V_plus
    H += offset_terms(basis, flux.delta_phi_a, flux.delta_phi_b)
    if not disorder.is_zero:
        H += disorder_terms(basis, disorder)
    rep = OperatorRep(H, "bare", basis.dims, basis.labels)
    if not rep.is_hermitian():
        raise NonHermitian("assembled Hamiltonian is not Hermitian")
    return rep, basis


def drive_operators(params, basis):
    """Flux-drive operators h_a, h_b, h_c in the product basis.

    h_a = (E_L/2)(-2 phi_a + theta_+ + theta_-)
    h_b = (E_L/2)(-2 phi_b + theta_+ - theta_-)
    h_c = (E_L/2) phi_a - (E_L/2) phi_b - E_Lc theta_-
    """
    if basis.params != params:
        raise BasisIncompatible("basis was built for different parameters")
    qa, qb, cm, cp = basis.modes
    EL, ELc = params.E_L, params.E_Lc
    phi_a = basis.operator({0: qa.x})
    phi_b = basis.operator({1: qb.x})
    th_m = basis.operator({2: cm.x})
    th_p = basis.operator({3: cp.x})
    h_a = EL / 2 * (-2 * phi_a + th_p + th_m)
    h_b = EL / 2 * (-2 * phi_b + th_p - th_m)
    h_c = EL / 2 * phi_a - EL / 2 * phi_b - ELc * th_m
    return tuple(OperatorRep(h, "bare", basis.dims, basis.labels) for h in (h_a, h_b, h_c))
