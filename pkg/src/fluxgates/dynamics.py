"""Time-domain simulation of flux-driven gates in the dressed eigenbasis.

The static Hamiltonian H_0 + V at the off position is diagonalized and
truncated to its lowest ``n_states`` eigenstates; the flux-drive operators
h_a, h_b, h_c are expressed in the same basis. Propagation defaults to the
interaction picture with respect to the static energies, where the
Hamiltonian vanishes between pulses. Energies are in h*GHz and converted to
angular units (rad/ns) internally.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .circuit import drive_operators
from .effective import find_off_position
from .errors import (IntegrationError, InvalidParameters, NearResonantWarning, NotAChannel,
                     TruncationWarning)
from .circuit import qubit_mode
from .spectrum import full_eigensystem
from .parallel import parallel_map
from .pulses import PulseSpec, TWO_PI

RTOL, ATOL = 1e-10, 1e-12
PAULI_1Q = [np.eye(2), np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]


@dataclass(frozen=True, eq=False)
class DrivenSystem:
    """Dressed energies (relative to the ground state) and drive operators.

    ``comp`` holds the indices of |00>, |01>, |10>, |11>; ``coupler_weight``
    the squared overlap of each dressed state with the bare manifold
    |l, m, 1_-, 0_+>, l, m in {0, 1}.
    """
    energies: np.ndarray
    drives: dict
    comp: np.ndarray
    labels: dict
    flux: object = None
    coupler_weight: np.ndarray = None

    @property
    def n_states(self):
        return self.energies.size

    def truncate(self, n_states):
        if n_states < 4 or n_states > self.n_states:
            raise InvalidParameters(f"n_states must lie in [4, {self.n_states}]")
        if np.any(self.comp >= n_states):
            raise InvalidParameters("truncation removes computational states")
        return DrivenSystem(self.energies[:n_states],
                            {k: v[:n_states, :n_states] for k, v in self.drives.items()},
                            self.comp, {k: v for k, v in self.labels.items() if k < n_states}, self.flux,
                            None if self.coupler_weight is None else self.coupler_weight[:n_states])


def build_driven_system(params, flux=None, n_states=54, disorder=None, **kw):
    """Diagonalize the static Hamiltonian at ``flux`` (default: exact off position)."""
    if n_states < 4:
        raise InvalidParameters("n_states must be at least 4")
    if flux is None:
        flux = find_off_position(params, "exact")
    es, basis = full_eigensystem(params, flux, n_states, disorder, **kw)
    V = es.states
    drives = {}
    for name, h in zip("abc", drive_operators(params, basis)):
        M = V.T @ h.matrix @ V
        drives[name] = 0.5 * (M + M.T)
    E = es.energies - es.energies[0]
    lab = basis.labels
    manifold = (lab[:, 0] < 2) & (lab[:, 1] < 2) & (lab[:, 2] == 1) & (lab[:, 3] == 0)
    weight = np.sum(np.abs(V[manifold]) ** 2, axis=0)
    return DrivenSystem(E, drives, es.computational_indices(), es.labels, flux, weight)


def _windows(pulses, t_final):
    """Sorted pulse windows; overlapping pulses are merged into one window."""
    spans = sorted((p.t_start, min(p.t_end, t_final)) for p in pulses if p.t_start < t_final)
    out = []
    for a, b in spans:
        if out and a < out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], b))
        else:
            out.append((a, b))
    return out


@dataclass
class PropagationResult:
    U: np.ndarray
    times: np.ndarray = None
    populations: np.ndarray = None
    unitarity_defect: float = 0.0
    leakage: float = 0.0
    truncation_population: float = 0.0
    info: dict = field(default_factory=dict)


def propagate_unitary(system, pulses, t_final, n_states=None, rtol=RTOL, atol=ATOL, frame="interaction",
                      initial=None, sample_times=None):
    """Propagator of H(t) = diag(E) + sum_p delta_phi_p(t) h_p over [0, t_final].

    ``initial`` selects the columns (dressed indices) to propagate, default
    all. In the interaction frame only pulse windows are integrated and the
    final propagator is returned in the lab frame. ``sample_times`` gives the
    times at which populations |<k|psi_j(t)>|^2 are recorded (frame
    independent). Returns a PropagationResult; U has shape (n, len(initial)).
    """
    if frame not in ("interaction", "lab"):
        raise InvalidParameters("frame must be 'interaction' or 'lab'")
    if n_states is not None:
        system = system.truncate(n_states)
    for p in pulses:
        if not isinstance(p, PulseSpec):
            raise InvalidParameters("pulses must be PulseSpec instances")
    N = system.n_states
    w = TWO_PI * system.energies
    cols = np.arange(N) if initial is None else np.asarray(initial)
    Y = np.eye(N, dtype=complex)[:, cols]
    ts = None if sample_times is None else np.sort(np.asarray(sample_times, dtype=float))
    drives = {k: TWO_PI * v for k, v in system.drives.items()}
    sampled = {}

    def rhs_int(t, y):
        ph = np.exp(1j * w * t)
        H = 0.0
        for p in pulses:
            f = p.flux(t)
            if f != 0.0:
                H = H + float(f) * drives[p.line]
        if np.isscalar(H):
            return np.zeros_like(y)
        HI = (ph[:, None] * H) * ph.conj()[None, :]
        return (-1j * HI @ y.reshape(N, -1)).ravel()

    def rhs_lab(t, y):
        Yt = y.reshape(N, -1)
        out = w[:, None] * Yt
        for p in pulses:
            f = p.flux(t)
            if f != 0.0:
                out = out + float(f) * (drives[p.line] @ Yt)
        return (-1j * out).ravel()

    def run(rhs, a, b, y0):
        te = None if ts is None else ts[(ts >= a) & (ts <= b)]
        if te is None or te.size == 0 or te[-1] < b:
            te = np.append(te if te is not None else [], b)
        sol = solve_ivp(rhs, (a, b), y0.ravel(), method="DOP853", rtol=rtol, atol=atol, t_eval=te)
        if not sol.success:
            raise IntegrationError(sol.message)
        if ts is not None:
            for k, t in enumerate(sol.t):
                if np.any(ts == t):
                    sampled[float(t)] = np.abs(sol.y[:, k].reshape(N, -1)) ** 2
        return sol.y[:, -1].reshape(N, -1)

    if frame == "interaction":
        t = 0.0
        for a, b in _windows(pulses, t_final) + [(t_final, t_final)]:
            if ts is not None:
                for s in ts[(ts >= t) & (ts <= a)]:
                    sampled.setdefault(float(s), np.abs(Y) ** 2)
            if b > a:
                Y = run(rhs_int, a, b, Y)
            t = b
        U = np.exp(-1j * w * t_final)[:, None] * Y
    else:
        bounds = sorted({0.0, t_final, *[x for a, b in _windows(pulses, t_final) for x in (a, b)]})
        for a, b in zip(bounds[:-1], bounds[1:]):
            Y = run(rhs_lab, a, b, Y)
        U = Y
        if ts is not None:
            for s in ts:
                sampled.setdefault(float(s), np.abs(U) ** 2)
    defect = float(np.linalg.norm(U.conj().T @ U - np.eye(U.shape[1]), 2))
    comp = system.comp
    in_comp = [k for k, c in enumerate(cols) if c in set(comp)]
    leak = 0.0
    if in_comp:
        leak = float(1 - np.min(np.sum(np.abs(U[comp][:, in_comp]) ** 2, axis=0)))
    top = max(1, N // 10)
    low = cols < N - top
    trunc = float(np.max(np.sum(np.abs(U[N - top:][:, low]) ** 2, axis=0))) if np.any(low) else 0.0
    if trunc > 1e-4:
        warnings.warn(f"population {trunc:.2e} in the highest retained states; increase n_states",
                      TruncationWarning, stacklevel=2)
    res = PropagationResult(U, unitarity_defect=defect, leakage=leak, truncation_population=trunc)
    if ts is not None:
        res.times = ts
        res.populations = np.array([sampled[float(s)] for s in ts])
    return res


def closed_fidelity(U, U_target, d=None):
    """F = (Tr(U^dag U) + |Tr(U_T^dag U)|^2) / (d(d+1))."""
    U, U_target = np.asarray(U), np.asarray(U_target)
    d = U_target.shape[0] if d is None else d
    if U.shape != (d, d) or U_target.shape != (d, d):
        raise InvalidParameters(f"expected {d}x{d} matrices, got {U.shape} and {U_target.shape}")
    return float((np.trace(U.conj().T @ U).real + abs(np.trace(U_target.conj().T @ U)) ** 2) / (d * (d + 1)))


def gate_unitary(system, schedule, **kw):
    """Computational block of the full propagator for a gate schedule."""
    res = propagate_unitary(system, schedule.pulses(), schedule.total_time, initial=system.comp, **kw)
    return res.U[system.comp], res


# ---------------------------------------------------------------------------
# open-system dynamics

@dataclass(frozen=True)
class DecoherenceRates:
    """Relaxation and dephasing rates in 1/us."""
    gamma1_a: float = 0.0
    gamma1_b: float = 0.0
    gammaphi_a: float = 0.0
    gammaphi_b: float = 0.0

    def __post_init__(self):
        for v in (self.gamma1_a, self.gamma1_b, self.gammaphi_a, self.gammaphi_b):
            if not (v >= 0 and np.isfinite(v)):
                raise InvalidParameters("decoherence rates must be non-negative")

    @classmethod
    def conservative(cls):
        return cls(1 / 300, 1 / 300, 1 / 80, 1 / 80)

    @classmethod
    def optimistic(cls):
        return cls(1 / 1000, 1 / 1000, 1 / 4000, 1 / 4000)

    @classmethod
    def named(cls, name):
        table = {"conservative": cls.conservative, "optimistic": cls.optimistic, "none": cls}
        if name not in table:
            raise InvalidParameters(f"unknown decoherence preset {name!r}")
        return table[name]()

    @property
    def is_zero(self):
        return self.gamma1_a == self.gamma1_b == self.gammaphi_a == self.gammaphi_b == 0


def jump_operators(rates):
    """4x4 jump operators sqrt(Gamma1) sigma_-, sqrt(Gamma_phi) sigma_z per qubit (rates in 1/ns).

    With D[L] rho = L rho L^dag - {L^dag L, rho}/2, the sigma_z channel damps
    single-qubit coherences as exp(-2 Gamma_phi t).
    """
    sm = np.array([[0, 1], [0, 0]], dtype=complex)
    sz = np.diag([1.0, -1.0]).astype(complex)
    I = np.eye(2)
    ops = []
    for g1, gp, kron in ((rates.gamma1_a, rates.gammaphi_a, lambda o: np.kron(o, I)),
                         (rates.gamma1_b, rates.gammaphi_b, lambda o: np.kron(I, o))):
        if g1 > 0:
            ops.append(np.sqrt(g1 * 1e-3) * kron(sm))
        if gp > 0:
            ops.append(np.sqrt(gp * 1e-3) * kron(sz))
    return ops


def propagate_lindblad(system, pulses, rates, rho0, t_final, rtol=RTOL, atol=ATOL, n_states=None):
    """Evolve density operators under the Lindblad equation.

    Jump operators act on the dressed computational subspace only. ``rho0``
    is one N x N operator or a batch (B, N, N); operators need not be
    Hermitian (the equation is linear), which allows propagating operator
    bases. Integration runs in the interaction frame with time-dependent
    jump operators; the result is returned in the lab frame.
    """
    if n_states is not None:
        system = system.truncate(n_states)
    N = system.n_states
    rho0 = np.asarray(rho0, dtype=complex)
    single = rho0.ndim == 2
    X = rho0[None] if single else rho0
    if X.shape[1:] != (N, N):
        raise InvalidParameters(f"rho0 must be {N}x{N}")
    B = X.shape[0]
    w = TWO_PI * system.energies
    drives = {k: TWO_PI * v for k, v in system.drives.items()}
    c = np.asarray(system.comp)
    wc = w[c]
    Ls = jump_operators(rates)

    def rhs(t, y):
        R = y.reshape(B, N, N)
        out = np.zeros_like(R)
        H = 0.0
        for p in pulses:
            f = p.flux(t)
            if f != 0.0:
                H = H + float(f) * drives[p.line]
        if not np.isscalar(H):
            ph = np.exp(1j * w * t)
            HI = (ph[:, None] * H) * ph.conj()[None, :]
            out += -1j * (HI @ R - R @ HI)
        if Ls:
            phc = np.exp(1j * wc * t)
            Rcc = R[:, c[:, None], c[None, :]]
            for L in Ls:
                LI = (phc[:, None] * L) * phc.conj()[None, :]
                LdL = LI.conj().T @ LI
                out[:, c[:, None], c[None, :]] += LI @ Rcc @ LI.conj().T
                out[:, c, :] -= 0.5 * np.einsum("ij,bjk->bik", LdL, R[:, c, :])
                out[:, :, c] -= 0.5 * np.einsum("bij,jk->bik", R[:, :, c], LdL)
        return out.ravel()

    bounds = sorted({0.0, t_final, *[x for a, b in _windows(pulses, t_final) for x in (a, b)]})
    y = X.ravel()
    for a, b in zip(bounds[:-1], bounds[1:]):
        if b <= a:
            continue
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol, t_eval=[b])
        if not sol.success:
            raise IntegrationError(sol.message)
        y = sol.y[:, -1]
    R = y.reshape(B, N, N)
    ph = np.exp(-1j * w * t_final)
    R = ph[None, :, None] * R * ph.conj()[None, None, :]
    return R[0] if single else R


def _lindblad_job(args):
    system, pulses, rates, rho, t_final, rtol, atol = args
    return propagate_lindblad(system, pulses, rates, rho, t_final, rtol, atol)


def computational_channel(system, pulses, rates, t_final, rtol=RTOL, atol=ATOL, workers=1):
    """Channel on the computational subspace, projected after evolution.

    The ten operators |j><k| (j <= k) of the computational block are
    propagated; the remaining ones follow from E(|k><j|) = E(|j><k|)^dag.
    Returns a callable mapping 4x4 input operators to 4x4 outputs.
    """
    N = system.n_states
    c = system.comp
    pairs = [(j, k) for j in range(4) for k in range(j, 4)]
    basis = np.zeros((len(pairs), N, N), dtype=complex)
    for b, (j, k) in enumerate(pairs):
        basis[b, c[j], c[k]] = 1.0
    if workers > 1:
        chunks = np.array_split(np.arange(len(pairs)), workers)
        outs = parallel_map(_lindblad_job, [(system, pulses, rates, basis[ch], t_final, rtol, atol)
                                        for ch in chunks if ch.size], workers)
        out = np.concatenate(outs)
    else:
        out = propagate_lindblad(system, pulses, rates, basis, t_final, rtol, atol)
    E = np.zeros((4, 4, 4, 4), dtype=complex)
    for b, (j, k) in enumerate(pairs):
        blk = out[b][np.ix_(c, c)]
        E[j, k] = blk
        E[k, j] = blk.conj().T

    def channel(rho):
        rho = np.asarray(rho)
        return np.einsum("jk,jkab->ab", rho, E)
    return channel


# ---------------------------------------------------------------------------
# process tomography

@dataclass(frozen=True, eq=False)
class ProcessMatrix:
    """chi in the (unnormalized) Pauli basis: E(rho) = sum chi_mn P_m rho P_n^dag."""
    chi: np.ndarray
    d: int

    def is_physical(self, tol=1e-8):
        herm = np.allclose(self.chi, self.chi.conj().T, atol=1e-10)
        ev = np.linalg.eigvalsh(0.5 * (self.chi + self.chi.conj().T))
        return herm and ev.min() > -tol and np.trace(self.chi).real <= 1 + 1e-6


def pauli_basis(n_qubits):
    ops = [np.eye(1)]
    for _ in range(n_qubits):
        ops = [np.kron(a, p) for a in ops for p in PAULI_1Q]
    return ops


def _n_qubits(d):
    n = int(round(np.log2(d)))
    if 2 ** n != d:
        raise InvalidParameters("dimension must be a power of two")
    return n


def tomography_inputs(d):
    """Product inputs from {|0>, |1>, |+>, |+i>} on each qubit (d^2 states)."""
    single = [np.array([1, 0]), np.array([0, 1]), np.array([1, 1]) / np.sqrt(2), np.array([1, 1j]) / np.sqrt(2)]
    states = [np.ones(1)]
    for _ in range(_n_qubits(d)):
        states = [np.kron(a, s) for a in states for s in single]
    return [np.outer(s, s.conj()) for s in states]


def process_tomography(channel, d, check_linearity=True, tol=1e-8):
    """Reconstruct chi from the channel's action on the standard input states."""
    inputs = tomography_inputs(d)
    outputs = [np.asarray(channel(r)) for r in inputs]
    if check_linearity:
        mix = 0.5 * (inputs[0] + inputs[-1])
        direct = np.asarray(channel(mix))
        if np.linalg.norm(direct - 0.5 * (outputs[0] + outputs[-1])) > tol * max(1.0, np.linalg.norm(direct)):
            raise NotAChannel("channel fails the superposition check")
    In = np.array([r.ravel(order="F") for r in inputs]).T
    Out = np.array([r.ravel(order="F") for r in outputs]).T
    S = Out @ np.linalg.inv(In)
    P = pauli_basis(_n_qubits(d))
    Bm = np.array([np.kron(Pn.conj(), Pm).ravel(order="F") for Pm in P for Pn in P]).T
    chi = np.linalg.solve(Bm, S.ravel(order="F")).reshape(d * d, d * d)
    return ProcessMatrix(0.5 * (chi + chi.conj().T), d)


def unitary_process_matrix(U):
    d = U.shape[0]
    u = np.array([np.trace(P.conj().T @ U) / d for P in pauli_basis(_n_qubits(d))])
    return ProcessMatrix(np.outer(u, u.conj()), d)


def open_fidelity(chi, chi_target, d=None):
    """F = (d Tr(chi_T chi) + Tr chi) / (d + 1)."""
    d = chi.d if d is None else d
    if chi.d != d or chi_target.d != d:
        raise InvalidParameters("process matrices of different dimension")
    return float(((d * np.trace(chi_target.chi @ chi.chi) + np.trace(chi.chi)) / (d + 1)).real)


# ---------------------------------------------------------------------------
# unwanted transitions

def coupler_excited_set(system, threshold=0.05):
    """Dressed indices carrying the |l, m, 1_-, 0_+> (l, m in {0, 1}) excitation.

    These bare states hybridize strongly with qubit plasmon states, so the set
    holds every retained dressed state whose weight on that manifold exceeds
    ``threshold``.
    """
    if system.coupler_weight is None:
        raise InvalidParameters("system carries no coupler-manifold weights")
    out = [int(k) for k in np.flatnonzero(system.coupler_weight > threshold)]
    if not out:
        raise InvalidParameters("no coupler-excited states in the retained set; increase n_states")
    return out


def unwanted_transition(system, i, f, drive, virtual_set=None, guard=1e-3):
    """Transition probability |c_f|^2 to second order in the drive.

    i, f are dressed indices (or computational labels '00', '01', ...);
    ``drive`` is the PulseSpec (its line selects the drive operator);
    ``virtual_set`` lists intermediate dressed indices ('all' for every
    retained state, default the coupler-excited states |l,m,1_-,0_+>).
    """
    labels = {"00": 0, "01": 1, "10": 2, "11": 3}
    i = int(system.comp[labels[i]]) if isinstance(i, str) else int(i)
    f = int(system.comp[labels[f]]) if isinstance(f, str) else int(f)
    if i == f:
        raise InvalidParameters("initial and final states must differ")
    if virtual_set is None:
        virtual_set = coupler_excited_set(system)
    elif isinstance(virtual_set, str) and virtual_set == "all":
        virtual_set = range(system.n_states)
    w = TWO_PI * system.energies
    h = TWO_PI * system.drives[drive.line]
    wd, n, dp = drive.omega_d, drive.n_periods, drive.delta_phi

    def check(den, what):
        if abs(den) < guard * wd ** 2:
            warnings.warn(f"near-resonant denominator {what} = {den:.3e} (rad/ns)^2", NearResonantWarning,
                          stacklevel=3)

    def ph(x):
        return 1 - np.exp(2j * np.pi * n * x / wd)

    Efi = w[f] - w[i]
    check(Efi ** 2 - wd ** 2, "E_fi^2 - w_d^2")
    check(Efi ** 2 - 4 * wd ** 2, "E_fi^2 - 4 w_d^2")
    amp = 1j * dp * h[f, i] * wd * ph(Efi) / (Efi ** 2 - wd ** 2)
    for v in virtual_set:
        Evi, Efv = w[v] - w[i], w[f] - w[v]
        check(Evi ** 2 - wd ** 2, f"E_vi^2 - w_d^2 (v={v})")
        check(Efv ** 2 - wd ** 2, f"E_fv^2 - w_d^2 (v={v})")
        bracket = (2 * Evi + Efi) * ph(Efi) / (Efi * (Efi ** 2 - 4 * wd ** 2)) - ph(Efv) / (Efv ** 2 - wd ** 2)
        amp += wd ** 2 * h[f, v] * h[v, i] * dp ** 2 / (Evi ** 2 - wd ** 2) * bracket
    return float(abs(amp) ** 2)


# ---------------------------------------------------------------------------
# single-qubit identity gates

@dataclass(frozen=True, eq=False)
class SingleQubit:
    """Isolated fluxonium at its sweet spot: energies and flux-drive operator (h*GHz)."""
    energies: np.ndarray
    drive: np.ndarray

    @property
    def omega_q(self):
        return TWO_PI * (self.energies[1] - self.energies[0])


def single_qubit(params, which="b", n_levels=6):
    """Fluxonium mode with drive -E_L phi (the qubit part of h_a / h_b)."""
    m = qubit_mode(params, which, max(n_levels, 2))
    E = m.energies[:n_levels] - m.energies[0]
    return SingleQubit(E, -params.E_L * m.x[:n_levels, :n_levels])


def single_qubit_propagator(sq, omega_d, delta_phi, n_periods=1, rtol=1e-10, atol=1e-12, sample_times=None,
                            psi0=None):
    """Lab-frame propagator (or state samples) over n drive periods."""
    w = TWO_PI * sq.energies
    h = TWO_PI * sq.drive
    N = w.size
    tau = TWO_PI * n_periods / omega_d

    def rhs(t, y):
        Y = y.reshape(N, -1)
        return (-1j * (w[:, None] * Y + delta_phi * np.sin(omega_d * t) * (h @ Y))).ravel()
    Y0 = np.eye(N, dtype=complex) if psi0 is None else np.asarray(psi0, dtype=complex).reshape(N, 1)
    t_eval = [tau] if sample_times is None else sample_times
    sol = solve_ivp(rhs, (0.0, tau), Y0.ravel(), method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
    if not sol.success:
        raise IntegrationError(sol.message)
    if sample_times is not None:
        return sol.t, sol.y.T.reshape(len(sol.t), N, -1)
    return sol.y[:, -1].reshape(N, -1)


def identity_fidelity(sq, omega_d, delta_phi, n_periods=1, **kw):
    """Closed fidelity (d = 2) of one drive period against the identity."""
    U = single_qubit_propagator(sq, omega_d, delta_phi, n_periods, **kw)
    return closed_fidelity(U[:2, :2], np.eye(2))


def _scan_cell(args):
    sq, r, dphi = args
    return identity_fidelity(sq, r * sq.omega_q, dphi, rtol=1e-9, atol=1e-11)


def identity_scan(params, ratios, dphis, which="b", n_levels=6, workers=1):
    """Rows (omega_d/omega_q, delta_phi/2pi, fidelity); ratio outer, flux inner."""
    ratios, dphis = np.asarray(ratios, float), np.asarray(dphis, float)
    if ratios.size == 0 or dphis.size == 0:
        raise InvalidParameters("empty scan grid")
    if np.any(ratios <= 0):
        raise InvalidParameters("drive/qubit frequency ratios must be positive")
    sq = single_qubit(params, which, n_levels)
    cells = [(sq, r, d) for r in ratios for d in dphis]
    F = parallel_map(_scan_cell, cells, workers)
    return [(float(r), float(d / TWO_PI), float(fv)) for (_, r, d), fv in zip(cells, F)]


def drive_strength_per_flux(sq):
    """A / delta_phi for the qubit transition (rad/ns per rad)."""
    return abs(TWO_PI * sq.drive[0, 1])


def bloch_trajectory(params, omega_d, delta_phi, psi0=(1, 0), which="b", n_levels=6, n_samples=201, n_periods=1):
    """Lab-frame Bloch vector of the qubit during an identity pulse.

    Returns rows (t_ns, x, y, z) of the state projected on the two lowest
    levels, with z = P_0 - P_1.
    """
    sq = single_qubit(params, which, n_levels)
    psi = np.zeros(n_levels, dtype=complex)
    psi[:2] = np.asarray(psi0, dtype=complex) / np.linalg.norm(psi0)
    tau = TWO_PI * n_periods / omega_d
    ts = np.linspace(0.0, tau, n_samples)
    t, Y = single_qubit_propagator(sq, omega_d, delta_phi, n_periods, sample_times=ts, psi0=psi)
    rows = []
    for tk, y in zip(t, Y[:, :, 0]):
        a, b = y[0], y[1]
        rows.append((float(tk), float(2 * (a.conjugate() * b).real), float(2 * (a.conjugate() * b).imag),
                     float(abs(a) ** 2 - abs(b) ** 2)))
    return rows
