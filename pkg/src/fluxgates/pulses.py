"""Magnus-expansion pulse design for identity and sqrt(iSWAP) gates.

Conventions: angular frequencies in rad/ns, times in ns, fluxes in radians.
R_Z(theta) = exp(-i theta Z/2) with Z|0> = +|0>; two-qubit basis order
|00>, |01>, |10>, |11> with qubit a first. The driven two-level subspaces
{|00>,|11>} (label +) and {|01>,|10>} (label -) evolve under

    H_pm = -(omega_pm/2) Sigma_z + A sin(omega_d t) Sigma_x.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.optimize import brentq, minimize_scalar
from scipy.special import j0

from .errors import DegenerateDrive, InvalidParameters, NotAPhiSwap, ScheduleInfeasible, ValidityWarning
from .params import FluxPoint

TWO_PI = 2 * np.pi
SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SY = np.array([[0.0, -1j], [1j, 0.0]])
SZ = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)
S2 = 1 / np.sqrt(2)
SQRT_ISWAP = np.array([[1, 0, 0, 0], [0, S2, 1j * S2, 0], [0, 1j * S2, S2, 0], [0, 0, 0, 1]], dtype=complex)
RESONANCE_GUARD = 1e-6
MAX_IDENTITY_FLUX = 0.1 * TWO_PI


@dataclass(frozen=True)
class PulseSpec:
    """Single-tone flux pulse delta_phi sin(omega_d (t - t_start)) on one line.

    ``amplitude`` is the effective drive strength A (rad/ns) that the pulse
    produces in the computational subspace; ``delta_phi`` the raw flux
    amplitude (rad).
    """
    line: str
    amplitude: float
    delta_phi: float
    omega_d: float
    n_periods: int
    t_start: float = 0.0

    def __post_init__(self):
        if self.line not in ("a", "b", "c"):
            raise InvalidParameters(f"line must be 'a', 'b' or 'c', got {self.line!r}")
        if not (self.omega_d > 0 and math.isfinite(self.omega_d)):
            raise InvalidParameters("omega_d must be positive")
        if int(self.n_periods) != self.n_periods or self.n_periods < 1:
            raise InvalidParameters("n_periods must be a positive integer")

    @property
    def duration(self):
        return TWO_PI * self.n_periods / self.omega_d

    @property
    def t_end(self):
        return self.t_start + self.duration

    def flux(self, t):
        """Flux displacement at time(s) t; zero outside the pulse window."""
        t = np.asarray(t, dtype=float)
        inside = (t >= self.t_start) & (t <= self.t_end)
        return np.where(inside, self.delta_phi * np.sin(self.omega_d * (t - self.t_start)), 0.0)

    def at(self, t_start):
        return PulseSpec(self.line, self.amplitude, self.delta_phi, self.omega_d, self.n_periods, t_start)

    def to_dict(self):
        return {"kind": "pulse", "line": self.line, "amplitude_GHz": self.amplitude / TWO_PI,
                "delta_phi_over_2pi": self.delta_phi / TWO_PI, "frequency_GHz": self.omega_d / TWO_PI,
                "n_periods": int(self.n_periods), "duration_ns": self.duration}


@dataclass(frozen=True)
class Idle:
    duration: float

    def __post_init__(self):
        if not self.duration >= 0:
            raise InvalidParameters("idle duration must be non-negative")

    def to_dict(self):
        return {"kind": "idle", "duration_ns": self.duration}


def _segment_from_dict(d):
    if d.get("kind") == "idle":
        return Idle(float(d["duration_ns"]))
    if d.get("kind") == "pulse":
        return PulseSpec(d["line"], TWO_PI * d["amplitude_GHz"], TWO_PI * d["delta_phi_over_2pi"],
                         TWO_PI * d["frequency_GHz"], int(d["n_periods"]))
    raise InvalidParameters(f"unknown segment kind {d.get('kind')!r}")


@dataclass
class GateSchedule:
    """Serial sequence of pulses and idle intervals implementing sqrt(iSWAP).

    While a pulse acts on one qubit line, the other qubit idles. ``z_angles``
    holds theta_a1, theta_b1, theta_a2, theta_b2; the ideal gate is
    R_Z^a(theta_a1) R_Z^b(theta_b1) U_swap R_Z^a(theta_a2) R_Z^b(theta_b2).
    """
    segments: list
    alpha: float
    beta: float
    gamma: float
    z_angles: dict
    flux: FluxPoint = None
    metadata: dict = field(default_factory=dict)

    @property
    def total_time(self):
        return float(sum(s.duration for s in self.segments))

    def pulses(self):
        """Pulses with absolute start times."""
        out, t = [], 0.0
        for s in self.segments:
            if isinstance(s, PulseSpec):
                out.append(s.at(t))
            t += s.duration
        return out

    def boundaries(self):
        return np.cumsum([0.0] + [s.duration for s in self.segments])

    def to_dict(self):
        return {"segments": [s.to_dict() for s in self.segments],
                "phases": {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma},
                "z_angles": dict(self.z_angles), "total_time_ns": self.total_time,
                "flux": None if self.flux is None else self.flux.to_dict(),
                "metadata": dict(self.metadata)}

    @classmethod
    def from_dict(cls, d):
        try:
            segs = [_segment_from_dict(s) for s in d["segments"]]
            ph = d["phases"]
            flux = FluxPoint.from_dict(d["flux"]) if d.get("flux") else None
            return cls(segs, float(ph["alpha"]), float(ph["beta"]), float(ph["gamma"]),
                       {k: float(v) for k, v in d["z_angles"].items()}, flux, dict(d.get("metadata", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidParameters(f"bad gate schedule: {exc}") from None


def bessel_zero(k):
    """k-th positive zero of J_0 by bracketed root finding."""
    if int(k) != k or k < 1:
        raise InvalidParameters("Bessel-zero index k must be >= 1")
    return brentq(j0, (k - 0.75) * np.pi, (k + 0.25) * np.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps)


def identity_amplitude(omega_d, k=1):
    """Drive amplitude A = j_k omega_d / 2 of a single-period identity pulse."""
    return bessel_zero(k) * omega_d / 2


def identity_propagator_magnus(omega_q, A, omega_d):
    """First-order Magnus propagator of one drive period (lab frame = drive frame).

    U = cos(x) 1 + i sin(x) sigma_z,  x = (pi omega_q/omega_d) J_0(2A/omega_d).
    """
    if A < omega_q:
        warnings.warn("drive amplitude below qubit frequency: Magnus expansion in the drive "
                      "frame may be inaccurate", ValidityWarning, stacklevel=2)
    x = np.pi * omega_q / omega_d * j0(2 * A / omega_d)
    return np.cos(x) * I2 + 1j * np.sin(x) * SZ


def two_level_numeric(omega, A, omega_d, t_final, rtol=1e-11, atol=1e-12):
    """Numerically integrated propagator of -(omega/2) Z + A sin(omega_d t) X."""
    def rhs(t, y):
        H = -0.5 * omega * SZ + A * np.sin(omega_d * t) * SX
        return (-1j * H @ y.reshape(2, 2)).ravel()
    sol = solve_ivp(rhs, (0.0, t_final), I2.ravel(), method="DOP853", rtol=rtol, atol=atol,
                    t_eval=[t_final])
    return sol.y[:, -1].reshape(2, 2)


def swap_drive_frequency(omega_plus, n, m):
    """Drive frequency omega_d = n omega_+ / m, which makes xi_+ vanish."""
    if int(n) != n or int(m) != m or n < 1 or m < 1:
        raise InvalidParameters("n and m must be positive integers")
    if n == m:
        raise DegenerateDrive("m = n puts the drive on resonance with omega_+")
    return n * omega_plus / m


def swap_amplitude(omega_minus, omega_d, n):
    """Amplitude giving xi_- = +-pi/4 on the q = 0 branch.

    A = +-pi (omega_d^2 - omega_-^2) / (8 omega_d sin(pi n omega_-/omega_d)),
    with the sign chosen so that A > 0. Returns (A, sign of xi_-, gamma).
    """
    s = np.sin(np.pi * n * omega_minus / omega_d)
    if abs(s) < RESONANCE_GUARD:
        raise DegenerateDrive("sin(pi n omega_-/omega_d) vanishes; no swap amplitude")
    A = np.pi * (omega_d ** 2 - omega_minus ** 2) / (8 * omega_d * s)
    if abs(A) < 1e-15:
        raise DegenerateDrive("drive resonant with omega_-")
    sign = 1 if A > 0 else -1
    return abs(A), sign, 0.0 if sign > 0 else np.pi


def magnus_parameters(omega, A, omega_d, n):
    """(xi, eps, vartheta) of the two-level Magnus propagator over n periods.

    xi  = 2 A omega_d sin(pi n omega/omega_d) / (omega_d^2 - omega^2)
    eps = A^2 omega_d^2 sin(2 pi n omega/omega_d)/(omega_d^2 - omega^2)^2
          + A^2 pi n omega / (omega_d (omega_d^2 - omega^2))
    The resonant limits are used when |omega_d^2 - omega^2| < 1e-6 omega_d^2.
    """
    theta = np.pi * n * omega / omega_d
    D = omega_d ** 2 - omega ** 2
    if abs(D) < RESONANCE_GUARD * omega_d ** 2:
        xi = (-1) ** (n + 1) * np.pi * n * A / omega_d
        eps = -3 * np.pi * n * A ** 2 / (4 * omega_d ** 2)
    else:
        xi = 2 * A * omega_d * np.sin(theta) / D
        eps = A ** 2 * omega_d ** 2 * np.sin(2 * theta) / D ** 2 + A ** 2 * np.pi * n * omega / (omega_d * D)
    return xi, eps, theta


def two_level_propagator(omega, A, omega_d, n):
    """Lab-frame propagator after n drive periods and its (xi, eps, vartheta).

    U = e^{i vartheta Z/2} exp(-i(-xi Sigma_y + eps Sigma_z)) e^{i vartheta Z/2},
    which agrees with e^{i vartheta Z}(cos xi - i eps sinc(xi) Z) + i sin(xi) Y
    to the order kept in the expansion and is exactly unitary.
    """
    if abs(A) > 0.1 * abs(omega) and omega != 0:
        warnings.warn("A/omega > 0.1: second-order Magnus propagator may be inaccurate",
                      ValidityWarning, stacklevel=2)
    xi, eps, theta = magnus_parameters(omega, A, omega_d, n)
    F = np.diag(np.exp(0.5j * theta * np.array([1.0, -1.0])))
    U = F @ expm(-1j * (-xi * SY + eps * SZ)) @ F
    return U, xi, eps, theta


def phi_swap_phases(omega_plus, omega_minus, A, omega_d, n, tol=1e-6):
    """Phases (alpha, beta, gamma) of the realized sqrt(phi SWAP).

    alpha = vartheta_+ - eps_+, beta = vartheta_- - 4 eps_-/pi, gamma = 0 for
    xi_- = +pi/4 and pi for xi_- = -pi/4.
    """
    xi_p, eps_p, th_p = magnus_parameters(omega_plus, A, omega_d, n)
    xi_m, eps_m, th_m = magnus_parameters(omega_minus, A, omega_d, n)
    if abs(np.sin(xi_p)) > tol:
        raise NotAPhiSwap(f"xi_+ = {xi_p:.3e} is not a multiple of pi")
    if abs(abs(xi_m) - np.pi / 4) > tol:
        raise NotAPhiSwap(f"|xi_-| = {abs(xi_m):.6f} differs from pi/4")
    return th_p - eps_p, th_m - 4 * eps_m / np.pi, 0.0 if xi_m > 0 else np.pi


def phi_swap_matrix(alpha, beta, gamma):
    """sqrt(phi SWAP) parametrized by (alpha, beta, gamma)."""
    U = np.zeros((4, 4), dtype=complex)
    U[0, 0], U[3, 3] = np.exp(1j * alpha), np.exp(-1j * alpha)
    U[1, 1], U[2, 2] = S2 * np.exp(1j * beta), S2 * np.exp(-1j * beta)
    U[1, 2], U[2, 1] = S2 * np.exp(1j * gamma), -S2 * np.exp(-1j * gamma)
    return U


def rz(theta):
    return np.diag(np.exp(-0.5j * theta * np.array([1.0, -1.0])))


def rz_a(theta):
    return np.kron(rz(theta), I2)


def rz_b(theta):
    return np.kron(I2, rz(theta))


def z_rotation_angles(alpha, beta, gamma, theta_b2):
    """(theta_a1, theta_b1, theta_a2) turning sqrt(phi SWAP) into sqrt(iSWAP), mod 2 pi.

    theta_a1 = -pi/2 + alpha + gamma - theta_b2
    theta_b1 = alpha - beta - theta_b2
    theta_a2 = pi/2 + beta - gamma + theta_b2
    """
    a1 = -np.pi / 2 + alpha + gamma - theta_b2
    b1 = alpha - beta - theta_b2
    a2 = np.pi / 2 + beta - gamma + theta_b2
    return tuple(float(np.mod(v, TWO_PI)) for v in (a1, b1, a2))


def compose_gate(U_swap, z_angles):
    """R_Z^a(a1) R_Z^b(b1) U_swap R_Z^a(a2) R_Z^b(b2)."""
    z = z_angles
    return rz_a(z["theta_a1"]) @ rz_b(z["theta_b1"]) @ U_swap @ rz_a(z["theta_a2"]) @ rz_b(z["theta_b2"])


def idle_times(omega_a, omega_b, alpha, beta, gamma, theta_b2):
    """Free-evolution times (t_a1, t_b1, t_a2, t_b2) realizing the Z angles.

    Free evolution for time t under -(omega/2) Z is R_Z(-omega t), hence
    t = (-theta/omega) mod (2 pi/omega).
    """
    theta_b2 = np.asarray(theta_b2, dtype=float)
    a1 = -np.pi / 2 + alpha + gamma - theta_b2
    b1 = alpha - beta - theta_b2
    a2 = np.pi / 2 + beta - gamma + theta_b2
    Ta, Tb = TWO_PI / omega_a, TWO_PI / omega_b
    return (np.mod(-a1 / omega_a, Ta), np.mod(-b1 / omega_b, Tb),
            np.mod(-a2 / omega_a, Ta), np.mod(-theta_b2 / omega_b, Tb))


def _total_time(T_swap, t):
    return T_swap + np.maximum(t[0], t[1]) + np.maximum(t[2], t[3])


def choose_theta_b2(omega_a, omega_b, alpha, beta, gamma, T_swap, step=1e-3, tol_ns=1e-6):
    """Free angle theta_b2 minimizing the total gate time.

    Dense grid over [0, 2 pi). The total time is typically flat over a range of
    theta_b2; within the minimizing set a point where the idle times before
    (t_a2 = t_b2) or after (t_a1 = t_b1) the swap coincide is preferred, so
    that only one identity pulse is needed. Such points are refined by root
    finding. Returns (theta_b2, number of synchronized sides).
    """
    grid = np.arange(0.0, TWO_PI, step)
    t = idle_times(omega_a, omega_b, alpha, beta, gamma, grid)
    tt = _total_time(T_swap, t)
    tmin = tt.min()
    best = (float(grid[np.argmin(tt)]), 0)
    for side in (1, 0):  # side 1: before the swap (a2, b2); side 0: after (a1, b1)
        mis = t[2 * side] - t[2 * side + 1]
        for k in np.flatnonzero(np.sign(mis[1:]) != np.sign(mis[:-1])):
            if max(tt[k], tt[k + 1]) > tmin + 1e-3 or abs(mis[k] - mis[k + 1]) > 1.0:
                continue  # outside the flat minimum, or a modulo wrap

            def f(x, side=side):
                v = idle_times(omega_a, omega_b, alpha, beta, gamma, x)
                return float(v[2 * side] - v[2 * side + 1])
            x = brentq(f, grid[k], grid[k + 1], xtol=1e-14)
            tx = float(_total_time(T_swap, idle_times(omega_a, omega_b, alpha, beta, gamma, x)))
            if tx <= tmin + tol_ns:
                v = idle_times(omega_a, omega_b, alpha, beta, gamma, x)
                sync = int(abs(v[0] - v[1]) < 1e-9) + int(abs(v[2] - v[3]) < 1e-9)
                if sync > best[1]:
                    best = (float(x), sync)
    return best


def calibrate_identity(omega_q, omega_d, A, n_periods=1, window=0.05):
    """Amplitude factor in [1-window, 1+window] maximizing the two-level identity fidelity."""
    tau = TWO_PI * n_periods / omega_d

    def infid(x):
        U = two_level_numeric(omega_q, A * x, omega_d, tau)
        return 1 - (2 + abs(np.trace(U)) ** 2) / 6
    r = minimize_scalar(infid, bounds=(1 - window, 1 + window), method="bounded",
                        options={"xatol": 1e-7})
    return float(r.x), float(r.fun)


def design_identity(tau, omega_q, Omega_ac, line, min_ratio=2.0, max_flux=MAX_IDENTITY_FLUX, calibrate=True):
    """Identity pulse of duration tau on one qubit line.

    The pulse consists of p drive periods with omega_d = 2 pi p / tau, p the
    smallest integer giving omega_d/omega_q >= min_ratio, and amplitude
    A = j_k omega_d/2 with the smallest k whose flux amplitude stays within
    ``max_flux``. Optionally the amplitude is refined (within 5%) on the
    numerically integrated two-level model.
    """
    if tau <= 0:
        raise InvalidParameters("identity duration must be positive")
    p = max(1, int(np.ceil(min_ratio * omega_q * tau / TWO_PI - 1e-12)))
    omega_d = TWO_PI * p / tau
    A = identity_amplitude(omega_d, 1)
    # with p periods the first-order condition is unchanged: each period is an identity
    factor = 1.0
    if calibrate:
        factor, _ = calibrate_identity(omega_q, omega_d, A, p)
        A *= factor
    dphi = A / (TWO_PI * abs(Omega_ac))
    if dphi > max_flux:
        raise ScheduleInfeasible(f"identity pulse of {tau:.3f} ns needs flux amplitude "
                                 f"{dphi / TWO_PI:.3f} Phi0 > {max_flux / TWO_PI:.3f} Phi0")
    return PulseSpec(line, A, dphi, omega_d, p), {"periods": p, "calibration_factor": factor,
                                                  "ratio": omega_d / omega_q}


def schedule_sqrt_iswap(omega_a, omega_b, J_ac, Omega_ac, n=2, m=8, theta_b2=None, flux=None,
                        min_ratio=2.0, max_flux=MAX_IDENTITY_FLUX, calibrate=True, step=1e-3):
    """Pulse schedule realizing sqrt(iSWAP) with the coupler drive.

    omega_a, omega_b: dressed angular qubit frequencies; J_ac: XX matrix
    element of the coupler drive (h*GHz); Omega_ac: dict {'a','b'} of the
    single-qubit X matrix elements of the qubit drives (h*GHz). The Z
    rotations are realized by free evolution; where the two qubits need
    different idle times, the faster-finishing qubit receives an identity
    pulse so both are ready together.
    """
    if omega_a <= omega_b:
        raise InvalidParameters("expected omega_a > omega_b (qubit a the higher-frequency qubit)")
    wp, wm = omega_a + omega_b, omega_a - omega_b
    wd = swap_drive_frequency(wp, n, m)
    A, xi_sign, gamma = swap_amplitude(wm, wd, n)
    alpha, beta, gamma = phi_swap_phases(wp, wm, A, wd, n)
    T = TWO_PI * n / wd
    sync = None
    if theta_b2 is None:
        theta_b2, sync = choose_theta_b2(omega_a, omega_b, alpha, beta, gamma, T, step)
    theta_b2 = float(np.mod(theta_b2, TWO_PI))
    a1, b1, a2 = z_rotation_angles(alpha, beta, gamma, theta_b2)
    ta1, tb1, ta2, tb2 = (float(v) for v in idle_times(omega_a, omega_b, alpha, beta, gamma, theta_b2))
    omegas = {"a": omega_a, "b": omega_b}
    meta = {"n": n, "m": m, "omega_a_GHz": omega_a / TWO_PI, "omega_b_GHz": omega_b / TWO_PI,
            "J_ac_GHz": J_ac, "Omega_ac_a_GHz": Omega_ac["a"], "Omega_ac_b_GHz": Omega_ac["b"],
            "xi_minus_sign": xi_sign, "swap_time_ns": T,
            "idle_times_ns": {"t_a1": ta1, "t_b1": tb1, "t_a2": ta2, "t_b2": tb2},
            "identity_pulses": []}

    def side(t_a, t_b):
        if abs(t_a - t_b) < 1e-6:
            return [Idle(max(t_a, t_b))] if max(t_a, t_b) > 0 else []
        q = "a" if t_a < t_b else "b"
        tau = abs(t_a - t_b)
        pulse, info = design_identity(tau, omegas[q], Omega_ac[q], q, min_ratio, max_flux, calibrate)
        meta["identity_pulses"].append(dict(info, line=q, duration_ns=tau))
        segs = [Idle(min(t_a, t_b))] if min(t_a, t_b) > 0 else []
        return segs + [pulse]

    swap = PulseSpec("c", A, A / (TWO_PI * J_ac), wd, n)
    segments = side(ta2, tb2) + [swap] + side(ta1, tb1)
    if sync is not None:
        meta["synchronized_sides"] = sync
    return GateSchedule(segments, float(alpha), float(beta), float(gamma),
                        {"theta_a1": a1, "theta_b1": b1, "theta_a2": a2, "theta_b2": theta_b2},
                        flux, meta)


def ideal_schedule_gate(schedule):
    """Ideal-propagator composition R_Z . sqrt(phi SWAP) . R_Z of a schedule."""
    return compose_gate(phi_swap_matrix(schedule.alpha, schedule.beta, schedule.gamma), schedule.z_angles)
