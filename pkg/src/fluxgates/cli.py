"""Command-line driver producing plot-ready CSV/JSON data.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""
import argparse
import csv
import json
import os
import sys
import warnings

import numpy as np

from . import dynamics, effective, pulses, spectrum
from .errors import InvalidParameters, NumericalError, ValidationError
from .params import CircuitParams, DisorderParams, FluxPoint, load_device

TWO_PI = 2 * np.pi
WORKERS_ENV = "FLUXGATES_WORKERS"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, (np.floating, float)):
        return float(o)
    if isinstance(o, (np.integer, int)) and not isinstance(o, bool):
        return int(o)
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    return o


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _grid(lo, hi, n, name):
    if n is None or int(n) < 1:
        raise InvalidParameters(f"{name}: grid must contain at least one point")
    if int(n) > 1 and not hi > lo:
        raise InvalidParameters(f"{name}: grid must be increasing")
    return np.linspace(lo, hi, int(n))


def _values(vals, name):
    vals = [float(v) for v in vals] if vals is not None else []
    if not vals:
        raise InvalidParameters(f"{name}: empty grid")
    if any(b <= a for a, b in zip(vals[:-1], vals[1:])):
        raise InvalidParameters(f"{name}: grid must be strictly increasing")
    return vals


class Run:
    """Shared state of one CLI invocation: device, output directory, manifest."""

    def __init__(self, args):
        self.args = args
        if args.device:
            self.params, self.disorder = load_device(args.device)
        else:
            self.params, self.disorder = CircuitParams.reference(), DisorderParams()
        self.out = args.out
        os.makedirs(self.out, exist_ok=True)
        if not os.access(self.out, os.W_OK):
            raise InvalidParameters(f"output directory {self.out} is not writable")
        self.workers = args.workers
        if self.workers < 1:
            raise InvalidParameters("worker count must be >= 1")

    def path(self, name):
        return os.path.join(self.out, name)

    def record(self, name, **entry):
        """Add a file description to manifest.json in the output directory."""
        mpath = self.path("manifest.json")
        manifest = {}
        if os.path.exists(mpath):
            with open(mpath) as fh:
                manifest = json.load(fh)
        entry["device"] = self.args.device or "reference"
        manifest[name] = entry
        write_json(mpath, manifest)


def _disorder(run):
    return None if run.disorder.is_zero else run.disorder


def cmd_spectrum(run, a):
    phis = _grid(a.phi_c_min, a.phi_c_max, a.points, "phi_c")
    contour = [effective.contour_point(run.params, TWO_PI * x) for x in phis]
    table = spectrum.spectrum_along_contour(run.params, contour, a.levels, _disorder(run))
    spectrum.write_spectrum_csv(run.path("spectrum.csv"), table)
    run.record("spectrum.csv", command="spectrum", figure="low-energy spectrum along the sweet-spot contour",
               x="phi_c_over_2pi", y="energies relative to ground state (h*GHz)")
    rows = []
    for x, fp in zip(phis, contour):
        E = np.linalg.eigvalsh(effective.effective_params(run.params, fp).hamiltonian())
        rows.append([x] + list(E - E[0]))
    write_csv(run.path("spectrum_effective.csv"), ["phi_c_over_2pi", "E_0", "E_1", "E_2", "E_3"], rows)
    run.record("spectrum_effective.csv", command="spectrum", figure="effective-model spectrum along the contour",
               x="phi_c_over_2pi", y="energies relative to ground state (h*GHz)")
    print(f"wrote {len(phis)} contour points")


def cmd_coupling_sweep(run, a):
    phis = _grid(a.phi_c_min, a.phi_c_max, a.points, "phi_c")
    rows = []
    for x in phis:
        e = effective.effective_params(run.params, TWO_PI * x)
        rows.append([x, e.J * 1e3, e.J_minus * 1e3, e.J_plus * 1e3, e.chi_a * 1e3, e.chi_b * 1e3,
                     e.omega_a_prime / TWO_PI * 1e3, e.omega_b_prime / TWO_PI * 1e3])
    write_csv(run.path("coupling_sweep.csv"),
              ["phi_c_over_2pi", "J_MHz", "J_minus_MHz", "J_plus_MHz", "chi_a_MHz", "chi_b_MHz",
               "omega_a_prime_MHz", "omega_b_prime_MHz"], rows)
    run.record("coupling_sweep.csv", command="coupling-sweep", figure="XX coupling along the contour",
               x="phi_c_over_2pi", y="J_MHz")
    print(f"wrote {len(rows)} rows")


def cmd_sensitivity_map(run, a):
    ejc = _values(a.ejc, "E_Jc")
    ecm = _values(a.ecm, "E_Cminus")
    rows = effective.sensitivity_map(run.params, ejc, ecm, run.workers)
    write_csv(run.path("sensitivity_map.csv"), ["E_Jc", "E_Cminus", "dJdPhi_MHz_per_Phi0", "chi_a_MHz"], rows)
    run.record("sensitivity_map.csv", command="sensitivity-map", figure="flux sensitivity and Lamb shift map",
               x="E_Jc", y="E_Cminus", z=["dJdPhi_MHz_per_Phi0", "chi_a_MHz"])
    print(f"wrote {len(rows)} grid cells")


def cmd_off_position(run, a):
    modes = ["effective", "exact"] if a.mode == "both" else [a.mode]
    report = {}
    for mode in modes:
        fp = effective.find_off_position(run.params, mode)
        es, _ = spectrum.full_eigensystem(run.params, fp, 8, _disorder(run))
        E = spectrum.computational_energies(es)
        report[mode] = {"flux": fp.to_dict(), "J_MHz": effective.coupling_strength(run.params, fp)[0] * 1e3,
                        "omega_a_prime_MHz": (E[2] - E[0]) * 1e3, "omega_b_prime_MHz": (E[1] - E[0]) * 1e3,
                        "zeta_kHz": spectrum.zz_strength(es) * 1e6}
        print(f"{mode}: phi_c/2pi = {fp.phi_c / TWO_PI:.5f}")
    write_json(run.path("off_position.json"), report)
    run.record("off_position.json", command="off-position", figure="off-position flux point")


def cmd_identity_scan(run, a):
    ratios = _grid(a.ratio_min, a.ratio_max, a.ratio_points, "ratio")
    dphis = TWO_PI * _grid(a.dphi_min, a.dphi_max, a.dphi_points, "delta_phi")
    rows = dynamics.identity_scan(run.params, ratios, dphis, a.qubit, a.levels, run.workers)
    write_csv(run.path("identity_scan.csv"), ["omega_d_over_omega_q", "delta_phi_over_2pi", "fidelity"], rows)
    run.record("identity_scan.csv", command="identity-scan", figure="identity-gate fidelity map",
               x="omega_d_over_omega_q", y="delta_phi_over_2pi", z="fidelity")
    print(f"wrote {len(rows)} grid points")


_STATES = {"0": (1, 0), "1": (0, 1), "+": (1, 1), "-": (1, -1), "+i": (1, 1j), "-i": (1, -1j)}


def cmd_bloch_traj(run, a):
    if a.state not in _STATES:
        raise InvalidParameters(f"state must be one of {sorted(_STATES)}")
    sq = dynamics.single_qubit(run.params, a.qubit, a.levels)
    wd = a.ratio * sq.omega_q
    A = pulses.identity_amplitude(wd, a.k)
    dphi = A / dynamics.drive_strength_per_flux(sq)
    rows = dynamics.bloch_trajectory(run.params, wd, dphi, _STATES[a.state], a.qubit, a.levels, a.samples)
    write_csv(run.path("bloch_traj.csv"), ["t_ns", "x", "y", "z"], rows)
    run.record("bloch_traj.csv", command="bloch-traj", figure="Bloch trajectory during an identity pulse",
               x="t_ns", y=["x", "y", "z"], ratio=a.ratio, k=a.k, delta_phi_over_2pi=dphi / TWO_PI)
    print(f"delta_phi/2pi = {dphi / TWO_PI:.5f}, F = "
          f"{dynamics.identity_fidelity(sq, wd, dphi):.7f}")


def _design_inputs(system):
    d, c = system.drives, system.comp
    w = TWO_PI * system.energies
    J_ac = 0.5 * (d["c"][c[0], c[3]] + d["c"][c[1], c[2]])
    return w[c[2]], w[c[1]], J_ac, {"a": d["a"][c[0], c[2]], "b": d["b"][c[0], c[1]]}


def cmd_gate_design(run, a):
    flux = effective.find_off_position(run.params, "exact")
    system = dynamics.build_driven_system(run.params, flux, 8, _disorder(run))
    wa, wb, J_ac, Om = _design_inputs(system)
    sched = pulses.schedule_sqrt_iswap(wa, wb, J_ac, Om, a.n, a.m, a.theta_b2, flux,
                                       calibrate=not a.no_calibrate)
    write_json(run.path(a.output), sched.to_dict())
    run.record(a.output, command="gate-design", figure="sqrt(iSWAP) pulse schedule")
    swap = sched.segments[[isinstance(s, pulses.PulseSpec) and s.line == "c" for s in sched.segments].index(True)]
    print(f"omega_d/2pi = {swap.omega_d / TWO_PI * 1e3:.3f} MHz, A/2pi = {swap.amplitude / TWO_PI * 1e3:.3f} MHz, "
          f"swap {swap.duration:.2f} ns, total {sched.total_time:.2f} ns")


def cmd_gate_sim(run, a):
    if a.schedule is None:
        raise InvalidParameters("gate-sim requires --schedule")
    try:
        with open(a.schedule) as fh:
            sched = pulses.GateSchedule.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameters(f"cannot read schedule: {exc}") from None
    flux = sched.flux or effective.find_off_position(run.params, "exact")
    system = dynamics.build_driven_system(run.params, flux, a.n_states, _disorder(run))
    T = sched.total_time
    ts = np.linspace(0.0, T, a.samples)
    res = dynamics.propagate_unitary(system, sched.pulses(), T, rtol=a.tol, atol=a.tol * 1e-2,
                                     initial=system.comp, sample_times=ts)
    U = res.U[system.comp]
    report = {"closed_fidelity": dynamics.closed_fidelity(U, pulses.SQRT_ISWAP), "leakage": res.leakage,
              "unitarity_defect": res.unitarity_defect, "truncation_population": res.truncation_population,
              "total_time_ns": T, "n_states": system.n_states, "tol": a.tol, "population_traces": []}
    c = system.comp
    for j, lab in enumerate(("00", "01", "10", "11")):
        P = res.populations[:, :, j]
        rows = [[t] + list(P[k, c]) + [1 - P[k, c].sum()] for k, t in enumerate(ts)]
        name = f"populations_{lab}.csv"
        write_csv(run.path(name), ["t_ns", "P_00", "P_01", "P_10", "P_11", "P_leak"], rows)
        run.record(name, command="gate-sim", figure=f"populations during the gate, initial state |{lab}>",
                   x="t_ns", y=["P_00", "P_01", "P_10", "P_11", "P_leak"])
        report["population_traces"].append(name)
    if a.open != "none":
        rates = dynamics.DecoherenceRates.named(a.open)
        ch = dynamics.computational_channel(system, sched.pulses(), rates, T, a.tol, a.tol * 1e-2, run.workers)
        chi = dynamics.process_tomography(ch, 4)
        report["open"] = {"rates": a.open,
                          "fidelity": dynamics.open_fidelity(chi, dynamics.unitary_process_matrix(pulses.SQRT_ISWAP)),
                          "physical": bool(chi.is_physical())}
    write_json(run.path(a.output), report)
    run.record(a.output, command="gate-sim", figure="gate fidelity report")
    print(f"closed F = {report['closed_fidelity']:.6f}" +
          (f", open F = {report['open']['fidelity']:.6f}" if "open" in report else ""))


COMMANDS = {"spectrum": cmd_spectrum, "coupling-sweep": cmd_coupling_sweep,
            "sensitivity-map": cmd_sensitivity_map, "off-position": cmd_off_position,
            "identity-scan": cmd_identity_scan, "bloch-traj": cmd_bloch_traj,
            "gate-design": cmd_gate_design, "gate-sim": cmd_gate_sim}


def build_parser():
    default_workers = os.environ.get(WORKERS_ENV, "1")
    try:
        default_workers = int(default_workers)
    except ValueError:
        default_workers = 0  # rejected in Run
    common = _Parser(add_help=False)
    common.add_argument("--device", help="device JSON (default: reference device)")
    common.add_argument("--config", help="JSON file with option defaults")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--workers", type=int, default=default_workers,
                        help=f"parallel workers (default ${WORKERS_ENV} or 1)")
    p = _Parser(prog="fluxgates", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("spectrum", parents=[common])
    s.add_argument("--phi-c-min", type=float, default=0.0)
    s.add_argument("--phi-c-max", type=float, default=0.5)
    s.add_argument("--points", type=int, default=51)
    s.add_argument("--levels", type=int, default=8)

    s = sub.add_parser("coupling-sweep", parents=[common])
    s.add_argument("--phi-c-min", type=float, default=0.05)
    s.add_argument("--phi-c-max", type=float, default=0.45)
    s.add_argument("--points", type=int, default=81)

    s = sub.add_parser("sensitivity-map", parents=[common])
    s.add_argument("--ejc", type=float, nargs="*", default=[1.0, 2.0, 3.0, 4.0, 5.0])
    s.add_argument("--ecm", type=float, nargs="*", default=[6.0, 10.0, 14.3, 20.0, 30.0])

    s = sub.add_parser("off-position", parents=[common])
    s.add_argument("--mode", choices=["effective", "exact", "both"], default="effective")

    s = sub.add_parser("identity-scan", parents=[common])
    s.add_argument("--qubit", choices=["a", "b"], default="b")
    s.add_argument("--ratio-min", type=float, default=0.5)
    s.add_argument("--ratio-max", type=float, default=7.0)
    s.add_argument("--ratio-points", type=int, default=60)
    s.add_argument("--dphi-min", type=float, default=0.0)
    s.add_argument("--dphi-max", type=float, default=0.12)
    s.add_argument("--dphi-points", type=int, default=60)
    s.add_argument("--levels", type=int, default=6)

    s = sub.add_parser("bloch-traj", parents=[common])
    s.add_argument("--qubit", choices=["a", "b"], default="b")
    s.add_argument("--ratio", type=float, default=3.3)
    s.add_argument("--k", type=int, default=1)
    s.add_argument("--state", default="+")
    s.add_argument("--samples", type=int, default=201)
    s.add_argument("--levels", type=int, default=6)

    s = sub.add_parser("gate-design", parents=[common])
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--m", type=int, default=8)
    s.add_argument("--theta-b2", type=float, default=None)
    s.add_argument("--no-calibrate", action="store_true")
    s.add_argument("--output", default="gate_schedule.json")

    s = sub.add_parser("gate-sim", parents=[common])
    s.add_argument("--schedule")
    s.add_argument("--open", choices=["none", "conservative", "optimistic"], default="none")
    s.add_argument("--n-states", type=int, default=54)
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--samples", type=int, default=1001)
    s.add_argument("--output", default="gate_report.json")
    return p


def _apply_config(parser, argv):
    """Re-parse with defaults taken from --config (explicit flags still win)."""
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidParameters(f"cannot read config: {exc}") from None
    if not isinstance(cfg, dict):
        raise InvalidParameters("config must be a JSON object")
    section = cfg.get(args.command, {})
    flat = {k: v for k, v in cfg.items() if not isinstance(v, dict)}
    merged = {k.replace("-", "_"): v for k, v in {**flat, **section}.items()}
    sub = parser._subparsers._group_actions[0].choices[args.command]
    known = {a.dest for a in sub._actions}
    unknown = set(merged) - known
    if unknown:
        raise InvalidParameters(f"unknown config keys for {args.command}: {sorted(unknown)}")
    sub.set_defaults(**merged)
    return parser.parse_args(argv)


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
        run = Run(args)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](run, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
