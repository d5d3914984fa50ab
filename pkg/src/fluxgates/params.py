"""Device parameters, disorder and flux bias points.

Energies are in h*GHz, fluxes in radians of reduced flux (2*pi*Phi/Phi0).
"""
import json
import math
from dataclasses import asdict, dataclass, fields

from .errors import InvalidParameters


@dataclass(frozen=True)
class CircuitParams:
    E_Ja: float
    E_Jb: float
    E_Ca: float
    E_Cb: float
    E_L: float
    E_Jc: float
    E_Lprime: float
    E_Cminus: float
    E_Cplus: float

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise InvalidParameters(f"{f.name} must be a number, got {v!r}")
            if not math.isfinite(v) or v <= 0:
                raise InvalidParameters(f"{f.name} must be positive and finite, got {v}")
        if self.E_Cplus <= self.E_Cminus:
            raise InvalidParameters("E_Cplus must exceed E_Cminus (finite junction capacitance)")

    @property
    def E_Lc(self):
        """Coupler inductive energy, the mean of E_L and E_Lprime."""
        return 0.5 * (self.E_L + self.E_Lprime)

    @classmethod
    def reference(cls):
        """Reference heavy-fluxonium device used throughout the examples."""
        return cls(E_Ja=4.6, E_Jb=5.5, E_Ca=0.9, E_Cb=0.9, E_L=0.21,
                   E_Jc=3.0, E_Lprime=2.0, E_Cminus=14.3, E_Cplus=100.0)

    def replace(self, **kw):
        d = asdict(self)
        d.update(kw)
        return CircuitParams(**d)

    def qubit(self, which):
        """(E_J, E_C) of qubit 'a' or 'b'."""
        if which == "a":
            return self.E_Ja, self.E_Ca
        if which == "b":
            return self.E_Jb, self.E_Cb
        raise InvalidParameters(f"qubit must be 'a' or 'b', got {which!r}")


@dataclass(frozen=True)
class DisorderParams:
    """Relative deviations of the qubit inductors, coupler inductors and stray
    coupler capacitances."""
    dE_L: float = 0.0
    dE_Lprime: float = 0.0
    dC: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidParameters(f"{f.name} must be a finite number")
            if abs(v) >= 0.2:
                raise InvalidParameters(f"|{f.name}| must be < 0.2 for perturbative validity")

    @property
    def is_zero(self):
        return self.dE_L == 0 and self.dE_Lprime == 0 and self.dC == 0


@dataclass(frozen=True)
class FluxPoint:
    """External reduced fluxes of qubit a, qubit b and the coupler loop."""
    phi_a: float
    phi_b: float
    phi_c: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise InvalidParameters(f"{f.name} must be finite")

    @property
    def delta_phi_a(self):
        return self.phi_a - math.pi

    @property
    def delta_phi_b(self):
        return self.phi_b - math.pi

    @classmethod
    def from_shifts(cls, delta_phi_a, delta_phi_b, phi_c):
        return cls(math.pi + delta_phi_a, math.pi + delta_phi_b, phi_c)

    def to_dict(self):
        return {"phi_a_over_2pi": self.phi_a / (2 * math.pi),
                "phi_b_over_2pi": self.phi_b / (2 * math.pi),
                "phi_c_over_2pi": self.phi_c / (2 * math.pi)}

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(2 * math.pi * d["phi_a_over_2pi"], 2 * math.pi * d["phi_b_over_2pi"],
                       2 * math.pi * d["phi_c_over_2pi"])
        except (KeyError, TypeError) as exc:
            raise InvalidParameters(f"bad flux point: {exc}") from None


_CIRCUIT_KEYS = {f.name for f in fields(CircuitParams)}
_DISORDER_KEYS = {f.name for f in fields(DisorderParams)}


def device_from_dict(d):
    """Parse a device dictionary into (CircuitParams, DisorderParams).

    Unknown keys are rejected rather than ignored.
    """
    if not isinstance(d, dict):
        raise InvalidParameters("device description must be a JSON object")
    unknown = set(d) - _CIRCUIT_KEYS - {"disorder"}
    if unknown:
        raise InvalidParameters(f"unknown device keys: {sorted(unknown)}")
    missing = _CIRCUIT_KEYS - set(d)
    if missing:
        raise InvalidParameters(f"missing device keys: {sorted(missing)}")
    params = CircuitParams(**{k: d[k] for k in _CIRCUIT_KEYS})
    dis = d.get("disorder", {}) or {}
    if not isinstance(dis, dict):
        raise InvalidParameters("disorder must be an object")
    unknown = set(dis) - _DISORDER_KEYS
    if unknown:
        raise InvalidParameters(f"unknown disorder keys: {sorted(unknown)}")
    return params, DisorderParams(**dis)


def load_device(path):
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidParameters(f"{path}: invalid JSON ({exc})") from None
    return device_from_dict(d)


def device_to_dict(params, disorder=None):
    d = asdict(params)
    if disorder is not None and not disorder.is_zero:
        d["disorder"] = asdict(disorder)
    return d
