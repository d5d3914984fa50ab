"""Simulation of heavy-fluxonium qubits coupled by a flux-tunable coupler.

Modules: circuit (Hamiltonian construction), spectrum (diagonalization and
labeling), effective (Schrieffer-Wolff effective model), pulses (Magnus pulse
design), dynamics (time-domain simulation and fidelities) and cli.
"""
from .params import CircuitParams, DisorderParams, FluxPoint, load_device

__all__ = ["CircuitParams", "DisorderParams", "FluxPoint", "load_device"]
__version__ = "0.1.0"
