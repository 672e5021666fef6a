"""Transmission-line network simulation and design tools for coupled
high-impedance nanowire resonators with DC bias lines."""

from nanores.cpwgeom import CpwGeometry, LineParams, line_params
from nanores.netlist import (
    CircuitGraph,
    CoupledResonatorParams,
    Lumped,
    Port,
    TLineSegment,
    build_coupled_nanowire_circuit,
    validate,
)
from nanores.acsolver import SParameterSweep, compute_s_parameters, input_impedance
from nanores.resonance import Resonance, delta_kappa, find_complex_pole, find_peaks, lorentzian_fit


__version__ = "0.1.0"

__all__ = [
    "CircuitGraph",
    "CoupledResonatorParams",
    "CpwGeometry",
    "LineParams",
    "Lumped",
    "Port",
    "Resonance",
    "SParameterSweep",
    "TLineSegment",
    "build_coupled_nanowire_circuit",
    "compute_s_parameters",
    "delta_kappa",
    "find_complex_pole",
    "find_peaks",
    "input_impedance",
    "line_params",
    "lorentzian_fit",
    "validate",
]
