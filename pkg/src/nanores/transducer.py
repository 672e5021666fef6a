"""Transduction figures of merit for an exciton dipole coupled to a
high-impedance half-wave resonator.

Rates and couplings are returned as ordinary frequencies (Hz), i.e. the
angular quantity divided by 2 pi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from nanores.constants import E_CHARGE, EPS0, HBAR, TWO_PI


@dataclass(frozen=True)
class TransducerParams:
    """Inputs for the coupling-strength chain.

    ``mode_frequency`` is omega_m / 2 pi in Hz.  ``dipole_enm`` is |d|/e in nm.
    """

    mode_frequency: float = 10e9
    Z_c: float = 5477.0
    C_res: float = 3e-15
    h_GaAs: float = 100e-9
    dipole_enm: float = 4.0
    eps_eff: float = 6.3
    eps_GaAs: float = 12.8
    gamma_qd: float = 300e6
    kappa: float = 0.0

    def __post_init__(self):
        for name in ("mode_frequency", "Z_c", "C_res", "h_GaAs", "eps_eff", "eps_GaAs", "gamma_qd"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.dipole_enm < 0 or self.kappa < 0:
            raise ValueError("dipole and kappa must be non-negative")

    @property
    def omega_m(self) -> float:
        return TWO_PI * self.mode_frequency

    @property
    def dipole(self) -> float:
        """|d| in C m."""
        return dipole_from_enm(self.dipole_enm)


@dataclass(frozen=True)
class ChargeNoiseModel:
    h_gap: float
    area: float
    delta_n: float  # 1/m^2

    @property
    def delta_Q(self) -> float:
        return E_CHARGE * self.delta_n * self.area


@dataclass(frozen=True)
class PiezoLossModel:
    r_loss: float
    C_g: float
    C_res: float

    def __post_init__(self):
        if not 0 < self.r_loss < 1:
            raise ValueError("r_loss must lie in (0, 1)")
        if self.C_g < 0 or not self.C_res > 0:
            raise ValueError("capacitances must be positive")


def dipole_from_enm(d_enm: float) -> float:
    return d_enm * E_CHARGE * 1e-9


def quarter_wave_input_impedance(Z_c: float, Z_L: float) -> float:
    """Input impedance Z_c^2 / Z_L of a quarter-wave line terminated in Z_L."""
    if not (Z_c > 0 and Z_L > 0):
        raise ValueError("impedances must be positive")
    return Z_c * Z_c / Z_L


def local_impedance(x_b: float, Z_c: float) -> float:
    """Standing-wave impedance Z_c cot(2 pi x_b) at a tap ``x_b`` (in wavelengths)
    from the voltage antinode."""
    if not 0 < x_b < 0.5:
        raise ValueError(f"x_b must lie in (0, 0.5) wavelengths, got {x_b!r}")
    s = math.sin(TWO_PI * x_b)
    if abs(s) < 1e-15:
        raise ValueError("local impedance diverges at a voltage antinode")
    z = Z_c * math.cos(TWO_PI * x_b) / s
    if abs(x_b - 0.25) < 1e-15:
        return 0.0
    return z


def bias_transmission(x_b: float, Z_c: float, Z_L: float) -> float:
    """Position-dependent leakage coefficient 2 Z_local / (Z_in + Z_local)."""
    z_in = quarter_wave_input_impedance(Z_c, Z_L)
    z_loc = local_impedance(x_b, Z_c)
    return 1.0 - (z_in - z_loc) / (z_in + z_loc)


def vacuum_voltage(omega_m: float, C_res: float) -> float:
    """Zero-point voltage sqrt(hbar omega / 2C) in V; ``omega_m`` in rad/s."""
    return math.sqrt(HBAR * omega_m / (2.0 * C_res))


def vacuum_field(V_vac: float, h_GaAs: float, eps_eff: float, eps_GaAs: float) -> float:
    return math.sqrt(eps_eff / eps_GaAs) * V_vac / h_GaAs


def coupling_strength_g0(params: TransducerParams) -> float:
    """Single-photon exciton-photon coupling g0 / 2 pi in Hz.

    Uses the half-wave relation C = pi / (2 omega Z_c), so the result depends
    on Z_c rather than on ``params.C_res``.
    """
    p = params
    energy = (p.dipole / p.h_GaAs) * math.sqrt(
        (p.eps_eff / p.eps_GaAs) * HBAR * p.omega_m**2 * p.Z_c / math.pi
    )
    return energy / (TWO_PI * HBAR)


def cooperativity(g0: float, gamma_qd: float, kappa: float = 0.0) -> float:
    """4 g0^2 / (Gamma (Gamma + kappa)); all three rates in the same units."""
    if not gamma_qd > 0 or kappa < 0:
        raise ValueError("gamma_qd must be positive and kappa non-negative")
    return 4.0 * g0 * g0 / (gamma_qd * (gamma_qd + kappa))


def charge_noise_voltage(model: ChargeNoiseModel) -> float:
    """Gate voltage fluctuation from a fluctuating sheet of charge, in V."""
    return model.h_gap / (EPS0 * model.area) * model.delta_Q


def surface_density_from_voltage(delta_V: float, h_gap: float) -> float:
    """Fluctuating charge density (1/m^2) that produces ``delta_V`` across ``h_gap``."""
    return EPS0 * delta_V / (E_CHARGE * h_gap)


def parallel_plate_capacitance(area: float, thickness: float, eps_r: float) -> float:
    if not (area > 0 and thickness > 0 and eps_r > 0):
        raise ValueError("area, thickness and permittivity must be positive")
    return eps_r * EPS0 * area / thickness


def piezo_quality_factor(model: PiezoLossModel) -> float:
    """Quality factor limited by piezoelectric loss in the gate dielectric."""
    if model.C_g == 0:
        return math.inf
    return TWO_PI * (model.C_g + 4.0 * model.C_res) / (model.r_loss * model.C_g)


def piezo_loss_ratio(Q_piezo: float, C_g: float, C_res: float) -> float:
    """Invert :func:`piezo_quality_factor` for r_loss."""
    return TWO_PI * (C_g + 4.0 * C_res) / (Q_piezo * C_g)


def resonator_capacitance(C_l: float, length: float) -> float:
    """Effective lumped capacitance C_l l / 2 of a half-wave mode."""
    if not (C_l > 0 and length > 0):
        raise ValueError("C_l and length must be positive")
    return 0.5 * C_l * length


def resonator_inductance(L_l: float, length: float) -> float:
    """Lumped inductance 2 L_l l / pi^2 paired with :func:`resonator_capacitance`."""
    return 2.0 * L_l * length / math.pi**2
