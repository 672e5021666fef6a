"""Coplanar-waveguide line parameters from conformal mapping.

The centre strip has width ``w`` and sits between two semi-infinite ground
planes a gap ``s`` away, on a half-space substrate of relative permittivity
``eps_sub``.  A thin superconducting film adds ``L_ksheet / w`` of kinetic
inductance per unit length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from nanores.constants import EPS0, MU0


@dataclass(frozen=True)
class CpwGeometry:
    w: float
    s: float
    eps_sub: float
    L_ksheet: float = 0.0

    def __post_init__(self):
        if not self.w > 0:
            raise ValueError(f"centre width must be positive, got {self.w!r}")
        if not self.s > 0:
            raise ValueError(f"gap must be positive, got {self.s!r}")
        if not self.eps_sub >= 1:
            raise ValueError(f"substrate permittivity must be >= 1, got {self.eps_sub!r}")
        if not self.L_ksheet >= 0:
            raise ValueError(f"sheet kinetic inductance must be >= 0, got {self.L_ksheet!r}")

    @property
    def modulus(self) -> float:
        return self.w / (self.w + 2.0 * self.s)


@dataclass(frozen=True)
class LineParams:
    C_l: float
    L_l: float
    Z_c: float
    eps_eff: float
    v_ph: float

    @classmethod
    def from_lc(cls, L_l: float, C_l: float, eps_eff: float) -> "LineParams":
        return cls(
            C_l=C_l,
            L_l=L_l,
            Z_c=math.sqrt(L_l / C_l),
            eps_eff=eps_eff,
            v_ph=1.0 / math.sqrt(L_l * C_l),
        )


def _agm(a: float, b: float) -> float:
    while True:
        a_next = 0.5 * (a + b)
        b = math.sqrt(a * b)
        if abs(a_next - a) <= 1e-15 * a_next:
            return a_next
        a = a_next


def complete_elliptic_integral_K(k: float) -> float:
    """Complete elliptic integral of the first kind, K(k), by AGM iteration.

    ``k`` is the modulus (not the parameter m = k**2).
    """
    if not 0.0 <= k < 1.0:
        raise ValueError(f"elliptic modulus must lie in [0, 1), got {k!r}")
    if k == 0.0:
        return math.pi / 2
    return math.pi / (2.0 * _agm(1.0, math.sqrt((1.0 - k) * (1.0 + k))))


def _k_ratio(geom: CpwGeometry) -> float:
    """K(k)/K(k') for the CPW modulus."""
    k = geom.modulus
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    return complete_elliptic_integral_K(k) / complete_elliptic_integral_K(kp)


def effective_permittivity(geom: CpwGeometry) -> float:
    return 0.5 * (geom.eps_sub + 1.0)


def cpw_capacitance_per_length(geom: CpwGeometry) -> float:
    """Capacitance per unit length in F/m."""
    return 2.0 * EPS0 * (geom.eps_sub + 1.0) * _k_ratio(geom)


def geometric_inductance_per_length(geom: CpwGeometry) -> float:
    return 0.25 * MU0 / _k_ratio(geom)


def kinetic_inductance_per_length(geom: CpwGeometry) -> float:
    return geom.L_ksheet / geom.w


def total_inductance_per_length(geom: CpwGeometry) -> float:
    """Geometric plus kinetic inductance per unit length in H/m."""
    return geometric_inductance_per_length(geom) + kinetic_inductance_per_length(geom)


def line_params(geom: CpwGeometry) -> LineParams:
    return LineParams.from_lc(
        L_l=total_inductance_per_length(geom),
        C_l=cpw_capacitance_per_length(geom),
        eps_eff=effective_permittivity(geom),
    )
