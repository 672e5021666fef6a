import math
import time

import mpmath
import pytest
from hypothesis import given, strategies as st

from nanores.constants import EPS0, MU0
from nanores.cpwgeom import (
    CpwGeometry,
    LineParams,
    complete_elliptic_integral_K,
    cpw_capacitance_per_length,
    effective_permittivity,
    geometric_inductance_per_length,
    kinetic_inductance_per_length,
    line_params,
)

NANOWIRE = CpwGeometry(w=70e-9, s=38e-6, eps_sub=11.6, L_ksheet=83e-12)


@pytest.mark.parametrize("k", [0.0, 0.1, 0.5, 0.9, 0.999, 1 - 1e-9, 1.84e-3])
def test_elliptic_K_matches_mpmath(k):
    with mpmath.workdps(40):
        ref = float(mpmath.ellipk(mpmath.mpf(k) ** 2))
    assert complete_elliptic_integral_K(k) == pytest.approx(ref, rel=1e-13)


def test_elliptic_K_frozen_values():
    assert complete_elliptic_integral_K(0.0) == pytest.approx(math.pi / 2, rel=1e-15)
    assert complete_elliptic_integral_K(0.5) == pytest.approx(1.685750354812596, rel=1e-14)


@pytest.mark.parametrize("k", [-0.1, 1.0, 1.5, math.nan])
def test_elliptic_K_domain(k):
    with pytest.raises(ValueError):
        complete_elliptic_integral_K(k)


def test_nanowire_capacitance_frozen():
    # 2 eps0 (eps+1) K(k)/K(k') with k = 70n / 76.07u
    assert cpw_capacitance_per_length(NANOWIRE) == pytest.approx(4.1837896464810494e-11, rel=1e-12)
    assert cpw_capacitance_per_length(NANOWIRE) == pytest.approx(40e-12, rel=0.05)


def test_nanowire_inductance_is_kinetic_dominated():
    lk = kinetic_inductance_per_length(NANOWIRE)
    assert lk == pytest.approx(83e-12 / 70e-9, rel=1e-15)
    lg = geometric_inductance_per_length(NANOWIRE)
    assert lg < 2e-3 * lk
    assert lk + lg == pytest.approx(1.2e-3, rel=0.02)


def test_line_params_consistency():
    lp = line_params(NANOWIRE)
    assert lp.Z_c == pytest.approx(math.sqrt(lp.L_l / lp.C_l), rel=1e-15)
    assert lp.v_ph == pytest.approx(1 / math.sqrt(lp.L_l * lp.C_l), rel=1e-15)
    assert lp.eps_eff == pytest.approx(6.3)
    assert 5000 < lp.Z_c < 6000


def test_nominal_line_impedance():
    lp = LineParams.from_lc(1.2e-3, 40e-12, 6.3)
    assert lp.Z_c == pytest.approx(5477.2255750516615, rel=1e-14)


def test_geometric_only_line_is_light_speed_over_sqrt_eps_eff():
    g = CpwGeometry(w=10e-6, s=6e-6, eps_sub=11.6)
    lp = line_params(g)
    c0 = 1 / math.sqrt(MU0 * EPS0)
    assert lp.v_ph == pytest.approx(c0 / math.sqrt(effective_permittivity(g)), rel=1e-9)


def test_capacitance_runtime_under_1ms():
    cpw_capacitance_per_length(NANOWIRE)
    n = 1000
    t = time.perf_counter()
    for _ in range(n):
        cpw_capacitance_per_length(NANOWIRE)
    assert (time.perf_counter() - t) / n < 1e-3


@pytest.mark.parametrize(
    "kw",
    [dict(w=0, s=1e-6, eps_sub=11.6), dict(w=1e-6, s=-1, eps_sub=11.6), dict(w=1e-6, s=1e-6, eps_sub=0.5),
     dict(w=1e-6, s=1e-6, eps_sub=11.6, L_ksheet=-1e-12)],
)
def test_invalid_geometry(kw):
    with pytest.raises(ValueError):
        CpwGeometry(**kw)


@given(
    w=st.floats(1e-8, 1e-4),
    s=st.floats(1e-7, 1e-4),
    eps=st.floats(1.0, 20.0),
)
def test_capacitance_monotone_in_gap_and_product_invariant(w, s, eps):
    a = CpwGeometry(w, s, eps)
    b = CpwGeometry(w, 1.5 * s, eps)
    assert cpw_capacitance_per_length(b) < cpw_capacitance_per_length(a)
    # C_l * L_geo = eps_eff / c0^2 for any geometry
    prod = cpw_capacitance_per_length(a) * geometric_inductance_per_length(a)
    assert prod == pytest.approx(effective_permittivity(a) * MU0 * EPS0, rel=1e-12)
