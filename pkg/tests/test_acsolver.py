import math
import time
from dataclasses import replace

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nanores.acsolver import (
    SolverError,
    SParameterSweep,
    assemble_nodal_matrix,
    compute_s_parameters,
    compute_s_parameters_omega,
    input_impedance,
    tline_two_port_admittance,
)
from nanores.netlist import (
    CircuitGraph,
    CoupledResonatorParams,
    Lumped,
    Port,
    TLineSegment,
    build_coupled_nanowire_circuit,
    mirror_graph,
)

F = np.linspace(1e9, 16e9, 301)


def _line(name, a, b, length, Z=100.0, v=1e8, R=0.0, G=0.0):
    return TLineSegment(name, a, b, length, Z / v, 1 / (Z * v), R, G)


def _quarter_wave(z_load=200.0, f0=5e9):
    zc = math.sqrt(50.0 * z_load)
    return CircuitGraph.from_parts(
        [_line("T", "in", "ld", 1e8 / (4 * f0), Z=zc), Lumped("RL", "R", "ld", "0", z_load)], [Port(1, "in", 50.0)]
    )


def test_series_capacitor_exact(kernel_backend):
    g = CircuitGraph.from_parts([Lumped("C", "C", "a", "b", 1e-15)], [Port(1, "a"), Port(2, "b")])
    f = np.array([1e9, 10e9])
    s = compute_s_parameters(g, f).s
    z = 1 / (1j * 2 * np.pi * f * 1e-15)
    np.testing.assert_allclose(s[:, 1, 0], 100 / (100 + z), rtol=1e-12)
    np.testing.assert_allclose(s[:, 0, 0], z / (100 + z), rtol=1e-12)
    assert abs(s[1, 1, 0]) == pytest.approx(6.2829e-3, rel=1e-3)


def test_shunt_resistor_exact(kernel_backend):
    g = CircuitGraph.from_parts([Lumped("R", "R", "a", "0", 25.0)], [Port(1, "a")])
    s = compute_s_parameters(g, [1e9]).s[0, 0, 0]
    assert s == pytest.approx((25 - 50) / (25 + 50), abs=1e-14)


def test_matched_line_is_delay(kernel_backend):
    length = 0.013
    g = CircuitGraph.from_parts([_line("T", "a", "b", length, Z=50.0)], [Port(1, "a"), Port(2, "b")])
    f = np.linspace(0.5e9, 9e9, 50)
    s = compute_s_parameters(g, f).s
    np.testing.assert_allclose(s[:, 0, 0], 0, atol=1e-12)
    np.testing.assert_allclose(s[:, 1, 0], np.exp(-1j * 2 * np.pi * f * length / 1e8), atol=1e-12)


def test_quarter_wave_transformer_match(kernel_backend):
    g = _quarter_wave()
    s = compute_s_parameters(g, [4e9, 5e9, 6e9]).s[:, 0, 0]
    assert abs(s[1]) < 1e-4
    assert abs(s[0]) > 1e-2 and abs(s[2]) > 1e-2
    assert input_impedance(g, 1, 2 * np.pi * 5e9) == pytest.approx(50.0, rel=1e-9)


def test_quarter_wave_input_impedance_general():
    g = CircuitGraph.from_parts(
        [_line("T", "in", "ld", 1e8 / (4 * 3e9), Z=5477.0), Lumped("RL", "R", "ld", "0", 50.0)], [Port(1, "in")]
    )
    assert input_impedance(g, 1, 2 * np.pi * 3e9) == pytest.approx(5477.0**2 / 50.0, rel=1e-9)


def test_cascade_consistency(kernel_backend):
    one = CircuitGraph.from_parts([_line("T", "a", "b", 3e-3)], [Port(1, "a"), Port(2, "b")])
    two = CircuitGraph.from_parts(
        [_line("T1", "a", "m", 1.1e-3), _line("T2", "m", "b", 1.9e-3)], [Port(1, "a"), Port(2, "b")]
    )
    np.testing.assert_allclose(compute_s_parameters(one, F).s, compute_s_parameters(two, F).s, atol=1e-9)


def test_lossy_cascade_consistency():
    kw = dict(Z=80.0, R=2e3, G=1e-3)
    one = CircuitGraph.from_parts([_line("T", "a", "b", 3e-3, **kw)], [Port(1, "a"), Port(2, "b")])
    two = CircuitGraph.from_parts(
        [_line("T1", "a", "m", 0.7e-3, **kw), _line("T2", "m", "b", 2.3e-3, **kw)], [Port(1, "a"), Port(2, "b")]
    )
    np.testing.assert_allclose(compute_s_parameters(one, F).s, compute_s_parameters(two, F).s, atol=1e-9)


def test_device_reciprocal_unitary(device, kernel_backend):
    s = compute_s_parameters(build_coupled_nanowire_circuit(device), F).s
    np.testing.assert_allclose(s, np.swapaxes(s, 1, 2), atol=1e-9)
    shs = np.einsum("fki,fkj->fij", s.conj(), s)
    np.testing.assert_allclose(shs, np.broadcast_to(np.eye(4), shs.shape), atol=1e-6)


def test_device_left_right_symmetry(device):
    g = build_coupled_nanowire_circuit(device)
    swap = {"p1": "p2", "p2": "p1", "a1": "a2", "a2": "a1", "t1": "t2", "t2": "t1",
            "g1": "g2", "g2": "g1", "b3": "b4", "b4": "b3"}
    m = mirror_graph(g, swap, {1: 2, 2: 1, 3: 4, 4: 3})
    np.testing.assert_allclose(compute_s_parameters(g, F).s, compute_s_parameters(m, F).s, atol=1e-12)
    s = compute_s_parameters(g, F)
    np.testing.assert_allclose(s.sij(1, 1), s.sij(2, 2), atol=1e-12)


def test_lossy_device_passive(device):
    g = build_coupled_nanowire_circuit(replace(device, R_l=5e3, G_l=1e-5))
    s = compute_s_parameters(g, F).s
    assert np.linalg.norm(s, 2, axis=(1, 2)).max() <= 1 + 1e-9


@settings(max_examples=25, deadline=None)
@given(
    lengths=st.lists(st.floats(5e-6, 5e-3), min_size=1, max_size=4),
    z=st.floats(20.0, 8000.0),
    caps=st.lists(st.floats(1e-17, 1e-12), min_size=1, max_size=3),
    r=st.floats(0.0, 1e4),
    zref=st.floats(10.0, 200.0),
)
def test_random_networks_reciprocal_passive(lengths, z, caps, r, zref):
    els, prev = [], "n0"
    for i, ln in enumerate(lengths):
        els.append(_line(f"T{i}", prev, f"n{i + 1}", ln, Z=z, R=r))
        prev = f"n{i + 1}"
    for i, c in enumerate(caps):
        els.append(Lumped(f"C{i}", "C", f"n{i % (len(lengths) + 1)}", "0", c))
    g = CircuitGraph.from_parts(els, [Port(1, "n0", zref), Port(2, prev, 50.0)])
    s = compute_s_parameters(g, np.linspace(0.3e9, 20e9, 40)).s
    np.testing.assert_allclose(s, np.swapaxes(s, 1, 2), atol=1e-9)
    assert np.linalg.norm(s, 2, axis=(1, 2)).max() <= 1 + 1e-9
    if r == 0.0:
        shs = np.einsum("fki,fkj->fij", s.conj(), s)
        np.testing.assert_allclose(shs, np.broadcast_to(np.eye(2), shs.shape), atol=1e-6)


@pytest.mark.parametrize("n", [1, 2, 7])
@pytest.mark.parametrize("eps", [1e-7 + 2e-8j, -3e-8j, 5e-9 - 5e-9j, 9e-7])
def test_series_branch_matches_high_precision(kernel_backend, n, eps):
    # L = C = length = 1 and no loss: gamma*length = i*omega exactly, Y0 = 1
    z = complex(0, math.pi * n) + eps
    omega = z / 1j
    y11, y12 = tline_two_port_admittance(TLineSegment("T", "a", "b", 1.0, 1.0, 1.0), omega)[0]
    with mpmath.workdps(40):
        zm = mpmath.mpc(z.real, z.imag)
        coth = complex(mpmath.coth(zm))
        csch = complex(mpmath.csch(zm))
    # float pi differs from pi by ~1.2e-16, which limits the attainable relative accuracy
    rtol = 1e-15 * n / abs(eps) + 1e-12
    assert y11 == pytest.approx(coth, rel=rtol)
    assert y12 == pytest.approx(-csch, rel=rtol)


def test_series_switch_continuity():
    seg = TLineSegment("T", "a", "b", 1.0, 1.0, 1.0)
    for d in (0.99e-6, 1.01e-6):
        y = tline_two_port_admittance(seg, (complex(0, 3 * math.pi) + d) / 1j)
        with mpmath.workdps(40):
            ref = complex(mpmath.coth(mpmath.mpc(d, 3 * math.pi)))
        assert y[0, 0] == pytest.approx(ref, rel=1e-9)


def test_exact_resonance_point_finite(kernel_backend):
    # beta*l lands on n*pi to the last bit: the stamp is singular and the point is nudged
    g = CircuitGraph.from_parts([_line("T", "a", "b", 0.05)], [Port(1, "a"), Port(2, "b")])
    s = compute_s_parameters(g, [0.7e9, 1e9, 2e9])
    assert np.all(np.isfinite(s.s))
    assert s.flags[0] == 0 and s.flags[1] == 1
    # a half-wave matched-impedance line is transparent at resonance
    assert abs(s.s[1, 1, 0]) == pytest.approx(1.0, abs=1e-6)


def test_nodal_matrix_symmetric(device):
    g = build_coupled_nanowire_circuit(device)
    Y = assemble_nodal_matrix(g, 2 * np.pi * 6e9)
    np.testing.assert_allclose(Y, Y.T, rtol=1e-14)


def test_complex_frequency_matches_real():
    g = _quarter_wave()
    w = 2 * np.pi * np.array([4.2e9, 5.1e9])
    a, flags = compute_s_parameters_omega(g, w.astype(complex))
    assert not flags.any()
    b = compute_s_parameters(g, w / (2 * np.pi)).s
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_workers_give_identical_results(device):
    g = build_coupled_nanowire_circuit(device)
    f = np.linspace(2e9, 14e9, 400)
    a = compute_s_parameters(g, f, workers=1)
    b = compute_s_parameters(g, f, workers=3)
    assert np.array_equal(a.s, b.s)


@pytest.mark.parametrize("f", [[], [2e9, 1e9], [0.0, 1e9], [-1e9, 1e9], [1e9, 1e9]])
def test_bad_frequency_grids(f):
    with pytest.raises(SolverError):
        compute_s_parameters(_quarter_wave(), f)


def test_dc_rejected():
    with pytest.raises(SolverError):
        tline_two_port_admittance(TLineSegment("T", "a", "b", 1.0, 1.0, 1.0), 0.0)


def test_invalid_graph_rejected():
    g = CircuitGraph.from_parts([Lumped("C", "C", "x", "y", 1e-15), _line("T", "a", "b", 1e-3)], [Port(1, "a")])
    with pytest.raises(SolverError, match="disconnected"):
        compute_s_parameters(g, [1e9])


def test_sweep_container():
    s = SParameterSweep([1.0, 2.0, 3.0], np.zeros((3, 2, 2)), [50, 50])
    assert s.n_ports == 2 and len(s.band(1.5, 3.0)) == 2
    with pytest.raises(ValueError):
        SParameterSweep([2.0, 1.0], np.zeros((2, 1, 1)), [50])
    with pytest.raises(ValueError):
        SParameterSweep([1.0], np.zeros((1, 2, 2)), [50])


def test_device_sweep_runtime(device):
    g = build_coupled_nanowire_circuit(device)
    f = np.linspace(2e9, 14e9, 2000)
    compute_s_parameters(g, f[:10])
    t = time.perf_counter()
    compute_s_parameters(g, f)
    assert time.perf_counter() - t < 5.0
