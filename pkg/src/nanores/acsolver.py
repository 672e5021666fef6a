"""Frequency-domain nodal analysis of circuit graphs.

Time convention is e^{+i omega t}: a capacitor has admittance +i omega C and a
decaying natural mode sits at Im(omega) > 0.  Frequencies may be complex.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from nanores import _kernels as K
from nanores.constants import TWO_PI
from nanores.netlist import CircuitGraph, Lumped, TLineSegment, validate

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


@dataclass
class SParameterSweep:
    frequencies: np.ndarray  # Hz, strictly ascending
    s: np.ndarray  # (F, P, P) complex
    z_ref: np.ndarray  # (P,) ohm
    flags: np.ndarray = field(default=None)  # (F,) nonzero where the solve was perturbed

    def __post_init__(self):
        self.frequencies = np.asarray(self.frequencies, dtype=float)
        self.s = np.asarray(self.s, dtype=complex)
        self.z_ref = np.asarray(self.z_ref, dtype=float)
        if self.flags is None:
            self.flags = np.zeros(len(self.frequencies), dtype=int)
        if self.s.ndim != 3 or self.s.shape[0] != len(self.frequencies) or self.s.shape[1] != self.s.shape[2]:
            raise ValueError(f"S array shape {self.s.shape} does not match {len(self.frequencies)} frequencies")
        if self.s.shape[1] != len(self.z_ref):
            raise ValueError("one reference impedance per port required")
        if np.any(np.diff(self.frequencies) <= 0):
            raise ValueError("frequencies must be strictly ascending")

    @property
    def n_ports(self) -> int:
        return self.s.shape[1]

    def __len__(self) -> int:
        return len(self.frequencies)

    def sij(self, i: int, j: int) -> np.ndarray:
        """S_ij trace with 1-based port indices."""
        return self.s[:, i - 1, j - 1]

    def band(self, f_min: float, f_max: float) -> "SParameterSweep":
        m = (self.frequencies >= f_min) & (self.frequencies <= f_max)
        return SParameterSweep(self.frequencies[m], self.s[m], self.z_ref, self.flags[m])


@dataclass(frozen=True)
class Compiled:
    """Flat-array form of a graph, as consumed by the kernels."""

    node_index: dict
    n: int
    tl_a: np.ndarray
    tl_b: np.ndarray
    tl_len: np.ndarray
    tl_L: np.ndarray
    tl_C: np.ndarray
    tl_R: np.ndarray
    tl_G: np.ndarray
    lp_a: np.ndarray
    lp_b: np.ndarray
    lp_kind: np.ndarray
    lp_val: np.ndarray
    pt_node: np.ndarray
    pt_z: np.ndarray

    @property
    def args(self) -> tuple:
        return (self.n, self.tl_a, self.tl_b, self.tl_len, self.tl_L, self.tl_C, self.tl_R, self.tl_G,
                self.lp_a, self.lp_b, self.lp_kind, self.lp_val)

    @property
    def term_args(self) -> tuple:
        return self.args + (self.pt_node, self.pt_z)


_KIND_CODE = {"C": K.KIND_C, "L": K.KIND_L, "R": K.KIND_R}


def compile_graph(graph: CircuitGraph, check: bool = True) -> Compiled:
    if check:
        diags = validate(graph)
        if diags:
            raise SolverError("invalid circuit graph: " + "; ".join(diags))
    idx = {n: i for i, n in enumerate(graph.signal_nodes)}
    idx[graph.ground] = -1
    tls = graph.tlines()
    lps = graph.lumped()
    i64 = lambda xs: np.array(xs, dtype=np.int64)
    f64 = lambda xs: np.array(xs, dtype=np.float64)
    return Compiled(
        node_index=idx,
        n=len(graph.signal_nodes),
        tl_a=i64([idx[t.n1] for t in tls]),
        tl_b=i64([idx[t.n2] for t in tls]),
        tl_len=f64([t.length for t in tls]),
        tl_L=f64([t.L_l for t in tls]),
        tl_C=f64([t.C_l for t in tls]),
        tl_R=f64([t.R_l for t in tls]),
        tl_G=f64([t.G_l for t in tls]),
        lp_a=i64([idx[e.n1] for e in lps]),
        lp_b=i64([idx[e.n2] for e in lps]),
        lp_kind=i64([_KIND_CODE[e.kind] for e in lps]),
        lp_val=f64([e.value for e in lps]),
        pt_node=i64([idx[p.node] for p in graph.ports]),
        pt_z=f64([p.Z_ref for p in graph.ports]),
    )


def _check_omega(omega) -> complex:
    omega = complex(omega)
    if omega == 0:
        raise SolverError("omega = 0 (DC) is degenerate for line-segment stamps")
    return omega


def tline_two_port_admittance(segment: TLineSegment, omega) -> np.ndarray:
    """2x2 admittance matrix of a line segment at angular frequency ``omega``."""
    omega = _check_omega(omega)
    y11, y12 = K.scalar_tline_y(omega, segment.length, segment.L_l, segment.C_l, segment.R_l, segment.G_l)
    return np.array([[y11, y12], [y12, y11]])


def assemble_nodal_matrix(graph: CircuitGraph, omega, compiled: Compiled | None = None) -> np.ndarray:
    """Nodal admittance matrix over the signal (non-ground) nodes, without
    port terminations.  Row order follows ``graph.signal_nodes``."""
    omega = _check_omega(omega)
    c = compiled or compile_graph(graph)
    return K.nodal_matrix(omega, *c.args)


def terminated_matrix(graph: CircuitGraph, omega, compiled: Compiled | None = None) -> np.ndarray:
    c = compiled or compile_graph(graph)
    Y = assemble_nodal_matrix(graph, omega, c)
    for node, z in zip(c.pt_node, c.pt_z):
        Y[node, node] += 1.0 / z
    return Y


def _s_from_zp(zp: np.ndarray, z_ref: np.ndarray) -> np.ndarray:
    g = 1.0 / np.sqrt(z_ref)
    return 2.0 * zp * g[None, :, None] * g[None, None, :] - np.eye(len(z_ref))[None]


def compute_s_parameters_omega(graph: CircuitGraph, omegas, compiled: Compiled | None = None):
    """S matrices at (possibly complex) angular frequencies.  Returns (S, flags)."""
    c = compiled or compile_graph(graph)
    omegas = np.atleast_1d(np.asarray(omegas, dtype=complex))
    if np.any(omegas == 0):
        raise SolverError("omega = 0 (DC) is degenerate for line-segment stamps")
    zp, flags = K.port_impedance_sweep(omegas, *c.term_args)
    return _s_from_zp(zp, c.pt_z), flags


def compute_s_parameters(graph: CircuitGraph, frequencies, workers: int = 1) -> SParameterSweep:
    """Multiport S-parameters of ``graph`` at real frequencies in Hz.

    With ``workers > 1`` the frequency grid is split into contiguous chunks
    solved on a thread pool; results are concatenated in frequency order.
    """
    c = compile_graph(graph)
    f = np.asarray(frequencies, dtype=float)
    if f.ndim != 1 or len(f) == 0:
        raise SolverError("need a non-empty 1-D frequency list")
    if np.any(np.diff(f) <= 0):
        raise SolverError("frequencies must be strictly ascending")
    if np.any(f <= 0):
        raise SolverError("frequencies must be positive")
    omegas = TWO_PI * f
    if workers > 1 and len(f) >= 2 * workers:
        chunks = np.array_split(omegas, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda w: K.port_impedance_sweep(w.astype(complex), *c.term_args), chunks))
        zp = np.concatenate([p[0] for p in parts])
        flags = np.concatenate([p[1] for p in parts])
    else:
        zp, flags = K.port_impedance_sweep(omegas.astype(complex), *c.term_args)
    if np.any(flags):
        log.warning("%d frequency point(s) were singular and solved at a perturbed frequency", int(np.sum(flags)))
    return SParameterSweep(f, _s_from_zp(zp, c.pt_z), c.pt_z.copy(), flags)


def input_impedance(graph: CircuitGraph, port: int, omega) -> complex:
    """Impedance seen into ``port`` (1-based index) with every other port
    terminated in its reference impedance."""
    c = compile_graph(graph)
    omega = _check_omega(omega)
    k = [p.index for p in graph.ports].index(port)
    zp, _ = K.port_impedance_sweep(np.array([omega]), *c.term_args)
    zpp = zp[0, k, k]
    # zp includes the port's own termination in parallel.
    return 1.0 / (1.0 / zpp - 1.0 / c.pt_z[k])


def log_characteristic(graph: CircuitGraph, omega, compiled: Compiled | None = None) -> complex:
    """log of the entire characteristic function whose zeros are the natural
    frequencies of the terminated network (see ``_kernels.log_characteristic``)."""
    c = compiled or compile_graph(graph)
    return K.characteristic_log(_check_omega(omega), *c.term_args)
