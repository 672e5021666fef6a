"""Circuit graphs of distributed line segments, lumped elements and ports.

Transmission-line segments are two-conductor lines whose return conductor is
the ground node, so each segment stamps a 2x2 admittance between its two
signal nodes and ground.  Ports are terminated to ground through their
reference impedance.
"""

from __future__ import annotations

import math
import re
from decimal import Decimal
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Union

GROUND = "0"

LUMPED_KINDS = ("C", "L", "R")


class NetlistError(ValueError):
    """Raised for malformed netlist text or invalid builder input."""


@dataclass(frozen=True)
class TLineSegment:
    name: str
    n1: str
    n2: str
    length: float
    L_l: float
    C_l: float
    R_l: float = 0.0
    G_l: float = 0.0

    kind = "TL"

    def __post_init__(self):
        if not (self.length > 0 and self.L_l > 0 and self.C_l > 0):
            raise NetlistError(f"{self.name}: length, Ll and Cl must be positive")
        if self.R_l < 0 or self.G_l < 0:
            raise NetlistError(f"{self.name}: Rl and Gl must be non-negative")
        if self.n1 == self.n2:
            raise NetlistError(f"{self.name}: terminals must be distinct")

    @property
    def terminals(self) -> tuple[str, str]:
        return (self.n1, self.n2)

    @property
    def Z_c(self) -> float:
        return math.sqrt(self.L_l / self.C_l)


@dataclass(frozen=True)
class Lumped:
    """Capacitor (``kind='C'``, F), inductor (``'L'``, H) or resistor (``'R'``, ohm)."""

    name: str
    kind: str
    n1: str
    n2: str
    value: float

    def __post_init__(self):
        if self.kind not in LUMPED_KINDS:
            raise NetlistError(f"{self.name}: unknown lumped kind {self.kind!r}")
        if not self.value > 0:
            raise NetlistError(f"{self.name}: value must be positive")
        if self.n1 == self.n2:
            raise NetlistError(f"{self.name}: terminals must be distinct")

    @property
    def terminals(self) -> tuple[str, str]:
        return (self.n1, self.n2)


Element = Union[TLineSegment, Lumped]


@dataclass(frozen=True)
class Port:
    index: int
    node: str
    Z_ref: float = 50.0

    def __post_init__(self):
        if not self.Z_ref > 0:
            raise NetlistError(f"port {self.index}: reference impedance must be positive")


@dataclass(frozen=True)
class CircuitGraph:
    nodes: tuple[str, ...]
    elements: tuple[Element, ...]
    ports: tuple[Port, ...]
    ground: str = GROUND

    @classmethod
    def from_parts(
        cls, elements: Iterable[Element], ports: Iterable[Port], ground: str = GROUND
    ) -> "CircuitGraph":
        """Build a graph whose node list is derived from element and port order."""
        elements = tuple(elements)
        ports = tuple(sorted(ports, key=lambda p: p.index))
        seen = {ground: None}
        for el in elements:
            for n in el.terminals:
                seen.setdefault(n, None)
        for p in ports:
            seen.setdefault(p.node, None)
        return cls(nodes=tuple(seen), elements=elements, ports=ports, ground=ground)

    @property
    def signal_nodes(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n != self.ground)

    @property
    def n_ports(self) -> int:
        return len(self.ports)

    def tlines(self) -> list[TLineSegment]:
        return [e for e in self.elements if isinstance(e, TLineSegment)]

    def lumped(self, kind: str | None = None) -> list[Lumped]:
        return [e for e in self.elements if isinstance(e, Lumped) and (kind is None or e.kind == kind)]

    def element(self, name: str) -> Element:
        for el in self.elements:
            if el.name == name:
                return el
        raise KeyError(name)


def validate(graph: CircuitGraph) -> list[str]:
    """Return a list of well-formedness violations; empty if the graph is valid."""
    diags: list[str] = []
    nodes = set(graph.nodes)
    if len(nodes) != len(graph.nodes):
        diags.append("duplicate node identifiers")
    if graph.ground not in nodes:
        diags.append(f"ground node {graph.ground!r} not declared")

    names = [el.name for el in graph.elements]
    for name in sorted({n for n in names if names.count(n) > 1}):
        diags.append(f"duplicate element name {name!r}")

    # Signal-to-ground adjacency.  Line segments and port terminations carry an
    # implicit ground return.
    adj: dict[str, set[str]] = defaultdict(set)
    for el in graph.elements:
        missing = [n for n in el.terminals if n not in nodes]
        if missing:
            diags.append(f"element {el.name!r} references missing node(s) {', '.join(missing)}")
            continue
        a, b = el.terminals
        adj[a].add(b)
        adj[b].add(a)
        if isinstance(el, TLineSegment):
            for n in (a, b):
                adj[n].add(graph.ground)
                adj[graph.ground].add(n)

    if not graph.ports:
        diags.append("graph has no ports")
    port_nodes: dict[str, int] = {}
    indices = [p.index for p in graph.ports]
    if len(set(indices)) != len(indices):
        diags.append("duplicate port index")
    for p in graph.ports:
        if p.node not in nodes:
            diags.append(f"port {p.index} references missing node {p.node!r}")
            continue
        if p.node == graph.ground:
            diags.append(f"port {p.index} is attached to ground")
            continue
        if p.node in port_nodes:
            diags.append(f"ports {port_nodes[p.node]} and {p.index} share node {p.node!r}")
        port_nodes[p.node] = p.index
        adj[p.node].add(graph.ground)
        adj[graph.ground].add(p.node)

    if graph.ground in nodes:
        reached = {graph.ground}
        stack = [graph.ground]
        while stack:
            for nb in adj[stack.pop()]:
                if nb not in reached:
                    reached.add(nb)
                    stack.append(nb)
        for n in graph.nodes:
            if n not in reached:
                diags.append(f"node {n!r} is disconnected from ground")
    return diags


# ---------------------------------------------------------------------------
# coupled nanowire resonator builder


@dataclass(frozen=True)
class CoupledResonatorParams:
    """Two capacitively coupled half-wave nanowires with optional bias lines.

    ``x_b`` is the distance of each bias tap from the inner (``C_g``) end of
    its nanowire; ``x_b`` and ``l_b`` are in metres.  Use :meth:`from_fractions`
    to give them in units of the bare half-wave wavelength ``2 * l``.
    """

    l: float = 150e-6
    L_l: float = 1.2e-3
    C_l: float = 40e-12
    C_g: float = 1e-15
    C_k: float = 0.77e-15
    x_b: float = 0.185 * 300e-6
    l_b: float = 0.25 * 300e-6
    Z_L: float = 50.0
    Z_port: float = 50.0
    include_bias_lines: bool = True
    R_l: float = 0.0
    G_l: float = 0.0

    def __post_init__(self):
        if not (self.l > 0 and self.L_l > 0 and self.C_l > 0):
            raise NetlistError("l, L_l and C_l must be positive")
        if not (self.C_g > 0 and self.C_k > 0):
            raise NetlistError("C_g and C_k must be positive")
        if not (self.Z_L > 0 and self.Z_port > 0):
            raise NetlistError("termination impedances must be positive")
        if not 0 < self.x_b < self.l:
            raise NetlistError(f"bias tap x_b={self.x_b!r} m must lie strictly inside the nanowire (0, {self.l!r})")
        if not self.l_b > 0:
            raise NetlistError("bias line length must be positive")

    @property
    def wavelength(self) -> float:
        """Bare half-wave resonance wavelength, 2 l."""
        return 2.0 * self.l

    @property
    def x_b_fraction(self) -> float:
        return self.x_b / self.wavelength

    @property
    def l_b_fraction(self) -> float:
        return self.l_b / self.wavelength

    @classmethod
    def from_fractions(cls, x_b: float = 0.185, l_b: float = 0.25, **kw) -> "CoupledResonatorParams":
        lam = 2.0 * kw.get("l", cls.l)
        return cls(x_b=x_b * lam, l_b=l_b * lam, **kw)

    def with_fractions(self, x_b: float | None = None, l_b: float | None = None, **kw) -> "CoupledResonatorParams":
        p = replace(self, **kw) if kw else self
        lam = p.wavelength
        changes = {}
        if x_b is not None:
            changes["x_b"] = x_b * lam
        if l_b is not None:
            changes["l_b"] = l_b * lam
        return replace(p, **changes) if changes else p

    @property
    def bare_frequency(self) -> float:
        """Half-wave frequency of one bare nanowire, v_ph / (2 l)."""
        return 1.0 / (2.0 * self.l * math.sqrt(self.L_l * self.C_l))


def build_coupled_nanowire_circuit(params: CoupledResonatorParams) -> CircuitGraph:
    p = params
    line = dict(L_l=p.L_l, C_l=p.C_l, R_l=p.R_l, G_l=p.G_l)
    els: list[Element] = [Lumped("Ck1", "C", "p1", "a1", p.C_k)]
    if p.include_bias_lines:
        els += [
            TLineSegment("TLout1", "a1", "t1", p.l - p.x_b, **line),
            TLineSegment("TLin1", "t1", "g1", p.x_b, **line),
            Lumped("Cg", "C", "g1", "g2", p.C_g),
            TLineSegment("TLin2", "g2", "t2", p.x_b, **line),
            TLineSegment("TLout2", "t2", "a2", p.l - p.x_b, **line),
            Lumped("Ck2", "C", "a2", "p2", p.C_k),
            TLineSegment("TLbias1", "t1", "b3", p.l_b, **line),
            TLineSegment("TLbias2", "t2", "b4", p.l_b, **line),
        ]
        ports = [Port(1, "p1", p.Z_port), Port(2, "p2", p.Z_port), Port(3, "b3", p.Z_L), Port(4, "b4", p.Z_L)]
    else:
        els += [
            TLineSegment("TL1", "a1", "g1", p.l, **line),
            Lumped("Cg", "C", "g1", "g2", p.C_g),
            TLineSegment("TL2", "g2", "a2", p.l, **line),
            Lumped("Ck2", "C", "a2", "p2", p.C_k),
        ]
        ports = [Port(1, "p1", p.Z_port), Port(2, "p2", p.Z_port)]
    return CircuitGraph.from_parts(els, ports)


def mirror_graph(graph: CircuitGraph, node_map: dict[str, str], port_map: dict[int, int]) -> CircuitGraph:
    """Relabel nodes and port indices (used to check left-right symmetry)."""
    def m(n: str) -> str:
        return node_map.get(n, n)

    els = []
    for el in graph.elements:
        els.append(replace(el, n1=m(el.n1), n2=m(el.n2)))
    ports = [Port(port_map.get(p.index, p.index), m(p.node), p.Z_ref) for p in graph.ports]
    return CircuitGraph.from_parts(els, ports, graph.ground)


# ---------------------------------------------------------------------------
# netlist text format

_SUFFIX = {"a": -18, "f": -15, "p": -12, "n": -9, "u": -6, "m": -3, "k": 3, "M": 6, "G": 9}
_NUM_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)([afpnumkMG]?)$")


def parse_value(token: str) -> float:
    """Parse an SI float with an optional engineering suffix (``0.77f`` -> 7.7e-16)."""
    m = _NUM_RE.match(token.strip())
    if not m:
        raise NetlistError(f"bad numeric value {token!r}")
    if not m.group(2):
        return float(m.group(1))
    # decimal scaling keeps "38u" identical to 38e-6
    return float(Decimal(m.group(1)).scaleb(_SUFFIX[m.group(2)]))


def _fmt(x: float) -> str:
    return repr(float(x))


def dumps(graph: CircuitGraph) -> str:
    lines = [f"GND {graph.ground}"]
    for el in graph.elements:
        if isinstance(el, TLineSegment):
            s = f"TL {el.n1} {el.n2} length={_fmt(el.length)} Ll={_fmt(el.L_l)} Cl={_fmt(el.C_l)}"
            if el.R_l:
                s += f" Rl={_fmt(el.R_l)}"
            if el.G_l:
                s += f" Gl={_fmt(el.G_l)}"
        else:
            s = f"{el.kind} {el.n1} {el.n2} {_fmt(el.value)}"
        lines.append(f"{s} name={el.name}")
    for p in graph.ports:
        lines.append(f"PORT {p.index} {p.node} {_fmt(p.Z_ref)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> CircuitGraph:
    """Parse netlist text.

    One statement per line; ``#`` starts a comment.  Element lines accept an
    optional trailing ``name=<id>``; unnamed elements are numbered per kind.
    """
    elements: list[Element] = []
    ports: list[Port] = []
    ground = None
    counters: dict[str, int] = defaultdict(int)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        head = tok[0].upper()
        try:
            kv = {}
            pos = []
            for t in tok[1:]:
                if "=" in t:
                    k, v = t.split("=", 1)
                    kv[k] = v
                else:
                    pos.append(t)
            if head == "GND":
                if len(pos) != 1 or kv:
                    raise NetlistError("expected: GND <node>")
                if ground is not None:
                    raise NetlistError("ground declared twice")
                ground = pos[0]
            elif head == "PORT":
                if len(pos) != 3 or kv:
                    raise NetlistError("expected: PORT <idx> <node> <ohm>")
                ports.append(Port(int(pos[0]), pos[1], parse_value(pos[2])))
            elif head == "TL":
                if len(pos) != 2:
                    raise NetlistError("expected: TL <n1> <n2> length= Ll= Cl= [Rl=] [Gl=]")
                unknown = set(kv) - {"length", "Ll", "Cl", "Rl", "Gl", "name"}
                if unknown:
                    raise NetlistError(f"unknown TL key(s) {sorted(unknown)}")
                for req in ("length", "Ll", "Cl"):
                    if req not in kv:
                        raise NetlistError(f"TL missing {req}=")
                counters["TL"] += 1
                elements.append(
                    TLineSegment(
                        kv.get("name", f"TL{counters['TL']}"),
                        pos[0],
                        pos[1],
                        parse_value(kv["length"]),
                        parse_value(kv["Ll"]),
                        parse_value(kv["Cl"]),
                        parse_value(kv.get("Rl", "0")),
                        parse_value(kv.get("Gl", "0")),
                    )
                )
            elif head in LUMPED_KINDS:
                if len(pos) != 3 or set(kv) - {"name"}:
                    raise NetlistError(f"expected: {head} <n1> <n2> <value> [name=<id>]")
                counters[head] += 1
                elements.append(Lumped(kv.get("name", f"{head}{counters[head]}"), head, pos[0], pos[1], parse_value(pos[2])))
            else:
                raise NetlistError(f"unknown statement {tok[0]!r}")
        except (NetlistError, ValueError) as exc:
            raise NetlistError(f"line {lineno}: {exc}") from None
    return CircuitGraph.from_parts(elements, ports, GROUND if ground is None else ground)


def read_netlist(path) -> CircuitGraph:
    return loads(Path(path).read_text())


def write_netlist(graph: CircuitGraph, path) -> None:
    Path(path).write_text(dumps(graph))
