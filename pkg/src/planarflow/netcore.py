"""Flow networks with paired arcs and the algebra of arc functions.

Arcs are stored in pairs: a forward arc ``e`` and its reverse ``e ^ 1`` live at
adjacent indices, so ``rev`` is an index involution and parallel arcs are
naturally distinct. Capacities are ints, :class:`fractions.Fraction` or
:data:`INF`; nothing in this package ever uses floating point for a finite
value.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Optional, Sequence

INF = math.inf


class FlowError(Exception):
    """Base class for errors raised by the solvers."""


class InvariantError(FlowError):
    """A checked-mode invariant failed; always indicates a bug."""


def rev(e: int) -> int:
    return e ^ 1


def is_finite(x) -> bool:
    return x != INF


def as_value(x):
    """Normalise an exact number: integral Fractions become ints."""
    if isinstance(x, Fraction) and x.denominator == 1:
        return x.numerator
    return x


class FlowNetwork:
    """Directed multigraph with arc and vertex capacities.

    Vertices are ``0..n-1``. Every call to :meth:`add_arc_pair` appends a
    forward arc and its reverse. ``rotation`` maps a vertex to the clockwise
    cyclic order of the darts (arcs whose tail is that vertex) of its
    incident edges; it is only present for the planar part of a network.
    """

    def __init__(self):
        self.tail: list[int] = []
        self.head: list[int] = []
        self.cap: list = []
        self.vertex_cap: list = []
        self.names: list[str] = []
        self.out: list[list[int]] = []
        self.sources: list[int] = []
        self.sinks: list[int] = []
        self.rotation: dict[int, list[int]] = {}

    def __repr__(self):
        return f"FlowNetwork(n={self.n}, m={self.m}, S={self.sources}, T={self.sinks})"

    @property
    def n(self) -> int:
        return len(self.vertex_cap)

    @property
    def m(self) -> int:
        return len(self.tail)

    def add_vertex(self, cap=INF, name: Optional[str] = None) -> int:
        _check_capacity(cap)
        v = len(self.vertex_cap)
        self.vertex_cap.append(cap)
        self.names.append(str(v) if name is None else name)
        self.out.append([])
        return v

    def add_vertices(self, count: int, cap=INF) -> list[int]:
        return [self.add_vertex(cap) for _ in range(count)]

    def add_arc_pair(self, u: int, v: int, cap, rev_cap=0) -> tuple[int, int]:
        """Append arc ``(u, v)`` with capacity ``cap`` and its reverse.

        ``rev_cap`` is nonzero only for materialised residual networks.
        """
        if u == v:
            raise ValueError(f"self-loop at vertex {u} is not allowed")
        for x in (u, v):
            if not 0 <= x < self.n:
                raise ValueError(f"unknown vertex {x}")
        _check_capacity(cap)
        _check_capacity(rev_cap)
        e = len(self.tail)
        self.tail += [u, v]
        self.head += [v, u]
        self.cap += [cap, rev_cap]
        self.out[u].append(e)
        self.out[v].append(e + 1)
        return e, e + 1

    def in_arcs(self, v: int) -> Iterator[int]:
        return (e ^ 1 for e in self.out[v])

    def add_source(self, v: int) -> None:
        self._add_terminal(v, self.sources, self.sinks)

    def add_sink(self, v: int) -> None:
        self._add_terminal(v, self.sinks, self.sources)

    def _add_terminal(self, v, mine, other):
        if v in other:
            raise ValueError(f"vertex {v} cannot be both a source and a sink")
        if self.vertex_cap[v] != INF:
            raise ValueError(f"terminal {v} must have infinite capacity")
        if v not in mine:
            mine.append(v)

    @property
    def terminals(self) -> list[int]:
        return self.sources + self.sinks

    def set_rotation(self, v: int, darts: Sequence[int]) -> None:
        for d in darts:
            if self.tail[d] != v:
                raise ValueError(f"dart {d} does not leave vertex {v}")
        self.rotation[v] = list(darts)

    def degree(self, v: int) -> int:
        """Number of incident edges (arc pairs)."""
        return len(self.out[v])

    def forward_arcs(self) -> range:
        return range(0, self.m, 2)

    def copy(self) -> "FlowNetwork":
        other = FlowNetwork()
        other.tail = list(self.tail)
        other.head = list(self.head)
        other.cap = list(self.cap)
        other.vertex_cap = list(self.vertex_cap)
        other.names = list(self.names)
        other.out = [list(a) for a in self.out]
        other.sources = list(self.sources)
        other.sinks = list(self.sinks)
        other.rotation = {v: list(r) for v, r in self.rotation.items()}
        return other

    def finite_capacity_total(self):
        return sum(c for c in self.cap if c != INF)


def _check_capacity(c):
    if c == INF:
        return
    if isinstance(c, bool) or not isinstance(c, (int, Fraction)):
        raise TypeError(f"capacity must be an int, Fraction or INF, got {c!r}")
    if c < 0:
        raise ValueError(f"capacity must be nonnegative, got {c}")


class ArcFunction:
    """Nonnegative exact value per arc: preflows, flows and circulations."""

    __slots__ = ("values",)

    def __init__(self, values: Iterable = ()):
        self.values = [as_value(x) for x in values]
        for e, x in enumerate(self.values):
            if x < 0:
                raise ValueError(f"negative value {x} on arc {e}")

    @classmethod
    def zeros(cls, m) -> "ArcFunction":
        if isinstance(m, FlowNetwork):
            m = m.m
        f = cls.__new__(cls)
        f.values = [0] * m
        return f

    def __getitem__(self, e):
        return self.values[e]

    def __setitem__(self, e, x):
        if x < 0:
            raise ValueError(f"negative value {x} on arc {e}")
        self.values[e] = as_value(x)

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __eq__(self, other):
        return isinstance(other, ArcFunction) and self.values == other.values

    def __repr__(self):
        nz = {e: x for e, x in enumerate(self.values) if x}
        return f"ArcFunction({nz}, m={len(self.values)})"

    def copy(self) -> "ArcFunction":
        f = ArcFunction.__new__(ArcFunction)
        f.values = list(self.values)
        return f

    def support(self) -> list[int]:
        return [e for e, x in enumerate(self.values) if x]

    def is_integral(self) -> bool:
        return all(isinstance(x, int) for x in self.values)


@dataclass
class FlowStats:
    value: object
    max_violation: object
    violated_vertices: frozenset


@dataclass
class GadgetMap:
    """Arc and vertex correspondence between a network and a derived one.

    ``fwd[e]`` is the derived arc standing for source arc ``e``; ``None``
    marks a zero-capacity pair the construction dropped. ``back`` is the
    inverse on non-gadget arcs and ``None`` on gadget-internal arcs.
    """

    fwd: list
    back: list
    vertex_map: dict = field(default_factory=dict)
    cycles: dict = field(default_factory=dict)  # v -> (cycle vertices, outer arcs, inner arcs)

    @classmethod
    def identity(cls, m: int) -> "GadgetMap":
        return cls(list(range(m)), list(range(m)))

    def compose(self, then: "GadgetMap") -> "GadgetMap":
        """Map through ``self`` and then through ``then``."""
        fwd = [None if d is None else then.fwd[d] for d in self.fwd]
        back = [None] * len(then.back)
        for e, d in enumerate(fwd):
            if d is not None:
                back[d] = e
        return GadgetMap(fwd, back)


# --- the flow algebra -------------------------------------------------------


def residual_capacity(net: FlowNetwork, rho: ArcFunction, e: int):
    """c(e) - rho(e) + rho(rev e); infinite capacity stays infinite."""
    c = net.cap[e]
    if c == INF:
        return INF
    return as_value(c - rho[e] + rho[e ^ 1])


def inflow(net: FlowNetwork, rho: ArcFunction, v: int):
    return sum(rho[e ^ 1] for e in net.out[v])


def outflow(net: FlowNetwork, rho: ArcFunction, v: int):
    return sum(rho[e] for e in net.out[v])


def excess(net: FlowNetwork, rho: ArcFunction, v: int):
    return as_value(inflow(net, rho, v) - outflow(net, rho, v))


def flow_value(net: FlowNetwork, rho: ArcFunction, sources: Optional[Iterable[int]] = None):
    if sources is None:
        sources = net.sources
    return as_value(sum(-excess(net, rho, s) for s in sources))


def violation(net: FlowNetwork, f: ArcFunction, v: int):
    c = net.vertex_cap[v]
    if c == INF:
        return 0
    return as_value(max(0, inflow(net, f, v) - c))


def violation_max(net: FlowNetwork, f: ArcFunction):
    return max((violation(net, f, v) for v in range(net.n)), default=0)


def flow_stats(net: FlowNetwork, f: ArcFunction) -> FlowStats:
    vios = [violation(net, f, v) for v in range(net.n)]
    return FlowStats(
        value=flow_value(net, f),
        max_violation=max(vios, default=0),
        violated_vertices=frozenset(v for v, x in enumerate(vios) if x > 0),
    )


def sum_preflows(net, rho: ArcFunction, eta: ArcFunction) -> ArcFunction:
    """Pairwise net sum: at most one arc of each pair ends up positive."""
    m = len(rho)
    if len(eta) != m:
        raise ValueError("arc functions are defined on different arc sets")
    a, b = rho.values, eta.values
    out = [0] * m
    for e in range(0, m, 2):
        d = a[e] + b[e] - a[e + 1] - b[e + 1]
        if d > 0:
            out[e] = as_value(d)
        elif d < 0:
            out[e + 1] = as_value(-d)
    f = ArcFunction.__new__(ArcFunction)
    f.values = out
    return f


def scale_flow(c, rho: ArcFunction) -> ArcFunction:
    if c < 0:
        raise ValueError("scaling factor must be nonnegative")
    f = ArcFunction.__new__(ArcFunction)
    f.values = [as_value(c * x) if x else 0 for x in rho.values]
    return f


def restrict(f_big: ArcFunction, gmap: GadgetMap, G: FlowNetwork) -> ArcFunction:
    """Project a (pre)flow on a derived network back onto ``G``."""
    if len(gmap.fwd) != G.m:
        raise ValueError(f"gadget map covers {len(gmap.fwd)} arcs, network has {G.m}")
    out = [0] * G.m
    for e, d in enumerate(gmap.fwd):
        if d is None:
            if G.cap[e]:
                raise ValueError(f"arc {e} of positive capacity has no correspondence")
            continue
        out[e] = f_big[d]
    f = ArcFunction.__new__(ArcFunction)
    f.values = out
    return f


def lift(f: ArcFunction, gmap: GadgetMap, m_big: int) -> ArcFunction:
    """Inverse of :func:`restrict` on mapped arcs; zero on gadget arcs."""
    out = [0] * m_big
    for e, d in enumerate(gmap.fwd):
        if d is not None:
            out[d] = f[e]
    g = ArcFunction.__new__(ArcFunction)
    g.values = out
    return g


class SuperTerminalNetwork(NamedTuple):
    net: FlowNetwork
    s: int
    t: int
    gmap: GadgetMap
    k: int
    orig_sources: tuple
    orig_sinks: tuple


def add_super_terminals(G: FlowNetwork) -> SuperTerminalNetwork:
    """Wrap all terminals behind a single super source and super sink.

    Original vertices and arcs keep their indices, so the map back to ``G``
    is the identity on the first ``G.m`` arcs.
    """
    if not G.sources and not G.sinks:
        raise ValueError("network has no terminals")
    net = G.copy()
    net.sources, net.sinks = [], []
    s = net.add_vertex(INF, "s*")
    t = net.add_vertex(INF, "t*")
    for si in G.sources:
        net.add_arc_pair(s, si, INF)
    for ti in G.sinks:
        net.add_arc_pair(ti, t, INF)
    net.add_source(s)
    net.add_sink(t)
    gmap = GadgetMap(list(range(G.m)), list(range(G.m)) + [None] * (net.m - G.m))
    return SuperTerminalNetwork(
        net, s, t, gmap, len(G.sources) + len(G.sinks), tuple(G.sources), tuple(G.sinks)
    )


@dataclass
class FeasibilityReport:
    arc_feasible: bool
    vertex_feasible: bool
    is_preflow: bool
    is_flow: bool
    value: object
    bad_arcs: list = field(default_factory=list)
    bad_vertices: list = field(default_factory=list)
    unbalanced: list = field(default_factory=list)

    @property
    def feasible_flow(self) -> bool:
        return self.arc_feasible and self.vertex_feasible and self.is_flow

    @property
    def feasible_preflow(self) -> bool:
        return self.arc_feasible and self.vertex_feasible and self.is_preflow


def check_feasible(net: FlowNetwork, f: ArcFunction) -> FeasibilityReport:
    bad_arcs = [e for e in range(net.m) if f[e] > net.cap[e]]
    bad_vertices = [v for v in range(net.n) if inflow(net, f, v) > net.vertex_cap[v]]
    sources, sinks = set(net.sources), set(net.sinks)
    ex = [excess(net, f, v) for v in range(net.n)]
    is_preflow = all(x >= 0 for v, x in enumerate(ex) if v not in sources)
    unbalanced = [v for v, x in enumerate(ex) if x != 0 and v not in sources and v not in sinks]
    return FeasibilityReport(
        arc_feasible=not bad_arcs,
        vertex_feasible=not bad_vertices,
        is_preflow=is_preflow,
        is_flow=not unbalanced,
        value=flow_value(net, f),
        bad_arcs=bad_arcs,
        bad_vertices=bad_vertices,
        unbalanced=unbalanced,
    )


# --- rotation systems -------------------------------------------------------


def trace_faces(net: FlowNetwork, darts: Optional[set] = None) -> list[list[int]]:
    """Faces of the embedding given by ``net.rotation``.

    The successor of dart ``d`` on its face is the dart following ``rev(d)``
    in the rotation at ``head(d)``.
    """
    if darts is None:
        darts = {d for r in net.rotation.values() for d in r}
    pos = {}
    for v, r in net.rotation.items():
        for i, d in enumerate(r):
            pos[d] = (v, i)
    faces, seen = [], set()
    for d0 in sorted(darts):
        if d0 in seen:
            continue
        face, d = [], d0
        while d not in seen:
            seen.add(d)
            face.append(d)
            v, i = pos[d ^ 1]
            r = net.rotation[v]
            d = r[(i + 1) % len(r)]
        faces.append(face)
    return faces


def rotation_problems(net: FlowNetwork) -> list[str]:
    """Validate the rotation system; an empty list means it is planar.

    The planar part is the set of vertices with a rotation entry. Each entry
    must be a cyclic order of exactly the darts leaving that vertex towards
    the planar part, and every connected component must satisfy
    ``V - E + F = 2``.
    """
    rot = net.rotation
    if not rot:
        return ["no rotation system"]
    problems = []
    planar = set(rot)
    for v, r in rot.items():
        expected = {e for e in net.out[v] if net.head[e] in planar}
        if len(r) != len(set(r)) or set(r) != expected:
            problems.append(f"rotation at vertex {net.names[v]} does not list its incident arcs exactly once")
    if problems:
        return problems
    # components of the planar part
    comp = {}
    for v0 in sorted(planar):
        if v0 in comp:
            continue
        comp[v0] = v0
        queue = deque([v0])
        while queue:
            u = queue.popleft()
            for d in rot[u]:
                w = net.head[d]
                if w not in comp:
                    comp[w] = v0
                    queue.append(w)
    stats = {}
    for v in planar:
        st = stats.setdefault(comp[v], [0, 0, 0])
        st[0] += 1
        st[1] += len(rot[v])  # darts; halved below
    for face in trace_faces(net):
        stats[comp[net.tail[face[0]]]][2] += 1
    for root, (nv, nd, nf) in sorted(stats.items()):
        if nd == 0:
            nf = 1
        euler = nv - nd // 2 + nf
        if euler != 2:
            problems.append(
                f"component of vertex {net.names[root]}: V - E + F = {nv} - {nd // 2} + {nf} = {euler} != 2"
            )
    return problems


def unbounded_path_exists(net: FlowNetwork, s: int, t: int, cap: Optional[Sequence] = None) -> bool:
    """True if ``t`` is reachable from ``s`` over infinite-capacity arcs."""
    cap = net.cap if cap is None else cap
    seen = {s}
    queue = deque([s])
    while queue:
        u = queue.popleft()
        for e in net.out[u]:
            w = net.head[e]
            if cap[e] == INF and w not in seen:
                if w == t:
                    return True
                seen.add(w)
                queue.append(w)
    return False
