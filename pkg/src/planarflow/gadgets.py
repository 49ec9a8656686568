"""Derived networks used by the vertex-capacity solver.

* the cycle expansion, where every capacitated planar vertex becomes a
  bidirected cycle whose arcs carry half the vertex capacity;
* the split network, where the cycle of each overloaded vertex collapses
  into an in/out pair joined by a bridge of the vertex capacity;
* the residual network of the split network with the bridges reversed and a
  second source/sink pair feeding the overloads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from .netcore import (
    INF,
    ArcFunction,
    FlowNetwork,
    GadgetMap,
    InvariantError,
    as_value,
    inflow,
    outflow,
)


@dataclass(frozen=True)
class InfeasibleSet:
    X: tuple
    vio: dict

    def __post_init__(self):
        for x in self.X:
            if not self.vio.get(x, 0) > 0:
                raise ValueError(f"vertex {x} has no positive violation")

    def __len__(self):
        return len(self.X)

    def __contains__(self, v):
        return v in self.vio

    @property
    def total(self):
        return as_value(sum(self.vio.values()))

    @property
    def max(self):
        return max(self.vio.values(), default=0)


def infeasible_set(G: FlowNetwork, f: ArcFunction) -> InfeasibleSet:
    vio = {}
    for v in range(G.n):
        c = G.vertex_cap[v]
        if c != INF:
            d = inflow(G, f, v) - c
            if d > 0:
                vio[v] = as_value(d)
    return InfeasibleSet(tuple(sorted(vio)), vio)


def _half(c):
    return INF if c == INF else as_value(Fraction(c, 2))


def build_g_circle(G: FlowNetwork) -> tuple[FlowNetwork, GadgetMap]:
    """Expand every non-terminal vertex into a cycle following its rotation.

    Vertex ``v`` keeps its id as the first cycle vertex; the others are
    appended. Terminals and uncapacitated vertices without a full rotation
    are not expanded. Arc ids of ``G`` are preserved, each arc reattaching to the
    cycle vertex at its position in the rotation. Cycle edge ``i`` joins
    cycle vertices ``i`` and ``i+1`` by two arc pairs, one per direction,
    each of capacity ``c(v)/2``.
    """
    terminals = set(G.terminals)
    for v in range(G.n):
        if v in terminals:
            continue
        if v in G.rotation and set(G.rotation[v]) == set(G.out[v]):
            continue
        if G.vertex_cap[v] != INF:
            raise ValueError(f"vertex {G.names[v]} has no complete rotation; the cycle expansion needs one")
        # uncapacitated vertices touching the non-planar part (such as the
        # original terminals behind a super source) stay as they are
        terminals.add(v)
    net = FlowNetwork()
    for v in range(G.n):
        net.add_vertex(INF, G.names[v])
    expanded = [v for v in range(G.n) if v not in terminals]
    slot = {}  # dart -> vertex of the expansion it now leaves
    members = {}
    for v in range(G.n):
        if v in terminals:
            members[v] = [v]
            for d in G.out[v]:
                slot[d] = v
            continue
        rot = G.rotation[v]
        verts = [v] + [net.add_vertex(INF, f"{G.names[v]}.{i}") for i in range(1, len(rot))]
        members[v] = verts
        for i, d in enumerate(rot):
            slot[d] = verts[i]
    for e in G.forward_arcs():
        net.add_arc_pair(slot[e], slot[e + 1], G.cap[e], G.cap[e + 1])
    cycles = {}
    for v in expanded:
        verts, d = members[v], len(members[v])
        outer, inner = [], []
        if d >= 2:
            c = _half(G.vertex_cap[v])
            for i in range(d):
                a, b = verts[i], verts[(i + 1) % d]
                outer.append(net.add_arc_pair(a, b, c)[0])
                inner.append(net.add_arc_pair(b, a, c)[0])
        cycles[v] = (verts, outer, inner)
    for v in range(G.n):
        if v in terminals:
            if v in G.rotation:
                net.set_rotation(v, G.rotation[v])
            continue
        verts, outer, inner = cycles[v]
        d = len(verts)
        for i, dart in enumerate(G.rotation[v]):
            if d == 1:
                net.set_rotation(verts[0], [dart])
            else:
                j = (i - 1) % d
                net.set_rotation(verts[i], [dart, outer[i], inner[i] + 1, inner[j], outer[j] + 1])
    for v in G.sources:
        net.add_source(v)
    for v in G.sinks:
        net.add_sink(v)
    gmap = GadgetMap(list(range(G.m)), list(range(G.m)) + [None] * (net.m - G.m), members, cycles)
    return net, gmap


def route_through_cycles(G: FlowNetwork, G_circle: FlowNetwork, gmap: GadgetMap, f: ArcFunction) -> ArcFunction:
    """Extend a flow on ``G`` to the cycle expansion.

    Around each cycle the net amount on edge ``i`` is ``x0 + P_i`` where
    ``P`` are prefix sums of the supplies at the cycle vertices. Choosing
    ``x0`` midway keeps every cycle arc at most ``(max P - min P) / 2``,
    which fits in ``c(v)/2`` whenever ``v`` is feasible under ``f``.
    """
    out = list(f.values) + [0] * (G_circle.m - G.m)
    for v, (verts, outer, inner) in gmap.cycles.items():
        supply = [f[d ^ 1] - f[d] for d in G.rotation[v]]
        if sum(supply) != 0:
            raise ValueError(f"flow does not conserve at vertex {G.names[v]}")
        if len(verts) < 2:
            continue
        prefix, p = [], 0
        for x in supply:
            p += x
            prefix.append(p)
        x0 = -Fraction(max(prefix) + min(prefix), 2)
        for i, p in enumerate(prefix):
            x = as_value(x0 + p)
            if x > 0:
                out[outer[i]] = x
            elif x < 0:
                out[inner[i]] = -x
    g = ArcFunction.__new__(ArcFunction)
    g.values = out
    return g


@dataclass
class SplitGadget:
    """The split network together with its bookkeeping."""

    net: FlowNetwork
    gmap: GadgetMap  # expansion arcs -> split arcs
    to_g: GadgetMap  # arcs of G -> split arcs
    X: InfeasibleSet
    vertex_cap: dict  # x -> c(x)
    bridges: dict  # x -> bridge arc (x_in, x_out)
    apices: tuple
    s: int
    t: int
    vertex_of: list = field(default_factory=list)  # expansion vertex -> split vertex


def build_g_times(G_circle: FlowNetwork, gmap_c: GadgetMap, X: InfeasibleSet, G: FlowNetwork) -> SplitGadget:
    """Collapse the cycle of every ``x`` in ``X`` into ``x_in -> x_out``."""
    if len(G.sources) != 1 or len(G.sinks) != 1:
        raise ValueError("the split network needs a single source and a single sink")
    owner = {}
    for x in X.X:
        if not 0 <= x < G.n or x not in gmap_c.vertex_map:
            raise ValueError(f"vertex {x} is not a vertex of the network")
        if x in G.terminals:
            raise ValueError(f"terminal {x} cannot be overloaded")
        for w in gmap_c.vertex_map[x]:
            owner[w] = x
    net = FlowNetwork()
    vertex_of = [None] * G_circle.n
    for v in range(G_circle.n):
        if v not in owner:
            vertex_of[v] = net.add_vertex(INF, G_circle.names[v])
    ends = {}
    for x in X.X:
        name = G.names[x]
        ends[x] = (net.add_vertex(INF, f"{name}.in"), net.add_vertex(INF, f"{name}.out"))

    def image(a):
        u, w = G_circle.tail[a], G_circle.head[a]
        ou, ow = owner.get(u), owner.get(w)
        return (vertex_of[u] if ou is None else ends[ou][1], vertex_of[w] if ow is None else ends[ow][0])

    fwd = [None] * G_circle.m
    for e in G_circle.forward_arcs():
        u, w = G_circle.tail[e], G_circle.head[e]
        ou, ow = owner.get(u), owner.get(w)
        if ou is None and ow is None:
            a, _ = net.add_arc_pair(vertex_of[u], vertex_of[w], G_circle.cap[e], G_circle.cap[e + 1])
            fwd[e], fwd[e + 1] = a, a + 1
        elif ou is not None and ou == ow:
            continue  # internal to a collapsed cycle
        else:
            positive = [a for a in (e, e + 1) if G_circle.cap[a] > 0]
            for a in positive:
                fwd[a] = net.add_arc_pair(*image(a), G_circle.cap[a])[0]
            if len(positive) == 1:
                # the zero partner rides on the fresh reverse stub
                a = positive[0]
                fwd[a ^ 1] = fwd[a] + 1
    bridges = {}
    for x in X.X:
        bridges[x] = net.add_arc_pair(*ends[x], G.vertex_cap[x])[0]
    back = [None] * net.m
    for e, d in enumerate(fwd):
        if d is not None:
            back[d] = e
    gmap = GadgetMap(fwd, back, ends)
    s, t = vertex_of[G.sources[0]], vertex_of[G.sinks[0]]
    net.add_source(s)
    net.add_sink(t)
    apices = tuple(sorted({s, t} | {v for pair in ends.values() for v in pair}))
    return SplitGadget(
        net, gmap, gmap_c.compose(gmap), X, {x: G.vertex_cap[x] for x in X.X}, bridges, apices, s, t, vertex_of
    )


def lift_flow_to_g_times(f_circle: ArcFunction, gx: SplitGadget) -> ArcFunction:
    """Carry a flow on the expansion over to the split network.

    Shared arcs keep their value; each bridge carries everything that
    enters the collapsed vertex.
    """
    net = gx.net
    out = [0] * net.m
    for e, d in enumerate(gx.gmap.fwd):
        if d is not None:
            out[d] = f_circle[e]
    f = ArcFunction.__new__(ArcFunction)
    f.values = out
    for x, b in gx.bridges.items():
        x_in, x_out = gx.gmap.vertex_map[x]
        f[b] = inflow(net, f, x_in)
        if inflow(net, f, x_out) != outflow(net, f, x_out):
            raise InvariantError(f"flow does not conserve through collapsed vertex {x}")
    return f


@dataclass
class AuxNetwork:
    net: FlowNetwork
    s: int  # the new source feeding the overloads
    t: int
    apices: tuple
    feeds: dict  # x -> arc (s', x_in)
    drains: dict  # x -> arc (x_out, t')


def build_h(gx: SplitGadget, f_times: ArcFunction) -> AuxNetwork:
    """Residual network of the split network with bridges turned around.

    Arc ids match the split network; the feeding and draining arcs are
    appended after them.
    """
    G, X = gx.net, gx.X
    net = FlowNetwork()
    for v in range(G.n):
        net.add_vertex(INF, G.names[v])
    bridge_of = {b: x for x, b in gx.bridges.items()}
    for e in G.forward_arcs():
        if e in bridge_of:
            net.add_arc_pair(G.tail[e], G.head[e], 0, gx.vertex_cap[bridge_of[e]])
            continue
        r = []
        for a in (e, e + 1):
            c = G.cap[a]
            r.append(INF if c == INF else as_value(c - f_times[a] + f_times[a ^ 1]))
        if min(r) < 0:
            raise InvariantError(f"flow exceeds capacity on arc pair {e} outside the bridges")
        net.add_arc_pair(G.tail[e], G.head[e], r[0], r[1])
    s2 = net.add_vertex(INF, "s'")
    t2 = net.add_vertex(INF, "t'")
    feeds, drains = {}, {}
    for x in X.X:
        v = X.vio[x]
        if not v > 0:
            raise ValueError(f"vertex {x} has no positive violation")
        x_in, x_out = gx.gmap.vertex_map[x]
        feeds[x] = net.add_arc_pair(s2, x_in, v)[0]
        drains[x] = net.add_arc_pair(x_out, t2, v)[0]
    net.add_source(s2)
    net.add_sink(t2)
    return AuxNetwork(net, s2, t2, tuple(sorted(set(gx.apices) | {s2, t2})), feeds, drains)
