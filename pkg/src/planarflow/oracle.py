"""Ground truth: the vertex-split reduction and a plain augmenting-path max flow.

Deliberately independent of the push-relabel code so it can check it.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Optional

from .netcore import (
    INF,
    ArcFunction,
    FlowNetwork,
    add_super_terminals,
    as_value,
    flow_value,
)


@dataclass
class SplitMap:
    vin: list
    vout: list
    arc: list  # original arc -> split arc (reverses map to reverses)
    bridge: list  # vertex -> forward bridge arc (vin, vout)

    def source_of(self, v: int) -> int:
        return self.vout[v]

    def sink_of(self, v: int) -> int:
        return self.vin[v]


def vertex_split_reduce(G: FlowNetwork) -> tuple[FlowNetwork, SplitMap]:
    """Replace every vertex v by a bridge (v_in, v_out) of capacity c(v).

    Arc (u, v) becomes (u_out, v_in). Sources of the split network are the
    ``v_out`` copies, sinks the ``v_in`` copies.
    """
    net = FlowNetwork()
    vin, vout = [], []
    for v in range(G.n):
        vin.append(net.add_vertex(INF, f"{G.names[v]}_in"))
        vout.append(net.add_vertex(INF, f"{G.names[v]}_out"))
    arc = [0] * G.m
    for e in G.forward_arcs():
        a, _ = net.add_arc_pair(vout[G.tail[e]], vin[G.head[e]], G.cap[e], G.cap[e + 1])
        arc[e], arc[e + 1] = a, a + 1
    bridge = []
    for v in range(G.n):
        b, _ = net.add_arc_pair(vin[v], vout[v], G.vertex_cap[v])
        bridge.append(b)
    for s in G.sources:
        net.add_source(vout[s])
    for t in G.sinks:
        net.add_sink(vin[t])
    return net, SplitMap(vin, vout, arc, bridge)


def reference_max_flow(
    net: FlowNetwork,
    s: int,
    t: int,
    warm_start: Optional[ArcFunction] = None,
    stats: Optional[dict] = None,
) -> ArcFunction:
    """Maximum s-t flow by shortest augmenting paths (Edmonds-Karp).

    ``warm_start`` must be arc-feasible and conserving; augmentation starts
    from it. ``stats['augmentations']`` receives the number of augmenting
    paths used.
    """
    cap = net.cap
    res = list(cap)
    if warm_start is not None:
        for e in range(0, net.m, 2):
            d = warm_start[e] - warm_start[e + 1]
            if d:
                if res[e] != INF:
                    res[e] -= d
                if res[e + 1] != INF:
                    res[e + 1] += d
    head, out = net.head, net.out
    augmentations = 0
    while True:
        pred = [-1] * net.n
        pred[s] = -2
        queue = deque([s])
        while queue and pred[t] == -1:
            u = queue.popleft()
            for e in out[u]:
                w = head[e]
                if pred[w] == -1 and res[e] > 0:
                    pred[w] = e
                    queue.append(w)
        if pred[t] == -1:
            break
        path, v = [], t
        while v != s:
            e = pred[v]
            path.append(e)
            v = net.tail[e]
        delta = min(res[e] for e in path)
        if delta == INF:
            raise ValueError("maximum flow is unbounded (infinite-capacity s-t path)")
        for e in path:
            if res[e] != INF:
                res[e] -= delta
            if res[e ^ 1] != INF:
                res[e ^ 1] += delta
        augmentations += 1
    if stats is not None:
        stats["augmentations"] = stats.get("augmentations", 0) + augmentations
    return _flow_from_residual(net, res, warm_start)


def _flow_from_residual(net, res, warm_start):
    out = [0] * net.m
    for e in range(0, net.m, 2):
        if net.cap[e] != INF:
            d = net.cap[e] - res[e]
        elif net.cap[e + 1] != INF:
            d = res[e + 1] - net.cap[e + 1]
        else:
            d = warm_start[e] - warm_start[e + 1] if warm_start is not None else 0
        if d > 0:
            out[e] = as_value(d)
        elif d < 0:
            out[e + 1] = as_value(-d)
    f = ArcFunction.__new__(ArcFunction)
    f.values = out
    return f


def min_cut_by_enumeration(net: FlowNetwork, s: int, t: int):
    """Minimum s-t cut capacity by trying every vertex subset (n <= 12)."""
    others = [v for v in range(net.n) if v not in (s, t)]
    if len(others) > 10:
        raise ValueError("cut enumeration is limited to 12 vertices")
    best = INF
    for r in range(len(others) + 1):
        for chosen in itertools.combinations(others, r):
            side = set(chosen) | {s}
            c = sum(net.cap[e] for e in range(net.m) if net.tail[e] in side and net.head[e] not in side)
            best = min(best, c)
    return best


def vertex_capacitated_max_flow(G: FlowNetwork) -> tuple[object, ArcFunction]:
    """Reference value and flow for a multi-terminal vertex-capacitated G."""
    st = add_super_terminals(G)
    split, smap = vertex_split_reduce(st.net)
    f_split = reference_max_flow(split, smap.source_of(st.s), smap.sink_of(st.t))
    f = ArcFunction(f_split[smap.arc[e]] for e in range(G.m))
    return flow_value(split, f_split, [smap.source_of(st.s)]), f


def oracle_value(G: FlowNetwork):
    return vertex_capacitated_max_flow(G)[0]
