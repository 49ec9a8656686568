"""Seeded random planar instances on triangulated grids."""

from __future__ import annotations

import math
import random
from typing import Optional

from .netcore import INF, FlowNetwork


def grid_instance(
    width: int,
    height: int,
    k: int,
    max_cap: int,
    seed: int,
    *,
    diagonal_prob: float = 0.5,
    both_prob: float = 0.2,
    vertex_cap_prob: float = 1.0,
    vertex_cap_max: Optional[int] = None,
    n_sources: Optional[int] = None,
    clustered: bool = False,
) -> FlowNetwork:
    """A ``width`` x ``height`` grid with some noncrossing cell diagonals.

    Each edge gets one arc in a random direction, and with probability
    ``both_prob`` a second arc the other way. Arc capacities are uniform in
    ``[1, max_cap]``; non-terminal vertices get a capacity in
    ``[1, vertex_cap_max]`` (default ``max_cap``) with probability
    ``vertex_cap_prob`` and stay uncapacitated otherwise.
    ``k`` distinct terminals are drawn, at least one source and one sink.
    With ``clustered`` the terminals are taken around one hub vertex in
    cyclic order, alternating sources and sinks, so flow has to weave
    through the hub.
    """
    if width < 1 or height < 1 or width * height < 2:
        raise ValueError("grid needs at least two vertices")
    if not 2 <= k <= width * height:
        raise ValueError(f"k must lie in [2, {width * height}]")
    if max_cap < 1:
        raise ValueError("max_cap must be at least 1")
    vmax = max_cap if vertex_cap_max is None else vertex_cap_max
    if vmax < 1:
        raise ValueError("vertex_cap_max must be at least 1")
    rng = random.Random(seed)
    pos = [(x, y) for y in range(height) for x in range(width)]

    def vid(x, y):
        return y * width + x

    edges = []
    for y in range(height):
        for x in range(width):
            if x + 1 < width:
                edges.append((vid(x, y), vid(x + 1, y)))
            if y + 1 < height:
                edges.append((vid(x, y), vid(x, y + 1)))
            if x + 1 < width and y + 1 < height and rng.random() < diagonal_prob:
                if rng.random() < 0.5:
                    edges.append((vid(x, y), vid(x + 1, y + 1)))
                else:
                    edges.append((vid(x + 1, y), vid(x, y + 1)))

    if clustered:
        hub = rng.randrange(width * height)
        around = _ring(hub, edges, pos)
        if len(around) < k:
            around += rng.sample([v for v in range(width * height) if v != hub and v not in around], k - len(around))
        start = rng.randrange(len(around))
        terminals = (around[start:] + around[:start])[:k]
        sources, sinks = terminals[0::2], terminals[1::2]
    else:
        terminals = rng.sample(range(width * height), k)
        ks = n_sources if n_sources is not None else rng.randint(1, k - 1)
        if not 1 <= ks <= k - 1:
            raise ValueError("need at least one source and one sink")
        sources, sinks = terminals[:ks], terminals[ks:]
    tset = set(terminals)

    net = FlowNetwork()
    for v in range(width * height):
        if v in tset or rng.random() >= vertex_cap_prob:
            net.add_vertex(INF, f"{pos[v][0]},{pos[v][1]}")
        else:
            net.add_vertex(rng.randint(1, vmax), f"{pos[v][0]},{pos[v][1]}")
    darts = {v: [] for v in range(net.n)}
    for a, b in edges:
        u, w = (a, b) if rng.random() < 0.5 else (b, a)
        group = [net.add_arc_pair(u, w, rng.randint(1, max_cap))[0]]
        if rng.random() < both_prob:
            group.append(net.add_arc_pair(w, u, rng.randint(1, max_cap))[0])
        lo = min(a, b)
        for rank, e in enumerate(group):
            for d in (e, e + 1):
                v = net.tail[d]
                # parallel arcs appear in opposite orders at the two ends
                darts[v].append((d, rank if v == lo else -rank))
    for v, ds in darts.items():
        x0, y0 = pos[v]

        def key(item):
            d, rank = item
            x1, y1 = pos[net.head[d]]
            return (-math.atan2(y1 - y0, x1 - x0), rank)

        net.set_rotation(v, [d for d, _ in sorted(ds, key=key)])
    for v in sources:
        net.add_source(v)
    for v in sinks:
        net.add_sink(v)
    return net


def _ring(hub, edges, pos):
    """Neighbours of ``hub`` in clockwise order."""
    nbrs = {b if a == hub else a for a, b in edges if hub in (a, b)}
    x0, y0 = pos[hub]
    return sorted(nbrs, key=lambda v: -math.atan2(pos[v][1] - y0, pos[v][0] - x0))


def corpus(count: int, seed: int = 0, sizes=(3, 4, 5, 6), ks=(2, 3, 4, 5), max_cap: int = 20):
    """``count`` instances with parameters drawn from a seeded stream.

    Every other instance uses clustered terminals, bidirected edges and
    vertex capacities at most a third of ``max_cap``, where the cycle
    expansion tends to overshoot the true optimum.
    """
    rng = random.Random(seed)
    out = []
    for i in range(count):
        w, h = rng.choice(sizes), rng.choice(sizes)
        k = rng.choice(ks)
        C = rng.randint(1, max_cap)
        inst_seed = seed * 100003 + i
        if i % 2:
            G = grid_instance(w, h, k, C, inst_seed, both_prob=1.0, vertex_cap_max=max(1, C // 3), clustered=True)
        else:
            G = grid_instance(w, h, k, C, inst_seed)
        out.append(((w, h, k, C, inst_seed, bool(i % 2)), G))
    return out


def random_network(n: int, m: int, max_cap: int, seed: int) -> FlowNetwork:
    """Sparse random digraph with source 0 and sink n-1, arc capacities only."""
    if n < 2:
        raise ValueError("need at least two vertices")
    rng = random.Random(seed)
    net = FlowNetwork()
    net.add_vertices(n)
    for _ in range(m):
        u, v = rng.sample(range(n), 2)
        net.add_arc_pair(u, v, rng.randint(1, max_cap))
    net.add_source(0)
    net.add_sink(n - 1)
    return net


def apex_grid(width: int, height: int, apices: int, max_cap: int, seed: int, attach: int = 4):
    """Grid with ``apices`` extra vertices, each wired to ``attach`` grid vertices.

    The first extra vertex is the source and the second the sink. Returns
    ``(net, apex_list)``; no vertex capacities.
    """
    if apices < 2:
        raise ValueError("need at least the source and sink apices")
    rng = random.Random(seed)
    net = FlowNetwork()
    cells = width * height
    net.add_vertices(cells)

    def vid(x, y):
        return y * width + x

    for y in range(height):
        for x in range(width):
            for nx, ny in ((x + 1, y), (x, y + 1)):
                if nx < width and ny < height:
                    a, b = vid(x, y), vid(nx, ny)
                    net.add_arc_pair(a, b, rng.randint(1, max_cap), rng.randint(0, max_cap))
    extra = [net.add_vertex() for _ in range(apices)]
    for i, a in enumerate(extra):
        for v in rng.sample(range(cells), min(attach, cells)):
            if i == 0:
                net.add_arc_pair(a, v, rng.randint(1, max_cap))
            elif i == 1:
                net.add_arc_pair(v, a, rng.randint(1, max_cap))
            else:
                net.add_arc_pair(v, a, rng.randint(1, max_cap), rng.randint(1, max_cap))
    net.add_source(extra[0])
    net.add_sink(extra[1])
    return net, extra
