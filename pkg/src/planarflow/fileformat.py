"""Line-oriented instance files.

::

    c comment
    p vcap <n> <m> <k_s> <k_t>
    v <id> <cap|inf>
    a <id> <tail> <head> <cap|inf>
    s <id>
    t <id>
    r <vertex> <arc-id> ...

Vertex and arc ids are 0-based and dense. Reverse arcs are implicit: arc
``i`` of the file is arc ``2 * i`` of the network. A rotation line lists the
edges incident to a vertex in clockwise order by their file arc id.
"""

from __future__ import annotations

from fractions import Fraction
from typing import TextIO, Union
import os

from .netcore import INF, FlowNetwork


class InstanceFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_cap(tok: str, lineno: int):
    if tok == "inf":
        return INF
    try:
        c = int(tok)
    except ValueError:
        raise InstanceFormatError(f"bad capacity {tok!r}", lineno) from None
    if c < 0:
        raise InstanceFormatError(f"negative capacity {c}", lineno)
    return c


def _int(tok: str, lineno: int, what: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise InstanceFormatError(f"bad {what} {tok!r}", lineno) from None


def parse_instance(text: str) -> FlowNetwork:
    header = None
    vcaps, arcs, sources, sinks, rotations = {}, {}, [], [], {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        tok = raw.split()
        if not tok or tok[0] == "c":
            continue
        kind = tok[0]
        if kind == "p":
            if header is not None:
                raise InstanceFormatError("duplicate header", lineno)
            if len(tok) != 6 or tok[1] != "vcap":
                raise InstanceFormatError("header must be 'p vcap <n> <m> <k_s> <k_t>'", lineno)
            header = [_int(x, lineno, "header field") for x in tok[2:]]
            continue
        if header is None:
            raise InstanceFormatError("missing 'p vcap' header before data", lineno)
        n, m = header[0], header[1]
        if kind == "v":
            if len(tok) != 3:
                raise InstanceFormatError("expected 'v <id> <cap>'", lineno)
            v = _int(tok[1], lineno, "vertex id")
            if not 0 <= v < n:
                raise InstanceFormatError(f"vertex {v} out of range", lineno)
            if v in vcaps:
                raise InstanceFormatError(f"duplicate vertex {v}", lineno)
            vcaps[v] = _parse_cap(tok[2], lineno)
        elif kind == "a":
            if len(tok) != 5:
                raise InstanceFormatError("expected 'a <id> <tail> <head> <cap>'", lineno)
            a = _int(tok[1], lineno, "arc id")
            u = _int(tok[2], lineno, "tail")
            w = _int(tok[3], lineno, "head")
            if not 0 <= a < m:
                raise InstanceFormatError(f"arc {a} out of range", lineno)
            if a in arcs:
                raise InstanceFormatError(f"duplicate arc {a}", lineno)
            for x in (u, w):
                if not 0 <= x < n:
                    raise InstanceFormatError(f"vertex {x} out of range", lineno)
            if u == w:
                raise InstanceFormatError(f"self-loop at vertex {u}", lineno)
            arcs[a] = (u, w, _parse_cap(tok[4], lineno), lineno)
        elif kind in ("s", "t"):
            if len(tok) != 2:
                raise InstanceFormatError(f"expected '{kind} <id>'", lineno)
            v = _int(tok[1], lineno, "vertex id")
            if not 0 <= v < n:
                raise InstanceFormatError(f"vertex {v} out of range", lineno)
            (sources if kind == "s" else sinks).append((v, lineno))
        elif kind == "r":
            v = _int(tok[1], lineno, "vertex id") if len(tok) > 1 else None
            if v is None or not 0 <= v < n:
                raise InstanceFormatError("rotation line needs a valid vertex", lineno)
            if v in rotations:
                raise InstanceFormatError(f"duplicate rotation for vertex {v}", lineno)
            rotations[v] = ([_int(x, lineno, "arc id") for x in tok[2:]], lineno)
        else:
            raise InstanceFormatError(f"unknown line type {kind!r}", lineno)

    if header is None:
        raise InstanceFormatError("empty instance: missing header")
    n, m, ks, kt = header
    if len(arcs) != m:
        raise InstanceFormatError(f"header declares {m} arcs, found {len(arcs)}")
    if len(sources) != ks or len(sinks) != kt:
        raise InstanceFormatError(
            f"header declares {ks} sources and {kt} sinks, found {len(sources)} and {len(sinks)}"
        )

    net = FlowNetwork()
    for v in range(n):
        net.add_vertex(vcaps.get(v, INF))
    for a in range(m):
        u, w, c, _ = arcs[a]
        net.add_arc_pair(u, w, c)
    for group, add in ((sources, net.add_source), (sinks, net.add_sink)):
        for v, lineno in group:
            try:
                add(v)
            except ValueError as exc:
                raise InstanceFormatError(str(exc), lineno) from None
    for v, (ids, lineno) in sorted(rotations.items()):
        darts = []
        for a in ids:
            if not 0 <= a < m:
                raise InstanceFormatError(f"arc {a} out of range", lineno)
            e = 2 * a
            if net.tail[e] == v:
                darts.append(e)
            elif net.head[e] == v:
                darts.append(e + 1)
            else:
                raise InstanceFormatError(f"arc {a} is not incident to vertex {v}", lineno)
        net.set_rotation(v, darts)
    return net


def read_instance(path: Union[str, os.PathLike]) -> FlowNetwork:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


def _fmt_cap(c) -> str:
    if c == INF:
        return "inf"
    if isinstance(c, Fraction) and c.denominator != 1:
        # only derived networks (dumps) carry these; the parser rejects them
        return f"{c.numerator}/{c.denominator}"
    return str(int(c))


def format_instance(net: FlowNetwork, comment: str | None = None, both_directions: bool = False) -> str:
    """Serialise ``net``.

    With ``both_directions`` every arc of positive capacity, reverse arcs
    included, is written as its own forward arc; this is how materialised
    residual networks are dumped. Rotation lines are omitted in that mode.
    """
    lines = []
    if comment:
        lines += [f"c {line}" for line in comment.splitlines()]
    if both_directions:
        arcs = [e for e in range(net.m) if net.cap[e] != 0]
    else:
        arcs = list(net.forward_arcs())
    lines.append(f"p vcap {net.n} {len(arcs)} {len(net.sources)} {len(net.sinks)}")
    for v in range(net.n):
        lines.append(f"v {v} {_fmt_cap(net.vertex_cap[v])}")
    for i, e in enumerate(arcs):
        lines.append(f"a {i} {net.tail[e]} {net.head[e]} {_fmt_cap(net.cap[e])}")
    lines += [f"s {v}" for v in net.sources]
    lines += [f"t {v}" for v in net.sinks]
    if not both_directions:
        for v in sorted(net.rotation):
            lines.append(" ".join(["r", str(v)] + [str(d // 2) for d in net.rotation[v]]))
    return "\n".join(lines) + "\n"


def write_instance(net: FlowNetwork, fh: TextIO, comment: str | None = None) -> None:
    fh.write(format_instance(net, comment))
