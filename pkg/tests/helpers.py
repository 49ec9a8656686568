"""Small hand-built instances shared by the tests."""

from planarflow.fileformat import parse_instance
from planarflow.netcore import FlowNetwork


def diamond(cap=1) -> FlowNetwork:
    """s -> a -> t and s -> b -> t; vertices s=0, a=1, b=2, t=3."""
    net = FlowNetwork()
    net.add_vertices(4)
    for u, v in ((0, 1), (1, 3), (0, 2), (2, 3)):
        net.add_arc_pair(u, v, cap)
    net.add_source(0)
    net.add_sink(3)
    return net


# s=0 and t=3 on the outer face, v=1 on the top path, w=2 on the bottom path
SQUARE = """\
p vcap 4 5 1 1
v 1 3
v 2 {w}
a 0 0 1 9
a 1 1 3 9
a 2 0 2 {bottom}
a 3 2 3 {bottom}
a 4 1 2 9
s 0
t 3
r 0 0 2
r 1 1 4 0
r 2 2 4 3
r 3 3 1
"""


def square(w="inf", bottom=5):
    return parse_instance(SQUARE.format(w=w, bottom=bottom))


# one vertex of capacity 4 with sources and sinks alternating around it
STAR = """\
p vcap 5 4 2 2
v 0 4
a 0 1 0 10
a 1 0 2 10
a 2 3 0 10
a 3 0 4 10
s 1
s 3
t 2
t 4
r 0 0 1 2 3
r 1 0
r 2 1
r 3 2
r 4 3
"""


def star():
    return parse_instance(STAR)


# s=0 -> a=1 -> v=2 and s -> v directly; v -> b=3 -> t=4 and v -> t directly.
# Every s-t path passes through v.
CUT_VERTEX = """\
p vcap 5 6 1 1
v 2 {c}
a 0 0 1 6
a 1 0 2 4
a 2 1 2 5
a 3 2 3 7
a 4 2 4 3
a 5 3 4 7
s 0
t 4
r 0 0 1
r 1 2 0
r 2 2 4 3 1
r 3 3 5
r 4 4 5
"""


def cut_vertex(c):
    return parse_instance(CUT_VERTEX.format(c=c))

