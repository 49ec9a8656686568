import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as hs

from helpers import diamond, square
from planarflow.generator import grid_instance
from planarflow.netcore import (
    INF,
    ArcFunction,
    FlowNetwork,
    GadgetMap,
    add_super_terminals,
    check_feasible,
    excess,
    flow_stats,
    flow_value,
    lift,
    residual_capacity,
    restrict,
    rev,
    rotation_problems,
    scale_flow,
    sum_preflows,
    trace_faces,
    violation,
    violation_max,
)


def two_vertices():
    net = FlowNetwork()
    a, b = net.add_vertices(2)
    return net, a, b


def pair(c=5, c_rev=0):
    net, a, b = two_vertices()
    e, _ = net.add_arc_pair(a, b, c, c_rev)
    return net, e


# --- construction ---------------------------------------------------------------


def test_add_arc_pair_finite():
    net, a, b = two_vertices()
    e, e2 = net.add_arc_pair(a, b, 5)
    assert (net.cap[e], net.cap[e2]) == (5, 0)
    assert net.head[e] == b and net.tail[e] == a
    assert rev(e) == e2 and rev(e2) == e and net.head[e] == net.tail[e2]


def test_add_arc_pair_infinite():
    net, a, b = two_vertices()
    e, e2 = net.add_arc_pair(a, b, INF)
    assert net.cap[e] == INF and net.cap[e2] == 0


def test_parallel_pairs_are_distinct():
    net, a, b = two_vertices()
    p1 = net.add_arc_pair(a, b, 1)
    p2 = net.add_arc_pair(a, b, 2)
    assert net.m == 4 and set(p1).isdisjoint(p2)


def test_self_loop_rejected():
    net, a, _ = two_vertices()
    with pytest.raises(ValueError, match="self-loop"):
        net.add_arc_pair(a, a, 1)


def test_terminals_must_be_disjoint_and_uncapacitated():
    net = FlowNetwork()
    a = net.add_vertex()
    b = net.add_vertex(3)
    net.add_source(a)
    with pytest.raises(ValueError):
        net.add_sink(a)
    with pytest.raises(ValueError):
        net.add_sink(b)


def test_negative_capacity_rejected():
    net, a, b = two_vertices()
    with pytest.raises(ValueError):
        net.add_arc_pair(a, b, -1)
    with pytest.raises(ValueError):
        ArcFunction([1, -1])


# --- residual capacity, excess, violation ----------------------------------------------


def test_residual_direct_formula():
    net, e = pair(5)
    rho = ArcFunction([2, 1])
    assert residual_capacity(net, rho, e) == 4


def test_residual_of_reverse_arc():
    net, e = pair(5)
    rho = ArcFunction([3, 0])
    assert net.cap[e + 1] == 0
    assert residual_capacity(net, rho, e + 1) == 3


def test_residual_infinite_absorbs():
    net, e = pair(INF)
    assert residual_capacity(net, ArcFunction([17, 0]), e) == INF


def test_excess_in_minus_out():
    net = FlowNetwork()
    u, v, w = net.add_vertices(3)
    a, _ = net.add_arc_pair(u, v, 10)
    b, _ = net.add_arc_pair(v, w, 10)
    rho = ArcFunction.zeros(net)
    rho[a], rho[b] = 7, 3
    assert excess(net, rho, v) == 4


def test_excess_of_zero_function():
    net = diamond()
    zero = ArcFunction.zeros(net)
    assert all(excess(net, zero, v) == 0 for v in range(net.n))


def test_flow_has_zero_excess_off_terminals():
    net = diamond()
    f = ArcFunction([1, 0, 1, 0, 0, 0, 0, 0])
    assert [excess(net, f, v) for v in (1, 2)] == [0, 0]
    assert flow_value(net, f) == 1


def _through(vcap, amount):
    net = FlowNetwork()
    s, v, t = net.add_vertex(), net.add_vertex(vcap), net.add_vertex()
    a, _ = net.add_arc_pair(s, v, 100)
    b, _ = net.add_arc_pair(v, t, 100)
    f = ArcFunction.zeros(net)
    f[a] = f[b] = amount
    return net, f, v


def test_violation_overload():
    net, f, v = _through(6, 9)
    assert violation(net, f, v) == 3 and violation_max(net, f) == 3


def test_violation_slack():
    net, f, v = _through(6, 4)
    assert violation(net, f, v) == 0


def test_violation_uncapacitated():
    net, f, v = _through(INF, 10**6)
    assert violation(net, f, v) == 0 and violation_max(net, f) == 0


def test_flow_stats():
    net, f, v = _through(6, 9)
    st = flow_stats(net, f)
    assert st.max_violation == 3 and st.violated_vertices == {v}


# --- sums, scaling, restriction ----------------------------------------------------------


def test_sum_preflows_formula():
    net, e = pair(5, 5)
    out = sum_preflows(net, ArcFunction([3, 0]), ArcFunction([0, 5]))
    assert (out[e], out[e + 1]) == (0, 2)


def test_sum_with_zero_cancels_two_way_flow():
    net, e = pair(5, 5)
    out = sum_preflows(net, ArcFunction([4, 1]), ArcFunction([0, 0]))
    assert (out[e], out[e + 1]) == (3, 0)


def test_sum_adds():
    net, e = pair(5)
    out = sum_preflows(net, ArcFunction([2, 0]), ArcFunction([2, 0]))
    assert (out[e], out[e + 1]) == (4, 0)


def test_sum_rejects_mismatched_lengths():
    net, _ = pair()
    with pytest.raises(ValueError):
        sum_preflows(net, ArcFunction([1, 0]), ArcFunction([1, 0, 0, 0]))


def test_scale_identity_zero_and_fraction():
    rho = ArcFunction([6, 0, 3])
    assert scale_flow(1, rho) == rho
    assert scale_flow(0, rho) == ArcFunction([0, 0, 0])
    assert scale_flow(Fraction(1, 4), rho)[0] == Fraction(3, 2)


def test_scale_keeps_integers_as_int():
    out = scale_flow(Fraction(1, 2), ArcFunction([4]))
    assert out[0] == 2 and isinstance(out[0], int)


def test_restrict_identity():
    net = diamond()
    f = ArcFunction([1, 0, 1, 0, 2, 0, 2, 0])
    assert restrict(f, GadgetMap.identity(net.m), net) == f


def test_restrict_ignores_arcs_outside_g():
    net = diamond()
    gmap = GadgetMap(list(range(net.m)), list(range(net.m)) + [None] * 2)
    f_big = ArcFunction([0] * net.m + [5, 0])
    assert restrict(f_big, gmap, net) == ArcFunction.zeros(net)


def test_restrict_rejects_missing_correspondence():
    net = diamond()
    gmap = GadgetMap([None] + list(range(1, net.m)), list(range(net.m)))
    with pytest.raises(ValueError, match="no correspondence"):
        restrict(ArcFunction.zeros(net), gmap, net)


def test_restrict_after_lift_is_identity():
    net = diamond()
    gmap = GadgetMap(list(range(net.m)), list(range(net.m)))
    f = ArcFunction([1, 0, 1, 0, 0, 0, 0, 0])
    assert restrict(lift(f, gmap, net.m), gmap, net) == f


# --- super terminals ---------------------------------------------------------------------------


def test_super_terminals_counts():
    net = FlowNetwork()
    net.add_vertices(4)
    net.add_arc_pair(0, 3, 1)
    net.add_arc_pair(1, 3, 1)
    net.add_source(0)
    net.add_source(1)
    net.add_sink(3)
    w = add_super_terminals(net)
    assert w.net.n == net.n + 2
    assert w.net.m == net.m + 2 * 3
    assert w.k == 3
    assert w.net.sources == [w.s] and w.net.sinks == [w.t]
    assert w.net.cap[net.m] == INF
    assert w.net.cap[: net.m] == net.cap


def test_super_terminals_single_pair_still_wrapped():
    w = add_super_terminals(diamond())
    assert w.k == 2 and w.s == 4 and w.t == 5


def test_super_terminals_rejects_no_terminals():
    net, _ = pair()
    with pytest.raises(ValueError):
        add_super_terminals(net)


def test_super_terminals_leave_planar_part_intact():
    G = grid_instance(4, 4, 3, 10, 1)
    w = add_super_terminals(G)
    # s and t are outside the rotation system: removing them leaves the planar G
    assert w.s not in w.net.rotation and w.t not in w.net.rotation
    assert rotation_problems(w.net) == []


# --- feasibility --------------------------------------------------------------------------------


def test_zero_function_is_feasible_circulation():
    net = diamond()
    rep = check_feasible(net, ArcFunction.zeros(net))
    assert rep.feasible_flow and rep.value == 0


def test_source_arc_only_is_preflow_not_flow():
    net = diamond()
    f = ArcFunction.zeros(net)
    f[0] = 1
    rep = check_feasible(net, f)
    assert rep.feasible_preflow and not rep.feasible_flow
    assert rep.unbalanced == [1]


def test_arc_overload_is_reported():
    net = diamond()
    f = ArcFunction([2, 0, 2, 0, 0, 0, 0, 0])
    rep = check_feasible(net, f)
    assert not rep.arc_feasible and rep.bad_arcs == [0, 2]


def test_vertex_overload_is_reported():
    G = square(w=2)
    f = ArcFunction.zeros(G)
    for e in (4, 6):  # s -> w -> t carries 5 through w of capacity 2
        f[e] = 5
    rep = check_feasible(G, f)
    assert rep.arc_feasible and rep.is_flow and rep.bad_vertices == [2]


# --- rotation systems ---------------------------------------------------------------------


def _k4():
    pos = [(0, 2), (-2, -1), (2, -1), (0, 0)]
    net = FlowNetwork()
    net.add_vertices(4)
    for u, v in ((0, 1), (1, 2), (2, 0), (0, 3), (1, 3), (2, 3)):
        net.add_arc_pair(u, v, 1)
    for v in range(4):
        x0, y0 = pos[v]
        darts = sorted(
            net.out[v], key=lambda d: -math.atan2(pos[net.head[d]][1] - y0, pos[net.head[d]][0] - x0)
        )
        net.set_rotation(v, darts)
    return net


def test_k4_drawing_is_planar():
    net = _k4()
    assert rotation_problems(net) == []
    assert len(trace_faces(net)) == 4


def test_k4_with_swapped_pair_is_rejected():
    net = _k4()
    r = net.rotation[3]
    r[0], r[1] = r[1], r[0]
    assert len(trace_faces(net)) != 4
    problems = rotation_problems(net)
    assert problems and "V - E + F" in problems[0]


def test_rotation_must_list_every_dart():
    net = _k4()
    net.rotation[0] = net.rotation[0][:-1]
    assert "exactly once" in rotation_problems(net)[0]


@pytest.mark.parametrize("seed", range(10))
def test_generated_instances_pass_validation(seed):
    assert rotation_problems(grid_instance(5, 4, 3, 10, seed, clustered=seed % 2 == 1)) == []


def test_missing_rotation_reported():
    assert rotation_problems(diamond()) == ["no rotation system"]


# --- algebraic laws --------------------------------------------------------------------------

_vals = hs.fractions(min_value=0, max_value=20, max_denominator=6)


@settings(max_examples=200, deadline=None)
@given(hs.lists(_vals, min_size=8, max_size=8), hs.lists(_vals, min_size=4, max_size=4))
def test_residual_pair_sum_is_capacity_sum(vals, caps):
    net = FlowNetwork()
    net.add_vertices(3)
    net.add_arc_pair(0, 1, caps[0], caps[1])
    net.add_arc_pair(1, 2, caps[2], caps[3])
    # clip to a feasible preflow
    rho = ArcFunction(min(x, c) for x, c in zip(vals, net.cap))
    for e in range(net.m):
        total = residual_capacity(net, rho, e) + residual_capacity(net, rho, e ^ 1)
        assert total == net.cap[e] + net.cap[e ^ 1]


@settings(max_examples=200, deadline=None)
@given(hs.lists(_vals, min_size=12, max_size=12))
def test_sum_is_commutative_and_zero_keeps_residuals(vals):
    net = diamond(cap=40)
    net.add_arc_pair(1, 2, 40)
    net.add_arc_pair(2, 1, 40)
    rho, eta = ArcFunction(vals), ArcFunction(reversed(vals))
    assert sum_preflows(net, rho, eta) == sum_preflows(net, eta, rho)
    plain = sum_preflows(net, rho, ArcFunction.zeros(net))
    for e in range(net.m):
        assert residual_capacity(net, plain, e) == residual_capacity(net, rho, e)
    for e in range(0, net.m, 2):
        assert not (plain[e] > 0 and plain[e + 1] > 0)


@settings(max_examples=200, deadline=None)
@given(hs.lists(_vals, min_size=12, max_size=12))
def test_excess_sums_to_zero(vals):
    net = diamond(cap=40)
    net.add_arc_pair(1, 2, 40)
    net.add_arc_pair(2, 1, 40)
    rho = ArcFunction(vals)
    assert sum(excess(net, rho, v) for v in range(net.n)) == 0


@settings(max_examples=100, deadline=None)
@given(hs.integers(0, 5), hs.integers(0, 5))
def test_value_equals_net_inflow_at_sink(x, y):
    w = add_super_terminals(diamond(cap=5))
    net = w.net
    f = ArcFunction.zeros(net)
    # route x on s->a->t and y on s->b->t, through the super terminals
    for e in (0, 2):
        f[e] = x
    for e in (4, 6):
        f[e] = y
    f[net.m - 4] = x + y  # super source -> original source
    f[net.m - 2] = x + y  # original sink -> super sink
    assert check_feasible(net, f).is_flow
    assert flow_value(net, f) == excess(net, f, w.t) == x + y
