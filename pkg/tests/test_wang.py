import random
from fractions import Fraction

import pytest

from helpers import cut_vertex, square, star
from planarflow.apexflow import ApexStats
from planarflow.gadgets import (
    build_g_circle,
    build_g_times,
    infeasible_set,
    lift_flow_to_g_times,
    route_through_cycles,
)
from planarflow.generator import grid_instance
from planarflow.netcore import (
    ArcFunction,
    FlowError,
    FlowNetwork,
    add_super_terminals,
    check_feasible,
    flow_value,
    restrict,
    sum_preflows,
    violation,
)
from planarflow.oracle import oracle_value, reference_max_flow
from planarflow.wang import (
    SolveReport,
    acyclicize,
    cleanup_phase,
    compute_g_times,
    decompose,
    flow_of_value,
    has_flow_cycle,
    improvement_phase,
    max_flow_vertex_capacities,
    prepare,
    probe_state,
)


def parallel_units(paths=4):
    """``paths`` disjoint unit paths s -> v_i -> t."""
    net = FlowNetwork()
    s, t = net.add_vertex(), net.add_vertex()
    for _ in range(paths):
        v = net.add_vertex()
        net.add_arc_pair(s, v, 1)
        net.add_arc_pair(v, t, 1)
    net.add_source(s)
    net.add_sink(t)
    return net


# --- flows of a given value --------------------------------------------------------------


def test_value_zero_gives_zero_flow():
    net = parallel_units()
    assert flow_of_value(net, 0, 1, 0) == ArcFunction.zeros(net)


def test_value_at_maximum():
    net = parallel_units()
    f = flow_of_value(net, 0, 1, 4)
    assert flow_value(net, f, [0]) == 4 and check_feasible(net, f).feasible_flow


def test_trimmed_value():
    net = parallel_units()
    f = flow_of_value(net, 0, 1, 2)
    assert flow_value(net, f, [0]) == 2 and check_feasible(net, f).feasible_flow


def test_value_above_maximum_is_none():
    assert flow_of_value(parallel_units(), 0, 1, 5) is None


def test_fractional_value():
    net = parallel_units()
    f = flow_of_value(net, 0, 1, Fraction(5, 2))
    assert flow_value(net, f, [0]) == Fraction(5, 2)


def test_negative_value_rejected():
    with pytest.raises(ValueError):
        flow_of_value(parallel_units(), 0, 1, -1)


# --- decomposition and cycles ----------------------------------------------------------------


def _triangle_with_tail():
    # s=0 -> a=1 -> t=4, plus a cycle a -> b=2 -> c=3 -> a
    net = FlowNetwork()
    net.add_vertices(5)
    net.add_arc_pair(0, 1, 5)
    net.add_arc_pair(1, 4, 5)
    net.add_arc_pair(1, 2, 2)
    net.add_arc_pair(2, 3, 2)
    net.add_arc_pair(3, 1, 2)
    net.add_source(0)
    net.add_sink(4)
    return net


def test_acyclic_flow_unchanged():
    net = _triangle_with_tail()
    f = ArcFunction([3, 0, 3, 0] + [0] * 6)
    assert acyclicize(net, f) == f and not has_flow_cycle(net, f)


def test_saturated_triangle_removed():
    net = _triangle_with_tail()
    f = ArcFunction([3, 0, 3, 0, 2, 0, 2, 0, 2, 0])
    assert has_flow_cycle(net, f)
    g = acyclicize(net, f)
    assert list(g) == [3, 0, 3, 0] + [0] * 6
    assert flow_value(net, g) == flow_value(net, f) == 3
    paths, cycles = decompose(net, f, 0, 4)
    assert [amt for _, amt in paths] == [3] and [amt for _, amt in cycles] == [2]


def _topologically_sortable(net, f):
    """Kahn's algorithm over positive arcs; independent of the solver's cycle search."""
    indeg = [0] * net.n
    for e in range(net.m):
        if f[e] > 0:
            indeg[net.head[e]] += 1
    ready = [v for v in range(net.n) if indeg[v] == 0]
    done = 0
    while ready:
        u = ready.pop()
        done += 1
        for e in net.out[u]:
            if f[e] > 0:
                indeg[net.head[e]] -= 1
                if indeg[net.head[e]] == 0:
                    ready.append(net.head[e])
    return done == net.n


@pytest.mark.parametrize("seed", range(20))
def test_random_cycles_on_top_of_paths(seed):
    rng = random.Random(seed)
    G = grid_instance(5, 5, 2, 10, seed, n_sources=1, vertex_cap_prob=0.0)
    s, t = G.sources[0], G.sinks[0]
    f = reference_max_flow(G, s, t)
    # superimpose a few circulations along directed cycles of the grid's residual arcs
    for _ in range(5):
        u = rng.randrange(G.n)
        walk, seen = [], {u: 0}
        while True:
            e = rng.choice(G.out[u])
            walk.append(e)
            u = G.head[e]
            if u in seen:
                cyc = walk[seen[u]:]
                break
            seen[u] = len(walk)
        for e in cyc:
            f[e] = f[e] + 1
    assert not _topologically_sortable(G, f)
    g = acyclicize(G, f, s, t)
    assert _topologically_sortable(G, g) and not has_flow_cycle(G, g)
    assert flow_value(G, g, [s]) == flow_value(G, f, [s])
    assert all(g[e] <= f[e] for e in range(G.m))


def test_decompose_rejects_non_flow():
    net = _triangle_with_tail()
    f = ArcFunction([3, 0] + [0] * 8)
    with pytest.raises(FlowError):
        decompose(net, f, 0, 4)


# --- the circulation step ------------------------------------------------------------------

# s=0 on the left, x=1 above, y=2 below, t=3 on the right
DETOUR = """\
p vcap 4 4 1 1
v 1 5
v 2 {y}
a 0 0 1 10
a 1 1 3 10
a 2 0 2 10
a 3 2 3 10
s 0
t 3
r 0 0 2
r 1 1 0
r 2 2 3
r 3 3 1
"""


def _detour_step(y_cap):
    from planarflow.fileformat import parse_instance

    G = parse_instance(DETOUR.format(y=y_cap))
    w = add_super_terminals(G)
    Gs = w.net
    f = ArcFunction.zeros(Gs)
    for e in (0, 2, 8, 10):  # s -> x -> t and both super-terminal arcs carry 8
        f[e] = 8
    Gc, gmap = build_g_circle(Gs)
    X = infeasible_set(Gs, f)
    gx = build_g_times(Gc, gmap, X, Gs)
    ft = lift_flow_to_g_times(route_through_cycles(Gs, Gc, gmap, f), gx)
    g, report = compute_g_times(gx, ft, Gs, w.k, checked=True)
    return Gs, f, gx, g, report


def test_detour_absorbs_the_overload():
    Gs, f, gx, g, report = _detour_step(9)
    assert g is not None and report.all_hold
    f_new = sum_preflows(Gs, f, restrict(g, gx.to_g, Gs))
    assert violation(Gs, f_new, 1) == 0 and violation(Gs, f_new, 2) == 0
    assert f_new[4] == 3  # three units moved to the bottom path
    assert flow_value(Gs, f_new) == 8


def test_narrow_detour_means_absent():
    Gs, f, gx, g, report = _detour_step(1)
    assert g is None and not report.saturated
    assert report.h_value == 1


def test_no_overload_gives_zero_circulation():
    G = square()
    w = add_super_terminals(G)
    Gc, gmap = build_g_circle(w.net)
    f = ArcFunction.zeros(w.net)
    X = infeasible_set(w.net, f)
    gx = build_g_times(Gc, gmap, X, w.net)
    g, report = compute_g_times(gx, lift_flow_to_g_times(route_through_cycles(w.net, Gc, gmap, f), gx), w.net, w.k)
    assert g == ArcFunction.zeros(gx.net) and report.all_hold


def test_detour_moves_exactly_the_overload():
    *_, report = _detour_step(9)
    assert report.h_value == 3 and report.X_size == 1 and report.apex_count == 6


# --- improvement and cleanup -----------------------------------------------------------------


def test_no_overload_skips_improvement():
    prep = prepare(cut_vertex(5))
    st = probe_state(prep, 5)
    improvement_phase(st)
    assert st.phase == "cleanup" and st.record.iterations == 0 and st.record.vio_history == [0]


def test_forced_iterations_shrink_overload_geometrically():
    # clustered corpus-style instance with k = 4, C = 15; optimum 33
    G = grid_instance(4, 5, 4, 15, 100036, both_prob=1.0, vertex_cap_max=5, clustered=True)
    assert oracle_value(G) == 33
    prep = prepare(G)
    st = probe_state(prep, 33)
    with pytest.raises(FlowError, match="budget"):
        improvement_phase(st, threshold=0, budget=4, checked=True)
    hist = st.record.vio_history
    assert hist == [2, Fraction(3, 2), Fraction(9, 8), Fraction(27, 32), Fraction(81, 128)]
    assert all(r.all_hold for r in st.record.steps)


def test_overload_within_threshold_goes_to_cleanup():
    G = grid_instance(4, 5, 4, 15, 100036, both_prob=1.0, vertex_cap_max=5, clustered=True)
    st = probe_state(prepare(G), 33)
    improvement_phase(st, threshold=1, checked=True)
    assert st.phase == "cleanup" and st.record.vio_history == [2, Fraction(3, 2), Fraction(9, 8), Fraction(27, 32)]
    assert flow_value(st.G, cleanup_phase(st), [st.s]) == 33


def test_value_above_optimum_is_absent():
    prep = prepare(star())
    assert prep.top == 8  # the expansion lets both pairs cross the hub
    st = probe_state(prep, 5)
    improvement_phase(st, threshold=0, checked=True)
    assert st.phase == "absent" and st.record.absent_at == 1


def test_entering_twice_rejected():
    st = probe_state(prepare(cut_vertex(5)), 5)
    improvement_phase(st)
    with pytest.raises(ValueError):
        improvement_phase(st)


def test_cleanup_keeps_optimal_integral_flow():
    G = cut_vertex(5)
    _, witness = max_flow_vertex_capacities(G)
    st = probe_state(prepare(G), 5)
    st.f = ArcFunction(list(witness) + [5, 0, 5, 0])
    st.phase = "cleanup"
    flow = cleanup_phase(st)
    assert flow == st.f and st.record.cleanup_augs == 0


def test_cleanup_repairs_one_unit_of_overload():
    G = square(w=2)
    prep = prepare(G)
    st = probe_state(prep, 5)
    f = ArcFunction.zeros(prep.Gs)
    for e in (0, 2, 4, 6):  # 3 units on s -> v -> t and 3 on s -> w -> t
        f[e] = 3
    f[G.m] = f[G.m + 2] = 6
    st.f = f
    assert infeasible_set(prep.Gs, f).vio == {2: 1}
    st.phase = "cleanup"
    flow = cleanup_phase(st)
    rep = check_feasible(prep.Gs, flow)
    assert rep.feasible_flow and rep.value == 5
    assert st.record.cleanup_augs <= 2


# --- the full solver --------------------------------------------------------------------


@pytest.mark.parametrize("c, expected", [(2, 2), (5, 5), (9, 9), (20, 9)])
def test_cut_vertex(c, expected):
    value, f = max_flow_vertex_capacities(cut_vertex(c), checked=True)
    assert value == expected
    assert check_feasible(cut_vertex(c), f).feasible_flow


def test_uncapacitated_equals_plain_max_flow():
    G = grid_instance(5, 5, 2, 12, 4, n_sources=1, vertex_cap_prob=0.0)
    plain = flow_value(G, reference_max_flow(G, G.sources[0], G.sinks[0]), G.sources)
    assert max_flow_vertex_capacities(G)[0] == plain


def test_star_below_expansion_value():
    report = SolveReport()
    value, f = max_flow_vertex_capacities(star(), report=report, checked=True)
    assert value == 4 and report.circle_max == 8
    assert check_feasible(star(), f).feasible_flow


@pytest.mark.parametrize("solver", ["batch", "fifo"])
def test_solvers_agree_on_grids(solver):
    for seed in range(5):
        G = grid_instance(4, 4, 3, 10, seed, vertex_cap_prob=0.7)
        assert max_flow_vertex_capacities(G, solver, checked=True)[0] == oracle_value(G)


def test_summary_keys():
    report = SolveReport()
    max_flow_vertex_capacities(square(w=2), report=report)
    assert list(report.summary()) == [
        "value", "probes", "improve_iters", "pulses", "relabels", "inner_solves", "cleanup_augs",
    ]
    assert report.value == 5 and len(report.probes) >= 1


def test_witness_is_integral_for_integral_input():
    G = grid_instance(5, 4, 4, 9, 11, vertex_cap_prob=1.0)
    value, f = max_flow_vertex_capacities(G)
    assert f.is_integral() and flow_value(G, f) == value == oracle_value(G)


def test_rejects_fractional_capacity():
    G = cut_vertex(5)
    G.cap[0] = Fraction(1, 2)
    with pytest.raises(ValueError, match="integers"):
        max_flow_vertex_capacities(G)


def test_rejects_bad_rotation():
    G = cut_vertex(5)
    G.rotation[2] = G.rotation[2][:2]
    with pytest.raises(ValueError, match="rotation"):
        max_flow_vertex_capacities(G)


def test_unknown_solver():
    with pytest.raises(ValueError, match="unknown solver"):
        max_flow_vertex_capacities(cut_vertex(5), "dfs")


def test_no_terminals_gives_zero():
    G = cut_vertex(5)
    G.sources.clear()
    assert max_flow_vertex_capacities(G)[0] == 0


def test_collect_and_steps_hook():
    G = grid_instance(4, 5, 4, 15, 100036, both_prob=1.0, vertex_cap_max=5, clustered=True)
    seen = []
    st = probe_state(prepare(G), 33)
    collect = []
    stats = ApexStats()
    improvement_phase(st, threshold=1, collect=collect, stats=stats, on_step=lambda s, r: seen.append(r))
    assert len(collect) == len(seen) == st.record.iterations == 3
    assert stats.runs == 3
