"""Maximum flow with vertex capacities in planar networks.

Binary search on the flow value. For a candidate value the solver routes a
flow of that value through the cycle expansion, then repeatedly cancels the
overload at infeasible vertices with a circulation found by an apex max-flow
computation, adding a ``1/k`` fraction of it each round. Once the overload
is small, the flow is rounded down to a feasible integral one and finished
with augmenting paths on the vertex-split network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .apexflow import ApexInstance, ApexStats, default_inner_solver, solve_apex
from .gadgets import (
    InfeasibleSet,
    SplitGadget,
    build_g_circle,
    build_g_times,
    build_h,
    infeasible_set,
    lift_flow_to_g_times,
    route_through_cycles,
)
from .netcore import (
    INF,
    ArcFunction,
    FlowError,
    FlowNetwork,
    InvariantError,
    add_super_terminals,
    as_value,
    check_feasible,
    excess,
    flow_value,
    inflow,
    outflow,
    restrict,
    rotation_problems,
    scale_flow,
    sum_preflows,
    violation,
)
from .oracle import reference_max_flow, vertex_split_reduce
from .pushrelabel import batch_highest_distance, fifo_push_relabel

SOLVERS = ("batch", "fifo")


# --- path decomposition -----------------------------------------------------


def decompose(net: FlowNetwork, f: ArcFunction, s: int, t: int):
    """Split ``f`` into ``s``-``t`` paths and cycles.

    Returns ``(paths, cycles)``, each a list of ``(arcs, amount)``. Paths are
    peeled first, following the lowest-numbered positive arc at each step.
    """
    rem = list(f.values)
    ptr = [0] * net.n
    out, head = net.out, net.head

    def next_arc(u):
        arcs = out[u]
        while ptr[u] < len(arcs):
            e = arcs[ptr[u]]
            if rem[e] > 0:
                return e
            ptr[u] += 1
        return None

    paths, cycles = [], []
    budget = [sum(rem[e] - rem[e ^ 1] for e in out[s])]  # peel exactly the value

    def walk(start, stop_at_t):
        while not stop_at_t or budget[0] > 0:
            pos = {start: 0}
            stack = []
            u = start
            while True:
                if stop_at_t and u == t and stack:
                    break
                e = next_arc(u)
                if e is None:
                    if not stack:
                        return
                    raise InvariantError(f"flow does not conserve at vertex {u}")
                stack.append(e)
                u = head[e]
                if u in pos:
                    cyc = stack[pos[u]:]
                    amt = min(rem[a] for a in cyc)
                    for a in cyc:
                        rem[a] -= amt
                    cycles.append((cyc, as_value(amt)))
                    del stack[pos[u]:]
                    for a in cyc:
                        pos.pop(net.tail[a], None)
                    pos[u] = len(stack)
                    continue
                pos[u] = len(stack)
            amt = min(min(rem[a] for a in stack), budget[0])
            budget[0] -= amt
            for a in stack:
                rem[a] -= amt
            paths.append((stack, as_value(amt)))

    walk(s, True)
    for v in range(net.n):
        walk(v, False)
    return paths, cycles


def _sum_paths(m: int, parts) -> ArcFunction:
    out = [0] * m
    for arcs, amt in parts:
        for a in arcs:
            out[a] += amt
    f = ArcFunction.__new__(ArcFunction)
    f.values = [as_value(x) for x in out]
    return f


def acyclicize(net: FlowNetwork, f: ArcFunction, s: Optional[int] = None, t: Optional[int] = None) -> ArcFunction:
    """Cancel flow cycles until none is left; the value is unchanged and no arc grows.

    Each round zeroes at least one arc, so there are at most ``m`` rounds.
    ``s`` and ``t`` are accepted for symmetry with :func:`decompose`.
    """
    g = f.copy()
    while True:
        cyc = find_flow_cycle(net, g)
        if cyc is None:
            return g
        amt = min(g[e] for e in cyc)
        for e in cyc:
            g[e] = g[e] - amt


def find_flow_cycle(net: FlowNetwork, f: ArcFunction) -> Optional[list]:
    """Arcs of some directed cycle of positive arcs, or ``None``."""
    color = [0] * net.n
    for root in range(net.n):
        if color[root]:
            continue
        color[root] = 1
        stack = [(root, iter(net.out[root]))]
        via = []  # arc used to enter stack[i + 1]
        while stack:
            u, it = stack[-1]
            for e in it:
                if f[e] > 0:
                    w = net.head[e]
                    if color[w] == 1:
                        i = next(i for i, (v, _) in enumerate(stack) if v == w)
                        return via[i:] + [e]
                    if color[w] == 0:
                        color[w] = 1
                        stack.append((w, iter(net.out[w])))
                        via.append(e)
                        break
            else:
                color[u] = 2
                stack.pop()
                if via:
                    via.pop()
    return None


def has_flow_cycle(net: FlowNetwork, f: ArcFunction) -> bool:
    return find_flow_cycle(net, f) is not None


# --- flows of a given value --------------------------------------------------


def max_flow_no_vertex_caps(net: FlowNetwork, s: int, t: int, solver: str = "batch") -> ArcFunction:
    if solver == "batch":
        return batch_highest_distance(net, s, t)[0]
    if solver == "fifo":
        return fifo_push_relabel(net, s, t)
    raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")


def flow_of_value(net: FlowNetwork, s: int, t: int, lam, solver: str = "batch", base: Optional[ArcFunction] = None):
    """A flow of value exactly ``lam``, or ``None`` if the max flow is smaller.

    ``base`` may supply a precomputed maximum flow. Its cycles are dropped
    and the surplus is trimmed off the paths, last path first.
    """
    if lam < 0:
        raise ValueError("flow value must be nonnegative")
    if lam == 0:
        return ArcFunction.zeros(net)
    f = max_flow_no_vertex_caps(net, s, t, solver) if base is None else base
    top = flow_value(net, f, [s])
    if top < lam:
        return None
    paths, _ = decompose(net, f, s, t)
    surplus = top - lam
    kept = []
    for arcs, amt in reversed(paths):
        cut = min(amt, surplus)
        surplus -= cut
        if amt - cut:
            kept.append((arcs, amt - cut))
    return _sum_paths(net.m, kept)


# --- the circulation step ------------------------------------------------------


@dataclass
class CirculationReport:
    """What one circulation step saw and whether its guarantees held."""

    X_size: int
    vio_total: object
    vio_max: object
    apex_count: int
    h_value: object
    saturated: bool
    is_circulation: Optional[bool] = None
    feasible_in_split: Optional[bool] = None
    clears_overloads: Optional[bool] = None
    outside_violation: object = None
    outside_bound: object = None

    @property
    def within_bound(self) -> Optional[bool]:
        if self.outside_violation is None:
            return None
        return self.outside_violation <= self.outside_bound

    @property
    def all_hold(self) -> bool:
        return bool(self.is_circulation and self.feasible_in_split and self.clears_overloads and self.within_bound)


def compute_g_times(
    gx: SplitGadget,
    f_times: ArcFunction,
    G: FlowNetwork,
    k: int,
    strategy: str = "batch",
    *,
    solver=default_inner_solver,
    checked: bool = False,
    stats: Optional[ApexStats] = None,
    collect: Optional[list] = None,
    trace: Optional[Callable[[str], None]] = None,
):
    """Find the overload-cancelling circulation, or ``None`` if none exists.

    Returns ``(g_times, report)``. ``collect``, when given, receives the
    auxiliary network of every call.
    """
    X = gx.X
    aux = build_h(gx, f_times)
    if collect is not None:
        collect.append(aux)
    report = CirculationReport(len(X), X.total, X.max, len(aux.apices), 0, False)
    if not X.X:
        report.saturated = True
        g = ArcFunction.zeros(gx.net)
    else:
        inst = ApexInstance(aux.net, aux.apices, aux.s, aux.t)
        h1 = solve_apex(strategy, inst, solver, checked=checked, stats=stats, trace=trace)
        h = acyclicize(aux.net, h1, aux.s, aux.t)
        report.h_value = flow_value(aux.net, h, [aux.s])
        report.saturated = all(h[a] == X.vio[x] for x, a in aux.feeds.items()) and all(
            h[a] == X.vio[x] for x, a in aux.drains.items()
        )
        if not report.saturated:
            return None, report
        g = ArcFunction.__new__(ArcFunction)
        g.values = h.values[: gx.net.m]
        for x, b in gx.bridges.items():
            g[b ^ 1] = g[b ^ 1] + X.vio[x]
    _check_circulation(gx, f_times, g, G, k, report)
    if checked and not (report.is_circulation and report.feasible_in_split and report.clears_overloads):
        raise InvariantError(f"circulation step broke its guarantees: {report}")
    return g, report


def _check_circulation(gx, f_times, g, G, k, report):
    net = gx.net
    report.is_circulation = all(excess(net, g, v) == 0 for v in range(net.n))
    total = sum_preflows(net, f_times, g)
    report.feasible_in_split = check_feasible(net, total).feasible_flow
    f_new = restrict(total, gx.to_g, G)
    X = gx.X
    report.clears_overloads = all(violation(G, f_new, x) == 0 for x in X.X)
    report.outside_violation = max((violation(G, f_new, v) for v in range(G.n) if v not in X), default=0)
    report.outside_bound = as_value((k - 2) * X.max)


# --- the solver ---------------------------------------------------------------


@dataclass
class ProbeRecord:
    lam: object
    feasible: bool = False
    iterations: int = 0
    vio_history: list = field(default_factory=list)
    absent_at: Optional[int] = None
    cleanup_augs: int = 0
    value: object = None
    steps: list = field(default_factory=list)  # CirculationReport per iteration


@dataclass
class SolveReport:
    probes: list = field(default_factory=list)
    apex: ApexStats = field(default_factory=ApexStats)
    value: object = None
    k: int = 0
    circle_max: object = None

    @property
    def improve_iters(self) -> int:
        return sum(p.iterations for p in self.probes)

    @property
    def cleanup_augs(self) -> int:
        return sum(p.cleanup_augs for p in self.probes)

    def summary(self) -> dict:
        return {
            "value": self.value,
            "probes": len(self.probes),
            "improve_iters": self.improve_iters,
            "pulses": self.apex.pulses,
            "relabels": self.apex.relabels,
            "inner_solves": self.apex.inner_solves,
            "cleanup_augs": self.cleanup_augs,
        }


@dataclass
class WangState:
    G: FlowNetwork  # single-source single-sink network with vertex capacities
    G_circle: FlowNetwork
    gmap_circle: object
    k: int
    C: object
    lam: object = 0
    f: Optional[ArcFunction] = None
    X: Optional[InfeasibleSet] = None
    phase: str = "search"
    record: Optional[ProbeRecord] = None

    @property
    def s(self) -> int:
        return self.G.sources[0]

    @property
    def t(self) -> int:
        return self.G.sinks[0]

    def budget(self) -> int:
        return math.ceil(10 * self.k * math.log(max(2, self.k * self.C))) + 10


def improvement_phase(
    st: WangState,
    strategy: str = "batch",
    *,
    threshold=None,
    checked: bool = False,
    stats: Optional[ApexStats] = None,
    collect: Optional[list] = None,
    budget: Optional[int] = None,
    on_step: Optional[Callable] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> WangState:
    """Cancel overloads until the largest one is at most ``threshold``.

    The default threshold is ``2k``. On a failed circulation step the phase
    becomes ``"absent"``, meaning the candidate value exceeds the optimum.
    """
    if st.phase not in ("improve", "search"):
        raise ValueError(f"improvement phase entered from {st.phase!r}")
    st.phase = "improve"
    threshold = 2 * st.k if threshold is None else threshold
    budget = st.budget() if budget is None else budget
    rec = st.record
    step_k = max(st.k, 2)
    while True:
        st.X = infeasible_set(st.G, st.f)
        rec.vio_history.append(st.X.max)
        if st.X.max <= threshold:
            st.phase = "cleanup"
            return st
        if rec.iterations >= budget:
            raise FlowError(
                f"improvement budget of {budget} rounds exhausted at value {st.lam} with overload {st.X.max}"
            )
        f_circle = route_through_cycles(st.G, st.G_circle, st.gmap_circle, st.f)
        gx = build_g_times(st.G_circle, st.gmap_circle, st.X, st.G)
        f_times = lift_flow_to_g_times(f_circle, gx)
        g_times, report = compute_g_times(
            gx, f_times, st.G, st.k, strategy, checked=checked, stats=stats, collect=collect, trace=trace
        )
        rec.steps.append(report)
        rec.iterations += 1
        if on_step is not None:
            on_step(st, report)
        if g_times is None:
            rec.absent_at = rec.iterations
            st.phase = "absent"
            return st
        g = restrict(g_times, gx.to_g, st.G)
        # cancelling flow cycles keeps the value and only lowers inflows
        st.f = acyclicize(st.G, sum_preflows(st.G, st.f, scale_flow(Fraction(1, step_k), g)), st.s, st.t)


def cleanup_phase(st: WangState) -> ArcFunction:
    """Round the flow down to a feasible integral one, then augment to a maximum."""
    G, f = st.G, st.f
    paths, _ = decompose(G, f, st.s, st.t)
    room = {v: G.vertex_cap[v] for v in range(G.n)}
    kept = []
    for arcs, amt in paths:
        a = math.floor(amt)
        for e in arcs[1:]:
            a = min(a, room[G.tail[e]])
        if a > 0:
            for e in arcs[1:]:
                if room[G.tail[e]] != INF:
                    room[G.tail[e]] -= a
            kept.append((arcs, a))
    f0 = _sum_paths(G.m, kept)
    split, smap = vertex_split_reduce(G)
    warm = [0] * split.m
    for e in range(G.m):
        warm[smap.arc[e]] = f0[e]
    for v in range(G.n):
        warm[smap.bridge[v]] = outflow(G, f0, v) if v == st.t else inflow(G, f0, v)
    w = ArcFunction.__new__(ArcFunction)
    w.values = warm
    counters = {}
    best = reference_max_flow(split, smap.source_of(st.s), smap.sink_of(st.t), warm_start=w, stats=counters)
    st.record.cleanup_augs += counters.get("augmentations", 0)
    out = ArcFunction.__new__(ArcFunction)
    out.values = [best[smap.arc[e]] for e in range(G.m)]
    st.phase = "done"
    return out


@dataclass
class Prepared:
    """Everything a probe needs that does not depend on the candidate value."""

    G: FlowNetwork
    Gs: FlowNetwork  # G behind a super source and super sink
    s: int
    t: int
    k: int
    C: object
    G_circle: FlowNetwork
    gmap_circle: object
    base: ArcFunction  # maximum flow of the cycle expansion
    top: object  # its value, an upper bound on the optimum
    solver: str = "batch"


def prepare(G: FlowNetwork, solver: str = "batch") -> Prepared:
    wrapped = add_super_terminals(G)
    Gs, s, t = wrapped.net, wrapped.s, wrapped.t
    G_circle, gmap_c = build_g_circle(Gs)
    base = max_flow_no_vertex_caps(G_circle, s, t, solver)
    C = max([c for c in list(G.cap) + list(G.vertex_cap) if c != INF], default=1)
    return Prepared(G, Gs, s, t, wrapped.k, C, G_circle, gmap_c, base, flow_value(G_circle, base, [s]), solver)


def probe_state(prep: Prepared, lam) -> Optional[WangState]:
    """Starting state for candidate value ``lam``, or ``None`` if the expansion cannot carry it.

    The flow of value ``lam`` in the expansion is restricted to the
    network and its cycles are cancelled.
    """
    f_circle = flow_of_value(prep.G_circle, prep.s, prep.t, lam, prep.solver, prep.base)
    if f_circle is None:
        return None
    st = WangState(prep.Gs, prep.G_circle, prep.gmap_circle, prep.k, prep.C, lam, record=ProbeRecord(lam))
    st.f = acyclicize(prep.Gs, restrict(f_circle, prep.gmap_circle, prep.Gs), prep.s, prep.t)
    return st


def _validate(G: FlowNetwork) -> None:
    for c in list(G.cap) + list(G.vertex_cap):
        if c != INF and not isinstance(c, int):
            raise ValueError(f"capacities must be integers, got {c!r}")
    problems = rotation_problems(G)
    if problems:
        raise ValueError("invalid rotation system: " + "; ".join(problems))


def max_flow_vertex_capacities(
    G: FlowNetwork,
    solver: str = "batch",
    *,
    checked: bool = False,
    report: Optional[SolveReport] = None,
    collect: Optional[list] = None,
    on_step: Optional[Callable] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> tuple:
    """Maximum flow value and an integral feasible witness flow on ``G``."""
    if solver not in SOLVERS:
        raise ValueError(f"unknown solver {solver!r}; choose from {SOLVERS}")
    _validate(G)
    report = SolveReport() if report is None else report
    if not G.sources or not G.sinks:
        report.value = 0
        return 0, ArcFunction.zeros(G)
    prep = prepare(G, solver)
    Gs, s = prep.Gs, prep.s
    report.k, report.circle_max = prep.k, prep.top

    lo, hi = 0, math.floor(prep.top)
    best = ArcFunction.zeros(Gs)
    while lo < hi:
        lam = (lo + hi + 1) // 2
        st = probe_state(prep, lam)
        if st is None:
            hi = lam - 1
            continue
        report.probes.append(st.record)
        rec = st.record
        improvement_phase(st, solver, checked=checked, stats=report.apex, collect=collect, on_step=on_step, trace=trace)
        if st.phase == "absent":
            hi = lam - 1
            continue
        flow = cleanup_phase(st)
        rec.value = flow_value(Gs, flow, [s])
        if rec.value >= lam:
            rec.feasible = True
            lo, best = rec.value, flow
        else:
            hi = lam - 1
    witness = ArcFunction(best[e] for e in range(G.m))
    full = check_feasible(Gs, best)
    if not full.feasible_flow or flow_value(Gs, best, [s]) != lo:
        raise InvariantError("witness flow failed its feasibility check")
    report.value = lo
    return lo, witness
