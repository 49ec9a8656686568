"""Maximum s-t flow in graphs with a small apex set.

Push-relabel runs on the complete graph over the apices while a real preflow
is kept in the underlying network ``H``. An apex-to-apex arc is residual
when ``H`` has a residual path between the two apices that avoids every
other apex internally. Pushes along those implicit arcs are realised by an
inner max-flow computation in which every source is limited by its excess.

Capacities are scaled by the least common denominator on entry so the whole
simulation runs on Python ints; flows are scaled back on exit.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from .netcore import (
    INF,
    ArcFunction,
    FlowNetwork,
    InvariantError,
    as_value,
    unbounded_path_exists,
)
from .pushrelabel import (
    Labeling,
    NotApplicable,
    common_denominator,
    finite_stand_in,
    flow_from_residual,
    pulse_loop,
)


@dataclass
class ApexInstance:
    net: FlowNetwork
    apices: tuple
    s: int
    t: int

    def __post_init__(self):
        self.apices = tuple(sorted(set(self.apices)))
        if self.s == self.t:
            raise ValueError("source and sink coincide")
        if self.s not in self.apices or self.t not in self.apices:
            raise ValueError("source and sink must be apices")
        for v in range(self.net.n):
            if self.net.vertex_cap[v] != INF:
                raise ValueError(f"vertex {v} has a finite capacity; apex flow works on arc capacities only")


@dataclass(frozen=True)
class InnerSolverRequest:
    """Limited multi-source multi-sink max flow in ``H_A``.

    ``residual`` gives the arc capacities to use, ``removed`` the vertices
    deleted from the network (apices outside ``A``), ``limits`` the
    per-source bound on outgoing flow.
    """

    net: FlowNetwork
    residual: Sequence
    removed: frozenset
    limits: Mapping[int, object]
    sinks: frozenset


InnerSolver = Callable[[InnerSolverRequest], ArcFunction]


def default_inner_solver(req: InnerSolverRequest) -> ArcFunction:
    """Dinic's blocking-flow algorithm with a virtual source and sink.

    The virtual source feeds each source through an arc of capacity equal
    to its limit; each sink drains into the virtual sink through an
    unbounded arc. Only the flow on real arcs is returned.
    """
    net = req.net
    n, m = net.n, net.m
    if set(req.limits) & req.sinks:
        raise ValueError("a vertex cannot be both a source and a sink of a request")
    for v in list(req.limits) + list(req.sinks):
        if v in req.removed:
            raise ValueError(f"terminal {v} of the request is removed")
    S, T = n, n + 1
    res = list(req.residual)
    head = list(net.head)
    out = [list(a) for a in net.out] + [[], []]
    for u, lim in sorted(req.limits.items()):
        e = len(res)
        res += [lim, 0]
        head += [u, S]
        out[S].append(e)
        out[u].append(e + 1)
    for w in sorted(req.sinks):
        e = len(res)
        res += [INF, 0]
        head += [T, w]
        out[w].append(e)
        out[T].append(e + 1)
    removed = req.removed
    while True:
        level = [-1] * (n + 2)
        level[S] = 0
        queue = deque([S])
        while queue:
            u = queue.popleft()
            for e in out[u]:
                w = head[e]
                if level[w] < 0 and res[e] > 0 and w not in removed:
                    level[w] = level[u] + 1
                    queue.append(w)
        if level[T] < 0:
            break
        ptr = [0] * (n + 2)
        while True:
            pushed = _augment(S, T, res, head, out, level, ptr)
            if not pushed:
                break
    flow = [0] * m
    for e in range(0, m, 2):
        d = req.residual[e] - res[e] if req.residual[e] != INF else res[e + 1] - req.residual[e + 1]
        if d > 0:
            flow[e] = as_value(d)
        elif d < 0:
            flow[e + 1] = as_value(-d)
    f = ArcFunction.__new__(ArcFunction)
    f.values = flow
    return f


def _augment(S, T, res, head, out, level, ptr):
    """Find one augmenting path in the level graph and push along it."""
    stack, arcs = [S], []
    while stack:
        u = stack[-1]
        if u == T:
            delta = min(res[e] for e in arcs)
            if delta == INF:
                raise ValueError("maximum flow is unbounded (infinite-capacity path)")
            for e in arcs:
                if res[e] != INF:
                    res[e] -= delta
                if res[e ^ 1] != INF:
                    res[e ^ 1] += delta
            return delta
        adj = out[u]
        while ptr[u] < len(adj):
            e = adj[ptr[u]]
            w = head[e]
            if res[e] > 0 and level[w] == level[u] + 1:
                stack.append(w)
                arcs.append(e)
                break
            ptr[u] += 1
        else:
            stack.pop()
            level[u] = -1  # dead end
            if arcs:
                e = arcs.pop()
                ptr[head[e ^ 1]] += 1
    return 0


@dataclass
class ApexStats:
    pulses: int = 0
    relabels: int = 0
    inner_solves: int = 0
    pushes: int = 0
    pushed_total: object = 0
    runs: int = 0
    max_pulses_ratio: float = 0.0  # observed pulses / (4k^2 + 2k)
    max_relabel_ratio: float = 0.0
    max_push_ratio: float = 0.0

    def as_dict(self) -> dict:
        return {
            "pulses": self.pulses,
            "relabels": self.relabels,
            "inner_solves": self.inner_solves,
            "pushed_total": self.pushed_total,
        }


class KxState:
    """Push-relabel state over the apices, backed by a preflow in ``H``."""

    def __init__(
        self,
        inst: ApexInstance,
        solver: InnerSolver = default_inner_solver,
        checked: bool = False,
    ):
        net = inst.net
        if unbounded_path_exists(net, inst.s, inst.t):
            raise ValueError("maximum flow is unbounded (infinite-capacity s-t path)")
        self.inst, self.net = inst, net
        self.s, self.t = inst.s, inst.t
        self.apices = inst.apices
        self.apex_set = frozenset(inst.apices)
        self.scale = common_denominator(net.cap)
        finite = [c * self.scale if c != INF else INF for c in net.cap]
        big = finite_stand_in(finite)
        self.cap = [big if c == INF else int(c) for c in finite]
        self.cres = list(self.cap)
        self.ex = {v: 0 for v in self.apices}
        self.labels = Labeling(len(self.apices), self.s, self.t, self.apices)
        self.solver = solver
        self.checked = checked
        self.pulses = 0
        self.saturating_pulses = 0
        self.relabels = 0
        self.inner_solves = 0
        self.pushes = 0
        self.pushed_total = 0

    @property
    def k(self) -> int:
        return len(self.apices)

    def vertices(self):
        return self.apices

    def is_active(self, v) -> bool:
        return v != self.s and v != self.t and self.ex[v] > 0

    def level(self, x: int) -> list:
        return [v for v in self.apices if self.labels[v] == x]

    def excess(self, v):
        return as_value(Fraction(self.ex[v], self.scale))

    def highest_active(self):
        active = [v for v in self.apices if self.is_active(v)]
        if not active:
            return None, []
        h_max = max(self.labels[v] for v in active)
        return h_max, [v for v in active if self.labels[v] == h_max]

    def reachable(self, u: int) -> set:
        """Apices reachable from ``u`` by residual paths avoiding apices inside."""
        net, cres, apex = self.net, self.cres, self.apex_set
        seen = {u}
        found = set()
        queue = deque([u])
        while queue:
            x = queue.popleft()
            for e in net.out[x]:
                w = net.head[e]
                if cres[e] > 0 and w not in seen:
                    seen.add(w)
                    if w in apex:
                        found.add(w)
                    else:
                        queue.append(w)
        found.discard(u)
        return found

    def flow(self) -> ArcFunction:
        return flow_from_residual(self.cap, self.cres, self.scale)

    def _solve(self, limits: dict, sinks) -> dict:
        A = set(limits) | set(sinks)
        req = InnerSolverRequest(
            self.net, self.cres, frozenset(self.apex_set - A), limits, frozenset(sinks)
        )
        delta = self.solver(req)
        self.inner_solves += 1
        net = self.net
        moved = {}
        for e in range(0, net.m, 2):
            d = delta[e] - delta[e + 1]
            if d:
                if d > self.cres[e] or -d > self.cres[e + 1]:
                    raise InvariantError(f"inner solver exceeded residual capacity on arc pair {e}")
                self.cres[e] -= d
                self.cres[e + 1] += d
                for v, sign in ((net.tail[e], -d), (net.head[e], d)):
                    moved[v] = moved.get(v, 0) + sign
        for v, d in moved.items():
            if v in self.apex_set:
                self.ex[v] += d
            elif d != 0:
                raise InvariantError(f"inner solver left excess {d} at non-apex {v}")
        for u, lim in limits.items():
            if -moved.get(u, 0) > lim:
                raise InvariantError(f"inner solver pushed more than the limit out of {u}")
        return moved

    def initialize(self) -> None:
        """Push as much as possible from ``s`` to every other apex at once."""
        others = [v for v in self.apices if v != self.s]
        moved = self._solve({self.s: INF}, others)
        self.pushed_total += sum(moved.get(w, 0) for w in others)

    def bulk_push(self, U, W):
        """Bulk-Push from ``U`` to ``W`` through ``H_A``; returns the amount moved."""
        U, W = list(U), list(W)
        h = self.labels
        for u in U:
            if not self.ex[u] > 0:
                raise NotApplicable(f"apex {u} in U has no excess")
        if U:
            level = h[U[0]]
            if any(h[u] != level for u in U) or any(h[w] != level - 1 for w in W):
                raise NotApplicable("U must share one label and W sit exactly one below it")
        if not U or not W:
            return 0
        moved = self._solve({u: self.ex[u] for u in U}, W)
        total = sum(moved.get(w, 0) for w in W)
        self.pushes += 1
        self.pushed_total += total
        return total

    def push(self, u: int, v: int):
        """Single-arc push from apex ``u`` to apex ``v``."""
        h = self.labels
        if not self.ex[u] > 0:
            raise NotApplicable(f"apex {u} has no excess")
        if h[u] != h[v] + 1:
            raise NotApplicable(f"h({u})={h[u]} is not h({v})+1={h[v] + 1}")
        moved = self._solve({u: self.ex[u]}, [v])
        self.pushes += 1
        self.pushed_total += moved.get(v, 0)
        return moved.get(v, 0)

    def relabel(self, u: int) -> int:
        h = self.labels
        if not self.is_active(u):
            raise NotApplicable(f"apex {u} is not active")
        heads = [h[v] for v in self.reachable(u)]
        if not heads:
            raise InvariantError(f"active apex {u} has no residual arc in the apex graph")
        low = min(heads)
        if low < h[u]:
            raise NotApplicable(f"apex {u} still has an admissible arc")
        h[u] = low + 1
        self.relabels += 1
        return h[u]

    def check_push_maximal(self, U, W) -> None:
        for u in U:
            if self.ex[u] > 0:
                hit = self.reachable(u) & set(W)
                if hit:
                    raise InvariantError(f"bulk push not maximal: apex {u} active with residual path to {sorted(hit)}")

    def check_invariants(self, previous: Optional[dict] = None) -> None:
        """Preflow feasibility, conservation off the apices, labeling validity."""
        net = self.net
        if any(c < 0 for c in self.cres):
            raise InvariantError("negative residual capacity")
        for e in range(0, net.m, 2):
            if self.cres[e] + self.cres[e + 1] != self.cap[e] + self.cap[e + 1]:
                raise InvariantError(f"residual sum broken on arc pair {e}")
        for v, x in self.ex.items():
            if v != self.s and x < 0:
                raise InvariantError(f"negative excess at apex {v}")
        rho = flow_from_residual(self.cap, self.cres)
        for v in range(net.n):
            if v in self.apex_set:
                continue
            bal = sum(rho[e ^ 1] - rho[e] for e in net.out[v])
            if bal != 0:
                raise InvariantError(f"non-apex vertex {v} holds excess {bal}")
        h = self.labels
        for a in self.apices:
            for b in self.reachable(a):
                if h[a] > h[b] + 1:
                    raise InvariantError(f"labeling invalid: residual apex arc ({a},{b}), h={h[a]},{h[b]}")
        h.check(previous)

    def no_residual_st_path(self) -> bool:
        """Plain BFS in H: is the sink unreachable from the source?"""
        net = self.net
        seen = {self.s}
        queue = deque([self.s])
        while queue:
            u = queue.popleft()
            for e in net.out[u]:
                w = net.head[e]
                if self.cres[e] > 0 and w not in seen:
                    if w == self.t:
                        return False
                    seen.add(w)
                    queue.append(w)
        return True


def kx_residual(st: KxState, u: int, v: int) -> bool:
    if u == v or u not in st.apex_set or v not in st.apex_set:
        raise ValueError("kx_residual needs two distinct apices")
    return v in st.reachable(u)


def apex_bulk_push(st: KxState, U, W) -> object:
    """Bulk-Push over the apex graph; returns the amount moved (unscaled)."""
    return as_value(Fraction(st.bulk_push(U, W), st.scale))


def _finish(st: KxState, stats: Optional[ApexStats]):
    if st.checked:
        if st.t in st.reachable(st.s) or not st.no_residual_st_path():
            raise InvariantError("residual s-t path left at termination")
    if stats is not None:
        k = st.k
        stats.runs += 1
        stats.pulses += st.pulses
        stats.relabels += st.relabels
        stats.inner_solves += st.inner_solves
        stats.pushes += st.pushes
        stats.pushed_total = as_value(stats.pushed_total + Fraction(st.pushed_total, st.scale))
        stats.max_pulses_ratio = max(stats.max_pulses_ratio, st.pulses / (4 * k * k + 2 * k))
        stats.max_relabel_ratio = max(stats.max_relabel_ratio, st.relabels / (2 * k * k))
        stats.max_push_ratio = max(stats.max_push_ratio, st.pushes / (8 * k**3))
    return st.flow()


def apex_max_flow(
    inst: ApexInstance,
    solver: InnerSolver = default_inner_solver,
    *,
    checked: bool = False,
    stats: Optional[ApexStats] = None,
    shuffle_seed: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
    state: Optional[list] = None,
) -> ArcFunction:
    """Batch-highest-distance on the apex graph.

    ``state``, when given, receives the finished :class:`KxState` and its
    pulse records so callers can inspect counters.
    """
    st = KxState(inst, solver, checked)
    st.initialize()
    if checked:
        st.check_invariants()
    pulses = pulse_loop(st, shuffle_seed=shuffle_seed, trace=trace)
    if state is not None:
        state[:] = [st, pulses]
    return _finish(st, stats)


def apex_max_flow_fifo(
    inst: ApexInstance,
    solver: InnerSolver = default_inner_solver,
    *,
    checked: bool = False,
    stats: Optional[ApexStats] = None,
    state: Optional[list] = None,
) -> ArcFunction:
    """FIFO push-relabel on the apex graph, one inner solve per push."""
    st = KxState(inst, solver, checked)
    st.initialize()
    h = st.labels
    queue = deque(v for v in st.apices if st.is_active(v))
    queued = set(queue)
    while queue:
        u = queue.popleft()
        queued.discard(u)
        while st.is_active(u):
            before = h.snapshot() if checked else None
            targets = [v for v in sorted(st.reachable(u)) if h[u] == h[v] + 1]
            if not targets:
                st.relabel(u)
                if checked:
                    st.check_invariants(before)
                queue.append(u)
                queued.add(u)
                break
            for v in targets:
                st.push(u, v)
                if checked:
                    if st.ex[u] > 0 and v in st.reachable(u):
                        raise InvariantError(f"push ({u},{v}) left arc residual and {u} active")
                    st.check_invariants(before)
                if st.is_active(v) and v not in queued:
                    queue.append(v)
                    queued.add(v)
                if not st.is_active(u):
                    break
    if state is not None:
        state[:] = [st, []]
    return _finish(st, stats)


STRATEGIES = {"batch": apex_max_flow, "fifo": apex_max_flow_fifo}


def solve_apex(strategy: str, inst: ApexInstance, solver: InnerSolver = default_inner_solver, **kw) -> ArcFunction:
    try:
        run = STRATEGIES[strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {strategy!r}; choose from {sorted(STRATEGIES)}") from None
    if strategy == "fifo":
        kw.pop("shuffle_seed", None)
        kw.pop("trace", None)
    return run(inst, solver, **kw)
