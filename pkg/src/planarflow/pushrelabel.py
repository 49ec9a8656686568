"""Generic push-relabel and the batch-highest-distance pulse policy.

A run keeps only excesses and residual capacities; the preflow itself is
implicit and reconstructed at the end. ``checked=True`` re-verifies the
labeling and preflow invariants after every operation or pulse and raises
:class:`~planarflow.netcore.InvariantError` on the first failure.

The pulse driver :func:`pulse_loop` is shared with :mod:`planarflow.apexflow`:
any state object offering ``highest_active``, ``level``, ``bulk_push``,
``relabel``, ``labels``, ``is_active`` and the two checks can be driven by
it. Finite capacities are scaled to integers for the run.
"""

from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .netcore import (
    INF,
    ArcFunction,
    FlowError,
    FlowNetwork,
    InvariantError,
    as_value,
    unbounded_path_exists,
)


class NotApplicable(FlowError):
    """An operation was invoked without its applicability conditions."""


class Labeling:
    def __init__(self, n: int, s: int, t: int, vertices=None):
        self.n = n
        self.s, self.t = s, t
        self.h = {v: 0 for v in (range(n) if vertices is None else vertices)}
        self.h[s] = n

    def __getitem__(self, v):
        return self.h[v]

    def __setitem__(self, v, x):
        self.h[v] = x

    def snapshot(self) -> dict:
        return dict(self.h)

    def check(self, previous: Optional[dict] = None) -> None:
        """Label bound 2n-1, monotone labels and the fixed terminal labels."""
        h, n = self.h, self.n
        if h[self.s] != n or h[self.t] != 0:
            raise InvariantError(f"terminal labels moved: h(s)={h[self.s]}, h(t)={h[self.t]}")
        for v, x in h.items():
            if x > 2 * n - 1:
                raise InvariantError(f"label of {v} is {x} > 2n-1 = {2 * n - 1}")
            if previous is not None and x < previous[v]:
                raise InvariantError(f"label of {v} decreased from {previous[v]} to {x}")


@dataclass
class PulseStats:
    h_max: int
    h_max_size: int
    w_size: int
    flow_moved: object
    relabels: int

    @property
    def saturating(self) -> bool:
        return self.relabels >= 1

    def trace_line(self, index: int) -> str:
        return (
            f"pulse={index} h_max={self.h_max} H_max={self.h_max_size} W={self.w_size} "
            f"flow_moved={self.flow_moved} relabels={self.relabels}"
        )


def finite_stand_in(cap) -> object:
    """A finite value that replaces INF without changing any finite min cut."""
    return 1 + sum(c for c in cap if c != INF)


class PRState:
    """Excesses, residual capacities and labels of one push-relabel run."""

    def __init__(self, net: FlowNetwork, s: int, t: int, checked: bool = False):
        if s == t:
            raise ValueError("source and sink coincide")
        finite = [v for v in range(net.n) if net.vertex_cap[v] != INF]
        if finite:
            raise ValueError(
                f"push-relabel needs a network without finite vertex capacities (vertex {finite[0]})"
            )
        if unbounded_path_exists(net, s, t):
            raise ValueError("maximum flow is unbounded (infinite-capacity s-t path)")
        self.scale = common_denominator(net.cap)
        finite = [c if c == INF else int(c * self.scale) for c in net.cap]
        big = finite_stand_in(finite)
        self.net, self.s, self.t = net, s, t
        self.cap = [big if c == INF else c for c in finite]
        self.cres = list(self.cap)
        self.ex = [0] * net.n
        self.labels = Labeling(net.n, s, t)
        self.members: list[set] = [set() for _ in range(2 * net.n)]  # label -> all vertices
        self.members[0] = set(range(net.n)) - {s}
        self.members[net.n].add(s)
        self.checked = checked
        self.buckets: list[set] = [set() for _ in range(2 * net.n)]
        self.pushes = 0
        self.relabels = 0
        self.relabels_per_vertex = [0] * net.n
        self.bulk_pushes = 0
        self.pulses = 0
        self.saturating_pulses = 0

    def vertices(self):
        return range(self.net.n)

    def is_active(self, v: int) -> bool:
        return v != self.s and v != self.t and self.ex[v] > 0

    def _move(self, e: int, delta) -> None:
        u, v = self.net.tail[e], self.net.head[e]
        was_active = self.is_active(v)
        self.cres[e] -= delta
        self.cres[e ^ 1] += delta
        self.ex[u] -= delta
        self.ex[v] += delta
        if not self.is_active(u):
            self.buckets[self.labels[u]].discard(u)
        if not was_active and self.is_active(v):
            self.buckets[self.labels[v]].add(v)

    def highest_active(self):
        for h in range(len(self.buckets) - 1, -1, -1):
            if self.buckets[h]:
                return h, sorted(self.buckets[h])
        return None, []

    def active_vertices(self) -> list[int]:
        return [v for v in self.vertices() if self.is_active(v)]

    # operations

    def push(self, u: int, v: int, e: int):
        net, h = self.net, self.labels
        if net.tail[e] != u or net.head[e] != v:
            raise NotApplicable(f"arc {e} does not go from {u} to {v}")
        if not self.cres[e] > 0:
            raise NotApplicable(f"arc {e} is not residual")
        if not self.ex[u] > 0:
            raise NotApplicable(f"vertex {u} has no excess")
        if h[u] != h[v] + 1:
            raise NotApplicable(f"h({u})={h[u]} is not h({v})+1={h[v] + 1}")
        delta = min(self.ex[u], self.cres[e])
        self._move(e, delta)
        self.pushes += 1
        if self.checked and self.cres[e] != 0 and self.ex[u] != 0:
            raise InvariantError(f"after push on {e}: arc unsaturated and {u} still active")
        return delta

    def residual_out(self, u: int) -> list[int]:
        return [e for e in self.net.out[u] if self.cres[e] > 0]

    def relabel(self, u: int) -> int:
        h = self.labels
        if not self.is_active(u):
            raise NotApplicable(f"vertex {u} is not active")
        heads = [h[self.net.head[e]] for e in self.residual_out(u)]
        if not heads:
            raise InvariantError(f"active vertex {u} has no residual out-arc")
        low = min(heads)
        if low < h[u]:
            raise NotApplicable(f"vertex {u} still has an admissible arc")
        self.buckets[h[u]].discard(u)
        self.members[h[u]].discard(u)
        h[u] = low + 1
        if h[u] >= len(self.buckets):
            raise InvariantError(f"label of {u} exceeds 2n-1")
        self.buckets[h[u]].add(u)
        self.members[h[u]].add(u)
        self.relabels += 1
        self.relabels_per_vertex[u] += 1
        return h[u]

    def level(self, x: int) -> list[int]:
        """All vertices currently labelled ``x``."""
        if not 0 <= x < len(self.members):
            return []
        return sorted(self.members[x])

    def bulk_push(self, U, W):
        """Greedy per-arc Bulk-Push over direct arcs from ``U`` to ``W``.

        Returns the total amount that left ``U``, in scaled units.
        """
        h = self.labels
        U, W = list(U), set(W)
        for u in U:
            if not self.ex[u] > 0:
                raise NotApplicable(f"vertex {u} in U has no excess")
        if U:
            level = h[U[0]]
            if any(h[u] != level for u in U) or any(h[w] != level - 1 for w in W):
                raise NotApplicable("U must share one label and W sit exactly one below it")
        total = 0
        for u in U:
            for e in self.net.out[u]:
                if self.ex[u] <= 0:
                    break
                if self.net.head[e] in W and self.cres[e] > 0:
                    d = min(self.ex[u], self.cres[e])
                    self._move(e, d)
                    total += d
                    self.pushes += 1
        self.bulk_pushes += 1
        return total

    # invariants

    def check_pulse(self, U, W, before: dict) -> None:
        self.check_push_maximal(U, W)
        self.check_invariants(before)

    def check_push_maximal(self, U, W) -> None:
        W = set(W)
        for u in U:
            if self.ex[u] == 0:
                continue
            for e in self.net.out[u]:
                if self.net.head[e] in W and self.cres[e] != 0:
                    raise InvariantError(f"bulk push not maximal: arc {e} residual and {u} still active")

    def check_invariants(self, previous: Optional[dict] = None) -> None:
        """Nonnegative excess, valid labels, label bounds and the pairwise residual sums."""
        net, h = self.net, self.labels
        for v in self.vertices():
            if v != self.s and self.ex[v] < 0:
                raise InvariantError(f"negative excess at {v}")
        for e in range(net.m):
            if self.cres[e] < 0:
                raise InvariantError(f"negative residual capacity on arc {e}")
            if self.cres[e] > 0 and h[net.tail[e]] > h[net.head[e]] + 1:
                raise InvariantError(f"labeling invalid on residual arc {e}")
        for e in range(0, net.m, 2):
            if self.cres[e] + self.cres[e + 1] != self.cap[e] + self.cap[e + 1]:
                raise InvariantError(f"residual sum broken on arc pair {e}")
        h.check(previous)
        if sum(self.relabels_per_vertex) != self.relabels:
            raise InvariantError("relabel counters disagree")

    def flow(self) -> ArcFunction:
        return flow_from_residual(self.cap, self.cres, self.scale)


def common_denominator(values) -> int:
    d = 1
    for x in values:
        if isinstance(x, Fraction):
            d = d * x.denominator // math.gcd(d, x.denominator)
    return d


def flow_from_residual(cap, cres, scale=1) -> ArcFunction:
    """Recover the arc function from residual capacities of a finite network."""
    out = [0] * len(cap)
    for e in range(0, len(cap), 2):
        d = cap[e] - cres[e]
        if d > 0:
            out[e] = as_value(Fraction(d, scale)) if scale != 1 else d
        elif d < 0:
            out[e + 1] = as_value(Fraction(-d, scale)) if scale != 1 else -d
    f = ArcFunction.__new__(ArcFunction)
    f.values = out
    return f


def init_state(net: FlowNetwork, s: int, t: int, checked: bool = False) -> PRState:
    """Saturate every arc leaving ``s``; all labels 0 except h(s) = n."""
    st = PRState(net, s, t, checked)
    for e in net.out[s]:
        if st.cres[e] > 0:
            st._move(e, st.cres[e])
    if checked:
        st.check_invariants()
    return st


def pulse_loop(
    st,
    *,
    shuffle_seed: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
    max_pulses: Optional[int] = None,
) -> list[PulseStats]:
    """Run pulses until no vertex is active.

    Each pulse Bulk-Pushes from every active vertex of the highest label to
    the vertices one label below, then relabels those that stay active
    (ascending index, or shuffled when ``shuffle_seed`` is given).
    """
    rng = random.Random(shuffle_seed) if shuffle_seed is not None else None
    pulses: list[PulseStats] = []
    while True:
        h_max, top = st.highest_active()
        if not top:
            return pulses
        if max_pulses is not None and len(pulses) >= max_pulses:
            raise FlowError(f"pulse budget of {max_pulses} exhausted")
        W = st.level(h_max - 1)
        before = st.labels.snapshot() if st.checked else None
        moved = as_value(Fraction(st.bulk_push(top, W), st.scale))
        still = [u for u in top if st.is_active(u)]
        if rng is not None:
            rng.shuffle(still)
        if st.checked:
            st.check_push_maximal(top, W)
        for u in still:
            st.relabel(u)
        p = PulseStats(h_max, len(top), len(W), moved, len(still))
        st.pulses += 1
        st.saturating_pulses += p.saturating
        pulses.append(p)
        if trace is not None:
            trace(p.trace_line(len(pulses)))
        if st.checked:
            st.check_invariants(before)
            new_max, new_top = st.highest_active()
            if p.saturating and not new_max > h_max:
                raise InvariantError(f"saturating pulse did not raise h_max above {h_max}")
            if not p.saturating and new_top and not new_max < h_max:
                raise InvariantError(f"non-saturating pulse did not lower h_max below {h_max}")


def batch_highest_distance(
    net: FlowNetwork,
    s: int,
    t: int,
    *,
    checked: bool = False,
    shuffle_seed: Optional[int] = None,
    trace: Optional[Callable[[str], None]] = None,
) -> tuple[ArcFunction, list[PulseStats]]:
    st = init_state(net, s, t, checked)
    pulses = pulse_loop(st, shuffle_seed=shuffle_seed, trace=trace)
    if checked and not verify_no_augmenting_path(st):
        raise InvariantError("augmenting path left at termination")
    return st.flow(), pulses


def fifo_push_relabel(net: FlowNetwork, s: int, t: int, *, checked: bool = False) -> ArcFunction:
    st = init_state(net, s, t, checked)
    fifo_discharge(st)
    if checked and not verify_no_augmenting_path(st):
        raise InvariantError("augmenting path left at termination")
    return st.flow()


def fifo_discharge(st: PRState) -> None:
    net, h = st.net, st.labels
    queue = deque(v for v in st.vertices() if st.is_active(v))
    queued = set(queue)
    while queue:
        u = queue.popleft()
        queued.discard(u)
        while st.is_active(u):
            for e in net.out[u]:
                v = net.head[e]
                if st.cres[e] > 0 and h[u] == h[v] + 1:
                    before = h.snapshot() if st.checked else None
                    st.push(u, v, e)
                    if st.is_active(v) and v not in queued:
                        queue.append(v)
                        queued.add(v)
                    if st.checked:
                        st.check_invariants(before)
                    if not st.is_active(u):
                        break
            else:
                before = h.snapshot() if st.checked else None
                st.relabel(u)
                if st.checked:
                    st.check_invariants(before)
                queue.append(u)
                queued.add(u)
                break


def verify_no_augmenting_path(st) -> bool:
    """True iff the sink is unreachable from the source over residual arcs."""
    net = st.net
    seen = {st.s}
    queue = deque([st.s])
    while queue:
        u = queue.popleft()
        for e in net.out[u]:
            w = net.head[e]
            if st.cres[e] > 0 and w not in seen:
                if w == st.t:
                    return False
                seen.add(w)
                queue.append(w)
    return True
