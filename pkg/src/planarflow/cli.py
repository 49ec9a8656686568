"""Command-line interface: generate, solve, compare and inspect instances.

Exit codes: 0 success, 1 value mismatch or invariant failure, 2 usage or
parse error.
"""

from __future__ import annotations

import argparse
import math
import sys
from typing import Optional, Sequence

from . import __version__
from .fileformat import InstanceFormatError, format_instance, read_instance
from .gadgets import build_g_circle, build_g_times, build_h, infeasible_set, lift_flow_to_g_times, route_through_cycles
from .generator import grid_instance
from .netcore import FlowError, add_super_terminals, check_feasible, rotation_problems
from .oracle import oracle_value
from .wang import SOLVERS, SolveReport, max_flow_vertex_capacities, prepare, probe_state

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _grid(text: str) -> tuple[int, int]:
    try:
        w, h = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WxH, got {text!r}") from None
    return w, h


def _emit(pairs: dict, fmt: str, out) -> None:
    if fmt == "machine":
        for key in sorted(pairs):
            out.write(f"{key}={pairs[key]}\n")
    else:
        width = max(map(len, pairs), default=0)
        for key, val in pairs.items():
            out.write(f"{key.ljust(width)}  {val}\n")


def _load(path: str):
    try:
        return read_instance(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def cmd_gen(args, out) -> int:
    w, h = args.grid
    if w < 2 or h < 2:
        raise UsageError("grid must be at least 2x2")
    if not 2 <= args.k <= 8:
        raise UsageError("k must lie in [2, 8]")
    if args.k > w * h:
        raise UsageError(f"k={args.k} exceeds the {w * h} grid vertices")
    if args.max_cap < 1:
        raise UsageError("max capacity must be at least 1")
    net = grid_instance(
        w, h, args.k, args.max_cap, args.seed, vertex_cap_prob=args.vertex_cap_prob, clustered=args.clustered
    )
    comment = f"grid {w}x{h} k={args.k} C={args.max_cap} seed={args.seed}"
    text = format_instance(net, comment)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        out.write(text)
    return EXIT_OK


def cmd_solve(args, out) -> int:
    G = _load(args.input)
    report = SolveReport()
    trace = (lambda line: sys.stderr.write(line + "\n")) if args.trace else None
    value, flow = max_flow_vertex_capacities(G, args.solver, checked=args.checked, report=report, trace=trace)
    feasible = check_feasible(G, flow)
    pairs = report.summary()
    pairs["feasible"] = int(feasible.feasible_flow)
    status = EXIT_OK if feasible.feasible_flow else EXIT_FAIL
    if args.compare_oracle:
        ref = oracle_value(G)
        pairs["oracle"] = ref
        pairs["match"] = int(ref == value)
        if ref != value:
            status = EXIT_FAIL
    _emit(pairs, args.format, out)
    return status


def cmd_compare(args, out) -> int:
    G = _load(args.input)
    pairs, values = {}, []
    for name in SOLVERS:
        report = SolveReport()
        value, _ = max_flow_vertex_capacities(G, name, checked=args.checked, report=report)
        values.append(value)
        for key, val in report.summary().items():
            pairs[f"{name}.{key}"] = val
    ref = oracle_value(G)
    pairs["oracle.value"] = ref
    ok = all(v == ref for v in values)
    pairs["match"] = int(ok)
    _emit(pairs, args.format, out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_oracle(args, out) -> int:
    G = _load(args.input)
    _emit({"value": oracle_value(G)}, args.format, out)
    return EXIT_OK


def cmd_validate(args, out) -> int:
    G = _load(args.input)
    problems = rotation_problems(G)
    for p in problems:
        out.write(f"invalid: {p}\n")
    if not problems:
        out.write(f"ok: {G.n} vertices, {G.m // 2} arcs, {len(G.sources)} sources, {len(G.sinks)} sinks\n")
    return EXIT_OK if not problems else EXIT_FAIL


def cmd_inspect(args, out) -> int:
    G = _load(args.input)
    if not G.sources or not G.sinks:
        raise UsageError("instance needs at least one source and one sink")
    if args.which == "circle":
        G_circle, _ = build_g_circle(add_super_terminals(G).net)
        out.write(format_instance(G_circle, "cycle expansion"))
        return EXIT_OK
    prep = prepare(G, args.solver)
    lam = math.floor(prep.top) if args.lam is None else args.lam
    st = probe_state(prep, lam)
    if st is None:
        raise UsageError(f"value {lam} exceeds the expansion maximum {prep.top}")
    Gs, G_circle, gmap_c, f = prep.Gs, prep.G_circle, prep.gmap_circle, st.f
    X = infeasible_set(Gs, f)
    gx = build_g_times(G_circle, gmap_c, X, Gs)
    overloaded = " ".join(f"{x}:{X.vio[x]}" for x in X.X) or "none"
    if args.which == "times":
        out.write(format_instance(gx.net, f"split network at value {lam}; overloads {overloaded}"))
        return EXIT_OK
    f_times = lift_flow_to_g_times(route_through_cycles(Gs, G_circle, gmap_c, f), gx)
    aux = build_h(gx, f_times)
    comment = f"auxiliary residual network at value {lam}; apices {' '.join(map(str, aux.apices))}"
    out.write(format_instance(aux.net, comment, both_directions=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="planarflow", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, solver=True):
        p.add_argument("--format", choices=("text", "machine"), default="text")
        if solver:
            p.add_argument("--solver", choices=SOLVERS, default="batch")
            p.add_argument("--checked", action="store_true", help="verify invariants after every operation")

    p = sub.add_parser("gen", help="write a random planar instance")
    p.add_argument("--grid", type=_grid, default=(4, 4), metavar="WxH")
    p.add_argument("--k", type=int, default=3, help="number of terminals")
    p.add_argument("--max-cap", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--vertex-cap-prob", type=float, default=0.7)
    p.add_argument("--clustered", action="store_true", help="alternate terminals around one hub")
    p.add_argument("-o", "--output")
    p.set_defaults(run=cmd_gen)

    p = sub.add_parser("solve", help="maximum flow with vertex capacities")
    p.add_argument("input")
    common(p)
    p.add_argument("--compare-oracle", action="store_true")
    p.add_argument("--trace", action="store_true", help="one line per pulse on stderr")
    p.set_defaults(run=cmd_solve)

    p = sub.add_parser("compare", help="both strategies against the reference")
    p.add_argument("input")
    common(p)
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("oracle", help="reference value via vertex splitting")
    p.add_argument("input")
    common(p, solver=False)
    p.set_defaults(run=cmd_oracle)

    p = sub.add_parser("validate", help="check the rotation system")
    p.add_argument("input")
    p.set_defaults(run=cmd_validate)

    p = sub.add_parser("inspect-gadget", help="dump a derived network")
    p.add_argument("input")
    p.add_argument("--which", choices=("circle", "times", "h"), default="circle")
    p.add_argument("--lam", type=int, help="flow value for the split and auxiliary networks")
    p.add_argument("--solver", choices=SOLVERS, default="batch")
    p.set_defaults(run=cmd_inspect)
    return parser


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.run(args, out)
    except (UsageError, InstanceFormatError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_USAGE
    except (FlowError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
