"""Command-line interface: ``topoclust <command> <graph.edges> [options]``.

Exit codes: 0 success, 2 input errors, 3 path enumeration over the cap,
4 verification disagreement, 5 simulation did not converge.
"""

from __future__ import annotations

import argparse
import csv
import sys

from . import __version__
from .clusters import (
    DEFAULT_MAX_PATHS,
    EXHAUSTIVE_THRESHOLD,
    analyze,
    brute_force_clusters,
    classify,
    same_partition,
)
from .dynamics import (
    DEFAULT_GROUP_TOL,
    DEFAULT_MAX_STEPS,
    DEFAULT_TOL,
    draw_initial_state,
    draw_weights,
    empirical_clusters,
    parse_initial_state,
    parse_weights,
    refines,
    steady_state,
    weighted_clusters,
)
from .condensation import lscc_condensation
from .errors import GraphError, NotConverged, PathExplosion, TopoClustError
from .graph import format_edge_list, read_edge_list
from .report import build_report, format_partition, partition_lists, render_dot, render_json, render_table

EXIT_INPUT = 2
EXIT_PATHS = 3
EXIT_DISAGREE = 4
EXIT_NOT_CONVERGED = 5


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be > 0, got {text}")
    return value


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return value


def _count(sets) -> str:
    return f"{len(sets)} cluster{'' if len(sets) == 1 else 's'}"


def cmd_clusters(args, out):
    a = analyze(read_edge_list(args.graph), args.method, args.max_paths)
    if args.text:
        out.write(render_table(a.partition))
    elif args.dot:
        out.write(render_dot(a))
    else:
        out.write(render_json(build_report(a)))
    return 0


def cmd_condense(args, out):
    g = read_edge_list(args.graph)
    cond = lscc_condensation(g)
    for rep, members in cond.contracted.items():
        out.write(f"# {rep} <- {' '.join(sorted(members, key=g.sort_key))}\n")
    out.write(format_edge_list(cond.condensed))
    return 0


def cmd_verify(args, out):
    g = read_edge_list(args.graph)
    a = analyze(g, "dominators", args.max_paths)
    h = a.condensation.condensed
    log = sys.stderr if args.json else out
    partitions = {"topological": a.partition.as_sets()}
    agree = True

    by_paths = classify(h, "paths", args.max_paths)
    dual_ok = by_paths == a.classification
    agree &= dual_ok
    log.write(f"path/dominator classification: {'AGREE' if dual_ok else 'DISAGREE'}\n")

    if len(h.nodes) <= EXHAUSTIVE_THRESHOLD:
        partitions["brute_force"] = brute_force_clusters(g).as_sets()
    else:
        log.write(f"brute-force: skipped ({len(h.nodes)} nodes after condensation > {EXHAUSTIVE_THRESHOLD})\n")
    emp = empirical_clusters(g, args.trials, args.seed, args.tol)
    partitions["empirical"] = emp.groups

    for name, sets in partitions.items():
        log.write(f"{name}: {_count(sets)} {format_partition(sets)}\n")
        agree &= same_partition(sets, partitions["topological"])
    verdict = "AGREE" if agree else "DISAGREE"
    log.write(f"{verdict}\n")
    if args.json:
        verification = {
            "trials": args.trials,
            "partitions": {k: partition_lists(v) for k, v in partitions.items()},
            "agree": agree,
        }
        out.write(render_json(build_report(a, verification)))
    return 0 if agree else EXIT_DISAGREE


def cmd_compare(args, out):
    g = read_edge_list(args.graph)
    with open(args.weights, encoding="utf-8") as fh:
        w = parse_weights(fh, g)
    topo = analyze(g).partition.as_sets()
    weighted = weighted_clusters(g, w, args.tol)
    out.write(f"topological: {_count(topo)} {format_partition(topo)}\n")
    out.write(f"weighted: {_count(weighted)} {format_partition(weighted)}\n")
    out.write(f"topological refines weighted: {'yes' if refines(topo, weighted) else 'no'}\n")
    return 0


def _weights_arg(spec, g):
    if spec is None:
        return None
    if spec.startswith("random:"):
        return draw_weights(g, int(spec.split(":", 1)[1]))
    with open(spec, encoding="utf-8") as fh:
        return parse_weights(fh, g)


def _x0_arg(spec, g):
    if spec.startswith("random:"):
        return draw_initial_state(g, int(spec.split(":", 1)[1]))
    with open(spec, encoding="utf-8") as fh:
        return parse_initial_state(fh, g)


def _write_trace(path, g, res):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", *g.nodes])
        for t, x in res.trace:
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in x)])


def cmd_simulate(args, out):
    g = read_edge_list(args.graph)
    w = _weights_arg(args.weights, g)
    x0 = _x0_arg(args.x0, g)
    res = steady_state(g, x0, w, tol=args.tol, max_steps=args.max_steps, trace=bool(args.trace), strict=False)
    for t, v in zip(g.nodes, res.state):
        out.write(f"{t} {v:.17g}\n")
    out.write(f"# residual {res.residual:.3e} steps {res.steps} h {res.step_size:.6g}"
              f" {'converged' if res.converged else 'NOT CONVERGED'}\n")
    if args.trace:
        _write_trace(args.trace, g, res)
    return 0 if res.converged else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="topoclust", description="Topological clusters of consensus networks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def graph_arg(p):
        p.add_argument("graph", help="edge-list file: '<source> <target> [<weight>]' per line")
        p.add_argument("--format", choices=["edges"], default="edges", help=argparse.SUPPRESS)

    p = sub.add_parser("clusters", help="find topological clusters")
    graph_arg(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--text", action="store_true", help="print a CR/CF table")
    mode.add_argument("--dot", action="store_true", help="print Graphviz DOT")
    p.add_argument("--method", choices=["dominators", "paths"], default="dominators",
                   help="how popular nodes are classified")
    p.add_argument("--max-paths", type=_positive_int, default=DEFAULT_MAX_PATHS)
    p.set_defaults(func=cmd_clusters)

    p = sub.add_parser("condense", help="print the LSCC condensation as an edge list")
    graph_arg(p)
    p.set_defaults(func=cmd_condense)

    p = sub.add_parser("verify", help="cross-check clusters against brute force and simulation")
    graph_arg(p)
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_GROUP_TOL)
    p.add_argument("--max-paths", type=_positive_int, default=DEFAULT_MAX_PATHS)
    p.add_argument("--json", action="store_true", help="print the JSON report with a verification block (summary goes to stderr)")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("compare", help="topological vs weight-dependent clusters")
    graph_arg(p)
    p.add_argument("--weights", required=True, help="edge list with a weight on every line")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_GROUP_TOL)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", help="integrate dx/dt = -Lx to steady state")
    graph_arg(p)
    p.add_argument("--weights", help="weight file or random:SEED (default: weights in the graph file)")
    p.add_argument("--x0", required=True, help="initial-state file ('<node> <value>') or random:SEED")
    p.add_argument("--trace", help="write a CSV trajectory (t, x_1..x_N) here")
    p.add_argument("--tol", type=_positive_float, default=DEFAULT_TOL)
    p.add_argument("--max-steps", type=_positive_int, default=DEFAULT_MAX_STEPS)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, out)
    except (GraphError, OSError) as exc:
        print(f"topoclust: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PathExplosion as exc:
        print(f"topoclust: error: {exc} (raise --max-paths)", file=sys.stderr)
        return EXIT_PATHS
    except NotConverged as exc:
        where = "" if exc.trial is None else f" in trial {exc.trial}"
        print(f"topoclust: error: not converged{where}: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except TopoClustError as exc:
        print(f"topoclust: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
