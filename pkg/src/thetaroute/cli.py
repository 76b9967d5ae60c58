"""Command-line interface: ``thetaroute {gen,build,route,certify,experiment,predict}``."""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import __version__
from .errors import ThetaRouteError
from .experiment import load_config, ratio_experiment
from .geometry import cone_index
from .graphs import (
    PARITIES,
    build_theta_graph,
    certify_empty_triangle,
    load_graph,
    read_points,
    save_graph,
    write_points,
)
from .oracle import certify_trace, report_passed
from .poisson import PHI_MAX, PHI_MIN, Window, predicted_average, predicted_ratio, sample_poisson
from .routing import ALGORITHMS, ALIASES, RouteTrace, canonical_algorithm, route

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_LOOP = 3
EXIT_DEAD_END = 4
EXIT_STEP_LIMIT = 5
EXIT_CERTIFY = 6

STATUS_EXIT = {
    "arrived": EXIT_OK,
    "loop-detected": EXIT_LOOP,
    "dead-end": EXIT_DEAD_END,
    "left-window": EXIT_DEAD_END,
    "step-limit": EXIT_STEP_LIMIT,
}

NEGATIVE_BOUND = 5.0 / math.sqrt(3.0)
WORST_CASE = {
    "positive": 2.0,
    "theta6-auto": 2.0,
    "memoryless-negative": NEGATIVE_BOUND,
    "constmem-negative": NEGATIVE_BOUND,
    "bose-negative": NEGATIVE_BOUND,
}


class UsageError(Exception):
    pass


def _g6(x: float) -> float:
    return float(f"{x:.6g}")


def _algo(name: str) -> str:
    try:
        return canonical_algorithm(name)
    except ThetaRouteError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_gen(args) -> int:
    try:
        window = Window.parse(args.window)
    except (ValueError, ThetaRouteError) as exc:
        raise UsageError(f"--window: {exc}") from None
    if args.lam < 0:
        raise UsageError("--lambda must be non-negative")
    pts = sample_poisson(window, args.lam, args.seed)
    header = [
        f"poisson lambda={args.lam:.6g} window={window.xmin:.6g},{window.ymin:.6g},"
        f"{window.xmax:.6g},{window.ymax:.6g} seed={args.seed} n={len(pts)}"
    ]
    write_points(args.out, pts, header)
    return EXIT_OK


def cmd_build(args) -> int:
    pts = read_points(args.points)
    if args.k < 2:
        raise UsageError("--k must be at least 2")
    g = build_theta_graph(pts, args.k, args.parity)
    save_graph(args.out, g)
    return EXIT_OK


def _vertex(g, v: int, name: str) -> int:
    if not 0 <= v < g.n:
        raise UsageError(f"--{name} {v} is not a vertex (graph has {g.n})")
    return v


def cmd_route(args) -> int:
    g = load_graph(args.graph)
    s, t = _vertex(g, args.s, "s"), _vertex(g, args.t, "t")
    tr = route(args.algo, s, t, g, args.max_steps)
    out = tr.to_json()
    out["length"], out["ratio"] = _g6(out["length"]), _g6(out["ratio"])
    json.dump(out, sys.stdout)
    sys.stdout.write("\n")
    return STATUS_EXIT[tr.status]


def _trace_from_json(data: dict, g, algorithm: str) -> tuple[RouteTrace, list]:
    V = [int(v) for v in data["vertices"]]
    if not V:
        raise UsageError("trace has no vertices")
    for v in V:
        _vertex(g, v, "trace vertex")
    P = g.points
    tags = list(data.get("tags", []))
    tr = RouteTrace(
        algorithm, V[0], V[-1], V, tags=tags,
        cones=[None] * len(tags), lines=[None] * len(tags),
        step_lengths=[float(math.dist(P[a], P[b])) for a, b in zip(V, V[1:])],
        euclid=float(math.dist(P[V[0]], P[V[-1]])),
        split_point=data.get("split_point"), status=data.get("status", "arrived"),
    )
    extra = []
    if "length" in data:
        ok = math.isclose(float(data["length"]), tr.total_length, rel_tol=1e-5, abs_tol=1e-9)
        extra.append({
            "check": "reported-length", "pass": ok,
            "detail": f"{float(data['length']):.6g} vs {tr.total_length:.6g}",
        })
    return tr, extra


def cmd_certify(args) -> int:
    g = load_graph(args.graph)
    report = []
    bad = [
        (int(u), int(v)) for u, v in g.edges
        if not certify_empty_triangle(g.points[u], g.points[v], g.points, g.k)
        and not certify_empty_triangle(g.points[v], g.points[u], g.points, g.k)
    ]
    report.append({
        "check": "graph-empty-triangles", "pass": not bad,
        "detail": f"{len(g.edges)} edges" if not bad else f"non-empty: {bad[:5]}",
    })
    if args.trace or args.algo:
        algorithm = args.algo or "positive"
        bound = args.bound if args.bound is not None else WORST_CASE.get(algorithm, math.inf)
        if args.trace:
            with open(args.trace) as fh:
                tr, extra = _trace_from_json(json.load(fh), g, algorithm)
            report.extend(extra)
        else:
            if args.s is None or args.t is None:
                raise UsageError("--algo needs --s and --t")
            tr = route(algorithm, _vertex(g, args.s, "s"), _vertex(g, args.t, "t"), g)
        used = g
        if algorithm == "theta6-auto" and tr.s != tr.t:
            c = cone_index(g.points[tr.s], g.points[tr.t], 6)
            used = g.half("even" if c % 2 == 0 else "odd")
        report.extend(certify_trace(tr, used, bound))
    json.dump(report, sys.stdout, indent=1)
    sys.stdout.write("\n")
    return EXIT_OK if report_passed(report) else EXIT_CERTIFY


def cmd_experiment(args) -> int:
    try:
        cfg = load_config(args.config)
    except (OSError, ValueError, TypeError, ThetaRouteError) as exc:
        raise UsageError(f"--config: {exc}") from None
    if args.jobs is not None:
        cfg.jobs = args.jobs
    text = ratio_experiment(cfg).to_csv()
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_predict(args) -> int:
    if args.average:
        value = predicted_average(args.algo)
    else:
        if not (PHI_MIN - 1e-4 <= args.phi <= PHI_MAX + 1e-4):
            raise UsageError(f"--phi must lie in [pi/3, pi/2], got {args.phi}")
        phi = min(max(args.phi, PHI_MIN), PHI_MAX)
        value = predicted_ratio(args.algo, phi)
    print(f"{value:.6g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thetaroute", description=__doc__)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="sample a Poisson point set")
    g.add_argument("--lambda", dest="lam", type=float, required=True)
    g.add_argument("--window", default="0,0,1,1", help="xmin,ymin,xmax,ymax")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    b = sub.add_parser("build", help="build a theta graph from a point file")
    b.add_argument("--points", required=True)
    b.add_argument("--k", type=int, default=6)
    b.add_argument("--parity", choices=PARITIES, default="all")
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_build)

    algos = sorted(set(ALGORITHMS) | set(ALIASES))
    r = sub.add_parser("route", help="route between two vertices, print the trace")
    r.add_argument("--graph", required=True)
    r.add_argument("--algo", type=_algo, required=True, metavar="{" + ",".join(algos) + "}")
    r.add_argument("--s", type=int, required=True)
    r.add_argument("--t", type=int, required=True)
    r.add_argument("--max-steps", type=int, default=None)
    r.set_defaults(func=cmd_route)

    c = sub.add_parser("certify", help="audit a graph and optionally a trace")
    c.add_argument("--graph", required=True)
    c.add_argument("--trace", help="trace JSON written by 'route'")
    c.add_argument("--algo", type=_algo)
    c.add_argument("--s", type=int)
    c.add_argument("--t", type=int)
    c.add_argument("--bound", type=float)
    c.set_defaults(func=cmd_certify)

    e = sub.add_parser("experiment", help="run a routing-ratio experiment")
    e.add_argument("--config", required=True)
    e.add_argument("--out")
    e.add_argument("--jobs", type=int)
    e.set_defaults(func=cmd_experiment)

    q = sub.add_parser("predict", help="asymptotic expected routing ratio")
    q.add_argument("--algo", type=_algo, required=True)
    grp = q.add_mutually_exclusive_group(required=True)
    grp.add_argument("--phi", type=float)
    grp.add_argument("--average", action="store_true")
    q.set_defaults(func=cmd_predict)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"thetaroute {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ThetaRouteError, ValueError) as exc:
        print(f"thetaroute {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
