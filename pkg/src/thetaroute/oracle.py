"""Ground truth for tests and certification: shortest paths, stretch, corridors, trace audits."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .errors import ContractViolation
from .geometry import EPS_GEOM, SQRT3, OrientedConeLine, bisector_angle
from .graphs import ThetaGraph
from .routing import RouteTrace

SLACK = 1e-9


@dataclass(frozen=True)
class ShortestPathResult:
    length: float
    path: list
    reachable: bool


def shortest_path(graph: ThetaGraph, s: int, t: int) -> ShortestPathResult:
    """Euclidean-weighted Dijkstra from ``s``, stopping once ``t`` is settled."""
    P = graph.points
    dist = {s: 0.0}
    prev = {}
    heap = [(0.0, s)]
    done = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == t:
            break
        for v in graph.neighbors(u):
            v = int(v)
            nd = d + math.dist(P[u], P[v])
            if nd < dist.get(v, math.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    if t not in done:
        return ShortestPathResult(math.inf, [], False)
    path = [t]
    while path[-1] != s:
        path.append(prev[path[-1]])
    return ShortestPathResult(dist[t], path[::-1], True)


def _weighted_adjacency(graph: ThetaGraph) -> csr_matrix:
    P = graph.points
    e = graph.edges
    w = np.linalg.norm(P[e[:, 0]] - P[e[:, 1]], axis=1)
    n = graph.n
    return csr_matrix(
        (np.r_[w, w], (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])), shape=(n, n)
    )


@dataclass
class SpanningReport:
    max_ratio: float
    worst_pair: Optional[tuple]
    pairs: int
    unreachable: list = field(default_factory=list)


def spanning_ratio(graph: ThetaGraph, pairs: Optional[Iterable] = None) -> SpanningReport:
    """Maximum shortest-path stretch over ``pairs`` (all pairs when omitted).

    Unreachable pairs are excluded from the maximum and listed in the report.
    """
    n = graph.n
    if pairs is None:
        if n < 2:
            raise ContractViolation("spanning ratio needs at least two vertices")
        src = np.arange(n)
        D = dijkstra(_weighted_adjacency(graph), directed=False, indices=src)
        E = np.linalg.norm(graph.points[:, None, :] - graph.points[None, :, :], axis=2)
        iu = np.triu_indices(n, 1)
        d, e = D[iu], E[iu]
        bad = ~np.isfinite(d)
        unreachable = [(int(a), int(b)) for a, b in zip(iu[0][bad], iu[1][bad])]
        r = np.where(bad, -np.inf, d / e)
        j = int(np.argmax(r))
        return SpanningReport(float(r[j]), (int(iu[0][j]), int(iu[1][j])), len(d), unreachable)
    pairs = [(int(a), int(b)) for a, b in pairs]
    if not pairs:
        raise ContractViolation("empty pair sample")
    sources = sorted({a for a, _ in pairs})
    D = dijkstra(_weighted_adjacency(graph), directed=False, indices=sources)
    row = {v: i for i, v in enumerate(sources)}
    best, worst, unreachable = 1.0, None, []
    for a, b in pairs:
        if a == b:
            continue
        d = D[row[a], b]
        if not np.isfinite(d):
            unreachable.append((a, b))
            continue
        r = d / math.dist(graph.points[a], graph.points[b])
        if worst is None or r > best:
            best, worst = r, (a, b)
    return SpanningReport(float(best), worst, len(pairs), unreachable)


# --------------------------------------------------------------------------
# corridors


def corridor_edges(graph: ThetaGraph, line: OrientedConeLine, direction: int):
    """Positive-side boundary edges of the triangles properly crossed by ``line``.

    Returns ``(edges, keys)``: each edge ``(p, q)`` is ordered along the
    travel direction and ``keys`` orders the edges' triangles along the line.
    """
    fl = graph.faces
    if fl is None:
        raise ContractViolation("corridors need a half-theta-6 graph")
    P = graph.points
    nx, ny = line.normal
    ux, uy = line.unit
    off = (P[:, 0] - line.anchor.x) * nx + (P[:, 1] - line.anchor.y) * ny
    alo = ((P[:, 0] - line.anchor.x) * ux + (P[:, 1] - line.anchor.y) * uy) * direction
    side = np.where(np.abs(off) <= EPS_GEOM, 0, np.sign(off)).astype(int)
    T = fl.triangles
    S = side[T]
    crossed = (S == 1).any(axis=1) & (S == -1).any(axis=1)
    T, S = T[crossed], S[crossed]
    closed = S >= 0
    two = closed.sum(axis=1) == 2
    T, S, closed = T[two], S[two], closed[two]
    edges = np.zeros((len(T), 2), dtype=np.int64)
    keys = np.zeros(len(T))
    for r in range(len(T)):
        p, q = T[r][closed[r]]
        if alo[p] > alo[q]:
            p, q = q, p
        edges[r] = (p, q)
        # the line enters and leaves the triangle on its two crossing sides
        xs = []
        for a in range(3):
            i, j = T[r][a], T[r][(a + 1) % 3]
            if (off[i] > 0) != (off[j] > 0) and off[i] != off[j]:
                lam = off[i] / (off[i] - off[j])
                xs.append(alo[i] + lam * (alo[j] - alo[i]))
        keys[r] = 0.5 * (min(xs) + max(xs))
    order = np.argsort(keys, kind="stable")
    return edges[order], keys[order]


def corridor_chains(graph: ThetaGraph, line: OrientedConeLine, direction: int) -> list:
    """Maximal vertex chains of the corridor boundary, in travel order."""
    edges, _ = corridor_edges(graph, line, direction)
    chains = []
    for p, q in edges:
        p, q = int(p), int(q)
        if chains and chains[-1][-1] == p:
            chains[-1].append(q)
        else:
            chains.append([p, q])
    return chains


def corridor_boundary(graph: ThetaGraph, s: int, t: int, line: OrientedConeLine) -> list:
    """The boundary path ``B`` from ``s`` to ``t`` computed from all crossing triangles."""
    P = graph.points
    direction = 1 if line.along(P[t]) >= line.along(P[s]) else -1
    for chain in corridor_chains(graph, line, direction):
        if s in chain:
            i = chain.index(s)
            if t in chain[i:]:
                return chain[i:chain.index(t, i) + 1]
    raise ContractViolation(f"{s} and {t} are not joined by a corridor of the line")


# --------------------------------------------------------------------------
# trace certification


def _runs(trace: RouteTrace):
    """Maximal runs of consecutive steps sharing a tag and a cone or line."""
    out = []
    start = 0
    for i in range(1, len(trace.tags) + 1):
        if i == len(trace.tags) or (
            trace.tags[i], trace.cones[i], trace.lines[i]
        ) != (trace.tags[start], trace.cones[start], trace.lines[start]):
            out.append((start, i))
            start = i
    return out


def _defining_cones(graph: ThetaGraph, u: int, v: int) -> list:
    return [int(c) for c in np.flatnonzero(graph.successors[u] == v)] + [
        int(c) for c in np.flatnonzero(graph.successors[v] == u)
    ]


def certify_trace(
    trace: RouteTrace,
    graph: ThetaGraph,
    bound: float,
    check_shortest: bool = False,
) -> list:
    """Audit an arrived trace; returns a list of ``{check, pass, detail}`` records.

    The list stops at the first failed check.
    """
    report = []

    def record(name, ok, detail=""):
        report.append({"check": name, "pass": bool(ok), "detail": detail})
        return ok

    P = graph.points
    V = trace.vertices
    if not record("arrived", trace.status == "arrived" and V[-1] == trace.t, trace.status):
        return report
    for i in range(len(V) - 1):
        if not graph.has_edge(V[i], V[i + 1]):
            record("edges", False, f"step {i}: ({V[i]}, {V[i + 1]}) is not an edge")
            return report
    record("edges", True, f"{len(V) - 1} edges")
    for i in range(len(V) - 1):
        d = math.dist(P[V[i]], P[V[i + 1]])
        if abs(trace.step_lengths[i] - d) > SLACK:
            record("length-accounting", False, f"step {i}: {trace.step_lengths[i]} != {d}")
            return report
    if not record("length-accounting", True, f"total {trace.total_length:.6g}"):
        return report
    r = trace.ratio
    if not record("ratio-lower", r >= 1.0 - SLACK, f"{r:.6g}"):
        return report
    if not record("ratio-bound", r <= bound + SLACK, f"{r:.6g} vs {bound:.6g}"):
        return report

    for a, b in _runs(trace):
        tag = trace.tags[a]
        length = math.fsum(trace.step_lengths[a:b])
        p, q = P[V[a]], P[V[b]]
        if tag == "forward" and trace.cones[a] is not None:
            c = trace.cones[a]
            ang = bisector_angle(c)
            adv = (q[0] - p[0]) * math.cos(ang) + (q[1] - p[1]) * math.sin(ang)
            ok = length <= (2 / SQRT3) * adv + SLACK
            if not record("forward-run", ok, f"steps {a}-{b}: {length:.6g} vs advance {adv:.6g}"):
                return report
        elif tag == "side" and trace.lines[a] is not None:
            line = trace.lines[a]
            proj = abs(line.along(q) - line.along(p))
            ok = length <= 2 * proj + SLACK
            if not record("side-run", ok, f"steps {a}-{b}: {length:.6g} vs projection {proj:.6g}"):
                return report
            third = line.third_cone
            for i in range(a, b):
                cones = _defining_cones(graph, V[i], V[i + 1])
                if all(c == third for c in cones):
                    record("side-colors", False, f"step {i} uses only cone {third}")
                    return report
            record("side-colors", True, f"steps {a}-{b}")
    if check_shortest:
        sp = shortest_path(graph, trace.s, trace.t)
        record(
            "shortest-path",
            sp.reachable and sp.length <= trace.total_length + SLACK,
            f"{sp.length:.6g} <= {trace.total_length:.6g}",
        )
    return report


def report_passed(report: list) -> bool:
    return all(r["pass"] for r in report)


def bellman_ford(graph: ThetaGraph, s: int) -> np.ndarray:
    """Plain Bellman-Ford distances from ``s``; slow, for cross-checks only."""
    P = graph.points
    e = graph.edges
    w = np.linalg.norm(P[e[:, 0]] - P[e[:, 1]], axis=1)
    d = np.full(graph.n, np.inf)
    d[s] = 0.0
    for _ in range(graph.n):
        changed = False
        for (u, v), x in zip(e, w):
            if d[u] + x < d[v]:
                d[v] = d[u] + x
                changed = True
            if d[v] + x < d[u]:
                d[u] = d[v] + x
                changed = True
        if not changed:
            break
    return d
