"""Online local routing on theta-6 and half-theta-6 graphs.

Every step function sees the graph only through a :class:`NeighborhoodView`
of the current vertex: its own position, its neighbours' positions, its
cone successors and the triangles incident to it.  The destination enters
as coordinates; constant-memory routing additionally receives the source
coordinates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import ContractViolation, CorridorExhausted, DeadEnd, LocalityError
from .geometry import (
    EPS_GEOM,
    CanonicalTriangle,
    OrientedConeLine,
    Point,
    Side,
    as_point,
    bisector_angle,
    cone_index,
    contains,
    side_of_line,
)
from .graphs import ThetaGraph

ALGORITHMS = (
    "theta-k",
    "positive",
    "memoryless-negative",
    "constmem-negative",
    "bose-negative",
    "theta6-auto",
)

ALIASES = {
    "theta": "theta-k",
    "memoryless": "memoryless-negative",
    "constmem": "constmem-negative",
    "bose": "bose-negative",
    "theta6": "theta6-auto",
}

STATUSES = ("arrived", "loop-detected", "dead-end", "step-limit", "left-window")


def canonical_algorithm(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in ALGORITHMS:
        raise ContractViolation(f"unknown routing algorithm {name!r}")
    return name


@dataclass(frozen=True)
class NeighborhoodView:
    center: int
    position: Point
    neighbors: dict
    successors: tuple
    faces: tuple
    k: int = 6
    parity_offset: int = 0

    def pos(self, v: int) -> Point:
        if v == self.center:
            return self.position
        try:
            return self.neighbors[v]
        except KeyError:
            raise LocalityError(f"vertex {v} is not a neighbour of {self.center}") from None

    def successor(self, cone: int) -> Optional[int]:
        return self.successors[cone % self.k]


def make_view(graph: ThetaGraph, u: int) -> NeighborhoodView:
    P = graph.points
    nb = {int(v): Point(*P[v]) for v in graph.neighbors(u)}
    faces = ()
    fl = graph.faces
    if fl is not None:
        faces = tuple(tuple(int(x) for x in fl.triangles[f]) for f in fl.faces_of(u))
    succ = tuple(None if s < 0 else int(s) for s in graph.successors[u])
    return NeighborhoodView(int(u), Point(*P[u]), nb, succ, faces, graph.k, graph.parity_offset)


class Step(NamedTuple):
    vertex: int
    tag: str
    cone: Optional[int] = None
    line: Optional[OrientedConeLine] = None


# --------------------------------------------------------------------------
# building blocks


def theta_step(view: NeighborhoodView, t) -> Step:
    """Classic theta-k routing: follow the successor in the cone containing ``t``."""
    if view.position[0] == t[0] and view.position[1] == t[1]:
        raise ContractViolation("theta_step called at the destination")
    c = cone_index(view.position, t, view.k)
    nxt = view.successor(c)
    if nxt is None:
        raise DeadEnd(f"cone {c} of vertex {view.center} is empty")
    return Step(nxt, "theta", cone=c)


def forward_step(view: NeighborhoodView, cone: int) -> Step:
    if cone % 2 != view.parity_offset:
        raise ContractViolation(f"forward routing needs a positive cone, got {cone}")
    nxt = view.successor(cone)
    if nxt is None:
        raise DeadEnd(f"cone {cone} of vertex {view.center} is empty")
    return Step(nxt, "forward", cone=cone)


def _crossing_interval(line: OrientedConeLine, pts) -> tuple[float, float]:
    vals = []
    for i in range(3):
        p, q = pts[i], pts[(i + 1) % 3]
        op, oq = line.offset(p), line.offset(q)
        if (op > 0) != (oq > 0) or op == 0 or oq == 0:
            if op == oq:
                continue
            lam = op / (op - oq)
            x = p[0] + lam * (q[0] - p[0])
            y = p[1] + lam * (q[1] - p[1])
            vals.append(line.along((x, y)))
    return min(vals), max(vals)


def side_step(view: NeighborhoodView, line: OrientedConeLine, direction: int) -> Step:
    """Next vertex on the positive-side boundary of the triangles crossing ``line``.

    ``direction`` is +1 to travel along ``line.unit`` and -1 against it.
    """
    v = view.center
    if side_of_line(line, view.position) is Side.NEGATIVE:
        raise ContractViolation(f"vertex {v} is on the negative side of the line")
    here = line.along(view.position) * direction
    best = None
    for f in view.faces:
        pts = [view.pos(x) for x in f]
        sides = [side_of_line(line, p) for p in pts]
        if Side.POSITIVE not in sides or Side.NEGATIVE not in sides:
            continue
        closed_pos = [x for x, s in zip(f, sides) if s is not Side.NEGATIVE]
        if len(closed_pos) != 2 or v not in closed_pos:
            continue
        w = closed_pos[0] if closed_pos[1] == v else closed_pos[1]
        if line.along(view.pos(w)) * direction <= here + EPS_GEOM:
            continue
        lo, hi = _crossing_interval(line, pts)
        key = 0.5 * (lo + hi) * direction
        if best is None or key < best[0]:
            best = (key, w)
    if best is None:
        raise CorridorExhausted(f"no corridor triangle ahead of vertex {v}")
    return Step(best[1], "side", line=line)


# --------------------------------------------------------------------------
# negative-routing case analysis


def _ray_line(apex, angle_index: int, parity: int) -> OrientedConeLine:
    return OrientedConeLine(as_point(apex), angle_index % 6, parity)


@dataclass(frozen=True)
class _NegativeState:
    """What the case ladder needs to know at vertex ``u`` when ``t`` is in an odd cone."""

    cone: int
    tri: CanonicalTriangle
    a: Optional[int]
    b: Optional[int]
    a_inside: bool
    b_inside: bool
    a_line: OrientedConeLine
    b_line: OrientedConeLine
    a_gap: float
    b_gap: float


def _negative_state(view: NeighborhoodView, t, i: int) -> _NegativeState:
    u = view.position
    j = (i + 3) % 6
    b_ang = bisector_angle(j)
    depth = max((u[0] - t[0]) * math.cos(b_ang) + (u[1] - t[1]) * math.sin(b_ang), 0.0)
    tri = CanonicalTriangle(as_point(t), j, depth)
    a, b = view.successor(i - 1), view.successor(i + 1)
    a_in = a is not None and contains(tri, view.pos(a), closed=True)
    b_in = b is not None and contains(tri, view.pos(b), closed=True)
    # the C_{i-1} sub-triangle leans on t's ray at 60 (j + 2) degrees,
    # the C_{i+1} one on the ray at 60 (j + 1) degrees
    par = view.parity_offset
    a_line = _ray_line(t, j + 2, par)
    b_line = _ray_line(t, j + 1, par)
    return _NegativeState(
        i, tri, a, b, a_in, b_in, a_line, b_line,
        abs(a_line.offset(u)), abs(b_line.offset(u)),
    )


def _toward_apex(line: OrientedConeLine, view: NeighborhoodView) -> int:
    return -1 if line.along(view.position) > 0 else 1


def _smaller_is_a(st: _NegativeState) -> bool:
    # ties go to the counterclockwise successor b
    return st.a_gap < st.b_gap - EPS_GEOM


def memoryless_negative_step(view: NeighborhoodView, t, mem=None) -> Step:
    i = cone_index(view.position, t, 6)
    if i % 2 == view.parity_offset:
        return forward_step(view, i)
    st = _negative_state(view, t, i)
    if st.a is not None and not st.a_inside:
        return side_step(view, st.a_line, _toward_apex(st.a_line, view))
    if st.b is not None and not st.b_inside:
        return side_step(view, st.b_line, _toward_apex(st.b_line, view))
    if st.a_inside and st.b_inside:
        return forward_step(view, i - 1 if _smaller_is_a(st) else i + 1)
    raise DeadEnd(f"vertex {view.center} lacks a successor needed by the case analysis")


@dataclass(frozen=True)
class SourceMemory:
    """The one remembered point of constant-memory routing: the source."""

    source: Point

    def guide_line(self, t, parity: int = 0) -> Optional[OrientedConeLine]:
        """Line from the source toward the nearest crossing of the two canonical triangles of s and t."""
        s = self.source
        i = cone_index(s, t, 6)
        if i % 2 == parity:
            return None
        j = (i + 3) % 6
        a_gap = abs(_ray_line(t, j + 2, parity).offset(s))
        b_gap = abs(_ray_line(t, j + 1, parity).offset(s))
        # s's ray shared with the smaller sub-triangle's cone
        ang = i + 1 if a_gap < b_gap - EPS_GEOM else i + 2
        return _ray_line(s, ang, parity)


def constmem_negative_step(view: NeighborhoodView, t, mem: SourceMemory) -> Step:
    i = cone_index(view.position, t, 6)
    if i % 2 == view.parity_offset:
        return forward_step(view, i)
    st = _negative_state(view, t, i)
    if st.a is not None and not st.a_inside:
        return side_step(view, st.a_line, _toward_apex(st.a_line, view))
    if st.b is not None and not st.b_inside:
        return side_step(view, st.b_line, _toward_apex(st.b_line, view))
    if st.a_inside and st.b_inside:
        guide = mem.guide_line(t, view.parity_offset)
        if guide is None:
            return forward_step(view, i - 1 if _smaller_is_a(st) else i + 1)
        return side_step(view, guide, 1)
    raise DeadEnd(f"vertex {view.center} lacks a successor needed by the case analysis")


def bose_negative_step(view: NeighborhoodView, t, mem=None) -> Step:
    i = cone_index(view.position, t, 6)
    if i % 2 == view.parity_offset:
        return forward_step(view, i)
    st = _negative_state(view, t, i)
    if st.a_inside and st.b_inside:
        return forward_step(view, i - 1 if _smaller_is_a(st) else i + 1)
    if st.b_inside:
        line = st.a_line
    elif st.a_inside:
        line = st.b_line
    else:
        # both empty: walk along the side of the larger one
        line = st.a_line if st.a_gap > st.b_gap + EPS_GEOM else st.b_line
    return side_step(view, line, _toward_apex(line, view))


# --------------------------------------------------------------------------
# positive routing: forward phase then side phase along the negative cone of t


@dataclass(frozen=True)
class _PositivePhase:
    cone: int
    line: Optional[OrientedConeLine] = None


def positive_step(view: NeighborhoodView, t, phase: _PositivePhase) -> tuple[Step, _PositivePhase]:
    neg = (phase.cone + 3) % 6
    if phase.line is None:
        c = cone_index(t, view.position, 6)
        if c == neg:
            return forward_step(view, phase.cone), phase
        if c == (neg + 1) % 6:
            line = _ray_line(t, neg + 2, view.parity_offset)
        elif c == (neg - 1) % 6:
            line = _ray_line(t, neg + 1, view.parity_offset)
        else:
            raise DeadEnd(f"vertex {view.center} left the negative cone of t on the far side")
        phase = _PositivePhase(phase.cone, line)
    return side_step(view, phase.line, _toward_apex(phase.line, view)), phase


# --------------------------------------------------------------------------
# traces and the driver


@dataclass
class RouteTrace:
    algorithm: str
    s: int
    t: int
    vertices: list
    tags: list = field(default_factory=list)
    cones: list = field(default_factory=list)
    lines: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)
    euclid: float = 0.0
    split_point: Optional[int] = None
    status: str = "arrived"

    @property
    def total_length(self) -> float:
        return float(math.fsum(self.step_lengths))

    @property
    def ratio(self) -> float:
        if self.euclid == 0.0:
            return 1.0
        return self.total_length / self.euclid

    @property
    def arrived(self) -> bool:
        return self.status == "arrived"

    def to_json(self) -> dict:
        return {
            "vertices": [int(v) for v in self.vertices],
            "tags": list(self.tags),
            "length": self.total_length,
            "ratio": self.ratio,
            "split_point": self.split_point,
            "status": self.status,
        }


def _phase_key(step: Step):
    if step.tag == "side":
        return ("side", step.line)
    return (step.tag, step.cone)


def route(
    algorithm: str,
    s: int,
    t: int,
    graph: ThetaGraph,
    max_steps: Optional[int] = None,
    window=None,
) -> RouteTrace:
    """Route from vertex ``s`` to vertex ``t`` with one of :data:`ALGORITHMS`.

    Stops on arrival, on a dead end, when a (vertex, state) pair repeats, or
    after ``max_steps`` steps (default ``4 n + 16``).  With a ``window``,
    dead ends at vertices whose neighbourhood is clipped by it are reported
    as ``left-window``.
    """
    algorithm = canonical_algorithm(algorithm)
    n = graph.n
    if not (0 <= s < n and 0 <= t < n):
        raise ContractViolation("s and t must be vertices of the graph")
    P = graph.points
    tpos = Point(*P[t])
    trace = RouteTrace(algorithm, s, t, [s], euclid=float(math.dist(P[s], P[t])))
    if s == t:
        return trace
    if max_steps is None:
        max_steps = 4 * n + 16

    g = graph
    state = None
    if algorithm == "theta-k":
        if graph.parity != "all":
            raise ContractViolation("theta-k routing runs on a full theta graph")
    else:
        if graph.k != 6:
            raise ContractViolation(f"{algorithm} routing needs k=6")
        if algorithm == "theta6-auto":
            if graph.parity != "all":
                raise ContractViolation("theta6-auto routes on the full theta-6 graph")
            c = cone_index(P[s], tpos, 6)
            g = graph.half("even" if c % 2 == 0 else "odd")
        elif graph.parity == "all":
            g = graph.half("even")
        if algorithm in ("positive", "theta6-auto"):
            c = cone_index(P[s], tpos, 6)
            if c % 2 != g.parity_offset:
                raise ContractViolation("positive routing needs t in a positive cone of s")
            state = _PositivePhase(c)
        elif algorithm == "constmem-negative":
            state = SourceMemory(Point(*P[s]))

    step_fn: Callable = {
        "theta-k": lambda view, st: (theta_step(view, tpos), st),
        "positive": lambda view, st: positive_step(view, tpos, st),
        "theta6-auto": lambda view, st: positive_step(view, tpos, st),
        "memoryless-negative": lambda view, st: (memoryless_negative_step(view, tpos), st),
        "constmem-negative": lambda view, st: (constmem_negative_step(view, tpos, st), st),
        "bose-negative": lambda view, st: (bose_negative_step(view, tpos), st),
    }[algorithm]

    u = s
    seen = {(s, state)}
    prev_key = None
    while u != t:
        if len(trace.tags) >= max_steps:
            trace.status = "step-limit"
            break
        view = make_view(g, u)
        try:
            step, state = step_fn(view, state)
        except DeadEnd:
            trace.status = "dead-end"
            if window is not None and not window_certifies(g, u, window):
                trace.status = "left-window"
            break
        key = _phase_key(step)
        if prev_key is not None and key != prev_key and trace.split_point is None:
            trace.split_point = u
        prev_key = key
        trace.tags.append(step.tag)
        trace.cones.append(step.cone)
        trace.lines.append(step.line)
        trace.step_lengths.append(float(math.dist(P[u], P[step.vertex])))
        trace.vertices.append(step.vertex)
        u = step.vertex
        if u == t:
            break
        if (u, state) in seen:
            trace.status = "loop-detected"
            break
        seen.add((u, state))
    return trace


# --------------------------------------------------------------------------
# window certification


def face_triangles_inside(g: ThetaGraph, window) -> np.ndarray:
    """Per face: does its empty circumscribing equilateral triangle fit in ``window``?"""
    fl = g.faces
    P = g.points
    tri = P[fl.triangles]  # (F, 3, 2)
    # outward normals of the empty triangles are the positive-cone bisectors
    ang = np.array([bisector_angle(c) for c in range(g.parity_offset, 6, 2)])
    normals = np.column_stack([np.cos(ang), np.sin(ang)])
    c = np.einsum("fvd,nd->fvn", tri, normals).max(axis=1)  # (F, 3)
    ok = np.ones(len(tri), dtype=bool)
    for a in range(3):
        b = (a + 1) % 3
        n1, n2 = normals[a], normals[b]
        det = n1[0] * n2[1] - n1[1] * n2[0]
        x = (c[:, a] * n2[1] - n1[1] * c[:, b]) / det
        y = (n1[0] * c[:, b] - c[:, a] * n2[0]) / det
        ok &= window.contains_xy(x, y)
    return ok


def certified_vertices(g: ThetaGraph, window) -> np.ndarray:
    """Vertices whose routing neighbourhood is unaffected by clipping at ``window``.

    For half-theta-6 graphs: every incident face exists in the unclipped
    process (its empty triangle lies inside the window) and the faces close
    up around the vertex.  For other graphs: every cone successor exists and
    its canonical triangle lies inside the window.
    """
    n = g.n
    P = g.points
    if g.is_half_theta6:
        fl = g.faces
        ok_face = face_triangles_inside(g, window)
        flat = fl.triangles.ravel()
        nfaces = np.bincount(flat, minlength=n)
        nbad = np.bincount(flat, weights=np.repeat(~ok_face, 3).astype(float), minlength=n)
        degree = np.diff(g._adj_ptr)
        return (nbad == 0) & (nfaces == degree) & (degree > 0)
    ok = np.ones(n, dtype=bool)
    half = math.tan(math.pi / g.k)
    for c in range(g.k):
        s = g.successors[:, c]
        has = s >= 0
        b = bisector_angle(c, g.k)
        u = np.array([math.cos(b), math.sin(b)])
        d = np.where(has, (P[np.maximum(s, 0)] - P) @ u, 0.0)
        for sgn in (-1.0, 1.0):
            corner = P + d[:, None] * (u + sgn * half * np.array([-u[1], u[0]]))
            ok &= window.contains_xy(corner[:, 0], corner[:, 1])
        ok &= has
    return ok


def window_certifies(g: ThetaGraph, v: int, window) -> bool:
    return bool(certified_vertices(g, window)[v])


def search_loop_instance(k: int = 3, sizes=(4, 6), seed=0, max_tries: int = 100_000):
    """Randomly search small point sets for a pair on which theta-k routing cycles.

    Returns ``(points, s, t, trace)`` or ``None``.  Coordinates are rounded
    to three decimals so a hit can be written down exactly.
    """
    from .graphs import build_theta_graph

    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        n = int(rng.integers(sizes[0], sizes[1] + 1))
        P = np.round(rng.random((n, 2)), 3)
        if len(np.unique(P, axis=0)) < n:
            continue
        g = build_theta_graph(P, k, "all")
        for s in range(n):
            for t in range(n):
                if s == t:
                    continue
                tr = route("theta-k", s, t, g)
                if tr.status == "loop-detected":
                    return P, s, t, tr
    return None
