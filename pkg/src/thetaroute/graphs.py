"""Theta-k graphs, half-theta-6 graphs (TD-Delaunay) and their faces."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ContractViolation, DegenerateInputError, InvariantViolation
from .geometry import (
    TWO_PI,
    as_point_set,
    bisector_angle,
    canonical_triangle,
    cone_indices,
    contains,
)

PARITIES = ("all", "even", "odd")

# Below this size the quadratic builder is as fast as the tree one.
_NAIVE_CUTOFF = 200


def _allowed_cones(k: int, parity: str) -> np.ndarray:
    if parity not in PARITIES:
        raise ContractViolation(f"parity must be one of {PARITIES}, got {parity!r}")
    if parity != "all" and k % 2:
        raise ContractViolation("half-theta graphs need an even cone count")
    cones = np.arange(k)
    if parity == "even":
        return cones[cones % 2 == 0]
    if parity == "odd":
        return cones[cones % 2 == 1]
    return cones


def _bisectors(k: int) -> np.ndarray:
    a = np.array([bisector_angle(i, k) for i in range(k)])
    return np.column_stack([np.cos(a), np.sin(a)])


def _check_distinct(P: np.ndarray) -> None:
    if len(P) < 2:
        return
    uniq = np.unique(P, axis=0)
    if len(uniq) != len(P):
        raise DegenerateInputError("point set contains duplicate points")


def _pick_successors(src, dst, P, k, allowed, n):
    """Lexicographic (depth, x, y) minimum per (source, cone) over candidate pairs."""
    succ = np.full((n, k), -1, dtype=np.int64)
    depth_out = np.full((n, k), np.inf)
    if len(src) == 0:
        return succ, depth_out
    dx = P[dst, 0] - P[src, 0]
    dy = P[dst, 1] - P[src, 1]
    cones = cone_indices(dx, dy, k)
    if len(allowed) < k:
        mask = np.zeros(k, dtype=bool)
        mask[allowed] = True
        keep = mask[cones]
        src, dst, cones, dx, dy = src[keep], dst[keep], cones[keep], dx[keep], dy[keep]
    if len(src) == 0:
        return succ, depth_out
    bis = _bisectors(k)
    depth = dx * bis[cones, 0] + dy * bis[cones, 1]
    group = src * k + cones
    mins = np.full(n * k, np.inf)
    np.minimum.at(mins, group, depth)
    cand = np.flatnonzero(depth == mins[group])
    cg = group[cand]
    counts = np.bincount(cg, minlength=n * k)
    single = cand[counts[cg] == 1]
    tied = cand[counts[cg] > 1]
    if len(tied):
        # equal depths: the lexicographically smallest (x, y) wins
        order = np.lexsort((P[dst[tied], 1], P[dst[tied], 0], group[tied]))
        tied = tied[order]
        first = np.r_[True, group[tied][1:] != group[tied][:-1]]
        single = np.concatenate([single, tied[first]])
    sel = single
    succ[src[sel], cones[sel]] = dst[sel]
    depth_out[src[sel], cones[sel]] = depth[sel]
    return succ, depth_out


def _successors_naive(P: np.ndarray, k: int, allowed: np.ndarray) -> np.ndarray:
    n = len(P)
    succ = np.full((n, k), -1, dtype=np.int64)
    idx = np.arange(n)
    for p in range(n):
        others = idx[idx != p]
        s, _ = _pick_successors(np.full(len(others), p), others, P, k, allowed, n)
        succ[p] = s[p]
    return succ


def _cone_extent(P: np.ndarray, k: int) -> np.ndarray:
    """Farthest distance from each point to the bounding box clipped to each cone."""
    lo, hi = P.min(axis=0), P.max(axis=0)
    n = len(P)
    ray_ang = np.array([bisector_angle(i, k) - math.pi / k for i in range(k)])
    d = np.column_stack([np.cos(ray_ang), np.sin(ray_ang)])
    exit_ = np.full((n, k), np.inf)
    for ax in range(2):
        comp = d[:, ax]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_hi = (hi[ax] - P[:, ax:ax + 1]) / comp
            t_lo = (lo[ax] - P[:, ax:ax + 1]) / comp
        t = np.where(comp > 1e-15, t_hi, np.where(comp < -1e-15, t_lo, np.inf))
        exit_ = np.minimum(exit_, t)
    exit_ = np.maximum(exit_, 0.0)
    # cone i is bounded by rays i and i + 1
    ext = np.maximum(exit_, np.roll(exit_, -1, axis=1))
    for cx, cy in ((lo[0], lo[1]), (lo[0], hi[1]), (hi[0], lo[1]), (hi[0], hi[1])):
        dx, dy = cx - P[:, 0], cy - P[:, 1]
        dist = np.hypot(dx, dy)
        c = cone_indices(dx, dy, k)
        c = np.where(dist > 0, c, 0)
        rows = np.arange(n)
        ext[rows, c] = np.maximum(ext[rows, c], dist)
    return ext


def _successors_kdtree(P: np.ndarray, k: int, allowed: np.ndarray) -> np.ndarray:
    """Cone successors from fixed-radius neighbour queries.

    A successor found at bisector depth ``d`` is exact once the query radius
    reaches ``d / cos(pi/k)``: its whole canonical triangle was searched.  A
    cone is also settled once the radius covers all of it inside the bounding
    box.  Unsettled points are re-queried with a doubled radius.
    """
    n = len(P)
    tree = cKDTree(P)
    span = P.max(axis=0) - P.min(axis=0)
    diameter = float(np.hypot(*span))
    area = max(float(span[0] * span[1]), diameter * diameter * 1e-6, 1e-300)
    r = math.sqrt(10.0 * area / n)
    reach = 1.0 / math.cos(math.pi / k)
    extent = _cone_extent(P, k)[:, allowed] * (1 + 1e-12) + 1e-300

    pairs = tree.query_pairs(r, output_type="ndarray")
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    succ, depth = _pick_successors(src, dst, P, k, allowed, n)
    while True:
        settled = (depth[:, allowed] * reach <= r) | (extent <= r)
        pending = np.flatnonzero(~np.all(settled, axis=1))
        if pending.size == 0 or r > 2.0 * diameter:
            return succ
        r *= 2.0
        hits = tree.query_ball_point(P[pending], r)
        lens = np.fromiter((len(h) for h in hits), dtype=np.int64, count=len(hits))
        src = np.repeat(pending, lens)
        dst = np.concatenate([np.asarray(h, dtype=np.int64) for h in hits])
        keep = src != dst
        s2, d2 = _pick_successors(src[keep], dst[keep], P, k, allowed, n)
        succ[pending] = s2[pending]
        depth[pending] = d2[pending]


@dataclass
class FaceList:
    """Bounded triangular faces of a plane graph.

    ``triangles`` rows are counterclockwise vertex triples.  ``left_face`` and
    ``right_face`` give, for each row ``(u, v)`` of the owning graph's
    ``edges`` (``u < v``), the face on each side of ``u -> v``; -1 marks the
    outer face.
    """

    triangles: np.ndarray
    left_face: np.ndarray
    right_face: np.ndarray
    edges: np.ndarray
    outer_boundary: list
    _vf_ptr: np.ndarray = field(repr=False, default=None)
    _vf_idx: np.ndarray = field(repr=False, default=None)
    _adjacency: Optional[dict] = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.triangles)

    @property
    def adjacency(self) -> dict:
        if self._adjacency is None:
            self._adjacency = {
                (int(u), int(v)): (int(lf), int(rf))
                for (u, v), lf, rf in zip(self.edges, self.left_face, self.right_face)
            }
        return self._adjacency

    def faces_of(self, v: int) -> np.ndarray:
        return self._vf_idx[self._vf_ptr[v]:self._vf_ptr[v + 1]]


@dataclass
class ThetaGraph:
    """Cone-successor table plus the undirected edges it defines."""

    points: np.ndarray
    k: int
    parity: str
    successors: np.ndarray
    edges: np.ndarray = field(init=False)
    _faces: Optional[FaceList] = field(default=None, init=False, repr=False)
    _halves: dict = field(default_factory=dict, init=False, repr=False)

    def __post_init__(self):
        n = len(self.points)
        src = np.repeat(np.arange(n), self.k)
        dst = self.successors.reshape(-1)
        mask = dst >= 0
        e = np.column_stack([src[mask], dst[mask]])
        e.sort(axis=1)
        key = np.unique(e[:, 0] * max(n, 1) + e[:, 1])
        self.edges = np.column_stack([key // max(n, 1), key % max(n, 1)]).astype(np.int64)
        both = np.concatenate([self.edges, self.edges[:, ::-1]])
        both = both[np.argsort(both[:, 0] * max(n, 1) + both[:, 1])]
        self._adj_ptr = np.searchsorted(both[:, 0], np.arange(n + 1))
        self._adj_idx = both[:, 1]

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def parity_offset(self) -> int:
        """0 if even cones are the positive ones, 1 for the odd half-graph."""
        return 1 if self.parity == "odd" else 0

    @property
    def is_half_theta6(self) -> bool:
        return self.k == 6 and self.parity in ("even", "odd")

    def successor(self, v: int, cone: int) -> Optional[int]:
        s = int(self.successors[v, cone % self.k])
        return None if s < 0 else s

    def neighbors(self, v: int) -> np.ndarray:
        return self._adj_idx[self._adj_ptr[v]:self._adj_ptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        return bool(np.any(self.neighbors(u) == v))

    def edge_cone(self, u: int, v: int) -> tuple[int, int]:
        """``(owner, cone)`` such that ``successor(owner, cone)`` is the other endpoint."""
        hit = np.flatnonzero(self.successors[u] == v)
        if hit.size:
            return u, int(hit[0])
        hit = np.flatnonzero(self.successors[v] == u)
        if hit.size:
            return v, int(hit[0])
        raise ContractViolation(f"({u}, {v}) is not an edge")

    @property
    def faces(self) -> Optional[FaceList]:
        if not self.is_half_theta6:
            return None
        if self._faces is None:
            self._faces = extract_faces(self)
        return self._faces

    def half(self, parity: str) -> "ThetaGraph":
        """The even or odd half-graph contained in a full theta-6 graph."""
        if parity == self.parity:
            return self
        if self.parity != "all":
            raise ContractViolation("can only split a full theta graph")
        if parity not in self._halves:
            keep = _allowed_cones(self.k, parity)
            succ = np.full_like(self.successors, -1)
            succ[:, keep] = self.successors[:, keep]
            self._halves[parity] = ThetaGraph(self.points, self.k, parity, succ)
        return self._halves[parity]

    def to_json(self) -> dict:
        return {
            "points": self.points.tolist(),
            "k": self.k,
            "parity": self.parity,
            "successors": [[None if s < 0 else int(s) for s in row] for row in self.successors],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ThetaGraph":
        pts = as_point_set(data["points"])
        k = int(data["k"])
        succ = np.array(
            [[-1 if s is None else int(s) for s in row] for row in data["successors"]],
            dtype=np.int64,
        ).reshape(len(pts), k)
        if succ.size and (succ.max() >= len(pts)):
            raise ContractViolation("successor index out of range")
        return cls(pts, k, data["parity"], succ)


def build_theta_graph(points, k: int = 6, parity: str = "all", method: str = "auto") -> ThetaGraph:
    """Build the (half-)theta-k graph of ``points``.

    ``method`` is ``"naive"`` (quadratic scan), ``"kdtree"`` (radius-certified
    neighbour queries) or ``"auto"``; all produce the same successor table.
    """
    P = as_point_set(points)
    if k < 2:
        raise ContractViolation("k must be at least 2")
    allowed = _allowed_cones(k, parity)
    _check_distinct(P)
    if method == "auto":
        method = "naive" if (len(P) <= _NAIVE_CUTOFF or k < 3) else "kdtree"
    if len(P) < 2:
        succ = np.full((len(P), k), -1, dtype=np.int64)
    elif method == "naive":
        succ = _successors_naive(P, k, allowed)
    elif method == "kdtree":
        if k < 3:
            raise ContractViolation("kdtree builder needs k >= 3")
        succ = _successors_kdtree(P, k, allowed)
    else:
        raise ContractViolation(f"unknown method {method!r}")
    return ThetaGraph(P, k, parity, succ)


def union_is_theta6(even: ThetaGraph, odd: ThetaGraph, full: ThetaGraph) -> bool:
    if not (even.k == odd.k == full.k == 6):
        raise ContractViolation("union check is defined for k=6")
    if not (np.array_equal(even.points, odd.points) and np.array_equal(even.points, full.points)):
        raise ContractViolation("graphs are built on different point sets")
    a = {tuple(e) for e in even.edges.tolist()} | {tuple(e) for e in odd.edges.tolist()}
    return a == {tuple(e) for e in full.edges.tolist()}


def extract_faces(g: ThetaGraph) -> FaceList:
    """Bounded faces of a half-theta-6 graph by angular next-edge walking."""
    if not g.is_half_theta6:
        raise ContractViolation("faces are defined for half-theta-6 graphs")
    P = g.points
    E = g.edges
    m = len(E)
    n = g.n
    if m == 0:
        z = np.zeros(0, dtype=np.int64)
        return FaceList(np.zeros((0, 3), np.int64), z, z, E, [], np.zeros(n + 1, np.int64), z)
    orig = np.concatenate([E[:, 0], E[:, 1]])
    dest = np.concatenate([E[:, 1], E[:, 0]])
    twin = np.concatenate([np.arange(m, 2 * m), np.arange(m)])
    ang = np.arctan2(P[dest, 1] - P[orig, 1], P[dest, 0] - P[orig, 0])
    order = np.lexsort((ang, orig))
    pos = np.empty(2 * m, dtype=np.int64)
    pos[order] = np.arange(2 * m)
    start = np.searchsorted(orig[order], np.arange(n + 1))
    # next half-edge: clockwise neighbour of the twin around the head vertex
    pt = pos[twin]
    head = dest
    pred = np.where(pt == start[head], start[head + 1] - 1, pt - 1)
    nxt = order[pred]

    perm = csr_matrix((np.ones(2 * m), (np.arange(2 * m), nxt)), shape=(2 * m, 2 * m))
    ncycles, label = connected_components(perm, directed=True, connection="weak")
    size = np.bincount(label, minlength=ncycles)
    cross = P[orig, 0] * P[dest, 1] - P[orig, 1] * P[dest, 0]
    area2 = np.bincount(label, weights=cross, minlength=ncycles)
    scale = max(float(np.abs(P).max()), 1.0) ** 2
    bounded = area2 > 1e-12 * scale

    used = np.zeros(n, dtype=bool)
    used[E.ravel()] = True
    ncomp, _ = connected_components(
        csr_matrix((np.ones(m), (E[:, 0], E[:, 1])), shape=(n, n)), directed=False
    )
    ncomp -= int((~used).sum())
    if int(used.sum()) - m + ncycles != 1 + ncomp:
        raise InvariantViolation("edge set is not plane (Euler relation fails)")
    if int((~bounded).sum()) != ncomp:
        raise InvariantViolation("edge set is not plane (extra unbounded face cycles)")
    if np.any(size[bounded] != 3):
        raise InvariantViolation("a bounded face is not a triangle")

    face_of_cycle = np.full(ncycles, -1, dtype=np.int64)
    face_of_cycle[bounded] = np.arange(int(bounded.sum()))
    first = np.full(ncycles, -1, dtype=np.int64)
    first[label[::-1]] = np.arange(2 * m)[::-1]
    h0 = first[bounded]
    h1 = nxt[h0]
    h2 = nxt[h1]
    tris = np.column_stack([orig[h0], orig[h1], orig[h2]])
    fid = face_of_cycle[label]

    outer = []
    for c in np.flatnonzero(~bounded):
        h = first[c]
        cyc = [int(orig[h])]
        h = nxt[h]
        while h != first[c]:
            cyc.append(int(orig[h]))
            h = nxt[h]
        outer.append(cyc)

    flat = tris.ravel()
    vf_order = np.argsort(flat, kind="stable")
    vf_ptr = np.searchsorted(flat[vf_order], np.arange(n + 1))
    vf_idx = vf_order // 3
    return FaceList(tris, fid[:m], fid[m:], E, outer, vf_ptr, vf_idx)


def certify_empty_triangle(p, q, points, k: int = 6) -> bool:
    """True iff no point of ``points`` lies in the open canonical triangle of ``p`` and ``q``."""
    tri = canonical_triangle(p, q, k)
    P = as_point_set(points)
    return not any(contains(tri, w, closed=False) for w in P)


def brute_force_edges(points, k: int = 6, parity: str = "all") -> set:
    """Edges ``pq`` whose open canonical triangle ``T_pq`` is empty (cubic time)."""
    P = as_point_set(points)
    allowed = set(_allowed_cones(k, parity).tolist())
    out = set()
    for i, p in enumerate(P):
        for j, q in enumerate(P):
            if i == j:
                continue
            tri = canonical_triangle(p, q, k)
            if tri.cone not in allowed:
                continue
            if not any(contains(tri, w, closed=False) for w in P):
                out.add((min(i, j), max(i, j)))
    return out


def read_points(path) -> np.ndarray:
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ContractViolation(f"bad point line {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    return as_point_set(rows)


def write_points(path, points, header: Iterable[str] = ()) -> None:
    P = as_point_set(points)
    lines = [f"# {h}" for h in header]
    lines += [f"{x!r} {y!r}" for x, y in P.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def save_graph(path, g: ThetaGraph) -> None:
    Path(path).write_text(json.dumps(g.to_json()))


def load_graph(path) -> ThetaGraph:
    return ThetaGraph.from_json(json.loads(Path(path).read_text()))
