import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thetaroute.errors import ContractViolation, DegenerateInputError, InvariantViolation
from thetaroute.graphs import (
    ThetaGraph,
    brute_force_edges,
    build_theta_graph,
    certify_empty_triangle,
    extract_faces,
    load_graph,
    read_points,
    save_graph,
    union_is_theta6,
    write_points,
)

from conftest import poisson_square


def edge_set(g):
    return {tuple(e) for e in g.edges.tolist()}


def test_two_points():
    g = build_theta_graph([(0, 0), (0, 1)], 6, "all")
    assert g.successor(0, 0) == 1
    assert g.successor(1, 3) == 0
    assert int((g.successors >= 0).sum()) == 2


def test_nearer_point_blocks():
    g = build_theta_graph([(0, 0), (0, 1), (0, 2)], 6, "even")
    assert edge_set(g) == {(0, 1), (1, 2)}


def test_parity_filter():
    rng = np.random.default_rng(1)
    P = rng.random((80, 2))
    even = build_theta_graph(P, 6, "even")
    odd = build_theta_graph(P, 6, "odd")
    assert np.all(even.successors[:, 1::2] == -1)
    assert np.all(odd.successors[:, 0::2] == -1)


def test_duplicates_rejected():
    with pytest.raises(DegenerateInputError):
        build_theta_graph([(0, 0), (1, 1), (0, 0)])
    with pytest.raises(ContractViolation):
        build_theta_graph([(0, 0), (1, 1)], k=1)


@pytest.mark.parametrize("method", ["naive", "kdtree"])
def test_matches_brute_force_20(method):
    rng = np.random.default_rng(5)
    P = rng.random((20, 2))
    g = build_theta_graph(P, 6, "even", method=method)
    assert edge_set(g) == brute_force_edges(P, 6, "even")


def test_builders_agree_with_ties():
    grid = np.array([(i, j) for i in range(9) for j in range(9)], float)
    tri = np.array([(i + 0.5 * (j % 2), j * math.sqrt(3) / 2) for i in range(8) for j in range(8)])
    rng = np.random.default_rng(2)
    for P in (grid, tri, rng.random((700, 2))):
        for k, par in [(3, "all"), (4, "all"), (6, "all"), (6, "even"), (6, "odd"), (8, "all")]:
            a = build_theta_graph(P, k, par, method="naive")
            b = build_theta_graph(P, k, par, method="kdtree")
            assert np.array_equal(a.successors, b.successors), (k, par)


def test_union_is_theta6():
    rng = np.random.default_rng(3)
    P = rng.random((50, 2))
    full = build_theta_graph(P, 6, "all")
    even, odd = build_theta_graph(P, 6, "even"), build_theta_graph(P, 6, "odd")
    assert union_is_theta6(even, odd, full)
    one = np.zeros((1, 2))
    assert union_is_theta6(*(build_theta_graph(one, 6, p) for p in ("even", "odd", "all")))
    # mutate one successor entry
    succ = even.successors.copy()
    edges = edge_set(full)
    v = int(np.flatnonzero(succ[:, 0] >= 0)[0])
    succ[v, 0] = next(w for w in range(len(P)) if w != v and (min(v, w), max(v, w)) not in edges)
    assert not union_is_theta6(ThetaGraph(P, 6, "even", succ), odd, full)
    with pytest.raises(ContractViolation):
        union_is_theta6(even, odd, build_theta_graph(P + 1, 6, "all"))


def test_faces_small():
    g = build_theta_graph([(0, 0), (1, 0.1), (0.4, 1)], 6, "even")
    assert len(g.faces) == 1
    g = build_theta_graph([(0, 0), (1, 0.05), (1.1, 1.0), (0.05, 0.9)], 6, "even")
    fl = g.faces
    assert len(fl) == 2
    shared = set(fl.triangles[0].tolist()) & set(fl.triangles[1].tolist())
    assert len(shared) == 2
    with pytest.raises(ContractViolation):
        extract_faces(build_theta_graph([(0, 0), (1, 1)], 6, "all"))


def test_faces_counterclockwise_and_euler():
    rng = np.random.default_rng(7)
    P = rng.random((100, 2))
    for par in ("even", "odd"):
        g = build_theta_graph(P, 6, par)
        fl = g.faces
        T = P[fl.triangles]
        area = cross2(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0])
        assert np.all(area > 0)
        # Euler for a triangulated disk whose outer boundary walk has h edges
        h = sum(len(c) for c in fl.outer_boundary)
        assert len(fl) == 2 * g.n - 2 - h
        # each face has three sides; bridges of the outer walk have none
        sides = int((fl.left_face >= 0).sum() + (fl.right_face >= 0).sum())
        assert sides == 3 * len(fl)


def cross2(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def test_half_theta6_is_plane():
    rng = np.random.default_rng(11)
    P = rng.random((300, 2))
    for par in ("even", "odd"):
        g = build_theta_graph(P, 6, par)
        E = g.edges
        A, B = P[E[:, 0]], P[E[:, 1]]
        crossings = 0
        for i in range(len(E)):
            o1 = cross2(B[i] - A[i], A - A[i])
            o2 = cross2(B[i] - A[i], B - A[i])
            o3 = cross2(B - A, A[i] - A)
            o4 = cross2(B - A, B[i] - A)
            crossings += int(np.sum((o1 * o2 < 0) & (o3 * o4 < 0)))
        assert crossings == 0


def test_non_plane_edges_detected():
    P = np.array([(0, 0), (1, 0), (0, 1), (1, 1)], float)
    succ = np.full((4, 6), -1)
    succ[0, 0] = 3  # diagonal 0-3
    succ[1, 0] = 2  # diagonal 1-2 crosses it
    succ[0, 4] = 1
    succ[2, 4] = 3
    g = ThetaGraph(P, 6, "even", succ)
    with pytest.raises(InvariantViolation):
        extract_faces(g)


def test_every_edge_certified():
    rng = np.random.default_rng(4)
    P = poisson_square(rng, 200, 1.0)
    g = build_theta_graph(P, 6, "all")
    for c in range(6):
        for v in np.flatnonzero(g.successors[:, c] >= 0):
            assert certify_empty_triangle(P[v], P[g.successors[v, c]], P)


def test_blocked_pair_not_certified():
    P = [(0, 0), (0, 2), (0.1, 1)]
    assert not certify_empty_triangle(P[0], P[1], P)
    assert certify_empty_triangle(P[0], P[2], P)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_monotone_blocking(seed):
    rng = np.random.default_rng(seed)
    P = rng.random((30, 2))
    g = build_theta_graph(P, 6, "even")
    u, v = g.edges[rng.integers(len(g.edges))]
    owner, cone = g.edge_cone(int(u), int(v))
    other = int(v) if owner == int(u) else int(u)
    # a new point halfway along the bisector of T_pq blocks the edge
    p, q = P[owner], P[other]
    mid = p + 0.5 * (q - p) + 1e-7 * (rng.random(2) - 0.5)
    if np.min(np.hypot(*(P - mid).T)) < 1e-9:
        return
    g2 = build_theta_graph(np.vstack([P, mid]), 6, "even")
    assert g2.successor(owner, cone) != other


def test_json_and_point_files(tmp_path):
    rng = np.random.default_rng(8)
    P = rng.random((40, 2))
    g = build_theta_graph(P, 6, "even")
    save_graph(tmp_path / "g.json", g)
    h = load_graph(tmp_path / "g.json")
    assert np.array_equal(h.successors, g.successors) and h.parity == "even"
    data = json.loads((tmp_path / "g.json").read_text())
    assert set(data) == {"points", "k", "parity", "successors"}
    assert any(x is None for row in data["successors"] for x in row)
    write_points(tmp_path / "p.txt", P, ["hello"])
    text = (tmp_path / "p.txt").read_text()
    assert text.startswith("# hello")
    assert np.array_equal(read_points(tmp_path / "p.txt"), P)
