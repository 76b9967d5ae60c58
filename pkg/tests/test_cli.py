import json
import math

import numpy as np
import pytest

from thetaroute.cli import main
from thetaroute.graphs import build_theta_graph, load_graph, read_points, save_graph, write_points
from thetaroute.poisson import predicted_average, predicted_ratio

LOOP = [[0.615, 0.384], [0.997, 0.981], [0.686, 0.65], [0.688, 0.389], [0.135, 0.721]]


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def poisson_graph(tmp_path, capsys):
    pts = tmp_path / "p.txt"
    gfile = tmp_path / "g.json"
    assert run(capsys, "gen", "--lambda", 300, "--window", "0,0,1,1", "--seed", 8, "--out", pts)[0] == 0
    assert run(capsys, "build", "--points", pts, "--parity", "even", "--out", gfile)[0] == 0
    return pts, gfile


def test_gen_deterministic_and_empty(tmp_path, capsys):
    a, b, e = tmp_path / "a", tmp_path / "b", tmp_path / "e"
    for f in (a, b):
        run(capsys, "gen", "--lambda", 50, "--window", "0,0,2,1", "--seed", 3, "--out", f)
    assert a.read_bytes() == b.read_bytes()
    P = read_points(a)
    assert len(P) > 0 and P[:, 0].max() <= 2
    run(capsys, "gen", "--lambda", 0, "--out", e)
    text = e.read_text().splitlines()
    assert len(text) == 1 and text[0].startswith("#")
    assert len(read_points(e)) == 0


def test_gen_usage_errors(tmp_path, capsys):
    code, _, err = run(capsys, "gen", "--lambda", 5, "--window", "0,0,1", "--out", tmp_path / "x")
    assert code == 2 and "window" in err
    assert run(capsys, "gen", "--lambda", -1, "--out", tmp_path / "x")[0] == 2


def test_build_round_trip(poisson_graph):
    pts, gfile = poisson_graph
    g = load_graph(gfile)
    ref = build_theta_graph(read_points(pts), 6, "even")
    assert np.array_equal(g.successors, ref.successors)
    assert np.array_equal(g.points, ref.points)


def test_route_arrives(poisson_graph, capsys):
    _, gfile = poisson_graph
    g = load_graph(gfile)
    P = g.points
    s = int(np.argmin(P[:, 1]))
    t = int(np.argmax(P[:, 1]))
    code, out, _ = run(capsys, "route", "--graph", gfile, "--algo", "positive", "--s", s, "--t", t)
    data = json.loads(out)
    assert code == 0 and data["status"] == "arrived"
    assert data["vertices"][0] == s and data["vertices"][-1] == t
    assert 1 <= data["ratio"] <= 2


def test_route_loop_exit_code(tmp_path, capsys):
    gfile = tmp_path / "loop.json"
    save_graph(gfile, build_theta_graph(LOOP, 3, "all"))
    code, out, _ = run(capsys, "route", "--graph", gfile, "--algo", "theta", "--s", 0, "--t", 4)
    assert code == 3 and json.loads(out)["status"] == "loop-detected"


def test_route_step_limit_and_bad_vertex(tmp_path, capsys):
    gfile = tmp_path / "line.json"
    P = [(0, i) for i in range(6)]
    save_graph(gfile, build_theta_graph(P, 6, "all"))
    code, out, _ = run(capsys, "route", "--graph", gfile, "--algo", "theta6", "--s", 0,
                       "--t", 5, "--max-steps", 2)
    assert code == 5 and json.loads(out)["status"] == "step-limit"
    assert run(capsys, "route", "--graph", gfile, "--algo", "theta6", "--s", 0, "--t", 9)[0] == 2


def test_route_dead_end(tmp_path, capsys):
    # the negative ladder needs the cone-(i-1) successor, missing here
    gfile = tmp_path / "two.json"
    save_graph(gfile, build_theta_graph([(0, 0), (0, 1)], 6, "even"))
    code, out, _ = run(capsys, "route", "--graph", gfile, "--algo", "memoryless", "--s", 1, "--t", 0)
    assert code == 4 and json.loads(out)["status"] == "dead-end"


def test_predict(capsys):
    code, out, _ = run(capsys, "predict", "--algo", "positive", "--phi", math.pi / 3)
    assert code == 0 and float(out) == pytest.approx(predicted_ratio("positive", math.pi / 3), rel=1e-5)
    code, out, _ = run(capsys, "predict", "--algo", "constmem", "--average")
    assert float(out) == pytest.approx(predicted_average("constmem"), rel=1e-5)
    code, _, err = run(capsys, "predict", "--algo", "positive", "--phi", 0.2)
    assert code == 2 and "phi" in err
    code, _, _ = run(capsys, "predict", "--algo", "bose", "--phi", 1.2)
    assert code == 2


def test_certify_graph_and_trace(poisson_graph, tmp_path, capsys):
    _, gfile = poisson_graph
    g = load_graph(gfile)
    P = g.points
    s, t = int(np.argmin(P[:, 1])), int(np.argmax(P[:, 1]))
    code, out, _ = run(capsys, "route", "--graph", gfile, "--algo", "positive", "--s", s, "--t", t)
    trace = tmp_path / "trace.json"
    trace.write_text(out)
    code, out, _ = run(capsys, "certify", "--graph", gfile, "--trace", trace, "--algo", "positive")
    assert code == 0 and all(r["pass"] for r in json.loads(out))
    data = json.loads(trace.read_text())
    data["length"] *= 1.01
    trace.write_text(json.dumps(data))
    code, out, _ = run(capsys, "certify", "--graph", gfile, "--trace", trace, "--algo", "positive")
    assert code == 6
    assert any(r["check"] == "reported-length" and not r["pass"] for r in json.loads(out))
    code, _, _ = run(capsys, "certify", "--graph", gfile, "--algo", "positive", "--s", s, "--t", t)
    assert code == 0


def test_certify_rejects_bad_graph(tmp_path, capsys):
    g = build_theta_graph([(0, 0), (0, 2), (0.01, 1)], 6, "all")
    g.successors[0, 0] = 1
    gfile = tmp_path / "bad.json"
    save_graph(gfile, g)
    code, out, _ = run(capsys, "certify", "--graph", gfile)
    assert code == 6 and not json.loads(out)[0]["pass"]


def test_experiment_csv(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({
        "lambda": 300, "phis": [1.1, 1.5], "algorithms": ["positive", "constmem"],
        "trials": 3, "margin": 0.8, "master_seed": 2,
    }))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "experiment", "--config", cfg, "--out", a)[0] == 0
    assert run(capsys, "experiment", "--config", cfg, "--out", b, "--jobs", 2)[0] == 0
    assert a.read_text() == b.read_text()
    rows = [l for l in a.read_text().splitlines() if not l.startswith("#")]
    assert rows[0].startswith("algorithm,phi,lambda") and len(rows) == 5
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"lambda": -1}))
    assert run(capsys, "experiment", "--config", bad)[0] == 2
