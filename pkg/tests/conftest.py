import numpy as np
import pytest

from thetaroute.graphs import build_theta_graph


def poisson_square(rng, lam, side):
    n = rng.poisson(lam * side * side)
    return rng.uniform(0.0, side, (n, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def medium_instances():
    """A few 1500-point instances with their full and half graphs."""
    rng = np.random.default_rng(99)
    out = []
    for _ in range(4):
        P = poisson_square(rng, 1500, 1.0)
        full = build_theta_graph(P, 6, "all")
        out.append((P, full, full.half("even"), full.half("odd")))
    return out
