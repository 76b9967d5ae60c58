"""Poisson sampling, single forward-step moments and the expected-ratio predictor."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation

TAU1 = (3.0 * math.log(3.0) + 4.0) / (4.0 * math.sqrt(3.0))
TAU2 = 2.0 / math.sqrt(3.0) * TAU1

PHI_MIN = math.pi / 3
PHI_MAX = math.pi / 2

# exp(-TRUNCATION_EXPONENT) bounds the chance that a forward step leaves the sampled sector
TRUNCATION_EXPONENT = 27.7


@dataclass(frozen=True)
class Window:
    xmin: float
    ymin: float
    xmax: float
    ymax: float

    def __post_init__(self):
        if not (self.xmax > self.xmin and self.ymax > self.ymin):
            raise ContractViolation(f"window {self} has no area")

    @property
    def area(self) -> float:
        return (self.xmax - self.xmin) * (self.ymax - self.ymin)

    def contains_xy(self, x, y):
        return (x >= self.xmin) & (x <= self.xmax) & (y >= self.ymin) & (y <= self.ymax)

    @classmethod
    def around(cls, points, margin: float) -> "Window":
        """Bounding box of ``points`` padded by ``margin`` on every side."""
        P = np.asarray(points, dtype=float).reshape(-1, 2)
        lo, hi = P.min(axis=0) - margin, P.max(axis=0) + margin
        return cls(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1]))

    @classmethod
    def parse(cls, text: str) -> "Window":
        parts = [float(v) for v in text.split(",")]
        if len(parts) != 4:
            raise ValueError("window needs four comma-separated numbers xmin,ymin,xmax,ymax")
        return cls(*parts)


def sample_poisson(window: Window, lam: float, seed) -> np.ndarray:
    """Homogeneous Poisson process of intensity ``lam`` restricted to ``window``."""
    if lam < 0:
        raise ContractViolation("intensity must be non-negative")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = rng.poisson(lam * window.area)
    x = rng.uniform(window.xmin, window.xmax, n)
    y = rng.uniform(window.ymin, window.ymax, n)
    return np.column_stack([x, y])


# --------------------------------------------------------------------------
# forward-step moments

MOMENT_NAMES = ("L", "Lx", "Ly", "L2", "Lx2", "Ly2", "L3", "absLx3", "absLy3")


def closed_form_moments() -> dict:
    """Intensity-one moments of a forward step.

    The depth ``D`` of the successor has tail ``exp(-d^2/sqrt 3)``; given the
    depth, the horizontal offset is uniform on ``[-D/sqrt 3, D/sqrt 3]``.
    """
    r3 = math.sqrt(3.0)
    ed = 0.5 * math.sqrt(math.pi * r3)
    ed2 = r3
    ed3 = 0.75 * math.sqrt(math.pi) * 3.0 ** 0.75
    return {
        "L": 0.5 * 3.0 ** -0.25 * math.sqrt(math.pi) * (1.0 + 0.75 * math.log(3.0)),
        "Lx": 0.0,
        "Ly": ed,
        "L2": 10.0 * r3 / 9.0,
        "Lx2": r3 / 9.0,
        "Ly2": ed2,
        "L3": (27.0 * math.log(3.0) + 68.0) * math.sqrt(math.pi * r3) / 64.0,
        "absLx3": ed3 / (4.0 * r3 ** 3),
        "absLy3": ed3,
    }


@dataclass(frozen=True)
class MomentEstimates:
    """Forward-step moments scaled to intensity one, with standard errors."""

    samples: int
    mean: dict
    stderr: dict

    def __getitem__(self, name: str) -> float:
        return self.mean[name]


def _scale(name: str, lam: float) -> float:
    order = 3 if name.endswith("3") else 2 if name.endswith("2") else 1
    return lam ** (order / 2.0)


def forward_moments(lam: float, samples: int, seed, chunk: int = 100_000) -> MomentEstimates:
    """Simulate ``samples`` independent forward steps from the origin.

    Each step samples a Poisson process in the upward 60 degree sector of
    radius ``R`` and keeps the point of least height.  ``R`` is chosen so
    that the successor lies outside the sector with probability below
    ``exp(-27.7)``.
    """
    if samples < 1:
        raise ContractViolation("need at least one sample")
    if lam <= 0:
        raise ContractViolation("intensity must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    R = math.sqrt(math.sqrt(3.0) * TRUNCATION_EXPONENT / (lam * 0.75))
    mass = lam * (math.pi / 6.0) * R * R
    sums = {k: 0.0 for k in MOMENT_NAMES}
    sq = {k: 0.0 for k in MOMENT_NAMES}
    done = 0
    while done < samples:
        m = min(chunk, samples - done)
        counts = rng.poisson(mass, m)
        # an empty sector has probability exp(-mass); redraw those samples
        while np.any(counts == 0):
            z = counts == 0
            counts[z] = rng.poisson(mass, int(z.sum()))
        total = int(counts.sum())
        r = R * np.sqrt(rng.random(total))
        a = rng.uniform(math.pi / 3, 2 * math.pi / 3, total)
        x, y = r * np.cos(a), r * np.sin(a)
        starts = np.r_[0, np.cumsum(counts)[:-1]]
        ymin = np.minimum.reduceat(y, starts)
        group = np.repeat(np.arange(m), counts)
        hit = y == ymin[group]
        first = np.flatnonzero(hit)
        _, idx = np.unique(group[first], return_index=True)
        pick = first[idx]
        lx, ly = x[pick], y[pick]
        ln = np.hypot(lx, ly)
        vals = {
            "L": ln, "Lx": lx, "Ly": ly,
            "L2": ln ** 2, "Lx2": lx ** 2, "Ly2": ly ** 2,
            "L3": ln ** 3, "absLx3": np.abs(lx) ** 3, "absLy3": np.abs(ly) ** 3,
        }
        for k, v in vals.items():
            v = v * _scale(k, lam)
            sums[k] += float(v.sum())
            sq[k] += float((v * v).sum())
        done += m
    mean = {k: sums[k] / samples for k in MOMENT_NAMES}
    err = {}
    for k in MOMENT_NAMES:
        var = max(sq[k] / samples - mean[k] ** 2, 0.0) * samples / max(samples - 1, 1)
        err[k] = math.sqrt(var / samples)
    return MomentEstimates(samples, mean, err)


# --------------------------------------------------------------------------
# expected routing ratio predictor

PREDICTABLE = ("positive", "theta6-auto", "memoryless-negative", "constmem-negative")


def _predict_name(algorithm: str) -> str:
    from .routing import canonical_algorithm

    name = canonical_algorithm(algorithm)
    if name not in PREDICTABLE:
        raise ContractViolation(f"no expected-ratio formula for {name}")
    return name


def predicted_ratio(algorithm: str, phi: float) -> float:
    """Asymptotic expected routing ratio for ``s`` and ``t`` at angle ``phi``."""
    name = _predict_name(algorithm)
    if not (PHI_MIN - 1e-9 <= phi <= PHI_MAX + 1e-9):
        raise ContractViolation(f"phi={phi} outside [pi/3, pi/2]")
    s, c = math.sin(phi), math.cos(phi)
    if name in ("positive", "theta6-auto"):
        return TAU1 * (s + c / math.sqrt(3.0))
    if name == "constmem-negative":
        return 4.0 / 3.0 * TAU1 * s
    return TAU1 * (1.5 * s - math.sqrt(3.0) / 6.0 * c)


def predicted_average(algorithm: str) -> float:
    """``predicted_ratio`` averaged uniformly over ``phi`` in ``[pi/3, pi/2]``."""
    name = _predict_name(algorithm)
    if name in ("positive", "theta6-auto"):
        return 2.0 * math.sqrt(3.0) / math.pi * TAU1
    if name == "constmem-negative":
        return 4.0 / math.pi * TAU1
    return (6.0 - math.sqrt(3.0)) / math.pi * TAU1
