"""Monte Carlo estimation of expected routing ratios on Poisson point sets."""
from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import trapezoid

from .errors import ContractViolation
from .geometry import cone_index
from .graphs import build_theta_graph
from .poisson import PHI_MAX, PHI_MIN, PREDICTABLE, Window, predicted_ratio, sample_poisson
from .routing import canonical_algorithm, certified_vertices, route

JOBS_ENV = "THETAROUTE_JOBS"
UNRELIABLE_FRACTION = 0.01
NEGATIVE = ("memoryless-negative", "constmem-negative", "bose-negative")

CSV_HEADER = (
    "algorithm", "phi", "lambda", "trials", "valid_trials",
    "mean_ratio", "std_err", "predicted", "invalid_boundary", "invalid_other",
)


def default_phis(count: int = 13) -> list:
    return [float(p) for p in np.linspace(PHI_MIN, PHI_MAX, count)]


@dataclass
class ExperimentConfig:
    lam: float
    phis: list = field(default_factory=default_phis)
    algorithms: list = field(default_factory=lambda: ["positive"])
    trials: int = 100
    margin: float = 1.5
    master_seed: int = 0
    max_steps: Optional[int] = None
    jobs: Optional[int] = None

    def __post_init__(self):
        if isinstance(self.algorithms, str):
            self.algorithms = [self.algorithms]
        self.algorithms = [canonical_algorithm(a) for a in self.algorithms]
        if "theta-k" in self.algorithms:
            raise ContractViolation("theta-k is not part of the ratio experiment")
        if not self.lam > 0:
            raise ContractViolation("lambda must be positive")
        if self.trials < 1:
            raise ContractViolation("trials must be at least 1")
        if not self.margin > 0:
            raise ContractViolation("margin must be positive")
        self.phis = [float(p) for p in self.phis]
        for p in self.phis:
            if not (PHI_MIN - 1e-9 <= p <= PHI_MAX + 1e-9):
                raise ContractViolation(f"phi={p} outside [pi/3, pi/2]")

    @classmethod
    def from_json(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        if "lambda" in data:
            data["lam"] = data.pop("lambda")
        if "algorithm" in data:
            data["algorithms"] = data.pop("algorithm")
        if "phi" in data:
            data["phis"] = data.pop("phi")
        if isinstance(data.get("phis"), (int, float)):
            data["phis"] = [data["phis"]]
        return cls(**data)

    def to_json(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d


@dataclass
class RatioRecord:
    algorithm: str
    phi: float
    lam: float
    trials: int
    valid_trials: int
    mean_ratio: float
    std_err: Optional[float]
    predicted: Optional[float]
    invalid_boundary: int
    invalid_other: int
    ratios: list = field(default_factory=list, repr=False)

    @property
    def invalid_fraction(self) -> float:
        return (self.trials - self.valid_trials) / self.trials

    @property
    def unreliable(self) -> bool:
        return self.invalid_fraction > UNRELIABLE_FRACTION


@dataclass
class RatioStats:
    records: list

    def get(self, algorithm: str, phi: float) -> RatioRecord:
        algorithm = canonical_algorithm(algorithm)
        for r in self.records:
            if r.algorithm == algorithm and abs(r.phi - phi) < 1e-12:
                return r
        raise KeyError((algorithm, phi))

    def phi_average(self, algorithm: str) -> float:
        """Trapezoid average of the mean ratio over the simulated angles."""
        algorithm = canonical_algorithm(algorithm)
        rows = sorted((r.phi, r.mean_ratio) for r in self.records if r.algorithm == algorithm)
        if not rows:
            raise KeyError(algorithm)
        x = np.array([p for p, _ in rows])
        y = np.array([m for _, m in rows])
        if len(x) == 1:
            return float(y[0])
        return float(trapezoid(y, x) / (x[-1] - x[0]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        fmt = lambda v: "" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.6g}"
        for r in self.records:
            w.writerow([
                r.algorithm, fmt(r.phi), fmt(r.lam), r.trials, r.valid_trials,
                fmt(r.mean_ratio), fmt(r.std_err), fmt(r.predicted),
                r.invalid_boundary, r.invalid_other,
            ])
        for r in self.records:
            if r.unreliable:
                buf.write(
                    f"# unreliable: algorithm={r.algorithm} phi={r.phi:.6g} "
                    f"invalid_fraction={r.invalid_fraction:.6g}\n"
                )
        return buf.getvalue()


def endpoints(algorithm: str, phi: float) -> tuple:
    """Source and destination coordinates for a trial at angle ``phi``."""
    far = (math.cos(phi), math.sin(phi))
    if canonical_algorithm(algorithm) in NEGATIVE:
        return far, (0.0, 0.0)
    return (0.0, 0.0), far


def trial_seed(master: int, phi_index: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master), int(phi_index), int(trial)])


def run_trial(config: ExperimentConfig, phi_index: int, trial: int) -> dict:
    """One point set at one angle, routed by every configured algorithm.

    Returns ``{algorithm: (ratio or None, reason)}`` with reason one of
    ``ok``, ``boundary``, ``other``.
    """
    phi = config.phis[phi_index]
    origin, far = (0.0, 0.0), (math.cos(phi), math.sin(phi))
    window = Window.around([origin, far], config.margin)
    rng = np.random.default_rng(trial_seed(config.master_seed, phi_index, trial))
    X = sample_poisson(window, config.lam, rng)
    P = np.vstack([[origin, far], X])
    full = "theta6-auto" in config.algorithms
    g = build_theta_graph(P, 6, "all" if full else "even")
    cert = {}
    out = {}
    for alg in config.algorithms:
        s, t = (1, 0) if alg in NEGATIVE else (0, 1)
        tr = route(alg, s, t, g, config.max_steps, window=window)
        used = g.half("even") if g.parity == "all" else g
        if alg == "theta6-auto":
            used = g.half("even" if cone_index(P[s], P[t]) % 2 == 0 else "odd")
        key = used.parity
        if key not in cert:
            cert[key] = certified_vertices(used, window)
        if tr.status == "left-window":
            out[alg] = (None, "boundary")
        elif tr.status != "arrived":
            out[alg] = (None, "other")
        elif not cert[key][tr.vertices].all():
            out[alg] = (None, "boundary")
        else:
            out[alg] = (tr.ratio, "ok")
    return out


def _run_chunk(args):
    config, keys = args
    return [run_trial(config, i, j) for i, j in keys]


def _jobs(config: ExperimentConfig) -> int:
    if config.jobs is not None:
        return max(1, int(config.jobs))
    return max(1, int(os.environ.get(JOBS_ENV, "1")))


def ratio_experiment(config: ExperimentConfig) -> RatioStats:
    """Estimate mean routing ratios per configured algorithm and angle.

    Results do not depend on the number of worker processes: every trial
    draws from its own seed and results are merged by ``(phi, trial)``.
    """
    keys = [(i, j) for i in range(len(config.phis)) for j in range(config.trials)]
    jobs = _jobs(config)
    if jobs == 1:
        results = [run_trial(config, i, j) for i, j in keys]
    else:
        size = max(1, len(keys) // (jobs * 8))
        chunks = [keys[a:a + size] for a in range(0, len(keys), size)]
        with ProcessPoolExecutor(jobs) as ex:
            results = [r for part in ex.map(_run_chunk, [(config, c) for c in chunks]) for r in part]
    by_key = dict(zip(keys, results))
    records = []
    for alg in config.algorithms:
        for i, phi in enumerate(config.phis):
            ratios, nb, no = [], 0, 0
            for j in range(config.trials):
                r, why = by_key[(i, j)][alg]
                if why == "ok":
                    ratios.append(r)
                elif why == "boundary":
                    nb += 1
                else:
                    no += 1
            arr = np.array(ratios)
            mean = float(arr.mean()) if len(arr) else float("nan")
            se = float(arr.std(ddof=1) / math.sqrt(len(arr))) if len(arr) > 1 else None
            pred = predicted_ratio(alg, phi) if alg in PREDICTABLE else None
            records.append(RatioRecord(
                alg, phi, config.lam, config.trials, len(arr), mean, se, pred, nb, no, ratios,
            ))
    return RatioStats(records)


def load_config(path) -> ExperimentConfig:
    with open(path) as fh:
        return ExperimentConfig.from_json(json.load(fh))
