# src/experiments/rate_vs_gamma.py
"""Click rate across gamma at fixed N*lambda (s moves with gamma)."""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from scipy import stats

from src.artifacts import build_manifest
from src.config import DiffusionDefaults, ExperimentDefaults
from src.core import solve_s_for_gamma
from src.errors import RatchetValueError
from src.experiments.sweep import SweepPoint, measure_rate
from src.experiments.workers import run_jobs

logger = logging.getLogger(__name__)


def rate_upper_bound(clicks: int, generations: float, N: int, level: float = 0.95) -> float:
    """
    Upper confidence bound on clicks per N generations. Zero clicks use the
    rule-of-three bound 3N/generations; otherwise the chi-square Poisson bound.
    """
    if generations <= 0:
        return float("inf")
    if clicks == 0:
        return ExperimentDefaults.ZERO_CLICK_UPPER * N / generations
    upper = 0.5 * stats.chi2.ppf(0.5 * (1.0 + level), 2 * (clicks + 1))
    return float(upper) * N / generations


@dataclass(frozen=True)
class RatePoint:
    gamma: float
    s: float
    clicks: int
    generations: float
    rate_per_N_generations: float
    standard_error: float
    upper_bound: float


@dataclass
class RateCurve:
    N: int
    n_lambda: float
    simulator: str
    seed: Optional[int]
    points: List[RatePoint]

    def rate(self, gamma: float) -> float:
        for pt in self.points:
            if pt.gamma == gamma:
                return pt.rate_per_N_generations
        raise KeyError(gamma)

    def is_nondecreasing(self, n_se: float = 2.0) -> bool:
        """True unless some rate drops below its predecessor by more than n_se joint SEs."""
        ordered = sorted(self.points, key=lambda pt: pt.gamma)
        for a, b in zip(ordered, ordered[1:]):
            joint = (a.standard_error ** 2 + b.standard_error ** 2) ** 0.5
            if b.rate_per_N_generations < a.rate_per_N_generations - n_se * joint:
                return False
        return True

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(pt) for pt in self.points])

    def manifest(self) -> Dict[str, Any]:
        return build_manifest(
            "rate-vs-gamma",
            self.seed,
            N=self.N,
            n_lambda=self.n_lambda,
            simulator=self.simulator,
            gammas=[pt.gamma for pt in self.points],
            zero_click_upper=ExperimentDefaults.ZERO_CLICK_UPPER,
        )


def _to_rate_point(gamma: float, pt: SweepPoint) -> RatePoint:
    return RatePoint(
        gamma=gamma,
        s=pt.s,
        clicks=pt.clicks,
        generations=pt.generations,
        rate_per_N_generations=pt.rate_per_N_generations,
        standard_error=pt.standard_error,
        upper_bound=rate_upper_bound(pt.clicks, pt.generations, pt.N),
    )


def rate_vs_gamma(
    N: int,
    n_lambda: float,
    gamma_list: Sequence[float],
    generations: float = ExperimentDefaults.GENERATIONS,
    seed: int = 0,
    workers: Optional[int] = 1,
    simulator: str = "wf",
    dt: float = DiffusionDefaults.DT,
) -> RateCurve:
    if not gamma_list:
        raise RatchetValueError("rate_vs_gamma needs at least one gamma")
    lam = n_lambda / N
    jobs = [
        dict(N=N, lam=lam, s=solve_s_for_gamma(N, lam, g), generations=generations,
             simulator=simulator, dt=dt)
        for g in gamma_list
    ]
    swept = run_jobs(measure_rate, jobs, seed, workers)
    points = [_to_rate_point(float(g), pt) for g, pt in zip(gamma_list, swept)]
    for pt in points:
        logger.info("gamma=%g: %d clicks, rate %.4g", pt.gamma, pt.clicks, pt.rate_per_N_generations)
    return RateCurve(N=N, n_lambda=n_lambda, simulator=simulator, seed=seed, points=points)
