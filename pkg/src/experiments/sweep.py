# src/experiments/sweep.py
"""
Power-law sweep: click rate per N generations against N*lambda at fixed
gamma, with a least-squares fit of log(rate) on log(N*lambda).
"""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy import stats

from src.artifacts import build_manifest
from src.config import DiffusionDefaults, ExperimentDefaults
from src.core import RatchetParams, Regime, gamma_of, rule_of_thumb_rate, solve_s_for_gamma
from src.diffusion1d.simulate import simulate_diffusion
from src.diffusion1d.model import DiffusionSpec
from src.errors import InsufficientDataError, RatchetValueError
from src.experiments.workers import run_jobs
from src.forward_sim.fleming_viot import fv_run
from src.forward_sim.recorders import RecorderConfig
from src.forward_sim.wright_fisher import wf_run

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SweepPoint:
    N: int
    lam: float
    s: float
    gamma: float
    n_lambda: float
    clicks: int
    generations: float
    rate_per_N_generations: float
    standard_error: float
    rule_of_thumb: Optional[float]


@dataclass(frozen=True)
class PowerLawFit:
    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    points_used: int
    residuals: Dict[float, float] = field(default_factory=dict)


@dataclass
class SweepResult:
    simulator: str
    gamma: float
    seed: Optional[int]
    points: List[SweepPoint]
    fit: Optional[PowerLawFit]

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for pt in self.points:
            row = asdict(pt)
            row["lambda"] = row.pop("lam")
            row["used_in_fit"] = pt.clicks >= ExperimentDefaults.MIN_CLICKS_FOR_FIT
            row["residual"] = (self.fit.residuals.get(pt.n_lambda, math.nan) if self.fit else math.nan)
            row["fitted_slope"] = self.fit.slope if self.fit else math.nan
            row["fitted_slope_se"] = self.fit.slope_se if self.fit else math.nan
            row["fitted_intercept"] = self.fit.intercept if self.fit else math.nan
            rows.append(row)
        columns = [
            "N", "lambda", "s", "gamma", "n_lambda", "clicks", "generations",
            "rate_per_N_generations", "standard_error", "rule_of_thumb",
            "used_in_fit", "residual", "fitted_slope", "fitted_slope_se", "fitted_intercept",
        ]
        return pd.DataFrame(rows, columns=columns)

    def manifest(self) -> Dict[str, Any]:
        fit = asdict(self.fit) if self.fit else None
        if fit:
            fit.pop("residuals")
        return build_manifest(
            "sweep",
            self.seed,
            simulator=self.simulator,
            gamma=self.gamma,
            lambdas=[pt.lam for pt in self.points],
            fit=fit,
            min_clicks_for_fit=ExperimentDefaults.MIN_CLICKS_FOR_FIT,
        )


# -----------------------------------------
# Fit
# -----------------------------------------
def fit_power_law(points: Sequence[SweepPoint]) -> PowerLawFit:
    """OLS of log(rate) on log(N lambda) over points with enough clicks."""
    used = [pt for pt in points if pt.clicks >= ExperimentDefaults.MIN_CLICKS_FOR_FIT]
    if len(used) < ExperimentDefaults.MIN_POINTS_FOR_FIT:
        raise InsufficientDataError(
            f"power-law fit needs {ExperimentDefaults.MIN_POINTS_FOR_FIT} points with "
            f">= {ExperimentDefaults.MIN_CLICKS_FOR_FIT} clicks, got {len(used)}."
        )
    x = np.log([pt.n_lambda for pt in used])
    y = np.log([pt.rate_per_N_generations for pt in used])
    reg = stats.linregress(x, y)
    residuals = y - (reg.intercept + reg.slope * x)
    return PowerLawFit(
        slope=float(reg.slope),
        intercept=float(reg.intercept),
        slope_se=float(reg.stderr),
        intercept_se=float(reg.intercept_stderr),
        points_used=len(used),
        residuals={pt.n_lambda: float(r) for pt, r in zip(used, residuals)},
    )


# -----------------------------------------
# One point
# -----------------------------------------
def measure_rate(
    rng: np.random.Generator,
    N: int,
    lam: float,
    s: float,
    generations: float,
    simulator: str,
    dt: float = DiffusionDefaults.DT,
) -> SweepPoint:
    """Clicks and exposure of one run; `simulator` is wf, fv or diff:<regime>."""
    p = RatchetParams(N=N, lam=lam, s=s)
    every = max(1, int(generations))
    quiet = RecorderConfig(scatter_interval=every, fitness_interval=every)
    if simulator == "wf":
        run = wf_run(p, int(generations), quiet, rng)
        clicks, exposure = run.total_clicks, run.exposure_generations
    elif simulator == "fv":
        run = fv_run(p, generations, dt, quiet, rng)
        clicks, exposure = run.total_clicks, run.exposure_generations
    elif simulator.startswith("diff:"):
        regime = Regime.parse(simulator.split(":", 1)[1])
        diff = simulate_diffusion(DiffusionSpec(regime, p), generations, dt, rng)
        clicks, exposure = diff.total_clicks, diff.horizon
    else:
        raise RatchetValueError(
            f"Unknown simulator '{simulator}'. Expected wf, fv or diff:<regime>."
        )

    if exposure > 0:
        rate = clicks * N / exposure
        se = math.sqrt(clicks) * N / exposure
    else:
        rate, se = 0.0, 0.0
    return SweepPoint(
        N=N,
        lam=lam,
        s=s,
        gamma=gamma_of(N, lam, s),
        n_lambda=N * lam,
        clicks=int(clicks),
        generations=float(exposure),
        rate_per_N_generations=rate,
        standard_error=se,
        rule_of_thumb=rule_of_thumb_rate(p),
    )


# -----------------------------------------
# Sweep
# -----------------------------------------
def power_law_sweep(
    N: int,
    gamma: float,
    lambda_list: Sequence[float],
    generations: float = ExperimentDefaults.GENERATIONS,
    simulator: str = "wf",
    seed: int = 0,
    workers: Optional[int] = 1,
    dt: float = DiffusionDefaults.DT,
) -> SweepResult:
    """
    One job per lambda, s from solve_s_for_gamma. Raises InsufficientDataError
    (carrying the points as `.partial`) when fewer than three points can be fitted.
    """
    if not lambda_list:
        raise RatchetValueError("power_law_sweep needs at least one lambda")
    jobs = []
    for lam in lambda_list:
        if not N * lam > 1:
            raise RatchetValueError(f"every point needs N*lambda > 1, got N*lambda={N * lam:g}")
        jobs.append(
            dict(N=N, lam=float(lam), s=solve_s_for_gamma(N, lam, gamma),
                 generations=generations, simulator=simulator, dt=dt)
        )
    points = run_jobs(measure_rate, jobs, seed, workers)
    result = SweepResult(simulator=simulator, gamma=gamma, seed=seed, points=points, fit=None)
    try:
        result.fit = fit_power_law(points)
    except InsufficientDataError as exc:
        exc.partial = result
        raise
    logger.info("sweep gamma=%g: slope %.4g +/- %.2g", gamma, result.fit.slope, result.fit.slope_se)
    return result
