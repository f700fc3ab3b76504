# src/experiments/phase_plane.py
"""
Regression of M1 on Y0 from subsampled Wright-Fisher pairs, compared with the
slopes of the three relaxation regimes. Every regime line passes through
(pi0, theta), so the fitted line is also checked there.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
from scipy import stats

from src.artifacts import build_manifest, params_dict
from src.config import ExperimentDefaults, RecorderDefaults
from src.core import RatchetParams, Regime
from src.deterministic import regime_slope
from src.errors import InsufficientDataError
from src.forward_sim.recorders import RecorderConfig, RunStats
from src.forward_sim.wright_fisher import wf_run

logger = logging.getLogger(__name__)

COMPARED_REGIMES = (Regime.small_a(), Regime.a_equals_one(), Regime.large_a())


@dataclass
class PhasePlaneResult:
    params: RatchetParams
    seed: Optional[int]
    samples: int
    scatter_interval: int
    slope: float
    intercept: float
    slope_se: float
    intercept_se: float
    value_at_pi0: float
    value_at_pi0_se: float
    predictions: Dict[str, float]
    best_regime: str
    run: RunStats

    def intercept_consistent(self, n_se: float = 2.0) -> bool:
        """Fitted line at Y0 = pi0 within n_se standard errors of theta."""
        return abs(self.value_at_pi0 - self.params.theta) <= n_se * self.value_at_pi0_se

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {"regime": "fitted", "slope": self.slope, "slope_se": self.slope_se,
             "relative_error": 0.0}
        ]
        for label, predicted in self.predictions.items():
            rows.append(
                {"regime": label, "slope": predicted, "slope_se": math.nan,
                 "relative_error": (self.slope - predicted) / abs(predicted)}
            )
        return pd.DataFrame(rows)

    def samples_frame(self) -> pd.DataFrame:
        return self.run.scatter_frame()

    def manifest(self) -> Dict[str, Any]:
        return build_manifest(
            "phase",
            self.seed,
            params=params_dict(self.params),
            samples=self.samples,
            scatter_interval=self.scatter_interval,
            slope=self.slope,
            slope_se=self.slope_se,
            intercept=self.intercept,
            intercept_se=self.intercept_se,
            value_at_pi0=self.value_at_pi0,
            value_at_pi0_se=self.value_at_pi0_se,
            predictions=self.predictions,
            best_regime=self.best_regime,
        )


def regime_predictions(theta: float) -> Dict[str, float]:
    return {r.label: regime_slope(r, theta) for r in COMPARED_REGIMES}


def regress_phase_plane(y0: np.ndarray, m1: np.ndarray, pi0: float):
    """(slope, intercept, slope_se, intercept_se, value_at_pi0, its se) by OLS."""
    reg = stats.linregress(y0, m1)
    n = y0.size
    resid = m1 - (reg.intercept + reg.slope * y0)
    sigma2 = float(np.dot(resid, resid)) / (n - 2)
    sxx = float(np.sum((y0 - y0.mean()) ** 2))
    at_pi0 = reg.intercept + reg.slope * pi0
    se_pi0 = math.sqrt(sigma2 * (1.0 / n + (pi0 - y0.mean()) ** 2 / sxx))
    return (
        float(reg.slope), float(reg.intercept), float(reg.stderr),
        float(reg.intercept_stderr), float(at_pi0), se_pi0,
    )


def phase_plane(
    p: RatchetParams,
    generations: int,
    rng: np.random.Generator,
    scatter_interval: int = RecorderDefaults.SCATTER_INTERVAL,
    seed: Optional[int] = None,
) -> PhasePlaneResult:
    run = wf_run(
        p,
        generations,
        RecorderConfig(scatter_interval=scatter_interval, fitness_interval=max(1, generations)),
        rng,
        seed=seed,
    )
    samples = run.scatter.shape[0]
    if samples < ExperimentDefaults.MIN_PHASE_SAMPLES:
        raise InsufficientDataError(
            f"phase_plane needs {ExperimentDefaults.MIN_PHASE_SAMPLES} (Y0, M1) pairs, got {samples}; "
            f"raise generations or lower the scatter interval."
        )
    y0, m1 = run.scatter[:, 1], run.scatter[:, 2]
    if np.ptp(y0) == 0:
        raise InsufficientDataError("Y0 never varied along the run; no regression possible.")
    slope, intercept, slope_se, intercept_se, at_pi0, se_pi0 = regress_phase_plane(y0, m1, p.pi0)
    predictions = regime_predictions(p.theta)
    best = min(predictions, key=lambda label: abs(slope - predictions[label]))
    logger.info("phase_plane: slope %.4g +/- %.2g, best regime %s", slope, slope_se, best)
    return PhasePlaneResult(
        params=p,
        seed=seed,
        samples=samples,
        scatter_interval=scatter_interval,
        slope=slope,
        intercept=intercept,
        slope_se=slope_se,
        intercept_se=intercept_se,
        value_at_pi0=at_pi0,
        value_at_pi0_se=se_pi0,
        predictions=predictions,
        best_regime=best,
        run=run,
    )
