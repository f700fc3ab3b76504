# src/diffusion1d/simulate.py
"""
Monte Carlo clicks of the one-dimensional Y0 diffusions.

Replicate paths are advanced together with a full-truncation Euler scheme:
drift and sigma are evaluated at max(y, 0). A click is y <= threshold. After a
click the state is reset per regime; small-A paths first run the phase-one
equation dY = s(pi0 - Y)dt + sqrt(Y/N) dW from pi1/(1 - pi0) until Y reaches the
end-of-phase-one level, and that time counts towards the waiting time but not
towards the occupation histogram.
Replicate r's clock is stacked after replicates 0..r-1 (time r*horizon + t).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.config import PHASE_ONE_END_FACTOR, DiffusionDefaults, ExperimentDefaults
from src.core import RatchetParams, Regime, RegimeKind
from src.diffusion1d.model import DiffusionSpec, phase_one_drift
from src.errors import InsufficientDataError, RatchetValueError
from src.forward_sim.recorders import ClickRecord, Histogram

logger = logging.getLogger(__name__)


def phase_one_start(p: RatchetParams) -> float:
    """pi1/(1 - pi0) = theta pi0/(1 - pi0), the best-class frequency right after a click."""
    return p.theta * p.pi0 / (1.0 - p.pi0)


def phase_one_end(p: RatchetParams) -> float:
    return PHASE_ONE_END_FACTOR * p.pi0


def reset_value(regime: Regime, p: RatchetParams) -> float:
    """State a path restarts from after a click (small A: the phase-one start)."""
    if regime.kind is RegimeKind.SMALL_A:
        return phase_one_start(p)
    if regime.kind in (RegimeKind.LARGE_A, RegimeKind.NEUTRAL):
        return p.pi0
    return phase_one_end(p)


def drift_start(regime: Regime, p: RatchetParams) -> float:
    """State from which the regime's own drift runs (small A: the end of phase one)."""
    if regime.kind is RegimeKind.SMALL_A:
        return phase_one_end(p)
    return reset_value(regime, p)


def default_occupation_edges(spec: DiffusionSpec) -> np.ndarray:
    width = spec.pi0 / ExperimentDefaults.OCCUPATION_BINS_PER_PI0
    bins = max(1, int(math.ceil(spec.y_max / width)))
    return np.linspace(0.0, spec.y_max, bins + 1)


@dataclass
class DiffusionRun:
    spec: DiffusionSpec
    replicates: int
    horizon: float
    dt: float
    seed: Optional[int]
    clicks: List[ClickRecord]
    waiting_times: np.ndarray
    histogram: Histogram
    threshold: float = 0.0
    noise: bool = True
    phase_one_time: float = field(default=0.0)

    @property
    def total_clicks(self) -> int:
        return len(self.clicks)

    def mean_waiting_time(self) -> float:
        if self.waiting_times.size == 0:
            raise InsufficientDataError(
                f"no completed waiting time in {self.replicates} x {self.horizon:g} generations"
            )
        return float(self.waiting_times.mean())

    def click_rate_per_n_generations(self) -> float:
        return self.total_clicks * self.spec.N / (self.replicates * self.horizon)

    def clicks_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "time": [c.time for c in self.clicks],
                "clicks_at_event": [c.clicks_at_event for c in self.clicks],
                "new_best_freq": [c.new_best_freq for c in self.clicks],
            }
        )

    def waiting_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"waiting_time": self.waiting_times})

    def summary(self) -> dict:
        return {
            "regime": self.spec.regime.label,
            "replicates": self.replicates,
            "horizon": self.horizon,
            "dt": self.dt,
            "threshold": self.threshold,
            "noise": self.noise,
            "clicks": self.total_clicks,
            "mean_waiting_time": (
                float(self.waiting_times.mean()) if self.waiting_times.size else None
            ),
            "phase_one_time": self.phase_one_time,
            "y_max": self.spec.y_max,
        }


def _check(horizon: float, dt: float, replicates: int, threshold: float) -> None:
    if not horizon > 0:
        raise RatchetValueError(f"horizon must be > 0, got {horizon}")
    if not 0 < dt <= DiffusionDefaults.MAX_DT:
        raise RatchetValueError(f"dt must lie in (0, {DiffusionDefaults.MAX_DT:g}], got {dt}")
    if replicates < 1:
        raise RatchetValueError(f"replicates must be >= 1, got {replicates}")
    if threshold < 0:
        raise RatchetValueError(f"click threshold must be >= 0, got {threshold}")


def simulate_diffusion(
    spec: DiffusionSpec,
    horizon: float,
    dt: float = DiffusionDefaults.DT,
    rng: Optional[np.random.Generator] = None,
    *,
    replicates: int = 1,
    start: Optional[float] = None,
    threshold: float = 0.0,
    noise: bool = True,
    occupation_edges: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
) -> DiffusionRun:
    """
    `start` overrides the post-click reset state for the first interval and
    skips phase one for it. `noise=False` drops the diffusion term.
    """
    _check(horizon, dt, replicates, threshold)
    if rng is None:
        raise RatchetValueError("simulate_diffusion needs an explicit random generator")
    p = spec.params
    if start is not None and not 0 < start <= spec.y_max:
        raise RatchetValueError(f"start must lie in (0, y_max={spec.y_max:g}], got {start}")

    small_a = spec.regime.kind is RegimeKind.SMALL_A
    reset = reset_value(spec.regime, p)
    level = phase_one_end(p)
    logger.info(
        "simulate_diffusion: regime=%s N=%d replicates=%d horizon=%g dt=%g",
        spec.regime.label, p.N, replicates, horizon, dt,
    )

    R = int(replicates)
    y = np.full(R, reset if start is None else float(start))
    in_phase = np.full(R, small_a and start is None)
    # +1 if the phase-one start lies above the end level, -1 if below
    side = 1.0 if reset >= level else -1.0
    since = np.zeros(R)
    histogram = Histogram(
        default_occupation_edges(spec) if occupation_edges is None else np.asarray(occupation_edges, float)
    )
    click_times: List[np.ndarray] = []
    click_reps: List[np.ndarray] = []
    waits: List[np.ndarray] = []
    phase_time = 0.0

    sqrt_dt = math.sqrt(dt)
    steps = int(math.ceil(horizon / dt - 1e-9))
    for step in range(1, steps + 1):
        z = np.maximum(y, 0.0)
        b = np.where(in_phase, phase_one_drift(z, p), spec.drift(z))
        y = y + b * dt
        if noise:
            y = y + np.sqrt(z / p.N) * sqrt_dt * rng.standard_normal(R)
        over = y > spec.y_max
        if over.any():
            y[over] = np.maximum(2.0 * spec.y_max - y[over], 0.0)
        since += dt
        phase_time += dt * int(in_phase.sum())
        # phase-one time is not occupation of the regime diffusion
        histogram.add_many(np.maximum(y[~in_phase], 0.0), dt)

        if small_a:
            ended = in_phase & ((y - level) * side <= 0.0)
            in_phase &= ~ended

        clicked = y <= threshold
        if clicked.any():
            idx = np.flatnonzero(clicked)
            click_times.append(np.full(idx.size, step * dt))
            click_reps.append(idx)
            waits.append(since[idx].copy())
            since[idx] = 0.0
            y[idx] = reset
            if small_a:
                in_phase[idx] = True

    clicks = _click_records(click_times, click_reps, horizon, reset)
    run = DiffusionRun(
        spec=spec,
        replicates=R,
        horizon=float(horizon),
        dt=float(dt),
        seed=seed,
        clicks=clicks,
        waiting_times=np.concatenate(waits) if waits else np.zeros(0),
        histogram=histogram,
        threshold=float(threshold),
        noise=noise,
        phase_one_time=phase_time,
    )
    logger.info("simulate_diffusion: %d clicks", run.total_clicks)
    return run


def _click_records(
    times: List[np.ndarray], reps: List[np.ndarray], horizon: float, reset: float
) -> List[ClickRecord]:
    if not times:
        return []
    stacked = np.concatenate(reps) * horizon + np.concatenate(times)
    return [ClickRecord(float(t), 1, reset) for t in np.sort(stacked, kind="stable")]


def simulate_clicks(
    regime: Regime,
    p: RatchetParams,
    horizon: float,
    dt: float = DiffusionDefaults.DT,
    rng: Optional[np.random.Generator] = None,
    **options,
) -> List[ClickRecord]:
    """Click records of a single-spec diffusion run; options go to simulate_diffusion."""
    spec = DiffusionSpec(regime, p, options.pop("y_max", None))
    return simulate_diffusion(spec, horizon, dt, rng, **options).clicks
