# src/experiments/click_entry.py
"""Frequency of the new best class right after each Wright-Fisher click."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.artifacts import build_manifest, params_dict
from src.config import ExperimentDefaults
from src.core import RatchetParams
from src.errors import InsufficientDataError
from src.forward_sim.recorders import Histogram, RecorderConfig
from src.forward_sim.wright_fisher import wf_run

logger = logging.getLogger(__name__)

ENTRY_BINS = 60


def default_entry_edges(p: RatchetParams) -> np.ndarray:
    """ENTRY_BINS bins on [0, 3 max(pi0, pi1)], capped at 1."""
    pi0 = p.pi0
    top = min(1.0, 3.0 * max(pi0, p.theta * pi0))
    return np.linspace(0.0, top, ENTRY_BINS + 1)


@dataclass
class ClickEntryResult:
    params: RatchetParams
    seed: Optional[int]
    clicks: int
    clicks_target: int
    partial: bool
    histogram: Histogram

    @property
    def pi0(self) -> float:
        return self.params.pi0

    @property
    def pi1(self) -> float:
        return self.params.theta * self.params.pi0

    def mode(self) -> float:
        return self.histogram.mode()

    def to_frame(self) -> pd.DataFrame:
        return self.histogram.to_frame()

    def manifest(self) -> Dict[str, Any]:
        return build_manifest(
            "click-hist",
            self.seed,
            params=params_dict(self.params),
            clicks=self.clicks,
            clicks_target=self.clicks_target,
            partial=self.partial,
            mode=self.mode(),
            pi0=self.pi0,
            pi1=self.pi1,
        )


def click_entry_histogram(
    p: RatchetParams,
    clicks_target: int,
    rng: np.random.Generator,
    *,
    max_generations: int = ExperimentDefaults.GENERATIONS,
    edges: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
) -> ClickEntryResult:
    """Runs wf_run until clicks_target clicks or max_generations, whichever comes first."""
    every = max(1, int(max_generations))
    config = RecorderConfig(
        scatter_interval=every, fitness_interval=every, stop_after_clicks=int(clicks_target)
    )
    run = wf_run(p, int(max_generations), config, rng, seed=seed)
    if not run.clicks:
        raise InsufficientDataError(
            f"no click in {run.exposure_generations:g} generations; "
            f"no click-entry histogram for N={p.N}, lambda={p.lam:g}, s={p.s:g}."
        )
    hist = Histogram(default_entry_edges(p) if edges is None else np.asarray(edges, dtype=float))
    hist.add_many(np.array([c.new_best_freq for c in run.clicks]))
    partial = run.total_clicks < clicks_target
    if partial:
        logger.warning("click_entry_histogram: %d of %d clicks", run.total_clicks, clicks_target)
    return ClickEntryResult(
        params=p,
        seed=seed,
        clicks=run.total_clicks,
        clicks_target=int(clicks_target),
        partial=partial,
        histogram=hist,
    )


def mode_near(value: float, target: float, low: float = 0.5, high: float = 1.5) -> bool:
    return low * target <= value <= high * target and math.isfinite(value)
