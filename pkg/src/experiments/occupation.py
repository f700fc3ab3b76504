# src/experiments/occupation.py
"""
Occupation density of Y0 between clicks: diffusion Monte Carlo against the
Green function, and optionally against a Wright-Fisher histogram.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np
import pandas as pd

from src.artifacts import build_manifest, params_dict
from src.config import DiffusionDefaults, ExperimentDefaults
from src.core import RatchetParams, Regime, RegimeKind
from src.diffusion1d.green import GreenFunction, green_object
from src.diffusion1d.simulate import default_occupation_edges, drift_start, simulate_diffusion
from src.diffusion1d.model import DiffusionSpec
from src.forward_sim.recorders import RecorderConfig
from src.forward_sim.wright_fisher import wf_run

logger = logging.getLogger(__name__)


def l1_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(np.asarray(a) - np.asarray(b)).sum())


def green_for(spec: DiffusionSpec) -> GreenFunction:
    """Green function started where the regime's own drift takes over after a click."""
    x0 = min(drift_start(spec.regime, spec.params), spec.y_max)
    return green_object(spec, x0)


@dataclass
class OccupationResult:
    params: RatchetParams
    regime: str
    seed: Optional[int]
    clicks: int
    clicks_target: int
    partial: bool
    edges: np.ndarray
    mc_masses: np.ndarray
    green_masses: np.ndarray
    expected_time: float
    mean_waiting_time: float
    l1_green: float
    wf_masses: Optional[np.ndarray] = None
    l1_wf_green: Optional[float] = None
    l1_wf_mc: Optional[float] = None

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "bin_lo": self.edges[:-1],
                "bin_hi": self.edges[1:],
                "diffusion_mc": self.mc_masses,
                "green": self.green_masses,
            }
        )
        if self.wf_masses is not None:
            frame["wf"] = self.wf_masses
        return frame

    def manifest(self) -> Dict[str, Any]:
        return build_manifest(
            "occupation",
            self.seed,
            params=params_dict(self.params),
            regime=self.regime,
            clicks=self.clicks,
            clicks_target=self.clicks_target,
            partial=self.partial,
            expected_time=self.expected_time,
            mean_waiting_time=self.mean_waiting_time,
            l1_green=self.l1_green,
            l1_wf_green=self.l1_wf_green,
            l1_wf_mc=self.l1_wf_mc,
        )


def occupation_compare(
    p: RatchetParams,
    regime: Regime,
    clicks_target: int,
    rng: np.random.Generator,
    *,
    replicates: int = DiffusionDefaults.REPLICATES,
    dt: float = DiffusionDefaults.DT,
    horizon: Optional[float] = None,
    wf_generations: Optional[int] = None,
    edges: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
) -> OccupationResult:
    """
    Without `horizon`, each replicate runs long enough for clicks_target clicks
    in expectation (Green-function waiting time plus phase one, 25% slack).
    Falling short of the target flags the result as partial.
    """
    spec = DiffusionSpec(regime, p)
    green = green_for(spec)
    bins = default_occupation_edges(spec) if edges is None else np.asarray(edges, dtype=float)
    if horizon is None:
        wait = green.expected_time
        if regime.kind is RegimeKind.SMALL_A:
            # deterministic phase-one duration log(theta)/s
            wait += max(0.0, math.log(p.theta)) / p.s
        horizon = math.ceil(1.25 * wait * clicks_target / replicates)

    run = simulate_diffusion(
        spec, horizon, dt, rng, replicates=replicates, occupation_edges=bins, seed=seed
    )
    mc = run.histogram.masses()
    green_masses = green.bin_masses(bins)
    partial = run.total_clicks < clicks_target
    if partial:
        logger.warning(
            "occupation_compare: %d of %d target clicks within horizon %g",
            run.total_clicks, clicks_target, horizon,
        )
    result = OccupationResult(
        params=p,
        regime=regime.label,
        seed=seed,
        clicks=run.total_clicks,
        clicks_target=int(clicks_target),
        partial=partial,
        edges=bins,
        mc_masses=mc,
        green_masses=green_masses,
        expected_time=green.expected_time,
        mean_waiting_time=float(run.waiting_times.mean()) if run.waiting_times.size else math.nan,
        l1_green=l1_distance(mc, green_masses),
    )

    if wf_generations:
        wf = wf_run(p, int(wf_generations), RecorderConfig(hist_edges=bins), rng, seed=seed)
        result.wf_masses = wf.histogram.masses()
        result.l1_wf_green = l1_distance(result.wf_masses, green_masses)
        result.l1_wf_mc = l1_distance(result.wf_masses, mc)
    return result


def regime_fit_to_wf(
    p: RatchetParams,
    regimes: Sequence[Regime],
    wf_generations: int,
    rng: np.random.Generator,
    edges: Optional[Sequence[float]] = None,
) -> Dict[str, float]:
    """L1 distance between each regime's Green occupation and one Wright-Fisher histogram."""
    if edges is None:
        width = p.pi0 / ExperimentDefaults.OCCUPATION_BINS_PER_PI0
        top = min(1.0, DiffusionDefaults.Y_MAX_PI0 * p.pi0)
        edges = np.linspace(0.0, top, int(math.ceil(top / width)) + 1)
    bins = np.asarray(edges, dtype=float)
    wf = wf_run(p, int(wf_generations), RecorderConfig(hist_edges=bins), rng)
    wf_masses = wf.histogram.masses()
    out: Dict[str, float] = {}
    for regime in regimes:
        green_masses = green_for(DiffusionSpec(regime, p)).bin_masses(bins)
        out[regime.label] = l1_distance(wf_masses, green_masses)
    return out
