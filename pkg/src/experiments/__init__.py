# src/experiments/__init__.py
from src.experiments.click_entry import ClickEntryResult, click_entry_histogram
from src.experiments.occupation import OccupationResult, occupation_compare, regime_fit_to_wf
from src.experiments.phase_plane import PhasePlaneResult, phase_plane
from src.experiments.rate_vs_gamma import RateCurve, rate_upper_bound, rate_vs_gamma
from src.experiments.sweep import PowerLawFit, SweepPoint, SweepResult, fit_power_law, power_law_sweep
from src.experiments.workers import run_jobs

__all__ = [
    "ClickEntryResult",
    "OccupationResult",
    "PhasePlaneResult",
    "PowerLawFit",
    "RateCurve",
    "SweepPoint",
    "SweepResult",
    "click_entry_histogram",
    "fit_power_law",
    "occupation_compare",
    "phase_plane",
    "power_law_sweep",
    "rate_upper_bound",
    "rate_vs_gamma",
    "regime_fit_to_wf",
    "run_jobs",
]
