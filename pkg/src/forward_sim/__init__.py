# src/forward_sim/__init__.py
from src.forward_sim.diagnostics import DiagnosticLine, MomentReport, moment_diagnostics
from src.forward_sim.fleming_viot import fv_path, fv_run, fv_step, fv_window
from src.forward_sim.recorders import ClickRecord, Histogram, RecorderConfig, RunStats
from src.forward_sim.wright_fisher import CountProfile, wf_run, wf_step, wf_weights

__all__ = [
    "ClickRecord",
    "CountProfile",
    "DiagnosticLine",
    "Histogram",
    "MomentReport",
    "RecorderConfig",
    "RunStats",
    "fv_path",
    "fv_run",
    "fv_step",
    "fv_window",
    "moment_diagnostics",
    "wf_run",
    "wf_step",
    "wf_weights",
]
