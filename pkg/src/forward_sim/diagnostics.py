# src/forward_sim/diagnostics.py
"""
Empirical drift and quadratic variation of the first two moments along a
Fleming-Viot path, set against the moment equations

    dM1 = (lambda - s M2) dt + dG,          d<G> = M2/N dt
    dM2 = (-M2/N + lambda - s M3) dt + dH,  d<H> = (M4 - M2^2)/N dt

M1 is the absolute mean, so clicks do not show up as jumps.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np
import pandas as pd

from src.config import ExperimentDefaults
from src.core import RatchetParams
from src.deterministic import TypeProfile
from src.errors import InsufficientDataError, RatchetValueError


@dataclass(frozen=True)
class DiagnosticLine:
    name: str
    empirical: float
    predicted: float
    standard_error: float

    @property
    def z(self) -> float:
        if self.standard_error == 0:
            return 0.0 if self.empirical == self.predicted else float("inf")
        return (self.empirical - self.predicted) / self.standard_error


@dataclass(frozen=True)
class MomentReport:
    steps: int
    dt: float
    lines: List[DiagnosticLine]

    def __getitem__(self, name: str) -> DiagnosticLine:
        for line in self.lines:
            if line.name == name:
                return line
        raise KeyError(name)

    def within(self, n_se: float = 4.0) -> bool:
        return all(abs(line.z) <= n_se for line in self.lines)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "quantity": [l.name for l in self.lines],
                "empirical": [l.empirical for l in self.lines],
                "predicted": [l.predicted for l in self.lines],
                "standard_error": [l.standard_error for l in self.lines],
                "z": [l.z for l in self.lines],
            }
        )


def _moments(path: Sequence[TypeProfile]) -> np.ndarray:
    """Rows (absolute M1, M2, M3, M4) per snapshot."""
    out = np.empty((len(path), 4))
    for i, x in enumerate(path):
        j = np.arange(len(x))
        m = float(np.dot(j, x.freqs))
        d = j - m
        out[i] = (
            x.offset + m,
            np.dot(d ** 2, x.freqs),
            np.dot(d ** 3, x.freqs),
            np.dot(d ** 4, x.freqs),
        )
    return out


def _line(name: str, samples: np.ndarray, predicted: np.ndarray, dt: float) -> DiagnosticLine:
    n = samples.size
    return DiagnosticLine(
        name=name,
        empirical=float(samples.mean() / dt),
        predicted=float(predicted.mean()),
        standard_error=float(samples.std(ddof=1) / np.sqrt(n) / dt),
    )


def predicted_drifts(m2: float, m3: float, p: RatchetParams) -> tuple:
    """(drift of M1, drift of M2) per unit time."""
    return p.lam - p.s * m2, -m2 / p.N + p.lam - p.s * m3


def moment_diagnostics(path: Sequence[TypeProfile], p: RatchetParams, dt: float) -> MomentReport:
    """Drift and quadratic-variation checks for M1 and M2 with standard errors."""
    if not dt > 0:
        raise RatchetValueError(f"dt must be > 0, got {dt}")
    steps = len(path) - 1
    if steps < ExperimentDefaults.MIN_DIAGNOSTIC_STEPS:
        raise InsufficientDataError(
            f"moment_diagnostics needs at least {ExperimentDefaults.MIN_DIAGNOSTIC_STEPS} "
            f"steps, got {steps}."
        )

    mom = _moments(path)
    _, m2, m3, m4 = mom[:-1].T
    d1 = np.diff(mom[:, 0])
    d2 = np.diff(mom[:, 1])

    drift1, drift2 = predicted_drifts(m2, m3, p)
    resid1 = d1 - drift1 * dt
    resid2 = d2 - drift2 * dt

    lines = [
        _line("M1 drift", d1, drift1, dt),
        _line("G quadratic variation", resid1 ** 2, m2 / p.N, dt),
        _line("M2 drift", d2, drift2, dt),
        _line("H quadratic variation", resid2 ** 2, (m4 - m2 ** 2) / p.N, dt),
    ]
    return MomentReport(steps=steps, dt=dt, lines=lines)
