# src/utils.py
from __future__ import annotations

from typing import Optional

import numpy as np
from scipy import stats

from src.config import Tolerances, WindowLimits
from src.errors import NumericalError, RatchetValueError


# -----------------------------------------
# Random streams
# -----------------------------------------
def make_rng(seed: int, job_index: Optional[int] = None) -> np.random.Generator:
    """PCG64 generator; `job_index` selects an independent child stream."""
    if seed < 0:
        raise RatchetValueError(f"seed must be a non-negative integer, got {seed}")
    if job_index is None:
        ss = np.random.SeedSequence(int(seed))
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=(int(job_index),))
    return np.random.Generator(np.random.PCG64(ss))


# -----------------------------------------
# Poisson windows
# -----------------------------------------
def poisson_window(mu: float, tol: float = Tolerances.TAIL_MASS) -> int:
    """Number of classes 0..L-1 so that Poisson(mu) mass beyond them is below tol."""
    if mu < 0:
        raise RatchetValueError(f"Poisson mean must be >= 0, got {mu}")
    if mu == 0:
        return 1
    length = int(stats.poisson.isf(tol, mu)) + 2
    while stats.poisson.sf(length - 1, mu) >= tol:
        length += 1
    return length


def poisson_weights(mu: float, length: int) -> np.ndarray:
    """Poisson(mu) probabilities of classes 0..length-1 (unnormalised window)."""
    if mu == 0:
        out = np.zeros(length)
        out[0] = 1.0
        return out
    return stats.poisson.pmf(np.arange(length), mu)


# -----------------------------------------
# Window housekeeping
# -----------------------------------------
def trim_tail(freqs: np.ndarray, tol: float = Tolerances.TAIL_MASS) -> np.ndarray:
    """Drop trailing classes whose combined mass is below tol (keeps >= 1 class)."""
    if freqs.size <= 1:
        return freqs
    suffix = np.cumsum(freqs[::-1])[::-1]
    keep = np.nonzero(suffix >= tol)[0]
    last = int(keep[-1]) + 1 if keep.size else 1
    return freqs[:max(last, 1)]


def leading_zeros(values: np.ndarray) -> int:
    nz = np.flatnonzero(values)
    if nz.size == 0:
        raise NumericalError("Profile has no mass: every class is empty.")
    return int(nz[0])


def check_window(length: int, where: str) -> None:
    if length > WindowLimits.MAX_CLASSES:
        raise NumericalError(
            f"{where}: window grew to {length} classes, above the cap of "
            f"{WindowLimits.MAX_CLASSES}. Reduce t or the mutation rate."
        )
