# src/forward_sim/fleming_viot.py
"""
Truncated Fleming-Viot (multi-type Wright-Fisher diffusion) for the ratchet.

Euler scheme: drift from `cds_drift`, noise from an antisymmetric array of
independent Gaussian increments W_jk (j < k) with per-pair scale
sqrt(dt X_j X_k / N). Each class receives sum_j sqrt(X_j X_k / N) dW_jk, so the
noise sums to zero and has the Wright-Fisher covariance.
"""
from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from src.config import DiffusionDefaults
from src.core import RatchetParams
from src.deterministic import TypeProfile, cds_drift, poisson_profile
from src.errors import NumericalError, RatchetValueError
from src.forward_sim.recorders import RecorderConfig, RunRecorder, RunStats
from src.forward_sim.wright_fisher import burn_in_cap
from src.utils import check_window, leading_zeros

logger = logging.getLogger(__name__)


# -----------------------------------------
# Window and noise
# -----------------------------------------
def fv_window(theta: float) -> int:
    """Smallest allowed window: theta + 10 sqrt(theta) + 25 classes."""
    return int(math.ceil(theta + 10.0 * math.sqrt(max(theta, 0.0)) + 25.0))


@lru_cache(maxsize=32)
def _upper_pairs(K: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(K, 1)


def fv_noise(y: np.ndarray, N: int, dt: float, rng: np.random.Generator) -> np.ndarray:
    """One draw of the antisymmetric-array noise for profile y over a step dt."""
    K = y.size
    rows, cols = _upper_pairs(K)
    W = np.zeros((K, K))
    W[rows, cols] = rng.standard_normal(rows.size) * math.sqrt(dt)
    W -= W.T
    sq = np.sqrt(y)
    return sq * (sq @ W) / math.sqrt(N)


def _euler(
    y: np.ndarray, p: RatchetParams, dt: float, rng: np.random.Generator, halvings: int
) -> np.ndarray:
    proposal = y + cds_drift(y, p.lam, p.s) * dt + fv_noise(y, p.N, dt, rng)
    clamped = -float(proposal[proposal < 0].sum())
    if clamped <= DiffusionDefaults.FV_MAX_CLAMPED_MASS:
        proposal = np.where(proposal > 0, proposal, 0.0)
        return proposal / proposal.sum()
    if halvings >= DiffusionDefaults.FV_MAX_HALVINGS:
        raise NumericalError(
            f"fv_step: clamped mass {clamped:.3g} still above "
            f"{DiffusionDefaults.FV_MAX_CLAMPED_MASS:g} after {halvings} halvings of dt."
        )
    half = 0.5 * dt
    mid = _euler(y, p, half, rng, halvings + 1)
    return _euler(mid, p, half, rng, halvings + 1)


def _check_dt(dt: float) -> None:
    if not 0 < dt <= DiffusionDefaults.MAX_DT:
        raise RatchetValueError(f"dt must lie in (0, {DiffusionDefaults.MAX_DT:g}], got {dt}")


def _window_for(x: TypeProfile, p: RatchetParams) -> int:
    K = max(len(x), fv_window(p.theta if p.s > 0 else 0.0))
    check_window(K, "fv_step")
    return K


# -----------------------------------------
# Public API
# -----------------------------------------
def fv_step(
    x: TypeProfile, p: RatchetParams, dt: float, rng: np.random.Generator
) -> TypeProfile:
    """
    One Euler step. Steps whose clamped mass exceeds the limit are redone as two
    half steps, recursively. An emptied best class moves the offset.
    """
    _check_dt(dt)
    y = _euler(x.padded(_window_for(x, p)), p, dt, rng, 0)
    return TypeProfile.from_values(y, offset=x.offset)


def fv_path(
    x0: TypeProfile,
    p: RatchetParams,
    steps: int,
    dt: float = DiffusionDefaults.DT,
    rng: Optional[np.random.Generator] = None,
) -> List[TypeProfile]:
    """steps + 1 snapshots at spacing dt, starting with x0."""
    if steps < 0:
        raise RatchetValueError(f"steps must be >= 0, got {steps}")
    if rng is None:
        raise RatchetValueError("fv_path needs an explicit random generator")
    _check_dt(dt)
    path = [x0]
    x = x0
    for _ in range(int(steps)):
        x = fv_step(x, p, dt, rng)
        path.append(x)
    return path


def fv_run(
    p: RatchetParams,
    horizon: float,
    dt: float = DiffusionDefaults.DT,
    recorder_config: Optional[RecorderConfig] = None,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
) -> RunStats:
    """
    Same protocol as wf_run: start at Poisson(theta), burn in through the first
    click, then record for `horizon` generations. Histogram weights are dt.
    """
    if not horizon > 0:
        raise RatchetValueError(f"horizon must be > 0, got {horizon}")
    if rng is None:
        raise RatchetValueError("fv_run needs an explicit random generator")
    _check_dt(dt)
    config = recorder_config or RecorderConfig()
    pi0 = p.pi0 if p.s > 0 else 1.0
    recorder = RunRecorder(p, config, pi0)
    logger.info("fv_run start: N=%d lambda=%g s=%g dt=%g seed=%s", p.N, p.lam, p.s, dt, seed)

    if p.lam == 0:
        y = np.array([1.0])
    else:
        if p.s == 0:
            raise RatchetValueError("a stationary start needs s > 0 when lambda > 0")
        y = poisson_profile(p.theta).freqs.copy()
    K = max(y.size, fv_window(p.theta if p.s > 0 else 0.0))
    check_window(K, "fv_run")
    y = np.concatenate([y, np.zeros(K - y.size)])

    def advance(y: np.ndarray) -> Tuple[np.ndarray, int]:
        z = _euler(y, p, dt, rng, 0)
        shift = leading_zeros(z)
        if shift:
            z = np.concatenate([z[shift:], np.zeros(shift)])
        return z, shift

    cap_steps = int(math.ceil(burn_in_cap(p) / dt))
    burn_steps = 0
    burned = False
    while burn_steps < cap_steps:
        y, shift = advance(y)
        burn_steps += 1
        if shift:
            burned = True
            break
    burn_gens = burn_steps * dt
    if not burned:
        logger.info("fv_run: no click within %g burn-in generations; zero-click outcome", burn_gens)
        return recorder.finish(
            simulator="fv",
            seed=seed,
            generations=0,
            burn_in_generations=burn_gens,
            burn_in_completed=False,
        )

    total_steps = int(math.ceil(horizon / dt - 1e-9))
    powers = (1.0 - p.s) ** np.arange(K)
    j = np.arange(K)
    next_scatter = config.scatter_interval
    next_fitness = config.fitness_interval
    measured = 0.0
    for step in range(1, total_steps + 1):
        y, shift = advance(y)
        t = step * dt
        measured = t
        if shift:
            recorder.click(t, shift, y[0])
        recorder.occupy(float(y[0]), dt)
        if t >= next_scatter - 1e-9:
            recorder.sample(t, float(y[0]), float(np.dot(j, y)))
            next_scatter += config.scatter_interval
        if t >= next_fitness - 1e-9:
            recorder.fitness(t, float(np.dot(powers, y)))
            next_fitness += config.fitness_interval
        if recorder.done():
            break

    stats = recorder.finish(
        simulator="fv",
        seed=seed,
        generations=measured,
        burn_in_generations=burn_gens,
        burn_in_completed=True,
    )
    logger.info("fv_run end: %d clicks in %g generations", stats.total_clicks, measured)
    return stats
