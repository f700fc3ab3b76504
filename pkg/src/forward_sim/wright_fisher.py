# src/forward_sim/wright_fisher.py
"""
Discrete-generation Wright-Fisher ratchet.

Each generation N offspring pick a parent class with probability proportional
to x_k (1-s)^k and then gain Poisson(lambda) new mutations. The expected next
profile is the deterministic discrete map; the realised one is a multinomial
sample of it. numpy's Generator.multinomial draws that sample as one exact
binomial per class conditioned on the classes before it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.config import RecorderDefaults
from src.core import RatchetParams, haigh_click_time
from src.deterministic import TypeProfile, discrete_map, poisson_profile
from src.errors import RatchetValueError
from src.forward_sim.recorders import RecorderConfig, RunRecorder, RunStats
from src.utils import check_window, poisson_weights, poisson_window, trim_tail

logger = logging.getLogger(__name__)


# =============================================================================
# Types
# =============================================================================
@dataclass(frozen=True, eq=False)
class CountProfile:
    """N * X_k for classes offset, offset+1, ..."""

    offset: int
    counts: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.counts, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise RatchetValueError("A count profile needs a non-empty one-dimensional vector.")
        if np.any(arr < 0):
            raise RatchetValueError("Counts must be non-negative.")
        if arr.sum() == 0:
            raise RatchetValueError("A count profile needs at least one individual.")
        if self.offset < 0:
            raise RatchetValueError(f"offset must be >= 0, got {self.offset}")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)
        object.__setattr__(self, "offset", int(self.offset))

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    def frequencies(self) -> TypeProfile:
        return TypeProfile.from_values(self.counts / self.N, offset=self.offset)


# =============================================================================
# Weights
# =============================================================================
def wf_weights(x: TypeProfile, lam: float, s: float) -> TypeProfile:
    """Multinomial weights of the next generation; equal to the deterministic discrete map."""
    if lam < 0 or not 0 <= s < 1:
        raise RatchetValueError(f"need lambda >= 0 and 0 <= s < 1, got lambda={lam}, s={s}")
    return discrete_map(x, lam, s)


class WrightFisherKernel:
    """Caches the mutation pmf and fitness powers for repeated steps at fixed (lambda, s)."""

    def __init__(self, lam: float, s: float):
        if lam < 0 or not 0 <= s < 1:
            raise RatchetValueError(f"need lambda >= 0 and 0 <= s < 1, got lambda={lam}, s={s}")
        self.lam = lam
        self.s = s
        self._mutation = poisson_weights(lam, poisson_window(lam))
        self._fitness = (1.0 - s) ** np.arange(64)

    def fitness_powers(self, length: int) -> np.ndarray:
        if length > self._fitness.size:
            self._fitness = (1.0 - self.s) ** np.arange(2 * length)
        return self._fitness[:length]

    def weights(self, freqs: np.ndarray) -> np.ndarray:
        w = freqs * self.fitness_powers(freqs.size)
        w /= w.sum()
        out = trim_tail(np.convolve(w, self._mutation))
        check_window(out.size, "wf_step")
        return out / out.sum()


# =============================================================================
# Stepping
# =============================================================================
def _advance(
    counts: np.ndarray, N: int, kernel: WrightFisherKernel, rng: np.random.Generator
) -> Tuple[np.ndarray, int]:
    """One generation on raw counts; returns (counts starting at the new best class, offset jump)."""
    pvals = kernel.weights(counts / N)
    drawn = rng.multinomial(N, pvals)
    nz = np.flatnonzero(drawn)
    return drawn[nz[0]: nz[-1] + 1], int(nz[0])


def wf_step(
    c: CountProfile,
    p: RatchetParams,
    rng: np.random.Generator,
    kernel: Optional[WrightFisherKernel] = None,
) -> CountProfile:
    """
    One Wright-Fisher generation. If the best class empties the offset moves to
    the first occupied class; the jump is the number of clicks.
    """
    if c.N != p.N:
        raise RatchetValueError(f"count profile holds {c.N} individuals, params say N={p.N}")
    kernel = kernel or WrightFisherKernel(p.lam, p.s)
    counts, jump = _advance(np.asarray(c.counts), p.N, kernel, rng)
    return CountProfile(offset=c.offset + jump, counts=counts)


def initial_counts(p: RatchetParams, rng: np.random.Generator) -> CountProfile:
    """N individuals sampled from Poisson(theta); everyone in class 0 when lambda = 0."""
    if p.lam == 0:
        return CountProfile(offset=0, counts=np.array([p.N]))
    if p.s == 0:
        raise RatchetValueError("a stationary start needs s > 0 when lambda > 0")
    drawn = rng.multinomial(p.N, poisson_profile(p.theta).freqs)
    nz = np.flatnonzero(drawn)
    return CountProfile(offset=0, counts=drawn[nz[0]: nz[-1] + 1])


def burn_in_cap(p: RatchetParams) -> int:
    """Generations allowed for the first click: a multiple of Haigh's click time, 0 without mutation."""
    if p.lam == 0:
        return 0
    haigh = max(haigh_click_time(p), 1.0)
    return int(math.ceil(RecorderDefaults.BURN_IN_HAIGH_MULTIPLE * haigh))


# =============================================================================
# Runs
# =============================================================================
def wf_run(
    p: RatchetParams,
    generations: int,
    recorder_config: Optional[RecorderConfig] = None,
    rng: Optional[np.random.Generator] = None,
    seed: Optional[int] = None,
) -> RunStats:
    """
    Start from a multinomial Poisson(theta) sample, burn in through the first
    click, then record `generations` generations.
    """
    if generations < 1:
        raise RatchetValueError(f"generations must be >= 1, got {generations}")
    if rng is None:
        raise RatchetValueError("wf_run needs an explicit random generator")
    config = recorder_config or RecorderConfig()
    pi0 = p.pi0 if p.s > 0 else 1.0
    recorder = RunRecorder(p, config, pi0)
    kernel = WrightFisherKernel(p.lam, p.s)
    N = p.N
    logger.info("wf_run start: N=%d lambda=%g s=%g seed=%s", N, p.lam, p.s, seed)

    start = initial_counts(p, rng)
    counts, offset = np.asarray(start.counts), start.offset

    cap = burn_in_cap(p)
    burn = 0
    burned = False
    while burn < cap:
        counts, jump = _advance(counts, N, kernel, rng)
        burn += 1
        offset += jump
        if jump:
            burned = True
            break
    if not burned:
        logger.info("wf_run: no click within %d burn-in generations; zero-click outcome", burn)
        return recorder.finish(
            simulator="wf",
            seed=seed,
            generations=0,
            burn_in_generations=burn,
            burn_in_completed=False,
        )

    measured = 0
    for t in range(1, int(generations) + 1):
        counts, jump = _advance(counts, N, kernel, rng)
        offset += jump
        measured = t
        y0 = counts[0] / N
        if jump:
            recorder.click(t, jump, y0)
        recorder.occupy(y0)
        if t % config.scatter_interval == 0:
            j = np.arange(counts.size)
            recorder.sample(t, y0, float(np.dot(j, counts)) / N)
        if t % config.fitness_interval == 0:
            w = float(np.dot(counts, kernel.fitness_powers(counts.size))) / N
            recorder.fitness(t, w)
        if recorder.done():
            break

    stats = recorder.finish(
        simulator="wf",
        seed=seed,
        generations=measured,
        burn_in_generations=burn,
        burn_in_completed=True,
    )
    logger.info(
        "wf_run end: %d clicks in %d generations (burn-in %d)",
        stats.total_clicks, measured, burn,
    )
    return stats
