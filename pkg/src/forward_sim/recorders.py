# src/forward_sim/recorders.py
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from src.config import RecorderDefaults
from src.core import RatchetParams
from src.errors import RatchetValueError


# =============================================================================
# Records
# =============================================================================
@dataclass(frozen=True)
class ClickRecord:
    time: float
    clicks_at_event: int
    new_best_freq: float


@dataclass(frozen=True)
class RecorderConfig:
    """What a run records. hist_edges=None means width pi0/50 on [0, 5 pi0]."""

    hist_edges: Optional[Sequence[float]] = None
    scatter_interval: int = RecorderDefaults.SCATTER_INTERVAL
    fitness_interval: int = RecorderDefaults.FITNESS_INTERVAL
    stop_after_clicks: Optional[int] = None

    def __post_init__(self) -> None:
        if self.scatter_interval < 1 or self.fitness_interval < 1:
            raise RatchetValueError("recorder intervals must be >= 1 generation")
        if self.stop_after_clicks is not None and self.stop_after_clicks < 1:
            raise RatchetValueError("stop_after_clicks must be >= 1 when given")

    def edges_for(self, pi0: float) -> np.ndarray:
        if self.hist_edges is not None:
            edges = np.asarray(self.hist_edges, dtype=float)
            if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
                raise RatchetValueError("hist_edges must be strictly increasing with >= 2 entries")
            return edges
        bins = int(RecorderDefaults.HIST_BINS_PER_PI0 * RecorderDefaults.HIST_SPAN_PI0)
        return np.linspace(0.0, RecorderDefaults.HIST_SPAN_PI0 * pi0, bins + 1)


# =============================================================================
# Histogram
# =============================================================================
@dataclass
class Histogram:
    """Weighted histogram; values outside the edges fall into the end bins."""

    edges: np.ndarray
    weights: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.edges = np.asarray(self.edges, dtype=float)
        if self.weights is None:
            self.weights = np.zeros(self.edges.size - 1)

    def _index(self, values: np.ndarray) -> np.ndarray:
        idx = np.searchsorted(self.edges, values, side="right") - 1
        return np.clip(idx, 0, self.weights.size - 1)

    def add(self, value: float, weight: float = 1.0) -> None:
        self.weights[int(self._index(np.asarray([value]))[0])] += weight

    def add_many(self, values: np.ndarray, weight: float = 1.0) -> None:
        if values.size:
            self.weights += np.bincount(
                self._index(values), minlength=self.weights.size
            ) * weight

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def masses(self) -> np.ndarray:
        total = self.total
        if total == 0:
            return np.zeros_like(self.weights)
        return self.weights / total

    def mode(self) -> float:
        """Centre of the heaviest bin."""
        i = int(np.argmax(self.weights))
        return float(0.5 * (self.edges[i] + self.edges[i + 1]))

    def merge(self, other: "Histogram") -> "Histogram":
        if not np.array_equal(self.edges, other.edges):
            raise RatchetValueError("cannot merge histograms with different bin edges")
        return Histogram(self.edges.copy(), self.weights + other.weights)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"bin_lo": self.edges[:-1], "bin_hi": self.edges[1:], "mass": self.masses()}
        )


# =============================================================================
# Run statistics
# =============================================================================
@dataclass
class RunStats:
    params: RatchetParams
    simulator: str
    seed: Optional[int]
    generations: float
    burn_in_generations: float
    burn_in_completed: bool
    clicks: List[ClickRecord]
    histogram: Histogram
    scatter: np.ndarray
    fitness: np.ndarray
    scatter_interval: int
    fitness_interval: int
    y0_sum: float = 0.0

    @property
    def total_clicks(self) -> int:
        return int(sum(c.clicks_at_event for c in self.clicks))

    @property
    def exposure_generations(self) -> float:
        """Generations the click count refers to (burn-in when no click ever came)."""
        return self.generations if self.burn_in_completed else self.burn_in_generations

    def click_rate_per_n_generations(self) -> float:
        exposure = self.exposure_generations
        if exposure <= 0:
            return 0.0
        return self.total_clicks * self.params.N / exposure

    def mean_interclick_time(self) -> Optional[float]:
        if not self.total_clicks:
            return None
        return self.exposure_generations / self.total_clicks

    @property
    def mean_y0(self) -> Optional[float]:
        if self.histogram.total <= 0:
            return None
        return self.y0_sum / self.histogram.total

    def merge(self, other: "RunStats") -> "RunStats":
        """Concatenate `other` after this run (clock of `other` shifted by our length)."""
        if other.params != self.params or other.simulator != self.simulator:
            raise RatchetValueError("only runs of the same simulator and params can be merged")
        shift = self.generations
        clicks = self.clicks + [replace(c, time=c.time + shift) for c in other.clicks]
        scatter = _shifted(other.scatter, shift)
        fitness = _shifted(other.fitness, shift)
        return replace(
            self,
            generations=self.generations + other.generations,
            burn_in_generations=self.burn_in_generations + other.burn_in_generations,
            burn_in_completed=self.burn_in_completed or other.burn_in_completed,
            clicks=clicks,
            histogram=self.histogram.merge(other.histogram),
            scatter=np.vstack([self.scatter, scatter]),
            fitness=np.vstack([self.fitness, fitness]),
            y0_sum=self.y0_sum + other.y0_sum,
        )

    # ---- tables -----------------------------------------------------------
    def clicks_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "time": [c.time for c in self.clicks],
                "clicks_at_event": [c.clicks_at_event for c in self.clicks],
                "new_best_freq": [c.new_best_freq for c in self.clicks],
            }
        )

    def hist_frame(self) -> pd.DataFrame:
        return self.histogram.to_frame()

    def scatter_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.scatter, columns=["generation", "y0", "m1"])

    def fitness_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.fitness, columns=["generation", "mean_fitness"])

    def summary(self) -> dict:
        return {
            "simulator": self.simulator,
            "generations": self.generations,
            "burn_in_generations": self.burn_in_generations,
            "burn_in_completed": self.burn_in_completed,
            "clicks": self.total_clicks,
            "click_rate_per_N_generations": self.click_rate_per_n_generations(),
            "mean_y0": self.mean_y0,
            "scatter_interval": self.scatter_interval,
            "fitness_interval": self.fitness_interval,
        }


def _shifted(table: np.ndarray, shift: float) -> np.ndarray:
    out = np.array(table, dtype=float, copy=True)
    if out.size:
        out[:, 0] += shift
    return out


# =============================================================================
# Builder used by the simulators
# =============================================================================
class RunRecorder:
    def __init__(self, params: RatchetParams, config: RecorderConfig, pi0: float):
        self.params = params
        self.config = config
        self.histogram = Histogram(config.edges_for(pi0))
        self.clicks: List[ClickRecord] = []
        self._scatter: List[tuple] = []
        self._fitness: List[tuple] = []
        self._clicks_total = 0
        self.y0_sum = 0.0

    @property
    def clicks_total(self) -> int:
        return self._clicks_total

    def done(self) -> bool:
        target = self.config.stop_after_clicks
        return target is not None and self._clicks_total >= target

    def click(self, time: float, jump: int, new_best_freq: float) -> None:
        self.clicks.append(ClickRecord(float(time), int(jump), float(new_best_freq)))
        self._clicks_total += int(jump)

    def occupy(self, y0: float, weight: float = 1.0) -> None:
        self.histogram.add(y0, weight)
        self.y0_sum += y0 * weight

    def sample(self, time: float, y0: float, m1: float) -> None:
        self._scatter.append((float(time), float(y0), float(m1)))

    def fitness(self, time: float, w: float) -> None:
        self._fitness.append((float(time), float(w)))

    def finish(
        self,
        *,
        simulator: str,
        seed: Optional[int],
        generations: float,
        burn_in_generations: float,
        burn_in_completed: bool,
    ) -> RunStats:
        return RunStats(
            params=self.params,
            simulator=simulator,
            seed=seed,
            generations=float(generations),
            burn_in_generations=float(burn_in_generations),
            burn_in_completed=burn_in_completed,
            clicks=list(self.clicks),
            histogram=self.histogram,
            scatter=np.array(self._scatter, dtype=float).reshape(-1, 3),
            fitness=np.array(self._fitness, dtype=float).reshape(-1, 2),
            scatter_interval=self.config.scatter_interval,
            fitness_interval=self.config.fitness_interval,
            y0_sum=self.y0_sum,
        )
