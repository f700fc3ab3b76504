# src/deterministic.py
"""
Infinite-population dynamics of the ratchet.

Profiles are stored relative to their best (first stored) class: index j of
`freqs` is the absolute class `offset + j`. Means and cumulants are taken in
the relative index, i.e. they describe the profile Y seen from the best class.

The exact continuous-time solution is applied as tilt-then-convolve: reweight
class j by exp(-s t j), renormalise, then convolve with Poisson(theta(1 - e^{-st})).
`evolve_ode` integrates the same system directly and is the oracle for it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import pandas as pd
from scipy import special, stats

from src.config import Tolerances, WindowLimits
from src.core import RatchetParams, Regime, RegimeKind, regime_prefactor, relaxation_prefactor
from src.errors import NumericalError, RatchetValueError
from src.utils import check_window, leading_zeros, poisson_weights, poisson_window, trim_tail

logger = logging.getLogger(__name__)


# =============================================================================
# Types
# =============================================================================
@dataclass(frozen=True, eq=False)
class TypeProfile:
    """Frequencies of classes offset, offset+1, ...; freqs[0] is the best class Y0."""

    offset: int
    freqs: np.ndarray

    def __post_init__(self) -> None:
        arr = np.array(self.freqs, dtype=float)
        if arr.ndim != 1 or arr.size == 0:
            raise RatchetValueError("A profile needs a non-empty one-dimensional frequency vector.")
        if self.offset < 0:
            raise RatchetValueError(f"offset must be >= 0, got {self.offset}")
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise RatchetValueError("Profile frequencies must be finite and non-negative.")
        total = float(arr.sum())
        if abs(total - 1.0) > Tolerances.SUM_TO_ONE:
            raise RatchetValueError(f"Profile frequencies must sum to 1, got {total!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "freqs", arr)
        object.__setattr__(self, "offset", int(self.offset))

    @classmethod
    def from_values(cls, values: np.ndarray, offset: int = 0) -> "TypeProfile":
        """Drop leading empty classes (advancing offset), trim the tail, renormalise."""
        arr = np.asarray(values, dtype=float)
        arr = np.where(arr > 0, arr, 0.0)
        shift = leading_zeros(arr)
        arr = trim_tail(arr[shift:])
        return cls(offset=int(offset) + shift, freqs=arr / arr.sum())

    def __len__(self) -> int:
        return int(self.freqs.size)

    @property
    def best(self) -> float:
        return float(self.freqs[0])

    @property
    def classes(self) -> np.ndarray:
        return self.offset + np.arange(self.freqs.size)

    def mean(self) -> float:
        return float(np.dot(np.arange(self.freqs.size), self.freqs))

    def absolute_mean(self) -> float:
        return self.offset + self.mean()

    def central_moment(self, order: int) -> float:
        j = np.arange(self.freqs.size)
        return float(np.dot((j - self.mean()) ** order, self.freqs))

    def padded(self, length: int) -> np.ndarray:
        if length < self.freqs.size:
            raise RatchetValueError(f"cannot pad a {self.freqs.size}-class profile to {length}")
        out = np.zeros(length)
        out[: self.freqs.size] = self.freqs
        return out

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"absolute_class_index": self.classes, "frequency": self.freqs})


@dataclass(frozen=True, eq=False)
class CumulantVector:
    """kappa[0] = -log x0, kappa[1] = mean, kappa[2] = variance, ..."""

    kappa: np.ndarray

    @property
    def order(self) -> int:
        return int(self.kappa.size) - 1

    def __getitem__(self, k: int) -> float:
        return float(self.kappa[k])


# =============================================================================
# Reference profiles
# =============================================================================
def _window_or_raise(mu: float, K: Optional[int], classes_after: int, where: str) -> int:
    """Validate a user window K; classes_after is the first class left out of it."""
    required = poisson_window(mu)
    if K is None:
        return required
    tail = float(stats.poisson.sf(classes_after - 1, mu)) if classes_after > 0 else 1.0
    if tail >= Tolerances.TAIL_MASS:
        raise RatchetValueError(
            f"{where}: K={K} leaves Poisson({mu:g}) tail mass {tail:.3g}; "
            f"K >= {required} is required for tail < {Tolerances.TAIL_MASS:g}."
        )
    return int(K)


def poisson_profile(mu: float, K: Optional[int] = None) -> TypeProfile:
    if not mu > 0:
        raise RatchetValueError(f"Poisson mean must be > 0, got {mu}")
    K = _window_or_raise(mu, K, K if K is not None else 0, "poisson_profile")
    w = poisson_weights(mu, K)
    return TypeProfile(offset=0, freqs=w / w.sum())


def pi_tilde(theta: float, K: Optional[int] = None) -> TypeProfile:
    """Profile right after a click: the old best class's mass spread over the others."""
    if not theta > 0:
        raise RatchetValueError(f"theta must be > 0, got {theta}")
    if K is None:
        K = poisson_window(theta)
    else:
        K = _window_or_raise(theta, K, K + 1, "pi_tilde")
    w = poisson_weights(theta, K + 1)[1:] / (-math.expm1(-theta))
    return TypeProfile(offset=0, freqs=w / w.sum())


def ppa(y0: float, theta: float, K: Optional[int] = None) -> TypeProfile:
    """Poisson profile approximation with best-class frequency y0."""
    if not 0 < y0 < 1:
        raise RatchetValueError(f"PPA needs 0 < y0 < 1, got {y0}")
    if not theta > 0:
        raise RatchetValueError(f"theta must be > 0, got {theta}")
    K = _window_or_raise(theta, K, K if K is not None else 0, "ppa")
    w = poisson_weights(theta, K)
    w[1:] *= (1.0 - y0) / (-math.expm1(-theta))
    w[0] = y0
    return TypeProfile(offset=0, freqs=w / w.sum())


# =============================================================================
# Cumulants
# =============================================================================
def cumulants_of(x: TypeProfile, K: int) -> CumulantVector:
    """
    kappa_0..kappa_K. Cumulants of order >= 2 come from central moments through
    the recursion kappa_n = mu_n - sum_{i<n} C(n-1, i-1) kappa_i mu_{n-i}.
    Orders above 20 are refused: the recursion loses digits at roughly a factor
    of the class count per order.
    """
    if K < 0 or K > WindowLimits.MAX_CUMULANT_ORDER:
        raise RatchetValueError(
            f"cumulant order must lie in [0, {WindowLimits.MAX_CUMULANT_ORDER}], got {K}"
        )
    if x.best <= 0:
        raise RatchetValueError("kappa_0 = -log x0 is undefined for x0 = 0.")

    kappa = np.zeros(K + 1)
    kappa[0] = -math.log(x.best)
    if K == 0:
        return CumulantVector(kappa)

    mean = x.mean()
    j = np.arange(len(x)) - mean
    central = np.array([np.dot(j ** n, x.freqs) for n in range(K + 1)])
    central[1] = 0.0

    centred = np.zeros(K + 1)
    for n in range(2, K + 1):
        acc = central[n]
        for i in range(1, n):
            acc -= special.comb(n - 1, i - 1, exact=True) * centred[i] * central[n - i]
        centred[n] = acc

    kappa[1] = mean
    kappa[2:] = centred[2:]
    return CumulantVector(kappa)


# =============================================================================
# Continuous-time dynamics
# =============================================================================
def _tilted(freqs: np.ndarray, st: float) -> np.ndarray:
    """freqs_j e^{-st j}, renormalised, computed in log space."""
    j = np.arange(freqs.size)
    with np.errstate(divide="ignore"):
        logw = np.log(freqs) - st * j
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def _mutation_mean(p: RatchetParams, t: float) -> float:
    return p.theta * -math.expm1(-p.s * t)


def evolve_closed(x0: TypeProfile, p: RatchetParams, t: float) -> TypeProfile:
    if t < 0:
        raise RatchetValueError(f"t must be >= 0, got {t}")
    if t == 0:
        return x0
    w = _tilted(x0.freqs, p.s * t)
    mu = _mutation_mean(p, t)
    kernel = poisson_weights(mu, poisson_window(mu))
    out = trim_tail(np.convolve(w, kernel))
    check_window(out.size, "evolve_closed")
    return TypeProfile.from_values(out, offset=x0.offset)


def cds_drift(x: np.ndarray, lam: float, s: float) -> np.ndarray:
    """
    Right-hand side (s(M1 - k) - lambda) x_k + lambda x_{k-1} on a finite window.
    The last class is closed (keeps its mutational outflow), so the entries sum
    to zero up to rounding.
    """
    k = np.arange(x.size)
    total = x.sum()
    m1 = np.dot(k, x) / total
    d = (s * (m1 - k) - lam) * x
    d[1:] += lam * x[:-1]
    d[-1] += lam * x[-1]
    return d


def _rk4_integrate(x: np.ndarray, lam: float, s: float, t: float, dt: float) -> np.ndarray:
    steps = max(1, math.ceil(t / dt - 1e-12))
    h = t / steps
    y = x.copy()
    for _ in range(steps):
        k1 = cds_drift(y, lam, s)
        k2 = cds_drift(y + 0.5 * h * k1, lam, s)
        k3 = cds_drift(y + 0.5 * h * k2, lam, s)
        k4 = cds_drift(y + h * k3, lam, s)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if y.min() < Tolerances.NEGATIVE_ENTRY:
            raise NumericalError(
                f"evolve_ode became unstable (entry {y.min():.3g}); reduce dt={dt}."
            )
    return y


def evolve_ode(x0: TypeProfile, p: RatchetParams, t: float, dt: float) -> TypeProfile:
    """Fixed-step RK4 on the truncated system; the window is padded for the mutational spread."""
    if t < 0:
        raise RatchetValueError(f"t must be >= 0, got {t}")
    if not dt > 0:
        raise RatchetValueError(f"dt must be > 0, got {dt}")
    if t == 0:
        return x0
    K = len(x0) + poisson_window(_mutation_mean(p, t))
    check_window(K, "evolve_ode")
    limit = 0.1 / max(p.s * K, p.lam)
    if dt > limit:
        raise RatchetValueError(
            f"dt={dt} exceeds the RK4 stability limit 0.1/max(s*K, lambda)={limit:.4g} "
            f"for a {K}-class window."
        )
    y = _rk4_integrate(x0.padded(K), p.lam, p.s, t, dt)
    return TypeProfile.from_values(y, offset=x0.offset)


def closed_observables(x0: TypeProfile, p: RatchetParams, t: float) -> Tuple[float, float]:
    """(x0(t), M1(t)) straight from the generating function of the initial profile."""
    if x0.best <= 0:
        raise RatchetValueError("closed_observables needs x0(0) > 0.")
    if t < 0:
        raise RatchetValueError(f"t must be >= 0, got {t}")
    w = _tilted(x0.freqs, p.s * t)
    mu = _mutation_mean(p, t)
    m1 = float(np.dot(np.arange(w.size), w)) + mu
    return float(w[0]) * math.exp(-mu), m1


def phase_one(theta: float, s: float, t: float) -> Tuple[float, float]:
    """Best-class frequency and mean after time t, started from pi_tilde."""
    if not theta > 1:
        raise RatchetValueError(f"phase_one needs theta > 1, got {theta}")
    if t < 0:
        raise RatchetValueError(f"t must be >= 0, got {t}")
    r = theta * math.exp(-s * t)
    x0 = math.exp(-theta) * r / -math.expm1(-r)
    m1 = theta - 1.0 + r / math.expm1(r)
    return x0, m1


def mean_reversion_ratio(r: float) -> float:
    """c/s of the phase-one mean reversion; lies in [1, 1.25]."""
    if not r > 0:
        raise RatchetValueError(f"r must be > 0, got {r}")
    if r < 1e-3:
        return 1.0 + r / 6.0 - r * r / 36.0 - r ** 3 / 270.0
    em = -math.expm1(-r)
    num = r * em - r * r * math.exp(-r)
    den = r * em - em * em
    return num / den


# =============================================================================
# Relaxed Poisson profile approximations
# =============================================================================
def relaxed_m1(y0_at_Atau: float, theta: float, A: float) -> float:
    """M1 after relaxation for A*tau, as a function of the relaxed best-class frequency."""
    if not theta > 0:
        raise RatchetValueError(f"theta must be > 0, got {theta}")
    if A < 0:
        raise RatchetValueError(f"A must be >= 0, got {A}")
    if not 0 <= y0_at_Atau < 1:
        raise RatchetValueError(f"y0 must lie in [0, 1), got {y0_at_Atau}")
    eta = theta ** (1.0 - A)
    return theta + relaxation_prefactor(eta) * (1.0 - y0_at_Atau / math.exp(-theta))


def relaxed_ppa(y0: float, theta: float, A: float) -> Tuple[float, float]:
    """(y0(A tau), M1(A tau)) for the PPA started at y0."""
    if not 0 <= y0 < 1:
        raise RatchetValueError(f"y0 must lie in [0, 1), got {y0}")
    if not theta > 0 or A < 0:
        raise RatchetValueError(f"need theta > 0 and A >= 0, got theta={theta}, A={A}")
    pi0 = math.exp(-theta)
    eta = theta ** (1.0 - A)
    if eta == 0:
        return (pi0, theta) if y0 > 0 else (0.0, theta + 1.0)
    e_eta = math.exp(eta)
    denom = y0 * (1.0 - pi0 * e_eta) + pi0 * math.expm1(eta)
    y_relaxed = y0 * pi0 * e_eta * (1.0 - pi0) / denom
    m1 = theta + eta * (pi0 - y0) / denom
    return y_relaxed, m1


def regime_m1(regime: Regime, y0: float, theta: float) -> float:
    """Predicted M1 given Y0 under a relaxation regime; every map passes through (pi0, theta)."""
    pi0 = math.exp(-theta)
    if regime.kind is RegimeKind.SMALL_A:
        return theta * (1.0 - y0) / (1.0 - pi0)
    if regime.kind is RegimeKind.NEUTRAL:
        raise RatchetValueError("The neutral regime carries no Y0 -> M1 relationship.")
    return theta + regime_prefactor(regime, theta) * (1.0 - y0 / pi0)


def regime_slope(regime: Regime, theta: float) -> float:
    """dM1/dY0 of regime_m1."""
    pi0 = math.exp(-theta)
    if regime.kind is RegimeKind.SMALL_A:
        return -theta / (1.0 - pi0)
    if regime.kind is RegimeKind.NEUTRAL:
        raise RatchetValueError("The neutral regime carries no Y0 -> M1 relationship.")
    return -regime_prefactor(regime, theta) / pi0


# =============================================================================
# Discrete-time deterministic map
# =============================================================================
def mean_fitness(x: TypeProfile, s: float) -> float:
    return float(np.dot(x.freqs, (1.0 - s) ** np.arange(len(x))))


def best_class_success_probability(x: TypeProfile, p: RatchetParams) -> float:
    """Chance that one offspring descends from the best class and gains no mutation."""
    return x.best * math.exp(-p.lam) / mean_fitness(x, p.s)


def discrete_map(x: TypeProfile, lam: float, s: float) -> TypeProfile:
    """
    One generation of the infinite-population map: select proportionally to
    (1-s)^k, then add Poisson(lambda) mutations.
    """
    w = x.freqs * (1.0 - s) ** np.arange(len(x))
    W = w.sum()
    if not W > 0:
        raise NumericalError("Mean fitness vanished; the profile carries no mass.")
    kernel = poisson_weights(lam, poisson_window(lam))
    out = trim_tail(np.convolve(w / W, kernel))
    check_window(out.size, "discrete_map")
    return TypeProfile.from_values(out, offset=x.offset)


def evolve_discrete(x: TypeProfile, p: RatchetParams, generations: int) -> TypeProfile:
    if generations < 0:
        raise RatchetValueError(f"generations must be >= 0, got {generations}")
    for _ in range(int(generations)):
        x = discrete_map(x, p.lam, p.s)
    return x
