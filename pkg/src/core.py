# src/core.py
"""
Parameter algebra for the ratchet: derived quantities, the gamma scaling,
mean-reversion coefficients of the rescaled one-dimensional diffusions, the
threshold search behind the rare/moderate clicking boundary, and Haigh's
empirical click-time formula.

All logarithms are natural.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from scipy import optimize

from src.config import HAIGH_PREFACTOR, ExperimentDefaults
from src.errors import RatchetValueError


# =============================================================================
# Parameters
# =============================================================================
@dataclass(frozen=True)
class RatchetParams:
    """Population size N, mutation rate per genome per generation, selection coefficient."""

    N: int
    lam: float
    s: float
    strict: bool = True

    def __post_init__(self) -> None:
        if int(self.N) != self.N or self.N < 1:
            raise RatchetValueError(f"N must be a positive integer, got {self.N}")
        if self.strict:
            if not self.lam > 0:
                raise RatchetValueError(f"lambda must be > 0, got {self.lam}")
            if not 0 < self.s < 1:
                raise RatchetValueError(f"s must lie in (0, 1), got {self.s}")
        else:
            if self.lam < 0 or not 0 <= self.s < 1:
                raise RatchetValueError(
                    f"degenerate params still need lambda >= 0 and 0 <= s < 1, "
                    f"got lambda={self.lam}, s={self.s}"
                )

    @classmethod
    def degenerate(cls, N: int, lam: float, s: float) -> "RatchetParams":
        """Zero mutation and/or zero selection; only the simulators accept these."""
        return cls(N=N, lam=lam, s=s, strict=False)

    @property
    def n_lambda(self) -> float:
        return self.N * self.lam

    @property
    def theta(self) -> float:
        if self.s == 0:
            raise RatchetValueError("theta = lambda/s is undefined for s = 0")
        return self.lam / self.s

    @property
    def pi0(self) -> float:
        return math.exp(-self.theta)


@dataclass(frozen=True)
class DerivedParams:
    theta: float
    pi0: float
    n0: float
    gamma: Optional[float]
    tau: Optional[float]


def _require_n_lambda(n_lambda: float) -> None:
    if not n_lambda > 1:
        raise RatchetValueError(
            f"gamma needs N*lambda > 1 (log(N*lambda) > 0), got N*lambda={n_lambda}"
        )


def gamma_of(N: int, lam: float, s: float) -> float:
    n_lambda = N * lam
    _require_n_lambda(n_lambda)
    return n_lambda / (N * s * math.log(n_lambda))


def derive_params(p: RatchetParams, require_gamma: bool = True) -> DerivedParams:
    """theta, pi0, n0, gamma and tau. tau is None when theta <= 1."""
    theta = p.theta
    pi0 = math.exp(-theta)
    gamma: Optional[float] = None
    if p.n_lambda > 1:
        gamma = gamma_of(p.N, p.lam, p.s)
    elif require_gamma:
        _require_n_lambda(p.n_lambda)
    tau = math.log(theta) / p.s if theta > 1 else None
    return DerivedParams(theta=theta, pi0=pi0, n0=p.N * pi0, gamma=gamma, tau=tau)


def solve_s_for_gamma(N: int, lam: float, gamma: float) -> float:
    """Selection coefficient giving the requested gamma at fixed N and lambda."""
    n_lambda = N * lam
    _require_n_lambda(n_lambda)
    if not gamma > 0:
        raise RatchetValueError(f"gamma must be > 0, got {gamma}")
    s = lam / (gamma * math.log(n_lambda))
    if not 0 < s < 1:
        raise RatchetValueError(
            f"gamma={gamma} at N={N}, lambda={lam} needs s={s}, outside (0, 1)"
        )
    return s


# =============================================================================
# Regimes of the one-dimensional approximation
# =============================================================================
class RegimeKind(str, Enum):
    SMALL_A = "small-a"
    A_EQUALS_ONE = "a1"
    LARGE_A = "large-a"
    GENERIC = "generic"
    INTERPOLATED = "interp"
    NEUTRAL = "neutral"


@dataclass(frozen=True)
class Regime:
    """
    Relaxation regime. GENERIC carries the relaxation multiple A (eta = theta^(1-A));
    INTERPOLATED carries a fixed logistic prefactor k; NEUTRAL has zero drift.
    """

    kind: RegimeKind
    A: Optional[float] = None
    k: Optional[float] = None

    def __post_init__(self) -> None:
        if self.kind is RegimeKind.GENERIC and not (self.A is not None and self.A > 0):
            raise RatchetValueError(f"Generic regime needs A > 0, got {self.A}")
        if self.kind is RegimeKind.INTERPOLATED and not (self.k is not None and self.k > 0):
            raise RatchetValueError(f"Interpolated regime needs k > 0, got {self.k}")

    @classmethod
    def small_a(cls) -> "Regime":
        return cls(RegimeKind.SMALL_A)

    @classmethod
    def a_equals_one(cls) -> "Regime":
        return cls(RegimeKind.A_EQUALS_ONE)

    @classmethod
    def large_a(cls) -> "Regime":
        return cls(RegimeKind.LARGE_A)

    @classmethod
    def generic(cls, A: float) -> "Regime":
        return cls(RegimeKind.GENERIC, A=float(A))

    @classmethod
    def interpolated(cls, k: float) -> "Regime":
        return cls(RegimeKind.INTERPOLATED, k=float(k))

    @classmethod
    def neutral(cls) -> "Regime":
        return cls(RegimeKind.NEUTRAL)

    @classmethod
    def parse(cls, text: str) -> "Regime":
        """'small-a', 'a1', 'large-a', 'neutral', 'generic:<A>', 'interp:<k>'."""
        raw = (text or "").strip().lower()
        name, _, arg = raw.partition(":")
        try:
            kind = RegimeKind(name)
        except ValueError:
            valid = ", ".join(k.value for k in RegimeKind)
            raise RatchetValueError(f"Unknown regime '{text}'. Expected one of: {valid}") from None
        if kind is RegimeKind.GENERIC:
            return cls.generic(_parse_float(arg, "A"))
        if kind is RegimeKind.INTERPOLATED:
            return cls.interpolated(_parse_float(arg, "k"))
        if arg:
            raise RatchetValueError(f"Regime '{name}' takes no argument, got '{arg}'")
        return cls(kind)

    @property
    def label(self) -> str:
        if self.kind is RegimeKind.GENERIC:
            return f"generic:{self.A:g}"
        if self.kind is RegimeKind.INTERPOLATED:
            return f"interp:{self.k:g}"
        return self.kind.value

    def eta(self, theta: float) -> Optional[float]:
        if self.kind is RegimeKind.A_EQUALS_ONE:
            return 1.0
        if self.kind is RegimeKind.LARGE_A:
            return 0.0
        if self.kind is RegimeKind.GENERIC:
            return theta ** (1.0 - self.A)
        return None


def _parse_float(text: str, name: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise RatchetValueError(f"Regime parameter {name} must be a number, got '{text}'") from None


def relaxation_prefactor(eta: float) -> float:
    """eta/(e^eta - 1), with the limit 1 at eta = 0."""
    if eta == 0:
        return 1.0
    return eta / math.expm1(eta)


def regime_prefactor(regime: Regime, theta: float) -> float:
    """Prefactor c/s of the logistic drift c(1 - y/pi0)y."""
    if regime.kind is RegimeKind.A_EQUALS_ONE:
        return HAIGH_PREFACTOR
    if regime.kind is RegimeKind.INTERPOLATED:
        return float(regime.k)
    eta = regime.eta(theta)
    if eta is None:
        raise RatchetValueError(f"Regime {regime.label} has no logistic prefactor")
    return relaxation_prefactor(eta)


# =============================================================================
# Rescaled equations and the threshold table
# =============================================================================
def mean_reversion_coefficient(regime: Regime, N: int, lam: float, s: float) -> float:
    """
    Coefficient c in dZ = c(1-Z)Z dt + sqrt(Z) dW for Z(t) = Y0(N pi0 t)/pi0.

    small A: N lambda pi0^2 = (N lambda)^(1-2 gamma); logistic regimes:
    prefactor * N s pi0 = prefactor * (N lambda)^(1-gamma) / (gamma log(N lambda)).
    """
    gamma = gamma_of(N, lam, s)
    n_lambda = N * lam
    if regime.kind is RegimeKind.SMALL_A:
        return n_lambda ** (1.0 - 2.0 * gamma)
    if regime.kind is RegimeKind.NEUTRAL:
        return 0.0
    prefactor = regime_prefactor(regime, lam / s)
    return prefactor * n_lambda ** (1.0 - gamma) / (gamma * math.log(n_lambda))


def _a1_coefficient(n_lambda: float, gamma: float) -> float:
    return HAIGH_PREFACTOR * n_lambda ** (1.0 - gamma) / (gamma * math.log(n_lambda))


def threshold_n_lambda(
    gamma: float,
    c: float = ExperimentDefaults.THRESHOLD_COEFFICIENT,
) -> float:
    """
    Smallest N*lambda at which the A=1 rescaled coefficient reaches c, searched
    by bisection in log(N lambda). Returns inf if none below 1e300.

    The coefficient falls from N lambda = e to its minimum at
    log(N lambda) = 1/(1-gamma) and grows after that. If it already reaches c
    at e, e is the answer; otherwise the root lies right of the minimum.
    """
    if not 0 < gamma < 1:
        raise RatchetValueError(f"gamma must lie in (0, 1), got {gamma}")
    if not c > 0:
        raise RatchetValueError(f"c must be > 0, got {c}")

    def excess(u: float) -> float:
        return math.log(_a1_coefficient(math.exp(u), gamma)) - math.log(c)

    if excess(1.0) >= 0:
        return math.e
    lo = max(1.0, 1.0 / (1.0 - gamma))
    hi = math.log(ExperimentDefaults.THRESHOLD_UPPER)
    if excess(hi) < 0:
        return math.inf

    root = optimize.bisect(excess, lo, hi, xtol=1e-6)
    # keep the returned point on the side where the coefficient is >= c
    while excess(root) < 0:
        root += 1e-6
    return math.exp(root)


# =============================================================================
# Empirical and rule-of-thumb rates
# =============================================================================
def haigh_click_time(p: RatchetParams) -> float:
    """Haigh's empirical mean time between clicks, in generations."""
    theta = p.theta
    if not theta > 0:
        raise RatchetValueError(f"Haigh's formula needs theta > 0, got {theta}")
    return 4.0 * p.N * math.exp(-theta) + 7.0 * math.log(theta) + 2.0 / p.s - 20.0


def rule_of_thumb_rate(p: RatchetParams) -> Optional[float]:
    """(N lambda)^gamma clicks per N generations, only claimed for gamma in (1/2, 1)."""
    gamma = gamma_of(p.N, p.lam, p.s)
    if not 0.5 < gamma < 1.0:
        return None
    return p.n_lambda ** gamma
