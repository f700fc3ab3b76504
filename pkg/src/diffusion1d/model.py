# src/diffusion1d/model.py
"""
One-dimensional diffusions for the best-class frequency Y0.

All regimes share sigma^2(y) = y/N and a drift whose ratio 2b/sigma^2 is affine
in y, 2b(y)/sigma^2(y) = alpha - beta*y. The scale density therefore has the
closed form log s(y) = -(alpha*y - beta*y^2/2), referenced at y = 0.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from src.config import DiffusionDefaults
from src.core import (
    RatchetParams,
    Regime,
    RegimeKind,
    derive_params,
    mean_reversion_coefficient,
    regime_prefactor,
)
from src.errors import RatchetValueError


def _logistic_rate(regime: Regime, p: RatchetParams) -> float:
    """c in the logistic drift c(1 - y/pi0)y."""
    return p.s * regime_prefactor(regime, p.theta)


def drift(regime: Regime, y, p: RatchetParams):
    """Drift b(y) of Y0; accepts scalars or numpy arrays."""
    pi0 = p.pi0
    if regime.kind is RegimeKind.SMALL_A:
        return p.lam * (pi0 - y) * y
    if regime.kind is RegimeKind.NEUTRAL:
        return 0.0 * y
    return _logistic_rate(regime, p) * (1.0 - y / pi0) * y


def phase_one_drift(y, p: RatchetParams):
    """Drift s(pi0 - y) of the phase-one equation."""
    return p.s * (p.pi0 - y)


@dataclass(frozen=True)
class DiffusionSpec:
    """
    Absorbing at 0, reflecting at y_max. The default cap is min(1, 8 pi0), for small A it is
    raised to twice the phase-one start when theta puts that start above 8 pi0.
    """

    regime: Regime
    params: RatchetParams
    y_max: Optional[float] = None

    def __post_init__(self) -> None:
        if self.y_max is None:
            p = self.params
            cap = DiffusionDefaults.Y_MAX_PI0 * p.pi0
            if self.regime.kind is RegimeKind.SMALL_A:
                cap = max(cap, 2.0 * p.theta * p.pi0 / (1.0 - p.pi0))
            object.__setattr__(self, "y_max", min(1.0, cap))
        if not 0 < self.y_max <= 1:
            raise RatchetValueError(f"y_max must lie in (0, 1], got {self.y_max}")

    @property
    def N(self) -> int:
        return self.params.N

    @property
    def pi0(self) -> float:
        return self.params.pi0

    def drift(self, y):
        return drift(self.regime, y, self.params)

    def sigma2(self, y):
        return y / self.N

    def affine_coefficients(self) -> Tuple[float, float]:
        """(alpha, beta) with 2b(y)/sigma^2(y) = alpha - beta*y."""
        p = self.params
        if self.regime.kind is RegimeKind.SMALL_A:
            return 2.0 * p.N * p.lam * p.pi0, 2.0 * p.N * p.lam
        if self.regime.kind is RegimeKind.NEUTRAL:
            return 0.0, 0.0
        c = _logistic_rate(self.regime, p)
        return 2.0 * p.N * c, 2.0 * p.N * c / p.pi0

    def potential(self, y):
        """psi(y) = integral_0^y 2b/sigma^2 du; log scale density is -psi."""
        alpha, beta = self.affine_coefficients()
        return alpha * y - 0.5 * beta * y * y

    def log_scale_density(self, y):
        return -self.potential(y)

    def log_speed_density(self, y):
        """log m(y) = -log sigma^2(y) - log s(y)."""
        return math.log(self.N) - np.log(y) + self.potential(y)


def rescale(regime: Regime, p: RatchetParams) -> Tuple[float, str]:
    """Mean-reversion coefficient of dZ = c(1-Z)Z dt + sqrt(Z) dW, Z(t) = Y0(N pi0 t)/pi0."""
    coefficient = mean_reversion_coefficient(regime, p.N, p.lam, p.s)
    gamma = derive_params(p).gamma
    description = (
        f"Z(t) = Y0(N*pi0*t)/pi0 under {regime.label}: "
        f"dZ = {coefficient:.6g} (1-Z) Z dt + sqrt(Z) dW  (gamma={gamma:.6g}, N*lambda={p.n_lambda:g})"
    )
    return coefficient, description
