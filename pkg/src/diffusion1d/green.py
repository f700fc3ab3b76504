# src/diffusion1d/green.py
"""
Scale function, speed density and the Green function of a Y0 diffusion
absorbed at 0 and reflected at y_max:

    G(x, y) = 2 m(y) (S(min(x, y)) - S(0))
            = (2N / y) * integral_0^min(x,y) exp(psi(y) - psi(u)) du

Everything exponential is carried in log space before it is integrated.
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate

from src.config import Tolerances
from src.diffusion1d.model import DiffusionSpec
from src.errors import NumericalError, RatchetValueError

logger = logging.getLogger(__name__)


def _quad(
    func, a: float, b: float, what: str, points=None, epsrel: float = Tolerances.QUADRATURE_REL
) -> float:
    """scipy quad with warnings promoted to NumericalError."""
    if b <= a:
        return 0.0
    inner = [pt for pt in (points or ()) if a < pt < b]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            value, err = integrate.quad(
                func,
                a,
                b,
                epsabs=Tolerances.QUADRATURE_ABS,
                epsrel=epsrel,
                points=inner or None,
                limit=200,
            )
        except integrate.IntegrationWarning as exc:
            raise NumericalError(
                f"{what}: quadrature on [{a:.6g}, {b:.6g}] did not converge "
                f"(epsabs={Tolerances.QUADRATURE_ABS:g}, epsrel={epsrel:g}): {exc}"
            ) from None
    if not math.isfinite(value):
        raise NumericalError(f"{what}: integral on [{a:.6g}, {b:.6g}] is not finite (err={err:.3g})")
    return float(value)


def _log_scale_integral(spec: DiffusionSpec, a: float) -> float:
    """log of integral_0^a exp(-psi(u)) du; -psi is convex so its max sits at an endpoint."""
    if a <= 0:
        return -math.inf
    shift = max(0.0, -float(spec.potential(a)))
    body = _quad(
        lambda u: math.exp(-float(spec.potential(u)) - shift),
        0.0,
        a,
        "scale function",
    )
    return shift + math.log(body)


# -----------------------------------------
# Scale and speed
# -----------------------------------------
def scale_speed(spec: DiffusionSpec, y: float) -> Tuple[float, float, float]:
    """(scale density s(y), scale function S(y) with S(0) = 0, speed density m(y))."""
    if not 0 < y <= spec.y_max:
        raise RatchetValueError(f"y must lie in (0, y_max={spec.y_max:g}], got {y}")
    log_s = float(spec.log_scale_density(y))
    log_S = _log_scale_integral(spec, y)
    log_m = float(spec.log_speed_density(y))
    try:
        return math.exp(log_s), math.exp(log_S), math.exp(log_m)
    except OverflowError:
        raise NumericalError(
            f"scale/speed at y={y:g} overflow: log s={log_s:.4g}, log S={log_S:.4g}, log m={log_m:.4g}"
        ) from None


# -----------------------------------------
# Green function
# -----------------------------------------
@dataclass(frozen=True)
class GreenFunction:
    spec: DiffusionSpec
    x0: float
    expected_time: float

    def log_value(self, y: float) -> float:
        if not 0 < y <= self.spec.y_max:
            return -math.inf
        a = min(self.x0, y)
        return (
            math.log(2.0 * self.spec.N)
            - math.log(y)
            + float(self.spec.potential(y))
            + _log_scale_integral(self.spec, a)
        )

    def value(self, y: float) -> float:
        return math.exp(self.log_value(y))

    def density(self, y) -> np.ndarray:
        ys = np.atleast_1d(np.asarray(y, dtype=float))
        return np.array([self.value(v) for v in ys]) / self.expected_time

    def bin_masses(self, edges: Sequence[float]) -> np.ndarray:
        """Occupation mass in each bin [edges[i], edges[i+1]), clipped to (0, y_max]."""
        e = np.clip(np.asarray(edges, dtype=float), 0.0, self.spec.y_max)
        masses = [
            _quad(self.value, lo, hi, "green bin mass", points=(self.x0,),
                  epsrel=Tolerances.QUADRATURE_OUTER_REL)
            for lo, hi in zip(e[:-1], e[1:])
        ]
        return np.array(masses) / self.expected_time

    def to_frame(self, grid: Sequence[float]) -> pd.DataFrame:
        ys = np.asarray(grid, dtype=float)
        values = np.array([self.value(v) for v in ys])
        return pd.DataFrame(
            {"y": ys, "green_value": values, "occupation_density": values / self.expected_time}
        )


def green_object(spec: DiffusionSpec, x0: float) -> GreenFunction:
    if not 0 < x0 <= spec.y_max:
        raise RatchetValueError(f"x0 must lie in (0, y_max={spec.y_max:g}], got {x0}")
    unit = GreenFunction(spec, x0, 1.0)
    total = _quad(unit.value, 0.0, spec.y_max, "expected click time", points=(x0, spec.pi0),
                  epsrel=Tolerances.QUADRATURE_OUTER_REL)
    logger.debug("green: regime=%s x0=%g expected time %g", spec.regime.label, x0, total)
    return GreenFunction(spec, x0, total)


def green_function(
    spec: DiffusionSpec, x0: float, grid: Sequence[float]
) -> Tuple[np.ndarray, float]:
    """(occupation density on grid, expected time to absorption from x0)."""
    green = green_object(spec, x0)
    return green.density(grid), green.expected_time
