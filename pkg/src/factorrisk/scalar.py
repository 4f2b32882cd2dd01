"""Single-distribution risk measures on step CDFs.

Implements the left-quantile value at risk, expected shortfall via the
exact quantile-function integral, and the classical distortion risk
measure as an exact Choquet sum

    rho(X) = x_(1) + sum_k L(1 - F(x_(k))) * (x_(k+1) - x_(k)),

which for a step CDF equals the integral of L(1 - F) over the positive
axis plus the shifted integral over the negative axis.  Everything here is
exact arithmetic on the atoms; there is no quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import StepCDF
from .errors import ValidationError


@dataclass(frozen=True)
class DistortionFunction:
    """Nondecreasing map [0,1] -> [0,1] with L(0)=0 and L(1)=1.

    Four kinds:

    * ``identity``             L(u) = u (expectation)
    * ``var_level(p)``         L(u) = 1 if u > 1-p else 0 (left quantile)
    * ``es_level(p)``          L(u) = min(u / (1-p), 1) (expected shortfall)
    * ``piecewise_linear``     linear interpolation through (u, L(u)) knots
    """

    kind: str
    level: float | None = None
    knots_u: np.ndarray | None = None
    knots_v: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "identity":
            return
        if self.kind == "var_level":
            if self.level is None or not 0 < self.level < 1:
                raise ValidationError("var_level requires a level in (0, 1)")
            return
        if self.kind == "es_level":
            if self.level is None or not 0 <= self.level < 1:
                raise ValidationError("es_level requires a level in [0, 1)")
            return
        if self.kind == "piecewise_linear":
            u = np.asarray(self.knots_u, dtype=float)
            v = np.asarray(self.knots_v, dtype=float)
            if u.ndim != 1 or u.shape != v.shape or u.size < 2:
                raise ValidationError("piecewise_linear requires aligned knot vectors")
            if u[0] != 0.0 or u[-1] != 1.0 or not np.all(np.diff(u) > 0):
                raise ValidationError("knot grid must increase strictly from 0 to 1")
            if abs(v[0]) > 1e-15 or abs(v[-1] - 1.0) > 1e-15:
                raise ValidationError("distortion must satisfy L(0)=0 and L(1)=1")
            if np.any(np.diff(v) < 0):
                raise ValidationError("distortion must be nondecreasing on the grid")
            object.__setattr__(self, "knots_u", u)
            object.__setattr__(self, "knots_v", v)
            return
        raise ValidationError(f"unknown distortion kind {self.kind!r}")

    def __call__(self, u) -> np.ndarray | float:
        u = np.asarray(u, dtype=float)
        if self.kind == "identity":
            out = u
        elif self.kind == "var_level":
            out = np.where(u > 1.0 - self.level, 1.0, 0.0)
        elif self.kind == "es_level":
            out = np.minimum(u / (1.0 - self.level), 1.0)
        else:
            out = np.interp(u, self.knots_u, self.knots_v)
        return float(out) if out.ndim == 0 else out


def identity_distortion() -> DistortionFunction:
    return DistortionFunction("identity")


def var_distortion(p: float) -> DistortionFunction:
    return DistortionFunction("var_level", level=p)


def es_distortion(p: float) -> DistortionFunction:
    return DistortionFunction("es_level", level=p)


def piecewise_linear_distortion(knots_u, knots_v) -> DistortionFunction:
    return DistortionFunction("piecewise_linear", knots_u=np.asarray(knots_u, float),
                              knots_v=np.asarray(knots_v, float))


def var(cdf: StepCDF, alpha: float) -> float:
    """Left quantile inf{x : F(x) >= alpha} for alpha in (0, 1].

    ``alpha = 1`` returns the last support point (the essential supremum).
    """
    if not 0 < alpha <= 1:
        raise ValidationError(f"VaR level must be in (0, 1], got {alpha!r}")
    idx = int(np.searchsorted(cdf.cum, alpha, side="left"))
    idx = min(idx, cdf.support.size - 1)
    return float(cdf.support[idx])


def es(cdf: StepCDF, alpha: float) -> float:
    """Expected shortfall (1/(1-alpha)) * integral of the quantile over (alpha, 1].

    Exact for step CDFs: an atom straddling ``alpha`` contributes its
    partial mass.  ``alpha = 0`` gives the mean.
    """
    if not 0 <= alpha < 1:
        raise ValidationError(f"ES level must be in [0, 1), got {alpha!r}")
    lo = np.concatenate(([0.0], cdf.cum[:-1]))
    seg = np.minimum(cdf.cum, 1.0) - np.maximum(lo, alpha)
    seg = np.clip(seg, 0.0, None)
    return float(cdf.support @ seg / (1.0 - alpha))


def esssup(cdf: StepCDF) -> float:
    return float(cdf.support[-1])


def distortion_rho(cdf: StepCDF, lam: DistortionFunction) -> float:
    """Choquet integral of the step CDF under the distortion ``lam``."""
    xs = cdf.support
    if xs.size == 1:
        return float(xs[0])
    surv = 1.0 - cdf.cum[:-1]
    return float(xs[0] + lam(surv) @ np.diff(xs))
