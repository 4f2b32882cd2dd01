"""Quantile factor risk measures and the CoVaR / CoES family.

A quantile factor risk measure is the first point x at which the vector of
scenario-conditional CDF values enters an upward-closed acceptance region:

    rho(X, W) = inf { x : (F_1(x), ..., F_n(x)) in D }.

For step CDFs the CDF profile only changes at merged support points and is
componentwise nondecreasing, so the infimum is attained at a support
breakpoint and the scan is exact.  The acceptance region generalizes the
classical left quantile (one scenario, D = [p, 1]) and covers VaR-of-VaR,
worst-scenario VaR, and the CoVaR family through conditioning events.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import scalar
from .conditioning import VarBox, box_mask, tail_box
from .core import ConditionalLawFamily, JointSample, round_significant
from .distortion import conditional_cdf
from .errors import EmptyEventError, NullQuantileEventError, ValidationError


@dataclass(frozen=True)
class IncreasingSetPredicate:
    """Upward-closed acceptance test on scenario CDF profiles.

    ``apply`` is batched: ``U`` is an (m, n) matrix of CDF profiles and the
    result is a boolean vector.  Upward closure (u <= u' and accept(u)
    implies accept(u')) makes the support scan well defined; custom
    predicates are spot-checked for it at construction.
    """

    kind: str
    p: float | None = None
    q: float | None = None
    scenario: object = None
    func: Callable | None = None
    vectorized: bool = False

    def apply(self, U: np.ndarray, pi: np.ndarray, labels=None) -> np.ndarray:
        U = np.atleast_2d(np.asarray(U, dtype=float))
        pi = np.asarray(pi, dtype=float)
        n = pi.size
        if U.shape[1] != n:
            raise ValidationError("CDF matrix width must equal the number of scenarios")
        if self.kind == "var_of_var":
            return (U >= self.p) @ pi >= self.q
        if self.kind == "esssup_var":
            return np.all(U >= self.p, axis=1)
        if self.kind == "single_scenario":
            idx = self._scenario_index(labels, n)
            return U[:, idx] >= self.p
        if self.kind == "custom":
            if self.vectorized:
                return np.asarray(self.func(U, pi), dtype=bool)
            return np.array([bool(self.func(u, pi)) for u in U])
        raise ValidationError(f"unknown predicate kind {self.kind!r}")

    def _scenario_index(self, labels, n: int) -> int:
        if isinstance(self.scenario, (int, np.integer)):
            idx = int(self.scenario)
            if not 0 <= idx < n:
                raise ValidationError(f"scenario index {idx} out of range")
            return idx
        if labels is None:
            raise ValidationError("label-addressed predicate needs scenario labels")
        if self.scenario in labels:
            return labels.index(self.scenario)
        raise ValidationError(f"scenario label {self.scenario!r} not found")


def pred_var_of_var(p: float, q: float) -> IncreasingSetPredicate:
    """Accept once scenarios of total weight >= q have F_i(x) >= p.

    The induced measure is VaR_q(VaR_p(X | W)).
    """
    if not 0 < p < 1 or not 0 < q <= 1:
        raise ValidationError("var_of_var needs p in (0,1) and q in (0,1]")
    return IncreasingSetPredicate("var_of_var", p=float(p), q=float(q))


def pred_esssup_var(p: float) -> IncreasingSetPredicate:
    """Accept once every scenario has F_i(x) >= p: esssup VaR_p(X | W)."""
    if not 0 < p < 1:
        raise ValidationError("esssup_var needs p in (0,1)")
    return IncreasingSetPredicate("esssup_var", p=float(p))


def pred_single_scenario(scenario, p: float) -> IncreasingSetPredicate:
    """Accept on one scenario's CDF alone: VaR_p(X | scenario)."""
    if not 0 < p <= 1:
        raise ValidationError("single_scenario needs p in (0,1]")
    return IncreasingSetPredicate("single_scenario", p=float(p), scenario=scenario)


def pred_custom(func: Callable, n_scenarios: int, *, vectorized: bool = False,
                check_pairs: int = 1000, seed: int = 0) -> IncreasingSetPredicate:
    """Wrap a user predicate, spot-checking upward closure and the poles."""
    pred = IncreasingSetPredicate("custom", func=func, vectorized=vectorized)
    n = int(n_scenarios)
    pi = np.full(n, 1.0 / n)
    if pred.apply(np.zeros((1, n)), pi)[0]:
        raise ValidationError("predicate must reject the all-zeros profile")
    if not pred.apply(np.ones((1, n)), pi)[0]:
        raise ValidationError("predicate must accept the all-ones profile")
    rng = np.random.default_rng(seed)
    lo = rng.random((check_pairs, n))
    hi = np.minimum(lo + rng.random((check_pairs, n)), 1.0)
    accept_lo = pred.apply(lo, pi)
    accept_hi = pred.apply(hi, pi)
    if np.any(accept_lo & ~accept_hi):
        raise ValidationError("predicate failed the upward-closure spot check")
    return pred


def quantile_factor(family: ConditionalLawFamily, pred: IncreasingSetPredicate) -> float:
    """Smallest merged-support point whose CDF profile is accepted.

    Acceptance at the largest support point is guaranteed (all CDFs are 1
    there and the predicate accepts the all-ones profile).
    """
    xs = family.merged_support()
    accepted = pred.apply(family.cdf_matrix(xs), family.pis, family.labels)
    hits = np.flatnonzero(accepted)
    if hits.size == 0:
        raise ValidationError("predicate rejected the all-ones profile")
    return float(xs[hits[0]])


def _event_cdf(sample: JointSample, alpha, mode: str, box: VarBox | None):
    if mode == "box":
        if box is None:
            raise ValidationError("box mode requires a VarBox")
        the_box = box
    elif mode == "tail":
        the_box = tail_box(alpha, sample.n_factors)
    elif mode == "equal":
        return _equal_event_cdf(sample, alpha)
    else:
        raise ValidationError(f"unknown conditioning mode {mode!r}")
    mask = box_mask(sample, the_box)
    if not mask.any():
        raise EmptyEventError("conditioning event has zero probability")
    return conditional_cdf(sample, mask)


def _equal_event_cdf(sample: JointSample, alpha):
    """Law of X on the event {W == VaR_alpha(W)} (componentwise, exact).

    Only defined when the componentwise quantile point carries positive
    mass; otherwise the event is null and a distinct error is raised.
    """
    alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
    if alpha.size == 1 and sample.n_factors > 1:
        alpha = np.full(sample.n_factors, alpha[0])
    if alpha.size != sample.n_factors:
        raise ValidationError("alpha must match the factor dimension")
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise ValidationError("alpha levels must lie in (0, 1)")
    from .core import StepCDF

    rows = np.flatnonzero(sample.weights > 0)
    point = np.empty(sample.n_factors)
    for j in range(sample.n_factors):
        col_cdf = StepCDF.from_values(sample.factors[rows, j], sample.weights[rows])
        point[j] = scalar.var(col_cdf, float(alpha[j]))
    point = round_significant(point)
    mask = np.all(sample.factors == point, axis=1) & (sample.weights > 0)
    if not mask.any():
        raise NullQuantileEventError(
            "the factor quantile point carries no joint mass; "
            "equality conditioning needs a discrete factor"
        )
    return conditional_cdf(sample, mask)


def covar(sample: JointSample, alpha, beta_level: float, mode: str = "tail",
          box: VarBox | None = None) -> float:
    """CoVaR: left quantile of X at ``beta_level`` on a factor distress event.

    ``mode='tail'`` conditions on W >= VaR_alpha(W), ``mode='box'`` on a
    VarBox event, and ``mode='equal'`` on W == VaR_alpha(W) (discrete
    factors only).
    """
    if not 0 < beta_level <= 1:
        raise ValidationError("beta_level must lie in (0, 1]")
    return scalar.var(_event_cdf(sample, alpha, mode, box), beta_level)


def coes(sample: JointSample, alpha, beta_level: float, mode: str = "tail",
         box: VarBox | None = None) -> float:
    """CoES: expected shortfall of X at ``beta_level`` on a distress event."""
    if not 0 <= beta_level < 1:
        raise ValidationError("beta_level must lie in [0, 1)")
    return scalar.es(_event_cdf(sample, alpha, mode, box), beta_level)
