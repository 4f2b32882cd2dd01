"""Scenario-distortion risk measures (the generalized Choquet engine).

A scenario distortion ``psi`` maps a vector of per-scenario survival
probabilities to [0, 1], monotonically, with psi(0)=0 and psi(1)=1.  For a
conditional law family with merged support x_(1) < ... < x_(m), the factor
risk measure is the exact finite sum

    rho(X, W) = x_(1) + sum_{k<m} psi(s_k, pi) * (x_(k+1) - x_(k)),

where s_k collects the scenario survivals 1 - F_i(x_(k)).  The survival
profile is piecewise constant between support points, so the sum equals
the Choquet integral with no quadrature error.

Built-in distortions cover the distorted/averaged conditional VaR and ES
families; composition helpers evaluate the same measures through their
per-scenario closed forms, giving an independent route used by the tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import scalar
from .conditioning import LevelMap, VarBox, box_mask
from .core import ConditionalLawFamily, JointSample, StepCDF, round_significant
from .errors import EmptyEventError, ValidationError

CONDITION_A_SLACK = 1e-12


@dataclass(frozen=True)
class ScenarioDistortion:
    """Monotone functional on per-scenario survival vectors.

    ``apply`` evaluates the functional on a batch: ``V`` is an (m, n)
    matrix of survival vectors, ``pi`` the scenario weights, and the result
    has length m.  Evaluation must be reentrant; the engine may batch
    breakpoints in any order and reduces in fixed order.
    """

    kind: str
    levels: LevelMap | None = None
    lam: scalar.DistortionFunction | None = None
    p: float | None = None
    q: float | None = None
    subset: tuple[int, ...] | None = None
    func: Callable | None = None
    vectorized: bool = False

    def apply(self, V: np.ndarray, pi: np.ndarray, labels=None) -> np.ndarray:
        V = np.atleast_2d(np.asarray(V, dtype=float))
        pi = np.asarray(pi, dtype=float)
        n = pi.size
        if V.shape[1] != n:
            raise ValidationError("survival matrix width must equal the number of scenarios")
        if self.kind == "mean":
            return V @ pi
        if self.kind == "lambda_of_var":
            g = self.levels.resolve(n, labels)
            if np.any(g <= 0) or np.any(g > 1):
                raise ValidationError("VaR scenario levels must lie in (0, 1]")
            return self.lam((V > (1.0 - g)) @ pi)
        if self.kind == "mean_of_var":
            g = self.levels.resolve(n, labels)
            if np.any(g <= 0) or np.any(g > 1):
                raise ValidationError("VaR scenario levels must lie in (0, 1]")
            return (V > (1.0 - g)) @ pi
        if self.kind == "mean_of_es":
            g = self.levels.resolve(n, labels)
            if np.any(g >= 1) or np.any(g < 0):
                raise ValidationError("ES scenario levels must lie in [0, 1)")
            tail = 1.0 - g
            return (np.minimum(V, tail) / tail) @ pi
        if self.kind == "es_on_box":
            idx = np.asarray(self.subset, dtype=np.int64)
            if idx.size == 0 or idx.min() < 0 or idx.max() >= n:
                raise ValidationError("scenario subset out of range")
            mass = pi[idx].sum()
            tail = 1.0 - self.p
            return (np.minimum(V[:, idx], tail) / tail) @ pi[idx] / mass
        if self.kind == "indicator_var_var":
            prob = (V > (1.0 - self.p)) @ pi
            return np.where(prob > 1.0 - self.q, 1.0, 0.0)
        if self.kind == "custom":
            if self.vectorized:
                return np.asarray(self.func(V, pi), dtype=float)
            return np.array([float(self.func(v, pi)) for v in V])
        raise ValidationError(f"unknown scenario distortion kind {self.kind!r}")

    def __call__(self, v, pi, labels=None) -> float:
        return float(self.apply(np.atleast_2d(v), pi, labels)[0])


def psi_mean() -> ScenarioDistortion:
    """psi(v) = sum_i pi_i v_i; the conditional-expectation mixture."""
    return ScenarioDistortion("mean")


def psi_lambda_of_var(lam: scalar.DistortionFunction, levels) -> ScenarioDistortion:
    """Distorted conditional VaR: rho = rho_Lambda(VaR_{g(W)}(X | W))."""
    return ScenarioDistortion("lambda_of_var", levels=LevelMap.of(levels), lam=lam)


def psi_mean_of_var(levels) -> ScenarioDistortion:
    """Average conditional VaR: rho = E[VaR_{g(W)}(X | W)]."""
    return ScenarioDistortion("mean_of_var", levels=LevelMap.of(levels))


def psi_mean_of_es(levels) -> ScenarioDistortion:
    """Average conditional ES: rho = E[ES_{g(W)}(X | W)]."""
    return ScenarioDistortion("mean_of_es", levels=LevelMap.of(levels))


def psi_es_on_box(p: float, subset: Sequence[int]) -> ScenarioDistortion:
    """Conditional ES on a scenario subevent: rho = ES_p(X | W in B)."""
    if not 0 <= p < 1:
        raise ValidationError("ES level must lie in [0, 1)")
    return ScenarioDistortion("es_on_box", p=float(p), subset=tuple(int(i) for i in subset))


def psi_indicator_var_var(p: float, q: float) -> ScenarioDistortion:
    """The 0/1 distortion whose Choquet integral is VaR_q(VaR_p(X | W))."""
    if not 0 < p < 1 or not 0 < q <= 1:
        raise ValidationError("indicator levels need p in (0,1) and q in (0,1]")
    return ScenarioDistortion("indicator_var_var", p=float(p), q=float(q))


def psi_custom(func: Callable, n_scenarios: int, *, vectorized: bool = False,
               check_pairs: int = 1000, seed: int = 0) -> ScenarioDistortion:
    """Wrap a user functional, spot-checking monotonicity and normalization.

    Monotonicity is sampled on ``check_pairs`` random ordered pairs; a pass
    is evidence, not proof.
    """
    psi = ScenarioDistortion("custom", func=func, vectorized=vectorized)
    rng = np.random.default_rng(seed)
    n = int(n_scenarios)
    for pi in (np.full(n, 1.0 / n), _random_simplex(rng, n)):
        lo = psi(np.zeros(n), pi)
        hi = psi(np.ones(n), pi)
        if abs(lo) > 1e-12 or abs(hi - 1.0) > 1e-12:
            raise ValidationError("custom distortion must map 0 -> 0 and 1 -> 1")
        a = rng.random((check_pairs, n))
        b = np.minimum(a + rng.random((check_pairs, n)), 1.0)
        va = psi.apply(a, pi)
        vb = psi.apply(b, pi)
        if np.any(vb < va - 1e-12):
            raise ValidationError("custom distortion failed the monotonicity spot check")
    return psi


def _random_simplex(rng, n: int) -> np.ndarray:
    w = rng.random(n) + 1e-3
    return w / w.sum()


def choquet_factor(family: ConditionalLawFamily, psi: ScenarioDistortion) -> float:
    """Evaluate the scenario-Choquet risk measure on a conditional family.

    Exact for discrete laws: survivals are evaluated at the merged support
    breakpoints only, where the integrand is piecewise constant.
    """
    xs = family.merged_support()
    if xs.size == 1:
        return float(xs[0])
    surv = 1.0 - family.cdf_matrix(xs[:-1])
    vals = psi.apply(surv, family.pis, family.labels)
    return float(xs[0] + vals @ np.diff(xs))


def compose_var_distortion(family: ConditionalLawFamily, levels,
                           lam: scalar.DistortionFunction) -> float:
    """rho_Lambda of the discrete law of per-scenario VaR_{g_i}(X | i).

    Closed-form route for the ``lambda_of_var`` distortion; agrees with
    :func:`choquet_factor` exactly on discrete families.
    """
    g = LevelMap.of(levels).resolve(family.n_scenarios, family.labels)
    if np.any(g <= 0) or np.any(g > 1):
        raise ValidationError("VaR scenario levels must lie in (0, 1]")
    vars_ = np.array([scalar.var(law, gi) for law, gi in zip(family.laws, g)])
    return scalar.distortion_rho(StepCDF.from_values(vars_, family.pis), lam)


def compose_es_mean(family: ConditionalLawFamily, levels) -> float:
    """E[ES_{g(W)}(X | W)] via per-scenario expected shortfalls."""
    g = LevelMap.of(levels).resolve(family.n_scenarios, family.labels)
    if np.any(g >= 1):
        raise ValidationError("ES scenario levels must lie in [0, 1)")
    return float(sum(pi * scalar.es(law, gi)
                     for pi, law, gi in zip(family.pis, family.laws, g)))


def conditional_cdf(sample: JointSample, mask: np.ndarray) -> StepCDF:
    """Empirical law of the loss on a row event."""
    mask = np.asarray(mask, dtype=bool)
    if not mask.any() or sample.weights[mask].sum() <= 0:
        raise EmptyEventError("conditioning event has zero probability")
    return StepCDF.from_values(sample.loss[mask], sample.weights[mask])


def event_mask(sample: JointSample, event) -> np.ndarray:
    """Row mask for a VarBox event or an explicit factor-value subset."""
    if isinstance(event, VarBox):
        return box_mask(sample, event)
    values = round_significant(np.atleast_2d(np.asarray(event, dtype=float)))
    if values.shape[1] != sample.n_factors:
        raise ValidationError("event factor values must match the factor dimension")
    mask = np.zeros(sample.n_rows, dtype=bool)
    for row in values:
        mask |= np.all(sample.factors == row, axis=1)
    mask &= sample.weights > 0
    return mask


def es_on_event(sample: JointSample, event, p: float) -> float:
    """ES_p of the loss conditionally on W falling in the event.

    ``event`` is a VarBox or a collection of exact factor values (the
    discrete-scenario flavor).  Empty events are rejected.
    """
    return scalar.es(conditional_cdf(sample, event_mask(sample, event)), p)


class ConditionAWitness(NamedTuple):
    """A quadruple violating the coherence inequality, with the deficit."""

    f1: np.ndarray
    f2: np.ndarray
    g1: np.ndarray
    g2: np.ndarray
    deficit: float


def condition_a_check(psi: ScenarioDistortion, pi, trials: int = 10_000,
                      seed: int = 0) -> ConditionAWitness | None:
    """Randomized falsifier for the coherence condition on ``psi``.

    Samples quadruples g1 <= f1, f2 <= g2 with f1 + f2 = g1 + g2 and tests
    psi(f1) + psi(f2) >= psi(g1) + psi(g2) - 1e-12.  Returns the first
    violating witness, or None if all trials pass.  A pass is evidence of
    coherence, never a certificate: the inequality quantifies over an
    infinite function class.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    pi = np.asarray(pi, dtype=float)
    rng = np.random.default_rng(seed)
    n = pi.size
    chunk = 2048
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        u1 = rng.random((m, n))
        u2 = rng.random((m, n))
        g1 = np.minimum(u1, u2)
        g2 = np.maximum(u1, u2)
        t = rng.random((m, n))
        f1 = g1 + t * (g2 - g1)
        f2 = g2 - t * (g2 - g1)
        lhs = psi.apply(f1, pi) + psi.apply(f2, pi)
        rhs = psi.apply(g1, pi) + psi.apply(g2, pi)
        bad = np.flatnonzero(lhs < rhs - CONDITION_A_SLACK)
        if bad.size:
            i = int(bad[0])
            return ConditionAWitness(f1[i], f2[i], g1[i], g2[i], float(rhs[i] - lhs[i]))
        done += m
    return None
