"""Factor regression pipeline: OLS, Gaussian closed form, and Diff grids.

The evaluation model is X = beta0 + beta . W + sigma * eps with standard
normal idiosyncratic noise.  Under it the VaR-of-conditional-VaR factor
measure has the closed form

    rho(X, W) = beta0 + VaR_q(beta . W) + sigma * Ninv(p),

whose factor quantile is taken empirically from a factor sample.  The
plain benchmark is VaR_p(beta0 + beta . W + sigma * eps), and the grid
statistic diff = rho(X, W) / rho(X) - 1 measures the percentage change of
the factor measure against the plain quantile.  All randomness is driven
by seeds derived deterministically from a master seed and the grid row, so
serial and parallel evaluations agree bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg as sla
from scipy import stats as sstats

from .core import JointSample, StepCDF
from . import scalar
from .errors import RankDeficientError, ValidationError

PLAIN_MODES = ("model", "model-mc", "empirical")
DEFAULT_SEED = 20260808
MC_DRAWS = 10**6


@dataclass(frozen=True)
class RegressionFit:
    """OLS coefficients with standard inference columns.

    ``stderr``, ``tstat``, ``pvalue`` and ``ci95`` are aligned with
    ``names`` (the constant first, then the factor columns).  ``tstat`` is
    coefficient over standard error wherever the standard error is
    positive, NaN otherwise.
    """

    beta0: float
    beta: np.ndarray
    sigma: float
    stderr: np.ndarray
    tstat: np.ndarray
    pvalue: np.ndarray
    ci95: np.ndarray
    residuals: np.ndarray
    dof: int
    names: tuple[str, ...]

    @property
    def coef(self) -> np.ndarray:
        return np.concatenate(([self.beta0], self.beta))

    def fitted(self, factors: np.ndarray) -> np.ndarray:
        return self.beta0 + np.asarray(factors, dtype=float) @ self.beta


def _design(data: JointSample, target, factors):
    if target is None and factors is None:
        y = data.loss
        X = data.factors
        names = data.factor_names or tuple(f"W{j + 1}" for j in range(data.n_factors))
        return y, X, names
    if target is None or factors is None:
        raise ValidationError("select both target and factors, or neither")
    y = data.column(target)
    cols = [data.column(name) for name in factors]
    return y, np.column_stack(cols), tuple(factors)


def ols_fit(data: JointSample, target=None, factors=None) -> RegressionFit:
    """Least squares of the target on the factors plus a constant.

    Solved through a QR factorization; the residual scale uses the
    degrees-of-freedom corrected divisor T - N - 1.  Rank deficiency is
    rejected with the offending column names.
    """
    y, W, names = _design(data, target, factors)
    T, n_fac = W.shape
    if T <= n_fac + 1:
        raise ValidationError(f"need more than N+1={n_fac + 1} observations, got {T}")
    X = np.column_stack([np.ones(T), W])
    all_names = ("const",) + tuple(names)
    _, r_piv, piv = sla.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_piv))
    # collinearity below the 12-digit ingestion rounding counts as deficient
    rank_tol = diag.max() * max(max(X.shape) * np.finfo(float).eps, 1e-10)
    rank = int((diag > rank_tol).sum())
    if rank < X.shape[1]:
        bad = tuple(all_names[j] for j in sorted(piv[rank:]))
        raise RankDeficientError(f"design matrix is rank deficient; columns {bad}", bad)
    q_plain, r_plain = sla.qr(X, mode="economic")
    coef = sla.solve_triangular(r_plain, q_plain.T @ y)
    residuals = y - X @ coef
    dof = T - n_fac - 1
    sse = float(residuals @ residuals)
    sigma = math.sqrt(sse / dof)
    rinv = sla.solve_triangular(r_plain, np.eye(X.shape[1]))
    xtx_inv_diag = (rinv * rinv).sum(axis=1)
    stderr = sigma * np.sqrt(xtx_inv_diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = np.where(stderr > 0, coef / stderr, np.nan)
    pvalue = np.where(np.isfinite(tstat), 2.0 * sstats.t.sf(np.abs(tstat), dof), np.nan)
    tcrit = float(sstats.t.ppf(0.975, dof))
    ci95 = np.column_stack([coef - tcrit * stderr, coef + tcrit * stderr])
    # residuals at ingestion-rounding scale carry no directional information
    resid_norm = np.linalg.norm(residuals)
    if resid_norm > 1e-10 * max(1.0, np.linalg.norm(y)):
        for j in range(X.shape[1]):
            col = X[:, j]
            denom = resid_norm * np.linalg.norm(col)
            if denom > 0 and abs(residuals @ col) / denom > 1e-8:
                raise ValidationError("residuals are not orthogonal to the design")
    return RegressionFit(
        beta0=float(coef[0]),
        beta=coef[1:].copy(),
        sigma=sigma,
        stderr=stderr,
        tstat=tstat,
        pvalue=pvalue,
        ci95=ci95,
        residuals=residuals,
        dof=dof,
        names=all_names,
    )


def norm_inv(p: float) -> float:
    """Inverse standard normal CDF, absolute error below 1e-9.

    Rational initial guess refined by one Newton step on the erfc-based
    normal CDF.  The residual is evaluated in the nearer tail so it stays
    relatively accurate out to extreme levels.  Boundary levels rejected.
    """
    if not 0 < p < 1:
        raise ValidationError(f"norm_inv needs p in (0, 1), got {p!r}")
    x = _norm_inv_rational(p)
    inv_density = math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    if p < 0.5:
        err = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
        x -= err * inv_density
    else:
        err = 0.5 * math.erfc(x / math.sqrt(2.0)) - (1.0 - p)
        x += err * inv_density
    return x


_NI_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
         1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_NI_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
         6.680131188771972e+01, -1.328068155288572e+01)
_NI_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
         -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_NI_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
         3.754408661907416e+00)


def _norm_inv_rational(p: float) -> float:
    a, b, c, d = _NI_A, _NI_B, _NI_C, _NI_D
    p_low = 0.02425
    if p < p_low:
        t = math.sqrt(-2.0 * math.log(p))
        num = ((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]
        den = (((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0
        return num / den
    if p > 1.0 - p_low:
        t = math.sqrt(-2.0 * math.log(1.0 - p))
        num = ((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]
        den = (((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0
        return -num / den
    t = p - 0.5
    r = t * t
    num = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t
    den = ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0
    return num / den


@dataclass(frozen=True)
class GaussianFactorSpec:
    """Multivariate normal factor model with mean vector and covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.size, mean.size):
            raise ValidationError("covariance shape must match the mean vector")
        if np.max(np.abs(cov - cov.T)) > 1e-12:
            raise ValidationError("covariance must be symmetric")
        eigvals = np.linalg.eigvalsh(cov)
        if eigvals.min() < -1e-10 * max(1.0, abs(eigvals.max())):
            raise ValidationError("covariance must be positive semidefinite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def draw(self, rng, n: int) -> np.ndarray:
        vals, vecs = np.linalg.eigh(self.cov)
        root = vecs * np.sqrt(np.clip(vals, 0.0, None))
        return self.mean + rng.standard_normal((n, self.mean.size)) @ root.T


@dataclass(frozen=True)
class DiscreteFactorSpec:
    """Uniform draw over an explicit set of factor values."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] == 0:
            raise ValidationError("values must be a nonempty (k, N) array")
        object.__setattr__(self, "values", values)

    def draw(self, rng, n: int) -> np.ndarray:
        idx = rng.integers(0, self.values.shape[0], size=n)
        return self.values[idx]


def simulate(beta0: float, beta, sigma: float, factor_spec, n: int,
             seed: int = DEFAULT_SEED) -> JointSample:
    """Draw a deterministic sample of the regression model under a seed."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if sigma < 0:
        raise ValidationError("sigma must be nonnegative")
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    rng = np.random.default_rng(seed)
    W = factor_spec.draw(rng, n)
    if W.shape[1] != beta.size:
        raise ValidationError("factor spec dimension must match beta")
    eps = rng.standard_normal(n)
    x = beta0 + W @ beta + sigma * eps
    names = tuple(f"W{j + 1}" for j in range(beta.size))
    return JointSample(x, W, loss_name="X", factor_names=names)


def gaussian_rho(fit: RegressionFit, factor_sample: JointSample, p: float,
                 q: float) -> float:
    """Closed-form factor measure beta0 + VaR_q(beta . W) + sigma * Ninv(p)."""
    if not 0 < p < 1 or not 0 < q < 1:
        raise ValidationError("levels p and q must lie in (0, 1)")
    index = factor_sample.factors @ fit.beta
    factor_var = scalar.var(StepCDF.from_values(index, factor_sample.weights), q)
    return fit.beta0 + factor_var + fit.sigma * norm_inv(p)


def _row_rng(master_seed: int, row_index: int):
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(row_index,)))


def plain_var(fit: RegressionFit, data: JointSample, p: float, mode: str = "model",
              master_seed: int = DEFAULT_SEED, row_index: int = 0,
              mc_draws: int = MC_DRAWS) -> float:
    """The benchmark VaR_p(X) under the fitted model or the raw target.

    ``model`` draws one noise term per observation on top of the fitted
    values, ``model-mc`` convolves fitted values with noise over
    ``mc_draws`` resamples, ``empirical`` takes the weighted quantile of
    the observed target column.
    """
    if not 0 < p < 1:
        raise ValidationError("p must lie in (0, 1)")
    if mode not in PLAIN_MODES:
        raise ValidationError(f"plain-var mode must be one of {PLAIN_MODES}")
    if mode == "empirical":
        return scalar.var(StepCDF.from_values(data.loss, data.weights), p)
    fitted = fit.fitted(data.factors)
    rng = _row_rng(master_seed, row_index)
    if mode == "model":
        values = fitted + fit.sigma * rng.standard_normal(fitted.size)
        return scalar.var(StepCDF.from_values(values, data.weights), p)
    idx = rng.choice(fitted.size, size=mc_draws, p=data.weights)
    values = fitted[idx] + fit.sigma * rng.standard_normal(mc_draws)
    return scalar.var(StepCDF.from_values(values), p)


@dataclass(frozen=True)
class DiffGrid:
    """Long-format grid of (p, q, rho_factor, rho_plain, diff) rows.

    Rows are p-major then q, covering the Cartesian product of the
    requested levels.  ``diff`` is rho_factor / rho_plain - 1, NaN where
    rho_plain is zero.
    """

    p_values: np.ndarray
    q_values: np.ndarray
    p: np.ndarray
    q: np.ndarray
    rho_factor: np.ndarray
    rho_plain: np.ndarray
    diff: np.ndarray

    def __post_init__(self):
        size = self.p_values.size * self.q_values.size
        for name in ("p", "q", "rho_factor", "rho_plain", "diff"):
            if getattr(self, name).size != size:
                raise ValidationError(f"grid column {name} must have {size} rows")
        with np.errstate(divide="ignore", invalid="ignore"):
            expected = self.rho_factor / self.rho_plain - 1.0
        ok = self.rho_plain != 0
        # tolerance admits grids re-read from 9-significant-digit text
        slack = 1e-7 * (1.0 + np.abs(expected[ok]))
        if np.any(np.abs(self.diff[ok] - expected[ok]) > slack) or np.any(~np.isnan(self.diff[~ok])):
            raise ValidationError("diff column is inconsistent with its definition")

    @property
    def n_rows(self) -> int:
        return self.p.size

    def rows(self):
        for k in range(self.n_rows):
            yield (float(self.p[k]), float(self.q[k]), float(self.rho_factor[k]),
                   float(self.rho_plain[k]), float(self.diff[k]))


def diff_grid(fit: RegressionFit, data: JointSample, p_values: Sequence[float],
              q_values: Sequence[float], plain_mode: str = "model",
              master_seed: int = DEFAULT_SEED, mc_draws: int = MC_DRAWS) -> DiffGrid:
    """Evaluate the factor/plain comparison over a Cartesian level grid.

    The plain VaR is computed once per p row with a seed derived from
    (master_seed, row index), so each row shares one benchmark and diff is
    exactly nondecreasing in q whenever the benchmark is positive.  Cells
    are independent and may be evaluated concurrently; output order is
    fixed p-major regardless of schedule.
    """
    p_values = np.asarray(list(p_values), dtype=float)
    q_values = np.asarray(list(q_values), dtype=float)
    if p_values.size == 0 or q_values.size == 0:
        raise ValidationError("level lists must be nonempty")
    if np.any((p_values <= 0) | (p_values >= 1)) or np.any((q_values <= 0) | (q_values >= 1)):
        raise ValidationError("levels must lie in (0, 1)")
    rows_p, rows_q, rf, rp = [], [], [], []
    for i, p in enumerate(p_values):
        plain = plain_var(fit, data, float(p), plain_mode, master_seed, i, mc_draws)
        for q in q_values:
            rows_p.append(float(p))
            rows_q.append(float(q))
            rf.append(gaussian_rho(fit, data, float(p), float(q)))
            rp.append(plain)
    rf = np.array(rf)
    rp = np.array(rp)
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = np.where(rp != 0, rf / rp - 1.0, np.nan)
    return DiffGrid(p_values, q_values, np.array(rows_p), np.array(rows_q), rf, rp, diff)


def find_matching_q(fit: RegressionFit, data: JointSample, p: float,
                    plain_mode: str = "model", master_seed: int = DEFAULT_SEED,
                    tol: float = 1e-6, max_iter: int = 60) -> float:
    """Bisect for the q0 where the factor measure matches the plain VaR.

    Requires diff to change sign across q in (0, 1); otherwise the
    boundary diffs are reported in the error (a factor-free model is
    already matching everywhere).
    """
    plain = plain_var(fit, data, p, plain_mode, master_seed, 0)
    if plain == 0:
        raise ValidationError("plain VaR is zero; diff is undefined")

    def diff_at(q: float) -> float:
        return gaussian_rho(fit, data, p, q) / plain - 1.0

    lo, hi = 1e-9, 1.0 - 1e-9
    d_lo, d_hi = diff_at(lo), diff_at(hi)
    if not (d_lo < 0 < d_hi or d_hi < 0 < d_lo):
        raise ValidationError(
            f"diff does not change sign over q: diff({lo:g})={d_lo:.6g}, "
            f"diff({hi:g})={d_hi:.6g}"
        )
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        d_mid = diff_at(mid)
        if abs(d_mid) <= tol:
            return mid
        if (d_mid < 0) == (d_lo < 0):
            lo, d_lo = mid, d_mid
        else:
            hi, d_hi = mid, d_mid
    return 0.5 * (lo + hi)
