"""General statistics: density estimates, maximum-likelihood distribution
fits with AIC/BIC, serial autocorrelation, correlation/regression and
quantile-quantile data.

All functions are pure; repeated calls on identical input are
bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import optimize
from scipy import stats as sps

from .errors import FitError, StatsError, ValidationError, ZeroVarianceError

CLAMP_EPS = 1e-6
FAMILIES = ("beta", "weibull", "lognormal")
_PARAM_COUNT = 2  # every supported family has two free parameters


@dataclass(frozen=True)
class DistributionFit:
    """A fitted two-parameter distribution with its information criteria.

    ``params`` is family-specific: (alpha, beta) for beta, (shape, scale)
    for weibull, (mu, sigma) for lognormal.
    """

    family: str
    params: tuple[float, float]
    log_likelihood: float
    aic: float
    bic: float
    n: int

    def frozen(self):
        """The scipy frozen distribution for this fit."""
        a, b = self.params
        if self.family == "beta":
            return sps.beta(a, b)
        if self.family == "weibull":
            return sps.weibull_min(a, scale=b)
        if self.family == "lognormal":
            return sps.lognorm(b, scale=math.exp(a))
        raise ValidationError(f"unknown family {self.family!r}")


def _clamp(values: np.ndarray, family: str) -> np.ndarray:
    """Pull values inside the family's support.

    Saturated observations (exactly 0, or exactly 1 for the beta family
    whose support excludes both endpoints) would make the likelihood
    diverge; they are moved inward by a fixed epsilon.
    """
    x = values.astype(float).copy()
    x[x < CLAMP_EPS] = CLAMP_EPS
    if family == "beta":
        x[x > 1.0 - CLAMP_EPS] = 1.0 - CLAMP_EPS
    return x


def information_criteria(log_likelihood: float, n: int,
                         k: int = _PARAM_COUNT) -> tuple[float, float]:
    """(aic, bic) from a log-likelihood: 2k - 2LL and k ln(n) - 2LL."""
    aic = 2 * k - 2 * log_likelihood
    bic = k * math.log(n) - 2 * log_likelihood
    return aic, bic


def fit_distribution(values: Sequence[float], family: str) -> DistributionFit:
    """Maximum-likelihood fit of one of the three supported families.

    Beta and Weibull parameters come from quasi-Newton optimization of the
    log-likelihood in log-parameter space (tolerance 1e-9 on the
    objective, warm-started from moment estimates); the LogNormal MLE is
    closed-form.
    """
    if family not in FAMILIES:
        raise ValidationError(f"family must be one of {FAMILIES}, got {family!r}")
    x = np.asarray(list(values), dtype=float)
    n = x.size
    if n < 8:
        raise FitError(f"need at least 8 values to fit, got {n}")
    if not np.all(np.isfinite(x)):
        raise FitError("values must be finite")
    x = _clamp(x, family)
    if np.ptp(x) == 0.0:
        raise FitError("degenerate sample: zero variance after clamping")

    if family == "lognormal":
        logs = np.log(x)
        mu = float(np.mean(logs))
        sigma = float(np.sqrt(np.mean((logs - mu) ** 2)))
        if sigma == 0.0:
            raise FitError("degenerate sample: zero variance in log space")
        ll = float(np.sum(sps.lognorm.logpdf(x, sigma, scale=math.exp(mu))))
        params = (mu, sigma)
    else:
        params, ll = _optimize_mle(x, family)

    aic, bic = information_criteria(ll, n)
    return DistributionFit(family, params, ll, aic, bic, n)


def _nll(theta: np.ndarray, x: np.ndarray, family: str) -> float:
    a, b = np.exp(theta)
    if family == "beta":
        lp = sps.beta.logpdf(x, a, b)
    else:
        lp = sps.weibull_min.logpdf(x, a, scale=b)
    total = np.sum(lp)
    if not np.isfinite(total):
        return 1e300
    return -float(total)


def _initial_guess(x: np.ndarray, family: str) -> np.ndarray:
    if family == "beta":
        m, v = float(np.mean(x)), float(np.var(x))
        v = max(v, 1e-12)
        common = m * (1 - m) / v - 1
        alpha = max(m * common, 1e-3)
        beta = max((1 - m) * common, 1e-3)
        return np.log([alpha, beta])
    # Weibull: ln X is Gumbel with scale 1/shape.
    logs = np.log(x)
    s = float(np.std(logs))
    shape = math.pi / (s * math.sqrt(6)) if s > 0 else 1.0
    scale = math.exp(float(np.mean(logs)) + 0.5772156649 / shape)
    return np.log([shape, scale])


def _optimize_mle(x: np.ndarray, family: str) -> tuple[tuple[float, float], float]:
    theta0 = _initial_guess(x, family)
    res = optimize.minimize(_nll, theta0, args=(x, family), method="L-BFGS-B",
                            options={"ftol": 1e-15, "gtol": 1e-10, "maxiter": 500})
    best = res.x if res.fun <= _nll(theta0, x, family) else theta0
    polish = optimize.minimize(_nll, best, args=(x, family), method="Nelder-Mead",
                               options={"fatol": 1e-9, "xatol": 1e-10,
                                        "maxiter": 2000})
    if polish.fun <= res.fun:
        res = polish
    params = tuple(float(p) for p in np.exp(res.x))
    ll = -float(res.fun)
    if not np.isfinite(ll):
        raise FitError("optimizer failed to reach a finite likelihood",
                       best_params=params)
    return params, ll


@dataclass(frozen=True)
class DensityCurve:
    """A normalized density over bin edges (histogram) or a grid (KDE)."""

    kind: str  # "histogram" | "kde"
    support: tuple[float, ...]  # bin edges, or grid points for a KDE
    density: tuple[float, ...]

    def integral(self) -> float:
        s = np.asarray(self.support)
        d = np.asarray(self.density)
        if self.kind == "histogram":
            return float(np.sum(d * np.diff(s)))
        return float(np.trapezoid(d, s))

    def l1_distance(self, other: "DensityCurve") -> float:
        if self.kind != other.kind or self.support != other.support:
            raise ValidationError("density curves must share support for L1 distance")
        s = np.asarray(self.support)
        a, b = np.asarray(self.density), np.asarray(other.density)
        if self.kind == "histogram":
            return float(np.sum(np.abs(a - b) * np.diff(s)))
        return float(np.trapezoid(np.abs(a - b), s))


def empirical_density(values: Sequence[float], bins: int = 20,
                      bandwidth: float | None = None,
                      value_range: tuple[float, float] | None = None) -> DensityCurve:
    """Normalized histogram of the values, or a Gaussian-kernel estimate
    when a bandwidth is given.  The result integrates to 1 over its
    support."""
    x = np.asarray(list(values), dtype=float)
    if x.size < 2:
        raise StatsError(f"need at least 2 values for a density, got {x.size}")
    if bandwidth is not None:
        if np.ptp(x) == 0.0:
            raise ZeroVarianceError("kernel density undefined for constant values")
        lo, hi = value_range if value_range else (x.min() - 3 * bandwidth,
                                                  x.max() + 3 * bandwidth)
        grid = np.linspace(lo, hi, 512)
        kernel = np.exp(-0.5 * ((grid[:, None] - x[None, :]) / bandwidth) ** 2)
        density = kernel.sum(axis=1) / (x.size * bandwidth * math.sqrt(2 * math.pi))
        density /= np.trapezoid(density, grid)
        return DensityCurve("kde", tuple(grid), tuple(density))
    if bins < 1:
        raise StatsError("bin count must be >= 1")
    density, edges = np.histogram(x, bins=bins, range=value_range, density=True)
    return DensityCurve("histogram", tuple(edges), tuple(density))


def autocorrelation(series: Sequence[float], lag: int) -> float:
    """Serial correlation at the given lag using the full-series mean.

    rho(k) = mean_i[(f_i - fbar)(f_{i+k} - fbar)] / mean_j[(f_j - fbar)^2],
    so a perfectly alternating series yields exactly -1 at lag 1.
    """
    x = np.asarray(list(series), dtype=float)
    if lag < 0:
        raise ValidationError("lag must be >= 0")
    if x.size <= lag:
        raise ValidationError(f"series length {x.size} must exceed lag {lag}")
    d = x - x.mean()
    denom = float(np.mean(d * d))
    if denom == 0.0:
        raise ZeroVarianceError("autocorrelation undefined for a constant series")
    if lag == 0:
        return 1.0
    num = float(np.mean(d[:-lag] * d[lag:]))
    return num / denom


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Sample Pearson correlation coefficient."""
    x = np.asarray(list(xs), dtype=float)
    y = np.asarray(list(ys), dtype=float)
    if x.size != y.size:
        raise ValidationError("pearson inputs must have equal length")
    if x.size < 2:
        raise StatsError("need at least 2 points")
    dx, dy = x - x.mean(), y - y.mean()
    sx, sy = float(np.sum(dx * dx)), float(np.sum(dy * dy))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVarianceError("pearson undefined when either variable is constant")
    return float(np.sum(dx * dy) / math.sqrt(sx * sy))


def ols_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares line through the points: (slope, intercept)."""
    x = np.asarray(list(xs), dtype=float)
    y = np.asarray(list(ys), dtype=float)
    if x.size != y.size:
        raise ValidationError("ols inputs must have equal length")
    if x.size < 2:
        raise StatsError("need at least 2 points")
    dx = x - x.mean()
    sx = float(np.sum(dx * dx))
    if sx == 0.0:
        raise ZeroVarianceError("ols undefined when x is constant")
    slope = float(np.sum(dx * (y - y.mean())) / sx)
    intercept = float(y.mean() - slope * x.mean())
    return slope, intercept


@dataclass(frozen=True)
class QqPpData:
    """Paired point lists for quantile-quantile and percentile-percentile
    plots against a fitted distribution."""

    qq: tuple[tuple[float, float], ...]  # (theoretical quantile, empirical quantile)
    pp: tuple[tuple[float, float], ...]  # (theoretical cdf, empirical cdf)


def qq_pp_data(values: Sequence[float], fit: DistributionFit) -> QqPpData:
    x = np.sort(np.asarray(list(values), dtype=float))
    n = x.size
    if n < 1:
        raise StatsError("need at least one value")
    dist = fit.frozen()
    positions = (np.arange(1, n + 1) - 0.5) / n
    theoretical_q = dist.ppf(positions)
    qq = tuple((float(t), float(e)) for t, e in zip(theoretical_q, x))
    pp = tuple((float(dist.cdf(v)), float(i / n)) for i, v in enumerate(x, start=1))
    return QqPpData(qq, pp)


def fit_report(values: Sequence[float]) -> dict[str, DistributionFit]:
    """Fit all three families; keys ordered beta, weibull, lognormal."""
    return {family: fit_distribution(values, family) for family in FAMILIES}
