"""Elementary probability bounds used by the comparison arguments, each with
an exact counterpart for numerical cross-checks."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import gammaln, xlogy
from scipy.stats import binom, poisson

from rankga.errors import DomainError, InvalidArgument

TRUNCATION = 1e-12


# -- tails ---------------------------------------------------------------------


def poisson_tail_bound(lam: float, t: float) -> float:
    """(lam e / t)^t, an upper bound on P(Y >= t) for Y ~ Poisson(lam), t >= lam."""
    if lam <= 0:
        raise InvalidArgument("lam must be positive")
    if t < lam:
        raise DomainError(f"tail bound needs t >= lam (got t={t}, lam={lam})")
    return math.exp(t * (math.log(lam) + 1 - math.log(t)))


def poisson_tail(lam: float, t: float) -> float:
    """P(Y >= t) for Y ~ Poisson(lam)."""
    return float(poisson.sf(math.ceil(t) - 1, lam))


def hoeffding_bound(n: int, p: float, t: float) -> float:
    """exp(-2 (np - t)^2 / n), an upper bound on P(X < t) for X ~ B(n, p), t < np."""
    if t >= n * p:
        raise DomainError(f"Hoeffding bound needs t < np (got t={t}, np={n * p})")
    return math.exp(-2.0 * (n * p - t) ** 2 / n)


def binomial_lower_tail(n: int, p: float, t: float) -> float:
    """P(X < t) for X ~ B(n, p)."""
    return float(binom.cdf(math.ceil(t) - 1, n, p))


# -- stochastic dominance --------------------------------------------------------


def binomial_pmf(n: int, p: float) -> np.ndarray:
    return binom.pmf(np.arange(n + 1), n, p)


def poisson_pmf(lam: float) -> np.ndarray:
    """Poisson pmf truncated where the tail mass drops below 1e-12."""
    kmax = int(poisson.isf(TRUNCATION, lam)) + 1
    return poisson.pmf(np.arange(kmax + 1), lam)


def dominance_check(d1, d2, tol: float = 1e-12) -> bool:
    """True iff d1 is stochastically below d2: CDF(d1) >= CDF(d2) pointwise.

    Both pmfs live on 0, 1, 2, ...; the shorter is padded with zeros.
    """
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    for d in (d1, d2):
        if np.any(d < 0) or d.sum() < 1 - TRUNCATION * 10:
            raise InvalidArgument("pmfs must be non-negative with mass >= 1 - 1e-12")
    k = max(len(d1), len(d2))
    c1 = np.cumsum(np.pad(d1, (0, k - len(d1))))
    c2 = np.cumsum(np.pad(d2, (0, k - len(d2))))
    return bool(np.all(c1 >= c2 - tol))


# -- Cramer transforms ------------------------------------------------------------


def cramer_poisson(lam: float, alpha: float, x):
    """Legendre transform of the log-Laplace of alpha Y, Y ~ Poisson(lam):

        (x/alpha) ln(x/(lam alpha)) - x/alpha + lam

    with the 0 ln 0 = 0 convention at x = 0.
    """
    if lam <= 0 or alpha == 0:
        raise InvalidArgument("need lam > 0 and alpha != 0")
    x = np.asarray(x, dtype=np.float64)
    y = x / alpha
    if np.any(y < 0):
        raise DomainError("x / (lam alpha) must be non-negative")
    out = xlogy(y, y / lam) - y + lam
    return out[()] if out.ndim == 0 else out


def cramer_binomial_numeric(n: int, p: float, alpha: float, x: float, bound: float = 60.0) -> float:
    """sup_theta (theta x - n ln(1 - p + p e^{alpha theta})) by bounded 1-d search.

    The supremum of a concave function; theta is confined to [-bound, bound]
    divided by |alpha|, which is ample for x inside the support of alpha X.
    """
    b = bound / abs(alpha)

    def neg(theta):
        return -(theta * x - n * np.logaddexp(math.log1p(-p), math.log(p) + alpha * theta))

    res = minimize_scalar(neg, bounds=(-b, b), method="bounded", options={"xatol": 1e-12})
    return float(max(-res.fun, -neg(0.0)))


@dataclass(frozen=True)
class CramerDominance:
    verified: bool
    xs: np.ndarray
    binomial: np.ndarray
    poisson: np.ndarray


def cramer_dominance(n: int, p: float, alpha: float, xs=None, tol: float = 1e-9) -> CramerDominance:
    """Check that the transform of alpha X, X ~ B(n, p), dominates the one of
    alpha Y, Y ~ Poisson(np), on a grid covering the support of alpha X."""
    if not 0 < p < 1:
        raise InvalidArgument("p must lie in (0, 1)")
    if xs is None:
        xs = np.linspace(min(0.0, alpha * n), max(0.0, alpha * n), 201)
    xs = np.asarray(xs, dtype=np.float64)
    lam = n * p
    bx = np.array([cramer_binomial_numeric(n, p, alpha, x) for x in xs])
    py = cramer_poisson(lam, alpha, xs)
    return CramerDominance(bool(np.all(bx >= py - tol)), xs, bx, np.asarray(py))


# -- binomial coefficients -------------------------------------------------------------


@dataclass(frozen=True)
class LogBinomialCheck:
    log_binom: float
    entropy_term: float      # -k ln(k/n) - (n-k) ln((n-k)/n)
    bound: float             # 2 ln n + 3

    @property
    def gap(self) -> float:
        return abs(self.log_binom - self.entropy_term)

    @property
    def holds(self) -> bool:
        return self.gap <= self.bound


def log_binomial_bound_check(n: int, k: int) -> LogBinomialCheck:
    if n < 1 or not 0 <= k <= n:
        raise InvalidArgument("need n >= 1 and 0 <= k <= n")
    lb = float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))
    ent = float(-xlogy(k, k / n) - xlogy(n - k, (n - k) / n))
    return LogBinomialCheck(lb, ent, 2 * math.log(n) + 3)
