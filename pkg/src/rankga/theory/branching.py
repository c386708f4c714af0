"""Galton-Watson comparison processes for the Master progeny."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import poisson

from rankga.errors import InvalidArgument

TRUNCATION = 1e-12


@dataclass(frozen=True, eq=False)
class ReproductionLaw:
    """Offspring pmf on 0..len(pmf)-1, truncated where the tail drops below 1e-12."""

    kind: str
    pmf: np.ndarray
    params: tuple = ()

    def __post_init__(self):
        pmf = np.asarray(self.pmf, dtype=np.float64)
        if pmf.ndim != 1 or len(pmf) == 0 or np.any(pmf < 0):
            raise InvalidArgument("pmf must be a non-empty non-negative vector")
        if abs(pmf.sum() - 1.0) > TRUNCATION * 10:
            raise InvalidArgument(f"pmf sums to {pmf.sum()!r}, not 1")
        pmf = pmf / pmf.sum()
        pmf.flags.writeable = False
        object.__setattr__(self, "pmf", pmf)

    @classmethod
    def custom(cls, pmf) -> "ReproductionLaw":
        return cls("custom", np.asarray(pmf, dtype=np.float64))

    @classmethod
    def twice_poisson(cls, lam: float) -> "ReproductionLaw":
        """Law of 2Y with Y ~ Poisson(lam); lam = 4 sigma bounds the Master progeny."""
        y = _poisson_pmf(lam)
        pmf = np.zeros(2 * len(y) - 1)
        pmf[0::2] = y
        return cls("twice-poisson", pmf, (lam,))

    @classmethod
    def nu_star(cls, pi: float, eps: float | None = None) -> "ReproductionLaw":
        """Law of Y' + 2Y'' with Y' ~ Poisson(pi (1 + 3 eps)), Y'' ~ Poisson(eps)."""
        if eps is None:
            eps = default_eps(pi)
        if eps <= 0:
            raise InvalidArgument("eps must be positive")
        a = _poisson_pmf(pi * (1 + 3 * eps))
        b = np.zeros(2 * len(_poisson_pmf(eps)) - 1)
        b[0::2] = _poisson_pmf(eps)
        pmf = np.convolve(a, b)
        return cls("nu-star", _trim(pmf), (pi, eps))

    @property
    def support_max(self) -> int:
        """Truncation point: the largest offspring count carried."""
        return len(self.pmf) - 1

    def mean(self) -> float:
        return float(np.arange(len(self.pmf)) @ self.pmf)

    def pgf(self, s):
        """Generating function sum_k pmf[k] s^k (Horner)."""
        s = np.asarray(s, dtype=np.float64)
        out = np.zeros_like(s)
        for p in self.pmf[::-1]:
            out = out * s + p
        return out[()] if out.ndim == 0 else out

    def sample(self, size, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(len(self.pmf), size=size, p=self.pmf)


def default_eps(pi: float) -> float:
    """min(0.01, (1/pi - 1)/10); keeps nu* subcritical whenever pi < 1."""
    if pi >= 1:
        return 0.01
    return min(0.01, (1.0 / pi - 1.0) / 10.0)


def _poisson_pmf(lam: float) -> np.ndarray:
    if lam < 0:
        raise InvalidArgument("Poisson parameter must be >= 0")
    kmax = int(poisson.isf(TRUNCATION, lam)) + 1 if lam > 0 else 0
    return _trim(poisson.pmf(np.arange(kmax + 1), lam) if lam > 0 else np.array([1.0]))


def _trim(pmf: np.ndarray) -> np.ndarray:
    """Drop the upper tail below TRUNCATION and put its mass back on the last atom."""
    tail = np.cumsum(pmf[::-1])[::-1]
    keep = int(np.flatnonzero(tail >= TRUNCATION)[-1]) + 1
    out = pmf[:keep].copy()
    out[-1] += 1.0 - out.sum()
    return out


def gw_extinction(law: ReproductionLaw, tol: float = 1e-12, max_iter: int = 10_000_000) -> float:
    """Smallest fixed point of the generating function, iterating q <- G(q) from 0."""
    q = 0.0
    for _ in range(max_iter):
        nxt = float(law.pgf(q))
        if abs(nxt - q) < tol:
            return nxt
        q = nxt
    return q


def gw_simulate(law: ReproductionLaw, generations: int, rng: np.random.Generator,
                z0: int = 1, cap: int = 10**7) -> np.ndarray:
    """Population sizes Z_0..Z_generations; sizes above ``cap`` are sampled
    through the law's mean and variance (normal approximation)."""
    out = np.zeros(generations + 1, dtype=np.int64)
    out[0] = z = int(z0)
    mu = law.mean()
    var = float(np.arange(len(law.pmf)) ** 2 @ law.pmf) - mu * mu
    for n in range(1, generations + 1):
        if z == 0:
            break
        if z <= cap:
            z = int(law.sample(z, rng).sum())
        else:
            z = max(0, int(round(rng.normal(z * mu, np.sqrt(z * var)))))
        out[n] = z
    return out


def gw_simulate_many(law: ReproductionLaw, generations: int, trials: int,
                     rng: np.random.Generator, z0: int = 1) -> np.ndarray:
    """(trials, generations+1) array of independent paths."""
    return np.vstack([gw_simulate(law, generations, rng, z0) for _ in range(trials)])
