"""Ranking selection: F_m tables, random tie-breaking ranks, limit repartition."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from rankga.core import FitnessLandscape, Population
from rankga.errors import InvalidArgument, UnsupportedScheme

_TOL = 1e-12


@dataclass(frozen=True)
class SelectionScheme:
    kind: str
    eta_minus: float = 0.0
    eta_plus: float = 0.0
    t: int = 0
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind == "linear-ranking":
            if not (0 <= self.eta_minus <= self.eta_plus):
                raise InvalidArgument("linear ranking needs 0 <= eta- <= eta+")
            if abs(self.eta_minus + self.eta_plus - 2.0) > _TOL:
                raise InvalidArgument("linear ranking needs eta- + eta+ = 2")
        elif self.kind == "tournament":
            if int(self.t) != self.t or self.t < 2:
                raise InvalidArgument("tournament size t must be an integer >= 2")
        elif self.kind == "custom":
            arr = np.asarray(self.table, dtype=np.float64)
            if arr.ndim != 1 or len(arr) < 2 or np.any(arr < 0):
                raise InvalidArgument("custom table must be a nonnegative vector")
            if abs(arr.sum() - 1.0) > _TOL:
                raise InvalidArgument("custom table must sum to 1")
        else:
            raise InvalidArgument(f"unknown selection scheme {self.kind!r}")

    @classmethod
    def linear_ranking(cls, eta_plus: float, eta_minus: float | None = None):
        if eta_minus is None:
            eta_minus = 2.0 - eta_plus
        return cls("linear-ranking", eta_minus=float(eta_minus), eta_plus=float(eta_plus))

    @classmethod
    def tournament(cls, t: int):
        return cls("tournament", t=int(t))

    @classmethod
    def custom(cls, table):
        return cls("custom", table=tuple(float(v) for v in table))

    def check_size(self, m: int):
        if m < 2:
            raise InvalidArgument("population size must be >= 2")
        if self.kind == "tournament" and self.t > m:
            raise InvalidArgument(f"tournament size {self.t} exceeds m={m}")
        if self.kind == "custom" and len(self.table) != m:
            raise InvalidArgument(f"custom table has {len(self.table)} entries, m={m}")

    def masses(self, m: int) -> np.ndarray:
        """F_m(1), ..., F_m(m); rank m is the best."""
        return _masses(self, m)

    def cumulative(self, m: int) -> np.ndarray:
        """F_m(1)+...+F_m(i) for i=1..m, last entry exactly 1."""
        return _cumulative(self, m)

    def tail(self, m: int) -> np.ndarray:
        """tail[i] = F_m(m-i+1)+...+F_m(m) for i=0..m (mass of the best i ranks)."""
        return _tail(self, m)

    @property
    def has_limit(self) -> bool:
        return self.kind != "custom"

    @property
    def sigma(self) -> float:
        return drift(self)


@lru_cache(maxsize=256)
def _masses(scheme: SelectionScheme, m: int) -> np.ndarray:
    scheme.check_size(m)
    i = np.arange(1, m + 1, dtype=np.float64)
    if scheme.kind == "linear-ranking":
        em, ep = scheme.eta_minus, scheme.eta_plus
        out = (em + (ep - em) * (i - 1) / (m - 1)) / m
    elif scheme.kind == "tournament":
        t = scheme.t
        # i^t - (i-1)^t over m^t, evaluated as a difference of powers of i/m
        out = (i / m) ** t - ((i - 1) / m) ** t
    else:
        out = np.asarray(scheme.table, dtype=np.float64).copy()
    out.setflags(write=False)
    return out


def _compensated_prefix(values: np.ndarray) -> np.ndarray:
    out = np.empty_like(values)
    total, comp = 0.0, 0.0
    for k, v in enumerate(values):
        # Neumaier summation
        s = total + v
        if abs(total) >= abs(v):
            comp += (total - s) + v
        else:
            comp += (v - s) + total
        total = s
        out[k] = total + comp
    return out


@lru_cache(maxsize=256)
def _cumulative(scheme: SelectionScheme, m: int) -> np.ndarray:
    cum = _compensated_prefix(_masses(scheme, m))
    cum[-1] = 1.0
    cum = np.maximum.accumulate(cum)
    cum.setflags(write=False)
    return cum


@lru_cache(maxsize=256)
def _tail(scheme: SelectionScheme, m: int) -> np.ndarray:
    out = np.zeros(m + 1)
    out[1:] = _compensated_prefix(_masses(scheme, m)[::-1])
    out[m] = 1.0
    out = np.minimum(np.maximum.accumulate(out), 1.0)
    out.setflags(write=False)
    return out


def selection_mass(scheme: SelectionScheme, m: int, i: int) -> float:
    if not 1 <= i <= m:
        raise InvalidArgument(f"rank {i} outside 1..{m}")
    return float(scheme.masses(m)[i - 1])


# -- ranking -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RankAssignment:
    """A tie-consistent sorting permutation.

    ``perm[r-1]`` is the (0-based) member holding rank r, ranks increasing
    with fitness; ``rank[i]`` is the rank (1-based) of member i.
    """

    perm: np.ndarray
    rank: np.ndarray

    @classmethod
    def from_perm(cls, perm: np.ndarray) -> "RankAssignment":
        perm = np.asarray(perm, dtype=np.int64)
        rank = np.empty_like(perm)
        rank[perm] = np.arange(1, len(perm) + 1)
        return cls(perm, rank)


def rank_from_keys(fitness: np.ndarray, keys: np.ndarray) -> np.ndarray:
    """Sorting permutation by fitness; i.i.d. uniform keys break ties uniformly."""
    return np.lexsort((keys, fitness))


def rank_population(x: Population, f: FitnessLandscape, rng: np.random.Generator) -> RankAssignment:
    """Draw a fresh uniformly random tie-consistent ranking of x."""
    fitness = f.fitness(x)
    return RankAssignment.from_perm(rank_from_keys(fitness, rng.random(x.m)))


# -- inverse transform -------------------------------------------------------


def indices_from_uniforms(cumulative: np.ndarray, s) -> np.ndarray:
    """Vectorised I(s), 1-based rank indices."""
    idx = np.searchsorted(cumulative, s, side="right") + 1
    return np.minimum(idx, len(cumulative))


def index_from_uniform(scheme: SelectionScheme, m: int, s: float) -> int:
    """The unique rank i with F_m(1)+..+F_m(i-1) <= s < F_m(1)+..+F_m(i)."""
    if not 0.0 <= s < 1.0:
        raise InvalidArgument("s must lie in [0, 1)")
    return int(indices_from_uniforms(scheme.cumulative(m), s))


# -- limit objects -----------------------------------------------------------


def limit_repartition(scheme: SelectionScheme, s):
    """F(s): the limit of the cumulative selection mass of the lowest fraction s."""
    if scheme.kind == "linear-ranking":
        em, ep = scheme.eta_minus, scheme.eta_plus
        return em * np.asarray(s) + 0.5 * (ep - em) * np.asarray(s) ** 2
    if scheme.kind == "tournament":
        return np.asarray(s, dtype=np.float64) ** scheme.t
    raise UnsupportedScheme("custom tables have no declared limit repartition")


def drift(scheme: SelectionScheme) -> float:
    """Selection drift sigma, the left derivative of F at 1."""
    if scheme.kind == "linear-ranking":
        return scheme.eta_plus
    if scheme.kind == "tournament":
        return float(scheme.t)
    raise UnsupportedScheme("custom tables have no selection drift")


def validate_drift_hypothesis(scheme: SelectionScheme, m: int, epsilon: float) -> float | None:
    """Largest delta in (0, 1] such that the top-i selection mass stays within
    relative error epsilon of sigma*i/m for all i <= floor(delta*m).

    Returns None when the condition already fails at i = 1.
    """
    if epsilon <= 0:
        raise InvalidArgument("epsilon must be positive")
    sigma = drift(scheme)
    tail = scheme.tail(m)[1:]
    target = sigma * np.arange(1, m + 1) / m
    ok = np.abs(tail - target) <= epsilon * target * (1 + 1e-12) + 1e-15
    if not ok[0]:
        return None
    bad = np.flatnonzero(~ok)
    k = m if len(bad) == 0 else int(bad[0])
    return k / m
