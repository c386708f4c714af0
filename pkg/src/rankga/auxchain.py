"""Auxiliary lower-bound chain N_n.

N_{n+1} = Psi_n(N_n) counts offspring that were selected among the best N_n
members, escaped crossover and received no mutation. The chain is a
pathwise lower bound for N(X_n, lambda) under the coupling and has an
explicit binomial-mixture transition law.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.special import gammaln, logsumexp, xlog1py, xlogy

from rankga.core import FitnessLandscape, Population
from rankga.engine.dynamics import GAConfig, RandomBlock, draw_block, step_packed
from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme, indices_from_uniforms

TRUNCATION = 1e-18


@dataclass(frozen=True)
class AuxParams:
    m: int
    scheme: SelectionScheme
    p_C: float
    survive_prob: float
    pi: float | None = field(init=False, default=None)

    def __post_init__(self):
        if self.m < 2 or self.m % 2:
            raise InvalidArgument("m must be even and >= 2")
        if not 0.0 < self.survive_prob <= 1.0:
            raise InvalidArgument("survive_prob must lie in (0, 1]")
        if not 0.0 <= self.p_C <= 1.0:
            raise InvalidArgument("p_C must lie in [0, 1]")
        self.scheme.check_size(self.m)
        if self.scheme.has_limit:
            object.__setattr__(self, "pi", self.scheme.sigma * (1 - self.p_C) * self.survive_prob)

    @classmethod
    def from_mutation(cls, m, scheme, p_C, p_M, length):
        return cls(m, scheme, p_C, math.exp(length * math.log1p(-p_M)))

    @classmethod
    def from_config(cls, config: GAConfig):
        return cls.from_mutation(config.m, config.scheme, config.p_C, config.p_M, config.length)

    @classmethod
    def with_pi(cls, m, scheme, pi, p_C=0.0):
        """Parameters whose survive_prob realises the requested pi."""
        return cls(m, scheme, p_C, pi / (scheme.sigma * (1 - p_C)))

    def eps_table(self) -> np.ndarray:
        return self.scheme.tail(self.m) * self.survive_prob


def eps_m(params: AuxParams, i: int) -> float:
    """Probability that one offspring is an unmutated copy drawn from the top i."""
    if not 0 <= i <= params.m:
        raise InvalidArgument(f"state {i} outside 0..{params.m}")
    return float(params.eps_table()[i])


# -- pathwise map --------------------------------------------------------------


def psi_table(block: RandomBlock, cumulative: np.ndarray) -> np.ndarray:
    """Psi_n(i) for every i in 0..m from one random block."""
    m = len(block.S)
    ranks = indices_from_uniforms(cumulative, block.S)
    alive = ~np.repeat(block.V, 2) & ~block.U.any(axis=1)
    # Gamma(i, j) = 1 iff i >= m - I(S^j) + 1
    thresholds = m - ranks[alive] + 1
    return np.cumsum(np.bincount(thresholds, minlength=m + 1)[: m + 1])


def psi_from_block(block: RandomBlock, scheme: SelectionScheme, i: int) -> int:
    m = len(block.S)
    if not 0 <= i <= m:
        raise InvalidArgument(f"state {i} outside 0..{m}")
    return int(psi_table(block, scheme.cumulative(m))[i])


# -- transition law ------------------------------------------------------------


def _log_binom(n, k):
    return gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)


def transition_row(params: AuxParams, i: int) -> np.ndarray:
    """P(N_{n+1} = j | N_n = i) for j = 0..m, in log space."""
    m, half = params.m, params.m // 2
    if not 0 <= i <= m:
        raise InvalidArgument(f"state {i} outside 0..{m}")
    row = np.zeros(m + 1)
    eps = params.eps_table()[i]
    if i == 0 or eps == 0.0:
        row[0] = 1.0
        return row
    b = np.arange(half + 1)[:, None]
    j = np.arange(m + 1)[None, :]
    valid = j <= 2 * b
    with np.errstate(invalid="ignore", divide="ignore"):
        log_b = _log_binom(half, b) + xlogy(b, 1 - params.p_C) + xlogy(half - b, params.p_C)
        log_j = np.where(valid, _log_binom(2 * b, np.minimum(j, 2 * b)), -np.inf)
        log_j = log_j + xlogy(j, eps) + xlog1py(2 * b - j, -eps)
        terms = np.where(valid, log_b + log_j, -np.inf)
    terms[np.isnan(terms)] = -np.inf
    top = terms.max()
    terms[terms < top + math.log(TRUNCATION)] = -np.inf
    with np.errstate(divide="ignore"):
        row = np.exp(logsumexp(terms, axis=0))
    return row


def transition_matrix(params: AuxParams) -> np.ndarray:
    return np.vstack([transition_row(params, i) for i in range(params.m + 1)])


def transition_prob(params: AuxParams, i: int, j: int) -> float:
    if not 0 <= j <= params.m:
        raise InvalidArgument(f"state {j} outside 0..{params.m}")
    return float(transition_row(params, i)[j])


def transition_prob_exact(m: int, masses, p_C, survive_prob, i: int, j: int) -> Fraction:
    """The double b-sum in rational arithmetic (all inputs converted exactly)."""
    masses = [Fraction(x) for x in masses]
    p_C, survive = Fraction(p_C), Fraction(survive_prob)
    eps = sum(masses[m - i:], Fraction(0)) * survive
    half = m // 2
    total = Fraction(0)
    for b in range(half + 1):
        if j > 2 * b:
            continue
        total += (math.comb(half, b) * (1 - p_C) ** b * p_C ** (half - b)
                  * math.comb(2 * b, j) * eps**j * (1 - eps) ** (2 * b - j))
    return total


def sample_step(params: AuxParams, i, rng: np.random.Generator):
    """Draw N_{n+1} given N_n = i (scalar or array of states)."""
    eps = params.eps_table()[np.asarray(i)]
    uncrossed = rng.binomial(params.m // 2, 1.0 - params.p_C, size=np.shape(eps))
    return rng.binomial(2 * uncrossed, eps)


def drift_mean(params: AuxParams, i: int) -> float:
    """E[N_{n+1} | N_n = i] = m (1 - p_C) eps_m(i)."""
    return params.m * (1 - params.p_C) * eps_m(params, i)


# -- hitting times -------------------------------------------------------------


@dataclass(frozen=True)
class HittingResult:
    time: int
    state: int
    hit: bool   # False when the cap was reached first (censored)


def _target_hit(target: str, delta: float, m: int):
    if target == "absorb":
        return lambda s: s == 0
    if target == "above":
        return lambda s: s > delta * m
    if target == "below":
        return lambda s: s < delta * m
    raise InvalidArgument(f"unknown hitting target {target!r}")


def simulate_hitting(params: AuxParams, start: int, target: str = "absorb", delta: float = 0.0,
                     cap: int = 10**6, rng: np.random.Generator | None = None) -> HittingResult:
    """First n >= 0 with the chain in the target set.

    ``target`` is "absorb" (N_n = 0), "above" (N_n > delta m) or "below"
    (N_n < delta m). Hitting the cap returns a censored result.
    """
    if not 0 <= start <= params.m:
        raise InvalidArgument(f"start {start} outside 0..{params.m}")
    rng = np.random.default_rng() if rng is None else rng
    hit = _target_hit(target, delta, params.m)
    eps = params.eps_table()
    half, q = params.m // 2, 1.0 - params.p_C
    s = int(start)
    for n in range(cap + 1):
        if hit(s):
            return HittingResult(n, s, True)
        if n == cap:
            break
        s = int(rng.binomial(2 * rng.binomial(half, q), eps[s]))
    return HittingResult(cap, s, False)


def simulate_hitting_many(params: AuxParams, start: int, n_trials: int, target: str = "absorb",
                          delta: float = 0.0, cap: int = 10**6,
                          rng: np.random.Generator | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised hitting times of independent copies; returns (times, hit flags)."""
    rng = np.random.default_rng() if rng is None else rng
    hit = _target_hit(target, delta, params.m)
    eps = params.eps_table()
    states = np.full(n_trials, int(start))
    times = np.full(n_trials, cap)
    done = np.zeros(n_trials, bool)
    for n in range(cap + 1):
        now = ~done & hit(states)
        times[now] = n
        done |= now
        if done.all() or n == cap:
            break
        live = np.flatnonzero(~done)
        states[live] = sample_step(params, states[live], rng)
    return times, done


def quasi_stationary_mean(params: AuxParams, start: int, window: int = 10_000,
                          burn_in: int | None = None, rng: np.random.Generator | None = None):
    """Time average of N_n / m over ``window`` steps after a burn-in of
    10 * ceil(ln m) steps; None if the chain is absorbed before the window ends."""
    rng = np.random.default_rng() if rng is None else rng
    burn = 10 * math.ceil(math.log(params.m)) if burn_in is None else burn_in
    eps = params.eps_table()
    half, q = params.m // 2, 1.0 - params.p_C
    s = int(start)
    total = 0
    for n in range(burn + window):
        s = int(rng.binomial(2 * rng.binomial(half, q), eps[s]))
        if s == 0:
            return None
        if n >= burn:
            total += s
    return total / (window * params.m)


# -- pathwise domination ---------------------------------------------------------


def domination_violations(config: GAConfig, x0: Population, generations: int,
                          restart_times, rng: np.random.Generator) -> int:
    """Count failures of N(X_n, lam) >= N_n(t, N(X_t, lam)) along one coupled run.

    Every lambda in the landscape's value set and every restart time t is
    checked at every generation n >= t; the GA and all auxiliary chains
    consume the same random blocks.
    """
    f: FitnessLandscape = config.landscape
    lambdas = f.values()
    cum = config.cumulative
    restart = sorted(set(int(t) for t in restart_times))
    chains = np.zeros((len(restart), len(lambdas)), dtype=np.int64)
    active = np.zeros(len(restart), bool)
    packed = x0.packed
    fitness = f.evaluate_packed(packed)
    violations = 0
    for n in range(generations + 1):
        counts = (fitness[None, :] >= lambdas[:, None]).sum(axis=1)
        for k, t in enumerate(restart):
            if t == n:
                chains[k] = counts
                active[k] = True
        if active.any():
            violations += int(np.count_nonzero(counts[None, :] < chains[active]))
        if n == generations:
            break
        block = draw_block(config, rng)
        psi = psi_table(block, cum)
        chains = psi[chains]
        packed, _ = step_packed(packed, fitness, block, config)
        fitness = f.evaluate_packed(packed)
    return violations


def psi_tables(blocks: RandomBlock, cumulative: np.ndarray) -> np.ndarray:
    """Psi for a stack of K blocks: (K, m+1) array, row k from block k."""
    K, m = blocks.S.shape
    ranks = indices_from_uniforms(cumulative, blocks.S)
    alive = ~np.repeat(blocks.V, 2, axis=1) & ~blocks.U.any(axis=2)
    thresholds = np.where(alive, m - ranks + 1, m + 1) + (np.arange(K) * (m + 2))[:, None]
    hist = np.bincount(thresholds.ravel(), minlength=K * (m + 2)).reshape(K, m + 2)
    return np.cumsum(hist[:, : m + 1], axis=1)


def domination_violations_many(config: GAConfig, starts: np.ndarray, generations: int,
                               restart_times, rng: np.random.Generator) -> np.ndarray:
    """Batched ``domination_violations`` over K independent coupled runs.

    ``starts`` is a (K, m, nbytes) packed stack; run k consumes block k of
    every stacked draw. Returns the violation count of each run.
    """
    from rankga.engine.dynamics import draw_blocks, step_many

    f: FitnessLandscape = config.landscape
    lambdas = f.values()
    cum = config.cumulative
    K = starts.shape[0]
    restart = sorted(set(int(t) for t in restart_times))
    chains = np.zeros((K, len(restart), len(lambdas)), dtype=np.int64)
    active = np.zeros(len(restart), bool)
    packed = np.array(starts, dtype=np.uint8)
    fitness = f.evaluate_packed(packed)
    violations = np.zeros(K, dtype=np.int64)
    for n in range(generations + 1):
        counts = (fitness[:, None, :] >= lambdas[None, :, None]).sum(axis=2)   # (K, L)
        for k, t in enumerate(restart):
            if t == n:
                chains[:, k] = counts
                active[k] = True
        if active.any():
            bad = counts[:, None, :] < chains[:, active]
            violations += bad.reshape(K, -1).sum(axis=1)
        if n == generations:
            break
        blocks = draw_blocks(config, K, rng)
        psi = psi_tables(blocks, cum)
        chains = np.take_along_axis(psi, chains.reshape(K, -1), axis=1).reshape(chains.shape)
        packed = step_many(packed, fitness, blocks, config)
        fitness = f.evaluate_packed(packed)
    return violations
