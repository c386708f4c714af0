"""Exact transition matrix P_SGA = P_S P_C P_M for tiny instances, and
first-passage tools on it.

States are populations encoded as integers: member i (0-based) is the digit
of weight (2^length)^(m-1-i), and a chromosome's digit is its integer code
(bit j-1 = position j). With this ordering the crossover and mutation
matrices are Kronecker powers of the pair and single-chromosome kernels.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.sparse.csgraph import connected_components

from rankga.core import Population
from rankga.engine.dynamics import GAConfig
from rankga.errors import CapacityError, DomainError
from rankga.variation import CrossoverParams, MutationParams, crossover_matrix, mutation_matrix

STATE_CAP = 4096


def n_states(config: GAConfig) -> int:
    return (1 << config.length) ** config.m


def state_codes(index: int, m: int, length: int) -> tuple[int, ...]:
    base = 1 << length
    out = []
    for _ in range(m):
        index, r = divmod(index, base)
        out.append(r)
    return tuple(reversed(out))


def state_index(codes, length: int) -> int:
    base = 1 << length
    return reduce(lambda acc, c: acc * base + int(c), codes, 0)


def population_index(x: Population) -> int:
    return state_index(x.to_ints(), x.length)


def all_codes(config: GAConfig) -> np.ndarray:
    """(n_states, m) array of member codes for every state index."""
    base = 1 << config.length
    idx = np.arange(n_states(config), dtype=np.int64)
    pows = base ** np.arange(config.m - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // pows) % base


def _multiset_permutations(items):
    counts = Counter(items)
    keys = sorted(counts)
    n = len(items)
    buf = []

    def rec():
        if len(buf) == n:
            yield tuple(buf)
            return
        for k in keys:
            if counts[k]:
                counts[k] -= 1
                buf.append(k)
                yield from rec()
                buf.pop()
                counts[k] += 1

    yield from rec()


def _kron_power(vec_or_mat, times):
    return reduce(np.kron, [vec_or_mat] * times)


def selection_matrix(config: GAConfig, averaging: str = "generation") -> np.ndarray:
    """P_S over all populations.

    ``averaging="generation"`` draws one tie-consistent ranking for all m
    draws of a generation (what the simulator does) and averages the m-fold
    product over rankings. ``averaging="draw"`` averages sel(x, .) over
    rankings first and then takes the product, the literal reading of the
    product formula with a ranking redrawn for each draw. Both agree when
    no two distinct chromosomes of a population share a fitness value.
    """
    if averaging not in ("generation", "draw"):
        raise ValueError("averaging must be 'generation' or 'draw'")
    m, length = config.m, config.length
    base = 1 << length
    masses = config.scheme.masses(m)
    fit_of_code = config.landscape.evaluate_ints(np.arange(base))
    codes = all_codes(config)
    out = np.empty((len(codes), len(codes)))
    for s, row_codes in enumerate(codes):
        fit = fit_of_code[row_codes]
        order = np.argsort(fit, kind="stable")
        groups = []
        start = 0
        for r in range(1, m + 1):
            if r == m or fit[order[r]] != fit[order[start]]:
                groups.append(tuple(int(c) for c in row_codes[order[start:r]]))
                start = r
        # every distinct arrangement of codes over ranks is equally likely
        arrangements = [()]
        for g in groups:
            arrangements = [a + p for a in arrangements for p in _multiset_permutations(list(g))]
        qs = Counter()
        for arr in arrangements:
            q = np.zeros(base)
            np.add.at(q, np.asarray(arr), masses)
            qs[tuple(q)] += 1
        total = sum(qs.values())
        if averaging == "draw":
            qbar = sum(np.asarray(q) * c for q, c in qs.items()) / total
            out[s] = _kron_power(qbar, m)
        else:
            out[s] = sum(_kron_power(np.asarray(q), m) * c for q, c in qs.items()) / total
    return out


def crossover_population_matrix(config: GAConfig) -> np.ndarray:
    pair = crossover_matrix(CrossoverParams(config.p_C, config.length))
    return _kron_power(pair, config.m // 2)


def mutation_population_matrix(config: GAConfig) -> np.ndarray:
    single = mutation_matrix(MutationParams(config.p_M, config.length))
    return _kron_power(single, config.m)


@dataclass(frozen=True, eq=False)
class ExactKernels:
    P_S: np.ndarray
    P_C: np.ndarray
    P_M: np.ndarray

    @property
    def P(self) -> np.ndarray:
        return self.P_S @ self.P_C @ self.P_M


def exact_kernels(config: GAConfig, cap: int = STATE_CAP, averaging: str = "generation") -> ExactKernels:
    if n_states(config) > cap:
        raise CapacityError(f"{n_states(config)} states exceed the exact-oracle cap {cap}")
    return ExactKernels(
        selection_matrix(config, averaging),
        crossover_population_matrix(config),
        mutation_population_matrix(config),
    )


def exact_transition_matrix(config: GAConfig, cap: int = STATE_CAP) -> np.ndarray:
    """P_SGA as a dense row-stochastic matrix over all populations."""
    return exact_kernels(config, cap).P


# -- chain analysis -------------------------------------------------------------


def stationary_distribution(P: np.ndarray, tol: float = 1e-14, max_iter: int = 1_000_000) -> np.ndarray:
    """Invariant probability vector by power iteration."""
    mu = np.full(P.shape[0], 1.0 / P.shape[0])
    for _ in range(max_iter):
        nxt = mu @ P
        nxt /= nxt.sum()
        if np.abs(nxt - mu).sum() < tol:
            return nxt
        mu = nxt
    raise RuntimeError("power iteration did not converge")


def stationary_solve(P: np.ndarray) -> np.ndarray:
    """Invariant vector from the linear system mu (P - I) = 0, sum(mu) = 1."""
    n = P.shape[0]
    A = (P - np.eye(n)).T
    A[-1] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    return np.linalg.solve(A, b)


def period(P: np.ndarray) -> int:
    """Period of an irreducible chain (gcd of cycle lengths through BFS levels)."""
    n = P.shape[0]
    adj = P > 0
    level = np.full(n, -1)
    level[0] = 0
    frontier = [0]
    while frontier:
        nxt = []
        for u in frontier:
            for v in np.flatnonzero(adj[u]):
                if level[v] < 0:
                    level[v] = level[u] + 1
                    nxt.append(v)
        frontier = nxt
    g = 0
    us, vs = np.nonzero(adj)
    for d in np.unique(level[us] + 1 - level[vs]):
        g = np.gcd(g, int(abs(d)))
    return int(g)


def is_irreducible(P: np.ndarray) -> bool:
    n, _ = connected_components(P > 0, directed=True, connection="strong")
    return n == 1


@dataclass(frozen=True)
class InvariantBound:
    lhs: float                # mu(G)
    rhs: float                # sup_V P(tau_G < tau_V) * sup_G E tau_V
    hit_before: float
    return_time: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-9) + 1e-12


def check_invariant_measure_bound(P: np.ndarray, V, G) -> InvariantBound:
    """mu(G) <= sup_{x in V} P_x(tau_G < tau_V) * sup_{y in G} E_y(tau_V).

    tau_V = min{n >= 1 : X_n in V}; tau_G = min{n >= 0 : X_n in G}.
    """
    n = P.shape[0]
    inV = np.zeros(n, bool)
    inV[np.asarray(list(V), dtype=np.int64)] = True
    inG = np.zeros(n, bool)
    inG[np.asarray(list(G), dtype=np.int64)] = True
    if not inV.any() or not inG.any():
        raise DomainError("V and G must be non-empty")
    if not is_irreducible(P):
        raise DomainError("chain is reducible")
    if period(P) != 1:
        raise DomainError("chain is periodic")
    mu = stationary_solve(P)
    lhs = float(mu[inG].sum())

    # g(y) = P_y(reach G\V before V, counting time 0)
    free = ~(inG | inV)
    g = np.where(inG & ~inV, 1.0, 0.0)
    if free.any():
        A = np.eye(free.sum()) - P[np.ix_(free, free)]
        b = P[np.ix_(free, inG & ~inV)].sum(axis=1)
        g[free] = np.linalg.solve(A, b)
    h = np.where(inG, 1.0, P @ g)
    hit_before = float(h[inV].max())

    # E_z tau_V for z outside V, then one forced step from every y
    outV = ~inV
    k = np.zeros(n)
    if outV.any():
        A = np.eye(outV.sum()) - P[np.ix_(outV, outV)]
        k[outV] = np.linalg.solve(A, np.ones(outV.sum()))
    ret = 1.0 + P[:, outV] @ k[outV]
    return_time = float(ret[inG].max())
    return InvariantBound(lhs, hit_before * return_time, hit_before, return_time)


def optimum_states(config: GAConfig) -> np.ndarray:
    """Indices of populations containing a globally optimal chromosome."""
    base = 1 << config.length
    fit = config.landscape.evaluate_ints(np.arange(base))
    best = fit.max()
    return np.flatnonzero((fit[all_codes(config)] >= best).any(axis=1))
