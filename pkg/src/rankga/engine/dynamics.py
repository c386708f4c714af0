"""The coupled generation map and trajectory driver."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from rankga.core import FitnessLandscape, Population, levels_of, popcount
from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme, indices_from_uniforms, rank_from_keys
from rankga.streams import stream
from rankga.variation import prefix_masks


@dataclass(frozen=True)
class GAConfig:
    length: int
    m: int
    scheme: SelectionScheme
    p_C: float
    p_M: float
    landscape: FitnessLandscape
    seed: int = 0
    horizon: int = 100
    pi: float | None = field(init=False, default=None)

    def __post_init__(self):
        if self.length < 1:
            raise InvalidArgument("length must be >= 1")
        if self.m < 2 or self.m % 2:
            raise InvalidArgument("m must be even and >= 2")
        if not (0 <= self.p_C <= 1 and 0 <= self.p_M <= 1):
            raise InvalidArgument("p_C and p_M must lie in [0, 1]")
        if self.landscape.length != self.length:
            raise InvalidArgument("landscape length does not match config length")
        if self.horizon < 0:
            raise InvalidArgument("horizon must be >= 0")
        self.scheme.check_size(self.m)
        if self.scheme.has_limit:
            survive = math.exp(self.length * math.log1p(-self.p_M)) if self.p_M < 1 else 0.0
            object.__setattr__(self, "pi", self.scheme.sigma * (1 - self.p_C) * survive)

    @property
    def cumulative(self) -> np.ndarray:
        return self.scheme.cumulative(self.m)

    def replace(self, **changes) -> "GAConfig":
        kw = {k: getattr(self, k) for k in
              ("length", "m", "scheme", "p_C", "p_M", "landscape", "seed", "horizon")}
        kw.update(changes)
        return GAConfig(**kw)


@dataclass(frozen=True, eq=False)
class RandomBlock:
    """Random input of one generation.

    S: m selection uniforms; V: m/2 crossover flags; W: m/2 cut positions in
    1..length-1; U: (m, length) mutation flags; R: m tie-breaking keys used to
    draw the generation's ranking permutation.
    """

    S: np.ndarray
    V: np.ndarray
    W: np.ndarray
    U: np.ndarray
    R: np.ndarray

    @property
    def m(self) -> int:
        return len(self.S)

    @property
    def length(self) -> int:
        return self.U.shape[1]

    def check(self, m: int, length: int):
        if (self.S.shape != (m,) or self.R.shape != (m,) or self.V.shape != (m // 2,)
                or self.W.shape != (m // 2,) or self.U.shape != (m, length)):
            raise InvalidArgument(f"random block does not match m={m}, length={length}")


def draw_block(config: GAConfig, rng: np.random.Generator) -> RandomBlock:
    """Draw S, then V and W, then U (member-major, bit-major), then tie keys."""
    m, length = config.m, config.length
    S = rng.random(m)
    V = rng.random(m // 2) < config.p_C
    W = rng.integers(1, max(length, 2), size=m // 2)
    U = rng.random((m, length)) < config.p_M
    R = rng.random(m)
    return RandomBlock(S, V, W, U, R)


def select_parents(fitness: np.ndarray, block: RandomBlock, cumulative: np.ndarray) -> np.ndarray:
    """S(x, S^j) for every j: member indices (0-based) chosen by the block."""
    perm = rank_from_keys(fitness, block.R)
    return perm[indices_from_uniforms(cumulative, block.S) - 1]


def vary(packed: np.ndarray, parents: np.ndarray, block: RandomBlock, length: int) -> np.ndarray:
    """Crossover of consecutive selected pairs, then mutation; returns new packed rows."""
    a = packed[parents[0::2]]
    b = packed[parents[1::2]]
    out = np.empty((len(parents), packed.shape[1]), dtype=np.uint8)
    if length > 1 and block.V.any():
        mask = prefix_masks(length)[block.W]
        mask = np.where(block.V[:, None], mask, np.uint8(0xFF))
        out[0::2] = (a & mask) | (b & ~mask)
        out[1::2] = (b & mask) | (a & ~mask)
    else:
        out[0::2] = a
        out[1::2] = b
    out ^= np.packbits(block.U, axis=1, bitorder="little")
    return out


def step_packed(packed, fitness, block, config):
    parents = select_parents(fitness, block, config.cumulative)
    return vary(packed, parents, block, config.length), parents


def step(x: Population, block: RandomBlock, config: GAConfig) -> Population:
    """Phi_n(x): one generation driven entirely by ``block``."""
    block.check(config.m, config.length)
    if x.m != config.m or x.length != config.length:
        raise InvalidArgument("population shape does not match config")
    new, _ = step_packed(x.packed, config.landscape.fitness(x), block, config)
    return Population(config.length, new)


def draw_blocks(config: GAConfig, chains: int, rng: np.random.Generator) -> RandomBlock:
    """One block per chain, stacked along a leading axis of size ``chains``."""
    m, length = config.m, config.length
    S = rng.random((chains, m))
    V = rng.random((chains, m // 2)) < config.p_C
    W = rng.integers(1, max(length, 2), size=(chains, m // 2))
    U = rng.random((chains, m, length)) < config.p_M
    R = rng.random((chains, m))
    return RandomBlock(S, V, W, U, R)


def step_many(packed: np.ndarray, fitness: np.ndarray, blocks: RandomBlock,
              config: GAConfig) -> np.ndarray:
    """Advance independent chains at once: packed (K, m, nbytes), fitness (K, m).

    Row k of the result equals ``step_packed`` on chain k with block k; the
    K populations are laid end to end so that pairs (2i, 2i+1) stay aligned.
    """
    K, m, nb = packed.shape
    perm = np.lexsort((blocks.R, fitness), axis=-1)
    ranks = indices_from_uniforms(config.cumulative, blocks.S) - 1
    parents = np.take_along_axis(perm, ranks, axis=-1) + (np.arange(K) * m)[:, None]
    flat = RandomBlock(blocks.S.ravel(), blocks.V.ravel(), blocks.W.ravel(),
                       blocks.U.reshape(K * m, -1), blocks.R.ravel())
    out = vary(packed.reshape(K * m, nb), parents.ravel(), flat, config.length)
    return out.reshape(K, m, nb)


# -- traces --------------------------------------------------------------------


@dataclass(frozen=True)
class TraceSpec:
    """Which observables a run records each generation."""

    rhos: tuple[float, ...] = ()
    lambdas: tuple[float, ...] = ()
    genealogy: bool = False
    catastrophe_rho: float | None = None
    dump_populations: bool = False


@dataclass(frozen=True)
class TraceRecord:
    generation: int
    best: float
    levels: tuple[float, ...] = ()
    counts: tuple[int, ...] = ()
    T: int | None = None
    N_star: int | None = None
    catastrophe: bool = False
    population: tuple[str, ...] | None = None

    def row(self) -> list:
        out = [self.generation, repr(self.best), *map(repr, self.levels), *self.counts]
        if self.T is not None:
            out += [self.T, self.N_star]
        out.append(int(self.catastrophe))
        return out


def rho_rank(rho: float, m: int) -> int:
    return max(1, min(m, int(math.floor(rho * m + 1e-9))))


class _Recorder:
    def __init__(self, config: GAConfig, spec: TraceSpec):
        self.config, self.spec = config, spec
        self.ranks = [rho_rank(r, config.m) for r in spec.rhos]
        self.cat_rank = None if spec.catastrophe_rho is None else rho_rank(spec.catastrophe_rho, config.m)
        self.running = -math.inf

    def record(self, n, packed, fitness, gen=None) -> TraceRecord:
        levels = tuple(float(v) for v in levels_of(fitness, self.ranks)) if self.ranks else ()
        counts = tuple(int(np.count_nonzero(fitness >= lam)) for lam in self.spec.lambdas)
        best = float(fitness.max())
        cat = False
        if self.cat_rank is not None:
            self.running = max(self.running, float(levels_of(fitness, [self.cat_rank])[0]))
            cat = best < self.running
        pop = None
        if self.spec.dump_populations:
            pop = tuple(Population(self.config.length, packed).to_lines())
        T = N_star = None
        if gen is not None:
            T, N_star = gen.T, gen.N_star
        return TraceRecord(n, best, levels, counts, T, N_star, cat, pop)


Observer = Callable[[int, Population], None]


def run(config: GAConfig, x0: Population, observers: Sequence[Observer] = (),
        spec: TraceSpec = TraceSpec(), rng: np.random.Generator | None = None) -> list[TraceRecord]:
    """Apply ``config.horizon`` generations from x0, one record per generation."""
    from rankga.engine.genealogy import genealogy_init, genealogy_step

    if x0.m != config.m or x0.length != config.length:
        raise InvalidArgument("initial population does not match config")
    rng = stream(config.seed, 0, "engine") if rng is None else rng
    f = config.landscape
    packed = x0.packed
    fitness = f.evaluate_packed(packed)
    gen = genealogy_init(x0) if spec.genealogy else None
    rec = _Recorder(config, spec)
    trace = [rec.record(0, packed, fitness, gen)]
    for obs in observers:
        obs(0, x0)
    for n in range(1, config.horizon + 1):
        block = draw_block(config, rng)
        packed, parents = step_packed(packed, fitness, block, config)
        fitness = f.evaluate_packed(packed)
        if gen is not None:
            gen = genealogy_step(gen, block, parents, packed, config.length)
        trace.append(rec.record(n, packed, fitness, gen))
        if observers:
            pop = Population(config.length, packed)
            for obs in observers:
                obs(n, pop)
    return trace


def coupled_run(config: GAConfig, starts: Sequence[Population], spec: TraceSpec = TraceSpec(),
                rng: np.random.Generator | None = None) -> list[list[TraceRecord]]:
    """Run every start on the identical sequence of random blocks."""
    for x in starts:
        if x.m != config.m or x.length != config.length:
            raise InvalidArgument("all starts must match (m, length) of the config")
    rng = stream(config.seed, 0, "engine") if rng is None else rng
    f = config.landscape
    states = [x.packed for x in starts]
    fits = [f.evaluate_packed(p) for p in states]
    recs = [_Recorder(config, spec) for _ in starts]
    traces = [[r.record(0, p, fi)] for r, p, fi in zip(recs, states, fits)]
    for n in range(1, config.horizon + 1):
        block = draw_block(config, rng)
        for k in range(len(states)):
            states[k], _ = step_packed(states[k], fits[k], block, config)
            fits[k] = f.evaluate_packed(states[k])
            traces[k].append(recs[k].record(n, states[k], fits[k]))
    return traces


def observe_catastrophe(best: Sequence[float], levels: Sequence[float]) -> np.ndarray:
    """flag[n] = best[n] < max_{s<=n} levels[s]; ``levels`` holds Lambda(X_s, floor(rho m))."""
    best = np.asarray(best, dtype=np.float64)
    running = np.maximum.accumulate(np.asarray(levels, dtype=np.float64))
    return best < running


def catastrophe_flags(trace: Sequence[TraceRecord], level_index: int = 0) -> np.ndarray:
    return observe_catastrophe([r.best for r in trace], [r.levels[level_index] for r in trace])


def contains_optimum(packed: np.ndarray, landscape: FitnessLandscape) -> bool:
    return bool(np.any(landscape.evaluate_packed(packed) >= landscape.max_fitness()))


def count_masters(packed: np.ndarray, length: int) -> int:
    return int(np.count_nonzero(popcount(packed) == length))
