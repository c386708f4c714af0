"""Single-point crossover and per-bit mutation: coupling maps and exact kernels."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from rankga.core import Chromosome, hamming, pack_bits
from rankga.errors import InvalidArgument

LOG_SPACE_BELOW = 1e-3


@dataclass(frozen=True)
class CrossoverParams:
    p_C: float
    length: int

    def __post_init__(self):
        if not 0.0 <= self.p_C <= 1.0:
            raise InvalidArgument("p_C must lie in [0, 1]")
        if self.length < 1:
            raise InvalidArgument("length must be >= 1")


@dataclass(frozen=True)
class MutationParams:
    p_M: float
    length: int

    def __post_init__(self):
        if not 0.0 <= self.p_M <= 1.0:
            raise InvalidArgument("p_M must lie in [0, 1]")
        if self.length < 1:
            raise InvalidArgument("length must be >= 1")


@lru_cache(maxsize=64)
def prefix_masks(length: int) -> np.ndarray:
    """masks[k] selects logical positions 1..k, packed; shape (length+1, nbytes)."""
    bits = np.tri(length + 1, length, -1, dtype=np.uint8)
    out = pack_bits(bits)
    out.setflags(write=False)
    return out


def switch(k: int, u: Chromosome, v: Chromosome) -> Chromosome:
    """First k bits of u followed by the last length-k bits of v."""
    if u.length != v.length:
        raise InvalidArgument("parents must share one length")
    if not 1 <= k <= u.length - 1:
        raise InvalidArgument(f"cut position {k} outside 1..{u.length - 1}")
    mask = prefix_masks(u.length)[k]
    child = (u.array & mask) | (v.array & ~mask)
    return Chromosome(u.length, child.tobytes())


def crossover_pair(u: Chromosome, v: Chromosome, epsilon: int, k: int) -> tuple[Chromosome, Chromosome]:
    """(C(u,v,eps,k), C(v,u,eps,k)); length 1 has no cut and is left unchanged."""
    if not epsilon or u.length == 1:
        return u, v
    return switch(k, u, v), switch(k, v, u)


def crossover_prob(params: CrossoverParams, parents, children) -> float:
    u, v = parents
    u2, v2 = children
    same = float(u == u2 and v == v2)
    if params.length == 1:
        return same
    cuts = sum(
        1 for k in range(1, params.length)
        if switch(k, u, v) == u2 and switch(k, v, u) == v2
    )
    return (1.0 - params.p_C) * same + params.p_C * cuts / (params.length - 1)


def mutate(u: Chromosome, mask) -> Chromosome:
    """Flip bit j of u exactly where mask[j] = 1."""
    mask = np.asarray(mask, dtype=np.uint8)
    if mask.shape != (u.length,):
        raise InvalidArgument("mutation mask must have one flag per bit")
    return Chromosome(u.length, (u.array ^ pack_bits(mask)).tobytes())


def log_mutation_prob(params: MutationParams, distance: int) -> float:
    p = params.p_M
    h, rest = distance, params.length - distance
    if (h and p == 0.0) or (rest and p == 1.0):
        return -math.inf
    return (h * math.log(p) if h else 0.0) + (rest * math.log1p(-p) if rest else 0.0)


def mutation_prob(params: MutationParams, u: Chromosome, v: Chromosome) -> float:
    """M(u,v) = p_M^H (1-p_M)^(length-H)."""
    h = hamming(u, v)
    return mutation_prob_by_distance(params, h)


def mutation_prob_by_distance(params: MutationParams, h: int) -> float:
    if params.p_M < LOG_SPACE_BELOW:
        return math.exp(log_mutation_prob(params, h))
    return params.p_M**h * (1.0 - params.p_M) ** (params.length - h)


def mutation_matrix(params: MutationParams) -> np.ndarray:
    """Single-chromosome kernel over integer codes 0..2^length-1."""
    n = 1 << params.length
    codes = np.arange(n, dtype=np.int64)
    dist = np.bitwise_count(codes[:, None] ^ codes[None, :]).astype(np.int64)
    table = np.array([mutation_prob_by_distance(params, h) for h in range(params.length + 1)])
    return table[dist]


def crossover_matrix(params: CrossoverParams) -> np.ndarray:
    """Pair kernel over codes (u, v) -> u * 2^length + v."""
    length = params.length
    n = 1 << length
    u = np.repeat(np.arange(n, dtype=np.int64), n)
    v = np.tile(np.arange(n, dtype=np.int64), n)
    src = u * n + v
    out = np.zeros((n * n, n * n))
    out[src, src] += 1.0 - params.p_C if length > 1 else 1.0
    if length == 1:
        return out
    w = params.p_C / (length - 1)
    for k in range(1, length):
        low = (1 << k) - 1  # positions 1..k are bits 0..k-1
        a = (u & low) | (v & ~low)
        b = (v & low) | (u & ~low)
        np.add.at(out, (src, a * n + b), w)
    return out
