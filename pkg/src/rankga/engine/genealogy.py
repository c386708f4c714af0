"""Progeny of the initial Master sequence 1...1 (flags M_n, totals T_n, N*_n, D_n)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rankga.core import Population, popcount


@dataclass(frozen=True, eq=False)
class GenealogyState:
    M: np.ndarray      # descends-from-initial-Master flags, one per member
    T: int             # number of descendants
    N_star: int        # exact Master copies
    D: int             # max number of ones among non-progeny members (0 if none)


def _summarise(M: np.ndarray, packed: np.ndarray, length: int) -> GenealogyState:
    ones = popcount(packed)
    rest = ones[~M]
    return GenealogyState(
        M=M,
        T=int(M.sum()),
        N_star=int(np.count_nonzero(ones == length)),
        D=int(rest.max()) if len(rest) else 0,
    )


def genealogy_init(x0: Population) -> GenealogyState:
    M = popcount(x0.packed) == x0.length
    return _summarise(M, x0.packed, x0.length)


def genealogy_step(state: GenealogyState, block, selections: np.ndarray,
                   packed: np.ndarray, length: int) -> GenealogyState:
    """Both children of a pair inherit the OR of their two parents' flags.

    ``selections`` are the parent indices chosen by the block (0-based,
    members 2i and 2i+1 are paired); ``packed`` is the new generation.
    """
    pair = state.M[selections[0::2]] | state.M[selections[1::2]]
    M = np.repeat(pair, 2)
    return _summarise(M, packed, length)
