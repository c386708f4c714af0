"""Independent reference implementations used only by the tests.

Everything here works on plain Python tuples of bits and Fractions, with no
packing, no numpy vectorisation and no shared code with the package.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction


def tournament_masses(m, t):
    return [Fraction(i**t - (i - 1) ** t, m**t) for i in range(1, m + 1)]


def linear_masses(m, eta_plus):
    eta_plus = Fraction(eta_plus)
    eta_minus = 2 - eta_plus
    return [(eta_minus + (eta_plus - eta_minus) * Fraction(i - 1, m - 1)) / m for i in range(1, m + 1)]


def bits_of(code, length):
    """Bit j-1 of the integer code is position j."""
    return tuple((code >> j) & 1 for j in range(length))


def code_of(bits):
    return sum(b << j for j, b in enumerate(bits))


def hamming(u, v):
    return sum(a != b for a, b in zip(u, v))


def switch(k, u, v):
    return tuple(u[:k]) + tuple(v[k:])


def mutation_kernel(u, v, p):
    h = hamming(u, v)
    return p**h * (1 - p) ** (len(u) - h)


def crossover_kernel(u, v, u2, v2, p_C):
    length = len(u)
    same = Fraction(int((u, v) == (u2, v2)))
    if length == 1:
        return same
    cuts = sum(1 for k in range(1, length)
               if switch(k, u, v) == u2 and switch(k, v, u) == v2)
    return (1 - p_C) * same + p_C * Fraction(cuts, length - 1)


def tie_rankings(fitness):
    """All permutations sorting fitness non-decreasingly (members 0-based)."""
    m = len(fitness)
    return [p for p in itertools.permutations(range(m))
            if all(fitness[p[r]] <= fitness[p[r + 1]] for r in range(m - 1))]


def one_step_law(pop, fit, masses, p_C, p_M):
    """Exact law of the next population by brute-force enumeration of the
    ranking, every selection, crossover outcome and mutation pattern.

    ``pop`` is a tuple of bit tuples, ``fit`` a function of a bit tuple.
    Returns {next population (tuple of bit tuples): probability}.
    """
    m, length = len(pop), len(pop[0])
    fitness = [fit(u) for u in pop]
    perms = tie_rankings(fitness)
    law = {}
    cube = list(itertools.product((0, 1), repeat=length))
    for perm in perms:
        w_perm = Fraction(1, len(perms))
        for ranks in itertools.product(range(m), repeat=m):
            w_sel = w_perm
            for r in ranks:
                w_sel *= masses[r]
            if w_sel == 0:
                continue
            parents = [pop[perm[r]] for r in ranks]
            # crossover outcomes per pair
            pair_laws = []
            for i in range(m // 2):
                a, b = parents[2 * i], parents[2 * i + 1]
                out = {}
                for c1 in cube:
                    for c2 in cube:
                        pr = crossover_kernel(a, b, c1, c2, p_C)
                        if pr:
                            out[(c1, c2)] = out.get((c1, c2), 0) + pr
                pair_laws.append(out)
            for combo in itertools.product(*(d.items() for d in pair_laws)):
                w_cross = w_sel
                kids = []
                for (c1, c2), pr in combo:
                    w_cross *= pr
                    kids += [c1, c2]
                for muts in itertools.product(cube, repeat=m):
                    w = w_cross
                    for kid, mu in zip(kids, muts):
                        w *= mutation_kernel(kid, mu, p_M)
                    if w:
                        law[tuple(muts)] = law.get(tuple(muts), 0) + w
    return law


def aux_transition(m, masses, p_C, survive, i, j):
    """Law of N_{n+1} by direct enumeration of the m/2 pairs' crossover flags
    and the m selection/mutation outcomes."""
    eps = sum(masses[m - i:], Fraction(0)) * survive
    total = Fraction(0)
    for flags in itertools.product((0, 1), repeat=m // 2):
        w = Fraction(1)
        for f in flags:
            w *= p_C if f else 1 - p_C
        alive = 2 * sum(1 - f for f in flags)
        if j > alive:
            continue
        total += w * math.comb(alive, j) * eps**j * (1 - eps) ** (alive - j)
    return total
