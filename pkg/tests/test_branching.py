import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import poisson

from rankga.core import FitnessLandscape, Population, popcount
from rankga.engine import GAConfig, draw_blocks, step_many
from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme
from rankga.theory.branching import (
    ReproductionLaw,
    default_eps,
    gw_extinction,
    gw_simulate,
    gw_simulate_many,
)


def test_twice_poisson_mean_and_support():
    for sigma in (1.5, 2.0, 3.0):
        law = ReproductionLaw.twice_poisson(4 * sigma)
        assert law.mean() == pytest.approx(8 * sigma, rel=1e-10)
        assert np.all(law.pmf[1::2] == 0)
        assert law.pmf[0] == pytest.approx(math.exp(-4 * sigma))
        assert poisson.sf(law.support_max // 2, 4 * sigma) < 1e-12


def test_nu_star_literal_law():
    pi, eps = 0.7, 0.01
    law = ReproductionLaw.nu_star(pi, eps)
    assert law.mean() == pytest.approx(pi * (1 + 3 * eps) + 2 * eps, rel=1e-10)
    # P(0) = P(Y'=0) P(Y''=0)
    assert law.pmf[0] == pytest.approx(math.exp(-pi * (1 + 3 * eps) - eps))
    assert law.pmf[1] == pytest.approx(pi * (1 + 3 * eps) * law.pmf[0])
    assert law.params == (pi, eps)


@given(st.floats(0.05, 0.999))
def test_default_eps_keeps_nu_star_subcritical(pi):
    eps = default_eps(pi)
    assert 0 < eps <= 0.01
    assert ReproductionLaw.nu_star(pi).mean() < 1


def test_custom_law_validation():
    law = ReproductionLaw.custom([0.25, 0.5, 0.25])
    assert law.mean() == pytest.approx(1.0)
    assert law.pgf(1.0) == pytest.approx(1.0)
    assert law.pgf(0.5) == pytest.approx(0.25 + 0.25 + 0.0625)
    with pytest.raises(InvalidArgument):
        ReproductionLaw.custom([0.5, 0.4])
    with pytest.raises(InvalidArgument):
        ReproductionLaw.custom([1.2, -0.2])
    with pytest.raises(ValueError):
        law.pmf[0] = 1.0


def test_extinction_probabilities():
    assert gw_extinction(ReproductionLaw.nu_star(0.8)) == pytest.approx(1.0, abs=1e-9)
    # p0 = 1/4, p2 = 3/4: q = 1/4 + 3/4 q^2 has smallest root 1/3
    assert gw_extinction(ReproductionLaw.custom([0.25, 0, 0.75])) == pytest.approx(1 / 3, abs=1e-10)
    law = ReproductionLaw.twice_poisson(8.0)
    q = gw_extinction(law)
    assert q == pytest.approx(float(law.pgf(q)), abs=1e-12)
    assert q < 1e-3


def test_simulation_mean_matches_powers():
    law = ReproductionLaw.custom([0.3, 0.3, 0.4])   # mean 1.1
    paths = gw_simulate_many(law, 6, 20_000, np.random.default_rng(4))
    for k in range(7):
        mean = paths[:, k].mean()
        se = paths[:, k].std() / math.sqrt(len(paths)) + 1e-12
        assert abs(mean - 1.1**k) <= 4 * se


def test_simulation_absorbs_and_caps():
    path = gw_simulate(ReproductionLaw.custom([1.0]), 5, np.random.default_rng(0), z0=3)
    assert path.tolist() == [3, 0, 0, 0, 0, 0]
    big = gw_simulate(ReproductionLaw.twice_poisson(8.0), 4, np.random.default_rng(1), z0=50, cap=1000)
    assert big[0] == 50 and np.all(big[1:] > 0)


@pytest.mark.slow
def test_master_copies_below_subcritical_branching():
    length = m = 100
    scheme = SelectionScheme.tournament(2)
    survive = 0.8 / (2 * 0.7)
    c = GAConfig(length, m, scheme, 0.3, -math.expm1(math.log(survive) / length),
                 FitnessLandscape.sharp_peak(length))
    assert c.pi == pytest.approx(0.8)
    rng = np.random.default_rng(11)
    trials, batch, gens = 10_000, 1000, 10
    start = Population.master_over_zeros(m, length).packed
    copies = []
    for _ in range(trials // batch):
        x = np.stack([start] * batch)
        f = c.landscape.evaluate_packed(x)
        traj = []
        for _ in range(gens):
            x = step_many(x, f, draw_blocks(c, batch, rng), c)
            f = c.landscape.evaluate_packed(x)
            traj.append((popcount(x) == length).sum(axis=1))
        copies.append(np.array(traj).T)
    copies = np.vstack(copies)
    gw = gw_simulate_many(ReproductionLaw.nu_star(c.pi), gens, trials, rng)[:, 1:]
    for g in range(gens):
        ks = np.arange(max(copies[:, g].max(), gw[:, g].max()) + 1)
        ecdf_ga = (copies[:, g][:, None] <= ks).mean(axis=0)
        ecdf_gw = (gw[:, g][:, None] <= ks).mean(axis=0)
        assert np.all(ecdf_ga >= ecdf_gw - 0.01)
