import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import binom, poisson

from rankga.errors import DomainError, InvalidArgument
from rankga.theory.bounds import (
    binomial_lower_tail,
    binomial_pmf,
    cramer_binomial_numeric,
    cramer_dominance,
    cramer_poisson,
    dominance_check,
    hoeffding_bound,
    log_binomial_bound_check,
    poisson_pmf,
    poisson_tail,
    poisson_tail_bound,
)


def poisson_tail_sum(lam, t):
    """1 - sum_{k < t} e^-lam lam^k / k!, summed term by term."""
    k, term, below = 0, math.exp(-lam), 0.0
    while k < t:
        below += term
        k += 1
        term *= lam / k
    return max(0.0, 1.0 - below)


def test_poisson_tail_examples():
    assert poisson_tail_bound(3.0, 3.0) == pytest.approx(math.exp(3.0))
    b = poisson_tail_bound(2.0, 10.0)
    assert b == pytest.approx((2 * math.e / 10) ** 10)
    assert poisson_tail(2.0, 10.0) == pytest.approx(poisson_tail_sum(2.0, 10.0), rel=1e-8)
    assert poisson_tail(2.0, 10.0) <= b
    with pytest.raises(DomainError):
        poisson_tail_bound(2.0, 1.0)


def test_poisson_bound_decreasing_in_t():
    ts = np.linspace(1.0, 50.0, 500)
    vals = [poisson_tail_bound(1.0, t) for t in ts]
    assert np.all(np.diff(vals) < 0)


@given(st.floats(0.1, 30), st.floats(0, 40))
def test_poisson_bound_dominates_tail(lam, extra):
    t = lam + extra
    assert poisson_tail(lam, t) <= poisson_tail_bound(lam, t) * (1 + 1e-12)


def test_hoeffding_examples():
    assert hoeffding_bound(100, 0.5, 40) == pytest.approx(math.exp(-2))
    exact = binomial_lower_tail(100, 0.5, 40)
    assert exact == pytest.approx(binom.cdf(39, 100, 0.5))
    assert exact == pytest.approx(0.0176, abs=1e-4)
    assert hoeffding_bound(100, 0.5, 50 - 1e-9) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        hoeffding_bound(100, 0.5, 50)


@pytest.mark.parametrize("n", [10, 100])
@pytest.mark.parametrize("p", [0.2, 0.5, 0.8])
def test_hoeffding_scan(n, p):
    for t in np.linspace(0, n * p, 60, endpoint=False):
        assert binomial_lower_tail(n, p, t) <= hoeffding_bound(n, p, t)


def test_dominance_examples():
    d = binomial_pmf(10, 0.3)
    assert dominance_check(d, d)
    lam = -10 * math.log(0.9)
    assert dominance_check(binomial_pmf(10, 0.1), poisson_pmf(lam))
    assert not dominance_check(binomial_pmf(10, 0.5), poisson_pmf(0.5))
    with pytest.raises(InvalidArgument):
        dominance_check([0.5, 0.2], [1.0])


@given(st.integers(1, 60), st.floats(0.001, 0.9))
def test_binomial_below_poisson_at_equality(n, p):
    lam = -n * math.log1p(-p)
    assert dominance_check(binomial_pmf(n, p), poisson_pmf(lam), tol=1e-10)


def test_poisson_pmf_truncation():
    pmf = poisson_pmf(5.0)
    assert 1 - pmf.sum() < 1e-12
    assert poisson.sf(len(pmf) - 1, 5.0) < 1e-12


def test_cramer_poisson_examples():
    assert cramer_poisson(1.0, 1.0, 2.0) == pytest.approx(2 * math.log(2) - 1)
    assert cramer_poisson(3.0, 2.0, 6.0) == pytest.approx(0.0, abs=1e-15)
    assert cramer_poisson(3.0, -1.0, 0.0) == pytest.approx(3.0)
    with pytest.raises(DomainError):
        cramer_poisson(1.0, 1.0, -1.0)
    with pytest.raises(InvalidArgument):
        cramer_poisson(1.0, 0.0, 1.0)


def test_cramer_binomial_closed_form():
    # at alpha = 1 the transform is n I(p, x/n)
    n, p = 20, 0.3
    for x in (1.0, 6.0, 13.0):
        y = x / n
        ref = n * (y * math.log(y / p) + (1 - y) * math.log((1 - y) / (1 - p)))
        assert cramer_binomial_numeric(n, p, 1.0, x) == pytest.approx(ref, abs=1e-7)


@pytest.mark.parametrize("n,p,alpha", [(20, 0.3, -1.0), (20, 0.3, 1.0), (50, 0.05, 2.0), (10, 0.5, -0.5)])
def test_cramer_dominance_grids(n, p, alpha):
    res = cramer_dominance(n, p, alpha)
    assert res.verified
    assert len(res.xs) == 201


def test_log_binomial_examples():
    r = log_binomial_bound_check(10, 0)
    assert r.log_binom == 0 and r.entropy_term == 0 and r.holds
    assert log_binomial_bound_check(100, 37).holds
    with pytest.raises(InvalidArgument):
        log_binomial_bound_check(5, 6)


def test_log_binomial_exhaustive():
    for n in range(1, 201):
        for k in range(n + 1):
            r = log_binomial_bound_check(n, k)
            assert r.holds, (n, k, r)
            assert r.log_binom == pytest.approx(math.log(math.comb(n, k)), abs=1e-9)
