import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme
from rankga.theory.regime import advise_parameters, pi_param, regime_of, survive_prob
from rankga.theory.regime import RegimeParams


def test_survive_prob():
    assert survive_prob(0.0, 50) == 1.0
    assert survive_prob(1.0, 3) == 0.0
    assert survive_prob(0.01, 100) == pytest.approx(0.99**100)


@given(st.floats(1e-12, 1e-3), st.integers(1, 10**6))
def test_survive_prob_small_rates(p, length):
    assert survive_prob(p, length) == pytest.approx(math.exp(length * math.log1p(-p)), rel=1e-12)


def test_pi_and_regime():
    assert pi_param(2.0, 0.2, 0.0, 10) == pytest.approx(1.6)
    assert regime_of(0.8) == "disordered"
    assert regime_of(1.0) == "critical"
    assert regime_of(1.5) == "quasispecies"
    assert RegimeParams(2.0, 0.5, 0.5).regime == "disordered"
    with pytest.raises(InvalidArgument):
        pi_param(2.0, 1.5, 0.0, 10)
    with pytest.raises(InvalidArgument):
        RegimeParams(2.0, 1.0, 0.5)


def test_advice_feasible():
    scheme = SelectionScheme.tournament(2)
    a = advise_parameters(100, scheme, 1.5, c=0.2)
    assert a.feasible
    assert a.p_M == pytest.approx(0.002)
    assert a.pi == pytest.approx(1.5)
    assert a.m >= 100 * math.log(100) and a.m % 2 == 0
    assert a.rho_star == pytest.approx(2 - 2 / 1.5)


def test_advice_infeasible_reports_max_pi():
    scheme = SelectionScheme.tournament(2)
    a = advise_parameters(100, scheme, 1.9, c=1.0)
    assert not a.feasible
    assert a.max_pi == pytest.approx(2 * 0.99**100)
    assert "infeasible" in a.note
    with pytest.raises(InvalidArgument):
        advise_parameters(100, scheme, 0.9)
