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
from rankga.theory.branching import ReproductionLaw, default_eps, gw_extinction, gw_simulate
from rankga.theory.rates import (
    RateGrid,
    binomial_rate,
    phi_map,
    rate_grid,
    rho_star,
    rho_star_closed_form,
    v1,
    v_compose,
)
from rankga.theory.regime import Advice, RegimeParams, advise_parameters, pi_param, regime_of

__all__ = [
    "binomial_lower_tail", "binomial_pmf", "cramer_binomial_numeric", "cramer_dominance",
    "cramer_poisson", "dominance_check", "hoeffding_bound", "log_binomial_bound_check",
    "poisson_pmf", "poisson_tail", "poisson_tail_bound",
    "ReproductionLaw", "default_eps", "gw_extinction", "gw_simulate",
    "RateGrid", "binomial_rate", "phi_map", "rate_grid", "rho_star", "rho_star_closed_form",
    "v1", "v_compose",
    "Advice", "RegimeParams", "advise_parameters", "pi_param", "regime_of",
]
