"""The critical parameter pi and parameter advice."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme


def survive_prob(p_M: float, length: int) -> float:
    """(1 - p_M)^length, via exp(length * log1p(-p_M))."""
    if p_M >= 1.0:
        return 0.0
    return math.exp(length * math.log1p(-p_M))


def pi_param(sigma: float, p_C: float, p_M: float, length: int) -> float:
    if not (0 <= p_C <= 1 and 0 <= p_M <= 1) or length < 1 or sigma < 1:
        raise InvalidArgument("invalid parameters for pi")
    return sigma * (1 - p_C) * survive_prob(p_M, length)


def regime_of(pi: float) -> str:
    if pi < 1:
        return "disordered"
    if pi > 1:
        return "quasispecies"
    return "critical"


@dataclass(frozen=True)
class RegimeParams:
    sigma: float
    p_C: float
    survive_prob: float
    pi: float = field(init=False)

    def __post_init__(self):
        pi = self.sigma * (1 - self.p_C) * self.survive_prob
        if pi <= 0:
            raise InvalidArgument("pi must be positive")
        object.__setattr__(self, "pi", pi)

    @property
    def regime(self) -> str:
        return regime_of(self.pi)


@dataclass(frozen=True)
class Advice:
    p_M: float
    p_C: float
    m: int
    pi: float
    rho_star: float
    feasible: bool
    max_pi: float
    note: str


def advise_parameters(length: int, scheme: SelectionScheme, target_pi: float,
                      c: float = 1.0, p_M: float | None = None) -> Advice:
    """p_M = c / length, p_C solving sigma (1-p_C)(1-p_M)^length = target_pi,
    m = ceil(length ln length); infeasible targets report the largest pi
    reachable at p_C = 0."""
    from rankga.theory.rates import rho_star

    sigma = scheme.sigma
    if not 1 < target_pi <= sigma:
        raise InvalidArgument("target pi must lie in (1, sigma]")
    p_M = c / length if p_M is None else p_M
    surv = survive_prob(p_M, length)
    max_pi = sigma * surv
    m = max(2, math.ceil(length * math.log(length)))
    m += m % 2
    keep = target_pi / (sigma * surv) if surv > 0 else math.inf
    if keep > 1:
        return Advice(p_M, 0.0, m, max_pi, rho_star(scheme, max_pi) if max_pi > 1 else 0.0,
                      False, max_pi,
                      f"infeasible: needs 1-p_C = {keep:.4f} > 1; max pi at this p_M is {max_pi:.4f}")
    p_C = 1.0 - keep
    return Advice(p_M, p_C, m, pi_param(sigma, p_C, p_M, length), rho_star(scheme, target_pi),
                  True, max_pi,
                  "run length should grow exponentially with m to observe persistence")
