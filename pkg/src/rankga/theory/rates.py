"""Large-deviation costs of the auxiliary chain and its deterministic skeleton.

The one-step cost V_1(s, t) minimises, over a crossover rate p in
[0, 1 - pi/sigma] and a surviving fraction beta in [t, 1],

    I(1-p, beta)/2 + beta * I(phi(s)/(1-p), t/beta)

where I is the binomial rate function. For fixed p the minimand is convex in
beta and its stationarity condition reduces to the quadratic

    (p + c) beta^2 - (2 p t + c) beta + p t^2 = 0,   c = (1-p)(1-q)^2,

whose larger root is the minimiser, so only p is searched numerically.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from rankga.errors import InvalidArgument
from rankga.selection import SelectionScheme, limit_repartition

INF = np.inf


def binomial_rate(p, t):
    """I(p, t), the Cramer rate of Bernoulli(p) means; +inf outside its domain."""
    p = np.asarray(p, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        inner = xlogy(t, t) - xlogy(t, p) + xlogy(1 - t, 1 - t) - xlogy(1 - t, 1 - p)
    out = np.where((p > 0) & (p < 1), inner, INF)
    out = np.where(((p == 0) & (t == 0)) | ((p == 1) & (t == 1)), 0.0, out)
    out = np.where((t > 1) | (p > 1) | (t < 0) | (p < 0), INF, out)
    out = np.where(np.isnan(out), INF, out)
    return out[()] if out.ndim == 0 else out


def _scaled_rate(beta, t, q):
    """beta * I(q, t/beta) with the 0 * I(q, 0/0) = 0 convention."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = beta - t
        val = (xlogy(t, t) - xlogy(t, beta * q) + xlogy(r, r) - xlogy(r, beta * (1 - q)))
    val = np.where(np.isnan(val), INF, val)
    val = np.where((q > 1) | (q < 0) | (t > beta), INF, val)
    val = np.where((beta == 0) & (t == 0), 0.0, val)
    return val


def _best_beta(p, t, q):
    """Minimiser in beta of the cost at fixed crossover rate p."""
    c = (1 - p) * (1 - q) ** 2
    a = p + c
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.sqrt(np.maximum(c * c + 4 * p * t * c * (1 - t), 0.0))
        beta = (2 * p * t + c + disc) / (2 * a)
    beta = np.where(p == 0, 1.0, beta)
    beta = np.where(q >= 1, t, beta)
    return np.clip(np.where(np.isnan(beta), 1.0, beta), t, 1.0)


def _cost(p, t, phi_s):
    """Cost at crossover rate p with beta optimised; returns (cost, beta)."""
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(p < 1, phi_s / (1 - p), INF)
    beta = _best_beta(p, t, q)
    val = 0.5 * binomial_rate(1 - p, beta) + _scaled_rate(beta, t, q)
    return val, beta


def phi_map(scheme: SelectionScheme, pi: float, r):
    """phi(r) = (1 - F(1 - r)) pi / sigma, the mean-field drift of N_n / m."""
    return (1.0 - limit_repartition(scheme, 1.0 - np.asarray(r, dtype=np.float64))) * pi / scheme.sigma


def rho_star(scheme: SelectionScheme, pi: float, tol: float = 1e-12) -> float:
    """Non-zero fixed point of phi by bisection; 0 when pi <= 1."""
    if pi <= 1:
        return 0.0
    if pi > scheme.sigma * (1 + 1e-12):
        raise InvalidArgument("pi cannot exceed sigma")
    lo, hi = 0.0, 1.0
    if phi_map(scheme, pi, 1.0) >= 1.0:
        return 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi_map(scheme, pi, mid) > mid:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def rho_star_closed_form(scheme: SelectionScheme, pi: float) -> float:
    """Closed forms solving phi(r) = r, used to cross-check the bisection.

    Linear ranking: 2 eta+ / (eta+ - eta-) * (1 - 1/pi) (only meaningful when
    it lands in (0, 1]). Tournament: 1 + (1-r) + ... + (1-r)^(t-1) = sigma / pi.
    """
    if pi <= 1:
        return 0.0
    if scheme.kind == "linear-ranking":
        ep, em = scheme.eta_plus, scheme.eta_minus
        return 2 * ep / (ep - em) * (1 - 1 / pi)
    if scheme.kind == "tournament":
        t = scheme.t
        if t == 2:
            return 2 - scheme.sigma / pi
        # polynomial in y = 1 - r: y^(t-1) + ... + 1 - sigma/pi = 0
        coeffs = [1.0] * t
        coeffs[-1] -= scheme.sigma / pi
        roots = np.roots(coeffs)
        real = [1 - z.real for z in roots if abs(z.imag) < 1e-10 and 0 <= z.real < 1]
        return float(min(real, key=lambda r: abs(phi_map(scheme, pi, r) - r)))
    raise InvalidArgument("no closed form for custom schemes")


# -- one-step cost -------------------------------------------------------------


@dataclass(frozen=True)
class V1Result:
    value: float
    p_star: float
    beta_star: float


def _p_range(scheme, pi):
    p_max = 1.0 - pi / scheme.sigma
    if p_max < -1e-12:
        raise InvalidArgument("V_1 needs pi <= sigma")
    return max(p_max, 0.0)


def _golden(fn, lo, hi, iters=60):
    """Vectorised golden-section minimisation of fn over [lo, hi] elementwise."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo.copy(), hi.copy()
    c = b - g * (b - a)
    d = a + g * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        c_new = b - g * (b - a)
        d_new = a + g * (b - a)
        c, d = c_new, d_new
        fc, fd = fn(c), fn(d)
    x = 0.5 * (a + b)
    return x, fn(x)


def _minimise_rows(phi_s, t, p_grid):
    """Minimise over p for arrays phi_s, t (same shape); returns value, p*, beta*."""
    vals, _ = _cost(p_grid[None, :], t[:, None], phi_s[:, None])
    k = np.argmin(vals, axis=1)
    best = vals[np.arange(len(t)), k]
    p_best = p_grid[k]
    if len(p_grid) > 1:
        lo = p_grid[np.maximum(k - 1, 0)]
        hi = p_grid[np.minimum(k + 1, len(p_grid) - 1)]
        finite = np.isfinite(best)
        x, fx = _golden(lambda p: _cost(p, t, phi_s)[0], lo, hi)
        better = finite & (fx < best)
        best = np.where(better, fx, best)
        p_best = np.where(better, x, p_best)
    _, beta = _cost(p_best, t, phi_s)
    # rounding can leave values a few ulps below zero on the vanishing curve
    return np.maximum(best, 0.0), p_best, beta


def v1(scheme: SelectionScheme, pi: float, s: float, t: float, resolution: float = 1 / 512) -> V1Result:
    """V_1(s, t) with its minimiser (p*, beta*)."""
    if not (0 <= s <= 1 and 0 <= t <= 1):
        raise InvalidArgument("s and t must lie in [0, 1]")
    if s == 0:
        return V1Result(0.0 if t == 0 else INF, 0.0, 1.0)
    p_max = _p_range(scheme, pi)
    n = max(1, math.ceil(p_max / resolution))
    p_grid = np.linspace(0.0, p_max, n + 1)
    val, p, b = _minimise_rows(np.array([float(phi_map(scheme, pi, s))]), np.array([float(t)]), p_grid)
    return V1Result(float(val[0]), float(p[0]), float(b[0]))


# -- lattice costs ---------------------------------------------------------------


@dataclass(eq=False)
class RateGrid:
    """V_1 (and optionally V) on the lattice s, t in {0, h, ..., 1}."""

    h: float
    pi: float
    scheme: SelectionScheme
    v1: np.ndarray
    p_star: np.ndarray
    beta_star: np.ndarray
    V: np.ndarray | None = None
    steps: int | None = None
    points: np.ndarray = field(init=False)

    def __post_init__(self):
        self.points = np.linspace(0.0, 1.0, self.v1.shape[0])

    def index(self, x: float) -> int:
        return int(round(x / self.h))

    def rounding_cost(self) -> np.ndarray:
        """min_t V_1(s, t) per lattice s: the cost of rounding phi(s) to the lattice."""
        return self.v1.min(axis=1)

    def tolerance(self) -> float:
        """Slack allowed for costs that vanish off the lattice.

        Zero-cost orbits of phi generally leave the lattice, so a lattice path
        pays a rounding cost at each step. The slack is the worst per-step
        rounding cost times log2 of the number of lattice points.
        """
        r = self.rounding_cost()[1:]
        return float(r.max() * math.ceil(math.log2(len(self.points))))

    def write_csv(self, path, which: str = "v1"):
        data = self.v1 if which == "v1" else self.V
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", "t", "value", "p_star", "beta_star"])
            for i, s in enumerate(self.points):
                for j, t in enumerate(self.points):
                    w.writerow([f"{s:.10g}", f"{t:.10g}", repr(float(data[i, j])),
                                repr(float(self.p_star[i, j])), repr(float(self.beta_star[i, j]))])


def rate_grid(scheme: SelectionScheme, pi: float, h: float = 1 / 256,
              p_resolution: float = 1 / 512) -> RateGrid:
    n = round(1 / h)
    if abs(n * h - 1) > 1e-12:
        raise InvalidArgument("h must divide 1")
    pts = np.linspace(0.0, 1.0, n + 1)
    p_max = _p_range(scheme, pi)
    k = max(1, math.ceil(p_max / p_resolution))
    p_grid = np.linspace(0.0, p_max, k + 1)
    phi = phi_map(scheme, pi, pts)
    val = np.empty((n + 1, n + 1))
    p_star = np.zeros_like(val)
    beta_star = np.ones_like(val)
    val[0] = INF
    val[0, 0] = 0.0
    for i in range(1, n + 1):
        val[i], p_star[i], beta_star[i] = _minimise_rows(np.full(n + 1, phi[i]), pts, p_grid)
    return RateGrid(h, pi, scheme, val, p_star, beta_star)


def min_plus(A: np.ndarray, B: np.ndarray, chunk: int = 32) -> np.ndarray:
    out = np.empty((A.shape[0], B.shape[1]))
    for i in range(0, A.shape[0], chunk):
        out[i:i + chunk] = (A[i:i + chunk, :, None] + B[None, :, :]).min(axis=1)
    return out


def v_compose(grid: RateGrid, l: int | None = None, tol: float = 1e-12, max_rounds: int = 64) -> RateGrid:
    """V_l by l-1 min-plus products, or V = inf_l V_l by min-plus closure."""
    D = grid.v1
    if l is not None:
        if l < 1:
            raise InvalidArgument("l must be >= 1")
        out = D
        for _ in range(l - 1):
            out = min_plus(out, D)
        grid.V, grid.steps = out, l
        return grid
    for rounds in range(max_rounds):
        nxt = np.minimum(D, min_plus(D, D))
        finite = np.isfinite(D)
        if np.any(~finite & np.isfinite(nxt)):
            drop = INF
        else:
            drop = float(np.max(D[finite] - nxt[finite]))
        D = nxt
        if drop <= tol:
            break
    grid.V, grid.steps = D, None
    return grid
