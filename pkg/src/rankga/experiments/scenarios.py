"""The seven scenarios: per-trial observables and summaries.

Each scenario validates a point config into a picklable context, runs one
trial from a generator, and summarises typed rows. Summaries only read the
rows (as parsed back from trials.csv) and the point contexts, so they can be
recomputed from the CSV alone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np
from scipy import stats

from rankga.auxchain import AuxParams, quasi_stationary_mean, simulate_hitting
from rankga.core import Population, levels_of, packed_to_ints, popcount
from rankga.engine.dynamics import (
    GAConfig,
    draw_block,
    draw_blocks,
    rho_rank,
    step_many,
    step_packed,
)
from rankga.engine.exact import exact_transition_matrix, optimum_states, stationary_distribution
from rankga.errors import ConfigError, InvalidArgument
from rankga.experiments.config import build_ga_config, build_scheme, resolve_engine
from rankga.theory.rates import rho_star


@dataclass(frozen=True)
class Column:
    name: str
    kind: type   # int, float or str; None values are written as empty cells


@dataclass(frozen=True, eq=False)
class Context:
    """Validated parameters of one sweep point."""

    assignment: dict
    params: dict
    config: GAConfig | None = None
    aux: AuxParams | None = None
    extra: dict = field(default_factory=dict)

    @property
    def pi(self) -> float | None:
        if self.config is not None:
            return self.config.pi
        return self.aux.pi if self.aux is not None else None

    @property
    def scheme(self):
        return self.config.scheme if self.config is not None else self.aux.scheme

    @property
    def m(self) -> int:
        return self.config.m if self.config is not None else self.aux.m


@dataclass(frozen=True)
class Scenario:
    name: str
    columns: tuple[Column, ...]
    defaults: dict
    prepare: Callable[[dict, dict], Context]
    trial: Callable[[Context, np.random.Generator], dict]
    summarize_point: Callable[[list[dict], Context, dict], dict]
    summarize_all: Callable[[list[list[dict]], list[Context], list[dict], dict], dict]


# -- shared helpers ------------------------------------------------------------


def _start_population(kind: str, config: GAConfig, rng: np.random.Generator) -> Population:
    m, length = config.m, config.length
    if kind == "master-over-zeros":
        return Population.master_over_zeros(m, length)
    if kind == "all-master":
        return Population.from_bits(np.ones((m, length), dtype=np.uint8))
    if kind == "zeros":
        return Population.from_bits(np.zeros((m, length), dtype=np.uint8))
    if kind == "random":
        return Population.from_bits(rng.integers(0, 2, size=(m, length), dtype=np.uint8))
    raise ConfigError(f"unknown start population {kind!r}")


def _base_point(cfg: dict, assignment: dict, defaults: dict) -> tuple[GAConfig, dict]:
    params = {**defaults, **{k: v for k, v in cfg["scenario"].items()
                             if k not in ("name", "trials", "sweep")}}
    return build_ga_config(cfg), params


def _common(ctx: Context) -> dict:
    out = {"assignment": ctx.assignment, "pi": ctx.pi, "m": ctx.m}
    sch = ctx.scheme
    if sch.has_limit:
        out["sigma"] = sch.sigma
        out["rho_star"] = rho_star(sch, ctx.pi) if ctx.pi is not None and ctx.pi <= sch.sigma else None
    if ctx.config is not None:
        out.update(length=ctx.config.length, p_C=ctx.config.p_C, p_M=ctx.config.p_M)
    return out


def _wilson(k: int, n: int) -> tuple[float, float]:
    if n == 0:
        return (0.0, 1.0)
    ci = stats.binomtest(k, n).proportion_ci(confidence_level=0.95, method="wilson")
    return (float(ci.low), float(ci.high))


def _by_pi(summaries):
    return sorted(range(len(summaries)), key=lambda i: summaries[i]["pi"])


def _no_overall(rows, ctxs, summaries, calib):
    return {}


# -- disordered regime -----------------------------------------------------------


def _prepare_disordered(cfg, assignment):
    config, params = _base_point(cfg, assignment, DISORDERED.defaults)
    if config.pi is None or config.pi >= 1:
        raise ConfigError(f"disordered scenario needs pi < 1, measured pi = {config.pi}")
    if config.landscape.kind != "sharp-peak":
        raise ConfigError("disordered scenario runs on the sharp peak landscape")
    return Context(assignment, params, config=config)


def _trial_disordered(ctx, rng):
    config = ctx.config
    x0 = _start_population(ctx.params["start"], config, rng)
    packed = x0.packed
    fitness = config.landscape.evaluate_packed(packed)
    for n in range(1, config.horizon + 1):
        packed, _ = step_packed(packed, fitness, draw_block(config, rng), config)
        fitness = config.landscape.evaluate_packed(packed)
        if not np.any(popcount(packed) == config.length):
            return {"extinction_generation": n, "extinct": 1}
    return {"extinction_generation": config.horizon, "extinct": 0}


def _summary_disordered(rows, ctx, calib):
    out = _common(ctx)
    n = len(rows)
    by = ctx.params["by_generation"]
    gens = np.array([r["extinction_generation"] for r in rows])
    ext = np.array([r["extinct"] for r in rows], dtype=bool)
    frac = float(np.mean(ext & (gens <= by))) if n else 0.0
    out["trials"] = n
    out["by_generation"] = by
    out["extinct_fraction"] = frac
    out["extinct_fraction_by_c_ln_m"] = {
        str(c): float(np.mean(ext & (gens <= c * math.log(ctx.m)))) if n else 0.0
        for c in ctx.params["c_values"]}
    out["mean_extinction_generation"] = float(gens[ext].mean()) if ext.any() else None
    out["censored"] = int(np.count_nonzero(~ext))
    out["verdict_extinct_fraction"] = frac >= calib["extinction_fraction"]
    return out


def _overall_disordered(rows, ctxs, summaries, calib):
    if len(summaries) < 2:
        return {}
    order = _by_pi(summaries)
    fr = [summaries[i]["extinct_fraction"] for i in order]
    return {"pi_order": [summaries[i]["pi"] for i in order], "extinct_fraction_by_pi": fr,
            "verdict_monotone_in_pi": all(b <= a for a, b in zip(fr, fr[1:]))}


DISORDERED = Scenario(
    "disordered",
    (Column("extinction_generation", int), Column("extinct", int)),
    {"by_generation": 30, "c_values": [2, 4, 6], "start": "master-over-zeros"},
    _prepare_disordered, _trial_disordered, _summary_disordered, _overall_disordered,
)


# -- quasispecies regime -------------------------------------------------------------


def _prepare_quasispecies(cfg, assignment):
    config, params = _base_point(cfg, assignment, QUASISPECIES.defaults)
    if config.pi is None or config.pi <= 1:
        raise ConfigError(f"quasispecies scenario needs pi > 1, measured pi = {config.pi}")
    return Context(assignment, params, config=config)


def _trial_quasispecies(ctx, rng):
    config = ctx.config
    f = config.landscape
    x0 = _start_population(ctx.params["start"], config, rng)
    packed = x0.packed
    fitness = f.evaluate_packed(packed)
    lam0 = fitness.max()
    for n in range(1, config.horizon + 1):
        packed, _ = step_packed(packed, fitness, draw_block(config, rng), config)
        fitness = f.evaluate_packed(packed)
        if fitness.max() < lam0:
            return {"survived": 0, "lost_generation": n}
    return {"survived": 1, "lost_generation": None}


def _summary_quasispecies(rows, ctx, calib):
    out = _common(ctx)
    n = len(rows)
    k = sum(r["survived"] for r in rows)
    freq = k / n if n else 0.0
    lost = [r["lost_generation"] for r in rows if not r["survived"]]
    out.update(trials=n, horizon=ctx.config.horizon, survival_frequency=freq,
               survival_ci95=_wilson(k, n),
               median_lost_generation=float(np.median(lost)) if lost else None,
               verdict_survival_floor=freq >= calib["survival_floor"])
    return out


def _overall_quasispecies(rows, ctxs, summaries, calib):
    ms = {s["m"] for s in summaries}
    if len(ms) < 2:
        return {}
    lo = min(summaries, key=lambda s: s["m"])
    hi = max(summaries, key=lambda s: s["m"])
    return {"m_small": lo["m"], "m_large": hi["m"],
            "verdict_m_robust": hi["survival_frequency"] >= lo["survival_frequency"] - calib["tolerance"]}


QUASISPECIES = Scenario(
    "quasispecies",
    (Column("survived", int), Column("lost_generation", int)),
    {"start": "master-over-zeros"},
    _prepare_quasispecies, _trial_quasispecies, _summary_quasispecies, _overall_quasispecies,
)


# -- catastrophes -------------------------------------------------------------------


def _prepare_catastrophe(cfg, assignment):
    config, params = _base_point(cfg, assignment, CATASTROPHE.defaults)
    if config.pi is None or config.pi <= 1:
        raise ConfigError(f"catastrophe scenario needs pi > 1, measured pi = {config.pi}")
    if not 0 <= params["margin"] < 1:
        raise ConfigError("margin must lie in [0, 1)")
    rho = rho_star(config.scheme, config.pi) * (1 - params["margin"])
    return Context(assignment, params, config=config,
                   extra={"rho": rho, "rank": rho_rank(rho, config.m)})


def _trial_catastrophe(ctx, rng):
    config = ctx.config
    f = config.landscape
    rank = ctx.extra["rank"]
    packed = _start_population(ctx.params["start"], config, rng).packed
    fitness = f.evaluate_packed(packed)
    running = levels_of(fitness, [rank])[0]
    for n in range(1, config.horizon + 1):
        packed, _ = step_packed(packed, fitness, draw_block(config, rng), config)
        fitness = f.evaluate_packed(packed)
        running = max(running, levels_of(fitness, [rank])[0])
        if fitness.max() < running:
            return {"catastrophe_time": n, "occurred": 1}
    return {"catastrophe_time": config.horizon, "occurred": 0}


def _summary_catastrophe(rows, ctx, calib):
    out = _common(ctx)
    times = np.array([r["catastrophe_time"] for r in rows])
    occ = np.array([r["occurred"] for r in rows], dtype=bool)
    out.update(trials=len(rows), rho=ctx.extra["rho"], horizon=ctx.config.horizon,
               catastrophes=int(occ.sum()),
               fraction_without_catastrophe=float(np.mean(~occ)) if len(rows) else 0.0,
               median_time_censored_at_horizon=float(np.median(times)) if len(rows) else None,
               quantiles_observed=(np.quantile(times[occ], [0.1, 0.5, 0.9]).tolist()
                                   if occ.any() else None))
    return out


def _overall_catastrophe(rows, ctxs, summaries, calib):
    if len(summaries) < 2:
        return {}
    order = _by_pi(summaries)
    med = [summaries[i]["median_time_censored_at_horizon"] for i in order]
    return {"pi_order": [summaries[i]["pi"] for i in order], "median_time_by_pi": med,
            "verdict_median_increases_with_pi": all(b > a for a, b in zip(med, med[1:]))}


CATASTROPHE = Scenario(
    "catastrophe",
    (Column("catastrophe_time", int), Column("occurred", int)),
    {"margin": 0.2, "start": "all-master"},
    _prepare_catastrophe, _trial_catastrophe, _summary_catastrophe, _overall_catastrophe,
)


# -- hitting time of the optimum -------------------------------------------------------


def _prepare_hitting(cfg, assignment):
    config, params = _base_point(cfg, assignment, HITTING.defaults)
    if config.landscape.kind not in ("one-max", "staircase-table", "sharp-peak"):
        raise ConfigError("hitting scenario needs a landscape with a known optimum")
    return Context(assignment, params, config=config)


def _trial_hitting(ctx, rng):
    """tau* = first n >= 1 whose population holds an optimal chromosome."""
    config = ctx.config
    f = config.landscape
    top = f.max_fitness()
    packed = _start_population(ctx.params["start"], config, rng).packed
    fitness = f.evaluate_packed(packed)
    for n in range(1, config.horizon + 1):
        packed, _ = step_packed(packed, fitness, draw_block(config, rng), config)
        fitness = f.evaluate_packed(packed)
        if fitness.max() >= top:
            return {"tau_star": n, "censored": 0}
    return {"tau_star": config.horizon, "censored": 1}


def _summary_hitting(rows, ctx, calib):
    out = _common(ctx)
    tau = np.array([r["tau_star"] for r in rows], dtype=np.float64)
    cen = np.array([r["censored"] for r in rows], dtype=bool)
    out.update(trials=len(rows), censored=int(cen.sum()),
               mean_tau=float(tau.mean()) if len(tau) else None,
               median_tau=float(np.median(tau)) if len(tau) else None,
               mean_tau_uncensored=float(tau[~cen].mean()) if (~cen).any() else None,
               fraction_tau_one=float(np.mean(tau == 1)) if len(tau) else None)
    return out


def _overall_hitting(rows, ctxs, summaries, calib):
    pts = sorted((s for s in summaries if s["mean_tau"]), key=lambda s: s["length"])
    if len({s["length"] for s in pts}) < 2:
        return {}
    L = np.array([s["length"] for s in pts], dtype=np.float64)
    M = np.log([s["mean_tau"] for s in pts])
    out = {"lengths": L.tolist(), "log_mean_tau": M.tolist(),
           "loglog_slope": float(np.polyfit(np.log(L), M, 1)[0]),
           "ratios": np.exp(np.diff(M)).tolist()}
    if len(L) >= 3:
        slopes = np.diff(M) / np.diff(L)
        out["verdict_log_mean_concave"] = bool(np.all(np.diff(slopes) <= 0))
    return out


HITTING = Scenario(
    "hitting-time",
    (Column("tau_star", int), Column("censored", int)),
    {"start": "zeros"},
    _prepare_hitting, _trial_hitting, _summary_hitting, _overall_hitting,
)


# -- stationary law on a tiny instance ---------------------------------------------------


def _population_codes(packed: np.ndarray, length: int) -> np.ndarray:
    """State index of each population in a (K, m, nbytes) stack."""
    K, m, _ = packed.shape
    ints = packed_to_ints(packed.reshape(K * m, -1), length).reshape(K, m)
    weights = (1 << length) ** np.arange(m - 1, -1, -1, dtype=np.int64)
    return ints @ weights


def _prepare_stationary(cfg, assignment):
    config, params = _base_point(cfg, assignment, STATIONARY.defaults)
    P = exact_transition_matrix(config)
    mu = stationary_distribution(P)
    opt = optimum_states(config)
    return Context(assignment, params, config=config,
                   extra={"mu": mu, "optimum_states": opt, "mu_optimum": float(mu[opt].sum())})


def _trial_stationary(ctx, rng):
    config = ctx.config
    K, steps, burn = ctx.params["chains"], ctx.params["steps"], ctx.params["burn_in"]
    x0 = _start_population(ctx.params["start"], config, rng)
    packed = np.broadcast_to(x0.packed, (K,) + x0.packed.shape).copy()
    counts = np.zeros(len(ctx.extra["mu"]), dtype=np.int64)
    f = config.landscape
    for n in range(burn + steps):
        fitness = f.evaluate_packed(packed)
        packed = step_many(packed, fitness, draw_blocks(config, K, rng), config)
        if n >= burn:
            counts += np.bincount(_population_codes(packed, config.length), minlength=len(counts))
    occ = counts / counts.sum()
    return {"l1_error": float(np.abs(occ - ctx.extra["mu"]).sum()),
            "occupancy_optimum": float(occ[ctx.extra["optimum_states"]].sum()),
            "counts": ";".join(map(str, counts))}


def _summary_stationary(rows, ctx, calib):
    out = _common(ctx)
    pooled = sum(np.array([int(c) for c in r["counts"].split(";")]) for r in rows)
    occ = pooled / pooled.sum()
    out.update(trials=len(rows), mu_optimum=ctx.extra["mu_optimum"],
               exact_mu=ctx.extra["mu"].tolist(),
               pooled_l1_error=float(np.abs(occ - ctx.extra["mu"]).sum()),
               max_trial_l1_error=max(r["l1_error"] for r in rows),
               pooled_occupancy_optimum=float(occ[ctx.extra["optimum_states"]].sum()))
    return out


def _overall_stationary(rows, ctxs, summaries, calib):
    if len(summaries) < 2:
        return {}
    order = _by_pi(summaries)
    mass = [summaries[i]["mu_optimum"] for i in order]
    return {"pi_order": [summaries[i]["pi"] for i in order], "mu_optimum_by_pi": mass,
            "verdict_mass_increases_with_pi": all(b > a for a, b in zip(mass, mass[1:]))}


STATIONARY = Scenario(
    "stationary-tiny",
    (Column("l1_error", float), Column("occupancy_optimum", float), Column("counts", str)),
    {"chains": 1000, "steps": 10_000, "burn_in": 100, "start": "zeros"},
    _prepare_stationary, _trial_stationary, _summary_stationary, _overall_stationary,
)


# -- auxiliary chain ----------------------------------------------------------------


def _aux_context(cfg, assignment, defaults) -> Context:
    params = {**defaults, **{k: v for k, v in cfg["scenario"].items()
                             if k not in ("name", "trials", "sweep")}}
    scheme = build_scheme(cfg["scheme"])
    engine = cfg["engine"]
    m = int(engine["m"])
    p_C = float(engine.get("p_C") or 0.0)
    try:
        if engine.get("pi") is not None:
            aux = AuxParams.with_pi(m, scheme, float(engine["pi"]), p_C)
        else:
            e = resolve_engine(engine, scheme)
            aux = AuxParams.from_mutation(e.m, scheme, e.p_C, e.p_M, e.length)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc
    rs = rho_star(scheme, aux.pi) if aux.pi is not None and aux.pi <= scheme.sigma else None
    return Context(assignment, params, aux=aux, extra={"rho_star": rs})


def _prepare_equilibrium(cfg, assignment):
    ctx = _aux_context(cfg, assignment, EQUILIBRIUM.defaults)
    if ctx.aux.pi is None or ctx.aux.pi <= 1:
        raise ConfigError(f"equilibrium scenario needs pi > 1, measured pi = {ctx.aux.pi}")
    return ctx


def _trial_equilibrium(ctx, rng):
    start = ctx.params["start"]
    start = ctx.aux.m if start is None else int(start)
    mean = quasi_stationary_mean(ctx.aux, start, ctx.params["window"], ctx.params["burn_in"], rng)
    return {"mean_fraction": mean, "absorbed": int(mean is None)}


def _summary_equilibrium(rows, ctx, calib):
    out = _common(ctx)
    vals = [r["mean_fraction"] for r in rows if not r["absorbed"]]
    mean = float(np.mean(vals)) if vals else None
    err = abs(mean - ctx.extra["rho_star"]) if vals else None
    out.update(trials=len(rows), absorbed=len(rows) - len(vals), all_absorbed=not vals,
               mean_fraction=mean, abs_error=err,
               verdict_within_tolerance=bool(vals) and err <= calib["tolerance"])
    return out


def _overall_equilibrium(rows, ctxs, summaries, calib):
    pts = sorted((s for s in summaries if s["abs_error"] is not None), key=lambda s: s["m"])
    if len({s["m"] for s in pts}) < 2:
        return {}
    errs = [s["abs_error"] for s in pts]
    return {"m_order": [s["m"] for s in pts], "abs_error_by_m": errs,
            "verdict_error_decreases_with_m": all(b < a for a, b in zip(errs, errs[1:]))}


EQUILIBRIUM = Scenario(
    "auxchain-equilibrium",
    (Column("mean_fraction", float), Column("absorbed", int)),
    {"window": 10_000, "burn_in": None, "start": None},
    _prepare_equilibrium, _trial_equilibrium, _summary_equilibrium, _overall_equilibrium,
)


def _prepare_persistence(cfg, assignment):
    ctx = _aux_context(cfg, assignment, PERSISTENCE.defaults)
    start = ctx.params["start"]
    if start is None:
        start = rho_rank(ctx.extra["rho_star"] or 0.0, ctx.aux.m)
    ctx.extra["start"] = int(start)
    return ctx


def _trial_persistence(ctx, rng):
    res = simulate_hitting(ctx.aux, ctx.extra["start"], "absorb", cap=ctx.params["cap"], rng=rng)
    return {"tau0": res.time, "censored": int(not res.hit)}


def _summary_persistence(rows, ctx, calib):
    out = _common(ctx)
    tau = np.array([r["tau0"] for r in rows], dtype=np.float64)
    cen = np.array([r["censored"] for r in rows], dtype=bool)
    logs = np.log(np.maximum(tau, 1.0))
    cfrac = float(cen.mean()) if len(rows) else 0.0
    out.update(trials=len(rows), start=ctx.extra["start"], censored_fraction=cfrac,
               excluded=cfrac > 0.5, mean_tau0=float(tau.mean()) if len(tau) else None,
               mean_log_tau0=float(logs.mean()) if len(tau) else None,
               mean_log_tau0_uncensored=float(logs[~cen].mean()) if (~cen).any() else None)
    return out


def _overall_persistence(rows, ctxs, summaries, calib):
    xs, ys = [], []
    for pr, s in zip(rows, summaries):
        if s["excluded"]:
            continue
        xs += [s["m"]] * len(pr)
        ys += [math.log(max(r["tau0"], 1)) for r in pr]
    if len(set(xs)) < 2:
        return {"excluded_m": [s["m"] for s in summaries if s["excluded"]]}
    fit = stats.linregress(xs, ys)
    lower = fit.slope - 1.959963984540054 * fit.stderr
    upper = fit.slope + 1.959963984540054 * fit.stderr
    return {"slope": float(fit.slope), "stderr": float(fit.stderr),
            "slope_ci95": [float(lower), float(upper)],
            "excluded_m": [s["m"] for s in summaries if s["excluded"]],
            "verdict_growth": bool(lower > 0), "verdict_no_growth": bool(lower <= 0)}


PERSISTENCE = Scenario(
    "auxchain-persistence",
    (Column("tau0", int), Column("censored", int)),
    {"cap": 10**6, "start": None},
    _prepare_persistence, _trial_persistence, _summary_persistence, _overall_persistence,
)


SCENARIOS: dict[str, Scenario] = {s.name: s for s in (
    DISORDERED, QUASISPECIES, CATASTROPHE, HITTING, STATIONARY, EQUILIBRIUM, PERSISTENCE)}
ALIASES = {"hitting": "hitting-time", "stationary": "stationary-tiny",
           "equilibrium": "auxchain-equilibrium", "persistence": "auxchain-persistence"}


def get_scenario(name: str) -> Scenario:
    name = ALIASES.get(name, name)
    if name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}")
    return SCENARIOS[name]
