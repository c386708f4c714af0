"""Command line entry point: simulate, auxchain, theory, experiment, oracle."""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from rankga.auxchain import AuxParams, sample_step
from rankga.engine.dynamics import TraceSpec, run
from rankga.engine.exact import exact_transition_matrix, optimum_states, stationary_distribution
from rankga.errors import ConfigError
from rankga.experiments.config import build_ga_config, build_scheme, load_config, resolve_engine
from rankga.experiments.runner import run_scenario
from rankga.experiments.scenarios import SCENARIOS, _start_population
from rankga.streams import stream, trial_seed
from rankga.theory.rates import rate_grid, rho_star, v_compose
from rankga.theory.regime import regime_of

log = logging.getLogger("rankga")


def _overrides(args) -> dict:
    engine = {}
    if args.seed is not None:
        engine["seed"] = args.seed
    if args.horizon is not None:
        engine["horizon"] = args.horizon
    scenario = {}
    if args.trials is not None:
        scenario["trials"] = args.trials
    return {"engine": engine, "scenario": scenario}


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_simulate(args, cfg):
    config = build_ga_config(cfg)
    rng = stream(config.seed, 0, "engine")
    x0 = _start_population(args.start, config, rng)
    spec = TraceSpec(rhos=tuple(args.rho), lambdas=tuple(args.lam), genealogy=True,
                     catastrophe_rho=args.rho[0] if args.rho else None,
                     dump_populations=args.dump_populations)
    trace = run(config, x0, spec=spec, rng=rng)
    out = _out_dir(args)
    with open(out / "trace.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["generation", "best", *(f"level_rho{r:g}" for r in args.rho),
                    *(f"count_ge{lam:g}" for lam in args.lam), "T", "N_star", "catastrophe"])
        for rec in trace:
            w.writerow(rec.row())
    if args.dump_populations:
        with open(out / "populations.txt", "w") as fh:
            for rec in trace:
                fh.write(f"# generation {rec.generation}\n")
                fh.write("\n".join(rec.population) + "\n")
    print(f"pi={config.pi:.6g} regime={regime_of(config.pi)} final best={trace[-1].best:g} "
          f"N*={trace[-1].N_star} T={trace[-1].T}")


def cmd_auxchain(args, cfg):
    scheme = build_scheme(cfg["scheme"])
    engine = cfg["engine"]
    if engine.get("pi") is not None:
        params = AuxParams.with_pi(int(engine["m"]), scheme, float(engine["pi"]),
                                   float(engine.get("p_C") or 0.0))
    else:
        e = resolve_engine(engine, scheme)
        params = AuxParams.from_mutation(e.m, scheme, e.p_C, e.p_M, e.length)
    seed = int(engine["seed"])
    horizon = int(engine["horizon"])
    trials = int(cfg["scenario"]["trials"]) if args.trials is not None else 1
    start = params.m if args.start_count is None else args.start_count
    out = _out_dir(args)
    with open(out / "auxchain.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scenario", "trial", "seed", "generation", "count"])
        for k in range(trials):
            rng = np.random.default_rng(trial_seed(seed, k))
            s = start
            for n in range(horizon + 1):
                w.writerow(["auxchain", k, trial_seed(seed, k), n, s])
                if n < horizon:
                    s = int(sample_step(params, s, rng))
    rs = rho_star(scheme, params.pi) if params.pi is not None else None
    print(f"pi={params.pi:.6g} regime={regime_of(params.pi)} rho*={rs}")


def cmd_theory(args, cfg):
    scheme = build_scheme(cfg["scheme"])
    engine = cfg["engine"]
    if engine.get("pi") is not None:
        pi = float(engine["pi"])
    else:
        e = resolve_engine(engine, scheme)
        pi = AuxParams.from_mutation(e.m, scheme, e.p_C, e.p_M, e.length).pi
    rs = rho_star(scheme, pi)
    report = {"pi": pi, "sigma": scheme.sigma, "regime": regime_of(pi), "rho_star": rs}
    if args.grids:
        grid = v_compose(rate_grid(scheme, pi, h=args.resolution))
        gdir = _out_dir(args) / "grids"
        gdir.mkdir(exist_ok=True)
        grid.write_csv(gdir / "v1.csv", "v1")
        grid.write_csv(gdir / "V.csv", "V")
        report["lattice_tolerance"] = grid.tolerance()
    print(json.dumps(report, indent=2))


def cmd_experiment(args, cfg):
    cfg["scenario"]["name"] = args.scenario
    res = run_scenario(cfg, workers=args.workers, out=args.out)
    print(json.dumps({"scenario": res.scenario, "verdicts": res.summary["verdicts"],
                      "overall": res.summary["overall"]}, indent=2))


def cmd_oracle(args, cfg):
    config = build_ga_config(cfg)
    P = exact_transition_matrix(config)
    mu = stationary_distribution(P)
    out = _out_dir(args)
    np.savetxt(out / "oracle.csv", P, delimiter=",", fmt="%.17g")
    np.savetxt(out / "stationary.csv", mu, delimiter=",", fmt="%.17g")
    opt = optimum_states(config)
    print(json.dumps({"states": P.shape[0], "pi": config.pi,
                      "max_row_sum_error": float(np.abs(P.sum(axis=1) - 1).max()),
                      "mu_optimum": float(mu[opt].sum())}, indent=2))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (sections engine, scheme, landscape, scenario)")
    common.add_argument("--seed", type=int, help="64-bit master seed")
    common.add_argument("--trials", type=int)
    common.add_argument("--horizon", type=int, help="generation budget")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--dump-populations", action="store_true")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="rankga", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="run the GA and write trace.csv")
    s.add_argument("--start", default="master-over-zeros",
                   choices=["master-over-zeros", "all-master", "zeros", "random"])
    s.add_argument("--rho", type=float, nargs="*", default=[], help="fractions for level records")
    s.add_argument("--lam", type=float, nargs="*", default=[], help="fitness levels to count")
    s.set_defaults(fn=cmd_simulate)

    a = sub.add_parser("auxchain", parents=[common], help="sample auxiliary chain paths")
    a.add_argument("--start-count", type=int, help="initial state (default m)")
    a.set_defaults(fn=cmd_auxchain)

    t = sub.add_parser("theory", parents=[common], help="pi, regime, rho* and rate grids")
    t.add_argument("--grids", action="store_true", help="dump V_1 and V lattices as CSV")
    t.add_argument("--resolution", type=float, default=1 / 256)
    t.set_defaults(fn=cmd_theory)

    e = sub.add_parser("experiment", parents=[common], help="run a scenario")
    e.add_argument("scenario", choices=sorted(SCENARIOS) + ["hitting", "stationary", "equilibrium",
                                                             "persistence"])
    e.set_defaults(fn=cmd_experiment)

    o = sub.add_parser("oracle", parents=[common], help="exact transition matrix of a tiny instance")
    o.set_defaults(fn=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, _overrides(args))
        args.fn(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
