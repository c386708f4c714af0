"""Seeded trial farming with an ordered reduce, CSV and JSON emission."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rankga.experiments.config import load_calibration, sweep_points
from rankga.experiments.scenarios import Context, Scenario, get_scenario
from rankga.streams import trial_seed, trial_stream

BASE_COLUMNS = ("scenario", "point", "trial", "seed")


@dataclass(frozen=True)
class TrialResult:
    point: int
    trial: int
    seed: int
    observables: dict
    wall_time: float


@dataclass
class RunResult:
    scenario: str
    contexts: list[Context]
    results: list[TrialResult]
    csv_text: str
    summary: dict


def _run_task(task) -> TrialResult:
    scenario_name, ctx, point, k, seed = task
    scenario = get_scenario(scenario_name)
    start = time.perf_counter()
    obs = scenario.trial(ctx, trial_stream(seed, k))
    return TrialResult(point, k, trial_seed(seed, k), obs, time.perf_counter() - start)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def sweep_keys(contexts: list[Context]) -> list[str]:
    keys: list[str] = []
    for ctx in contexts:
        for k in ctx.assignment:
            if k not in keys:
                keys.append(k)
    return keys


def to_csv(scenario: Scenario, contexts: list[Context], results: list[TrialResult]) -> str:
    keys = sweep_keys(contexts)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*BASE_COLUMNS, *keys, *(c.name for c in scenario.columns)])
    for r in results:
        a = contexts[r.point].assignment
        w.writerow([scenario.name, r.point, r.trial, r.seed,
                    *(_fmt(a.get(k)) for k in keys),
                    *(_fmt(r.observables.get(c.name)) for c in scenario.columns)])
    return buf.getvalue()


def parse_csv(scenario: Scenario, text: str, n_points: int) -> list[list[dict]]:
    """Typed rows grouped by point, as the summaries consume them."""
    grouped: list[list[dict]] = [[] for _ in range(n_points)]
    for rec in csv.DictReader(io.StringIO(text)):
        row = {"trial": int(rec["trial"]), "seed": int(rec["seed"])}
        for c in scenario.columns:
            cell = rec[c.name]
            row[c.name] = None if cell == "" else c.kind(cell)
        grouped[int(rec["point"])].append(row)
    return grouped


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


def summarize(scenario: Scenario, contexts: list[Context], grouped: list[list[dict]],
              calibration: dict) -> dict:
    points = [scenario.summarize_point(rows, ctx, calibration)
              for rows, ctx in zip(grouped, contexts)]
    overall = scenario.summarize_all(grouped, contexts, points, calibration)
    verdicts = {}
    for i, p in enumerate(points):
        for k, v in p.items():
            if k.startswith("verdict_"):
                verdicts[f"point{i}.{k[8:]}"] = bool(v)
    for k, v in overall.items():
        if k.startswith("verdict_"):
            verdicts[k[8:]] = bool(v)
    return {"points": points, "overall": overall, "verdicts": verdicts}


def run_scenario(cfg: dict, seed: int | None = None, trials: int | None = None,
                 workers: int = 1, out=None, calibration: dict | None = None) -> RunResult:
    """Run every sweep point of the configured scenario.

    Trial k of every point draws from the stream of (seed, k), so points are
    compared on common random numbers and results do not depend on how
    trials are scheduled across workers.
    """
    scenario = get_scenario(cfg["scenario"]["name"])
    seed = int(cfg["engine"]["seed"] if seed is None else seed)
    trials = int(cfg["scenario"]["trials"] if trials is None else trials)
    calibration = load_calibration() if calibration is None else calibration
    contexts = [scenario.prepare(pcfg, assignment) for assignment, pcfg in sweep_points(cfg)]
    tasks = [(scenario.name, ctx, i, k, seed) for i, ctx in enumerate(contexts) for k in range(trials)]
    start = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_run_task(t) for t in tasks]
    elapsed = time.perf_counter() - start
    text = to_csv(scenario, contexts, results)
    body = summarize(scenario, contexts, parse_csv(scenario, text, len(contexts)), calibration)
    summary = {
        "scenario": scenario.name,
        "seed": seed,
        "trials": trials,
        "config": cfg,
        "calibration": calibration,
        **body,
        "wall_time_s": elapsed,
        "trial_wall_time_s": sum(r.wall_time for r in results),
    }
    summary = _jsonable(summary)
    if out is not None:
        write_outputs(out, text, summary)
    return RunResult(scenario.name, contexts, results, text, summary)


def write_outputs(out, csv_text: str, summary: dict):
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "trials.csv").write_text(csv_text)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=False) + "\n")


def summary_from_csv(cfg: dict, path, calibration: dict | None = None) -> dict:
    """Recompute the summary body from an emitted trials.csv."""
    scenario = get_scenario(cfg["scenario"]["name"])
    calibration = load_calibration() if calibration is None else calibration
    contexts = [scenario.prepare(pcfg, assignment) for assignment, pcfg in sweep_points(cfg)]
    grouped = parse_csv(scenario, Path(path).read_text(), len(contexts))
    return _jsonable(summarize(scenario, contexts, grouped, calibration))
