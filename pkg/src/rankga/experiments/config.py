"""JSON experiment configs: sections engine, scheme, landscape, scenario."""
from __future__ import annotations

import copy
import itertools
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from rankga.core import FitnessLandscape
from rankga.engine.dynamics import GAConfig
from rankga.errors import ConfigError, InvalidArgument
from rankga.selection import SelectionScheme

DEFAULTS = {
    "engine": {
        "length": 100,
        "m": 100,
        "p_C": 0.0,
        "p_M": None,        # default 1/length unless pi or p_M_factor say otherwise
        "pi": None,         # target pi; solves p_M (or p_C when p_M is given)
        "p_M_factor": None,  # p_M = factor / length
        "m_factor": None,   # m = ceil(factor ln length), rounded up to even
        "horizon": 100,
        "seed": 0,
    },
    "scheme": {"kind": "tournament", "t": 2},
    "landscape": {"kind": "sharp-peak"},
    "scenario": {"name": None, "trials": 100, "sweep": {}},
}


def deep_merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in (extra or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = deep_merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config sections {sorted(unknown)}")
    return deep_merge(deep_merge(DEFAULTS, raw), overrides or {})


def load_calibration(path=None) -> dict:
    if path is None:
        text = resources.files("rankga.experiments").joinpath("calibration.json").read_text()
    else:
        text = Path(path).read_text()
    return json.loads(text)


# -- builders ------------------------------------------------------------------


def build_scheme(d: dict) -> SelectionScheme:
    kind = d.get("kind")
    try:
        if kind == "tournament":
            return SelectionScheme.tournament(d["t"])
        if kind == "linear-ranking":
            return SelectionScheme.linear_ranking(d["eta_plus"], d.get("eta_minus"))
        if kind == "custom":
            return SelectionScheme.custom(d["table"])
    except (KeyError, InvalidArgument) as exc:
        raise ConfigError(f"bad scheme section: {exc}") from exc
    raise ConfigError(f"unknown scheme kind {kind!r}")


def build_landscape(d: dict, length: int) -> FitnessLandscape:
    kind = d.get("kind")
    try:
        if kind == "sharp-peak":
            return FitnessLandscape.sharp_peak(length)
        if kind == "one-max":
            return FitnessLandscape.one_max(length)
        if kind == "staircase-table":
            levels = d.get("levels", "linear")
            if levels == "linear":
                levels = list(range(length + 1))
            return FitnessLandscape.staircase(levels)
        if kind == "custom-table":
            return FitnessLandscape.custom(length, d["table"], d.get("default"))
        if kind == "constant":
            return FitnessLandscape.constant(length, d.get("value", 1.0))
    except (KeyError, InvalidArgument) as exc:
        raise ConfigError(f"bad landscape section: {exc}") from exc
    raise ConfigError(f"unknown landscape kind {kind!r}")


@dataclass(frozen=True)
class EngineParams:
    length: int
    m: int
    p_C: float
    p_M: float
    horizon: int
    seed: int


def resolve_engine(engine: dict, scheme: SelectionScheme) -> EngineParams:
    """Turn the engine section into concrete (length, m, p_C, p_M)."""
    length = int(engine["length"])
    if length < 1:
        raise ConfigError("length must be >= 1")
    m = engine["m"]
    if engine.get("m_factor") is not None:
        m = max(2, math.ceil(engine["m_factor"] * math.log(length)))
        if scheme.kind == "tournament":
            m = max(m, scheme.t)
        m += m % 2
    m = int(m)
    p_C = float(engine.get("p_C") or 0.0)
    p_M = engine.get("p_M")
    if engine.get("p_M_factor") is not None:
        p_M = engine["p_M_factor"] / length
    target = engine.get("pi")
    if target is not None:
        if not scheme.has_limit:
            raise ConfigError("a pi target needs a scheme with a selection drift")
        sigma = scheme.sigma
        if p_M is None:
            survive = target / (sigma * (1 - p_C)) if p_C < 1 else math.inf
            if not 0 < survive <= 1:
                raise ConfigError(f"pi={target} unreachable with p_C={p_C} (sigma={sigma})")
            p_M = -math.expm1(math.log(survive) / length)
        else:
            survive = math.exp(length * math.log1p(-p_M)) if p_M < 1 else 0.0
            keep = target / (sigma * survive) if survive > 0 else math.inf
            if keep > 1:
                raise ConfigError(f"pi={target} unreachable with p_M={p_M}: max pi is {sigma * survive}")
            p_C = 1.0 - keep
    if p_M is None:
        p_M = 1.0 / length
    return EngineParams(length, m, p_C, float(p_M), int(engine["horizon"]), int(engine["seed"]))


def build_ga_config(cfg: dict) -> GAConfig:
    scheme = build_scheme(cfg["scheme"])
    e = resolve_engine(cfg["engine"], scheme)
    landscape = build_landscape(cfg["landscape"], e.length)
    try:
        return GAConfig(e.length, e.m, scheme, e.p_C, e.p_M, landscape, e.seed, e.horizon)
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc


# -- sweeps --------------------------------------------------------------------


def set_path(cfg: dict, dotted: str, value):
    section, _, key = dotted.partition(".")
    if section not in cfg or not key:
        raise ConfigError(f"sweep key {dotted!r} must look like 'section.key'")
    node = cfg[section]
    *parents, leaf = key.split(".")
    for p in parents:
        node = node.setdefault(p, {})
    node[leaf] = value


def sweep_points(cfg: dict) -> list[tuple[dict, dict]]:
    """(assignment, config) pairs for the cartesian product of the sweep lists,
    in key order; a config without a sweep yields one point."""
    sweep = cfg["scenario"].get("sweep") or {}
    keys = list(sweep)
    out = []
    for values in itertools.product(*(sweep[k] for k in keys)):
        point = copy.deepcopy(cfg)
        assignment = dict(zip(keys, values))
        for k, v in assignment.items():
            set_path(point, k, v)
        out.append((assignment, point))
    return out
