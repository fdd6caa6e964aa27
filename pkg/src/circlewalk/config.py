"""Experiment configuration files (TOML) and their resolution into generator sets.

Schema::

    seed = 1                      # optional, default 0

    [[generators]]
    label = "f1"
    type = "interval_affine"      # rotation | mobius | pl | north_south | interval_affine | interval_pl
    weight = 0.5
    params = { slope = 0.3333333333333333, offset = 0.0 }

    [exponent]                    # optional per-command blocks, see COMMAND_PARAMS
    steps = 2000

Parameters per generator type:

    rotation         angle
    mobius           matrix = [[a, b], [c, d]]
    pl               xs, ys
    north_south      attractor, repeller, contraction (default 0.5)
    interval_affine  slope, offset, domain = [start, length] (default [0, 0.5])
    interval_pl      ts, ss, domain, complement = [[x, y], ...]
"""
from __future__ import annotations

import copy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .circle import Arc
from .homeo import IntervalMap, Mobius, PiecewiseLinear, Rotation, north_south
from .walk import GeneratorSet


class ConfigError(ValueError):
    pass


COMMAND_PARAMS = {
    "exponent": {"point": 0.1, "steps": 2000, "trajectories": 16},
    "stationary": {"x0": 0.1, "burn_in": 1000, "samples": 20000, "trajectories": 1},
    "decompose": {"starts": 16, "burn_in": 1000, "samples": 20000, "resolution": 256,
                  "threshold": 0.0, "basin_resolution": 64, "repeats": 64},
    "entropy": {"x0": 0.1, "burn_in": 1000, "samples": 200000, "trajectories": 20,
                "eps": 0.002, "probes": 200, "lambda_starts": 16, "lambda_steps": 1000},
    "transfer": {"steps": 200, "resolution": 512, "phi": "cos"},
    "sync": {"pairs": 200, "steps": 500, "tol": 1e-6},
    "staircase": {"steps": 200, "resolution": 256, "jump_threshold": 0.0, "trajectory": 0},
    "period": {"resolution": 64},
    "invariant-check": {"resolution": 128, "iterations": 500},
    "classify": {"residual_tol": 0.02, "max_cells": 3, "slope_tol": 0.05, "resolution": 256,
                 "starts": 16, "burn_in": 1000, "samples": 20000},
}

# file blocks use underscores where command names use dashes
BLOCK_NAMES = {name.replace("-", "_"): name for name in COMMAND_PARAMS}

GENERATOR_PARAMS = {
    "rotation": ({"angle"}, set()),
    "mobius": ({"matrix"}, set()),
    "pl": ({"xs", "ys"}, set()),
    "north_south": ({"attractor", "repeller"}, {"contraction"}),
    "interval_affine": ({"slope", "offset"}, {"domain"}),
    "interval_pl": ({"ts", "ss"}, {"domain", "complement"}),
}


def build_map(kind: str, params: dict):
    if kind not in GENERATOR_PARAMS:
        raise ConfigError(f"unknown generator type {kind!r}; expected one of {sorted(GENERATOR_PARAMS)}")
    required, optional = GENERATOR_PARAMS[kind]
    keys = set(params)
    if required - keys:
        raise ConfigError(f"{kind}: missing parameters {sorted(required - keys)}")
    if keys - required - optional:
        raise ConfigError(f"{kind}: unknown parameters {sorted(keys - required - optional)}")
    try:
        if kind == "rotation":
            return Rotation(params["angle"])
        if kind == "mobius":
            return Mobius(params["matrix"])
        if kind == "pl":
            return PiecewiseLinear(params["xs"], params["ys"])
        if kind == "north_south":
            return north_south(params["attractor"], params["repeller"], params.get("contraction", 0.5))
        domain = Arc(*params.get("domain", (0.0, 0.5)))
        if kind == "interval_affine":
            return IntervalMap.affine_map(params["slope"], params["offset"], domain)
        return IntervalMap(params["ts"], params["ss"], domain, params.get("complement", ()))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{kind}: {exc}") from None


def generator_set_from_list(entries, seed: int) -> GeneratorSet:
    if not isinstance(entries, list) or not entries:
        raise ConfigError("config needs a nonempty [[generators]] list")
    gens = []
    for i, e in enumerate(entries):
        if not isinstance(e, dict):
            raise ConfigError(f"generator {i} must be a table")
        unknown = set(e) - {"label", "type", "params", "weight"}
        if unknown:
            raise ConfigError(f"generator {i}: unknown keys {sorted(unknown)}")
        if "type" not in e:
            raise ConfigError(f"generator {i}: missing type")
        label = str(e.get("label", f"g{i}"))
        gens.append((label, build_map(e["type"], dict(e.get("params", {}))), float(e.get("weight", 1.0))))
    try:
        return GeneratorSet(gens, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def generator_entries(gs: GeneratorSet) -> list[dict]:
    """Config-schema description of a generator set (inverse of ``generator_set_from_list``)."""
    out = []
    for g in gs.generators:
        d = g.map.to_dict()
        kind = d.pop("type")
        if kind == "interval_affine":
            d["domain"] = list(d["domain"])
        out.append({"label": g.label, "type": kind, "weight": g.weight, "params": d})
    return out


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from None
    return validate_config(raw)


def validate_config(raw: dict) -> dict:
    """Check keys and types; returns a normalized copy."""
    allowed = {"seed", "generators"} | set(BLOCK_NAMES)
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    cfg = {"seed": raw.get("seed"), "generators": raw.get("generators"), "commands": {}}
    if cfg["seed"] is not None and not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")
    for block, command in BLOCK_NAMES.items():
        if block not in raw:
            continue
        params = raw[block]
        if not isinstance(params, dict):
            raise ConfigError(f"[{block}] must be a table")
        bad = set(params) - set(COMMAND_PARAMS[command])
        if bad:
            raise ConfigError(f"[{block}]: unknown keys {sorted(bad)}")
        cfg["commands"][command] = dict(params)
    if cfg["generators"] is not None:
        generator_set_from_list(cfg["generators"], 0)
    return cfg


def command_params(command: str, cfg: dict | None, overrides: dict) -> dict:
    """Defaults, then the config block, then command-line overrides."""
    params = copy.deepcopy(COMMAND_PARAMS.get(command, {}))
    if cfg:
        params.update(cfg["commands"].get(command, {}))
    for k, v in overrides.items():
        if v is not None:
            params[k] = v
    for k, v in params.items():
        default = COMMAND_PARAMS[command][k]
        if isinstance(default, (int, float)) and not isinstance(default, bool):
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ConfigError(f"{command}.{k} must be a number")
            if isinstance(default, int) and not isinstance(default, bool) and float(v) != int(v):
                raise ConfigError(f"{command}.{k} must be an integer")
            params[k] = type(default)(v)
    return params
