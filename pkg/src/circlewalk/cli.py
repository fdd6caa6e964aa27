"""Batch experiment runner.

Every command writes ``<out>/summary.json`` (sorted keys, no timestamps, with
the fully resolved configuration) and ``<out>/<command>.csv``; timestamps go
to ``<out>/run.log``. Exit codes: 0 success, 2 configuration error,
3 estimator error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import estimators as est
from . import operators as ops
from .config import COMMAND_PARAMS, ConfigError, command_params, generator_entries, generator_set_from_list, load_config
from .grid import GridFunction
from .scenarios import build_scenario, scenario_names
from .walk import GeneratorSet

EXIT_OK, EXIT_CONFIG, EXIT_ESTIMATOR = 0, 2, 3
PAIR_STREAM = 1 << 40

CSV_HEADERS = {
    "exponent": ["step", "log_dist", "trajectory"],
    "stationary": ["sample"],
    "decompose": ["class", "node", "basin"],
    "entropy": ["probe", "x", "log_j"],
    "transfer": ["node", "phi", "cesaro", "last"],
    "sync": ["pair", "x", "y", "final_dist", "synced"],
    "staircase": ["jump", "location"],
    "period": ["generator", "src", "dst"],
    "invariant-check": ["cell", "weight"],
    "classify": ["key", "value"],
    "scenario-list": ["name", "trichotomy", "d", "period", "sync", "h_sign"],
}

TEST_FUNCTIONS = {
    "cos": lambda x: np.cos(2 * np.pi * x),
    "sin": lambda x: np.sin(2 * np.pi * x),
    "cos2": lambda x: np.cos(4 * np.pi * x),
}

log = logging.getLogger("circlewalk")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _cmd_exponent(gs, p):
    r = est.estimate_lambda_con(gs, p["point"], p["steps"], p["trajectories"])
    rows = []
    if r.series is not None:
        for t, series in enumerate(r.series):
            rows += [[i, repr(float(v)), t] for i, v in enumerate(series)]
    return r.to_dict(), rows


def _cmd_stationary(gs, p):
    mu = est.estimate_stationary(gs, p["x0"], p["burn_in"], p["samples"], trajectories=p["trajectories"])
    s = mu.samples
    result = {"count": mu.count, "mean_cos": float(np.cos(2 * np.pi * s).mean()),
              "mean_sin": float(np.sin(2 * np.pi * s).mean())}
    return result, [[repr(float(x))] for x in s]


def _cmd_decompose(gs, p):
    starts = (np.arange(p["starts"]) + 0.5) / p["starts"]
    dec = est.decompose_ergodic(gs, starts, p["burn_in"], p["samples"], p["resolution"], p["threshold"],
                                p["basin_resolution"], p["repeats"])
    rows = [[i, j, repr(float(v))] for i, u in enumerate(dec.basin_estimates) for j, v in enumerate(u.values)]
    return dec.to_dict(), rows


def _cmd_entropy(gs, p):
    mu = est.estimate_stationary(gs, p["x0"], p["burn_in"], p["samples"], trajectories=p["trajectories"])
    e = est.estimate_entropy(gs, mu, p["eps"], p["probes"], lambda_starts=p["lambda_starts"],
                             lambda_steps=p["lambda_steps"])
    # log J averaged over the generators at each probe point; h = -mean(log_j)
    rows = [[i, repr(x), repr(float(v))] for i, (x, v) in enumerate(zip(e.probe_points, e.probe_log_j))]
    return e.to_dict(), rows


def _cmd_transfer(gs, p):
    if p["phi"] not in TEST_FUNCTIONS:
        raise ConfigError(f"transfer.phi must be one of {sorted(TEST_FUNCTIONS)}")
    phi = GridFunction.from_function(TEST_FUNCTIONS[p["phi"]], p["resolution"])
    r = ops.transfer_iterate(gs, phi, p["steps"])
    result = r.to_dict()
    result["last_spread"] = float(r.last.values.max() - r.last.values.min())
    rows = [[j, repr(float(a)), repr(float(b)), repr(float(c))]
            for j, (a, b, c) in enumerate(zip(phi.values, r.cesaro.values, r.last.values))]
    return result, rows


def _cmd_sync(gs, p):
    rng = np.random.Generator(np.random.Philox(key=(PAIR_STREAM << 64) | gs.seed))
    pairs = rng.random((p["pairs"], 2))
    r = est.sync_test(gs, pairs, p["steps"], p["tol"])
    d = r.final_distances
    rows = [[i, repr(float(x)), repr(float(y)), repr(float(di)), int(di < p["tol"])]
            for i, ((x, y), di) in enumerate(zip(pairs, d))]
    return r.to_dict(), rows


def _cmd_staircase(gs, p):
    delta = p["jump_threshold"] or None
    r = ops.staircase_profile(gs, p["trajectory"], p["steps"], p["resolution"], delta)
    return r.to_dict(), [[i, repr(x)] for i, x in enumerate(r.jump_locations)]


def _cmd_period(gs, p):
    r = ops.decomposability_period(gs, p["resolution"])
    graph = ops.ArcGraph.build(gs, p["resolution"])
    rows = [[label, j, k] for label, lst in graph.edges.items() for j, k in lst]
    return r.to_dict(), rows


def _cmd_invariant(gs, p):
    r = ops.invariant_measure_residual(gs, p["resolution"], p["iterations"])
    return r.to_dict(), [[j, repr(float(w))] for j, w in enumerate(r.candidate)]


def _cmd_classify(gs, p):
    cfg = ops.ClassifierConfig(**p)
    r = ops.classify_trichotomy(gs, cfg)
    rows = [["verdict", r.verdict]] + [[k, json.dumps(_jsonable(v), sort_keys=True)]
                                       for k, v in sorted(r.diagnostics.items())]
    return r.to_dict(), rows


COMMANDS = {
    "exponent": _cmd_exponent,
    "stationary": _cmd_stationary,
    "decompose": _cmd_decompose,
    "entropy": _cmd_entropy,
    "transfer": _cmd_transfer,
    "sync": _cmd_sync,
    "staircase": _cmd_staircase,
    "period": _cmd_period,
    "invariant-check": _cmd_invariant,
    "classify": _cmd_classify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="circlewalk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML experiment file")
        sp.add_argument("--scenario", help="named scenario (wins over the file's generators)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", default="out", help="output directory (default: out)")
        for key, default in COMMAND_PARAMS[name].items():
            kind = type(default) if not isinstance(default, bool) else str
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=kind, default=None)
    sp = sub.add_parser("scenario-list")
    sp.add_argument("--out", default=None)
    return parser


def _setup_log(out: Path):
    handler = logging.FileHandler(out / "run.log")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO)
    log.propagate = False
    return handler


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def _scenario_list(out):
    rows = []
    for name in scenario_names():
        e = build_scenario(name).expected
        rows.append([name, e["trichotomy"], e["d"], e["period"], e["sync"], e["h_sign"]])
        print(name)
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        _write_csv(path / "scenario-list.csv", CSV_HEADERS["scenario-list"], rows)
    return EXIT_OK


def resolve(args) -> tuple[GeneratorSet, dict]:
    """Generator set and echoed configuration from ``--config`` / ``--scenario`` / ``--seed``."""
    if not args.config and not args.scenario:
        raise ConfigError("need --config FILE or --scenario NAME")
    cfg = load_config(args.config) if args.config else None
    seed = args.seed
    if seed is None:
        seed = cfg["seed"] if cfg and cfg["seed"] is not None else 0
    if args.scenario:
        if cfg and cfg["generators"] is not None:
            msg = f"scenario {args.scenario!r} overrides the generators of {args.config}"
            log.warning(msg)
            print("warning: " + msg, file=sys.stderr)
        try:
            gs = build_scenario(args.scenario, seed).generator_set
        except KeyError as exc:
            raise ConfigError(exc.args[0]) from None
    else:
        gs = generator_set_from_list(cfg["generators"], seed)
    overrides = {k: getattr(args, k) for k in COMMAND_PARAMS[args.command]}
    params = command_params(args.command, cfg, overrides)
    echo = {
        "scenario": args.scenario,
        "config_file": Path(args.config).name if args.config else None,
        "seed": gs.seed,
        "generators": generator_entries(gs),
        "params": params,
    }
    return gs, echo


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command == "scenario-list":
        return _scenario_list(args.out)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    handler = _setup_log(out)
    try:
        log.info("command %s argv %s", args.command, argv if argv is not None else sys.argv[1:])
        try:
            gs, echo = resolve(args)
        except ConfigError as exc:
            log.error("config error: %s", exc)
            parser.print_usage(sys.stderr)
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        try:
            result, rows = COMMANDS[args.command](gs, echo["params"])
        except est.EstimatorError as exc:
            log.error("estimator error: %s", exc)
            print(f"estimator error: {exc}", file=sys.stderr)
            return EXIT_ESTIMATOR
        except (ConfigError, ValueError) as exc:
            log.error("invalid parameters: %s", exc)
            print(f"invalid parameters: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        summary = {"command": args.command, "config": echo, **result}
        text = json.dumps(_jsonable(summary), sort_keys=True, indent=2) + "\n"
        (out / "summary.json").write_text(text)
        _write_csv(out / f"{args.command}.csv", CSV_HEADERS[args.command], rows)
        log.info("wrote %s and %s.csv", out / "summary.json", args.command)
        print(text, end="")
        return EXIT_OK
    finally:
        handler.close()
        log.handlers[:] = []


def main():
    sys.exit(run_command())


if __name__ == "__main__":
    main()
