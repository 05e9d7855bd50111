"""Config-driven experiment commands emitting CSV/JSON artifacts.

Subcommands: mean | takeover | interval | stability | certify | sweep.
Every command reads one flat JSON object (--config) with optional
--set key=value overrides, rejects unknown keys outright, and writes a
self-describing JSON artifact (resolved config, seed, version) plus CSV
companions where a curve is involved.  Exit codes: 0 the claim checked
out, 2 usage or configuration error, 3 inconclusive (horizon or margin
too small to decide), 4 the claim is violated.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from . import coeff
from . import equilibria
from . import fronts
from . import kppsolve
from . import subsuper

__all__ = ["main", "cmd_mean", "cmd_takeover", "cmd_interval",
           "cmd_stability", "cmd_certify", "cmd_sweep", "ConfigError"]

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INCONCLUSIVE = 3
EXIT_VIOLATED = 4


class ConfigError(ValueError):
    """Bad or missing configuration keys; maps to the usage exit code."""


PATH_KEYS = {
    "path_kind", "path_value", "path_mean", "path_amplitude", "path_period",
    "seed", "noise_kappa", "noise_sigma", "noise_xi_max", "noise_dt",
    "path_t_lo", "path_t_hi", "tail_tol",
}
GRID_KEYS = {"x_lo", "x_hi", "dx"}
SOLVE_KEYS = {"dt", "t_end", "margin", "stride_time"}
U0_KEYS = {"u0_kind", "u0_x0", "u0_mu", "u0_height", "u0_lo", "u0_hi",
           "u0_value"}
OUT_KEYS = {"out_dir", "label"}

COMMAND_KEYS = {
    "mean": PATH_KEYS | OUT_KEYS | {"r_min", "horizon", "stride"},
    "takeover": PATH_KEYS | GRID_KEYS | SOLVE_KEYS | U0_KEYS | OUT_KEYS
        | {"level", "burn_in", "fit_window", "h", "t_checks", "r_min",
           "outer_tol", "inner_level"},
    "interval": PATH_KEYS | GRID_KEYS | SOLVE_KEYS | U0_KEYS | OUT_KEYS
        | {"c_grid", "shift_set", "t_probe", "thresholds", "n_jobs"},
    "stability": PATH_KEYS | GRID_KEYS | SOLVE_KEYS | OUT_KEYS
        | {"u0_inf", "u0_sup", "u0_wavelength", "slack"},
    "certify": PATH_KEYS | GRID_KEYS | SOLVE_KEYS | OUT_KEYS
        | {"mu", "mu_tilde", "delta", "d", "span", "r_min", "slack"},
    "sweep": OUT_KEYS | {"sweep_command", "sweep_key", "sweep_values",
                         "n_jobs", "base"},
}


def _require(cfg, key, command):
    if key not in cfg:
        raise ConfigError("command %r needs config key %r" % (command, key))
    return cfg[key]


def _validate_keys(cfg, command):
    if command not in COMMAND_KEYS:
        raise ConfigError("unknown command %r" % command)
    allowed = COMMAND_KEYS[command]
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise ConfigError("unknown config keys for %r: %s"
                          % (command, ", ".join(unknown)))


def path_from_config(cfg):
    """Build the coefficient path named by path_kind (default 'constant')."""
    kind = cfg.get("path_kind", "constant")
    if kind == "constant":
        return coeff.make_constant(float(cfg.get("path_value", 1.0)))
    if kind == "periodic":
        return coeff.make_periodic(float(cfg.get("path_mean", 1.0)),
                                   float(cfg.get("path_amplitude", 0.5)),
                                   float(cfg.get("path_period", 2 * math.pi)))
    if kind == "two-level":
        return coeff.make_two_level()
    if kind == "noise-equilibrium":
        # the raw noise is not a valid coefficient (it can be negative);
        # the equation always sees the positive equilibrium built from it
        if "seed" not in cfg:
            raise ConfigError("path_kind %r needs a seed" % kind)
        t_lo = float(cfg.get("path_t_lo", 0.0))
        t_hi = float(cfg.get("path_t_hi", 100.0))
        noise = coeff.make_noise(int(cfg["seed"]),
                                 kappa=float(cfg.get("noise_kappa", 1.0)),
                                 sigma=float(cfg.get("noise_sigma", 0.5)),
                                 xi_max=float(cfg.get("noise_xi_max", 0.75)),
                                 dt=float(cfg.get("noise_dt", 1e-3)),
                                 t_lo=t_lo - 120.0, t_hi=t_hi)
        return coeff.equilibrium_path(noise, t_lo, t_hi,
                                      tail_tol=float(cfg.get("tail_tol", 1e-8)))
    raise ConfigError("unknown path_kind %r" % kind)


def _grid_from_config(cfg, command):
    x_lo = float(_require(cfg, "x_lo", command))
    x_hi = float(_require(cfg, "x_hi", command))
    dx = float(_require(cfg, "dx", command))
    return kppsolve.make_grid(x_lo, x_hi, dx)


def _solve_config(cfg, command):
    dt = float(_require(cfg, "dt", command))
    stride = cfg.get("stride_time")
    stride = max(1, int(round(float(stride) / dt))) if stride else None
    return kppsolve.SolveConfig(dt=dt, store_stride=stride,
                                margin=float(cfg.get("margin", 50.0)))


def _u0_from_config(cfg, grid):
    kind = cfg.get("u0_kind", "heaviside")
    params = {}
    for key, name in (("u0_x0", "x0"), ("u0_mu", "mu"), ("u0_height", "height"),
                      ("u0_lo", "lo"), ("u0_hi", "hi"), ("u0_value", "value")):
        if key in cfg:
            params[name] = cfg[key]
    return kppsolve.init(kind, grid, params)


def _round12(obj):
    """Recursively round floats to 12 significant digits for stable output."""
    if isinstance(obj, float):
        return float("%.12g" % obj) if math.isfinite(obj) else obj
    if isinstance(obj, dict):
        return {k: _round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round12(v) for v in obj]
    if isinstance(obj, (np.floating,)):
        return _round12(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return _round12(obj.tolist())
    return obj


def _write_artifact(cfg, command, results):
    artifact = {
        "command": command,
        "version": __version__,
        "seed": cfg.get("seed"),
        "config": _round12(dict(cfg)),
        "results": _round12(results),
    }
    out_dir = cfg.get("out_dir")
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        name = cfg.get("label", command)
        path = os.path.join(out_dir, "%s.json" % name)
        with open(path, "w") as fh:
            json.dump(artifact, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return artifact


def cmd_mean(cfg):
    _validate_keys(cfg, "mean")
    path = path_from_config(cfg)
    r_min = float(_require(cfg, "r_min", "mean"))
    horizon = _require(cfg, "horizon", "mean")
    if not (isinstance(horizon, (list, tuple)) and len(horizon) == 2):
        raise ConfigError("horizon must be a [start, end] pair")
    stride = cfg.get("stride")
    est = coeff.estimate_means(path, r_min, tuple(float(h) for h in horizon),
                               stride=float(stride) if stride else None)
    results = {
        "a_lower_est": est.a_lower_est, "a_hat_est": est.a_hat_est,
        "a_upper_est": est.a_upper_est, "speed_band": list(est.speed_band),
        "takeover_speed": est.takeover_speed, "n_windows": est.n_windows,
        "window_lengths": list(est.lengths),
    }
    code = EXIT_OK
    if not est.a_lower_est <= est.a_hat_est <= est.a_upper_est:
        code = EXIT_VIOLATED
    return code, _write_artifact(cfg, "mean", results)


def cmd_takeover(cfg):
    _validate_keys(cfg, "takeover")
    path = path_from_config(cfg)
    grid = _grid_from_config(cfg, "takeover")
    config = _solve_config(cfg, "takeover")
    t_end = float(_require(cfg, "t_end", "takeover"))
    if t_end <= 0:
        raise ConfigError("t_end must be positive")
    field0 = _u0_from_config(cfg, grid)
    try:
        traj = kppsolve.solve(field0, path, t_end, config)
    except kppsolve.FrontMarginError as exc:
        return EXIT_INCONCLUSIVE, _write_artifact(cfg, "takeover",
                                                  {"aborted": str(exc)})
    level = float(cfg.get("level", 0.5))
    trace = fronts.track(traj, levels=(level, 0.25) if level == 0.5 else (level,))
    try:
        est = fronts.estimate_speed(
            trace, burn_in=cfg.get("burn_in"), level=level,
            window=tuple(cfg["fit_window"]) if "fit_window" in cfg else None)
    except ValueError as exc:
        return EXIT_INCONCLUSIVE, _write_artifact(cfg, "takeover",
                                                  {"aborted": str(exc)})
    results = {
        "speed": est.speed, "stderr": est.stderr, "window": list(est.window),
        "residual_rms": est.residual_rms, "endpoint_rate": est.endpoint_rate,
        "n_samples": est.n_samples, "level": est.level,
    }
    code = EXIT_OK
    if "h" in cfg:
        t_checks = cfg.get("t_checks") or [float(traj.times[-1])]
        report = fronts.takeover_verify(
            traj, path, float(cfg["h"]), [float(t) for t in t_checks],
            r_min=float(cfg.get("r_min", 5.0)),
            outer_tol=float(cfg.get("outer_tol", 1e-3)),
            inner_level=float(cfg.get("inner_level", 0.99)))
        results["takeover"] = {
            "passed": report.passed, "c_hat": report.c_hat, "h": report.h,
            "rows": [list(r) for r in report.rows],
        }
        if not report.passed:
            code = EXIT_VIOLATED
    artifact = _write_artifact(cfg, "takeover", results)
    if cfg.get("out_dir"):
        trace.to_csv(os.path.join(cfg["out_dir"],
                                  "%s_trace.csv" % cfg.get("label", "takeover")))
    return code, artifact


def cmd_interval(cfg):
    _validate_keys(cfg, "interval")
    path = path_from_config(cfg)
    c_grid = _require(cfg, "c_grid", "interval")
    shift_set = _require(cfg, "shift_set", "interval")
    t_probe = float(_require(cfg, "t_probe", "interval"))
    kind = cfg.get("u0_kind", "front-like")
    u0 = {"kind": kind}
    for key, name in (("u0_x0", "x0"), ("u0_mu", "mu"), ("u0_height", "height"),
                      ("u0_lo", "lo"), ("u0_hi", "hi")):
        if key in cfg:
            u0[name] = cfg[key]
    domain = None
    if "x_lo" in cfg or "x_hi" in cfg:
        domain = (float(_require(cfg, "x_lo", "interval")),
                  float(_require(cfg, "x_hi", "interval")))
    interval = fronts.probe_speed_interval(
        path, u0, c_grid, shift_set, t_probe,
        thresholds=tuple(cfg.get("thresholds", (0.9, 0.05))),
        dx=float(cfg.get("dx", 0.1)), dt=float(cfg.get("dt", 0.005)),
        domain=domain, margin=float(cfg.get("margin", 50.0)),
        n_jobs=cfg.get("n_jobs"))
    results = interval.to_dict()
    found = math.isfinite(interval.c_lo) and math.isfinite(interval.c_hi) \
        and interval.c_lo <= interval.c_hi
    code = EXIT_OK if (interval.monotone and found) else EXIT_INCONCLUSIVE
    return code, _write_artifact(cfg, "interval", results)


def cmd_stability(cfg):
    _validate_keys(cfg, "stability")
    path = path_from_config(cfg)
    grid = _grid_from_config(cfg, "stability")
    config = _solve_config(cfg, "stability")
    t_end = float(_require(cfg, "t_end", "stability"))
    u0_inf = float(_require(cfg, "u0_inf", "stability"))
    u0_sup = float(_require(cfg, "u0_sup", "stability"))
    if not 0 < u0_inf <= u0_sup:
        raise ConfigError("need 0 < u0_inf <= u0_sup")
    wavelength = float(cfg.get("u0_wavelength", 25.0))
    mid = 0.5 * (u0_inf + u0_sup)
    amp = 0.5 * (u0_sup - u0_inf)
    vals = mid + amp * np.sin(2 * math.pi * grid.x / wavelength)
    field0 = kppsolve.init("custom-samples", grid, {"values": vals})
    traj = kppsolve.solve(field0, path, t_end, config)
    slack = cfg.get("slack")
    report = equilibria.verify_stability_decay(
        traj, path, bound=equilibria.stability_bound(u0_inf, u0_sup),
        slack=float(slack) if slack is not None else None)
    results = {
        "passed": report.passed, "max_violation": report.max_violation,
        "worst_time": report.worst_time, "prefactor": report.prefactor,
        "slack": report.slack,
    }
    artifact = _write_artifact(cfg, "stability", results)
    if cfg.get("out_dir"):
        report.to_csv(os.path.join(cfg["out_dir"],
                                   "%s.csv" % cfg.get("label", "stability")))
    return EXIT_OK if report.passed else EXIT_VIOLATED, artifact


def cmd_certify(cfg):
    _validate_keys(cfg, "certify")
    path = path_from_config(cfg)
    grid = _grid_from_config(cfg, "certify")
    config = _solve_config(cfg, "certify")
    t_end = float(_require(cfg, "t_end", "certify"))
    mu = float(_require(cfg, "mu", "certify"))
    mu_tilde = float(_require(cfg, "mu_tilde", "certify"))
    span = tuple(float(s) for s in cfg.get("span", (0.0, t_end)))
    params = subsuper.make_wave_params(
        path, mu, mu_tilde, span,
        delta=float(cfg["delta"]) if "delta" in cfg else None,
        d=float(cfg["d"]) if "d" in cfg else None,
        r_min=float(cfg.get("r_min", 1.0)))
    upper = subsuper.supersolution(path, mu)
    lower = subsuper.lower_solution(path, params)
    field0 = kppsolve.init("custom-samples", grid,
                           {"values": upper(0.0, grid.x)})
    traj = kppsolve.solve(field0, path, t_end, config)
    slack = cfg.get("slack")
    slack = float(slack) if slack is not None else None
    above = subsuper.certify_ordering(traj, upper, "above", slack=slack)
    below = subsuper.certify_ordering(traj, lower, "below", slack=slack)
    results = {
        "params": {"mu": mu, "mu_tilde": mu_tilde, "delta": params.delta,
                   "d": params.d, "B_norm": params.B.B_norm,
                   "block_length": params.B.T},
        "above": {"passed": above.passed, "max_violation": above.max_violation,
                  "worst_time": above.worst_time, "slack": above.slack},
        "below": {"passed": below.passed, "max_violation": below.max_violation,
                  "worst_time": below.worst_time, "slack": below.slack},
    }
    artifact = _write_artifact(cfg, "certify", results)
    if cfg.get("out_dir"):
        label = cfg.get("label", "certify")
        above.to_csv(os.path.join(cfg["out_dir"], "%s_above.csv" % label))
        below.to_csv(os.path.join(cfg["out_dir"], "%s_below.csv" % label))
    passed = above.passed and below.passed
    return EXIT_OK if passed else EXIT_VIOLATED, artifact


def cmd_sweep(cfg):
    _validate_keys(cfg, "sweep")
    sub = _require(cfg, "sweep_command", "sweep")
    if sub not in COMMAND_KEYS or sub == "sweep":
        raise ConfigError("sweep_command must be a non-sweep command")
    key = cfg.get("sweep_key", "seed")
    values = _require(cfg, "sweep_values", "sweep")
    base = dict(_require(cfg, "base", "sweep"))
    if key not in COMMAND_KEYS[sub] and key not in PATH_KEYS:
        raise ConfigError("sweep_key %r is not a config key of %r" % (key, sub))
    base.pop("out_dir", None)   # cells stay in memory; only the sweep writes
    runner = COMMANDS[sub]

    def run(value):
        cell = dict(base)
        cell[key] = value
        return runner(cell)

    jobs = cfg.get("n_jobs") or min(4, len(values))
    with ThreadPoolExecutor(max_workers=int(jobs)) as ex:
        outcomes = list(ex.map(run, values))
    cells = {}
    for value, (code, artifact) in zip(values, outcomes):
        cells["%s=%s" % (key, value)] = {"exit_code": code,
                                         "results": artifact["results"]}
    results = {"command": sub, "key": key,
               "cells": {k: cells[k] for k in sorted(cells)}}
    worst = max(code for code, _ in outcomes)
    return worst, _write_artifact(cfg, "sweep", results)


COMMANDS = {
    "mean": cmd_mean, "takeover": cmd_takeover, "interval": cmd_interval,
    "stability": cmd_stability, "certify": cmd_certify, "sweep": cmd_sweep,
}


def _parse_override(text):
    if "=" not in text:
        raise ConfigError("override %r is not key=value" % text)
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key, value


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kpplab",
        description="Spreading-speed and stability experiments for the "
                    "time-dependent logistic reaction-diffusion equation.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help="run the %s command" % name)
        p.add_argument("--config", help="flat JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VAL",
                       help="override a config key (repeatable)")
        p.add_argument("--out-dir", help="artifact directory")
    return parser


def load_config(args):
    cfg = {}
    if args.config:
        with open(args.config) as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold one JSON object")
        cfg.update(loaded)
    for item in args.set:
        key, value = _parse_override(item)
        cfg[key] = value
    if args.out_dir:
        cfg["out_dir"] = args.out_dir
    return cfg


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
        code, artifact = COMMANDS[args.command](cfg)
    except (ConfigError, subsuper.InitialOrderingError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    except kppsolve.FrontMarginError as exc:
        print("inconclusive: %s" % exc, file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (ValueError, KeyError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return EXIT_USAGE
    summary = {k: v for k, v in artifact["results"].items()
               if not isinstance(v, (dict, list))}
    print(json.dumps({"command": args.command, "exit_code": code,
                      **_round12(summary)}, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
