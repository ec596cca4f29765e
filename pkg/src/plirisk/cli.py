"""Command-line interface: ``plirisk {eval,frontier,verify,finite-check}``.

Settings are merged in increasing precedence: built-in defaults, the JSON
config file (top-level keys plus a block named after the subcommand),
``PLIRISK_<NAME>`` environment variables, then command-line flags.

Exit codes: 0 success, 1 property violation, 2 usage or config error,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np
from scipy.special import ndtri

from . import finite_rep as fr
from .fixtures import FixtureError, dump_report, load_fixture
from .lp import LPError
from .measures import (
    er,
    er_mean_of_cond,
    er_of_cond_mean,
    es_gaussian,
    law_invariant_functional,
    lift_conditional,
)
from .numerics import BracketError, QuadratureError
from .partial_es import (
    GaussianPair,
    RiskConfig,
    check_uncertainty,
    rho_beta_discrete_argmin,
    rho_beta_gaussian,
    rho_beta_lp,
)
from .portfolio import SweepSpec, fmt, optimizer_curve, sweep, write_atomic, write_optimizer_csv, write_sweep_csv
from .space import distribution_of, row_partition
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
ENV_PREFIX = "PLIRISK_"


class ConfigError(ValueError):
    pass


# Value parsers accept either the flag/env string form or a JSON value.
def _bool(v):
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off", ""):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def _floats(v):
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    s = str(v).strip()
    return [float(x) for x in s.split(",")] if s else []


def _kv(v):
    if isinstance(v, dict):
        return {k: float(x) for k, x in v.items()}
    out = {}
    for part in str(v).split(","):
        k, sep, x = part.partition("=")
        if not sep:
            raise ConfigError(f"expected key=value pairs, got {part!r}")
        out[k.strip()] = float(x)
    return out


COMMON = {"seed": (int, 42), "out": (str, None), "quiet": (_bool, False)}

OPTIONS = {
    "eval": {
        "risk": (str, None),
        "input": (str, None),
        "gaussian": (_kv, None),
        "pair": (_kv, None),
        "pi1": (float, None),
        "oracle": (_bool, False),
        "quad_tol": (float, 1e-9),
        "x_tol": (float, 1e-8),
    },
    "frontier": {
        "preset": (str, None),
        "m1": (float, 0.0),
        "m2_list": (_floats, [0.0]),
        "sigma1": (float, 0.1),
        "sigma2_list": (_floats, [0.1]),
        "c": (float, 0.5),
        "alpha": (float, 0.95),
        "beta_list": (_floats, [0.0, 0.25, 0.5, 0.75, 0.9, 0.95]),
        "grid": (int, 21),
        "refine_tol": (float, 1e-4),
        "workers": (int, 1),
        "quad_tol": (float, 1e-9),
        "x_tol": (float, 1e-8),
    },
    "verify": {
        "suite": (str, "all"),
        "instances": (int, None),
    },
    "finite-check": {
        "input": (str, None),
        "partition": (str, "columns"),
        "pairs": (int, 1000),
        "trials": (int, 1000),
        "mode": (str, "exact"),
    },
}

PRESETS = {
    "fig1": {"m2_list": [0.0, -0.05, -0.1], "sigma2_list": [0.1],
             "beta_list": [0.0, 0.25, 0.5, 0.75, 0.9, 0.95]},
    "fig2": {"m2_list": [0.0], "sigma2_list": [0.01, 0.025, 0.05, 0.1, 0.2],
             "beta_list": [0.95]},
}

HELP = {
    "risk": "mean | es:A | var:A | er:B | er-g:B | er-tilde:B | cond:<name> | rho:A:B | support",
    "input": "JSON fixture with M, N, p, x and/or vertices",
    "gaussian": "single normal loss, e.g. m=0,sigma=0.1",
    "pair": "Gaussian pair m1=..,m2=..,sigma1=..,sigma2=..,c=.. (use with --pi1)",
    "pi1": "portfolio weight of the first asset",
    "oracle": "also solve the LP formulation for rho on finite inputs",
    "preset": "fig1 (varying beta and m2) or fig2 (beta=0.95, varying sigma2)",
    "m2_list": "comma-separated means of the second asset (one panel each)",
    "sigma2_list": "comma-separated std devs of the second asset (one panel each)",
    "beta_list": "comma-separated uncertainty levels",
    "grid": "number of pi1 grid points (>= 11)",
    "suite": "one of " + ", ".join(SUITES + ("all",)),
    "instances": "override the suite's number of random instances",
    "partition": "columns, rows or both",
    "mode": "exact or sampled permutation enumeration",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=argparse.SUPPRESS, help="JSON config file")
    common.add_argument("--seed", default=argparse.SUPPRESS, help="random seed (default 42)")
    common.add_argument("--out", default=argparse.SUPPRESS, help="output directory")
    common.add_argument("--quiet", action="store_const", const=True, default=argparse.SUPPRESS,
                        help="print only the essentials")
    parser = argparse.ArgumentParser(prog="plirisk", parents=[common],
                                     description="Partially law-invariant risk measures.")
    sub = parser.add_subparsers(dest="command", required=True)
    for cmd, opts in OPTIONS.items():
        p = sub.add_parser(cmd, parents=[common])
        for name, (typ, _) in opts.items():
            flag = "--" + name.replace("_", "-")
            if typ is _bool:
                p.add_argument(flag, dest=name, action="store_const", const=True,
                               default=argparse.SUPPRESS, help=HELP.get(name))
            else:
                p.add_argument(flag, dest=name, default=argparse.SUPPRESS, help=HELP.get(name))
    return parser


def _convert(name, typ, value, source):
    try:
        return typ(value) if value is not None else None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{source}: bad value for {name}: {e}") from None


def resolve(command: str, flags: dict, env=None) -> dict:
    """Merge defaults, config file, environment and flags for ``command``."""
    env = os.environ if env is None else env
    spec = {**COMMON, **OPTIONS[command]}
    cfg = {name: default for name, (_, default) in spec.items()}
    path = flags.get("config") or env.get(ENV_PREFIX + "CONFIG")
    layer = {}
    if path:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: line {e.lineno}: {e.msg}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{path}: top level must be an object")
        layer = {k: v for k, v in data.items() if k in COMMON}
        block = data.get(command, {})
        if not isinstance(block, dict):
            raise ConfigError(f"{path}: block {command!r} must be an object")
        layer.update(block)
        unknown = set(layer) - set(spec)
        if unknown:
            raise ConfigError(f"{path}: unknown keys for {command}: {', '.join(sorted(unknown))}")
    preset = flags.get("preset") or env.get(ENV_PREFIX + "PRESET") or layer.get("preset")
    if command == "frontier" and preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        cfg.update(PRESETS[preset])
    for name, value in layer.items():
        cfg[name] = _convert(name, spec[name][0], value, "config")
    for name, (typ, _) in spec.items():
        key = ENV_PREFIX + name.upper()
        if key in env:
            cfg[name] = _convert(name, typ, env[key], key)
    for name, value in flags.items():
        if name in spec:
            cfg[name] = _convert(name, spec[name][0], value, "--" + name.replace("_", "-"))
    return cfg


def _emit(cfg, report: dict, name: str, short: str):
    text = dump_report(report)
    if cfg["out"]:
        write_atomic(os.path.join(cfg["out"], name), text)
    if cfg["quiet"]:
        print(short)
    else:
        print(text, end="")


def _levels(arg: str, n: int):
    parts = arg.split(":")
    if len(parts) != n:
        raise ConfigError(f"expected {n} level(s) in {arg!r}")
    return [float(x) for x in parts]


def _finite_risk(name, fx, cfg):
    X, space = fx.x, fx.space
    kind, _, arg = name.partition(":")
    extra = {}
    if kind == "rho":
        a, b = _levels(arg, 2)
        value, x = rho_beta_discrete_argmin(X, space, a, check_uncertainty(b))
        extra["argmin_x"] = x
        if cfg["oracle"]:
            extra["lp"] = rho_beta_lp(X, space, a, b)
    elif kind == "er-g":
        value = er_mean_of_cond(X, space, float(arg))
    elif kind == "er-tilde":
        value = er_of_cond_mean(X, space, float(arg))
    elif kind == "er":
        value = er(X, space, float(arg))
    elif kind == "cond":
        value = lift_conditional(law_invariant_functional(arg), X, space)
    elif kind == "support":
        if fx.vertices is None:
            raise ConfigError("risk 'support' needs vertices in the fixture")
        value = fr.support_eval(fr.SupportSet(space, fx.vertices), X)
    else:
        value = law_invariant_functional(name)(distribution_of(X, space))
    return value, extra


def _normal_risk(name, m, s):
    kind, _, arg = name.partition(":")
    if kind == "mean":
        return m
    if kind == "es":
        return es_gaussian(m, s, float(arg))
    if kind == "var":
        a = float(arg)
        if not 0 < a < 1:
            raise ConfigError("var level must lie in (0, 1) for a normal loss")
        return m + s * float(ndtri(a))
    if kind == "er":
        return m + 0.5 * float(arg) * s * s
    raise ConfigError(f"risk {name!r} is not available for a single normal loss")


def cmd_eval(cfg) -> int:
    name = cfg["risk"]
    if not name:
        raise ConfigError("eval needs --risk")
    sources = [k for k in ("input", "gaussian", "pair") if cfg[k]]
    if len(sources) != 1:
        raise ConfigError("eval needs exactly one of --input, --gaussian, --pair")
    report = {"risk": name}
    if cfg["input"]:
        fx = load_fixture(cfg["input"])
        if fx.x is None:
            raise ConfigError(f"{cfg['input']}: fixture has no loss field 'x'")
        value, extra = _finite_risk(name, fx, cfg)
        report.update(extra)
    elif cfg["gaussian"]:
        g = cfg["gaussian"]
        try:
            m, s = g["m"], g["sigma"]
        except KeyError as e:
            raise ConfigError(f"--gaussian is missing {e.args[0]}") from None
        if s < 0:
            raise ConfigError("sigma must be >= 0")
        value = _normal_risk(name, m, s)
    else:
        try:
            model = GaussianPair(**cfg["pair"])
        except TypeError as e:
            raise ConfigError(f"--pair: {e}") from None
        if cfg["pi1"] is None:
            raise ConfigError("--pair needs --pi1")
        pi1 = cfg["pi1"]
        kind, _, arg = name.partition(":")
        if kind == "rho":
            a, b = _levels(arg, 2)
            rc = RiskConfig(quad_tol=cfg["quad_tol"], x_tol=cfg["x_tol"])
            value, x = rho_beta_gaussian(model, pi1, a, b, rc)
            report["argmin_x"] = x
        else:
            value = _normal_risk(name, model.portfolio_mean(pi1), model.portfolio_std(pi1))
    report["value"] = value
    _emit(cfg, report, "eval.json", fmt(value))
    return EXIT_OK


def _panel_tag(m2, s2):
    return f"m2_{fmt(m2)}_sigma2_{fmt(s2)}"


def cmd_frontier(cfg) -> int:
    if not cfg["beta_list"]:
        raise ConfigError("beta_list is empty")
    if not cfg["m2_list"] or not cfg["sigma2_list"]:
        raise ConfigError("m2_list and sigma2_list must be non-empty")
    out = cfg["out"] or "."
    rc = RiskConfig(quad_tol=cfg["quad_tol"], x_tol=cfg["x_tol"])
    # validate every panel before writing anything
    specs = []
    for m2 in cfg["m2_list"]:
        for s2 in cfg["sigma2_list"]:
            model = GaussianPair(cfg["m1"], m2, cfg["sigma1"], s2, cfg["c"])
            specs.append((_panel_tag(m2, s2), SweepSpec(model, cfg["alpha"], tuple(cfg["beta_list"]),
                                                       cfg["grid"], cfg["refine_tol"])))
    # compute everything first so a failure leaves no CSV behind
    results = [(tag, sweep(spec, rc, workers=cfg["workers"]), optimizer_curve(spec, rc))
               for tag, spec in specs]
    for tag, rows, opt in results:
        write_sweep_csv(os.path.join(out, f"sweep_{tag}.csv"), rows)
        write_optimizer_csv(os.path.join(out, f"optimizers_{tag}.csv"), opt)
        if not cfg["quiet"]:
            for b, x, r in opt:
                print(f"{tag} beta={fmt(b)} pi1_star={fmt(x)} rho_star={fmt(r)}")
    return EXIT_OK


def cmd_verify(cfg) -> int:
    results = run_suite(cfg["suite"], seed=cfg["seed"], instances=cfg["instances"])
    report = {"seed": cfg["seed"], "suites": [r.summary() for r in results]}
    ok = all(r.passed for r in results)
    report["passed"] = ok
    short = "\n".join(f"{r.name}: {'PASS' if r.passed else 'FAIL'} "
                      f"({r.checks - len(r.failures)}/{r.checks})" for r in results)
    _emit(cfg, report, "verify.json", short)
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_finite_check(cfg) -> int:
    if not cfg["input"]:
        raise ConfigError("finite-check needs --input")
    fx = load_fixture(cfg["input"])
    if fx.vertices is None:
        raise ConfigError(f"{cfg['input']}: fixture has no 'vertices'")
    S = fr.SupportSet(fx.space, fx.vertices)
    parts = {"columns": [("columns", None)], "rows": [("rows", row_partition(fx.space))],
             "both": [("columns", None), ("rows", row_partition(fx.space))]}
    if cfg["partition"] not in parts:
        raise ConfigError(f"unknown partition {cfg['partition']!r}")
    if cfg["mode"] not in ("exact", "sampled"):
        raise ConfigError(f"unknown mode {cfg['mode']!r}")
    report = {"vertices": len(S), "checks": {}}
    consistent = True
    for label, part in parts[cfg["partition"]]:
        r = fr.check_g_law_invariance(S, part, cfg["pairs"], cfg["seed"], cfg["mode"])
        entry = {"structural": r.invariant, "behavioral": r.behavioral, "sampled": r.sampled,
                 "max_gap": r.max_gap, "projected": fr.l_map(S, part).vertices}
        if r.witness is not None:
            X, Y = r.witness
            entry["witness"] = {"X": X, "Y": Y, "rho_X": fr.support_eval(S, X),
                                "rho_Y": fr.support_eval(S, Y)}
        s = fr.check_strong_invariance(S, cfg["trials"], cfg["seed"], part)
        entry["strong"] = s.strong
        if s.witness is not None:
            entry["strong_witness"] = s.witness
        report["checks"][label] = entry
        consistent &= r.consistent
    if fx.x is not None:
        report["support_eval"] = fr.support_eval(S, fx.x)
        report["reconstructed"] = fr.reconstruct(S, fx.x)
    report["consistent"] = consistent
    short = " ".join(f"{k}: partial={v['structural']} strong={v['strong']}"
                     for k, v in report["checks"].items())
    _emit(cfg, report, "finite_check.json", short)
    return EXIT_OK if consistent else EXIT_VIOLATION


COMMANDS = {"eval": cmd_eval, "frontier": cmd_frontier, "verify": cmd_verify,
            "finite-check": cmd_finite_check}


def main(argv=None, env=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    try:
        cfg = resolve(command, args, env)
        return COMMANDS[command](cfg)
    except (LPError, QuadratureError, BracketError, FloatingPointError, np.linalg.LinAlgError) as e:
        print(f"plirisk: numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, FixtureError, ValueError, KeyError) as e:
        msg = e.args[0] if isinstance(e, KeyError) and e.args else e
        print(f"plirisk: error: {msg}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
