"""Command-line harness.

Usage: ``pfaffwalk {simulate,kernel,verify,figure,gap} [--config PATH] [flags]``.
Settings come from an optional JSON document; flags override it. Every
command writes CSV (to ``--out`` or stdout) whose first line is ``#``
followed by a JSON header with the resolved configuration. Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from math import sqrt
from pathlib import Path

import numpy as np

from . import __version__
from . import kernel_engine as ke
from . import lattice_sim as ls
from . import stats
from .continuum import VARIANTS, ContinuumKernel, intensity_killed, intensity_reflected
from .verify import SUITES, run_suite
from ._validation import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

DEFAULTS = {
    "variant": "bulk",
    "theta": 1.0,
    "t": 1.0,
    "epsilon": None,
    "seed": 0,
    "threads": None,
    "trajectories": 1000,
    "window": [-20, 20],
    "boundary": None,
    "initial": "full",
    "rate": 1.0,
    "points": None,
    "suite": "pfaffian",
    "tolerance": None,
    "lengths": [2, 4, 6, 8, 10, 12],
    "mode": "empty-interval",
    "interval": None,
    "nodes": None,
    "grid": 241,
}

_FLAGS = ("theta", "t", "epsilon", "seed", "threads", "trajectories", "suite", "tolerance",
          "variant", "mode", "nodes")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return str(v)


def _write_csv(out, header, columns, rows):
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    text = buf.getvalue()
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _float(cfg, key, lo=None, strict=False):
    try:
        v = float(cfg[key])
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {cfg[key]!r}") from None
    if not np.isfinite(v) or (lo is not None and (v < lo or (strict and v == lo))):
        raise ConfigError(f"{key} out of range: {v}")
    return v


def _int(cfg, key, lo=None):
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, np.integer)) and not (
            isinstance(v, float) and v.is_integer()):
        raise ConfigError(f"{key} must be an integer, got {v!r}")
    v = int(v)
    if lo is not None and v < lo:
        raise ConfigError(f"{key} must be at least {lo}, got {v}")
    return v


def resolve_config(args):
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(loaded) - set(DEFAULTS) - {"output"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(loaded)
    for key in _FLAGS:
        v = getattr(args, key, None)
        if v is not None:
            cfg[key] = v
    if args.out is not None:
        cfg["output"] = args.out
    cfg.setdefault("output", None)
    theta = _float(cfg, "theta", 0.0)
    if theta > 1:
        raise ConfigError("theta must lie in [0, 1]")
    _float(cfg, "t", 0.0)
    if cfg["epsilon"] is not None:
        _float(cfg, "epsilon", 0.0, strict=True)
    _int(cfg, "seed", 0)
    if cfg["threads"] is not None:
        _int(cfg, "threads", 1)
    return cfg


def _window(cfg):
    w = cfg["window"]
    if not (isinstance(w, (list, tuple)) and len(w) == 2
            and all(isinstance(v, int) and not isinstance(v, bool) for v in w)):
        raise ConfigError(f"window must be [x_min, x_max] integers, got {w!r}")
    lo, hi = w
    if hi < lo:
        raise ConfigError(f"empty window {w!r}")
    return lo, hi


def _boundary(cfg, default):
    b = cfg["boundary"] or default
    if b not in ls.BOUNDARY_MODES:
        raise ConfigError(f"boundary must be one of {ls.BOUNDARY_MODES}")
    return b


def _initial(cfg, lo, hi, boundary):
    spec = cfg["initial"]
    seed = _int(cfg, "seed", 0)
    try:
        if spec == "full":
            return ls.Configuration.full(lo, hi, boundary)
        if spec == "half-space":
            return ls.Configuration.from_sites(range(lo, min(hi, 0) + 1), lo, hi, boundary)
        if isinstance(spec, dict) and "sites" in spec:
            return ls.Configuration.from_sites(spec["sites"], lo, hi, boundary)
        if isinstance(spec, dict) and "bernoulli" in spec:
            p = float(spec["bernoulli"])
            if not 0 <= p <= 1:
                raise ConfigError("bernoulli probability must lie in [0, 1]")
            return ls.Configuration.bernoulli(lo, hi, p, np.random.default_rng(seed), boundary)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    raise ConfigError(f"unknown initial condition {spec!r}")


def _rates(cfg, eta, theta):
    r = cfg["rate"]
    try:
        if isinstance(r, dict):
            return ls.RateProfile(eta.x_min, r["q"], r["p"], theta)
        r = float(r)
        if eta.boundary == "killed":
            return ls.RateProfile.killed(eta.x_max, theta, r)
        if eta.boundary == "reflected":
            return ls.RateProfile.reflected(eta.x_max, theta, r)
        return ls.RateProfile.homogeneous(eta.x_min, eta.x_max, theta, r)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad rate profile: {exc}") from None


def _point_sets(cfg, lo, hi):
    pts = cfg["points"]
    if pts is None:
        return [[x] for x in range(lo, hi + 1)]
    try:
        sets = [[int(x) for x in (p if isinstance(p, (list, tuple)) else [p])] for p in pts]
    except (TypeError, ValueError):
        raise ConfigError("points must be a list of site lists") from None
    for s in sets:
        if not s or len(set(s)) != len(s) or min(s) < lo or max(s) > hi:
            raise ConfigError(f"bad point set {s!r}")
    return sets


def _header(cfg, command):
    # the output path is not part of the computation
    h = {k: v for k, v in cfg.items() if k != "output"}
    h["command"] = command
    h["version"] = __version__
    return h


def cmd_simulate(cfg):
    n = _int(cfg, "trajectories", 0)
    if n < 1:
        raise ConfigError("trajectories must be at least 1")
    lo, hi = _window(cfg)
    boundary = _boundary(cfg, "periodic")
    theta = float(cfg["theta"])
    eta = _initial(cfg, lo, hi, boundary)
    rates = _rates(cfg, eta, theta)
    sets = _point_sets(cfg, lo, hi)
    ens = ls.simulate_ensemble(eta, rates, float(cfg["t"]), n, int(cfg["seed"]), cfg["threads"])
    width = max(len(s) for s in sets)
    rows = []
    for s in sets:
        m, se = ls.estimate_products(ens, s) if n > 1 else (float(np.prod(ens.occupancy[0, np.array(s) - lo])), np.nan)
        rows.append(list(s) + [""] * (width - len(s)) + [m, se, n, int(cfg["seed"])])
    cols = [f"x{i + 1}" for i in range(width)] + ["estimate", "stderr", "N", "seed"]
    _write_csv(cfg["output"], _header(cfg, "simulate"), cols, rows)


def cmd_kernel(cfg):
    theta = float(cfg["theta"])
    t = float(cfg["t"])
    eps = cfg["epsilon"]
    if eps is not None:
        variant = cfg["variant"]
        if variant not in VARIANTS:
            raise ConfigError(f"scaled kernels need variant in {VARIANTS}")
        if t <= 0:
            raise ConfigError("scaled kernels need t > 0")
        lo, hi = _window(cfg)
        if variant in ("killed", "reflected") and lo < (1 if variant == "killed" else 0):
            raise ConfigError(f"{variant} window must start at {1 if variant == 'killed' else 0}")
        from .verify import lattice_kernel
        # the bulk grid starts at 0; translation invariance lets it cover any window
        shift = lo if variant == "bulk" else 0
        span = hi - lo + 1 if variant == "bulk" else max(abs(lo), abs(hi)) + 1
        MK = lattice_kernel(variant, t / eps ** 2, theta, span)
        ck = ContinuumKernel(variant, t, theta)
        rows = []
        for y in range(lo, hi + 1):
            for z in range(y, hi + 1):
                lat = float(MK.scalar(y - shift, z - shift))
                rows.append([y * eps, z * eps, lat, float(ck.scalar(y * eps, z * eps))])
        _write_csv(cfg["output"], _header(cfg, "kernel"), ["y", "z", "K", "K_continuum"], rows)
        return
    lo, hi = _window(cfg)
    boundary = _boundary(cfg, "truncated")
    if boundary == "periodic":
        raise ConfigError("kernel solves need a truncated, killed or reflected window")
    eta = _initial(cfg, lo, hi, boundary)
    K = ke.solve_scalar_kernel(eta, _rates(cfg, eta, theta), t)
    n = hi - lo + 1
    rows = [[lo + i, lo + j, K.values[i, j]] for i in range(n) for j in range(i, n)]
    _write_csv(cfg["output"], _header(cfg, "kernel"), ["y", "z", "K"], rows)


def cmd_verify(cfg):
    suite = cfg["suite"]
    if suite not in SUITES and suite != "all":
        raise ConfigError(f"suite must be one of {sorted(SUITES)} or 'all'")
    tol = cfg["tolerance"]
    if tol is not None:
        tol = _float(cfg, "tolerance", 0.0, strict=True)
    names = sorted(SUITES) if suite == "all" else [suite]
    rows, ok = [], True
    for name in names:
        for c in run_suite(name, tol):
            print(c.line(), file=sys.stderr)
            rows.append([name, c.name, c.value, c.tolerance, "PASS" if c.passed else "FAIL"])
            ok &= c.passed
    _write_csv(cfg["output"], _header(cfg, "verify"),
               ["suite", "check", "value", "tolerance", "status"], rows)
    if not ok:
        raise NumericalError("verification failed")


def cmd_figure(cfg):
    t = _float(cfg, "t", 0.0, strict=True)
    theta = float(cfg["theta"])
    n = _int(cfg, "grid", 2)
    y = np.linspace(0.0, 12.0 * sqrt(t), n)
    absorbing = intensity_killed(y, t, theta)
    reflecting = intensity_reflected(y, t, theta)
    bulk = np.full_like(y, 1.0 / ((1.0 + theta) * sqrt(2 * np.pi * t)))
    rows = zip(y, absorbing, reflecting, bulk)
    _write_csv(cfg["output"], _header(cfg, "figure"),
               ["y", "rho_absorbing", "rho_reflecting", "rho_bulk"], rows)


def cmd_gap(cfg):
    theta = float(cfg["theta"])
    t = _float(cfg, "t", 0.0, strict=True)
    mode = cfg["mode"]
    nodes = cfg["nodes"]
    if mode == "empty-interval":
        lengths = cfg["lengths"]
        if not isinstance(lengths, list) or len(lengths) < 3:
            raise ConfigError("lengths must be a list of at least three scaled lengths")
        fit = stats.gap_asymptotic_check(theta, t, lengths, nodes)
        rows = [[ell, float(np.exp(lp)), lp, fit.rate, fit.normalized_rate]
                for ell, lp in zip(fit.lengths, fit.log_p)]
        h = _header(cfg, "gap")
        h["derrida_constant"] = fit.target
        _write_csv(cfg["output"], h, ["length", "p", "log_p", "fitted_rate", "normalized_rate"], rows)
    elif mode == "right-tail":
        lengths = cfg["lengths"]
        ck = ContinuumKernel("halfspace", t, theta)
        rows = []
        for ell in lengths:
            p = stats.rightmost_tail(ck, float(ell) * sqrt(t), nodes)
            rows.append([ell, p, float(np.log(p)) if p > 0 else -np.inf])
        _write_csv(cfg["output"], _header(cfg, "gap"), ["L_over_sqrt_t", "p", "log_p"], rows)
    else:
        raise ConfigError("mode must be 'empty-interval' or 'right-tail'")


COMMANDS = {
    "simulate": cmd_simulate,
    "kernel": cmd_kernel,
    "verify": cmd_verify,
    "figure": cmd_figure,
    "gap": cmd_gap,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="pfaffwalk", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--out", metavar="PATH")
        p.add_argument("--theta", type=float)
        p.add_argument("--t", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--trajectories", type=int)
        p.add_argument("--variant")
        if name == "verify":
            p.add_argument("--suite")
            p.add_argument("--tolerance", type=float)
        if name == "gap":
            p.add_argument("--mode")
            p.add_argument("--nodes", type=int)
    return ap


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
