"""Command-line front end.

Exit codes: 0 pass/success, 1 verified false, 2 config error, 3 runtime
failure, 4 inconclusive.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import warnings
from pathlib import Path

from . import ccdiag
from .config import ConfigError, RunConfig, load_config
from .fieldio import atomic_write, trace_csv, write_field
from .flow import FlowError, scan_mass, solve_multistart
from .nonlin import check_assumptions
from .reporting import FAIL, INCONCLUSIVE, PASS, canonical_json

__all__ = ["main", "EXIT_OK", "EXIT_FALSE", "EXIT_CONFIG", "EXIT_RUNTIME", "EXIT_INCONCLUSIVE", "OUT_DIR_ENV", "LEMMAS"]

log = logging.getLogger("vecmin")

EXIT_OK = 0
EXIT_FALSE = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3
EXIT_INCONCLUSIVE = 4
VERDICT_EXIT = {PASS: EXIT_OK, FAIL: EXIT_FALSE, INCONCLUSIVE: EXIT_INCONCLUSIVE}

OUT_DIR_ENV = "VECMIN_OUT_DIR"
LEMMAS = ("negativity", "subadditivity", "comparison", "continuity", "supercritical", "critical-threshold")


def _require(cfg: RunConfig, *names):
    missing = [n for n in names if getattr(cfg.params, n) is None]
    if missing:
        raise ConfigError(f"params missing required keys: {missing}")


def _require_bounded(cfg: RunConfig):
    N = cfg.grid.dim
    if not (cfg.spec.is_subcritical(N) or cfg.spec.is_critical(N)):
        raise ConfigError(f"growth ell = {cfg.spec.ell} exceeds 4/N = {4 / N}: the energy is unbounded below")


def _write_report(out: Path, cfg: RunConfig, command: str, result: dict, name: str = "report.json") -> Path:
    doc = {"command": command, "config_digest": cfg.digest(), "format_version": cfg.format_version, "result": result}
    return atomic_write(out / name, canonical_json(doc) + "\n")


# -- commands -----------------------------------------------------------------


def cmd_solve(cfg: RunConfig, out: Path) -> int:
    _require(cfg, "c")
    _require_bounded(cfg)
    p = cfg.params
    res = solve_multistart(cfg.grid, p.c, cfg.spec, cfg.flow, p.functional)
    write_field(out / "minimizer.vfld", res.minimizer)
    atomic_write(out / "trace.csv", trace_csv(res.trace))
    _write_report(out, cfg, "solve", res.summary())
    return EXIT_OK if res.converged else EXIT_INCONCLUSIVE


def cmd_scan(cfg: RunConfig, out: Path) -> int:
    _require(cfg, "c_values")
    _require_bounded(cfg)
    p = cfg.params
    pts = scan_mass(cfg.grid, p.c_values, cfg.spec, cfg.flow, p.functional)
    rows = [(pt.c, pt.energy, pt.multiplier, pt.residual) for pt in pts]
    atomic_write(out / "scan.csv", trace_csv(rows, ("c", "energy", "multiplier", "residual")))
    summary = {"points": [pt.result.summary() for pt in pts], "all_converged": all(pt.converged for pt in pts)}
    _write_report(out, cfg, "scan", summary)
    return EXIT_OK if summary["all_converged"] else EXIT_INCONCLUSIVE


def cmd_verify(cfg: RunConfig, out: Path, lemma: str) -> int:
    p, g, spec = cfg.params, cfg.grid, cfg.spec
    N = g.dim
    if lemma == "negativity":
        _require(cfg, "c")
        _require_bounded(cfg)
        lambdas = p.lambdas or (1.0, 0.5, 0.25, 0.125)
        rep = ccdiag.verify_negativity(
            g, spec, p.c, lambdas=lambdas, tol=p.tol, constants=cfg.constants_or_default(), config=cfg.flow if p.solve else None
        )
    elif lemma == "subadditivity":
        _require(cfg, "c")
        _require_bounded(cfg)
        rep = ccdiag.verify_subadditivity(g, spec, p.c, p.fractions, p.functional, cfg.flow)
    elif lemma == "comparison":
        _require(cfg, "c")
        _require_bounded(cfg)
        rep = ccdiag.verify_comparison(g, spec, p.c, p.fractions, cfg.flow)
    elif lemma == "continuity":
        _require(cfg, "c")
        _require_bounded(cfg)
        delta = p.delta if p.delta is not None else 0.01 * p.c
        if not 0 < delta < p.c / 2:
            raise ConfigError("continuity needs 0 < delta < c/2")
        rep = ccdiag.verify_continuity(g, spec, p.c, delta, cfg.flow, p.functional)
    elif lemma == "supercritical":
        _require(cfg, "c", "bound")
        if not spec.ell > 4.0 / N:
            raise ConfigError(f"supercritical probe needs ell > 4/N, got ell = {spec.ell}")
        rep = ccdiag.probe_supercritical(g, spec, p.c, p.bound, lambdas=p.lambdas, max_points=p.max_points, functional=p.functional)
    elif lemma == "critical-threshold":
        if not spec.is_critical(N):
            raise ConfigError(f"critical threshold needs ell == 4/N, got ell = {spec.ell}")
        bound = p.bound if p.bound is not None else 100.0
        rep = ccdiag.critical_threshold(g, spec, cfg.constants_or_default(), cfg.flow, bound, p.max_points)
    else:
        raise ConfigError(f"unknown lemma {lemma!r}; expected one of {LEMMAS}")
    _write_report(out, cfg, f"verify {lemma}", rep.to_dict())
    return VERDICT_EXIT[rep.verdict]


def cmd_check_assumptions(cfg: RunConfig, out: Path) -> int:
    if cfg.constants is None:
        raise ConfigError("check-assumptions needs a 'constants' section")
    report = check_assumptions(cfg.spec, cfg.constants, cfg.plan_or_default())
    _write_report(out, cfg, "check-assumptions", report.to_dict())
    return EXIT_OK if report.all_hold else EXIT_FALSE


def cmd_probe_dilation(cfg: RunConfig, out: Path) -> int:
    _require(cfg, "c")
    p = cfg.params
    lambdas = p.lambdas or tuple(2.0**j for j in range(-4, 5))
    phi = ccdiag.gaussian_trial(cfg.grid, cfg.spec.m, p.c)
    rows = ccdiag.dilation_sweep(phi, cfg.spec, lambdas, p.functional)
    atomic_write(
        out / "dilation.csv",
        trace_csv([(r["lambda"], r["energy"], r["kinetic"], r["potential"]) for r in rows], ("lambda", "energy", "kinetic", "potential")),
    )
    _write_report(out, cfg, "probe-dilation", {"sweep": rows})
    return EXIT_OK


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON run configuration")
    common.add_argument("--out", help=f"output directory (overrides ${OUT_DIR_ENV} and the config)")
    common.add_argument("--threads", type=int, help="worker threads for independent solves")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="vecmin", description="Constrained minimization of coupled Schroedinger energies.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="minimize on the mass sphere")
    sub.add_parser("scan", parents=[common], help="minimum energy along a list of masses")
    v = sub.add_parser("verify", parents=[common], help="gather evidence for one lemma")
    v.add_argument("lemma")
    sub.add_parser("check-assumptions", parents=[common], help="sample the hypotheses on F")
    sub.add_parser("probe-dilation", parents=[common], help="energy along the mass-preserving dilation family")
    return ap


def _output_dir(args, cfg: RunConfig) -> Path:
    if args.out:
        return Path(args.out)
    env = os.environ.get(OUT_DIR_ENV)
    return Path(env) if env else Path(cfg.output_dir)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify" and args.lemma not in LEMMAS:
            raise ConfigError(f"unknown lemma {args.lemma!r}; expected one of {LEMMAS}")
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = load_config(args.config).with_overrides(seed=args.seed, threads=args.threads)
        out = _output_dir(args, cfg)
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            if args.command == "solve":
                return cmd_solve(cfg, out)
            if args.command == "scan":
                return cmd_scan(cfg, out)
            if args.command == "verify":
                return cmd_verify(cfg, out, args.lemma)
            if args.command == "check-assumptions":
                return cmd_check_assumptions(cfg, out)
            return cmd_probe_dilation(cfg, out)
    except ConfigError as exc:
        print(f"vecmin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FlowError, FloatingPointError, OSError, MemoryError) as exc:
        print(f"vecmin: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except ValueError as exc:
        # remaining precondition failures raised inside the numerical modules
        print(f"vecmin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
