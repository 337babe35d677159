"""Command-line experiment runner.

Every subcommand reads one config file, writes a JSON report (``"schema": 1``)
and CSV data into ``--out``, and exits with

    0 success, 2 contract/parameter/range error, 3 nonconvergence or
    numeric failure, 4 config error.

Reports hold no timestamps or timings, so identical inputs give identical
bytes. ``--figures`` additionally renders PNG plots next to the data.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .alphap import alpha_p_report, encode_extended
from .asymptotics import (
    AsymptoticsReport,
    Thresholds,
    anisotropy_probe,
    classify,
    default_beta,
    driving_exponent,
    fit_log_growth,
    growth_probe,
    remainder_at_centers,
    remainder_decay_exponent,
)
from .config import ExperimentConfig, emit_config, load_config
from .curvature import BumpSum, ExactFamily
from .errors import (
    ConfigError,
    ContractViolation,
    GaussCurvError,
    NonconvergenceError,
    OutOfDomainError,
    ParameterError,
    RangeError,
)
from .growth import w0
from .potential import ground_state_decay_check, patch_residual, potential
from .solver import SolverOptions, exact_family_source, picard_solve, total_curvature

__all__ = ["main", "build_parser", "COMMANDS"]

log = logging.getLogger("gausscurv")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_CONTRACT, EXIT_NONCONVERGENCE, EXIT_CONFIG = 0, 2, 3, 4


def _clean(obj):
    """Make a report JSON-safe: infinities become tagged strings, numpy scalars plain."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        return encode_extended(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def write_json(path: Path, payload: dict):
    text = json.dumps(_clean(payload), indent=2, sort_keys=True, allow_nan=False)
    path.write_text(text + "\n")


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, (float, np.floating)) else x for x in row])


def solver_options(cfg: ExperimentConfig) -> SolverOptions:
    s = cfg["solver"]
    return SolverOptions(
        damping=s["damping"],
        min_damping=min(s["min_damping"], s["damping"]),
        tol=s["tol"],
        max_iter=s["max_iter"],
        r_max=s["r_max"],
        order=s["order"],
        n_theta=s["n_theta"],
        local_order=s["local_order"],
        local_theta=s["local_theta"],
        bracket=s["bracket"],
    )


def thresholds(cfg: ExperimentConfig) -> Thresholds:
    a = cfg["asymptotics"]
    return Thresholds(
        uniform_gap_max=a["uniform_gap_max"],
        anisotropic_gap_min=a["anisotropic_gap_min"],
        growth_exponent_min=a["growth_exponent_min"],
        low_confidence_exponent=a["low_confidence_exponent"],
        angular_deviation_max=a["angular_deviation_max"],
        decay_slack=a["decay_slack"],
        beta_epsilon=a["beta_epsilon"],
    )


def _report(cfg, command, body):
    return {"schema": SCHEMA_VERSION, "command": command, "config": cfg.to_dict(), **body}


# -- subcommands ------------------------------------------------------------------


def cmd_alphap(cfg, out: Path):
    K = cfg.curvature()
    a = cfg["alphap"]
    n = int(round((a["alpha_max"] - a["alpha_min"]) / a["alpha_step"]))
    grid = [round(a["alpha_min"] + i * a["alpha_step"], 12) for i in range(n + 1)]
    rep = alpha_p_report(K, a["p"], grid, a["r_max"])
    write_json(out / "alphap.json", _report(cfg, "alphap", rep.to_dict()))
    rows = [(e.p, lo, hi, m) for e in rep.estimates for lo, hi, m in e.annuli]
    write_csv(out / "alphap_annuli.csv", ["p", "r_lo", "r_hi", "moment"], rows)
    return {"alphap": rep}


def _solve(cfg):
    K = cfg.curvature()
    alpha = cfg.require("run", "alpha")
    return K, alpha, picard_solve(K, alpha, solver_options(cfg))


def cmd_solve(cfg, out: Path):
    K, alpha, sol = _solve(cfg)
    tc = total_curvature(K, sol)
    body = {
        "solution": sol.summary(),
        "total_curvature": {"value": tc.value, "tail_bound": tc.tail_bound, "target": -2.0 * math.pi * alpha},
        "trace": sol.trace,
    }
    write_json(out / "solve.json", _report(cfg, "solve", body))
    grid = sol.grid
    ub, ul = sol.u_samples()
    rows = [
        (grid.rho[i], grid.theta[j], ub[i, j], sol.v_background[i, j])
        for i in range(grid.rho.size)
        for j in range(grid.n_theta)
    ]
    write_csv(out / "solution_background.csv", ["r", "theta", "u", "v"], rows)
    if sol.frames:
        lg = sol.disc.lgrid
        rows = [
            (int(round(fr.center[0])), lg.rho[i], lg.theta[j], vl[i, j])
            for fr, vl in zip(sol.frames, sol.v_locals)
            for i in range(lg.rho.size)
            for j in range(lg.n_theta)
        ]
        write_csv(out / "solution_bumps.csv", ["n", "zr", "ztheta", "v_local"], rows)
    return {"solution": sol}


def cmd_verify_exact(cfg, out: Path):
    K = cfg.curvature()
    if not isinstance(K, ExactFamily):
        raise ConfigError("verify-exact needs kind = ExactFamily", key="kind")
    alpha = K.alpha
    sol = picard_solve(K, alpha, solver_options(cfg))
    r_check = cfg["run"]["check_radius"]
    r = np.linspace(0.0, r_check, 201)
    angles = (0.1, 1.3, 2.9, 4.4)
    err = np.zeros_like(r)
    for th in angles:
        err = np.maximum(err, np.abs(sol.u(r * np.cos(th), r * np.sin(th)) - K.reference_solution(r)))
    tc = total_curvature(K, sol)
    target = -2.0 * math.pi * alpha
    body = {
        "alpha": alpha,
        "check_radius": r_check,
        "max_error": float(err.max()),
        "total_curvature": tc.value,
        "total_curvature_target": target,
        "total_curvature_rel_error": abs(tc.value / target - 1.0),
        "solution": sol.summary(),
    }
    write_json(out / "verify_exact.json", _report(cfg, "verify-exact", body))
    u_num = sol.u(r * math.cos(angles[0]), r * math.sin(angles[0]))
    write_csv(out / "verify_exact.csv", ["r", "u_num", "u_exact", "max_error"], zip(r, u_num, K.reference_solution(r), err))
    return {"solution": sol, "radii": r, "error": err}


def cmd_verify_potential(cfg, out: Path):
    K = cfg.curvature()
    if not isinstance(K, ExactFamily):
        raise ConfigError("verify-potential needs kind = ExactFamily", key="kind")
    p = cfg["potential"]
    f = exact_family_source(K, solver_options(cfg))
    decay = ground_state_decay_check(f, p["beta"], p["decay_radii"])
    r = np.array(p["decay_radii"] + [0.5, 2.0, 500.0])
    vals, bound = potential(f, r, 0.0 * r)
    exact = K.reference_solution(r) - K.alpha * w0(r) + 0.5 * math.log(K.scale)
    h = p["patch_h"]
    hs = [h, h / 2.0, h / 4.0]
    res = [patch_residual(f, tuple(p["patch_center"]), hh) for hh in hs]
    body = {
        "decay": decay.to_dict(),
        "closed_form_max_error": float(np.max(np.abs(vals - exact))),
        "error_bound": bound,
        "laplacian": {"h": hs, "residual": res, "ratios": [res[0] / res[1], res[1] / res[2]]},
        "balanced_integral": f.total_integral(),
    }
    write_json(out / "verify_potential.json", _report(cfg, "verify-potential", body))
    write_csv(out / "verify_potential.csv", ["r", "max_abs_w", "ratio"], zip(decay.radii, decay.max_abs, decay.ratios))
    return {"decay": decay}


def cmd_fit(cfg, out: Path):
    K, alpha, sol = _solve(cfg)
    a = cfg["asymptotics"]
    thr = thresholds(cfg)
    fit = fit_log_growth(sol, a["fit_radii"], deviation_bound=thr.angular_deviation_max)
    beta = a["beta"] if a["beta"] is not None else default_beta(K.alpha1_closed_form(), alpha, thr.beta_epsilon)
    decay = remainder_decay_exponent(sol, alpha, fit.c, a["decay_radii"], beta=beta, slack=thr.decay_slack)
    rep = AsymptoticsReport(alpha=alpha, fit=fit, decay=decay, thresholds=thr)
    write_json(out / "fit.json", _report(cfg, "fit", {"asymptotics": rep.to_dict(), "solution": sol.summary()}))
    write_csv(out / "fit_remainder.csv", ["r", "max_remainder"], zip(decay.radii, decay.max_remainder))
    return {"solution": sol, "report": rep}


def k0_probe(K: BumpSum, alpha: float, sol, n_range, thr: Thresholds, fit_radii):
    gaps = anisotropy_probe(sol, n_range)
    expo = driving_exponent(K, alpha)
    growth = growth_probe(K, alpha, n_range, sol, thr) if alpha > K.alpha_star() else None
    fit = fit_log_growth(sol, fit_radii, deviation_bound=thr.angular_deviation_max)
    return AsymptoticsReport(
        alpha=alpha,
        fit=fit,
        n_range=list(n_range),
        gaps=gaps,
        growth=growth,
        exponent=expo,
        verdict=classify(gaps, expo, thr),
        thresholds=thr,
    )


def cmd_k0_probe(cfg, out: Path):
    K, alpha, sol = _solve(cfg)
    if not isinstance(K, BumpSum):
        raise ConfigError("k0-probe needs kind = BumpSum", key="kind")
    a = cfg["asymptotics"]
    n_range = a["n_range"]
    if max(n_range) > K.n_max:
        raise ConfigError("n_range exceeds n_max", key="n_range")
    rep = k0_probe(K, alpha, sol, n_range, thresholds(cfg), a["fit_radii"])
    xi = remainder_at_centers(sol, n_range)
    body = {"asymptotics": rep.to_dict(), "alpha_star": K.alpha_star(), "xi_at_centers": xi, "solution": sol.summary()}
    write_json(out / "k0_probe.json", _report(cfg, "k0-probe", body))
    ratios = rep.growth.ratios if rep.growth else [abs(x) / math.log(n) for x, n in zip(xi, n_range)]
    write_csv(out / "k0_probe.csv", ["n", "gap_n", "ratio_n"], zip(n_range, rep.gaps, ratios))
    return {"report": rep, "xi": xi, "solution": sol}


COMMANDS = {
    "alphap": cmd_alphap,
    "solve": cmd_solve,
    "verify-exact": cmd_verify_exact,
    "verify-potential": cmd_verify_potential,
    "fit": cmd_fit,
    "k0-probe": cmd_k0_probe,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gausscurv", description="Prescribed nonpositive curvature experiments.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment config (key = value)")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1, help="worker cap (computation is serial)")
        p.add_argument("--verbose", action="store_true")
        p.add_argument("--figures", action="store_true", help="also render PNG figures")
    return ap


def run(command: str, cfg: ExperimentConfig, out: Path, figures: bool = False) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.ini").write_text(emit_config(cfg))
    result = COMMANDS[command](cfg, out)
    if figures:
        from .figures import render

        render(command, result, out)
    return result


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1", key="threads")
        os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
        cfg = load_config(args.config)
        run(args.command, cfg, Path(args.out), args.figures)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ContractViolation, ParameterError, RangeError, OutOfDomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    except NonconvergenceError as exc:
        print(f"nonconvergence: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except GaussCurvError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
