"""Acceptance suite: one check per criterion, each at its pinned tolerance.

Every check returns ``(ok, detail)``. Under pytest each criterion is a test
and a one-line PASS/FAIL summary is printed at the end of the session; run
this file directly to print the same lines without pytest.
"""

import contextlib
import io
import math
import tempfile
import time
from pathlib import Path

import numpy as np
import pytest

from gausscurv.alphap import estimate_alpha_p
from gausscurv.asymptotics import (
    anisotropy_probe,
    driving_exponent,
    fit_log_growth,
    layer_check,
    remainder_at_centers,
    remainder_decay_exponent,
)
from gausscurv.cli import main as cli_main
from gausscurv.curvature import ExactFamily, RadialPower, make_k0
from gausscurv.growth import w0
from gausscurv.potential import (
    Frame,
    LocalSource,
    SourceField,
    bump_far_field,
    ground_state_decay_check,
    local_grid,
    patch_residual,
    potential,
)
from gausscurv.radial import radial_solve_for_alpha
from gausscurv.solver import SolverOptions, exact_family_source, picard_solve, total_curvature

CONFIGS = Path(__file__).parent.parent / "configs"
RESULTS: dict = {}
N_RANGE = [3, 4, 5, 6]
FIT_RADII = [10.0, 30.0, 100.0, 300.0, 1000.0]
DECAY_RADII = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0]


def _record(key, ok, detail):
    RESULTS[key] = (bool(ok), detail)
    return bool(ok), detail


def _samples():
    r = np.concatenate([[0.0], np.geomspace(1e-2, 500.0, 40)])
    th = 2 * np.pi * (np.arange(8) + 0.3) / 8
    rr, tt = np.meshgrid(r, th, indexing="ij")
    return (rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()


# -- criterion checks -----------------------------------------------------------------


def check_1():
    parts = []
    ok = True
    r = np.concatenate([[0.0], np.geomspace(1e-3, 50.0, 200)])
    th = 2 * np.pi * np.arange(6) / 6
    rr, tt = np.meshgrid(r, th, indexing="ij")
    for alpha in (0.5, 1.0, 2.0):
        K = ExactFamily(alpha)
        t0 = time.perf_counter()
        sol = picard_solve(K, alpha, SolverOptions(damping=1.0))
        elapsed = time.perf_counter() - t0
        err = float(np.max(np.abs(sol.u(rr * np.cos(tt), rr * np.sin(tt)) - 0.5 * alpha * np.log1p(rr * rr))))
        tc = total_curvature(K, sol).value
        rel = abs(tc + 2 * math.pi * alpha) / (2 * math.pi * alpha)
        ok &= err <= 1e-3 and rel <= 0.01 and elapsed <= 300
        parts.append(f"a={alpha:g}: err={err:.1e} tc_rel={rel:.1e} {elapsed:.1f}s")
    return _record(1, ok, "; ".join(parts))


def check_2():
    K = RadialPower(4.0)
    sol = picard_solve(K, 0.5)
    prof = radial_solve_for_alpha(K, 0.5)
    r = np.concatenate([[0.0], np.geomspace(1e-3, 10.0, 200)])
    diff = float(np.max(np.abs(sol.u(r, 0 * r) - prof(r))))
    return _record(2, diff <= 1e-3, f"max |picard - shooting| on r<=10: {diff:.2e}")


def check_3():
    t0 = time.perf_counter()
    rp = {p: estimate_alpha_p(RadialPower(4.0), p).estimate for p in (1.0, 1.5, 2.0)}
    k0 = make_k0(3.0, 2.0, 6)
    k1 = estimate_alpha_p(k0, 1.0).estimate
    k15 = estimate_alpha_p(k0, 1.5).estimate
    elapsed = time.perf_counter() - t0
    ok = all(abs(v - 1.0) <= 0.05 for v in rp.values()) and abs(k1 - 1.0) <= 0.05
    ok &= k15 == -math.inf and elapsed <= 60
    rps = ", ".join(f"p={p:g}:{v:.4f}" for p, v in rp.items())
    return _record(3, ok, f"RadialPower {rps}; K0 p=1:{k1:.4f} p=1.5:{k15}; {elapsed:.1f}s")


def _radial_bump(center, log_radius):
    lg = local_grid()
    zx, zy = lg.node_coordinates()
    dens = np.exp(-1.0 / np.maximum(1.0 - (zx * zx + zy * zy), 1e-300)) * (zx * zx + zy * zy < 1)
    return LocalSource(Frame(center, log_radius), lg, dens)


def check_4():
    # (a) radial exterior exactness, including a bump of radius e^-40
    worst = 0.0
    for center, lr in (((0.0, 0.0), 0.0), ((3.0, -1.0), math.log(0.3)), ((5.0, 0.0), -40.0)):
        loc = _radial_bump(center, lr)
        f = SourceField(locals=[loc])
        frame = Frame(center, lr)
        for d in (1.0, 1.5, 4.0, 30.0):
            for th in (0.0, 1.1, 2.9, 4.4):
                z = (d * math.cos(th), d * math.sin(th))
                full = potential(f, np.array([z[0]]), np.array([z[1]]), frame)[0][0]
                worst = max(worst, abs(full - bump_far_field(loc, z, frame)))
    ok_a = worst <= 1e-9
    # (b) second-order Laplacian residual
    src = exact_family_source(ExactFamily(1.0))
    res = [patch_residual(src, (0.5, 0.3), h) for h in (0.02, 0.01, 0.005)]
    ratios = [a / b for a, b in zip(res, res[1:])]
    ok_b = all(3.5 <= q <= 4.5 for q in ratios)
    # (c) balanced decay on the exact-family source
    ok_c = True
    decay = []
    for beta in (0.5, 1.0):
        rep = ground_state_decay_check(src, beta, [10.0, 20.0, 40.0, 80.0])
        ok_c &= rep.bounded and rep.non_increasing
        decay.append(f"b={beta:g}:" + ",".join(f"{x:.2e}" for x in rep.ratios))
    detail = f"exterior max diff {worst:.1e}; residual ratios {ratios[0]:.2f},{ratios[1]:.2f}; decay {' '.join(decay)}"
    return _record(4, ok_a and ok_b and ok_c, detail)


def check_5():
    K = RadialPower(4.0)
    sols = [picard_solve(K, a) for a in (0.2, 0.4, 0.6, 0.8)]
    samples = _samples()
    margins = [layer_check(lo, hi, samples) for lo, hi in zip(sols, sols[1:])]
    ok = all(m.ordered for m in margins)
    return _record(5, ok, "min margins " + ", ".join(f"{m.margin:.3g}" for m in margins))


_K0_CACHE: dict = {}


def _k0_solutions():
    if not _K0_CACHE:
        K = make_k0(3.0, 2.0, 6)
        t0 = time.perf_counter()
        for a in (0.3, 0.5, 0.7):
            _K0_CACHE[a] = picard_solve(K, a)
        _K0_CACHE["time"] = time.perf_counter() - t0
        _K0_CACHE["K"] = K
    return _K0_CACHE


def check_6i():
    sol = _k0_solutions()[0.3]
    mags = [abs(g) for g in anisotropy_probe(sol, N_RANGE)]
    ok = mags[-1] <= 0.01 and all(b < a for a, b in zip(mags, mags[1:]))
    return _record("6i", ok, "|gap_n| n=3..6: " + ", ".join(f"{m:.3f}" for m in mags) + " (need |gap_6| <= 0.01, decreasing)")


def check_6ii():
    sol = _k0_solutions()[0.5]
    mags = [abs(g) for g in anisotropy_probe(sol, N_RANGE)]
    fit = fit_log_growth(sol, FIT_RADII)
    ok = min(mags) >= 0.05 and abs(fit.alpha - 0.5) <= 0.02
    return _record("6ii", ok, "|gap_n|: " + ", ".join(f"{m:.3f}" for m in mags) + f"; fitted alpha {fit.alpha:.6f}")


def check_6iii():
    c = _k0_solutions()
    sol = c[0.7]
    xi = remainder_at_centers(sol, N_RANGE)
    ratios = [abs(x) / math.log(n) for x, n in zip(xi, N_RANGE)]
    expo = driving_exponent(c["K"], 0.7)
    ok = all(b > a for a, b in zip(ratios, ratios[1:])) and expo > 0
    detail = "|xi(a_n)|/ln n: " + ", ".join(f"{x:.3f}" for x in ratios) + f"; exponent {expo:.2f}; {c['time']:.1f}s for 3 solves"
    return _record("6iii", ok and c["time"] <= 900, detail)


def check_7():
    sol = picard_solve(RadialPower(4.0), 0.5)
    fit = fit_log_growth(sol, FIT_RADII)
    d = remainder_decay_exponent(sol, fit.alpha, fit.c, DECAY_RADII, beta=0.25)
    target = 2 * 0.25 / 1.5 - 0.1
    ex = picard_solve(ExactFamily(1.0), 1.0)
    fit_e = fit_log_growth(ex, FIT_RADII)
    de = remainder_decay_exponent(ex, fit_e.alpha, fit_e.c, DECAY_RADII)
    ok = d.status == "fit" and d.gamma >= target and de.status == "fit" and de.gamma >= 1.9
    return _record(7, ok, f"RadialPower gamma={d.gamma:.3f} (>= {target:.4f}); exact family gamma={de.gamma:.3f} (>= 1.9)")


CONFIG_ERRORS = [
    ("[curvature]\nkind = Torus\n", "kind"),
    ("[curvature]\nkind = RadialPower\nell = 4\nbogus = 1\n", "bogus"),
    ("[curvature]\nkind = RadialPower\nell = 4\n[plots]\nx = 1\n", "plots"),
    ("[curvature]\nkind = RadialPower\nell = 4\nell = 5\n", "ell"),
    ("[curvature]\nkind = RadialPower\nell = four\n", "ell"),
    ("[curvature]\nkind = RadialPower\n", "ell"),
    ("[curvature]\nkind = RadialPower\nell = 4\n[run]\nalpha = -1\n", "alpha"),
    ("[curvature]\nkind = BumpSum\nell = 3\nq = 3\n", "q"),
    ("[curvature]\nkind = RadialPower\nell = 4\n[solver]\nn_theta = 7\n", "n_theta"),
    ("[curvature]\nkind = RadialPower\nell = 4\n[alphap]\np = 0.5\n", "p"),
    ("alpha = 1\n", "line 1"),
]


def _cli(args):
    err = io.StringIO()
    with contextlib.redirect_stderr(err):
        code = cli_main(args)
    return code, err.getvalue()


def check_8():
    tol = 1e-6
    K = RadialPower(4.0)
    a = picard_solve(K, 0.5, SolverOptions(tol=tol), v0=0.0)
    b = picard_solve(K, 0.5, SolverOptions(tol=tol), v0=0.5)
    x = np.geomspace(1e-2, 500.0, 60)
    init = float(np.max(np.abs(a.u(x, 0.3 * x) - b.u(x, 0.3 * x))))
    ok_init = init <= 10 * tol
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        same = True
        for cmd, cfg in (("solve", "exact_alpha1.ini"), ("alphap", "k0_alphap.ini"), ("k0-probe", "k0_probe_alpha0.5.ini")):
            outs = []
            for rep in ("a", "b"):
                out = tmp / f"{cmd}-{rep}"
                code, _ = _cli([cmd, "--config", str(CONFIGS / cfg), "--out", str(out), "--threads", "1"])
                same &= code == 0
                outs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
            same &= outs[0] == outs[1]
        bad = []
        for i, (text, key) in enumerate(CONFIG_ERRORS):
            path = tmp / f"bad{i}.ini"
            path.write_text(text)
            code, err = _cli(["solve", "--config", str(path), "--out", str(tmp / f"bad{i}")])
            if code != 4 or key not in err:
                bad.append(f"{key}:{code}")
    ok = ok_init and same and not bad
    detail = f"init diff {init:.1e} (<= {10 * tol:.0e}); byte-identical={same}; config errors exiting 4 with key {len(CONFIG_ERRORS) - len(bad)}/{len(CONFIG_ERRORS)}"
    return _record(8, ok, detail)


# -- pytest entry points ------------------------------------------------------------


@pytest.mark.acceptance
def test_criterion_1_exact_family():
    ok, detail = check_1()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_2_cross_solver():
    ok, detail = check_2()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_3_alpha_p():
    ok, detail = check_3()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_4_potential_engine():
    ok, detail = check_4()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_5_layers():
    ok, detail = check_5()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_6i_uniform_regime():
    ok, detail = check_6i()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_6ii_anisotropic_regime():
    ok, detail = check_6ii()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_6iii_unbounded_regime():
    ok, detail = check_6iii()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_7_decay_rate():
    ok, detail = check_7()
    assert ok, detail


@pytest.mark.acceptance
def test_criterion_8_robustness():
    ok, detail = check_8()
    assert ok, detail


def summary_lines(results=None):
    """One PASS/FAIL line per criterion; criterion 6 combines its three parts."""
    results = RESULTS if results is None else results
    lines = []
    for c in (1, 2, 3, 4, 5, 6, 7, 8):
        if c == 6:
            parts = [(k, results[k]) for k in ("6i", "6ii", "6iii") if k in results]
            if not parts:
                continue
            ok = len(parts) == 3 and all(v[0] for _, v in parts)
            detail = " | ".join(f"({k[1:]}) {'pass' if v[0] else 'FAIL'}: {v[1]}" for k, v in parts)
        elif c in results:
            ok, detail = results[c]
        else:
            continue
        lines.append(f"criterion {c}: {'PASS' if ok else 'FAIL'}  {detail}")
    return lines


if __name__ == "__main__":
    for fn in (check_1, check_2, check_3, check_4, check_5, check_6i, check_6ii, check_6iii, check_7, check_8):
        fn()
    print("\n".join(summary_lines()))
