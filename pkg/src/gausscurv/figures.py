"""PNG figures for CLI runs (opt-in via ``--figures``)."""

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update(
    {
        "figure.figsize": (5.0, 3.6),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
        "savefig.dpi": 150,
        "savefig.bbox": "tight",
    }
)


def _save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)


def plot_alphap(rep, out):
    fig, ax = plt.subplots()
    for e in rep.estimates:
        a = sorted(e.slopes)
        s = [e.slopes[x] for x in a]
        ok = [(x, y) for x, y in zip(a, s) if math.isfinite(y)]
        if ok:
            ax.plot(*zip(*ok), marker=".", label=f"p = {e.p:g}")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel("tail exponent s")
    ax.legend()
    _save(fig, out / "alphap.png")


def plot_solution(sol, out):
    r = np.geomspace(1e-2, sol.grid.radius / 2, 200)
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    for th in (0.0, 0.5 * math.pi, math.pi):
        u = sol.u(r * math.cos(th), r * math.sin(th))
        a1.semilogx(r, u, label=rf"$\theta$ = {th:.2f}")
        a2.semilogx(r, u - sol.alpha * np.log(np.maximum(r, 1.0)) - sol.t, label=rf"$\theta$ = {th:.2f}")
    a1.set_xlabel("r")
    a1.set_ylabel("u")
    a2.set_xlabel("r")
    a2.set_ylabel(r"$u - \alpha \ln r - t$")
    a1.legend()
    _save(fig, out / "solution.png")


def plot_errors(radii, err, out):
    fig, ax = plt.subplots()
    ax.semilogy(radii, np.maximum(err, 1e-17))
    ax.set_xlabel("r")
    ax.set_ylabel("max |u - u_exact|")
    _save(fig, out / "verify_exact.png")


def plot_decay(decay, out, name):
    fig, ax = plt.subplots()
    ax.loglog(decay.radii, decay.max_abs if hasattr(decay, "max_abs") else decay.max_remainder, marker="o")
    ax.set_xlabel("r")
    ax.set_ylabel("max over angles")
    _save(fig, out / name)


def plot_probe(rep, out):
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(8.0, 3.4))
    a1.plot(rep.n_range, np.abs(rep.gaps), marker="o")
    a1.axhline(rep.thresholds.uniform_gap_max, ls="--", color="g", lw=0.8)
    a1.axhline(rep.thresholds.anisotropic_gap_min, ls="--", color="r", lw=0.8)
    a1.set_xlabel("n")
    a1.set_ylabel("|gap_n|")
    if rep.growth is not None:
        a2.plot(rep.growth.n, rep.growth.ratios, marker="o", label="self-term / ln n")
        if rep.growth.solution_ratios:
            a2.plot(rep.growth.n, rep.growth.solution_ratios, marker="s", label="|xi(a_n)| / ln n")
        a2.legend()
    a2.set_xlabel("n")
    a1.set_title(f"verdict: {rep.verdict}")
    _save(fig, out / "k0_probe.png")


def render(command, result, out):
    if command == "alphap":
        plot_alphap(result["alphap"], out)
    elif command == "solve":
        plot_solution(result["solution"], out)
    elif command == "verify-exact":
        plot_errors(result["radii"], result["error"], out)
    elif command == "verify-potential":
        plot_decay(result["decay"], out, "verify_potential.png")
    elif command == "fit":
        plot_solution(result["solution"], out)
        plot_decay(result["report"].decay, out, "fit_remainder.png")
    elif command == "k0-probe":
        plot_solution(result["solution"], out)
        plot_probe(result["report"], out)
