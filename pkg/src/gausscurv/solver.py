"""Normalized Picard iteration for ``Laplacian(u) + K e^{2u} = 0``.

The solution is carried as ``u = alpha*w0 + t + v`` with ``v = N[g]`` and

    g = K e^{2 alpha w0 + 2t + 2v} + alpha*Laplacian(w0).

``t`` is chosen every sweep so that ``int g = 0``. The ``alpha*Laplacian(w0)``
part has the closed-form potential ``-alpha*w0`` and is never sampled.

Samples of ``v`` live on a background polar grid and, for bump sums, on one
unit-disk grid per bump in that bump's own frame. Radial fields with
unbounded support get a radial tail beyond the background grid, modelled
with ``v`` frozen at its outermost angular mean.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate

from .curvature import BumpSum, CurvatureField, GridSampled
from .errors import NonconvergenceError, NormalizationError, ParameterError
from .growth import laplacian_w0, w0
from .potential import (
    GLOBAL,
    Frame,
    LocalSource,
    RadialTail,
    SourceField,
    _local_contribution,
    local_grid,
    potential,
)
from .quadrature import PolarGrid, geometric_breaks
from .radial import RadialProfile, radial_shoot, radial_solve_for_alpha

__all__ = [
    "SolverOptions",
    "SolutionField",
    "Bracket",
    "BracketField",
    "CurvatureIntegral",
    "normalize_t",
    "picard_solve",
    "super_sub_bracket",
    "total_curvature",
    "pde_residual",
    "RadialProfile",
    "radial_shoot",
    "radial_solve_for_alpha",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverOptions:
    damping: float = 1.0
    tol: float = 1e-6
    max_iter: int = 300
    r_max: float = 1024.0
    order: int = 16
    n_theta: int = 64
    local_order: int = 16
    local_theta: int = 32
    min_damping: float = 1.0 / 16.0
    divergence_window: int = 10
    bracket: bool = False
    residual_check: bool = True

    def __post_init__(self):
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError("damping must lie in (0, 1]")
        if not 0.0 < self.min_damping <= self.damping:
            raise ParameterError("min_damping must lie in (0, damping]")
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if not self.r_max > 1.0:
            raise ParameterError("r_max must exceed 1")


def _check_alpha(K: CurvatureField, alpha: float):
    if not alpha > 0:
        raise ParameterError(f"alpha must be positive (got {alpha})")
    alpha1 = K.alpha1_closed_form()
    if alpha >= alpha1:
        raise ParameterError(f"alpha = {alpha} is not below alpha_1(K) = {alpha1}")


class _Discretization:
    """Sample sets for one (K, alpha) pair and the maps between them."""

    def __init__(self, K: CurvatureField, alpha: float, opts: SolverOptions):
        self.K = K
        self.alpha = float(alpha)
        self.opts = opts
        r_max = opts.r_max
        if math.isfinite(K.support_radius()):
            r_max = max(r_max, 2.0 * K.support_radius())
        self.grid = PolarGrid(geometric_breaks(r_max), opts.order, opts.n_theta)
        bx, by = self.grid.node_coordinates()
        self.bx, self.by = bx, by
        br = np.hypot(bx, by)
        self.w0_bg = w0(br)
        if isinstance(K, BumpSum):
            self.k_bg = np.zeros(self.grid.shape)
        elif isinstance(K, GridSampled):
            self.k_bg = K.evaluate_masked(bx, by)
        else:
            self.k_bg = K.evaluate(bx, by)
        self.frames = []
        self.k_loc = []
        self.w0_loc = []
        self.local_points = []
        if isinstance(K, BumpSum):
            lg = local_grid(opts.local_order, opts.local_theta)
            self.lgrid = lg
            zx, zy = lg.node_coordinates()
            for b in K.bumps:
                fr = Frame(b.center, b.log_radius)
                self.frames.append(fr)
                self.k_loc.append(K.local_density(b.n, zx, zy))
                gx, gy = fr.to_global(zx, zy)
                self.w0_loc.append(w0(np.hypot(gx, gy)))
                self.local_points.append((zx, zy))
        self.radial_tail = bool(getattr(K, "radial", False)) and hasattr(K, "profile") and not math.isfinite(
            K.support_radius()
        )
        self._outer = self.grid.rho.size - 1

    # -- state helpers ------------------------------------------------------------
    def zero_state(self, value=0.0):
        if callable(value):
            v_bg = np.asarray(value(self.bx, self.by), dtype=float)
            v_loc = []
            for fr, (zx, zy) in zip(self.frames, self.local_points):
                gx, gy = fr.to_global(zx, zy)
                v_loc.append(np.asarray(value(gx, gy), dtype=float))
            return v_bg, v_loc
        return np.full(self.grid.shape, float(value)), [np.full(self.lgrid.shape, float(value)) for _ in self.frames]

    def tail_level(self, v_bg) -> float:
        return float(np.mean(v_bg[self._outer]))

    def _tail_density(self, t, vbar):
        K = self.K
        a = self.alpha
        base = 2.0 * t + 2.0 * vbar

        def dens(rho):
            return -math.exp(float(K.log_abs_profile(rho)) + 2.0 * a * math.log(rho) + base)

        return dens

    def weighted_integral(self, v_bg, v_loc) -> float:
        """``int |K| e^{2 alpha w0 + 2v}`` including the radial tail."""
        a = self.alpha
        total = self.grid.integrate(np.abs(self.k_bg) * np.exp(2.0 * a * self.w0_bg + 2.0 * v_bg))
        for kl, wl, vl in zip(self.k_loc, self.w0_loc, v_loc):
            total += self.lgrid.integrate(np.abs(kl) * np.exp(2.0 * a * wl + 2.0 * vl))
        if self.radial_tail:
            tail = RadialTail(self.grid.radius, self._tail_density(0.0, self.tail_level(v_bg)))
            total += -tail.mass
        return total

    def normalize(self, v_bg, v_loc) -> float:
        total = self.weighted_integral(v_bg, v_loc)
        if not (math.isfinite(total) and total > 0):
            raise NormalizationError(f"weighted curvature integral is {total!r}")
        return 0.5 * (math.log(2.0 * self.alpha * math.pi) - math.log(total))

    def source(self, t, v_bg, v_loc, balanced=True) -> SourceField:
        a = self.alpha
        bg = self.k_bg * np.exp(2.0 * a * self.w0_bg + 2.0 * t + 2.0 * v_bg)
        locs = []
        for i, (fr, kl, wl, vl) in enumerate(zip(self.frames, self.k_loc, self.w0_loc, v_loc)):
            dens = kl * np.exp(2.0 * a * wl + 2.0 * t + 2.0 * vl)
            locs.append(LocalSource(fr, self.lgrid, dens, f"bump{i + 2}"))
        tail = None
        extra = 0.0
        if self.radial_tail:
            vbar = self.tail_level(v_bg)
            spread = float(np.ptp(v_bg[self._outer - self.opts.order + 1 :]))
            tail = RadialTail(self.grid.radius, self._tail_density(t, vbar))
            tail = RadialTail(tail.r_start, tail.density, model_error=2.0 * (abs(vbar) + spread) * tail.abs_mass())
        if isinstance(self.K, BumpSum):
            extra = self.K.truncation_mass() * math.exp(2.0 * t + 2.0 * a * math.log(self.K.n_max + 1.0))
        return SourceField(
            background_grid=self.grid,
            background=bg,
            locals=locs,
            w0_coefficient=a,
            tail=tail,
            balanced=balanced,
            extra_error=extra,
        )

    def apply(self, src: SourceField):
        """``N[src]`` on every sample set."""
        grid = self.grid
        v_bg = grid.potential_on_nodes(src.background) - self.alpha * self.w0_bg
        for loc in src.locals:
            v_bg = v_bg + _local_contribution(loc, GLOBAL, self.bx, self.by)
        tail_const = 0.0
        if src.tail is not None:
            tail_const = src.tail.inner_constant()[0]
            v_bg = v_bg + tail_const
        bg_active = bool(np.any(src.background != 0.0))
        v_loc = []
        for i, (fr, (zx, zy)) in enumerate(zip(self.frames, self.local_points)):
            own = src.locals[i]
            out = own.grid.potential_on_nodes(own.density) - own.mass * fr.log_radius / (2.0 * math.pi)
            for j, loc in enumerate(src.locals):
                if j != i:
                    out = out + _local_contribution(loc, fr, zx, zy)
            gx, gy = fr.to_global(zx, zy)
            if bg_active:
                out = out + grid.potential_at(src.background, np.log(np.hypot(gx, gy)), np.arctan2(gy, gx))
            out = out - self.alpha * self.w0_loc[i] + tail_const
            v_loc.append(out)
        return v_bg, v_loc


def _max_diff(a_bg, a_loc, b_bg, b_loc) -> float:
    d = float(np.max(np.abs(a_bg - b_bg)))
    for x, y in zip(a_loc, b_loc):
        d = max(d, float(np.max(np.abs(x - y))))
    return d


def _max_abs(a_bg, a_loc) -> float:
    return max([float(np.max(np.abs(a_bg)))] + [float(np.max(np.abs(x))) for x in a_loc])


def normalize_t(K: CurvatureField, alpha: float, v=0.0, opts: Optional[SolverOptions] = None) -> float:
    """``t`` with ``int K e^{2 alpha w0 + 2t + 2v} = -2 alpha pi``.

    ``v`` may be a constant, a callable of ``(x, y)``, or a :class:`SolutionField`.
    """
    _check_alpha(K, alpha)
    opts = opts or SolverOptions()
    disc = _Discretization(K, alpha, opts)
    if isinstance(v, SolutionField):
        v = v.v
    v_bg, v_loc = disc.zero_state(v)
    return disc.normalize(v_bg, v_loc)


@dataclass(eq=False)
class BracketField:
    """``alpha*w0 + t + N[g] + shift`` evaluated anywhere."""

    alpha: float
    t: float
    source: SourceField
    shift: float

    def __call__(self, x, y, frame: Frame = GLOBAL):
        vals, _ = potential(self.source, x, y, frame)
        gx, gy = frame.to_global(x, y)
        return self.alpha * w0(np.hypot(gx, gy)) + self.t + vals + self.shift


@dataclass(eq=False)
class Bracket:
    lower: BracketField
    upper: BracketField
    sup_norm: float
    lower_samples: tuple = field(repr=False, default=None)
    upper_samples: tuple = field(repr=False, default=None)

    @property
    def width(self) -> float:
        return 2.0 * self.sup_norm


def _bracket(disc: _Discretization) -> Bracket:
    z_bg, z_loc = disc.zero_state(0.0)
    t0 = disc.normalize(z_bg, z_loc)
    src = disc.source(t0, z_bg, z_loc)
    wt_bg, wt_loc = disc.apply(src)
    m = _max_abs(wt_bg, wt_loc)
    a = disc.alpha
    base_bg = a * disc.w0_bg + t0 + wt_bg
    base_loc = [a * wl + t0 + w for wl, w in zip(disc.w0_loc, wt_loc)]
    return Bracket(
        lower=BracketField(a, t0, src, -m),
        upper=BracketField(a, t0, src, m),
        sup_norm=m,
        lower_samples=(base_bg - m, [b - m for b in base_loc]),
        upper_samples=(base_bg + m, [b + m for b in base_loc]),
    )


def super_sub_bracket(K: CurvatureField, alpha: float, opts: Optional[SolverOptions] = None) -> Bracket:
    """Explicit sub/supersolution pair from one potential pass with ``v = 0``.

    With ``w = N[g]`` for the ``v = 0`` source and ``t0`` its normalization,
    ``alpha*w0 + t0 + w +/- sup|w|`` is a super (+) and sub (-) solution.
    """
    _check_alpha(K, alpha)
    opts = opts or SolverOptions()
    return _bracket(_Discretization(K, alpha, opts))


@dataclass(eq=False)
class SolutionField:
    """Converged ``u = alpha*w0 + t + v`` with ``v = N[source]`` off the sample nodes."""

    K: CurvatureField
    alpha: float
    t: float
    source: SourceField
    grid: PolarGrid
    v_background: np.ndarray
    frames: list
    v_locals: list
    iterations: int
    update_norm: float
    converged: bool
    damping: float
    trace: list = field(default_factory=list, repr=False)
    bracket: Optional[Bracket] = field(default=None, repr=False)
    residual: Optional[float] = None
    disc: Optional[_Discretization] = field(default=None, repr=False)

    def v(self, x, y, frame: Frame = GLOBAL):
        vals, _ = potential(self.source, x, y, frame)
        return vals

    def u(self, x, y, frame: Frame = GLOBAL):
        gx, gy = frame.to_global(x, y)
        return self.alpha * w0(np.hypot(gx, gy)) + self.t + self.v(x, y, frame)

    __call__ = u

    def max_abs_v(self) -> float:
        return _max_abs(self.v_background, self.v_locals)

    def u_samples(self):
        a = self.alpha
        ub = a * self.disc.w0_bg + self.t + self.v_background
        ul = [a * wl + self.t + vl for wl, vl in zip(self.disc.w0_loc, self.v_locals)]
        return ub, ul

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "t": self.t,
            "iterations": self.iterations,
            "update_norm": self.update_norm,
            "converged": self.converged,
            "damping": self.damping,
            "max_abs_v": self.max_abs_v(),
            "residual": self.residual,
            "bracket_width": None if self.bracket is None else self.bracket.width,
        }


def _within(u_bg, u_loc, bracket: Bracket, slack: float) -> bool:
    lo_bg, lo_loc = bracket.lower_samples
    hi_bg, hi_loc = bracket.upper_samples
    ok = bool(np.all(u_bg >= lo_bg - slack) and np.all(u_bg <= hi_bg + slack))
    for u, lo, hi in zip(u_loc, lo_loc, hi_loc):
        ok = ok and bool(np.all(u >= lo - slack) and np.all(u <= hi + slack))
    return ok


def picard_solve(K: CurvatureField, alpha: float, opts: Optional[SolverOptions] = None, v0=0.0) -> SolutionField:
    """Damped fixed-point sweep ``v <- (1-w) v + w N[g(v)]`` with ``t`` renormalized each sweep.

    The damping starts at ``opts.damping`` and halves (down to ``min_damping``)
    whenever consecutive updates reverse direction while shrinking by less
    than half. ``v0`` is a constant or a
    callable of ``(x, y)``.
    """
    _check_alpha(K, alpha)
    opts = opts or SolverOptions()
    disc = _Discretization(K, alpha, opts)
    bracket = _bracket(disc) if opts.bracket else None
    v_bg, v_loc = disc.zero_state(v0)
    omega = opts.damping
    trace = []
    prev = math.inf
    growth_run = 0
    prev_delta = None
    converged = False
    src = None
    t = math.nan
    new_bg, new_loc = v_bg, v_loc
    for it in range(1, opts.max_iter + 1):
        t = disc.normalize(v_bg, v_loc)
        src = disc.source(t, v_bg, v_loc)
        new_bg, new_loc = disc.apply(src)
        upd = _max_diff(new_bg, new_loc, v_bg, v_loc)
        entry = {"iteration": it, "t": t, "update": upd, "damping": omega}
        if bracket is not None:
            u_bg = alpha * disc.w0_bg + t + v_bg
            u_loc = [alpha * wl + t + vl for wl, vl in zip(disc.w0_loc, v_loc)]
            entry["within_bracket"] = _within(u_bg, u_loc, bracket, 10 * opts.tol)
        trace.append(entry)
        log.debug("sweep %d: t=%.12g update=%.3e damping=%g", it, t, upd, omega)
        if not math.isfinite(upd):
            raise NonconvergenceError("non-finite update", trace)
        if upd <= opts.tol:
            converged = True
            break
        delta_bg = new_bg - v_bg
        # Sign-alternating, slowly shrinking updates: the sweep overshoots.
        if prev_delta is not None and upd > 0.5 * prev:
            if float(np.vdot(delta_bg, prev_delta)) < 0.0 and omega > opts.min_damping:
                omega = max(0.5 * omega, opts.min_damping)
        growth_run = growth_run + 1 if upd >= prev else 0
        prev_delta = delta_bg
        if growth_run >= opts.divergence_window:
            raise NonconvergenceError(
                f"update norm grew for {growth_run} consecutive sweeps", trace
            )
        prev = upd
        v_bg = (1.0 - omega) * v_bg + omega * new_bg
        v_loc = [(1.0 - omega) * a + omega * b for a, b in zip(v_loc, new_loc)]
    if not converged:
        raise NonconvergenceError(f"no convergence in {opts.max_iter} sweeps", trace)
    sol = SolutionField(
        K=K,
        alpha=float(alpha),
        t=t,
        source=src,
        grid=disc.grid,
        v_background=new_bg,
        frames=list(disc.frames),
        v_locals=new_loc,
        iterations=len(trace),
        update_norm=trace[-1]["update"],
        converged=True,
        damping=omega,
        trace=trace,
        bracket=bracket,
        disc=disc,
    )
    if opts.residual_check:
        sol.residual = pde_residual(sol)
    return sol


def _check_points():
    radii = np.array([0.3, 0.7, 1.5, 3.0, 7.0, 15.0, 30.0])
    angles = 0.4 + 0.5 * np.pi * np.arange(4)
    r, a = np.meshgrid(radii, angles, indexing="ij")
    return (r * np.cos(a)).ravel(), (r * np.sin(a)).ravel()


def pde_residual(sol: SolutionField, points=None, rel_h: float = 2e-3) -> float:
    """Max of ``|5-point Laplacian(u) + K e^{2u}|`` at check points.

    Relative to ``max |K e^{2u}|`` at those points when that is positive,
    absolute otherwise.
    """
    px, py = points if points is not None else _check_points()
    px = np.asarray(px, float)
    py = np.asarray(py, float)
    h = rel_h * np.maximum(1.0, np.hypot(px, py))
    offs = [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
    xs = np.concatenate([px + dx * h for dx, _ in offs])
    ys = np.concatenate([py + dy * h for _, dy in offs])
    uu = sol.u(xs, ys).reshape(5, -1)
    lap = (uu[1] + uu[2] + uu[3] + uu[4] - 4.0 * uu[0]) / (h * h)
    k = sol.K.evaluate(px, py)
    ke = k * np.exp(2.0 * uu[0])
    scale = float(np.max(np.abs(ke)))
    res = float(np.max(np.abs(lap + ke)))
    return res / scale if scale > 0 else res


@dataclass(frozen=True)
class CurvatureIntegral:
    value: float
    tail_bound: float
    quadrature_error: float

    def __float__(self):
        return self.value


def total_curvature(K: CurvatureField, u, opts: Optional[SolverOptions] = None) -> CurvatureIntegral:
    """``int K e^{2u}`` for a :class:`SolutionField` or a callable ``u(x, y)``.

    For radial ``K`` with unbounded support the part beyond the grid is
    integrated along one ray and included; ``tail_bound`` is its size.
    """
    if isinstance(u, SolutionField):
        disc = u.disc
        src = disc.source(u.t, u.v_background, u.v_locals, balanced=False)
        parts = src.parts_integral()
        value = parts["background"] + parts["locals"] + parts["tail"]
        tail = abs(parts["tail"]) + (src.tail.model_error if src.tail is not None else 0.0)
        return CurvatureIntegral(value, tail, src.quadrature_error() * 2.0 * math.pi)
    opts = opts or SolverOptions()
    if isinstance(K, BumpSum):
        lg = local_grid(opts.local_order, opts.local_theta)
        zx, zy = lg.node_coordinates()
        value = 0.0
        for b in K.bumps:
            gx, gy = Frame(b.center, b.log_radius).to_global(zx, zy)
            value += lg.integrate(K.local_density(b.n, zx, zy) * np.exp(2.0 * np.asarray(u(gx, gy))))
        return CurvatureIntegral(value, 0.0, 0.0)
    r_max = opts.r_max
    if math.isfinite(K.support_radius()):
        r_max = max(r_max, 2.0 * K.support_radius())
    grid = PolarGrid(geometric_breaks(r_max), opts.order, opts.n_theta)
    bx, by = grid.node_coordinates()
    kv = K.evaluate_masked(bx, by) if isinstance(K, GridSampled) else K.evaluate(bx, by)
    value = grid.integrate(kv * np.exp(2.0 * np.asarray(u(bx, by))))
    tail = 0.0
    if getattr(K, "radial", False) and not math.isfinite(K.support_radius()):
        tail, _ = integrate.quad(
            lambda p: 2.0 * math.pi * p * float(K.profile(p)) * math.exp(2.0 * float(u(p, 0.0))),
            r_max,
            np.inf,
            limit=400,
        )
        value += tail
    return CurvatureIntegral(value, abs(tail), 0.0)


def laplacian_w0_check(grid: Optional[PolarGrid] = None) -> float:
    """``int Laplacian(w0) - 2 pi`` on a grid covering the unit disk."""
    grid = grid or PolarGrid((0.0, 0.5, 1.0), 16, 16)
    bx, by = grid.node_coordinates()
    return grid.integrate(laplacian_w0(np.hypot(bx, by))) - 2.0 * math.pi


def exact_family_source(K, opts: Optional[SolverOptions] = None) -> SourceField:
    """Balanced source ``K e^{2u} + alpha*Laplacian(w0)`` built from the closed form.

    Its potential is ``u - alpha*w0 + ln(scale)/2`` exactly, which makes it an
    oracle for the potential engine.
    """
    opts = opts or SolverOptions()
    a = K.alpha
    grid = PolarGrid(geometric_breaks(opts.r_max), opts.order, opts.n_theta)
    bx, by = grid.node_coordinates()

    def dens(x, y):
        r = np.hypot(x, y)
        return K.profile(r) * np.exp(2.0 * K.reference_solution(r))

    tail = RadialTail(grid.radius, lambda p: float(dens(p, 0.0)))
    return SourceField(
        background_grid=grid,
        background=dens(bx, by),
        w0_coefficient=a,
        tail=tail,
        balanced=True,
        background_fn=dens,
    )
