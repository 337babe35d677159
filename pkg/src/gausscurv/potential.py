"""Logarithmic Newtonian potential ``N[f](x) = -(1/2pi) int ln|x - y| f(y) dy``.

A :class:`SourceField` is a sum of independent parts:

* a background density sampled on a :class:`PolarGrid` centred at the origin,
* any number of :class:`LocalSource` parts, each a density sampled on a
  unit-disk grid in its own frame ``y = c + r z`` (``r`` stored as a log),
* a multiple of ``Laplacian(w0)`` whose potential is ``-w0`` in closed form,
* a radial tail beyond the background grid, integrated with ``scipy.quad``.

Targets are addressed in a :class:`Frame`. For a local source the kernel is
split as ``ln|x - y| = ln r + ln|xi - z|`` with ``xi = (x - c)/r`` built from
the frame offsets, so the huge ``ln r`` never meets a cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate

from .errors import ContractViolation, ParameterError
from .growth import laplacian_w0, w0
from .quadrature import PolarGrid

__all__ = [
    "Frame",
    "GLOBAL",
    "LocalSource",
    "RadialTail",
    "SourceField",
    "PotentialEvaluation",
    "potential",
    "log_potential",
    "bump_far_field",
    "ground_state_decay_check",
    "DecayReport",
    "laplacian_residual",
    "patch_residual",
    "uniform_disk_source",
    "local_grid",
]

BALANCE_TOL = 1e-8


@dataclass(frozen=True)
class Frame:
    """Affine frame ``x = center + exp(log_radius) * z``."""

    center: tuple = (0.0, 0.0)
    log_radius: float = 0.0

    def to_global(self, zx, zy):
        r = math.exp(self.log_radius)
        return self.center[0] + r * np.asarray(zx, float), self.center[1] + r * np.asarray(zy, float)


GLOBAL = Frame()

_LOCAL_GRIDS: dict = {}


def local_grid(order: int = 16, n_theta: int = 32, breaks=(0.0, 0.5, 0.75, 1.0)) -> PolarGrid:
    """Shared unit-disk grid for local sources (operators are cached on it)."""
    key = (order, n_theta, tuple(breaks))
    if key not in _LOCAL_GRIDS:
        _LOCAL_GRIDS[key] = PolarGrid(breaks, order, n_theta)
    return _LOCAL_GRIDS[key]


@dataclass(frozen=True, eq=False)
class LocalSource:
    """Density ``r^2 f(c + r z)`` in ``dz``, supported in the unit disk."""

    frame: Frame
    grid: PolarGrid
    density: np.ndarray
    label: str = ""
    density_fn: Optional[Callable] = None

    @property
    def mass(self) -> float:
        return self.grid.integrate(self.density)

    def abs_mass(self) -> float:
        return self.grid.integrate(np.abs(self.density))

    def is_radial(self, rtol: float = 1e-12) -> bool:
        fhat = np.abs(self.grid.modes(self.density))
        scale = max(np.max(fhat[:, 0]), 1e-300)
        return bool(np.max(fhat[:, 1:], initial=0.0) <= rtol * scale)


@dataclass(frozen=True)
class RadialTail:
    """Radial density ``g(rho)`` on ``[r_start, inf)``."""

    r_start: float
    density: Callable
    model_error: float = 0.0

    def _quad(self, fn, lo, hi=np.inf):
        val, err = integrate.quad(fn, lo, hi, limit=400, epsabs=1e-14, epsrel=1e-12)
        return val, err

    @property
    def mass(self) -> float:
        val, _ = self._quad(lambda p: 2.0 * math.pi * p * self.density(p), self.r_start)
        return val

    def abs_mass(self) -> float:
        val, _ = self._quad(lambda p: 2.0 * math.pi * p * abs(self.density(p)), self.r_start)
        return val

    def inner_constant(self):
        val, err = self._quad(lambda p: p * self.density(p) * math.log(p), self.r_start)
        return -val, err

    def potential(self, r):
        r = np.atleast_1d(np.asarray(r, float))
        c0, err = self.inner_constant()
        out = np.full(r.shape, c0)
        for i, ri in enumerate(r):
            if ri > self.r_start:
                a, _ = self._quad(lambda p: p * self.density(p), self.r_start, ri)
                b, _ = self._quad(lambda p: p * self.density(p) * math.log(p), ri)
                out[i] = -(math.log(ri) * a + b)
        return out, err + self.model_error


@dataclass(frozen=True)
class PotentialEvaluation:
    target: tuple
    value: float
    error: float


@dataclass(eq=False)
class SourceField:
    """Sum of background, local, ``Laplacian(w0)`` and tail parts. Immutable by convention."""

    background_grid: Optional[PolarGrid] = None
    background: Optional[np.ndarray] = None
    locals: Sequence[LocalSource] = ()
    w0_coefficient: float = 0.0
    tail: Optional[RadialTail] = None
    balanced: bool = False
    extra_error: float = 0.0
    background_fn: Optional[Callable] = None
    _error_cache: Optional[float] = field(default=None, repr=False)

    def __post_init__(self):
        self.locals = tuple(self.locals)
        if self.background is not None:
            self.background = np.asarray(self.background, dtype=float)
            if self.background.shape != self.background_grid.shape:
                raise ParameterError("background samples do not match the grid")
            if not np.all(np.isfinite(self.background)):
                raise ParameterError("source samples must be finite (bounded density)")
        for loc in self.locals:
            if not np.all(np.isfinite(loc.density)):
                raise ParameterError("local source samples must be finite (bounded density)")
        if self.balanced:
            total = self.total_integral()
            if abs(total) > BALANCE_TOL * max(self.abs_integral(), 1e-300):
                raise ContractViolation(
                    f"source tagged balanced has total integral {total:.3e}"
                )

    # -- integrals -----------------------------------------------------------
    def parts_integral(self):
        parts = {}
        if self.background is not None:
            parts["background"] = self.background_grid.integrate(self.background)
        parts["locals"] = math.fsum(loc.mass for loc in self.locals)
        parts["w0"] = 2.0 * math.pi * self.w0_coefficient
        parts["tail"] = self.tail.mass if self.tail is not None else 0.0
        return parts

    def total_integral(self) -> float:
        return math.fsum(self.parts_integral().values())

    def abs_integral(self) -> float:
        total = 0.0
        if self.background is not None:
            total += self.background_grid.integrate(np.abs(self.background))
        total += sum(loc.abs_mass() for loc in self.locals)
        total += 2.0 * math.pi * abs(self.w0_coefficient)
        if self.tail is not None:
            total += self.tail.abs_mass()
        return total

    def is_balanced(self) -> bool:
        return abs(self.total_integral()) <= BALANCE_TOL * max(self.abs_integral(), 1e-300)

    # -- pointwise density -----------------------------------------------------
    def density_at(self, x, y):
        """Pointwise density, available when every part carries its function."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros(x.shape)
        if self.background is not None:
            if self.background_fn is None:
                raise ContractViolation("background part has no pointwise density")
            out += self.background_fn(x, y)
        for loc in self.locals:
            if loc.density_fn is None:
                raise ContractViolation("local part has no pointwise density")
            r = math.exp(loc.frame.log_radius)
            zx = (x - loc.frame.center[0]) / r
            zy = (y - loc.frame.center[1]) / r
            out += loc.density_fn(zx, zy) / (r * r)
        if self.w0_coefficient:
            out += self.w0_coefficient * laplacian_w0(np.hypot(x, y))
        return out

    # -- error model -------------------------------------------------------------
    def quadrature_error(self) -> float:
        if self._error_cache is None:
            err = self.extra_error
            if self.background is not None:
                g = self.background_grid
                err += g.radial_error_indicator(self.background)
                err += g.angular_error_indicator(self.background)
            for loc in self.locals:
                err += loc.grid.radial_error_indicator(loc.density)
                err += loc.grid.angular_error_indicator(loc.density)
            if self.tail is not None:
                err += self.tail.model_error
            self._error_cache = err / (2.0 * math.pi)
        return self._error_cache


def _local_contribution(loc: LocalSource, frame: Frame, zx, zy):
    zx = np.asarray(zx, float)
    zy = np.asarray(zy, float)
    if frame == loc.frame:
        dx, dy = zx, zy
        with np.errstate(divide="ignore"):
            log_xi = np.log(np.hypot(dx, dy))
    else:
        r_f = math.exp(frame.log_radius)
        dx = (frame.center[0] - loc.frame.center[0]) + r_f * zx
        dy = (frame.center[1] - loc.frame.center[1]) + r_f * zy
        with np.errstate(divide="ignore"):
            log_xi = np.log(np.hypot(dx, dy)) - loc.frame.log_radius
    angle = np.arctan2(dy, dx)
    out = np.empty(log_xi.shape)
    outside = log_xi > 1e-12
    if outside.any():
        out[outside] = loc.grid.potential_exterior(loc.density, log_xi[outside], angle[outside])
    if (~outside).any():
        out[~outside] = loc.grid.potential_at(loc.density, log_xi[~outside], angle[~outside])
    return out - loc.mass * loc.frame.log_radius / (2.0 * math.pi)


def potential(f: SourceField, zx, zy, frame: Frame = GLOBAL):
    """Potential values at targets ``frame.center + r_frame * z`` plus an error bound.

    Returns ``(values, error)``; ``error`` is one bound valid for every target.
    """
    with np.errstate(divide="ignore"):
        zx, zy = np.broadcast_arrays(np.asarray(zx, float), np.asarray(zy, float))
        shape = zx.shape
        zx = zx.ravel()
        zy = zy.ravel()
        out = np.zeros(zx.shape)
        err = f.quadrature_error()
        gx, gy = frame.to_global(zx, zy)
        gr = np.hypot(gx, gy)
        if f.background is not None:
            grid = f.background_grid
            lr = np.log(gr)
            ang = np.arctan2(gy, gx)
            outside = gr > grid.radius
            if outside.any():
                out[outside] += grid.potential_exterior(f.background, lr[outside], ang[outside])
            if (~outside).any():
                out[~outside] += grid.potential_at(f.background, lr[~outside], ang[~outside])
        for loc in f.locals:
            out += _local_contribution(loc, frame, zx, zy)
        if f.w0_coefficient:
            out -= f.w0_coefficient * w0(gr)
        if f.tail is not None:
            tail_val, tail_err = f.tail.potential(gr)
            out += tail_val
            err += tail_err
    return out.reshape(shape), err


def log_potential(f: SourceField, x, frame: Frame = GLOBAL) -> PotentialEvaluation:
    """Single-target evaluation with its error bound."""
    vals, err = potential(f, [x[0]], [x[1]], frame)
    return PotentialEvaluation(tuple(float(v) for v in x), float(vals[0]), float(err))


def bump_far_field(loc: LocalSource, x, frame: Frame = GLOBAL) -> float:
    """Exterior potential of a radial local source: ``-(mass/2pi) ln|x - c|``.

    No quadrature is involved beyond the mass; valid only outside the support.
    """
    if not loc.is_radial():
        raise ContractViolation("far-field shortcut requires a radial density")
    r_f = math.exp(frame.log_radius)
    dx = (frame.center[0] - loc.frame.center[0]) + r_f * x[0]
    dy = (frame.center[1] - loc.frame.center[1]) + r_f * x[1]
    log_d = math.log(math.hypot(dx, dy))
    if log_d < loc.frame.log_radius:
        raise ContractViolation("target lies inside the source support")
    return -loc.mass * log_d / (2.0 * math.pi)


@dataclass
class DecayReport:
    beta: float
    exponent: float
    radii: list
    max_abs: list
    ratios: list
    non_increasing: bool
    bounded: bool
    error: float

    def to_dict(self):
        return dict(self.__dict__)


def ground_state_decay_check(f: SourceField, beta: float, radii, n_angles: int = 8) -> DecayReport:
    """Ratios ``max_theta |N[f]| |x|^(2b/(1+2b)) / ln|x|`` over the given radii."""
    if not f.is_balanced():
        raise ContractViolation(
            "decay check needs a balanced source; the potential of a massive source grows like ln|x|"
        )
    if beta <= 0:
        raise ParameterError("beta must be positive")
    radii = [float(r) for r in radii]
    expo = 2.0 * beta / (1.0 + 2.0 * beta)
    theta = (np.arange(n_angles) + 0.5) * 2.0 * np.pi / n_angles
    max_abs = []
    ratios = []
    err = 0.0
    for r in radii:
        vals, err = potential(f, r * np.cos(theta), r * np.sin(theta))
        m = float(np.max(np.abs(vals)))
        max_abs.append(m)
        ratios.append(m * r**expo / math.log(r))
    non_inc = all(b <= a * (1.0 + 1e-9) + 1e-15 for a, b in zip(ratios, ratios[1:]))
    return DecayReport(
        beta=beta,
        exponent=expo,
        radii=radii,
        max_abs=max_abs,
        ratios=ratios,
        non_increasing=non_inc,
        bounded=bool(np.all(np.isfinite(ratios))),
        error=float(err),
    )


def laplacian_residual(w, f_values, h: float) -> float:
    """Max over interior nodes of ``|5-point Laplacian(w) + f|`` relative to ``max|f|``.

    When ``f`` vanishes on the whole patch the absolute residual is returned.
    """
    w = np.asarray(w, dtype=float)
    f_values = np.asarray(f_values, dtype=float)
    lap = (
        w[2:, 1:-1] + w[:-2, 1:-1] + w[1:-1, 2:] + w[1:-1, :-2] - 4.0 * w[1:-1, 1:-1]
    ) / (h * h)
    res = np.abs(lap + f_values[1:-1, 1:-1])
    scale = float(np.max(np.abs(f_values)))
    return float(np.max(res) / scale) if scale > 0 else float(np.max(res))


def patch_residual(f: SourceField, center, h: float, half_width: int = 3, frame: Frame = GLOBAL) -> float:
    """Build a ``(2k+1)^2`` patch around ``center``, evaluate, and call :func:`laplacian_residual`."""
    k = np.arange(-half_width, half_width + 1) * h
    zx = center[0] + k[:, None] * np.ones((1, k.size))
    zy = center[1] + k[None, :] * np.ones((k.size, 1))
    w, _ = potential(f, zx, zy, frame)
    gx, gy = frame.to_global(zx, zy)
    fv = f.density_at(gx, gy)
    return laplacian_residual(w, fv, h)


def uniform_disk_source(radius: float = 1.0, density: float = 1.0, center=(0.0, 0.0), grid=None) -> SourceField:
    """Constant density on a disk, as one local part (handy for checks)."""
    grid = grid or local_grid()
    r = math.exp(math.log(radius))
    samples = np.full(grid.shape, density * r * r)
    fn = lambda zx, zy: np.where(np.hypot(zx, zy) < 1.0, density * r * r, 0.0)  # noqa: E731
    loc = LocalSource(Frame(tuple(map(float, center)), math.log(radius)), grid, samples, "disk", fn)
    return SourceField(locals=(loc,))
