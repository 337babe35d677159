"""Nonpositive curvature fields on the plane.

Four kinds are provided:

* :class:`RadialPower`  ``K = -A (1 + |x|^2)^(-ell/2)``
* :class:`ExactFamily`  ``K = -2a (1 + |x|^2)^(-(2 + a))``, solved by
  ``u = (a/2) ln(1 + |x|^2)``
* :class:`BumpSum`      the multiscale sum of plateau bumps of radius
  ``exp(-n^q)`` centred at ``(n, 0)``
* :class:`GridSampled`  bilinear interpolation of tabulated samples

Bump radii are never materialised as plain floats in arithmetic that would
cancel; every bump carries ``log_radius`` and ``log_amplitude`` and local
coordinates ``z = (x - a_n) / r_n`` are the primary way to address a bump.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, special
from scipy.interpolate import RegularGridInterpolator

from .errors import OutOfDomainError, ParameterError
from .quadrature import gauss_legendre

__all__ = [
    "smooth_step",
    "eta0",
    "plateau_mass",
    "CurvatureField",
    "RadialPower",
    "ExactFamily",
    "BumpSpec",
    "BumpSum",
    "GridSampled",
    "make_exact_family",
    "make_k0",
    "eval_curvature",
]

_STEP_ORDER = 64


def _bump(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def _bump_primitive(s):
    """``int_0^s bump`` for ``0 <= s <= 1/2`` by a fixed Gauss rule."""
    x, w = gauss_legendre(_STEP_ORDER)
    s = np.asarray(s, dtype=float)
    nodes = 0.5 * s[..., None] * (x + 1.0)
    return 0.5 * s * np.sum(w * _bump(nodes), axis=-1)


_BUMP_TOTAL = 2.0 * float(_bump_primitive(np.array(0.5)))


def smooth_step(s):
    """C-infinity step rising from 0 at ``s <= 0`` to 1 at ``s >= 1``."""
    s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
    lower = s <= 0.5
    out = np.empty_like(s)
    out[lower] = _bump_primitive(s[lower]) / _BUMP_TOTAL
    out[~lower] = 1.0 - _bump_primitive(1.0 - s[~lower]) / _BUMP_TOTAL
    return out


def eta0(t):
    """Radial plateau cutoff: 1 on [0, 1/2], 0 on [1, inf), smooth between."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterError("eta0 is defined for t >= 0")
    out = smooth_step(2.0 * (1.0 - t))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=None)
def plateau_mass(p: float = 1.0) -> float:
    """``M_p = int_{R^2} eta0(|z|)^p dz`` (cached)."""
    inner = math.pi / 4.0
    val, _ = integrate.quad(
        lambda t: 2.0 * math.pi * t * eta0(t) ** p, 0.5, 1.0, epsabs=1e-15, epsrel=1e-13, limit=200
    )
    return inner + val


def _norm(x, y):
    return np.hypot(np.asarray(x, dtype=float), np.asarray(y, dtype=float))


class CurvatureField:
    """Base class. Subclasses are immutable; evaluation is vectorised."""

    kind = "abstract"
    radial = False

    def evaluate(self, x, y):
        raise NotImplementedError

    def __call__(self, x, y):
        return self.evaluate(x, y)

    def alpha1_closed_form(self) -> float:
        """Known value of the weighted-integrability threshold at p = 1."""
        raise NotImplementedError

    def scaled(self, factor: float) -> "CurvatureField":
        raise NotImplementedError

    def parameters(self) -> dict:
        raise NotImplementedError

    def support_radius(self) -> float:
        """Radius beyond which the field vanishes (inf if it does not)."""
        return math.inf


@dataclass(frozen=True)
class RadialPower(CurvatureField):
    ell: float
    amplitude: float = 1.0

    kind = "RadialPower"
    radial = True

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ParameterError("amplitude must be positive")
        if not self.ell > 2:
            raise ParameterError("ell must exceed 2")

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return -self.amplitude * (1.0 + r * r) ** (-0.5 * self.ell)

    def log_abs_profile(self, r):
        r = np.asarray(r, dtype=float)
        return math.log(self.amplitude) - 0.5 * self.ell * np.log1p(r * r)

    def evaluate(self, x, y):
        return self.profile(_norm(x, y))

    def alpha1_closed_form(self):
        return 0.5 * (self.ell - 2.0)

    def scaled(self, factor):
        return RadialPower(self.ell, self.amplitude * factor)

    def parameters(self):
        return {"ell": self.ell, "amplitude": self.amplitude}


@dataclass(frozen=True)
class ExactFamily(CurvatureField):
    """``K = -2 a s (1+r^2)^-(2+a)`` with reference ``(a/2) ln(1+r^2) - ln(s)/2``."""

    alpha: float
    scale: float = 1.0

    kind = "ExactFamily"
    radial = True

    def __post_init__(self):
        if not self.alpha > 0:
            raise ParameterError("alpha must be positive")
        if not self.scale > 0:
            raise ParameterError("scale must be positive")

    def profile(self, r):
        r = np.asarray(r, dtype=float)
        return -2.0 * self.alpha * self.scale * (1.0 + r * r) ** (-(2.0 + self.alpha))

    def log_abs_profile(self, r):
        r = np.asarray(r, dtype=float)
        return math.log(2.0 * self.alpha * self.scale) - (2.0 + self.alpha) * np.log1p(r * r)

    def evaluate(self, x, y):
        return self.profile(_norm(x, y))

    def reference_solution(self, r):
        r = np.asarray(r, dtype=float)
        return 0.5 * self.alpha * np.log1p(r * r) - 0.5 * math.log(self.scale)

    def alpha1_closed_form(self):
        return 1.0 + self.alpha

    def scaled(self, factor):
        return ExactFamily(self.alpha, self.scale * factor)

    def parameters(self):
        return {"alpha": self.alpha, "scale": self.scale}


@dataclass(frozen=True)
class BumpSpec:
    """One term ``-r_n^-2 n^-ell eta0((x - a_n)/r_n)`` of the bump sum."""

    n: int
    ell: float
    q: float

    def __post_init__(self):
        if self.n < 2:
            raise ParameterError("bump index must be >= 2")

    @property
    def center(self):
        return (float(self.n), 0.0)

    @property
    def log_radius(self) -> float:
        return -float(self.n) ** self.q

    @property
    def log_amplitude(self) -> float:
        return 2.0 * float(self.n) ** self.q - self.ell * math.log(self.n)

    @property
    def log_local_scale(self) -> float:
        """``ln(amplitude * radius^2) = -ell ln n``, free of the huge exponents."""
        return -self.ell * math.log(self.n)

    @property
    def radius(self) -> float:
        return math.exp(self.log_radius)


@dataclass(frozen=True)
class BumpSum(CurvatureField):
    ell: float
    q: float
    n_max: int
    scale: float = 1.0
    bumps: tuple = field(init=False, repr=False, compare=False)

    kind = "BumpSum"
    radial = False

    def __post_init__(self):
        if not self.q > 1:
            raise ParameterError(f"q must exceed 1 (got q={self.q})")
        if not self.ell > self.q:
            raise ParameterError(f"ell must exceed q (got ell={self.ell}, q={self.q})")
        if int(self.n_max) != self.n_max or self.n_max < 2:
            raise ParameterError("n_max must be an integer >= 2")
        if not self.scale > 0:
            raise ParameterError("scale must be positive")
        bumps = tuple(BumpSpec(n, self.ell, self.q) for n in range(2, int(self.n_max) + 1))
        object.__setattr__(self, "bumps", bumps)

    def bump(self, n: int) -> BumpSpec:
        return self.bumps[n - 2]

    def local_density(self, n: int, zx, zy):
        """``r_n^2 K(a_n + r_n z)``: the bump as a density in ``dz``."""
        b = self.bump(n)
        t = _norm(zx, zy)
        out = np.zeros_like(t)
        inside = t < 1.0
        out[inside] = -self.scale * math.exp(b.log_local_scale) * eta0(t[inside])
        return out

    def evaluate_local(self, n: int, zx, zy):
        """``K`` at ``a_n + r_n z``; the amplitude ``r_n^-2 n^-ell`` is applied in log form."""
        b = self.bump(n)
        t = _norm(zx, zy)
        out = np.zeros_like(t)
        inside = t < 1.0
        out[inside] = -self.scale * math.exp(b.log_amplitude) * eta0(t[inside])
        return out

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x, y = np.broadcast_arrays(x, y)
        out = np.zeros(x.shape)
        for b in self.bumps:
            dx = x - b.center[0]
            near = (np.abs(dx) < 0.25) & (np.abs(y) < 0.25)
            if not near.any():
                continue
            inv_r = math.exp(-b.log_radius)
            zx = dx[near] * inv_r
            zy = y[near] * inv_r
            out[near] += self.evaluate_local(b.n, zx, zy)
        return out

    def bump_mass(self, n: int, p: float = 1.0) -> float:
        """``int |K|^p`` over bump ``n`` (the p = 1 value is ``n^-ell M_1``)."""
        b = self.bump(n)
        log_val = p * (b.log_amplitude + math.log(self.scale)) + 2.0 * b.log_radius
        return math.exp(log_val) * plateau_mass(p)

    def truncation_mass(self) -> float:
        """``sum_{n > n_max} n^-ell M_1``: curvature mass dropped by truncation."""
        return self.scale * float(special.zeta(self.ell, self.n_max + 1)) * plateau_mass(1.0)

    def alpha1_closed_form(self):
        return 0.5 * (self.ell - 1.0)

    def alpha_star(self) -> float:
        return 0.5 * (self.ell - self.q)

    def scaled(self, factor):
        return BumpSum(self.ell, self.q, self.n_max, self.scale * factor)

    def parameters(self):
        return {"ell": self.ell, "q": self.q, "n_max": int(self.n_max), "scale": self.scale}

    def support_radius(self):
        return float(self.n_max) + 0.25


@dataclass(frozen=True, eq=False)
class GridSampled(CurvatureField):
    """Bilinear interpolation of samples on a rectilinear grid, clamped to <= 0."""

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    source: str = ""

    kind = "GridSampled"
    radial = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.xs), len(self.ys)):
            raise ParameterError("values must have shape (len(xs), len(ys))")
        if np.any(vals > 0):
            raise ParameterError("sampled curvature must be nonpositive")
        if not np.any(vals < 0):
            raise ParameterError("sampled curvature is identically zero")
        interp = RegularGridInterpolator(
            (np.asarray(self.xs, float), np.asarray(self.ys, float)), vals, method="linear"
        )
        object.__setattr__(self, "_interp", interp)

    @classmethod
    def from_file(cls, path):
        """Read whitespace-separated ``x y K`` rows after one header line."""
        data = np.loadtxt(path, skiprows=1, ndmin=2)
        if data.shape[1] != 3:
            raise ParameterError(f"{path}: expected three columns 'x y K'")
        xs = np.unique(data[:, 0])
        ys = np.unique(data[:, 1])
        if xs.size * ys.size != data.shape[0]:
            raise ParameterError(f"{path}: samples do not form a full rectilinear grid")
        values = np.full((xs.size, ys.size), np.nan)
        ix = np.searchsorted(xs, data[:, 0])
        iy = np.searchsorted(ys, data[:, 1])
        values[ix, iy] = data[:, 2]
        return cls(xs, ys, values, source=str(Path(path)))

    def inside(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return (
            (x >= self.xs[0]) & (x <= self.xs[-1]) & (y >= self.ys[0]) & (y <= self.ys[-1])
        )

    def evaluate(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        if not np.all(self.inside(x, y)):
            raise OutOfDomainError("query outside the sampled domain")
        pts = np.stack([x.ravel(), y.ravel()], axis=-1)
        return np.minimum(self._interp(pts), 0.0).reshape(x.shape)

    def evaluate_masked(self, x, y):
        """Like :meth:`evaluate` but zero outside the sampled rectangle."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros(x.shape)
        ok = self.inside(x, y)
        if ok.any():
            pts = np.stack([x[ok], y[ok]], axis=-1)
            out[ok] = np.minimum(self._interp(pts), 0.0)
        return out

    def alpha1_closed_form(self):
        return math.inf

    def scaled(self, factor):
        return GridSampled(self.xs, self.ys, np.asarray(self.values) * factor, self.source)

    def parameters(self):
        return {"path": self.source, "nx": len(self.xs), "ny": len(self.ys)}

    def support_radius(self):
        corners = [(x, y) for x in (self.xs[0], self.xs[-1]) for y in (self.ys[0], self.ys[-1])]
        return float(max(math.hypot(x, y) for x, y in corners))


def make_exact_family(alpha: float):
    """Field and closed-form solution ``u(r) = (alpha/2) ln(1 + r^2)``."""
    fld = ExactFamily(alpha)
    return fld, fld.reference_solution


def make_k0(ell: float, q: float, n_max: int) -> BumpSum:
    return BumpSum(ell, q, n_max)


def eval_curvature(fld: CurvatureField, point):
    """Scalar convenience wrapper around ``fld.evaluate``."""
    x, y = point
    return float(np.asarray(fld.evaluate(x, y)))
