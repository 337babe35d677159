"""Weighted integrability thresholds.

For ``p >= 1`` the quantity of interest is the largest ``alpha`` for which

    int |K|^p (1 + |x|)^{2 alpha p + 2(p - 1)} dx

is finite. Numerically this is located as the zero crossing of the fitted
growth exponent ``s(alpha)`` of dyadic annular moments, so every value
reported here is an estimated threshold, not an exact one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .curvature import BumpSum, CurvatureField, plateau_mass
from .errors import IllConditionedTailError, NumericToleranceError, ParameterError
from .potential import Frame, local_grid
from .quadrature import gauss_legendre

__all__ = [
    "annular_moment",
    "estimate_alpha_p",
    "alpha_p_report",
    "AlphaPEstimate",
    "AlphaPReport",
    "default_alpha_grid",
    "encode_extended",
]

K_MIN, K_MAX = 0, 12
FIT_FROM = 6
BOUNDARY_BAND = 0.1
MONOTONE_TOL = 1e-6
BISECT_TOL = 0.01
SERIES_RANGE = (1e4, 1e6)
GENERIC_THETA = 256
GENERIC_RTOL = 1e-3


def default_alpha_grid():
    return [round(-2.0 + 0.25 * i, 10) for i in range(33)]


def encode_extended(x: float):
    """JSON-safe encoding of an extended real."""
    if x == math.inf:
        return "+inf"
    if x == -math.inf:
        return "-inf"
    return float(x)


def _weight_exponent(p: float, alpha: float) -> float:
    return 2.0 * alpha * p + 2.0 * (p - 1.0)


def _check_p(p: float):
    if not p >= 1.0:
        raise ParameterError(f"p must be >= 1 (got {p})")


def _composite(fn, lo, hi, rtol, max_level=10):
    """Composite 16-point Gauss-Legendre, doubling panels until two levels agree."""
    x, w = gauss_legendre(16)
    prev = None
    n = 2
    for _ in range(max_level):
        if lo > 0:
            br = np.geomspace(lo, hi, n + 1)
        else:
            br = np.linspace(lo, hi, n + 1)
        a, b = br[:-1, None], br[1:, None]
        half = 0.5 * (b - a)
        nodes = a + half * (x[None, :] + 1.0)
        val = float(np.sum(half * w[None, :] * fn(nodes)))
        if prev is not None and abs(val - prev) <= rtol * abs(val):
            return val
        if prev is not None and val == 0.0 and prev == 0.0:
            return 0.0
        prev_prev, prev = prev, val
        n *= 2
    raise NumericToleranceError("annular quadrature did not converge", [prev_prev, prev])


def _bump_log_moment(K: BumpSum, n: int, p: float, alpha: float) -> float:
    """``ln int |K|^p (1+|x|)^w`` over bump ``n``, in its local frame."""
    b = K.bump(n)
    lg = local_grid()
    zx, zy = lg.node_coordinates()
    gx, gy = Frame(b.center, b.log_radius).to_global(zx, zy)
    w = _weight_exponent(p, alpha)
    prof = np.abs(K.local_density(n, zx, zy)) / (K.scale * math.exp(b.log_local_scale))
    local = lg.integrate(prof**p * np.exp(w * np.log1p(np.hypot(gx, gy))))
    return p * (b.log_amplitude + math.log(K.scale)) + 2.0 * b.log_radius + math.log(local)


def _safe_exp(x: float) -> float:
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def annular_moment(K: CurvatureField, p: float, alpha: float, r_lo: float, r_hi: float, rtol: float = 1e-10) -> float:
    """``int_{r_lo <= |x| < r_hi} |K|^p (1+|x|)^{2 alpha p + 2(p-1)} dx``."""
    _check_p(p)
    if not 0.0 <= r_lo < r_hi:
        raise ParameterError("annulus needs 0 <= r_lo < r_hi")
    w = _weight_exponent(p, alpha)
    if isinstance(K, BumpSum):
        total = 0.0
        for b in K.bumps:
            if r_lo <= b.n < r_hi:
                total += _safe_exp(_bump_log_moment(K, b.n, p, alpha))
        return total
    if r_lo >= K.support_radius():
        return 0.0
    if getattr(K, "radial", False) and hasattr(K, "log_abs_profile"):

        def fn(r):
            with np.errstate(divide="ignore"):
                return 2.0 * np.pi * np.exp(np.log(r) + p * K.log_abs_profile(r) + w * np.log1p(r))

        return _composite(fn, r_lo, r_hi, rtol)
    # Non-radial fields may be only piecewise smooth: looser tolerance.
    evaluate = getattr(K, "evaluate_masked", K.evaluate)
    th = 2.0 * np.pi * (np.arange(GENERIC_THETA) + 0.5) / GENERIC_THETA
    hi = min(r_hi, K.support_radius())

    def fn(r):
        x = r[..., None] * np.cos(th)
        y = r[..., None] * np.sin(th)
        vals = np.abs(evaluate(x, y)) ** p
        return 2.0 * np.pi * r * (1.0 + r) ** w * vals.mean(axis=-1)

    return _composite(fn, r_lo, hi, max(rtol, GENERIC_RTOL), max_level=9)


@dataclass
class AlphaPEstimate:
    p: float
    estimate: float
    slopes: dict
    annuli: list
    tail_exponent: float
    fit_residual: float
    inconclusive: list = field(default_factory=list)
    method: str = "dyadic"

    def to_dict(self):
        return {
            "p": self.p,
            "estimate": encode_extended(self.estimate),
            "method": self.method,
            "annuli": [[lo, hi, encode_extended(m)] for lo, hi, m in self.annuli],
            "tail_exponent_fit": {
                "exponent": encode_extended(self.tail_exponent),
                "residual": self.fit_residual,
            },
            "slopes": [[a, encode_extended(s)] for a, s in sorted(self.slopes.items())],
            "boundary_inconclusive": self.inconclusive,
        }


def _dyadic_slope(K, p, alpha, k_range):
    """Fitted exponent ``s`` of ``moment_k ~ C 2^{k s}`` over tail annuli, plus moments."""
    ann = []
    for k in range(K_MIN, k_range + 1):
        lo, hi = float(2**k), float(2 ** (k + 1))
        ann.append((lo, hi, annular_moment(K, p, alpha, lo, hi)))
    tail = np.array([m for _, _, m in ann[FIT_FROM:]])
    if np.all(tail == 0.0):
        return -math.inf, 0.0, ann
    if not np.all(np.isfinite(tail)):
        return math.inf, 0.0, ann
    if np.any(tail == 0.0):
        # moments vanish from some annulus on: compact support
        return -math.inf, 0.0, ann
    kk = np.arange(FIT_FROM, k_range + 1) * math.log(2.0)
    coef, res, *_ = np.polyfit(kk, np.log(tail), 1, full=True)
    resid = float(math.sqrt(res[0] / tail.size)) if res.size else 0.0
    return float(coef[0]), resid, ann


def _series_slope(K: BumpSum, p, alpha):
    """Log-term test on ``I_n``: returns ``d ln I_n / d ln n + 1`` at large ``n``.

    ``ln I_n = 2(p-1) n^q - p ell ln n + ln M_p + w ln(1+n) + p ln(scale)``;
    the series converges when the returned value is negative.
    """
    w = _weight_exponent(p, alpha)
    log_mp = math.log(plateau_mass(p))

    def log_term(n):
        return 2.0 * (p - 1.0) * n**K.q - p * K.ell * math.log(n) + log_mp + w * math.log1p(n) + p * math.log(K.scale)

    n1, n2 = SERIES_RANGE
    return (log_term(n2) - log_term(n1)) / math.log(n2 / n1) + 1.0


def estimate_alpha_p(
    K: CurvatureField,
    p: float,
    alpha_grid: Optional[Sequence[float]] = None,
    r_max: float = 2.0**13,
) -> AlphaPEstimate:
    """Threshold ``alpha`` where the fitted tail exponent crosses zero.

    Returns ``+inf`` when every grid ``alpha`` gives a decaying tail and
    ``-inf`` when every grid ``alpha`` gives a growing (or overflowing) one.
    """
    _check_p(p)
    grid = list(default_alpha_grid() if alpha_grid is None else alpha_grid)
    if len(grid) < 2 or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ParameterError("alpha_grid must be strictly increasing with at least two points")
    series = isinstance(K, BumpSum)
    k_range = int(math.floor(math.log2(r_max))) - 1
    if not series and k_range - FIT_FROM + 1 < 6:
        raise ParameterError("r_max must allow at least 6 tail annuli")
    k_range = min(k_range, K_MAX)

    cache = {}

    def slope(alpha):
        if alpha not in cache:
            if series:
                cache[alpha] = (_series_slope(K, p, alpha), 0.0, None)
            else:
                cache[alpha] = _dyadic_slope(K, p, alpha, k_range)
        return cache[alpha][0]

    svals = [slope(a) for a in grid]
    finite = [(a, s) for a, s in zip(grid, svals) if math.isfinite(s)]
    for (a1, s1), (a2, s2) in zip(finite, finite[1:]):
        if s2 < s1 - MONOTONE_TOL * max(1.0, abs(s1)):
            raise IllConditionedTailError(
                "fitted tail exponent is not monotone in alpha",
                {"alpha": [a1, a2], "slopes": [s1, s2], "p": p},
            )
    if all(s < 0 for s in svals):
        est = math.inf
    elif all(s > 0 for s in svals):
        est = -math.inf
    else:
        i = next(i for i, s in enumerate(svals) if s >= 0)
        if i == 0:
            est = grid[0]
        else:
            lo, hi = grid[i - 1], grid[i]
            while hi - lo > BISECT_TOL / 4:
                mid = 0.5 * (lo + hi)
                if slope(mid) < 0:
                    lo = mid
                else:
                    hi = mid
            s_lo, s_hi = slope(lo), slope(hi)
            if math.isfinite(s_lo) and math.isfinite(s_hi) and s_hi != s_lo:
                est = lo - s_lo * (hi - lo) / (s_hi - s_lo)
            else:
                est = 0.5 * (lo + hi)
    at = est if math.isfinite(est) else 0.0
    if series:
        ann = [
            (float(b.n), float(b.n) + 1.0, annular_moment(K, p, at, float(b.n), float(b.n) + 1.0))
            for b in K.bumps
        ]
        tail_s, resid = _series_slope(K, p, at), 0.0
    else:
        tail_s, resid, ann = _dyadic_slope(K, p, at, k_range)
    flagged = sorted(a for a, (s, _, _) in cache.items() if abs(s) < BOUNDARY_BAND)
    return AlphaPEstimate(
        p=float(p),
        estimate=float(est),
        slopes={a: cache[a][0] for a in sorted(cache)},
        annuli=ann,
        tail_exponent=tail_s,
        fit_residual=resid,
        inconclusive=flagged,
        method="series" if series else "dyadic",
    )


@dataclass
class AlphaPReport:
    field: dict
    p_values: list
    estimates: list
    alpha_grid: list
    r_max: float

    def values(self):
        return [e.estimate for e in self.estimates]

    def monotone_in_p(self, tol: float = 0.05) -> bool:
        pairs = sorted(zip(self.p_values, self.values()))
        return all(b <= a + tol for (_, a), (_, b) in zip(pairs, pairs[1:]))

    def to_dict(self):
        return {
            "field": self.field,
            "alpha_grid": self.alpha_grid,
            "r_max": self.r_max,
            "bisection_tol": BISECT_TOL,
            "boundary_band": BOUNDARY_BAND,
            "results": [e.to_dict() for e in self.estimates],
            "monotone_in_p": self.monotone_in_p(),
        }


def alpha_p_report(K: CurvatureField, ps, alpha_grid=None, r_max: float = 2.0**13) -> AlphaPReport:
    grid = list(default_alpha_grid() if alpha_grid is None else alpha_grid)
    ests = [estimate_alpha_p(K, p, grid, r_max) for p in ps]
    return AlphaPReport(
        field={"kind": K.kind, **K.parameters()},
        p_values=[float(p) for p in ps],
        estimates=ests,
        alpha_grid=grid,
        r_max=float(r_max),
    )
