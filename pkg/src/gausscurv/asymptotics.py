"""Growth fits, remainder decay, and bump-sum probes for solutions at infinity.

A solution with growth ``alpha`` behaves like ``alpha ln|x| + c + remainder``.
The probes here measure ``alpha`` and ``c``, the decay rate of the remainder,
and, for bump sums, how the remainder ``xi = u - alpha*w0`` differs between
bump centres ``a_n`` and their mirror points ``-a_n``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .curvature import BumpSum, CurvatureField, plateau_mass
from .errors import ContractViolation, ParameterError
from .growth import w0
from .potential import Frame

__all__ = [
    "Thresholds",
    "GrowthFit",
    "DecayFit",
    "LayerCheck",
    "GrowthProbe",
    "AsymptoticsReport",
    "fit_log_growth",
    "remainder_decay_exponent",
    "anisotropy_probe",
    "growth_probe",
    "layer_check",
    "classify",
    "default_beta",
]

DECAY_FLOOR = 1e-9


@dataclass(frozen=True)
class Thresholds:
    """Constants behind every verdict; each report carries a copy."""

    uniform_gap_max: float = 0.01
    anisotropic_gap_min: float = 0.05
    growth_exponent_min: float = 0.05
    low_confidence_exponent: float = 0.2
    angular_deviation_max: float = 1e-3
    decay_slack: float = 0.1
    beta_epsilon: float = 0.0


def _evaluator(u):
    if callable(u):
        return u
    raise ParameterError("u must be callable as u(x, y)")


def _ring(u, r, angles):
    return np.asarray(u(r * np.cos(angles), r * np.sin(angles)), dtype=float)


@dataclass
class GrowthFit:
    alpha: float
    c: float
    delta_alpha: float
    delta_c: float
    angular_deviation: float
    anisotropic: bool
    gamma: Optional[float]
    residual: float


def _lsq(lr, vals, gammas):
    best = None
    for g in gammas:
        cols = [lr, np.ones_like(lr)]
        if g is not None:
            cols.append(np.exp(-g * lr))
        A = np.stack(cols, axis=1)
        coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
        res = float(np.linalg.norm(A @ coef - vals))
        if best is None or res < best[2] - 1e-15:
            best = (coef, g, res)
    return best


def fit_log_growth(u, radii: Sequence[float], angles=None, deviation_bound: float = 1e-3) -> GrowthFit:
    """Least-squares ``alpha ln r + c (+ b r^-gamma)`` on angular means.

    ``gamma`` is scanned over a fixed grid (plus the pure two-term model) and
    the best residual wins. Deltas are the spread of per-angle fits.
    """
    f = _evaluator(u)
    radii = np.asarray(sorted(float(r) for r in radii))
    if radii.size < 4:
        raise ParameterError("need at least 4 radii")
    if radii[-1] < 100.0 * radii[0]:
        raise ParameterError("radii must span at least two decades")
    angles = np.asarray(
        angles if angles is not None else 2.0 * np.pi * (np.arange(8) + 0.125) / 8, dtype=float
    )
    vals = np.stack([_ring(f, r, angles) for r in radii])
    means = vals.mean(axis=1)
    lr = np.log(radii)
    gammas = [None] if radii.size < 5 else [None] + list(np.round(np.arange(0.25, 3.01, 0.25), 2))
    coef, g, res = _lsq(lr, means, gammas)
    per_angle = [_lsq(lr, vals[:, j], [g])[0] for j in range(angles.size)]
    d_alpha = max(abs(pc[0] - coef[0]) for pc in per_angle)
    d_c = max(abs(pc[1] - coef[1]) for pc in per_angle)
    dev = float(np.max(np.abs(vals - means[:, None])))
    return GrowthFit(
        alpha=float(coef[0]),
        c=float(coef[1]),
        delta_alpha=float(d_alpha),
        delta_c=float(d_c),
        angular_deviation=dev,
        anisotropic=bool(dev > deviation_bound),
        gamma=None if g is None else float(g),
        residual=res,
    )


def default_beta(alpha1: float, alpha: float, epsilon: float = 0.0) -> float:
    """Midpoint choice ``(alpha1 - alpha)/2``, capped at 1 and shrunk by ``epsilon``."""
    return min(1.0, 0.5 * (alpha1 - alpha)) * (1.0 - epsilon)


@dataclass
class DecayFit:
    status: str
    gamma: Optional[float]
    target: Optional[float]
    radii: list
    max_remainder: list
    meets_target: Optional[bool] = None


def remainder_decay_exponent(
    u, alpha: float, c: float, radii: Sequence[float], beta: Optional[float] = None,
    angles=None, slack: float = 0.1, floor: float = DECAY_FLOOR,
) -> DecayFit:
    """Slope of ``ln max_theta |u - alpha ln r - c|`` against ``ln r``, sign flipped."""
    f = _evaluator(u)
    radii = [float(r) for r in radii]
    angles = np.asarray(
        angles if angles is not None else 2.0 * np.pi * (np.arange(8) + 0.125) / 8, dtype=float
    )
    rem = [float(np.max(np.abs(_ring(f, r, angles) - alpha * math.log(r) - c))) for r in radii]
    target = None if beta is None else 2.0 * beta / (1.0 + 2.0 * beta)
    keep = [(r, m) for r, m in zip(radii, rem) if m > floor]
    if len(keep) < 2:
        return DecayFit("decay-floor", None, target, radii, rem)
    lr = np.log([r for r, _ in keep])
    lm = np.log([m for _, m in keep])
    gamma = -float(np.polyfit(lr, lm, 1)[0])
    meets = None if target is None else bool(gamma >= target - slack)
    return DecayFit("fit", gamma, target, radii, rem, meets)


def _require_converged(sol):
    if not getattr(sol, "converged", False):
        raise ContractViolation("probe needs a converged solution")


def anisotropy_probe(sol, n_range: Sequence[int]) -> list:
    """``gap_n = xi(a_n) - xi(-a_n)`` with ``xi = u - alpha*w0 = t + v``.

    At ``a_n`` the potential is evaluated in bump ``n``'s own frame when the
    solution has one, so its ``ln r_n`` self-term comes from the stored
    log-radius. Radial fields have no bump frames; ``a_n = (n, 0)`` is used.
    """
    _require_converged(sol)
    frames = {int(round(fr.center[0])): fr for fr in getattr(sol, "frames", [])}
    gaps = []
    for n in n_range:
        n = int(n)
        fr = frames.get(n, Frame((float(n), 0.0), 0.0))
        plus = float(sol.v(np.array([0.0]), np.array([0.0]), fr)[0])
        minus = float(sol.v(np.array([-float(n)]), np.array([0.0]))[0])
        gaps.append(plus - minus)
    return gaps


def remainder_at_centers(sol, n_range: Sequence[int]) -> list:
    """``xi(a_n) = u(a_n) - alpha*w0(a_n)`` at each bump centre."""
    _require_converged(sol)
    frames = {int(round(fr.center[0])): fr for fr in getattr(sol, "frames", [])}
    out = []
    for n in n_range:
        fr = frames.get(int(n), Frame((float(n), 0.0), 0.0))
        out.append(sol.t + float(sol.v(np.array([0.0]), np.array([0.0]), fr)[0]))
    return out


@dataclass
class GrowthProbe:
    n: list
    log_self_term: list
    ratios: list
    exponent: float
    ratios_increasing: bool
    low_confidence: bool
    solution_ratios: Optional[list] = None


def growth_probe(K: BumpSum, alpha: float, n_range: Sequence[int], sol=None, thresholds: Thresholds = Thresholds()) -> GrowthProbe:
    """Self-term of bump ``n`` at its own centre, normalized by ``ln n``.

    ``S_n = (m_n / 2pi) |ln r_n|`` with ``m_n = n^-ell M_1 e^{2 alpha w0(a_n)}``
    is evaluated in log form. The exponent is the slope of ``ln S_n`` against
    ``ln n``. When a solution is given, ``|xi(a_n)| / ln n`` is reported too.
    """
    if not isinstance(K, BumpSum):
        raise ParameterError("growth probe needs a bump sum")
    if alpha <= K.alpha_star():
        raise ParameterError(f"alpha = {alpha} is not above alpha_* = {K.alpha_star()}")
    ns = [int(n) for n in n_range]
    if len(ns) < 2:
        raise ParameterError("need at least two bump indices")
    log_m1 = math.log(plateau_mass(1.0))
    logs = []
    for n in ns:
        b = K.bump(n)
        log_mass = b.log_local_scale + math.log(K.scale) + log_m1 + 2.0 * alpha * float(w0(float(n)))
        logs.append(log_mass + math.log(-b.log_radius) - math.log(2.0 * math.pi))
    ratios = [math.exp(ls - math.log(math.log(n))) for ls, n in zip(logs, ns)]
    expo = float(np.polyfit(np.log(ns), logs, 1)[0])
    sol_ratios = None
    if sol is not None:
        xi = remainder_at_centers(sol, ns)
        sol_ratios = [abs(x) / math.log(n) for x, n in zip(xi, ns)]
    return GrowthProbe(
        n=ns,
        log_self_term=logs,
        ratios=ratios,
        exponent=expo,
        ratios_increasing=all(b > a for a, b in zip(ratios, ratios[1:])),
        low_confidence=bool(expo < thresholds.low_confidence_exponent),
        solution_ratios=sol_ratios,
    )


def driving_exponent(K: BumpSum, alpha: float) -> float:
    """``2 alpha - ell + q``: growth exponent of the bump self-term."""
    return 2.0 * alpha - K.ell + K.q


@dataclass
class LayerCheck:
    ordered: bool
    margin: float


def _same_field(a: CurvatureField, b: CurvatureField) -> bool:
    return a.kind == b.kind and a.parameters() == b.parameters()


def layer_check(u_lo, u_hi, samples) -> LayerCheck:
    """``u_lo < u_hi`` at every sample; margin is ``min(u_hi - u_lo)``."""
    k_lo = getattr(u_lo, "K", None)
    k_hi = getattr(u_hi, "K", None)
    if k_lo is not None and k_hi is not None and not _same_field(k_lo, k_hi):
        raise ContractViolation("layer check needs solutions for the same curvature")
    xs, ys = (np.asarray(s, dtype=float) for s in samples)
    diff = np.asarray(u_hi(xs, ys)) - np.asarray(u_lo(xs, ys))
    margin = float(np.min(diff))
    return LayerCheck(bool(margin > 0.0), margin)


def classify(gaps: Sequence[float], exponent: float, thr: Thresholds) -> str:
    """Verdict from gap magnitudes and the self-term growth exponent.

    * ``unbounded``: the self-term exponent exceeds ``growth_exponent_min``.
    * ``anisotropic-bounded``: the exponent is within ``growth_exponent_min``
      of zero and every gap magnitude is at least ``anisotropic_gap_min``.
    * ``uniform``: the last gap is below ``uniform_gap_max``, or the exponent
      is below ``-growth_exponent_min`` and gap magnitudes strictly decrease.
    * ``indeterminate`` otherwise.
    """
    mags = [abs(g) for g in gaps]
    if exponent > thr.growth_exponent_min:
        return "unbounded"
    if abs(exponent) <= thr.growth_exponent_min and min(mags) >= thr.anisotropic_gap_min:
        return "anisotropic-bounded"
    decreasing = all(b < a for a, b in zip(mags, mags[1:]))
    if mags[-1] <= thr.uniform_gap_max or (exponent < -thr.growth_exponent_min and decreasing):
        return "uniform"
    return "indeterminate"


@dataclass
class AsymptoticsReport:
    alpha: float
    fit: Optional[GrowthFit] = None
    decay: Optional[DecayFit] = None
    n_range: list = field(default_factory=list)
    gaps: list = field(default_factory=list)
    growth: Optional[GrowthProbe] = None
    exponent: Optional[float] = None
    verdict: Optional[str] = None
    thresholds: Thresholds = field(default_factory=Thresholds)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "fit": None if self.fit is None else asdict(self.fit),
            "decay": None if self.decay is None else asdict(self.decay),
            "n_range": list(self.n_range),
            "gaps": list(self.gaps),
            "growth": None if self.growth is None else asdict(self.growth),
            "self_term_exponent": self.exponent,
            "verdict": self.verdict,
            "thresholds": asdict(self.thresholds),
        }
