"""Radial shooting for ``u'' + u'/r + K(r) e^{2u} = 0``, ``u(0) = c0``, ``u'(0) = 0``.

Integration runs in ``s = ln r`` on ``y = (u, r u')`` so that the attained
growth coefficient ``r u'`` is a state variable:

    du/ds = p,    dp/ds = -r^2 K(r) e^{2u}.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, optimize

from .errors import IntegrationError, ParameterError, RangeError

__all__ = ["RadialProfile", "radial_shoot", "radial_solve_for_alpha", "radial_profile_fn"]

R_START = 1e-6
C0_LIMIT = 50.0


def radial_profile_fn(K) -> Callable:
    """Accept a radial field (anything with ``profile``) or a plain callable of ``r``."""
    if hasattr(K, "profile"):
        if not getattr(K, "radial", True):
            raise ParameterError("shooting needs a radial curvature")
        return K.profile
    if callable(K):
        return K
    raise ParameterError("K must be a radial field or a callable of r")


@dataclass
class RadialProfile:
    c0: float
    r_end: float
    alpha_attained: float
    alpha_limit: float
    solution: object

    def __call__(self, r):
        """``u(r)``; radii below the start radius are clamped to it."""
        r = np.asarray(r, dtype=float)
        s = np.log(np.maximum(r, R_START))
        if np.any(r > self.r_end * (1 + 1e-12)):
            raise ParameterError("profile requested beyond r_end")
        return self.solution.sol(s)[0]

    def growth(self, r):
        """``r u'(r)``."""
        r = np.asarray(r, dtype=float)
        return self.solution.sol(np.log(np.maximum(r, R_START)))[1]


def _richardson(p1, p2, p3):
    """Aitken extrapolation of ``p`` at geometrically spaced radii."""
    d1 = p2 - p1
    d2 = p3 - p2
    den = d2 - d1
    if den == 0.0 or abs(d2) >= abs(d1) or d1 * d2 <= 0:
        return p3
    return p3 - d2 * d2 / den


def radial_shoot(K, c0: float, r_end: float, rtol: float = 1e-10) -> RadialProfile:
    """Shoot from ``u(0) = c0`` to ``r_end``; returns the profile and ``r u'`` at ``r_end``."""
    kfn = radial_profile_fn(K)
    if not math.isfinite(c0):
        raise ParameterError("c0 must be finite")
    if not r_end > R_START:
        raise ParameterError("r_end must exceed the start radius")
    k_origin = float(kfn(0.0))
    if k_origin > 0:
        raise ParameterError("curvature must be nonpositive")
    a = k_origin * math.exp(2.0 * c0)
    y0 = [c0 - a * R_START**2 / 4.0, -a * R_START**2 / 2.0]

    def rhs(s, y):
        r = math.exp(s)
        return [y[1], -r * r * float(kfn(r)) * math.exp(min(2.0 * y[0], 700.0))]

    sol = integrate.solve_ivp(
        rhs,
        (math.log(R_START), math.log(r_end)),
        y0,
        method="DOP853",
        rtol=rtol,
        atol=1e-12,
        dense_output=True,
    )
    if not sol.success or not np.all(np.isfinite(sol.y[:, -1])):
        raise IntegrationError(f"radial integration failed: {sol.message}")
    ps = sol.sol(np.log([r_end / 4.0, r_end / 2.0, r_end]))[1]
    return RadialProfile(
        c0=float(c0),
        r_end=float(r_end),
        alpha_attained=float(ps[2]),
        alpha_limit=float(_richardson(*ps)),
        solution=sol,
    )


def radial_solve_for_alpha(K, alpha_target: float, tol: float = 1e-8, r_end: float = 1e6) -> RadialProfile:
    """Find ``c0`` whose extrapolated growth equals ``alpha_target``."""
    if not alpha_target > 0:
        raise ParameterError("alpha_target must be positive")
    alpha1 = K.alpha1_closed_form() if hasattr(K, "alpha1_closed_form") else math.inf
    if alpha_target >= alpha1:
        raise ParameterError(f"alpha_target {alpha_target} is not below alpha_1 = {alpha1}")

    def miss(c0):
        # Large c0 blows up at finite radius; that counts as overshooting.
        try:
            return radial_shoot(K, c0, r_end).alpha_limit - alpha_target
        except IntegrationError:
            return 1.0

    lo, hi = -2.0, 2.0
    f_lo, f_hi = miss(lo), miss(hi)
    while f_lo > 0 and lo > -C0_LIMIT:
        lo = max(2.0 * lo, -C0_LIMIT)
        f_lo = miss(lo)
    while f_hi < 0 and hi < C0_LIMIT:
        hi = min(2.0 * hi, C0_LIMIT)
        f_hi = miss(hi)
    if f_lo > 0 or f_hi < 0:
        raise RangeError(f"no c0 in [-{C0_LIMIT}, {C0_LIMIT}] attains alpha = {alpha_target}")
    c0 = optimize.brentq(miss, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    prof = radial_shoot(K, c0, r_end)
    if abs(prof.alpha_limit - alpha_target) > tol:
        raise RangeError(
            f"attained alpha {prof.alpha_limit} misses target {alpha_target} by more than {tol}"
        )
    return prof
