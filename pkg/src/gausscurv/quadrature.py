"""Polar quadrature grids and the logarithmic-kernel mode operator.

A :class:`PolarGrid` is a tensor grid: Gauss-Legendre panels in the radius
times a uniform trapezoid rule in the angle. The logarithmic potential of a
density sampled on the grid is computed by integrating the kernel exactly
against the angular trigonometric interpolant, using

    ln|x - y| = ln r_> - sum_{m>=1} (1/m) (r_< / r_>)^m cos(m (theta - phi)),

so the angular singularity never reaches the quadrature. In the radius the
panel holding the target is split at the target radius, which keeps the
kinks of ``ln r_>`` and ``(r_< / r_>)^m`` on panel edges.

Targets are passed as ``(log_radius, angle)`` so that points at ~1e15 local
radii (far bumps seen from a tiny frame) stay exact.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "lagrange_matrix",
    "PolarGrid",
    "geometric_breaks",
]


@lru_cache(maxsize=None)
def gauss_legendre(order: int):
    """Nodes and weights on [-1, 1] (cached, read-only arrays)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _barycentric_weights(nodes):
    diff = nodes[:, None] - nodes[None, :]
    np.fill_diagonal(diff, 1.0)
    return 1.0 / np.prod(diff, axis=1)


def lagrange_matrix(nodes, x):
    """Matrix ``L`` with ``L @ f(nodes) == p(x)`` for the interpolant ``p``."""
    nodes = np.asarray(nodes, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    bw = _barycentric_weights(nodes)
    diff = x[:, None] - nodes[None, :]
    exact = diff == 0.0
    diff[exact] = 1.0
    tmp = bw[None, :] / diff
    mat = tmp / tmp.sum(axis=1, keepdims=True)
    rows = exact.any(axis=1)
    if rows.any():
        mat[rows] = exact[rows].astype(float)
    return mat


def geometric_breaks(r_max: float, inner=(0.0, 0.5, 1.0), ratio: float = 2.0):
    """Panel breaks ``inner`` followed by a geometric sequence up to ``r_max``."""
    breaks = list(inner)
    r = breaks[-1]
    while r * ratio < r_max * (1.0 - 1e-12):
        r *= ratio
        breaks.append(r)
    if r_max > breaks[-1]:
        breaks.append(float(r_max))
    return tuple(breaks)


class PolarGrid:
    """Tensor Gauss-Legendre x trapezoid grid over the disk of radius ``breaks[-1]``.

    Samples are arrays of shape ``(n_radial, n_theta)``.
    """

    def __init__(self, breaks, order: int = 16, n_theta: int = 64):
        breaks = np.asarray(breaks, dtype=float)
        if breaks[0] != 0.0 or np.any(np.diff(breaks) <= 0):
            raise ValueError("radial breaks must start at 0 and increase")
        if n_theta % 2:
            raise ValueError("n_theta must be even")
        self.breaks = breaks
        self.order = int(order)
        self.n_theta = int(n_theta)
        x, w = gauss_legendre(self.order)
        a, b = breaks[:-1], breaks[1:]
        half = 0.5 * (b - a)
        self.rho = (a[:, None] + half[:, None] * (x[None, :] + 1.0)).ravel()
        self.radial_weights = (half[:, None] * w[None, :]).ravel()
        self.log_rho = np.log(self.rho)
        self.theta = 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta
        self.area_weights = (
            (self.rho * self.radial_weights)[:, None] * (2.0 * np.pi / self.n_theta)
        ) * np.ones((1, self.n_theta))
        self.n_modes = self.n_theta // 2 + 1
        mode_index = np.arange(self.n_modes)
        # 1/(2m) for m >= 1, Nyquist mode counted once
        coef = np.zeros(self.n_modes)
        coef[1:] = 1.0 / mode_index[1:]
        coef[-1] *= 0.5
        self._mode_coef = coef
        self._mode_index = mode_index
        self._node_operator = None

    # -- geometry -----------------------------------------------------------
    @property
    def radius(self) -> float:
        return float(self.breaks[-1])

    @property
    def shape(self):
        return (self.rho.size, self.n_theta)

    def node_coordinates(self):
        """Cartesian node coordinates, each of shape ``self.shape``."""
        r = self.rho[:, None]
        return r * np.cos(self.theta)[None, :], r * np.sin(self.theta)[None, :]

    def integrate(self, f) -> float:
        return float(np.sum(self.area_weights * f))

    def modes(self, f):
        """Angular Fourier coefficients ``f_m(rho)``, shape ``(n_radial, n_modes)``."""
        return np.fft.rfft(np.asarray(f, dtype=float), axis=1) / self.n_theta

    # -- radial kernels -------------------------------------------------------
    def radial_operator(self, log_r):
        """Radial weights for targets at ``exp(log_r)``.

        Returns ``(w_log, w_modes)`` of shapes ``(T, n_radial)`` and
        ``(T, n_modes, n_radial)`` with

            w_log @ g       ~ int rho ln(r_>) g(rho) drho
            w_modes[:, m] @ g ~ int rho (r_< / r_>)^m g(rho) drho.
        """
        log_r = np.atleast_1d(np.asarray(log_r, dtype=float))
        n_t = log_r.size
        n_r = self.rho.size
        m = self._mode_index[:, None]
        w_log = np.empty((n_t, n_r))
        w_modes = np.empty((n_t, self.n_modes, n_r))
        x, w = gauss_legendre(self.order)
        rw = self.rho * self.radial_weights
        r_all = np.exp(log_r)
        panel = np.searchsorted(self.breaks, r_all, side="right") - 1
        for t in range(n_t):
            lr = log_r[t]
            r = r_all[t]
            below = self.log_rho < lr
            w_log[t] = rw * np.where(below, lr, self.log_rho)
            with np.errstate(invalid="ignore", over="ignore"):
                expo = np.where(below, self.log_rho - lr, lr - self.log_rho)
                w_modes[t] = rw[None, :] * np.exp(m * expo[None, :])
            w_modes[t, 0] = 0.0
            p = panel[t]
            if p < 0 or p >= self.breaks.size - 1:
                continue
            a, b = self.breaks[p], self.breaks[p + 1]
            sl = slice(p * self.order, (p + 1) * self.order)
            nodes = self.rho[sl]
            w_log[t, sl] = 0.0
            w_modes[t, :, sl] = 0.0
            for lo, hi, inner in ((a, r, True), (r, b, False)):
                if hi <= lo:
                    continue
                s, ws = self._graded_rule(lo, hi, r, toward_hi=inner)
                ls = np.log(s)
                interp = lagrange_matrix(nodes, s)
                if inner:
                    k_log = np.full_like(s, lr)
                    expo = ls - lr
                else:
                    k_log = ls
                    expo = lr - ls
                w_log[t, sl] += (ws * s * k_log) @ interp
                with np.errstate(under="ignore", invalid="ignore"):
                    k_modes = np.exp(m * expo[None, :]) * (ws * s)[None, :]
                k_modes[0] = 0.0
                w_modes[t, :, sl] += k_modes @ interp
        return w_log, w_modes

    def _graded_rule(self, lo, hi, r, toward_hi):
        """Composite Gauss rule on [lo, hi] graded geometrically toward ``r``.

        The kernels vary on the scale r / n_modes next to the split point
        (and ln(rho) is singular there when r = 0).
        """
        x, w = gauss_legendre(self.order)
        length = hi - lo
        d_min = max(r / (2.0 * self.n_modes), 1e-14 * max(self.breaks[-1], 1.0))
        dists = [length]
        while dists[-1] / 4.0 > d_min:
            dists.append(dists[-1] / 4.0)
        dists.append(0.0)
        pts = []
        for d0, d1 in zip(dists[:-1], dists[1:]):
            if toward_hi:
                pieces = (hi - d0, hi - d1)
            else:
                pieces = (lo + d1, lo + d0)
            pts.append(pieces)
        s = []
        ws = []
        for p0, p1 in pts:
            half = 0.5 * (p1 - p0)
            s.append(p0 + half * (x + 1.0))
            ws.append(half * w)
        return np.concatenate(s), np.concatenate(ws)

    def _combine(self, w_log, w_modes, fhat):
        a0 = w_log @ fhat[:, 0].real
        b = np.einsum("tmr,rm->tm", w_modes, fhat)
        return a0, b

    # -- potentials -------------------------------------------------------------
    def potential_at(self, f, log_r, angle, chunk: int = 256):
        """``-(1/2pi) int ln|x - y| f(y) dy`` at polar targets."""
        fhat = self.modes(f)
        log_r = np.atleast_1d(np.asarray(log_r, dtype=float))
        angle = np.broadcast_to(np.asarray(angle, dtype=float), log_r.shape)
        out = np.empty(log_r.size)
        flat_lr = log_r.ravel()
        flat_an = angle.ravel()
        for start in range(0, flat_lr.size, chunk):
            sl = slice(start, start + chunk)
            w_log, w_modes = self.radial_operator(flat_lr[sl])
            a0, b = self._combine(w_log, w_modes, fhat)
            phase = np.exp(1j * self._mode_index[None, :] * flat_an[sl, None])
            out[sl] = -a0 + np.sum(self._mode_coef * (phase * b).real, axis=1)
        return out.reshape(log_r.shape)

    def potential_exterior(self, f, log_r, angle):
        """Fast multipole form, valid only for targets outside the grid disk."""
        fhat = self.modes(f)
        log_r = np.asarray(log_r, dtype=float)
        angle = np.asarray(angle, dtype=float)
        rw = self.rho * self.radial_weights
        m = self._mode_index
        mass_term = rw @ fhat[:, 0].real
        moments = (rw[:, None] * np.exp(m[None, :] * self.log_rho[:, None]) * fhat).sum(axis=0)
        moments[0] = 0.0
        flat_lr = log_r.ravel()
        flat_an = angle.ravel()
        with np.errstate(under="ignore"):
            decay = np.exp(-m[None, :] * flat_lr[:, None])
        phase = np.exp(1j * m[None, :] * flat_an[:, None])
        terms = (self._mode_coef * (phase * decay * moments[None, :]).real).sum(axis=1)
        return (-mass_term * flat_lr + terms).reshape(log_r.shape)

    def node_operator(self):
        """Radial operator evaluated at the grid's own radii (cached)."""
        if self._node_operator is None:
            self._node_operator = self.radial_operator(self.log_rho)
        return self._node_operator

    def potential_on_nodes(self, f):
        """Potential of ``f`` evaluated at every grid node."""
        fhat = self.modes(f)
        w_log, w_modes = self.node_operator()
        a0, b = self._combine(w_log, w_modes, fhat)
        spec = b * self._mode_coef[None, :] * 0.5 * self.n_theta
        spec[:, 0] = -a0 * self.n_theta
        # Nyquist coefficient already halved in _mode_coef; irfft counts it once
        spec[:, -1] *= 2.0
        return np.fft.irfft(spec, n=self.n_theta, axis=1)

    def radial_error_indicator(self, f) -> float:
        """Spectral tail of the angular mean, summed over panels.

        Uses the last two Legendre coefficients of ``rho * f_0`` on each panel,
        scaled by panel length and the log-kernel magnitude.
        """
        f0 = self.modes(f)[:, 0].real * self.rho
        total = 0.0
        vander = np.polynomial.legendre.legvander(gauss_legendre(self.order)[0], self.order - 1)
        inv = np.linalg.inv(vander)
        for p in range(self.breaks.size - 1):
            sl = slice(p * self.order, (p + 1) * self.order)
            coef = inv @ f0[sl]
            a, b = self.breaks[p], self.breaks[p + 1]
            scale = max(1.0, abs(np.log(max(b, 1e-300))), abs(np.log(max(a, 1e-3))))
            total += (abs(coef[-1]) + abs(coef[-2])) * (b - a) * scale
        return float(total)

    def angular_error_indicator(self, f) -> float:
        """Size of the top quarter of the angular spectrum."""
        fhat = np.abs(self.modes(f))
        top = fhat[:, 3 * self.n_modes // 4 :]
        rw = self.rho * self.radial_weights
        return float(np.sum(rw[:, None] * top))
