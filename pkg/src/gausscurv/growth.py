"""The fixed radial growth profile ``w0`` and its Laplacian.

``w0 = ln r`` outside the unit disk. Inside, ``w0`` is the third-order Taylor
polynomial of ``(1/2) ln(r^2)`` about ``r^2 = 1``; this matches value, slope,
and the next two derivatives at ``r = 1`` and gives the closed form

    Laplacian(w0) = 6 (1 - r^2)^2   for r < 1,

whose integral over the disk is exactly ``2 pi``.
"""

import numpy as np

__all__ = ["w0", "w0_derivative", "laplacian_w0", "W0_AT_ORIGIN"]

W0_AT_ORIGIN = -11.0 / 12.0


def w0(r):
    r = np.asarray(r, dtype=float)
    s = r * r - 1.0
    inner = s / 2.0 - s * s / 4.0 + s**3 / 6.0
    with np.errstate(divide="ignore"):
        outer = np.log(np.where(r >= 1.0, r, 1.0))
    return np.where(r >= 1.0, outer, inner)


def w0_derivative(r):
    """Radial derivative ``dw0/dr``."""
    r = np.asarray(r, dtype=float)
    s = r * r - 1.0
    inner = 2.0 * r * (0.5 - s / 2.0 + s * s / 2.0)
    safe = np.where(r >= 1.0, r, 1.0)
    return np.where(r >= 1.0, 1.0 / safe, inner)


def laplacian_w0(r):
    r = np.asarray(r, dtype=float)
    return np.where(r < 1.0, 6.0 * (1.0 - r * r) ** 2, 0.0)
