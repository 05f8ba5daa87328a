"""Discrete operators on 2D scalar fields.

Images are ``float64`` arrays of shape ``(height, width)``; ``x`` runs along
columns (axis 1) and ``y`` along rows (axis 0).  Out-of-grid values are
defined by replication, so forward differences vanish on the last column
(``grad_x``) or last row (``grad_y``).
"""
import math

import numpy as np
from scipy.ndimage import correlate1d


def as_image(img, *, normalized=True):
    """Validate and convert ``img`` to a 2D float64 array.

    Raises ``ValueError`` for empty, non-2D or non-finite input, and for
    values outside ``[0, 1]`` when ``normalized`` is requested.
    """
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2D image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image must have at least one pixel")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image contains non-finite values")
    if normalized and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("image is not normalized to [0, 1]")
    return arr


def is_normalized(img):
    arr = np.asarray(img)
    return bool(arr.size) and float(arr.min()) >= 0.0 and float(arr.max()) <= 1.0


def grad_x(u):
    """Forward difference along x with replicated boundary."""
    u = np.asarray(u, dtype=np.float64)
    g = np.zeros_like(u)
    g[:, :-1] = u[:, 1:] - u[:, :-1]
    return g


def grad_y(u):
    """Forward difference along y with replicated boundary."""
    u = np.asarray(u, dtype=np.float64)
    g = np.zeros_like(u)
    g[:-1, :] = u[1:, :] - u[:-1, :]
    return g


def grad_x_adjoint(p):
    """Exact adjoint of :func:`grad_x` (a negative divergence).

    Only the first ``width - 1`` columns of ``p`` enter, matching the zero
    last column of ``grad_x``.
    """
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    out[:, :-1] -= p[:, :-1]
    out[:, 1:] += p[:, :-1]
    return out


def grad_y_adjoint(p):
    """Exact adjoint of :func:`grad_y`."""
    p = np.asarray(p, dtype=np.float64)
    out = np.zeros_like(p)
    out[:-1, :] -= p[:-1, :]
    out[1:, :] += p[:-1, :]
    return out


def gradient(u):
    return grad_x(u), grad_y(u)


def neg_laplacian(u):
    """Apply ``-Δ = grad_x^T grad_x + grad_y^T grad_y``."""
    return grad_x_adjoint(grad_x(u)) + grad_y_adjoint(grad_y(u))


def gaussian_kernel(sigma):
    """Sampled 1D Gaussian truncated at ``ceil(3 sigma)`` and normalized."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    radius = max(1, math.ceil(3.0 * sigma))
    k = np.arange(-radius, radius + 1, dtype=np.float64)
    w = np.exp(-0.5 * (k / sigma) ** 2)
    return w / w.sum()


def gaussian_convolve(img, sigma):
    """Separable Gaussian blur with replicate boundary handling."""
    arr = np.asarray(img, dtype=np.float64)
    kernel = gaussian_kernel(sigma)
    out = correlate1d(arr, kernel, axis=0, mode="nearest")
    return correlate1d(out, kernel, axis=1, mode="nearest")
