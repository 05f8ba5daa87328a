"""Cartoon-texture decomposition driven by the local-TV reduction rate.

A pixel whose locally averaged gradient magnitude drops sharply under
Gaussian smoothing is considered texture and replaced by its blurred value;
pixels where smoothing barely changes local TV keep their original value.
"""
from dataclasses import dataclass, field

import numpy as np

from .imaging import as_image, gaussian_convolve, grad_x, grad_y

DEFAULT_SIGMA = 2.0
DEFAULT_L1 = 0.25
DEFAULT_L2 = 0.5
EPS_LTV = 1e-8


@dataclass
class Decomposition:
    """Result of :func:`decompose`.

    ``texture`` is signed; ``cartoon + texture`` reproduces the source.
    ``rho`` is the reduction rate from the last decomposition step and
    ``step_texture_norms`` holds the l2 norm of the texture removed at each
    step.
    """

    cartoon: np.ndarray
    texture: np.ndarray
    sigma: float
    rho: np.ndarray
    step_texture_norms: list = field(default_factory=list)


def gradient_magnitude(img):
    gx = grad_x(img)
    gy = grad_y(img)
    return np.sqrt(gx * gx + gy * gy)


def local_tv(img, sigma):
    """Gaussian-smoothed pointwise gradient magnitude."""
    return gaussian_convolve(gradient_magnitude(img), sigma)


def reduction_rate(img, sigma, eps=EPS_LTV):
    """Relative reduction of local TV under smoothing, in ``[0, 1]``.

    The numerator is clamped to ``[0, LTV(img)]`` and flat pixels
    (``LTV < eps``) get rate 0.
    """
    img = np.asarray(img, dtype=np.float64)
    ltv = local_tv(img, sigma)
    ltv_smooth = local_tv(gaussian_convolve(img, sigma), sigma)
    num = np.clip(ltv - ltv_smooth, 0.0, ltv)
    flat = ltv < eps
    rho = np.divide(num, ltv, out=np.zeros_like(ltv), where=~flat)
    return np.clip(rho, 0.0, 1.0)


def omega(x, l1=DEFAULT_L1, l2=DEFAULT_L2):
    """Piecewise-linear ramp: 0 below ``l1``, 1 above ``l2``."""
    if not l1 < l2:
        raise ValueError(f"need l1 < l2, got l1={l1}, l2={l2}")
    x = np.asarray(x, dtype=np.float64)
    out = np.clip((x - l1) / (l2 - l1), 0.0, 1.0)
    return out if out.ndim else float(out)


def decompose(img, sigma=DEFAULT_SIGMA, l1=DEFAULT_L1, l2=DEFAULT_L2, iterations=1):
    """Split ``img`` into cartoon and texture.

    Parameters
    ----------
    img : array_like
        Normalized grayscale image.
    sigma : float
        Standard deviation of the Gaussian low-pass filter.
    l1, l2 : float
        Thresholds of the ramp mapping reduction rate to blending weight.
    iterations : int
        Number of times the step is applied; each step decomposes the
        previous cartoon.

    Returns
    -------
    Decomposition
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not 0.0 <= l1 < l2 <= 1.0:
        raise ValueError("need 0 <= l1 < l2 <= 1")
    source = as_image(img)
    cartoon = source
    rho = np.zeros_like(source)
    norms = []
    for _ in range(iterations):
        rho = reduction_rate(cartoon, sigma)
        w = omega(rho, l1, l2)
        blurred = gaussian_convolve(cartoon, sigma)
        new_cartoon = w * blurred + (1.0 - w) * cartoon
        norms.append(float(np.linalg.norm(cartoon - new_cartoon)))
        cartoon = new_cartoon
    texture = source - cartoon
    return Decomposition(cartoon=cartoon, texture=texture, sigma=float(sigma),
                         rho=rho, step_texture_norms=norms)
