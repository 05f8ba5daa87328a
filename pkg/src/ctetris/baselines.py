"""Texture-free comparators sharing the ADMM engine: CEN and SpAReg."""
import warnings
from dataclasses import dataclass

import numpy as np

from .decomposition import DEFAULT_SIGMA, reduction_rate
from .imaging import as_image
from .solver import SolverParams, run_admm


@dataclass
class LambdaMap:
    values: np.ndarray
    lambda_min: float
    lambda_max: float

    def __post_init__(self):
        if not 0 < self.lambda_min < self.lambda_max:
            raise ValueError("need 0 < lambda_min < lambda_max")
        self.values = np.asarray(self.values, dtype=np.float64)
        # tolerate one ulp of rounding from the max{} formula
        slack = 1e-12 * self.lambda_max
        if (self.values.min() < self.lambda_min - slack
                or self.values.max() > self.lambda_max + slack):
            raise ValueError("lambda map values outside [lambda_min, lambda_max]")

    @classmethod
    def constant(cls, lam, lambda_max=None):
        return cls(values=np.full((1, 1), float(lam)), lambda_min=float(lam),
                   lambda_max=float(lambda_max or 2.0 * lam))


def segment_cen(f, params=None, callback=None):
    """Convex two-phase segmentation of ``f`` by split Bregman.

    Same engine as :func:`ctetris.solver.segment` with the texture block
    removed; the ``u`` step is a Gauss-Seidel sweep on
    ``-Δ u = -(lam/rho) r + Dx^T (d_x - b_x) + Dy^T (d_y - b_y)``.
    """
    params = params or SolverParams()
    f = as_image(f)
    return run_admm(f, None, params, callback=callback, model="cen")


def build_lambda_map(f, sigma=DEFAULT_SIGMA, lambda_min=0.1, lambda_max=10.0):
    """Per-pixel fidelity weights ``max(lmin/lmax, 1 - rho) * lmax``.

    ``rho`` is the local-TV reduction rate of ``f``, so textured pixels get
    weights near ``lambda_min`` and flat or edge pixels near ``lambda_max``.
    """
    if not 0 < lambda_min < lambda_max:
        raise ValueError("need 0 < lambda_min < lambda_max")
    rho = reduction_rate(as_image(f), sigma)
    values = np.maximum(lambda_min / lambda_max, 1.0 - rho) * lambda_max
    return LambdaMap(values=values, lambda_min=float(lambda_min), lambda_max=float(lambda_max))


def segment_spareg(f, lmap, params=None, callback=None):
    """CEN with the scalar ``lam`` replaced by the per-pixel map ``lmap``."""
    params = params or SolverParams()
    f = as_image(f)
    values = np.asarray(lmap.values, dtype=np.float64)
    if values.shape == (1, 1):
        values = np.full(f.shape, values[0, 0])
    if values.shape != f.shape:
        raise ValueError(f"shape mismatch: image {f.shape} vs lambda map {values.shape}")
    if not lmap.lambda_min <= params.lam < lmap.lambda_max:
        warnings.warn(
            f"lambda range [{lmap.lambda_min}, {lmap.lambda_max}) does not bracket "
            f"the reference lambda {params.lam}", stacklevel=2)
    return run_admm(f, None, params, lam=values, callback=callback, model="spareg")
