"""Seeded noise synthesis at a prescribed SNR or corruption fraction.

SNR is the power ratio ``10 log10(sum f^2 / sum (f - noisy)^2)`` (see
:func:`ctetris.metrics.snr_db`).  Every call draws from its own Philox
stream keyed by ``seed``, so results do not depend on platform, call order
or thread count.
"""
import math
from dataclasses import dataclass

import numpy as np

from .imaging import as_image
from .metrics import snr_db

KINDS = ("gaussian", "poisson", "salt_pepper")
SNR_CONVENTION = "power: 10*log10(sum(f^2)/sum((f-noisy)^2)), no mean removal"


class NoiseCalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    target_snr_db: float | None = None
    fraction: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "salt_pepper":
            if self.fraction is None or self.target_snr_db is not None:
                raise ValueError("salt_pepper noise takes fraction only")
            if not 0.0 < self.fraction < 1.0:
                raise ValueError("fraction must lie in (0, 1)")
        elif self.target_snr_db is None or self.fraction is not None:
            raise ValueError(f"{self.kind} noise takes target_snr_db only")


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=int(seed) & (2**64 - 1)))


def gaussian_sigma(f, target_snr_db):
    """Noise standard deviation giving ``target_snr_db`` in expectation."""
    return math.sqrt(float(np.mean(np.square(f))) / 10.0 ** (target_snr_db / 10.0))


def add_gaussian(f, target_snr_db, seed=0, clip=True):
    """Add i.i.d. zero-mean Gaussian noise; ``inf`` leaves ``f`` unchanged."""
    f = as_image(f)
    if math.isinf(target_snr_db) and target_snr_db > 0:
        return f.copy()
    sigma = gaussian_sigma(f, target_snr_db)
    noisy = f + sigma * _rng(seed).standard_normal(f.shape)
    return np.clip(noisy, 0.0, 1.0) if clip else noisy


def _poisson_at_peak(f, peak, seed):
    return np.clip(_rng(seed).poisson(f * peak) / peak, 0.0, 1.0)


def add_poisson(f, target_snr_db, seed=0, peak_bounds=(1.0, 1e7), tol_db=0.5, max_iter=80):
    """Poisson noise ``Poisson(P f) / P`` with the peak ``P`` bisected (in
    log scale) until the measured SNR is within ``tol_db`` of the target.

    Returns ``(noisy, peak)``.
    """
    f = as_image(f)
    if not np.any(f > 0):
        raise ValueError("Poisson noise needs a non-zero image")
    lo, hi = math.log(peak_bounds[0]), math.log(peak_bounds[1])

    def measured(log_peak):
        noisy = _poisson_at_peak(f, math.exp(log_peak), seed)
        try:
            return snr_db(f, noisy), noisy
        except ValueError:  # noise-free draw
            return math.inf, noisy

    best = None
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        snr, noisy = measured(mid)
        err = abs(snr - target_snr_db)
        if best is None or err < best[0]:
            best = (err, noisy, math.exp(mid))
        if err <= 0.5 * tol_db:
            break
        if snr < target_snr_db:
            lo = mid
        else:
            hi = mid
    if best[0] > tol_db:
        raise NoiseCalibrationError(
            f"target SNR {target_snr_db} dB unreachable with peak in {peak_bounds}")
    return best[1], best[2]


def add_salt_pepper(f, fraction, seed=0):
    """Set ``round(fraction * N)`` distinct pixels to 0 or 1 with equal odds."""
    f = as_image(f)
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in (0, 1)")
    count = int(math.floor(fraction * f.size + 0.5))
    out = f.copy()
    if count == 0:
        return out
    rng = _rng(seed)
    idx = rng.choice(f.size, size=count, replace=False)
    out.flat[idx] = rng.integers(0, 2, size=count).astype(np.float64)
    return out


def apply_noise(f, spec):
    if spec.kind == "gaussian":
        return add_gaussian(f, spec.target_snr_db, spec.seed)
    if spec.kind == "poisson":
        return add_poisson(f, spec.target_snr_db, spec.seed)[0]
    return add_salt_pepper(f, spec.fraction, spec.seed)
