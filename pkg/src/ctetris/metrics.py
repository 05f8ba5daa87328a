"""Partition-comparison measures and global image statistics.

Label maps are integer arrays of the image shape.  Brute-force reference
versions of the partition measures live in the test-suite.
"""
import numpy as np
from scipy.ndimage import distance_transform_edt


class DegenerateSegmentationError(ValueError):
    """Raised when a measure is undefined for the given label maps."""


def _check_pair(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty label map")
    return a, b


def contingency(a, b):
    """Joint label-count table of two label maps."""
    a, b = _check_pair(a, b)
    _, ia = np.unique(a.ravel(), return_inverse=True)
    _, ib = np.unique(b.ravel(), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)
    return table


def _pairs(n):
    n = np.asarray(n, dtype=np.float64)
    return n * (n - 1.0) / 2.0


def rand_index(a, b):
    """Fraction of pixel pairs on which the two labellings agree."""
    table = contingency(a, b)
    n = table.sum()
    total = _pairs(n)
    if total == 0:
        return 1.0
    same_both = _pairs(table).sum()
    same_a = _pairs(table.sum(axis=1)).sum()
    same_b = _pairs(table.sum(axis=0)).sum()
    agree = total + 2.0 * same_both - same_a - same_b
    return float(agree / total)


def gce(a, b):
    """Global consistency error.

    With local refinement error ``E(a, b, p) = |R(a,p) \\ R(b,p)| / |R(a,p)|``,
    returns ``min(sum_p E(a,b,p), sum_p E(b,a,p)) / N``.
    """
    table = contingency(a, b).astype(np.float64)
    n = table.sum()
    size_a = table.sum(axis=1, keepdims=True)
    size_b = table.sum(axis=0, keepdims=True)
    e_ab = (table * (size_a - table) / size_a).sum()
    e_ba = (table * (size_b - table) / size_b).sum()
    return float(min(e_ab, e_ba) / n)


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def voi(a, b):
    """Variation of information ``H(a) + H(b) - 2 I(a, b)``, in nats."""
    table = contingency(a, b).astype(np.float64)
    p = table / table.sum()
    h_a = _entropy(p.sum(axis=1))
    h_b = _entropy(p.sum(axis=0))
    h_ab = _entropy(p.ravel())
    # I = H(a) + H(b) - H(a,b)
    return max(0.0, 2.0 * h_ab - h_a - h_b)


def boundary_map(labels):
    """Pixels whose right or lower neighbour carries a different label."""
    labels = np.asarray(labels)
    bd = np.zeros(labels.shape, dtype=bool)
    bd[:, :-1] |= labels[:, 1:] != labels[:, :-1]
    bd[:-1, :] |= labels[1:, :] != labels[:-1, :]
    return bd


def bde(a, b):
    """Boundary displacement error: symmetrized mean distance from each
    boundary pixel to the nearest boundary pixel of the other map."""
    a, b = _check_pair(a, b)
    bd_a = boundary_map(a)
    bd_b = boundary_map(b)
    if not bd_a.any() or not bd_b.any():
        raise DegenerateSegmentationError("empty boundary: segmentation has a single region")
    dist_to_b = distance_transform_edt(~bd_b)
    dist_to_a = distance_transform_edt(~bd_a)
    d_ab = float(dist_to_b[bd_a].mean())
    d_ba = float(dist_to_a[bd_b].mean())
    return 0.5 * (d_ab + d_ba)


def contrast_metrics(f, classic=False):
    """Return ``(m1, m2)`` with ``m1 = max - min`` and
    ``m2 = (max - mean) / (max + mean)``.

    ``classic=True`` uses the textbook Michelson ``(max - min) / (max + min)``.
    """
    f = np.asarray(f, dtype=np.float64)
    f_max, f_min, f_mean = float(f.max()), float(f.min()), float(f.mean())
    m1 = f_max - f_min
    ref = f_min if classic else f_mean
    if f_max + ref == 0:
        raise ValueError("contrast undefined for an all-zero image")
    return m1, (f_max - ref) / (f_max + ref)


def snr_db(clean, noisy):
    """Power signal-to-noise ratio ``10 log10(sum clean^2 / sum (clean - noisy)^2)``."""
    clean, noisy = _check_pair(clean, noisy)
    clean = clean.astype(np.float64)
    noise = float(np.sum((clean - noisy.astype(np.float64)) ** 2))
    if noise == 0:
        raise ValueError("images are identical: SNR is infinite")
    return 10.0 * np.log10(float(np.sum(clean ** 2)) / noise)
