"""Deterministic synthetic test images with ground-truth masks."""
from dataclasses import dataclass

import numpy as np

KINDS = ("disk", "disk_textured", "checkerboard", "ramp")


@dataclass(frozen=True)
class PhantomSpec:
    kind: str = "disk"
    size: int = 64
    fg_level: float = 0.9
    bg_level: float = 0.1
    texture_amp: float = 0.3
    texture_period: int = 4
    seed: int = 0  # unused: every kind is deterministic

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}; expected one of {KINDS}")
        if self.size < 16:
            raise ValueError("phantom size must be >= 16")
        if not (0.0 <= self.fg_level <= 1.0 and 0.0 <= self.bg_level <= 1.0):
            raise ValueError("levels must lie in [0, 1]")
        if self.kind.startswith("disk") and self.fg_level == self.bg_level:
            raise ValueError("disk phantoms need fg_level != bg_level")
        if self.texture_period < 1:
            raise ValueError("texture_period must be >= 1")


def disk_mask(size):
    """Centered disk of radius ``size / 4``."""
    c = (size - 1) / 2.0
    yy, xx = np.mgrid[0:size, 0:size]
    return ((xx - c) ** 2 + (yy - c) ** 2 <= (size / 4.0) ** 2).astype(np.int64)


def make_phantom(spec):
    """Return ``(image, ground_truth)`` for ``spec``.

    The ground truth marks the disk for the disk kinds and the right half
    of the grid for checkerboard and ramp.
    """
    n = spec.size
    yy, xx = np.mgrid[0:n, 0:n].astype(np.float64)
    right_half = (xx >= n // 2).astype(np.int64)
    if spec.kind in ("disk", "disk_textured"):
        gt = disk_mask(n)
        bg = np.full((n, n), spec.bg_level)
        if spec.kind == "disk_textured" and spec.texture_amp != 0:
            p = spec.texture_period
            bg = bg + spec.texture_amp * np.sin(2 * np.pi * xx / p) * np.sin(2 * np.pi * yy / p)
            bg = np.clip(bg, 0.0, 1.0)
        img = np.where(gt == 1, spec.fg_level, bg)
    elif spec.kind == "checkerboard":
        cell = max(1, spec.texture_period // 2)
        parity = ((xx // cell + yy // cell) % 2).astype(bool)
        img = np.where(parity, spec.fg_level, spec.bg_level)
        gt = right_half
    else:
        img = spec.bg_level + (spec.fg_level - spec.bg_level) * xx / (n - 1)
        gt = right_half
    return np.ascontiguousarray(img, dtype=np.float64), gt
