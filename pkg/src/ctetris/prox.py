"""Pixelwise proximal maps and the inner linear solver of the ADMM iteration."""
import math
from dataclasses import dataclass

import numpy as np

from ._kernels import get_sweep

_INV_E = math.exp(-1.0)


@dataclass(frozen=True)
class ProxConfig:
    """Numerical guards for the KL proximal map.

    Attributes
    ----------
    eps_kl : float
        Floor applied to the reference texture before taking logs.
    lambert_tol : float
        Relative step tolerance of the Halley iteration.
    lambert_max_iter : int
        Iteration cap for the Halley iteration.
    """

    eps_kl: float = 1e-6
    lambert_tol: float = 1e-12
    lambert_max_iter: int = 50

    def __post_init__(self):
        if not (self.eps_kl > 0 and self.lambert_tol > 0 and self.lambert_max_iter > 0):
            raise ValueError("ProxConfig fields must be strictly positive")


def soft_threshold(x, gamma):
    """``sign(x) * max(|x| - gamma, 0)``, elementwise."""
    if np.any(np.asarray(gamma) < 0):
        raise ValueError("gamma must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    out = np.sign(x) * np.maximum(np.abs(x) - gamma, 0.0)
    return out if out.ndim else float(out)


def project_box(x, lo=0.0, hi=1.0):
    x = np.asarray(x, dtype=np.float64)
    out = np.clip(x, lo, hi)
    return out if out.ndim else float(out)


def _halley_w(y, w, tol, max_iter):
    """Refine ``w`` towards W(y) in place with Halley steps on ``w e^w - y``."""
    active = np.ones(w.shape, dtype=bool)
    for _ in range(max_iter):
        if not active.any():
            break
        wa = w[active]
        ya = y[active]
        ew = np.exp(wa)
        f = wa * ew - ya
        wp1 = wa + 1.0
        denom = ew * wp1 - (wa + 2.0) * f / (2.0 * wp1)
        step = np.divide(f, denom, out=np.zeros_like(f), where=denom != 0)
        w[active] = wa - step
        done = np.abs(step) <= tol * (1.0 + np.abs(wa))
        idx = np.flatnonzero(active)
        active[idx[done]] = False
    return w


def lambert_w0(y, tol=1e-12, max_iter=50):
    """Principal branch of the Lambert W function for real ``y >= -1/e``.

    Initial guesses: a branch-point series for ``y < -0.25``, ``log1p(y)``
    for moderate ``y`` and the asymptotic ``L1 - L2 + L2/L1`` for
    ``y >= 3``; Halley iterations refine the guess.
    """
    y_arr = np.asarray(y, dtype=np.float64)
    scalar = y_arr.ndim == 0
    y_arr = np.atleast_1d(y_arr).copy()
    if np.any(np.isnan(y_arr)):
        raise ValueError("lambert_w0 of NaN")
    # tolerate rounding just below the branch point
    near = (y_arr < -_INV_E) & (y_arr >= -_INV_E - 1e-15)
    if np.any(y_arr < -_INV_E - 1e-15):
        raise ValueError("lambert_w0 is undefined below -1/e")
    y_arr[near] = -_INV_E

    w = np.empty_like(y_arr)
    branch = y_arr < -0.25
    big = y_arr >= 3.0
    mid = ~(branch | big)
    p = np.sqrt(np.maximum(2.0 * (math.e * y_arr[branch] + 1.0), 0.0))
    w[branch] = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    w[mid] = np.log1p(y_arr[mid])
    l1 = np.log(y_arr[big])
    l2 = np.log(l1)
    w[big] = l1 - l2 + l2 / l1
    inf = np.isinf(y_arr)
    w[inf] = np.inf
    branch_point = y_arr == -_INV_E
    w[branch_point] = -1.0
    todo = ~(inf | branch_point)
    if todo.any():
        wf = w[todo]
        _halley_w(y_arr[todo], wf, tol, max_iter)
        w[todo] = wf
    return float(w[0]) if scalar else w.reshape(np.shape(y))


def lambert_w0_exp(t, tol=1e-12, max_iter=50):
    """``W(exp(t))`` without forming ``exp(t)``.

    For ``t > 1`` solves ``w + log(w) = t`` by Halley's method, which stays
    accurate when ``exp(t)`` would overflow.
    """
    t = np.asarray(t, dtype=np.float64)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    w = np.empty_like(t)
    small = t <= 1.0
    if small.any():
        w[small] = lambert_w0(np.exp(t[small]), tol, max_iter)
    large = ~small
    if large.any():
        tl = t[large]
        wl = tl - np.log(tl)
        active = np.ones(tl.shape, dtype=bool)
        for _ in range(max_iter):
            if not active.any():
                break
            wa = wl[active]
            ta = tl[active]
            h = wa + np.log(wa) - ta
            d1 = 1.0 + 1.0 / wa
            d2 = -1.0 / (wa * wa)
            step = h / (d1 - 0.5 * h * d2 / d1)
            wn = np.maximum(wa - step, 0.5 * wa)
            wl[active] = wn
            done = np.abs(wn - wa) <= tol * (1.0 + np.abs(wa))
            idx = np.flatnonzero(active)
            active[idx[done]] = False
        w[large] = wl
    return float(w[0]) if scalar else w


def kl_prox(x, vbar, gamma, cfg=None):
    """Proximal map of ``gamma * v log(v / vbar)``, pixelwise.

    Returns the minimizer over ``v > 0`` of
    ``gamma * v * log(v / vbar) + (v - x)**2 / 2``.  Setting the derivative
    to zero gives ``v = gamma * W((vbar / gamma) * exp(x / gamma - 1))``,
    evaluated here in the log domain.

    Parameters
    ----------
    x : array_like
        Prox argument.
    vbar : array_like
        Reference field; floored at ``cfg.eps_kl``.
    gamma : float
        Positive prox weight.
    cfg : ProxConfig, optional
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    cfg = cfg or ProxConfig()
    x, vb = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                                np.maximum(np.asarray(vbar, dtype=np.float64), cfg.eps_kl))
    log_arg = np.log(vb / gamma) + x / gamma - 1.0
    w = lambert_w0_exp(log_arg, cfg.lambert_tol, cfg.lambert_max_iter)
    # deep underflow still has to stay in the open domain v > 0
    v = np.maximum(gamma * np.asarray(w), np.finfo(np.float64).tiny)
    return v if v.ndim else float(v)


def gauss_seidel_sweep(u, rhs, sweeps=1, shift=1.0, backend=None):
    """Lexicographic Gauss-Seidel sweeps for ``(-Δ + shift I) u = rhs``.

    ``-Δ`` is the replicate-boundary 5-point Laplacian (interior degree 4,
    edges 3, corners 2).  ``u`` is updated in place and also returned; it
    must be a C-contiguous float64 array.
    """
    if u.shape != rhs.shape:
        raise ValueError(f"shape mismatch: u {u.shape} vs rhs {rhs.shape}")
    if sweeps < 1:
        raise ValueError("sweeps must be >= 1")
    if u.dtype != np.float64 or not u.flags.c_contiguous or not u.flags.writeable:
        raise ValueError("u must be a writeable C-contiguous float64 array")
    rhs = np.ascontiguousarray(rhs, dtype=np.float64)
    get_sweep(backend)(u, rhs, int(sweeps), float(shift))
    return u
