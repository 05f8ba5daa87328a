"""ADMM solver for joint cartoon-texture evolution and two-region segmentation.

The cartoon ``ubar`` is split as ``ubar = u + v``: ``u`` is segmented with the
convex two-phase (CEN) energy, anisotropic TV plus a linear region term,
while ``v`` is tied to the reference texture ``vbar`` by a KL divergence.
The iteration works on the split variables ``d_x = grad_x u``,
``d_y = grad_y u`` and their scaled multipliers ``b_x, b_y, b_v``.  The
region centroids are refreshed after every step.

Switching the texture block off (``vbar=None``) gives the plain split-Bregman
CEN solver; passing a per-pixel ``lam`` array gives SpAReg.
"""
import csv
from dataclasses import dataclass, field, replace

import numpy as np

from .imaging import as_image, grad_x, grad_x_adjoint, grad_y, grad_y_adjoint
from .prox import ProxConfig, gauss_seidel_sweep, kl_prox, project_box, soft_threshold

EPS_CENTROID = 1e-12
TRACE_COLUMNS = ("iter", "objective", "res_x", "res_y", "res_v", "diff", "c_in", "c_out")


@dataclass(frozen=True)
class SolverParams:
    """Tunables of the segmentation solvers.

    ``lam`` weights the region term, ``mu`` the KL term and ``rho`` the
    augmented-Lagrangian penalty.  Iteration stops once the mean squared
    per-pixel change of ``u`` stagnates to within ``tol`` or after
    ``maxit`` steps.  The final mask is ``u > alpha``.
    """

    lam: float = 1.0
    mu: float = 0.1
    rho: float = 1.0
    tol: float = 1e-6
    maxit: int = 50
    alpha: float = 0.5
    gs_sweeps: int = 1
    prox: ProxConfig = field(default_factory=ProxConfig)

    def __post_init__(self):
        if not (self.lam > 0 and self.mu > 0 and self.rho > 0):
            raise ValueError("lam, mu and rho must be positive")
        if not self.tol >= 0:
            raise ValueError("tol must be nonnegative")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.maxit < 1 or self.gs_sweeps < 1:
            raise ValueError("maxit and gs_sweeps must be >= 1")


@dataclass
class AdmmState:
    u: np.ndarray
    dx: np.ndarray
    dy: np.ndarray
    bx: np.ndarray
    by: np.ndarray
    c_in: float
    c_out: float
    v: np.ndarray | None = None
    bv: np.ndarray | None = None
    iter: int = 0

    @property
    def has_texture(self):
        return self.v is not None

    def copy(self):
        return replace(
            self,
            **{k: getattr(self, k).copy() for k in ("u", "dx", "dy", "bx", "by")},
            v=None if self.v is None else self.v.copy(),
            bv=None if self.bv is None else self.bv.copy(),
        )

    def multipliers(self, rho):
        """Unscaled Lagrange multipliers ``xi = rho * b`` (diagnostics only)."""
        out = {"xi_x": rho * self.bx, "xi_y": rho * self.by}
        if self.bv is not None:
            out["xi_v"] = -rho * self.bv
        return out


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    objective: float
    res_x: float
    res_y: float
    res_v: float
    diff: float
    c_in: float
    c_out: float
    # sum of squared changes of u; the raw quantity behind ``diff``
    sd: float


@dataclass
class SegmentationResult:
    u: np.ndarray
    mask: np.ndarray
    c_in: float
    c_out: float
    iterations: int
    trace: list
    v: np.ndarray | None = None
    model: str = "ctetris"

    def write_trace_csv(self, path):
        with open(path, "w", newline="") as fh:
            write_trace(self.trace, fh)


def write_trace(trace, fh):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for rec in trace:
        writer.writerow([rec.iter] + [repr(float(getattr(rec, c))) for c in TRACE_COLUMNS[1:]])


def residual_field(c_in, c_out, ubar):
    """Region term coefficients ``(c_in - ubar)^2 - (c_out - ubar)^2``."""
    ubar = np.asarray(ubar, dtype=np.float64)
    return (c_in - ubar) ** 2 - (c_out - ubar) ** 2


def update_centroids(u, ubar, prev=None, eps=EPS_CENTROID):
    """Exact minimizers of the region term in ``(c_in, c_out)``.

    A centroid whose weight sum falls below ``eps`` keeps its value from
    ``prev`` (or becomes NaN when no previous value is given).
    """
    u = np.asarray(u, dtype=np.float64)
    ubar = np.asarray(ubar, dtype=np.float64)
    w_in = float(u.sum())
    w_out = float((1.0 - u).sum())
    prev_in, prev_out = prev if prev is not None else (np.nan, np.nan)
    c_in = float((u * ubar).sum()) / w_in if w_in >= eps else prev_in
    c_out = float(((1.0 - u) * ubar).sum()) / w_out if w_out >= eps else prev_out
    return c_in, c_out


def initial_centroids(ubar, alpha):
    """Region means of ``ubar`` thresholded at ``alpha``.

    Falls back to ``(max, min)`` of ``ubar`` when a region is empty.
    """
    inside = ubar > alpha
    if inside.all() or not inside.any():
        return float(ubar.max()), float(ubar.min())
    return float(ubar[inside].mean()), float(ubar[~inside].mean())


def update_u(state, r, params, ubar, lam=None):
    """Approximate ``u``-subproblem solve.

    Runs ``params.gs_sweeps`` Gauss-Seidel sweeps, warm-started at
    ``state.u``, on the optimality system

        (-Δ + I) u = -(lam/rho) r + Dx^T (d_x - b_x) + Dy^T (d_y - b_y) + (ubar - v - b_v)

    and projects onto ``[0, 1]``.  Without a texture block the identity and
    the last term drop out.
    """
    lam = params.lam if lam is None else lam
    rhs = -(lam * r) / params.rho
    rhs = rhs + grad_x_adjoint(state.dx - state.bx) + grad_y_adjoint(state.dy - state.by)
    shift = 0.0
    if state.has_texture:
        rhs = rhs + (ubar - state.v - state.bv)
        shift = 1.0
    u = np.array(state.u, dtype=np.float64, order="C", copy=True)
    gauss_seidel_sweep(u, rhs, params.gs_sweeps, shift)
    return project_box(u)


def admm_step(state, params, ubar, vbar_floored=None, lam=None):
    """One ADMM iteration followed by a centroid refresh; returns a new state."""
    ubar = np.asarray(ubar, dtype=np.float64)
    r = residual_field(state.c_in, state.c_out, ubar)
    u = update_u(state, r, params, ubar, lam)
    gx, gy = grad_x(u), grad_y(u)
    thresh = 1.0 / params.rho
    dx = soft_threshold(gx + state.bx, thresh)
    dy = soft_threshold(gy + state.by, thresh)
    bx = state.bx + gx - dx
    by = state.by + gy - dy
    v = bv = None
    if state.has_texture:
        v = kl_prox(ubar - u - state.bv, vbar_floored, params.mu / params.rho, params.prox)
        bv = state.bv + u + v - ubar
    c_in, c_out = update_centroids(u, ubar, prev=(state.c_in, state.c_out))
    return AdmmState(u=u, dx=dx, dy=dy, bx=bx, by=by, c_in=c_in, c_out=c_out,
                     v=v, bv=bv, iter=state.iter + 1)


def objective(state, params, ubar, vbar=None, lam=None):
    """Anisotropic TV + region term (+ ``mu`` times KL divergence).

    ``vbar`` is floored at ``params.prox.eps_kl``; ``0 log 0`` counts as 0.
    """
    lam = params.lam if lam is None else lam
    u = state.u
    ubar = np.asarray(ubar, dtype=np.float64)
    tv = np.abs(grad_x(u)).sum() + np.abs(grad_y(u)).sum()
    region = (u * (state.c_in - ubar) ** 2 + (1.0 - u) * (state.c_out - ubar) ** 2)
    total = float(tv) + float(np.sum(lam * region))
    if state.has_texture and vbar is not None:
        vb = np.maximum(np.asarray(vbar, dtype=np.float64), params.prox.eps_kl)
        v = state.v
        safe = np.where(v > 0, v, 1.0)
        kl = np.where(v > 0, v * np.log(safe / vb), 0.0)
        total += params.mu * float(kl.sum())
    return total


def primal_residuals(state, ubar):
    u = state.u
    res_x = float(np.linalg.norm(grad_x(u) - state.dx))
    res_y = float(np.linalg.norm(grad_y(u) - state.dy))
    res_v = float(np.linalg.norm(u + state.v - ubar)) if state.has_texture else 0.0
    return res_x, res_y, res_v


def initial_state(ubar, vbar_floored, params):
    u0 = np.array(ubar, dtype=np.float64, order="C", copy=True)
    zeros = np.zeros_like(u0)
    c_in, c_out = initial_centroids(u0, params.alpha)
    state = AdmmState(u=u0, dx=zeros.copy(), dy=zeros.copy(), bx=zeros.copy(),
                      by=zeros.copy(), c_in=c_in, c_out=c_out)
    if vbar_floored is not None:
        state.v = np.array(vbar_floored, dtype=np.float64, copy=True)
        state.bv = zeros.copy()
    return state


def run_admm(ubar, vbar, params, lam=None, callback=None, model="ctetris"):
    """Shared iteration engine behind :func:`segment` and the baselines.

    Parameters
    ----------
    ubar : ndarray
        Image (or cartoon) to segment.
    vbar : ndarray or None
        Reference texture; ``None`` disables the texture block.
    params : SolverParams
    lam : float or ndarray, optional
        Region-term weight overriding ``params.lam``.
    callback : callable, optional
        Called as ``callback(state, record)`` after every iteration.
    """
    ubar = as_image(ubar, normalized=False)
    vbar_floored = None
    if vbar is not None:
        vbar = np.asarray(vbar, dtype=np.float64)
        if vbar.shape != ubar.shape:
            raise ValueError(f"shape mismatch: ubar {ubar.shape} vs vbar {vbar.shape}")
        if not np.all(np.isfinite(vbar)):
            raise ValueError("vbar contains non-finite values")
        vbar_floored = np.maximum(vbar, params.prox.eps_kl)
    if lam is not None and np.ndim(lam) and np.shape(lam) != ubar.shape:
        raise ValueError("lambda map shape does not match the image")

    state = initial_state(ubar, vbar_floored, params)
    n = ubar.size
    trace = []
    prev_diff = None
    while True:
        new = admm_step(state, params, ubar, vbar_floored, lam)
        sd = float(np.sum((new.u - state.u) ** 2))
        diff = sd / n
        res_x, res_y, res_v = primal_residuals(new, ubar)
        rec = IterationRecord(
            iter=new.iter,
            objective=objective(new, params, ubar, vbar_floored, lam),
            res_x=res_x, res_y=res_y, res_v=res_v, diff=diff,
            c_in=new.c_in, c_out=new.c_out, sd=sd,
        )
        trace.append(rec)
        state = new
        if callback is not None:
            callback(state, rec)
        if new.iter >= params.maxit:
            break
        if prev_diff is not None and abs(diff - prev_diff) <= params.tol:
            break
        prev_diff = diff

    mask = (state.u > params.alpha).astype(np.uint8)
    return SegmentationResult(u=state.u, mask=mask, c_in=state.c_in, c_out=state.c_out,
                              iterations=state.iter, trace=trace, v=state.v, model=model)


def segment(ubar, vbar, params=None, callback=None):
    """Segment the cartoon ``ubar`` while evolving the texture towards ``vbar``.

    Starts from ``u = ubar``, ``v = max(vbar, eps_kl)``, zero splits and
    multipliers, and centroids of ``ubar`` thresholded at ``alpha``.
    """
    params = params or SolverParams()
    ubar = as_image(ubar)
    if vbar is None:
        raise ValueError("vbar is required; use baselines.segment_cen for the texture-free model")
    return run_admm(ubar, vbar, params, callback=callback, model="ctetris")
