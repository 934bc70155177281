"""Constrained empirical hinge-loss minimization by projected subgradient descent."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError
from .kernels import as_vector, l1_ball, l2_ball, project_intersection


@dataclass(frozen=True)
class ConstraintSet:
    """{w : ||w - center||_2 <= l2_radius and ||w - center||_1 <= l1_radius}."""

    center: np.ndarray
    l2_radius: float
    l1_radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not (self.l2_radius > 0 and self.l1_radius > 0):
            raise ParameterError("constraint radii must be positive")
        if self.l1_radius < self.l2_radius:
            raise ParameterError("l1 radius must be at least the l2 radius")

    def project(self, v: np.ndarray, method: str = "exact") -> np.ndarray:
        return project_intersection(
            v,
            l2_ball(self.center, self.l2_radius),
            l1_ball(self.center, self.l1_radius),
            method=method,
        )

    def slack(self, w: np.ndarray) -> tuple[float, float]:
        """Relative constraint violations (<= 0 means feasible)."""
        diff = w - self.center
        return (
            float(np.linalg.norm(diff)) / self.l2_radius - 1.0,
            float(np.abs(diff).sum()) / self.l1_radius - 1.0,
        )

    def contains(self, w: np.ndarray, rel_tol: float = 1e-6) -> bool:
        s2, s1 = self.slack(w)
        return s2 <= rel_tol and s1 <= rel_tol


@dataclass(frozen=True)
class SolverOptions:
    iterations: int = 2000
    gap_tolerance: float = 1e-4
    step_constant: float = 1.0
    check_every: int = 50
    projection: str = "exact"
    keep_trace: bool = True


@dataclass
class SolverReport:
    iterate: np.ndarray
    iterations: int
    final_loss: float
    converged: bool
    loss_trace: list = field(default_factory=list)


def _check_sample(X, y, tau):
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.shape[0] == 0 or y.shape[0] == 0:
        raise ParameterError("sample is empty")
    if X.shape[0] != y.shape[0]:
        raise ParameterError("X and y have different lengths")
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    return X, y


def empirical_hinge(X, y, w, tau: float) -> float:
    """Mean tau-hinge loss of ``w`` over the sample."""
    X, y = _check_sample(X, y, tau)
    return float(np.mean(np.maximum(0.0, 1.0 - y * (X @ w) / tau)))


def minimize_hinge(X, y, cons: ConstraintSet, tau: float, opts: SolverOptions | None = None) -> SolverReport:
    """Approximately minimize the mean tau-hinge loss over ``cons``.

    Full-batch projected subgradient descent from the constraint center with
    normalized steps ``step_constant * r / (sqrt(i) * ||g_i||)``. Every
    ``check_every`` iterations the average of the latest half of the iterates
    is evaluated. The returned point is the best of all iterates and averages
    seen, so extending the run never makes the result worse.
    """
    opts = opts or SolverOptions()
    X, y = _check_sample(X, y, tau)
    n = X.shape[0]
    yX = X * (y / tau)[:, None]

    def loss_of(w):
        return float(np.mean(np.maximum(0.0, 1.0 - yX @ w)))

    half = max(opts.check_every // 2, 1)
    w = cons.center.copy()
    best_w, best_loss = w, math.inf
    prefix = np.zeros_like(w)
    saved_prefix = {0: prefix.copy()}
    trace = []
    last_avg_loss = math.inf
    it = 0
    for it in range(1, opts.iterations + 1):
        margins = 1.0 - yX @ w
        active = margins > 0.0
        loss = float(np.sum(margins[active])) / n
        if loss < best_loss:
            best_w, best_loss = w, loss
        if not np.any(active):
            # zero subgradient: w is optimal
            break
        g = -(active.astype(np.float64) @ yX) / n
        gnorm = float(np.linalg.norm(g))
        if gnorm == 0.0:
            break
        step = opts.step_constant * cons.l2_radius / (math.sqrt(it) * gnorm)
        w = cons.project(w - step * g, method=opts.projection)
        prefix = prefix + w
        if it % half == 0:
            saved_prefix[it] = prefix.copy()
        if it % (2 * half) == 0:
            avg = (prefix - saved_prefix[it // 2]) / (it - it // 2)
            last_avg_loss = loss_of(avg)
            if opts.keep_trace:
                trace.append(last_avg_loss)
            if last_avg_loss < best_loss:
                best_w, best_loss = avg, last_avg_loss
    final_w_loss = loss_of(w)
    if final_w_loss < best_loss:
        best_w, best_loss = w, final_w_loss
    if it < opts.iterations:
        converged = True
    else:
        reference = last_avg_loss if math.isfinite(last_avg_loss) else final_w_loss
        converged = reference <= best_loss + opts.gap_tolerance
    return SolverReport(
        iterate=np.array(best_w, copy=True),
        iterations=it,
        final_loss=best_loss,
        converged=bool(converged),
        loss_trace=trace,
    )
