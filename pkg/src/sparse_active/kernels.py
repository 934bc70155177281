"""Dense vector primitives: hard thresholding, ball projections, angles, hinge loss.

Vectors are plain 1-D float64 numpy arrays. Every function here is pure.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, ParameterError, ProjectionConvergenceWarning

DYKSTRA_TOL = 1e-9
DYKSTRA_MAX_ITER = 10_000


class NormKind(enum.Enum):
    L1 = "l1"
    L2 = "l2"


def as_vector(v, d: int | None = None) -> np.ndarray:
    """Coerce to a finite 1-D float64 array, optionally checking its length."""
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ParameterError(f"expected a 1-D vector, got shape {arr.shape}")
    if d is not None and arr.shape[0] != d:
        raise ParameterError(f"expected dimension {d}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("vector has non-finite entries")
    return arr


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    norm_kind: NormKind

    def __post_init__(self):
        object.__setattr__(self, "center", as_vector(self.center))
        if not self.radius >= 0:
            raise ParameterError(f"ball radius must be >= 0, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def distance(self, v: np.ndarray) -> float:
        diff = v - self.center
        if self.norm_kind is NormKind.L1:
            return float(np.abs(diff).sum())
        return float(np.linalg.norm(diff))

    def contains(self, v: np.ndarray, slack: float = 0.0) -> bool:
        return self.distance(v) <= self.radius + slack


def l2_ball(center, radius: float) -> Ball:
    return Ball(center, radius, NormKind.L2)


def l1_ball(center, radius: float) -> Ball:
    return Ball(center, radius, NormKind.L1)


def hard_threshold(v, s: int) -> np.ndarray:
    """Keep the ``s`` largest-magnitude entries of ``v``; zero the rest.

    Ties in magnitude go to the lower index.
    """
    v = as_vector(v)
    d = v.shape[0]
    if not (1 <= s <= d):
        raise ParameterError(f"sparsity s must satisfy 1 <= s <= {d}, got {s}")
    # stable sort keeps lower indices first among equal magnitudes
    keep = np.argsort(-np.abs(v), kind="stable")[:s]
    out = np.zeros_like(v)
    out[keep] = v[keep]
    return out


def normalize(v) -> np.ndarray:
    v = as_vector(v)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegenerateInputError("cannot normalize the zero vector")
    return v / norm


def angle(w, v) -> float:
    """Angle in radians between two nonzero vectors, in [0, pi]."""
    w = as_vector(w)
    v = as_vector(v, w.shape[0])
    nw, nv = np.linalg.norm(w), np.linalg.norm(v)
    if nw == 0.0 or nv == 0.0:
        raise DegenerateInputError("angle is undefined for a zero vector")
    cos = np.dot(w / nw, v / nv)
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def hinge_loss(w, x, y: int, tau: float) -> float:
    """tau-scaled hinge loss (1 - y w.x / tau)_+."""
    if not tau > 0:
        raise ParameterError(f"tau must be positive, got {tau}")
    return max(0.0, 1.0 - y * float(np.dot(w, x)) / tau)


def project_l2(v, ball: Ball) -> np.ndarray:
    v = as_vector(v, ball.dim)
    if not ball.radius > 0:
        raise ParameterError("projection needs a positive radius")
    diff = v - ball.center
    dist = np.linalg.norm(diff)
    if dist <= ball.radius:
        return v
    return ball.center + diff * (ball.radius / dist)


def _l1_threshold(mags: np.ndarray, radius: float) -> float:
    """Soft threshold that brings a nonnegative vector's l1 norm down to ``radius``.

    Assumes ``mags.sum() > radius``.
    """
    srt = np.sort(mags)[::-1]
    cums = np.cumsum(srt) - radius
    idx = np.arange(1, srt.shape[0] + 1)
    cand = cums / idx
    rho = np.nonzero(srt > cand)[0][-1]
    return max(float(cand[rho]), 0.0)


def project_l1(v, ball: Ball) -> np.ndarray:
    """Euclidean projection onto an l1 ball via the sort-based soft threshold."""
    v = as_vector(v, ball.dim)
    if not ball.radius > 0:
        raise ParameterError("projection needs a positive radius")
    diff = v - ball.center
    mags = np.abs(diff)
    if mags.sum() <= ball.radius:
        return v
    lam = _l1_threshold(mags, ball.radius)
    return ball.center + np.sign(diff) * np.maximum(mags - lam, 0.0)


def _check_pair(l2: Ball, l1: Ball) -> None:
    if l2.norm_kind is not NormKind.L2 or l1.norm_kind is not NormKind.L1:
        raise ParameterError("expected an (L2, L1) ball pair")
    if not (l2.radius > 0 and l1.radius > 0):
        raise ParameterError("both radii must be positive")
    if l2.dim != l1.dim or not np.array_equal(l2.center, l1.center):
        raise ParameterError("balls must share the same center")


def _dykstra(v, l2: Ball, l1: Ball, tol: float, max_iter: int) -> np.ndarray:
    # The stopping rule watches the whole state (x, p, q). Watching x alone
    # stops early when v is far away: x creeps while the increments still drift.
    x = v
    p = np.zeros_like(v)
    q = np.zeros_like(v)
    for _ in range(max_iter):
        y = project_l2(x + p, l2)
        p_new = x + p - y
        x_new = project_l1(y + q, l1)
        q_new = y + q - x_new
        moved = np.linalg.norm(x_new - x) + np.linalg.norm(p_new - p) + np.linalg.norm(q_new - q)
        x, p, q = x_new, p_new, q_new
        if moved < tol:
            return x
    warnings.warn(
        ProjectionConvergenceWarning(
            f"Dykstra projection hit {max_iter} iterations without converging",
            iterate=x,
            iterations=max_iter,
        ),
        stacklevel=3,
    )
    return x


def _intersection_exact(v, l2: Ball, l1: Ball) -> np.ndarray:
    """Closed-form projection when both constraints are active.

    The minimizer has the form c + r * soft(v - c, lam) / ||soft(v - c, lam)||_2,
    with lam chosen so that the l1/l2 ratio of the soft-thresholded vector equals
    rho / r. On each segment of the sorted magnitudes that ratio equation is a
    quadratic in lam.
    """
    diff = v - l2.center
    mags = np.abs(diff)
    r, rho = l2.radius, l1.radius
    q2 = (rho / r) ** 2
    a = np.sort(mags)[::-1]
    m = np.arange(1, a.shape[0] + 1, dtype=np.float64)
    A = np.cumsum(a)
    B = np.cumsum(a * a)
    lower = np.append(a[1:], 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = (m * B - A * A) / (m - q2)
        lam = (A - np.sqrt(q2 * np.maximum(disc, 0.0))) / m
    ok = (m > q2) & (lam >= lower - 1e-15) & (lam <= a + 1e-15) & (lam >= 0)
    if not np.any(ok):
        return _dykstra(v, l2, l1, DYKSTRA_TOL, DYKSTRA_MAX_ITER)
    lam_star = float(lam[np.nonzero(ok)[0][0]])
    s = np.sign(diff) * np.maximum(mags - lam_star, 0.0)
    ns = np.linalg.norm(s)
    if ns == 0.0:
        return _dykstra(v, l2, l1, DYKSTRA_TOL, DYKSTRA_MAX_ITER)
    return l2.center + s * (r / ns)


def project_intersection(
    v,
    l2: Ball,
    l1: Ball,
    *,
    method: str = "dykstra",
    tol: float = DYKSTRA_TOL,
    max_iter: int = DYKSTRA_MAX_ITER,
) -> np.ndarray:
    """Euclidean projection onto the intersection of a concentric l2 and l1 ball.

    ``method="dykstra"`` runs Dykstra's alternating projection until successive
    iterates (the point and both correction terms) move less than ``tol``; on hitting ``max_iter`` it emits a
    :class:`ProjectionConvergenceWarning` and returns the last iterate.
    ``method="exact"`` solves the KKT system directly (used by the solver's
    inner loop, where thousands of projections are needed).
    """
    _check_pair(l2, l1)
    v = as_vector(v, l2.dim)
    if l2.contains(v) and l1.contains(v):
        return v
    # one constraint inactive at the single-ball projection => that is the answer
    z = project_l2(v, l2)
    if l1.contains(z, slack=1e-12 * l1.radius):
        return z
    z = project_l1(v, l1)
    if l2.contains(z, slack=1e-12 * l2.radius):
        return z
    if method == "dykstra":
        return _dykstra(v, l2, l1, tol, max_iter)
    if method == "exact":
        return _intersection_exact(v, l2, l1)
    raise ParameterError(f"unknown projection method {method!r}")
