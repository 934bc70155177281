"""Randomized invariant suites with independent oracles.

Each suite returns a :class:`SuiteResult` listing the failing cases, so the
CLI can dump them and the test-suite can assert there are none.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .kernels import (
    angle,
    hard_threshold,
    hinge_loss,
    l1_ball,
    l2_ball,
    normalize,
    project_intersection,
    project_l1,
    project_l2,
)
from .world import band_mass, gaussian

FEAS_TOL = 1e-9


@dataclass
class SuiteResult:
    name: str
    cases: int
    failures: list = field(default_factory=list)
    seconds: float = 0.0
    detail: str = ""

    @property
    def passed(self) -> bool:
        return not self.failures

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{status}] {self.name}: {self.cases} cases, {len(self.failures)} failures, {self.seconds:.1f}s{extra}"


def _timed(fn):
    def wrapper(*args, **kwargs):
        start = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - start
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _random_vector(rng, d):
    v = rng.standard_normal(d) * rng.choice([0.1, 1.0, 10.0])
    if rng.random() < 0.3:
        # force magnitude ties
        v = np.round(v)
    return v


def best_sparse_residual(v: np.ndarray, s: int) -> float:
    """min over all size-s supports S of ||v_S - v||_2, by enumeration."""
    d = v.shape[0]
    sq = v * v
    best = math.inf
    for support in itertools.combinations(range(d), s):
        best = min(best, float(sq.sum() - sq[list(support)].sum()))
    return math.sqrt(max(best, 0.0))


@_timed
def ht_optimality(cases: int, rng) -> SuiteResult:
    res = SuiteResult("hard threshold = best s-sparse approximation", cases)
    for i in range(cases):
        d = int(rng.integers(1, 9))
        s = int(rng.integers(1, d + 1))
        v = _random_vector(rng, d)
        ht = hard_threshold(v, s)
        resid = float(np.linalg.norm(ht - v))
        oracle = best_sparse_residual(v, s)
        if np.count_nonzero(ht) > s or resid > oracle + 1e-12 * (1 + oracle):
            res.failures.append({"case": i, "v": v.tolist(), "s": s, "residual": resid, "oracle": oracle})
        # a random s-sparse z is never closer
        z = np.zeros(d)
        idx = rng.choice(d, size=s, replace=False)
        z[idx] = v[idx] + rng.standard_normal(s) * 0.1
        if resid > float(np.linalg.norm(z - v)) + 1e-12:
            res.failures.append({"case": i, "v": v.tolist(), "s": s, "z": z.tolist()})
    return res


def _random_unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


@_timed
def normalization_bound(cases: int, rng) -> SuiteResult:
    res = SuiteResult("||w/||w|| - v|| <= 2||w - v|| for unit v", cases)
    for i in range(cases):
        d = int(rng.integers(1, 20))
        v = _random_unit(rng, d)
        w = v * rng.uniform(0.01, 3.0) + rng.standard_normal(d) * rng.choice([0.01, 0.3, 2.0])
        if not np.any(w):
            continue
        lhs = float(np.linalg.norm(normalize(w) - v))
        rhs = 2.0 * float(np.linalg.norm(w - v))
        if lhs > rhs + 1e-12:
            res.failures.append({"case": i, "w": w.tolist(), "v": v.tolist(), "lhs": lhs, "rhs": rhs})
    return res


@_timed
def distance_angle_bound(cases: int, rng) -> SuiteResult:
    res = SuiteResult("angle(w, v) <= pi ||w - v|| for unit v", cases)
    for i in range(cases):
        d = int(rng.integers(1, 20))
        v = _random_unit(rng, d)
        w = v * rng.uniform(0.01, 3.0) + rng.standard_normal(d) * rng.choice([0.01, 0.3, 2.0])
        if not np.any(w):
            continue
        lhs = angle(w, v)
        rhs = math.pi * float(np.linalg.norm(w - v))
        if lhs > rhs + 1e-12:
            res.failures.append({"case": i, "w": w.tolist(), "v": v.tolist(), "lhs": lhs, "rhs": rhs})
    return res


@_timed
def projection_feasibility(cases: int, rng) -> SuiteResult:
    res = SuiteResult("projections feasible and idempotent", cases)
    for i in range(cases):
        d = int(rng.integers(1, 30))
        c = rng.standard_normal(d) * rng.choice([0.0, 0.5])
        v = c + rng.standard_normal(d) * rng.choice([0.1, 1.0, 5.0])
        r = float(rng.uniform(0.05, 2.0))
        rho = r * float(rng.uniform(1.0, math.sqrt(d) + 0.5))
        b2, b1 = l2_ball(c, r), l1_ball(c, rho)
        p2 = project_l2(v, b2)
        p1 = project_l1(v, b1)
        pi = project_intersection(v, b2, b1, method="exact")
        checks = {
            "l2 feasible": b2.distance(p2) <= r + FEAS_TOL,
            "l1 feasible": b1.distance(p1) <= rho + FEAS_TOL,
            "intersection feasible": b2.distance(pi) <= r + FEAS_TOL and b1.distance(pi) <= rho + FEAS_TOL,
            "l2 idempotent": np.linalg.norm(project_l2(p2, b2) - p2) <= 1e-9,
            "l1 idempotent": np.linalg.norm(project_l1(p1, b1) - p1) <= 1e-9,
            "intersection idempotent": np.linalg.norm(project_intersection(pi, b2, b1, method="exact") - pi) <= 1e-9,
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            res.failures.append({"case": i, "v": v.tolist(), "c": c.tolist(), "r": r, "rho": rho, "failed": bad})
    return res


@_timed
def hinge_dominates_zero_one(cases: int, rng) -> SuiteResult:
    res = SuiteResult("hinge >= 1 when misclassified or on the boundary", cases)
    for i in range(cases):
        d = int(rng.integers(1, 10))
        w = rng.standard_normal(d)
        x = rng.standard_normal(d)
        if rng.random() < 0.1:
            x = x - (w @ x) / (w @ w) * w  # on the boundary
        y = int(rng.choice([-1, 1]))
        tau = float(rng.uniform(0.01, 3.0))
        loss = hinge_loss(w, x, y, tau)
        if loss < 0 or (y * (w @ x) <= 0 and loss < 1.0 - 1e-12):
            res.failures.append({"case": i, "w": w.tolist(), "x": x.tolist(), "y": y, "tau": tau, "loss": loss})
    return res


@_timed
def angle_scale_invariance(cases: int, rng) -> SuiteResult:
    res = SuiteResult("angle(a w, b v) = angle(w, v)", cases)
    for i in range(cases):
        d = int(rng.integers(1, 20))
        w, v = rng.standard_normal(d), rng.standard_normal(d)
        a, b = 10.0 ** rng.uniform(-3, 3), 10.0 ** rng.uniform(-3, 3)
        base = angle(w, v)
        scaled = angle(a * w, b * v)
        if abs(scaled - base) > 1e-12 or not (0.0 <= base <= math.pi) or abs(angle(v, w) - base) > 1e-12:
            res.failures.append({"case": i, "w": w.tolist(), "v": v.tolist(), "a": a, "b": b})
    return res


def dual_grid_projection(v, c, r, rho, n: int = 41, levels: int = 80, shrink: float = 0.7) -> np.ndarray:
    """Projection onto {||z-c||_2 <= r, ||z-c||_1 <= rho} by grid search on the dual.

    For multipliers (lam, mu) the Lagrangian minimizer is
    soft(v - c, lam) / (1 + mu); the dual function is concave in (lam, mu), so
    a zooming 2-D grid converges to its maximizer without ever touching the
    thin boundary of the primal feasible set.
    """
    w = np.asarray(v, dtype=np.float64) - c
    absw = np.abs(w)
    sgn = np.sign(w)

    def primal(lam, mu):
        s = sgn * np.maximum(absw - lam[..., None], 0.0)
        return s / (1.0 + mu[..., None])

    def dual(lam, mu):
        z = primal(lam, mu)
        return (
            0.5 * ((z - w) ** 2).sum(-1)
            + lam * (np.abs(z).sum(-1) - rho)
            + 0.5 * mu * ((z * z).sum(-1) - r * r)
        )

    lc, mc = absw.max() / 2.0, np.linalg.norm(w) / r / 2.0
    hl, hm = lc + 1e-12, mc + 1e-12
    for _ in range(levels):
        lams = np.clip(np.linspace(lc - hl, lc + hl, n), 0.0, None)
        mus = np.clip(np.linspace(mc - hm, mc + hm, n), 0.0, None)
        L, M = np.meshgrid(lams, mus, indexing="ij")
        i, j = np.unravel_index(np.argmax(dual(L, M)), L.shape)
        lc, mc = lams[i], mus[j]
        hl *= shrink
        hm *= shrink
    return c + primal(np.asarray(lc), np.asarray(mc))


def primal_grid_distance(v, c, r, rho, n: int = 81) -> float:
    """Smallest distance from v to a feasible point of a dense 3-D grid."""
    g = np.linspace(-r, r, n)
    P = np.stack(np.meshgrid(g, g, g, indexing="ij"), -1).reshape(-1, 3)
    feas = (np.linalg.norm(P, axis=1) <= r) & (np.abs(P).sum(1) <= rho)
    return float(np.sqrt(((c + P[feas] - v) ** 2).sum(1).min()))


@_timed
def intersection_vs_grid(cases: int, rng, tol: float = 1e-6, method: str = "dykstra") -> SuiteResult:
    res = SuiteResult(f"intersection projection ({method}) matches grid-search oracle (d=3)", cases)
    worst = 0.0
    for i in range(cases):
        c = rng.standard_normal(3) * 0.3
        v = c + rng.standard_normal(3) * rng.uniform(0.1, 3.0)
        r = float(rng.uniform(0.1, 1.0))
        rho = r * float(rng.uniform(1.0, math.sqrt(3)))
        z = project_intersection(v, l2_ball(c, r), l1_ball(c, rho), method=method)
        oracle = dual_grid_projection(v, c, r, rho)
        gap = float(np.linalg.norm(z - oracle))
        worst = max(worst, gap)
        # the primal grid is coarse, but no feasible grid point may beat the projection
        beaten = primal_grid_distance(v, c, r, rho) < float(np.linalg.norm(z - v)) - 1e-12
        if gap > tol or beaten:
            res.failures.append({"case": i, "v": v.tolist(), "c": c.tolist(), "r": r, "rho": rho, "gap": gap})
    res.detail = f"worst l2 gap {worst:.2e}"
    return res


@_timed
def disagreement_angle(pairs: int, rng, d: int = 10, m: int = 100_000) -> SuiteResult:
    res = SuiteResult("Gaussian disagreement = angle/pi within 3 sigma", pairs)
    worst = 0.0
    for i in range(pairs):
        w, v = rng.standard_normal(d), rng.standard_normal(d)
        X = rng.standard_normal((m, d))
        disagree = float(np.mean(np.sign(X @ w) != np.sign(X @ v)))
        p = angle(w, v) / math.pi
        sigma = math.sqrt(p * (1 - p) / m)
        z = abs(disagree - p) / sigma if sigma > 0 else 0.0
        worst = max(worst, z)
        if z > 3.0:
            res.failures.append({"case": i, "p": p, "mc": disagree, "sigma": sigma})
    res.detail = f"max |z| {worst:.2f}"
    return res


@_timed
def band_mass_bounds(cases: int, rng, d: int = 10, m: int = 100_000) -> SuiteResult:
    res = SuiteResult("Gaussian band mass <= 9b and = 2Phi(b)-1 within 3 sigma", cases)
    dist = gaussian(d)
    worst = 0.0
    for i in range(cases):
        v = _random_unit(rng, d)
        b = float(rng.uniform(1e-3, 1.0))
        X = rng.standard_normal((m, d))
        mc = float(np.mean(np.abs(X @ v) <= b))
        exact = 2.0 * float(special.ndtr(b)) - 1.0
        sigma = math.sqrt(exact * (1 - exact) / m)
        z = abs(mc - exact) / sigma
        worst = max(worst, z)
        closed = band_mass(dist, v, b)
        if mc > 9 * b or z > 3.0 or abs(closed - exact) > 1e-12:
            res.failures.append({"case": i, "b": b, "mc": mc, "exact": exact, "sigma": sigma})
    res.detail = f"max |z| {worst:.2f}"
    return res


KERNEL_SUITES = (
    ht_optimality,
    normalization_bound,
    distance_angle_bound,
    projection_feasibility,
    hinge_dominates_zero_one,
    angle_scale_invariance,
)


def run_all(cases: int = 10_000, seed: int = 0) -> list[SuiteResult]:
    """Every suite with its own child stream of ``seed``."""
    ss = np.random.SeedSequence(seed)
    rngs = [np.random.default_rng(s) for s in ss.spawn(len(KERNEL_SUITES) + 3)]
    results = [suite(cases, rng) for suite, rng in zip(KERNEL_SUITES, rngs)]
    results.append(intersection_vs_grid(100, rngs[-3]))
    results.append(disagreement_angle(50, rngs[-2]))
    results.append(band_mass_bounds(50, rngs[-1]))
    return results
