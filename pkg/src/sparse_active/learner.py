"""Margin-based active learning of sparse halfspaces with hard thresholding."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .band import Band, EpochCounts, QueryLedger, draw_from_band
from .errors import DegenerateInputError, ParameterError
from .kernels import angle, hard_threshold, normalize
from .solver import ConstraintSet, SolverOptions, minimize_hinge
from .world import SparseTarget, World


class LearnerAbort(RuntimeError):
    """Hard thresholding produced the zero vector twice in one epoch."""


@dataclass(frozen=True)
class AlgorithmConstants:
    """Constants of the schedule. C1 = pi is exact for rotation-invariant marginals."""

    c1: float = 0.5
    c2: float = 1.0
    c3: float = 0.25
    C1: float = math.pi

    def __post_init__(self):
        for name in ("c1", "c2", "c3", "C1"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"constant {name} must be positive")


def l2_radius(k: int) -> float:
    return 2.0 ** (-k - 3)


def l1_radius(k: int, t: int) -> float:
    return math.sqrt(2 * t) * 2.0 ** (-k - 3)


def epoch_count(epsilon: float, C1: float) -> int:
    # tolerate rounding in 1/(C1 eps) so exact powers of two land on the integer
    x = math.log2(1.0 / (C1 * epsilon))
    return max(0, math.ceil(x - 1e-9))


@dataclass(frozen=True)
class EpochSchedule:
    d: int
    t: int
    epsilon: float
    delta: float
    k0: int
    n: tuple
    b: tuple
    r: tuple
    rho: tuple
    tau: tuple
    delta_k: tuple

    @property
    def epochs(self) -> range:
        return range(self.k0 + 1)

    @property
    def total_labels(self) -> int:
        return int(sum(self.n))

    def constraint_set(self, k: int, center: np.ndarray | None) -> ConstraintSet:
        if k == 0:
            return ConstraintSet(np.zeros(self.d), 1.0, math.sqrt(self.t))
        return ConstraintSet(center, self.r[k], self.rho[k])


def build_schedule(d: int, t: int, epsilon: float, delta: float, consts: AlgorithmConstants) -> EpochSchedule:
    if not (0 < epsilon < 1):
        raise ParameterError(f"epsilon must lie in (0, 1), got {epsilon}")
    if not (0 < delta < 1):
        raise ParameterError(f"delta must lie in (0, 1), got {delta}")
    if not (1 <= t <= d):
        raise ParameterError(f"need 1 <= t <= d, got t={t}, d={d}")
    k0 = epoch_count(epsilon, consts.C1)
    ks = range(k0 + 1)
    delta_k = tuple(delta / ((k + 1) * (k + 2)) for k in ks)
    n = tuple(
        int(math.ceil(consts.c1 * t * (math.log(d) + math.log(1 / epsilon) + math.log(1 / dk)) ** 3))
        for dk in delta_k
    )
    return EpochSchedule(
        d=d,
        t=t,
        epsilon=epsilon,
        delta=delta,
        k0=k0,
        n=n,
        b=tuple(consts.c2 * 2.0**-k for k in ks),
        r=tuple(l2_radius(k) for k in ks),
        rho=tuple(l1_radius(k, t) for k in ks),
        tau=tuple(consts.c3 * 2.0**-k for k in ks),
        delta_k=delta_k,
    )


def check_invariant_u_in_W(target: SparseTarget, w_prev: np.ndarray, k_next: int, t: int | None = None) -> bool:
    """Whether the target lies in the constraint set of epoch ``k_next``.

    ``w_prev`` is the center of that set (the output of epoch ``k_next - 1``).
    Observation only.
    """
    t = target.t if t is None else t
    if k_next == 0:
        u = target.u
        return bool(np.linalg.norm(u) <= 1.0 + 1e-12 and np.abs(u).sum() <= math.sqrt(t) * (1 + 1e-12))
    diff = target.u - w_prev
    return bool(np.linalg.norm(diff) <= l2_radius(k_next) and np.abs(diff).sum() <= l1_radius(k_next, t))


@dataclass
class EpochTrace:
    k: int
    w: np.ndarray
    theta_to_target: float | None
    target_in_W_next: bool | None
    solver_loss: float
    solver_iterations: int
    solver_converged: bool
    counts: EpochCounts
    restarted: bool = False


@dataclass
class RunResult:
    w: np.ndarray
    traces: list = field(default_factory=list)
    ledger: QueryLedger = field(default_factory=QueryLedger)

    @property
    def thetas(self) -> list:
        return [tr.theta_to_target for tr in self.traces]

    @property
    def invariant_rate(self) -> float:
        flags = [tr.target_in_W_next for tr in self.traces if tr.target_in_W_next is not None]
        return float(np.mean(flags)) if flags else float("nan")


def _epoch_step(k, n_k, band, cons, tau, t, world, ledger, solver_opts, rng):
    X, y = draw_from_band(band, n_k, world, ledger, rng, epoch=k)
    report = minimize_hinge(X, y, cons, tau, solver_opts)
    return report, normalize(hard_threshold(report.iterate, t))


def run(
    world: World,
    schedule: EpochSchedule,
    solver_opts: SolverOptions | None = None,
    rng: np.random.Generator | None = None,
    target: SparseTarget | None = None,
) -> RunResult:
    """Run every epoch of the learner and return the final t-sparse unit vector.

    ``target`` enables instrumentation (angles and the u-in-W check); it
    defaults to the world's own target and never affects the iterates.
    """
    if world.dim != schedule.d:
        raise ParameterError("schedule dimension does not match the world")
    solver_opts = solver_opts or SolverOptions()
    rng = rng if rng is not None else np.random.default_rng()
    target = world.target if target is None else target
    t = schedule.t
    ledger = QueryLedger()
    traces = []
    w_prev = None
    for k in schedule.epochs:
        band = Band.full_space() if k == 0 else Band(w_prev, schedule.b[k])
        cons = schedule.constraint_set(k, w_prev)
        restarted = False
        try:
            report, w_k = _epoch_step(
                k, schedule.n[k], band, cons, schedule.tau[k], t, world, ledger, solver_opts, rng
            )
        except DegenerateInputError:
            restarted = True
            try:
                report, w_k = _epoch_step(
                    k, 2 * schedule.n[k], band, cons, schedule.tau[k], t, world, ledger, solver_opts, rng
                )
            except DegenerateInputError as exc:
                raise LearnerAbort(
                    f"epoch {k}: hinge minimizer thresholded to zero twice "
                    f"(n_k={schedule.n[k]}, tau={schedule.tau[k]:g}, band width={schedule.b[k]:g})"
                ) from exc
        counts = ledger.epochs[k]
        traces.append(
            EpochTrace(
                k=k,
                w=w_k,
                theta_to_target=angle(w_k, target.u),
                target_in_W_next=check_invariant_u_in_W(target, w_k, k + 1, t),
                solver_loss=report.final_loss,
                solver_iterations=report.iterations,
                solver_converged=report.converged,
                counts=EpochCounts(counts.unlabeled, counts.rejected, counts.queries),
                restarted=restarted,
            )
        )
        w_prev = w_k
    return RunResult(w=w_prev, traces=traces, ledger=ledger)
