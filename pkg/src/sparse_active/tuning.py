"""Grid search over the schedule constants c1, c2, c3."""

from __future__ import annotations

import dataclasses
import itertools
from dataclasses import dataclass, field

import numpy as np

from .harness import ExperimentConfig, sweep
from .learner import AlgorithmConstants

DEFAULT_TUNE_GRID = {
    "c1": [0.25, 0.5, 1.0],
    "c2": [0.5, 1.0, 2.0],
    "c3": [0.125, 0.25, 0.5],
}


@dataclass
class TuneRow:
    constants: AlgorithmConstants
    success_rate: float
    invariant_rate: float
    median_err: float
    labels: float
    progress: float


@dataclass
class TuneResult:
    rows: list = field(default_factory=list)
    recommended: dict | None = None
    min_success: float = 1.0
    min_invariant: float = 0.9
    min_progress: float = 1.5

    def table(self) -> str:
        lines = [f"{'c1':>6} {'c2':>6} {'c3':>6} {'success':>8} {'u-in-W':>7} {'progress':>8} {'err med':>9} {'labels':>8}"]
        for r in self.rows:
            c = r.constants
            lines.append(
                f"{c.c1:>6g} {c.c2:>6g} {c.c3:>6g} {r.success_rate:>8.2f} {r.invariant_rate:>7.2f} {r.progress:>8.2f} "
                f"{r.median_err:>9.5f} {r.labels:>8.0f}"
            )
        return "\n".join(lines)


def epoch_progress(theta_traces) -> float:
    """Smallest per-epoch shrink factor of the median angle over epochs 1..min(5, k0)."""
    med = np.median(np.asarray(theta_traces, dtype=float), axis=0)
    last = min(5, med.shape[0] - 1)
    if last < 1:
        return float("inf")
    return float(min(med[k - 1] / med[k] for k in range(1, last + 1)))


def tune(
    base: ExperimentConfig,
    grid: dict | None = None,
    min_success: float = 1.0,
    min_invariant: float = 0.9,
    min_progress: float = 1.5,
) -> TuneResult:
    """Evaluate every constant combination on ``base.seeds``.

    A combination qualifies when the fraction of seeds with excess error <= epsilon
    is at least ``min_success``, the u-in-W rate is at least ``min_invariant``,
    and the median angle shrinks by at least ``min_progress`` every epoch.
    The recommendation is the qualifying combination with the fewest labels;
    among equal label counts (labels depend on c1 only) the one with the
    largest progress factor wins.
    """
    grid = {**DEFAULT_TUNE_GRID, **(grid or {})}
    keys = [k for k in ("c1", "c2", "c3", "C1") if k in grid]
    result = TuneResult(min_success=min_success, min_invariant=min_invariant, min_progress=min_progress)
    for values in itertools.product(*(grid[k] for k in keys)):
        consts = dataclasses.replace(base.constants, **dict(zip(keys, values)))
        cfg = dataclasses.replace(base, constants=consts, output=None, active=True, passive=False, fulldim=False)
        records = [r for r in sweep(cfg) if r.ok]
        if not records:
            continue
        errs = np.array([r.excess_err for r in records])
        result.rows.append(
            TuneRow(
                constants=consts,
                success_rate=float(np.mean(errs <= base.epsilon)),
                invariant_rate=float(np.mean([r.invariant_u_in_W_rate for r in records])),
                median_err=float(np.median(errs)),
                labels=float(np.median([r.labels_total for r in records])),
                progress=epoch_progress([r.theta_trace for r in records]),
            )
        )
    ok = [
        r
        for r in result.rows
        if r.success_rate >= min_success and r.invariant_rate >= min_invariant and r.progress >= min_progress
    ]
    if ok:
        best = min(ok, key=lambda r: (r.labels, -r.progress))
        result.recommended = dataclasses.asdict(best.constants)
    return result
