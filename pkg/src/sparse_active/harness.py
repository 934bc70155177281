"""Experiment runner: configs, error estimation, baselines, sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .band import QueryLedger
from .errors import ParameterError
from .kernels import angle, hard_threshold, normalize
from .learner import AlgorithmConstants, build_schedule, run
from .solver import SolverOptions, minimize_hinge
from .world import (
    AdversaryStrategy,
    BoundedProfile,
    MarginalDistribution,
    MarginalKind,
    NoiseKind,
    NoiseModel,
    RngState,
    World,
    sample_target,
)

log = logging.getLogger(__name__)

TARGET_STREAM = 0
LEARNER_STREAM = 1
EVAL_STREAM = 2
PASSIVE_STREAM = 3

CSV_COLUMNS = [
    "config_hash",
    "seed",
    "d",
    "t",
    "epsilon",
    "delta",
    "noise_kind",
    "noise_param",
    "algorithm",
    "labels_total",
    "unlabeled_total",
    "rejected_total",
    "err_estimate",
    "err_stderr",
    "theta_final",
    "k0",
    "wall_ms",
    "invariant_u_in_W_rate",
    "status",
    # extra columns after the fixed block
    "noise_variant",
    "marginal",
    "err_bayes",
    "excess_err",
    "labels_per_epoch",
    "theta_trace",
]
_INT_COLUMNS = {"seed", "d", "t", "labels_total", "unlabeled_total", "rejected_total", "k0", "wall_ms"}
_FLOAT_COLUMNS = {
    "epsilon",
    "delta",
    "noise_param",
    "err_estimate",
    "err_stderr",
    "theta_final",
    "invariant_u_in_W_rate",
    "err_bayes",
    "excess_err",
}


@dataclass(frozen=True)
class ExperimentConfig:
    d: int = 200
    t: int = 5
    epsilon: float = 0.05
    delta: float = 0.1
    marginal: str = "gaussian"
    noise: str = "realizable"
    noise_rate: float = 0.0
    noise_strategy: str = "boundary_band"
    noise_profile: str = "constant"
    constants: AlgorithmConstants = field(default_factory=AlgorithmConstants)
    solver: SolverOptions = field(default_factory=SolverOptions)
    seeds: tuple = (0,)
    active: bool = True
    passive: bool = False
    fulldim: bool = False
    passive_budget: int | None = None
    error_method: str = "auto"
    mc_samples: int = 100_000
    workers: int = 1
    output: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ParameterError("seed list must be nonempty")
        if not (1 <= self.t <= self.d):
            raise ParameterError(f"need 1 <= t <= d, got t={self.t}, d={self.d}")
        if not (0 < self.epsilon < 1 and 0 < self.delta < 1):
            raise ParameterError("epsilon and delta must lie in (0, 1)")
        if self.error_method not in ("auto", "exact", "monte_carlo"):
            raise ParameterError(f"unknown error method {self.error_method!r}")
        if self.mc_samples < 1:
            raise ParameterError("mc_samples must be positive")
        # constructing these validates the noise and marginal fields
        self.noise_model()
        self.distribution()

    def noise_model(self) -> NoiseModel:
        try:
            kind = NoiseKind(self.noise)
            if kind is NoiseKind.REALIZABLE:
                return NoiseModel.realizable()
            if kind is NoiseKind.ADVERSARIAL:
                return NoiseModel.adversarial(self.noise_rate, AdversaryStrategy(self.noise_strategy))
            return NoiseModel.bounded(self.noise_rate, BoundedProfile(self.noise_profile))
        except ValueError as exc:
            raise ParameterError(str(exc)) from exc

    def distribution(self) -> MarginalDistribution:
        try:
            return MarginalDistribution(MarginalKind(self.marginal), self.d)
        except ValueError as exc:
            raise ParameterError(str(exc)) from exc

    def to_dict(self) -> dict:
        out = dataclasses.asdict(self)
        out["seeds"] = list(self.seeds)
        return out

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        raw = dict(raw)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ParameterError(f"unknown config keys: {sorted(unknown)}")
        try:
            if isinstance(raw.get("constants"), dict):
                raw["constants"] = AlgorithmConstants(**raw["constants"])
            if isinstance(raw.get("solver"), dict):
                raw["solver"] = SolverOptions(**raw["solver"])
            return cls(**raw)
        except TypeError as exc:
            raise ParameterError(str(exc)) from exc

    def config_hash(self) -> str:
        """Hash of everything that determines a record except the seed list and I/O."""
        payload = self.to_dict()
        for key in ("seeds", "output", "workers"):
            payload.pop(key)
        blob = json.dumps(payload, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()[:12]


class ErrorEstimate(NamedTuple):
    estimate: float
    stderr: float


def make_world(config: ExperimentConfig, seed: int) -> World:
    """The world for a seed; the target depends only on (seed, d, t)."""
    rng = RngState(seed, TARGET_STREAM).generator()
    target = sample_target(config.d, config.t, rng)
    return World(config.distribution(), target, config.noise_model())


def estimate_error(w, world: World, method: str = "exact", m: int = 100_000, rng=None) -> ErrorEstimate:
    """Error rate of sign(w.x) under the world's distribution.

    ``"exact"`` uses angle/pi, valid only for Gaussian marginals with realizable
    labels. ``"monte_carlo"`` labels ``m`` fresh draws through the oracle.
    """
    if method == "exact":
        if world.dist.kind is not MarginalKind.GAUSSIAN or world.noise.kind is not NoiseKind.REALIZABLE:
            raise ParameterError("exact-angle error needs a Gaussian marginal and realizable labels")
        return ErrorEstimate(angle(w, world.target.u) / math.pi, 0.0)
    if method != "monte_carlo":
        raise ParameterError(f"unknown error method {method!r}")
    rng = rng if rng is not None else np.random.default_rng()
    X = world.dist.sample(m, rng)
    y = world.label(X, rng)
    p = float(np.mean(np.where(X @ w >= 0, 1, -1) != y))
    return ErrorEstimate(p, math.sqrt(p * (1 - p) / m))


def _paired_errors(w, world: World, m: int, rng) -> tuple[ErrorEstimate, float, float]:
    """MC error of w, of the target, and their paired difference, on shared draws."""
    X = world.dist.sample(m, rng)
    y = world.label(X, rng)
    miss_w = np.where(X @ w >= 0, 1, -1) != y
    miss_u = np.where(X @ world.target.u >= 0, 1, -1) != y
    p = float(np.mean(miss_w))
    return ErrorEstimate(p, math.sqrt(p * (1 - p) / m)), float(np.mean(miss_u)), p - float(np.mean(miss_u))


@dataclass
class RunRecord:
    config_hash: str
    seed: int
    d: int
    t: int
    epsilon: float
    delta: float
    noise_kind: str
    noise_param: float
    algorithm: str
    labels_total: int = 0
    unlabeled_total: int = 0
    rejected_total: int = 0
    err_estimate: float = math.nan
    err_stderr: float = math.nan
    theta_final: float = math.nan
    k0: int = 0
    wall_ms: int = 0
    invariant_u_in_W_rate: float = math.nan
    status: str = "ok"
    noise_variant: str = ""
    marginal: str = "gaussian"
    err_bayes: float = math.nan
    excess_err: float = math.nan
    labels_per_epoch: tuple = ()
    theta_trace: tuple = ()

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def sort_key(self):
        return (self.config_hash, self.algorithm, self.seed)


def _blank_record(config: ExperimentConfig, seed: int, algorithm: str) -> RunRecord:
    return RunRecord(
        config_hash=config.config_hash(),
        seed=seed,
        d=config.d,
        t=config.t,
        epsilon=config.epsilon,
        delta=config.delta,
        noise_kind=config.noise,
        noise_param=float(config.noise_rate),
        algorithm=algorithm,
        noise_variant=config.noise_model().param_label,
        marginal=config.marginal,
    )


def _fill_error(record: RunRecord, w, world: World, config: ExperimentConfig, seed: int) -> None:
    method = config.error_method
    exact_ok = world.dist.kind is MarginalKind.GAUSSIAN and world.noise.kind is NoiseKind.REALIZABLE
    if method == "auto":
        method = "exact" if exact_ok else "monte_carlo"
    record.theta_final = angle(w, world.target.u)
    if method == "exact":
        est = estimate_error(w, world, "exact")
        record.err_bayes = 0.0
        record.excess_err = est.estimate
    else:
        rng = RngState(seed, EVAL_STREAM).generator()
        est, err_u, excess = _paired_errors(w, world, config.mc_samples, rng)
        record.err_bayes = err_u
        record.excess_err = excess
    record.err_estimate, record.err_stderr = est.estimate, est.stderr


def _fill_ledger(record: RunRecord, ledger: QueryLedger) -> None:
    record.labels_total = ledger.total_queries
    record.unlabeled_total = ledger.total_unlabeled
    record.rejected_total = ledger.total_rejected
    record.labels_per_epoch = tuple(ledger.queries_per_epoch())


def _run_active(config: ExperimentConfig, seed: int, t_alg: int, algorithm: str) -> RunRecord:
    record = _blank_record(config, seed, algorithm)
    start = time.perf_counter()
    world = make_world(config, seed)
    schedule = build_schedule(config.d, t_alg, config.epsilon, config.delta, config.constants)
    result = run(world, schedule, config.solver, RngState(seed, LEARNER_STREAM).generator())
    record.k0 = schedule.k0
    _fill_ledger(record, result.ledger)
    record.invariant_u_in_W_rate = result.invariant_rate
    record.theta_trace = tuple(float(th) for th in result.thetas)
    _fill_error(record, result.w, world, config, seed)
    record.wall_ms = int(round(1000 * (time.perf_counter() - start)))
    return record


def run_active(config: ExperimentConfig, seed: int) -> RunRecord:
    return _run_active(config, seed, config.t, "active")


def run_baseline_fulldim(config: ExperimentConfig, seed: int) -> RunRecord:
    """The same learner with the sparsity level set to d (no thresholding)."""
    return _run_active(config, seed, config.d, "fulldim")


def passive_budget(config: ExperimentConfig) -> int:
    if config.passive_budget is not None:
        return int(config.passive_budget)
    return build_schedule(config.d, config.t, config.epsilon, config.delta, config.constants).total_labels


def run_baseline_passive(config: ExperimentConfig, seed: int) -> RunRecord:
    """One hinge minimization over {||w||_2 <= 1, ||w||_1 <= sqrt(t)} on n i.i.d. labels."""
    record = _blank_record(config, seed, "passive")
    start = time.perf_counter()
    world = make_world(config, seed)
    n = passive_budget(config)
    if n < 1:
        raise ParameterError("passive budget must be positive")
    rng = RngState(seed, PASSIVE_STREAM).generator()
    ledger = QueryLedger()
    X = world.dist.sample(n, rng)
    y = world.label(X, rng)
    ledger.record(0, n, 0, n)
    schedule = build_schedule(config.d, config.t, config.epsilon, config.delta, config.constants)
    report = minimize_hinge(X, y, schedule.constraint_set(0, None), schedule.tau[0], config.solver)
    w = normalize(hard_threshold(report.iterate, config.t))
    _fill_ledger(record, ledger)
    record.theta_trace = (angle(w, world.target.u),)
    _fill_error(record, w, world, config, seed)
    record.wall_ms = int(round(1000 * (time.perf_counter() - start)))
    return record


_ALGORITHMS = {
    "active": run_active,
    "passive": run_baseline_passive,
    "fulldim": run_baseline_fulldim,
}


def _safe_run(config: ExperimentConfig, seed: int, algorithm: str) -> RunRecord:
    try:
        return _ALGORITHMS[algorithm](config, seed)
    except Exception as exc:  # recorded, not raised: one bad cell must not kill a sweep
        log.warning("run failed (algorithm=%s seed=%d): %s", algorithm, seed, exc)
        record = _blank_record(config, seed, algorithm)
        record.status = f"failed: {type(exc).__name__}: {exc}".replace("\n", " ")
        return record


def algorithms_of(config: ExperimentConfig) -> list[str]:
    algos = [name for name, on in (("active", config.active), ("passive", config.passive), ("fulldim", config.fulldim)) if on]
    if not algos:
        raise ParameterError("no algorithm enabled")
    return algos


def expand_grid(base: ExperimentConfig, grid: dict) -> list[ExperimentConfig]:
    """Cartesian product of grid values over ``base``.

    Keys are ExperimentConfig field names. The special key ``noise`` may hold
    dicts with any of ``noise``, ``noise_rate``, ``noise_strategy``, ``noise_profile``.
    """
    if not grid:
        return [base]
    keys = sorted(grid)
    cells = []
    for values in itertools.product(*(grid[k] for k in keys)):
        changes = {}
        for key, value in zip(keys, values):
            if key == "noise" and isinstance(value, dict):
                changes.update(value)
            else:
                changes[key] = value
        raw = base.to_dict()
        raw.update(changes)
        cells.append(ExperimentConfig.from_dict(raw))
    return cells


def _tasks(configs):
    return [(cfg, seed, algo) for cfg in configs for algo in algorithms_of(cfg) for seed in cfg.seeds]


def sweep(
    base: ExperimentConfig,
    grid: dict | None = None,
    output: str | Path | None = None,
    workers: int | None = None,
) -> list[RunRecord]:
    """Run every (cell, algorithm, seed) of the grid.

    Records are appended to ``<output>.partial`` as they finish; the final CSV
    at ``output`` is written sorted once all runs are done.
    """
    configs = expand_grid(base, grid or {})
    tasks = _tasks(configs)
    workers = base.workers if workers is None else workers
    output = output if output is not None else base.output
    partial = None
    if output is not None:
        output = Path(output)
        partial = output.with_name(output.name + ".partial")
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(partial, "w", newline="") as fh:
            csv.writer(fh).writerow(CSV_COLUMNS)

    records = []

    def finished(rec):
        records.append(rec)
        if partial is not None:
            with open(partial, "a", newline="") as fh:
                csv.writer(fh).writerow(_csv_row(rec))

    if workers <= 1:
        for task in tasks:
            finished(_safe_run(*task))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_safe_run, *task) for task in tasks]
            for fut in as_completed(futures):
                finished(fut.result())

    records.sort(key=RunRecord.sort_key)
    if output is not None:
        write_csv(records, output)
        partial.unlink(missing_ok=True)
    return records


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ";".join(_fmt(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _csv_row(rec: RunRecord) -> list[str]:
    return [_fmt(getattr(rec, col)) for col in CSV_COLUMNS]


def write_csv(records, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in sorted(records, key=RunRecord.sort_key):
            writer.writerow(_csv_row(rec))


def _parse(col: str, text: str):
    if col in _INT_COLUMNS:
        return int(text)
    if col in _FLOAT_COLUMNS:
        return float(text)
    if col == "labels_per_epoch":
        return tuple(int(v) for v in text.split(";")) if text else ()
    if col == "theta_trace":
        return tuple(float(v) for v in text.split(";")) if text else ()
    return text


def read_csv(path) -> list[RunRecord]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        return [RunRecord(**{col: _parse(col, row[col]) for col in CSV_COLUMNS}) for row in reader]


def summarize(records) -> str:
    """Median and IQR of the main metrics per (config, algorithm)."""
    groups: dict = {}
    for rec in records:
        if rec.ok:
            groups.setdefault((rec.config_hash, rec.algorithm, rec.d, rec.t, rec.epsilon, rec.noise_kind), []).append(rec)
    lines = [
        f"{'config':<12} {'algo':<8} {'d':>6} {'t':>4} {'eps':>6} {'noise':<11} {'runs':>4} "
        f"{'labels med':>10} {'err med':>9} {'err IQR':>19} {'u-in-W':>7}"
    ]
    for key in sorted(groups):
        recs = groups[key]
        errs = np.array([r.err_estimate for r in recs])
        labels = np.median([r.labels_total for r in recs])
        q1, q3 = np.percentile(errs, [25, 75])
        inv = np.nanmean([r.invariant_u_in_W_rate for r in recs]) if recs[0].algorithm != "passive" else math.nan
        lines.append(
            f"{key[0]:<12} {key[1]:<8} {key[2]:>6} {key[3]:>4} {key[4]:>6g} {key[5]:<11} {len(recs):>4} "
            f"{labels:>10.0f} {np.median(errs):>9.5f} [{q1:.5f}, {q3:.5f}] {inv:>7.3f}"
        )
    failed = sum(not r.ok for r in records)
    if failed:
        lines.append(f"{failed} failed run(s)")
    return "\n".join(lines)
