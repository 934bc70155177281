"""Rejection sampling from the margin band, with label-query accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParameterError, SamplingStarvationError
from .kernels import as_vector
from .world import MarginalDistribution, World, band_mass

MASS_FLOOR = 1e-6
ATTEMPT_FACTOR = 10_000
# cap on candidate floats generated per batch (~256 MB of float64)
BATCH_FLOATS = 1 << 25


@dataclass(frozen=True)
class Band:
    """The sampling region {x : |normal . x| <= width}, or all of R^d."""

    normal: np.ndarray | None = None
    width: float = math.inf
    is_full_space: bool = False

    def __post_init__(self):
        if self.is_full_space:
            return
        normal = as_vector(self.normal)
        if abs(np.linalg.norm(normal) - 1.0) > 1e-12:
            raise ParameterError("band normal must be a unit vector")
        if not self.width > 0:
            raise ParameterError(f"band width must be positive, got {self.width}")
        object.__setattr__(self, "normal", normal)

    @classmethod
    def full_space(cls) -> "Band":
        return cls(is_full_space=True)

    def contains(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        if self.is_full_space:
            return np.ones(X.shape[0], dtype=bool)
        return np.abs(X @ self.normal) <= self.width


@dataclass
class EpochCounts:
    unlabeled: int = 0
    rejected: int = 0
    queries: int = 0


@dataclass
class QueryLedger:
    """Per-epoch counts of unlabeled draws, rejections and label queries."""

    epochs: dict[int, EpochCounts] = field(default_factory=dict)

    def record(self, epoch: int, unlabeled: int, rejected: int, queries: int) -> None:
        if queries > unlabeled - rejected:
            raise ParameterError("cannot query more labels than accepted draws")
        c = self.epochs.setdefault(epoch, EpochCounts())
        c.unlabeled += unlabeled
        c.rejected += rejected
        c.queries += queries

    @property
    def total_unlabeled(self) -> int:
        return sum(c.unlabeled for c in self.epochs.values())

    @property
    def total_rejected(self) -> int:
        return sum(c.rejected for c in self.epochs.values())

    @property
    def total_queries(self) -> int:
        return sum(c.queries for c in self.epochs.values())

    def queries_per_epoch(self) -> list[int]:
        return [self.epochs[k].queries for k in sorted(self.epochs)]


def expected_acceptance(band: Band, dist: MarginalDistribution) -> float:
    if band.is_full_space:
        return 1.0
    return band_mass(dist, band.normal, band.width)


def draw_from_band(
    band: Band,
    n: int,
    world: World,
    ledger: QueryLedger,
    rng: np.random.Generator,
    epoch: int = 0,
    max_attempts: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Draw ``n`` labeled examples from the marginal conditioned on ``band``.

    Candidates are drawn in batches but accounted as if drawn one at a time:
    draws past the n-th acceptance are discarded uncounted. Only accepted
    points are sent to the labeling oracle.

    Returns ``(X, y)`` with ``X`` of shape (n, d) and ``y`` in {-1, +1}.
    """
    if n < 1:
        raise ParameterError(f"need n >= 1, got {n}")
    dist = world.dist
    if band.is_full_space:
        X = dist.sample(n, rng)
        y = world.label(X, rng)
        ledger.record(epoch, n, 0, n)
        return X, y

    mass = expected_acceptance(band, dist)
    if max_attempts is None:
        max_attempts = int(ATTEMPT_FACTOR * n / max(mass, MASS_FLOOR))
    kept = []
    accepted = 0
    attempts = 0
    while accepted < n:
        if attempts >= max_attempts:
            raise SamplingStarvationError(
                f"band of width {band.width:g} accepted {accepted}/{n} after {attempts} draws",
                width=band.width,
                attempts=attempts,
            )
        need = n - accepted
        batch = min(int(math.ceil(1.2 * need / max(mass, MASS_FLOOR))) + 16, max_attempts - attempts)
        batch = max(min(batch, BATCH_FLOATS // dist.dim), 1)
        cand = dist.sample(batch, rng)
        inside = np.nonzero(band.contains(cand))[0]
        if inside.shape[0] >= need:
            last = inside[need - 1]
            inside = inside[:need]
            attempts += int(last) + 1
        else:
            attempts += batch
        kept.append(cand[inside])
        accepted += inside.shape[0]
    X = np.concatenate(kept, axis=0)
    y = world.label(X, rng)
    ledger.record(epoch, attempts, attempts - n, n)
    return X, y
