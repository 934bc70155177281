"""Synthetic data: isotropic log-concave marginals, sparse targets, label oracles."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import ParameterError
from .kernels import as_vector


@dataclass(frozen=True)
class RngState:
    """A (seed, stream) pair naming one reproducible random stream."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, stream: int) -> "RngState":
        # mixes the parent stream in so children of different parents differ
        return RngState(self.seed, self.stream * 1_000_003 + stream + 1)


class MarginalKind(enum.Enum):
    GAUSSIAN = "gaussian"
    UNIFORM_BALL = "uniform_ball"


@dataclass(frozen=True)
class MarginalDistribution:
    kind: MarginalKind
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.dim}")

    @property
    def ball_radius(self) -> float:
        # uniform on the ball of this radius has identity covariance
        return math.sqrt(self.dim + 2)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw an (n, d) array of i.i.d. points."""
        g = rng.standard_normal((n, self.dim))
        if self.kind is MarginalKind.GAUSSIAN:
            return g
        norms = np.linalg.norm(g, axis=1, keepdims=True)
        radii = self.ball_radius * rng.random((n, 1)) ** (1.0 / self.dim)
        return g / norms * radii

    def projection_cdf(self, s):
        """CDF of v.x for any unit v (the 1-D marginal is rotation invariant)."""
        s = np.asarray(s, dtype=np.float64)
        if self.kind is MarginalKind.GAUSSIAN:
            return special.ndtr(s)
        # v.x = R (2 B - 1) with B ~ Beta((d+1)/2, (d+1)/2)
        a = (self.dim + 1) / 2.0
        R = self.ball_radius
        u = np.clip((s / R + 1.0) / 2.0, 0.0, 1.0)
        return special.betainc(a, a, u)

    def projection_quantile(self, p):
        p = np.asarray(p, dtype=np.float64)
        if self.kind is MarginalKind.GAUSSIAN:
            return special.ndtri(p)
        a = (self.dim + 1) / 2.0
        return self.ball_radius * (2.0 * special.betaincinv(a, a, p) - 1.0)


def gaussian(d: int) -> MarginalDistribution:
    return MarginalDistribution(MarginalKind.GAUSSIAN, d)


def uniform_ball(d: int) -> MarginalDistribution:
    return MarginalDistribution(MarginalKind.UNIFORM_BALL, d)


def sample_x(dist: MarginalDistribution, rng: np.random.Generator) -> np.ndarray:
    return dist.sample(1, rng)[0]


@dataclass(frozen=True)
class SparseTarget:
    u: np.ndarray
    support: tuple
    t: int

    def __post_init__(self):
        u = as_vector(self.u)
        object.__setattr__(self, "u", u)
        if abs(np.linalg.norm(u) - 1.0) > 1e-12:
            raise ParameterError("target must have unit l2 norm")
        if len(self.support) > self.t:
            raise ParameterError("support larger than sparsity level")
        off = np.ones(u.shape[0], dtype=bool)
        off[list(self.support)] = False
        if np.any(u[off] != 0):
            raise ParameterError("target has nonzeros outside its support")

    @property
    def dim(self) -> int:
        return self.u.shape[0]


def sample_target(d: int, t: int, rng: np.random.Generator) -> SparseTarget:
    """Uniformly random support of size t, Gaussian values, unit norm."""
    if not (1 <= t <= d):
        raise ParameterError(f"need 1 <= t <= d, got t={t}, d={d}")
    support = np.sort(rng.choice(d, size=t, replace=False))
    vals = rng.standard_normal(t)
    while not np.any(vals):
        vals = rng.standard_normal(t)
    u = np.zeros(d)
    u[support] = vals / np.linalg.norm(vals)
    # renormalize once more so the norm is exact to the last bit or two
    u /= np.linalg.norm(u)
    return SparseTarget(u, tuple(int(i) for i in support), t)


class NoiseKind(enum.Enum):
    REALIZABLE = "realizable"
    ADVERSARIAL = "adversarial"
    BOUNDED = "bounded"


class AdversaryStrategy(enum.Enum):
    BOUNDARY_BAND = "boundary_band"
    HASHED_RANDOM = "hashed_random"


class BoundedProfile(enum.Enum):
    CONSTANT = "constant"
    MARGIN_DECAY = "margin_decay"


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = NoiseKind.REALIZABLE
    rate: float = 0.0
    strategy: AdversaryStrategy = AdversaryStrategy.BOUNDARY_BAND
    profile: BoundedProfile = BoundedProfile.CONSTANT

    def __post_init__(self):
        if self.kind is NoiseKind.ADVERSARIAL and not (0.0 < self.rate < 1.0):
            raise ParameterError(f"adversarial rate must lie in (0, 1), got {self.rate}")
        if self.kind is NoiseKind.BOUNDED and not (0.0 <= self.rate < 0.5):
            raise ParameterError(f"bounded rate must lie in [0, 1/2), got {self.rate}")
        if self.kind is NoiseKind.REALIZABLE and self.rate != 0.0:
            raise ParameterError("realizable noise has rate 0")

    @classmethod
    def realizable(cls) -> "NoiseModel":
        return cls(NoiseKind.REALIZABLE)

    @classmethod
    def adversarial(cls, nu: float, strategy=AdversaryStrategy.BOUNDARY_BAND) -> "NoiseModel":
        return cls(NoiseKind.ADVERSARIAL, nu, strategy=AdversaryStrategy(strategy))

    @classmethod
    def bounded(cls, eta: float, profile=BoundedProfile.CONSTANT) -> "NoiseModel":
        return cls(NoiseKind.BOUNDED, eta, profile=BoundedProfile(profile))

    @property
    def param_label(self) -> str:
        if self.kind is NoiseKind.ADVERSARIAL:
            return self.strategy.value
        if self.kind is NoiseKind.BOUNDED:
            return self.profile.value
        return ""


def sign(z):
    """Sign with sign(0) = +1."""
    return np.where(np.asarray(z) >= 0, 1, -1).astype(np.int8)


_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _splitmix(h: np.ndarray) -> np.ndarray:
    h = h + _GOLDEN
    h = (h ^ (h >> np.uint64(30))) * _M1
    h = (h ^ (h >> np.uint64(27))) * _M2
    return h ^ (h >> np.uint64(31))


def hash_unit(X: np.ndarray) -> np.ndarray:
    """Deterministic map from the bit pattern of each row to [0, 1)."""
    bits = np.ascontiguousarray(X, dtype=np.float64).view(np.uint64)
    h = np.zeros(bits.shape[0], dtype=np.uint64)
    with np.errstate(over="ignore"):
        for j in range(bits.shape[1]):
            h = _splitmix(h ^ bits[:, j])
    return (h >> np.uint64(11)).astype(np.float64) / float(1 << 53)


def boundary_band_width(dist: MarginalDistribution, nu: float) -> float:
    """Width gamma with P(|u.x| <= gamma) = nu."""
    return float(dist.projection_quantile((1.0 + nu) / 2.0))


@dataclass(frozen=True)
class World:
    """Everything needed to draw and label synthetic examples."""

    dist: MarginalDistribution
    target: SparseTarget
    noise: NoiseModel

    def __post_init__(self):
        if self.dist.dim != self.target.dim:
            raise ParameterError("marginal and target dimensions differ")

    @property
    def dim(self) -> int:
        return self.dist.dim

    def flip_probability(self, X: np.ndarray) -> np.ndarray:
        """Pointwise probability that the oracle disagrees with sign(u.x)."""
        X = np.atleast_2d(X)
        noise = self.noise
        if noise.kind is NoiseKind.REALIZABLE:
            return np.zeros(X.shape[0])
        margins = X @ self.target.u
        if noise.kind is NoiseKind.BOUNDED:
            if noise.profile is BoundedProfile.CONSTANT:
                return np.full(X.shape[0], noise.rate)
            return noise.rate * np.exp(-np.abs(margins))
        if noise.strategy is AdversaryStrategy.BOUNDARY_BAND:
            gamma = boundary_band_width(self.dist, noise.rate)
            return (np.abs(margins) <= gamma).astype(np.float64)
        return (hash_unit(X) < noise.rate).astype(np.float64)

    def label(self, X: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Query the oracle on each row of X. Returns int8 labels in {-1, +1}."""
        X = np.atleast_2d(X)
        clean = sign(X @ self.target.u)
        p = self.flip_probability(X)
        if self.noise.kind is NoiseKind.BOUNDED:
            flips = rng.random(X.shape[0]) < p
        else:
            flips = p >= 1.0
        return np.where(flips, -clean, clean).astype(np.int8)


def label(x, target: SparseTarget, noise: NoiseModel, rng: np.random.Generator, dist=None) -> int:
    """Single-point oracle. ``dist`` defaults to a Gaussian marginal."""
    x = as_vector(x, target.dim)
    world = World(dist or gaussian(target.dim), target, noise)
    return int(world.label(x[None, :], rng)[0])


def band_mass(dist: MarginalDistribution, v, b: float) -> float:
    """Exact P(|v.x| <= b) for unit v."""
    v = as_vector(v, dist.dim)
    if abs(np.linalg.norm(v) - 1.0) > 1e-9:
        raise ParameterError("band normal must be a unit vector")
    if not b > 0:
        raise ParameterError(f"band width must be positive, got {b}")
    if math.isinf(b):
        return 1.0
    return float(dist.projection_cdf(b) - dist.projection_cdf(-b))


def monte_carlo_band_mass(dist: MarginalDistribution, v, b: float, m: int, rng) -> tuple[float, float]:
    """Monte Carlo estimate of the band mass with its standard error."""
    X = dist.sample(m, rng)
    p = float(np.mean(np.abs(X @ v) <= b))
    return p, math.sqrt(max(p * (1 - p), 0.0) / m)
