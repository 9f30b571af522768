"""Vector numerics, seeded RNG streams, and the local-oracle abstraction.

Points are plain 1-D float64 numpy arrays.  A function instance is any
object exposing ``meta`` (an :class:`InstanceMeta`) and an ``oracle(x)``
method returning an :class:`OracleReply`; every instance picks one Clarke
subgradient at kinks through a deterministic selection rule so that
repeated queries are bit-for-bit identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence, runtime_checkable

import numpy as np

__all__ = [
    "Seed",
    "Ball",
    "OracleReply",
    "InstanceMeta",
    "FunctionInstance",
    "DimensionMismatch",
    "as_point",
    "oracle_query",
    "secant_lipschitz_estimate",
    "finite_diff_gradient",
    "sample_ball",
    "sample_sphere",
]


class DimensionMismatch(ValueError):
    """Query dimension does not match the instance dimension."""


@dataclass(frozen=True)
class Seed:
    """Key of a counter-based RNG stream.

    Identical ``(seed, stream)`` pairs reproduce identical random
    sequences bit-for-bit; distinct streams are statistically
    independent, so parallel work is partitioned by stream index.
    """

    seed: int
    stream: int = 0

    def __post_init__(self) -> None:
        if not (0 <= self.seed < 2**64) or not (0 <= self.stream < 2**64):
            raise ValueError("seed and stream must be 64-bit unsigned integers")

    def rng(self) -> np.random.Generator:
        # Philox is counter-based; keying by (stream, seed) makes streams
        # independent without sequential jumps.
        return np.random.Generator(np.random.Philox(key=(self.stream << 64) | self.seed))

    def substream(self, index: int) -> "Seed":
        return Seed(self.seed, (self.stream + index) % 2**64)


@dataclass(frozen=True)
class Ball:
    """Closed Euclidean ball ``{x : ||x - center|| <= radius}``."""

    center: np.ndarray
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", as_point(self.center))
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    @property
    def dim(self) -> int:
        return self.center.shape[0]


@dataclass(frozen=True)
class OracleReply:
    """First-order local oracle reply: value, one Clarke subgradient, and
    whether the instance is differentiable at the query point."""

    value: float
    subgrad: np.ndarray
    differentiable: bool


@dataclass(frozen=True)
class InstanceMeta:
    """Structural metadata of a function instance.

    ``lipschitz`` is a valid global Lipschitz bound (on the instance's
    stated domain of interest); ``lower_bound`` is ``-inf`` when the
    function is unbounded below.
    """

    dim: int
    lipschitz: float
    lower_bound: float = -np.inf

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.lipschitz < 0:
            raise ValueError("lipschitz must be >= 0")


@runtime_checkable
class FunctionInstance(Protocol):
    meta: InstanceMeta

    def oracle(self, x: np.ndarray) -> OracleReply: ...


def as_point(x: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Validate and convert to a finite float64 vector."""
    p = np.asarray(x, dtype=float)
    if p.ndim == 0:
        p = p.reshape(1)
    if p.ndim != 1:
        raise ValueError(f"a point must be a 1-D vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite components")
    if dim is not None and p.shape[0] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {p.shape[0]}")
    return p


def oracle_query(instance: FunctionInstance, x: Sequence[float] | np.ndarray) -> OracleReply:
    """Query the instance's local first-order oracle at ``x``.

    Pure function of ``(instance, x)``: the reply only depends on the
    function restricted to a neighborhood of ``x``.
    """
    p = as_point(x, instance.meta.dim)
    return instance.oracle(p)


def sample_sphere(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """``n`` points uniform on the unit sphere in ``R^dim``."""
    if dim == 1:
        return np.where(rng.random((n, 1)) < 0.5, -1.0, 1.0)
    g = rng.standard_normal((n, dim))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    # resample the (probability ~0) degenerate rows rather than dividing by 0
    while np.any(norms == 0.0):
        bad = norms[:, 0] == 0.0
        g[bad] = rng.standard_normal((int(bad.sum()), dim))
        norms = np.linalg.norm(g, axis=1, keepdims=True)
    return g / norms


def sample_ball(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """``n`` points uniform in the closed unit ball: Gaussian direction
    times a ``U^(1/dim)`` radius."""
    u = sample_sphere(rng, n, dim)
    r = rng.random((n, 1)) ** (1.0 / dim)
    return u * r


def secant_lipschitz_estimate(
    instance: FunctionInstance, region: Ball, n: int, seed: Seed
) -> float:
    """Max of ``|f(x)-f(y)|/||x-y||`` over ``n`` random pairs in ``region``.

    Never exceeds the true Lipschitz constant of the instance on the
    region.
    """
    if n < 2:
        raise ValueError("need n >= 2 sample pairs")
    if region.radius == 0:
        raise ValueError("degenerate region: radius is 0")
    if region.dim != instance.meta.dim:
        raise DimensionMismatch("region dimension does not match instance")
    rng = seed.rng()
    best = 0.0
    xs = region.center + region.radius * sample_ball(rng, n, region.dim)
    ys = region.center + region.radius * sample_ball(rng, n, region.dim)
    for x, y in zip(xs, ys):
        gap = np.linalg.norm(x - y)
        if gap == 0.0:
            continue
        fx = instance.oracle(x).value
        fy = instance.oracle(y).value
        best = max(best, abs(fx - fy) / gap)
    return best


def finite_diff_gradient(instance: FunctionInstance, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient; meaningful where the instance is
    differentiable (the caller checks the oracle's flag)."""
    if h <= 0:
        raise ValueError("step h must be positive")
    p = as_point(x, instance.meta.dim)
    grad = np.empty_like(p)
    for i in range(p.shape[0]):
        e = np.zeros_like(p)
        e[i] = h
        grad[i] = (instance.oracle(p + e).value - instance.oracle(p - e).value) / (2.0 * h)
    return grad
