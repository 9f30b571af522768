"""Exact implementations of the hard function constructions.

The one-dimensional tilted family is stored as an exact piecewise-linear
representation over the rationals (breakpoints, values and slopes are
`fractions.Fraction`), converted to float64 only at the oracle boundary.
All multi-dimensional instances are immutable after construction and
safe to share across threads.

Subgradient selection at kinks is deterministic: 1-D piecewise-linear
functions return the right-hand slope at a breakpoint, ``max``
composites return the branch attaining the maximum (first listed wins
ties, so ``[a]_+ = max{a, 0}`` picks the ``a`` branch at ``a = 0``),
and norm terms return the zero vector at the origin.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import (
    Ball,
    DimensionMismatch,
    FunctionInstance,
    InstanceMeta,
    OracleReply,
    Seed,
    as_point,
    sample_sphere,
)

__all__ = [
    "TiltedFamily",
    "tilted_build",
    "tilted_minimizer",
    "interval",
    "ChannelInstance",
    "channel_build",
    "default_channel_rho",
    "channel_case_subgrad",
    "BarInstance",
    "GhatInstance",
    "GridRidge",
    "grid_ridge_build",
    "GridGuardError",
    "Spiral",
    "spiral_eval_grad",
    "Constant",
    "Affine",
    "AbsFirstCoord",
    "NegNorm",
    "HalfSquaredNorm",
    "make_instance",
    "instance_to_dict",
    "instance_from_dict",
]


# ---------------------------------------------------------------------------
# Recursive tilted family
# ---------------------------------------------------------------------------

_F0 = Fraction(0)
_F1 = Fraction(1)


def _build_pieces(sigma: tuple[int, ...]):
    """Breakpoints of the depth-``len(sigma)`` tilted function on [0, 1].

    Returns (xs, vals, seg_slopes) with ``seg_slopes[i]`` the slope on
    ``[xs[i], xs[i+1]]``; the function continues with slope -1 left of 0
    and +1 right of 1.
    """
    first, rest = sigma[0], sigma[1:]
    if not rest:
        if first == 0:
            return (
                [_F0, Fraction(3, 8), _F1],
                [_F1, Fraction(1, 4), _F1],
                [Fraction(-2), Fraction(6, 5)],
            )
        return (
            [_F0, Fraction(5, 8), _F1],
            [_F1, Fraction(1, 4), _F1],
            [Fraction(-6, 5), Fraction(2)],
        )
    inner_xs, inner_vals, inner_slopes = _build_pieces(rest)
    # the inner copy is pasted as (1/4) h(4x - 1 - sigma_1) + 1/4, which
    # maps [0,1] onto [(1+s)/4, (2+s)/4] and leaves slopes unchanged
    shift = 1 + first
    xs = [_F0] + [(u + shift) / 4 for u in inner_xs] + [_F1]
    vals = [_F1] + [v / 4 + Fraction(1, 4) for v in inner_vals] + [_F1]
    if first == 0:
        slopes = [Fraction(-2)] + inner_slopes + [_F1]
    else:
        slopes = [Fraction(-1)] + inner_slopes + [Fraction(2)]
    return xs, vals, slopes


@dataclass(frozen=True)
class TiltedFamily:
    """The recursive 1-D hard function, exact on all of R.

    ``breakpoints`` lists ``(x, value, right_slope)`` triples in
    increasing x; left of the first breakpoint the slope is -1, and the
    triple at x = 1 carries the right-tail slope +1.
    """

    N: int
    sigma: tuple[int, ...]
    xs: tuple[Fraction, ...]
    vals: tuple[Fraction, ...]
    seg_slopes: tuple[Fraction, ...]
    meta: InstanceMeta = field(init=False, compare=False)
    _fx: np.ndarray = field(init=False, repr=False, compare=False)
    _fv: np.ndarray = field(init=False, repr=False, compare=False)
    _fs: np.ndarray = field(init=False, repr=False, compare=False)

    LEFT_SLOPE = Fraction(-1)
    RIGHT_SLOPE = Fraction(1)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_fx", np.array([float(x) for x in self.xs]))
        object.__setattr__(self, "_fv", np.array([float(v) for v in self.vals]))
        slopes = list(self.seg_slopes) + [self.RIGHT_SLOPE]
        object.__setattr__(self, "_fs", np.array([float(s) for s in slopes]))
        object.__setattr__(
            self,
            "meta",
            InstanceMeta(dim=1, lipschitz=2.0, lower_bound=float(self.min_value_exact)),
        )

    # -- exact accessors ---------------------------------------------------

    @property
    def breakpoints(self) -> list[tuple[Fraction, Fraction, Fraction]]:
        slopes = list(self.seg_slopes) + [self.RIGHT_SLOPE]
        return list(zip(self.xs, self.vals, slopes))

    @property
    def xstar_exact(self) -> Fraction:
        return self.xs[self._min_index()]

    @property
    def min_value_exact(self) -> Fraction:
        return self.vals[self._min_index()]

    def _min_index(self) -> int:
        slopes = list(self.seg_slopes) + [self.RIGHT_SLOPE]
        for i in range(1, len(self.xs)):
            if slopes[i - 1] < 0 < slopes[i]:
                return i
        raise AssertionError("piecewise representation has no sign change")

    def value_exact(self, x: Fraction) -> Fraction:
        if x < 0:
            return 1 - x
        if x >= 1:
            return Fraction(x)
        i = bisect_right(self.xs, x) - 1
        return self.vals[i] + self.seg_slopes[i] * (x - self.xs[i])

    def slope_right_exact(self, x: Fraction) -> Fraction:
        if x < 0:
            return self.LEFT_SLOPE
        if x >= 1:
            return self.RIGHT_SLOPE
        i = bisect_right(self.xs, x) - 1
        return self.seg_slopes[i]

    # -- float path --------------------------------------------------------

    def value(self, x: float) -> float:
        if x < 0.0:
            return 1.0 - x
        if x >= 1.0:
            return float(x)
        i = int(np.searchsorted(self._fx, x, side="right")) - 1
        return float(self._fv[i] + self._fs[i] * (x - self._fx[i]))

    def slope_right(self, x: float) -> float:
        if x < 0.0:
            return -1.0
        if x >= 1.0:
            return 1.0
        return float(self._fs[int(np.searchsorted(self._fx, x, side="right")) - 1])

    def value_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._fx, x, side="right") - 1, 0, len(self.xs) - 1)
        out = self._fv[idx] + self._fs[idx] * (x - self._fx[idx])
        out = np.where(x < 0.0, 1.0 - x, out)
        return np.where(x >= 1.0, x, out)

    def slope_array(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self._fx, x, side="right") - 1, 0, len(self.xs) - 1)
        out = self._fs[idx]
        out = np.where(x < 0.0, -1.0, out)
        return np.where(x >= 1.0, 1.0, out)

    def is_breakpoint(self, x: float) -> bool:
        if x < 0.0 or x > 1.0:
            return False
        i = int(np.searchsorted(self._fx, x))
        return i < len(self.xs) and self._fx[i] == x

    def reply_scalar(self, x) -> OracleReply:
        """Oracle reply for a scalar query; exact path for Fraction input."""
        if isinstance(x, Fraction):
            return OracleReply(
                value=float(self.value_exact(x)),
                subgrad=np.array([float(self.slope_right_exact(x))]),
                differentiable=x not in self.xs,
            )
        xf = float(x)
        return OracleReply(
            value=self.value(xf),
            subgrad=np.array([self.slope_right(xf)]),
            differentiable=not self.is_breakpoint(xf),
        )

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, 1)
        return self.reply_scalar(float(p[0]))


def tilted_build(N: int, sigma: Sequence[int]) -> TiltedFamily:
    """Build the depth-``N`` tilted function for bit vector ``sigma``."""
    if N < 1:
        raise ValueError("recursion depth N must be >= 1")
    bits = tuple(int(b) for b in sigma)
    if len(bits) != N:
        raise ValueError(f"sigma must have length {N}, got {len(bits)}")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("sigma entries must be 0 or 1")
    xs, vals, slopes = _build_pieces(bits)
    return TiltedFamily(N=N, sigma=bits, xs=tuple(xs), vals=tuple(vals), seg_slopes=tuple(slopes))


def tilted_minimizer(f: TiltedFamily) -> tuple[float, float]:
    """The unique breakpoint where the slope flips negative-to-positive."""
    return float(f.xstar_exact), float(f.min_value_exact)


def interval(sigma_prefix: Sequence[int]) -> tuple[Fraction, Fraction]:
    """Exact endpoints of the nested quarter-scale interval of a prefix."""
    bits = tuple(int(b) for b in sigma_prefix)
    if not bits:
        raise ValueError("sigma prefix must be nonempty")
    if any(b not in (0, 1) for b in bits):
        raise ValueError("sigma entries must be 0 or 1")
    lo = sum((Fraction(b + 1, 4**i) for i, b in enumerate(bits, start=1)), _F0)
    return lo, lo + Fraction(1, 4 ** len(bits))


# ---------------------------------------------------------------------------
# Channel construction
# ---------------------------------------------------------------------------


def _norm_dir(v: np.ndarray) -> np.ndarray:
    """Direction of v; the zero vector at v = 0 (the selected Clarke element)."""
    n = np.linalg.norm(v)
    return v / n if n > 0.0 else np.zeros_like(v)


@dataclass(frozen=True)
class ChannelInstance:
    """The d-dimensional hard function with a hidden channel direction.

    Public values are the clamped, shifted function
    ``max{-1, fw(x - xstar * e_d)}`` whose only small-gradient region is
    the flat clamp at the end of the channel.
    """

    d: int
    h: TiltedFamily
    xstar: float
    w: np.ndarray
    rho: float
    meta: InstanceMeta = field(init=False, compare=False)
    wbar: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("channel construction needs dimension d >= 2")
        w = as_point(self.w, self.d)
        if w[-1] != 0.0:
            raise ValueError("last coordinate of w must be 0")
        if not np.any(w != 0.0):
            raise ValueError("w must be nonzero")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "wbar", w / np.linalg.norm(w))
        object.__setattr__(
            self, "meta", InstanceMeta(dim=self.d, lipschitz=15.0 / 4.0, lower_bound=-1.0)
        )

    def shifted_argument(self, x: np.ndarray) -> np.ndarray:
        y = np.array(x, dtype=float)
        y[-1] -= self.xstar
        return y

    def channel_gap(self, y: np.ndarray) -> float:
        """The pre-ReLU channel activation at the shifted argument y."""
        z = y + self.w
        return float(self.wbar @ z - 0.5 * np.linalg.norm(z))

    def fw(self, y: np.ndarray) -> float:
        """Unclamped, unshifted value (minimum of the embedded 1-D family at y_d = 0)."""
        y = as_point(y, self.d)
        base = self.h.value(float(y[-1]) + self.xstar) + 0.25 * np.linalg.norm(y[:-1])
        a = self.channel_gap(y)
        return base - (a if a > 0.0 else 0.0)

    def value(self, x: np.ndarray) -> float:
        return max(-1.0, self.fw(self.shifted_argument(x)))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.d)
        y = self.shifted_argument(p)
        hx = float(p[-1])
        nrm = float(np.linalg.norm(y[:-1]))
        a = self.channel_gap(y)
        v = self.h.value(hx) + 0.25 * nrm - (a if a > 0.0 else 0.0)
        if v < -1.0:
            return OracleReply(value=-1.0, subgrad=np.zeros(self.d), differentiable=True)
        if v == -1.0:
            # tie of max{-1, fw}: first-listed branch (the constant) wins
            return OracleReply(value=-1.0, subgrad=np.zeros(self.d), differentiable=False)
        grad = np.zeros(self.d)
        grad[-1] = self.h.slope_right(hx)
        grad[:-1] += 0.25 * _norm_dir(y[:-1])
        if a >= 0.0:
            # [a]_+ = max{a, 0}: at a = 0 the first-listed (active) branch wins
            grad -= self.wbar - 0.5 * _norm_dir(y + self.w)
        diff = (
            not self.h.is_breakpoint(hx)
            and nrm != 0.0
            and a != 0.0
        )
        return OracleReply(value=v, subgrad=grad, differentiable=diff)

    def value_and_grad_batch(self, X: np.ndarray):
        """Vectorized oracle over rows of X.

        Returns (values, grads, differentiable_mask, clamped_mask); the
        per-row results match :meth:`oracle` wherever the mask is true.
        """
        X = np.asarray(X, dtype=float)
        Y = X.copy()
        Y[:, -1] -= self.xstar
        hvals = self.h.value_array(X[:, -1])
        nrm = np.linalg.norm(Y[:, :-1], axis=1)
        Z = Y + self.w
        zn = np.linalg.norm(Z, axis=1)
        a = Z @ self.wbar - 0.5 * zn
        fw = hvals + 0.25 * nrm - np.where(a > 0.0, a, 0.0)
        vals = np.maximum(-1.0, fw)
        clamped = fw < -1.0

        grads = np.zeros_like(X)
        grads[:, -1] = self.h.slope_array(X[:, -1])
        safe_nrm = np.where(nrm > 0.0, nrm, 1.0)
        grads[:, :-1] += 0.25 * Y[:, :-1] / safe_nrm[:, None]
        active = a >= 0.0
        safe_zn = np.where(zn > 0.0, zn, 1.0)
        grads[active] -= self.wbar[None, :] - 0.5 * Z[active] / safe_zn[active, None]
        grads[clamped] = 0.0

        bp = np.zeros(len(X), dtype=bool)
        for i, xd in enumerate(X[:, -1]):
            bp[i] = self.h.is_breakpoint(float(xd))
        diff = (~bp) & (nrm != 0.0) & (a != 0.0) & (fw != -1.0)
        diff |= clamped
        return vals, grads, diff, clamped

    def bar_instance(self) -> "BarInstance":
        """The channel-free lookalike the hidden direction hides inside."""
        return BarInstance(d=self.d, h=self.h)

    def clamp_witness(self) -> np.ndarray:
        """A point v with values -1 on a whole neighborhood."""
        v = 12.0 * self.wbar
        v[-1] += self.xstar
        return v


@dataclass(frozen=True)
class BarInstance:
    """``h(x_d) + (1/4) ||(x_1..x_{d-1})||`` with no channel term."""

    d: int
    h: TiltedFamily
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("needs dimension d >= 2")
        object.__setattr__(
            self,
            "meta",
            InstanceMeta(dim=self.d, lipschitz=2.25, lower_bound=float(self.h.min_value_exact)),
        )

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.d)
        hx = float(p[-1])
        head = p[:-1]
        nrm = float(np.linalg.norm(head))
        v = self.h.value(hx) + 0.25 * nrm
        grad = np.zeros(self.d)
        grad[-1] = self.h.slope_right(hx)
        grad[:-1] += 0.25 * _norm_dir(head)
        diff = not self.h.is_breakpoint(hx) and nrm != 0.0
        return OracleReply(value=v, subgrad=grad, differentiable=diff)


def default_channel_rho(h: TiltedFamily) -> float:
    """Half-width of the innermost interval of the embedded family."""
    return float(Fraction(1, 2) * Fraction(1, 4**h.N))


def channel_build(d: int, h: TiltedFamily, rho: float, seed: Seed) -> ChannelInstance:
    """Sample the hidden direction and assemble the channel instance.

    ``(w_1..w_{d-1})`` is uniform on the radius ``rho/100`` sphere and
    ``w_d = 0``; the shift is the embedded family's minimizer.
    """
    if d < 2:
        raise ValueError("channel construction needs dimension d >= 2")
    if rho <= 0:
        raise ValueError("rho must be positive")
    rng = seed.rng()
    w = np.zeros(d)
    if d == 2:
        w[0] = (rho / 100.0) * (1.0 if rng.random() < 0.5 else -1.0)
    else:
        w[:-1] = (rho / 100.0) * sample_sphere(rng, 1, d - 1)[0]
    xstar, _ = tilted_minimizer(h)
    return ChannelInstance(d=d, h=h, xstar=xstar, w=w, rho=float(rho))


def channel_case_subgrad(inst: ChannelInstance, x: np.ndarray):
    """Classify x into the six exhaustive regions of the no-small-gradient
    argument (or the clamp), and return the selected subgradient there."""
    p = as_point(x, inst.d)
    y = inst.shifted_argument(p)
    sub = inst.oracle(p).subgrad
    if inst.fw(y) < -1.0 - 1e-12:
        return "clamped", np.zeros(inst.d)
    if y[-1] != 0.0:
        return 1, sub
    if not np.any(y != 0.0):
        return 2, sub
    if not np.any(y + inst.w != 0.0):
        return 3, sub
    c = float(inst.wbar @ _norm_dir(y + inst.w))
    if c < 0.5:
        return 4, sub
    if c > 0.5:
        return 5, sub
    return 6, sub


@dataclass(frozen=True)
class GhatInstance:
    """Clamped variant with ``|x_d|`` in place of the tilted family.

    The origin is a (delta, 0)-stationary point while every point with a
    small subgradient lies at distance >= 4/15; ``||w|| = delta/2`` by
    default, with ``w_d = 0``.
    """

    d: int
    w: np.ndarray
    meta: InstanceMeta = field(init=False, compare=False)
    wbar: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.d < 2:
            raise ValueError("needs dimension d >= 2")
        w = as_point(self.w, self.d)
        if w[-1] != 0.0 or not np.any(w != 0.0):
            raise ValueError("w must be nonzero with last coordinate 0")
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "wbar", w / np.linalg.norm(w))
        floor = self.g_value(np.zeros(self.d)) - 1.0
        object.__setattr__(
            self, "meta", InstanceMeta(dim=self.d, lipschitz=15.0 / 4.0, lower_bound=floor)
        )

    @classmethod
    def build(cls, d: int, delta: float, seed: Seed) -> "GhatInstance":
        if delta <= 0:
            raise ValueError("delta must be positive")
        rng = seed.rng()
        w = np.zeros(d)
        if d == 2:
            w[0] = (delta / 2.0) * (1.0 if rng.random() < 0.5 else -1.0)
        else:
            w[:-1] = (delta / 2.0) * sample_sphere(rng, 1, d - 1)[0]
        return cls(d=d, w=w)

    def g_value(self, x: np.ndarray) -> float:
        z = x + self.w
        a = float(self.wbar @ z - 0.5 * np.linalg.norm(z))
        return abs(float(x[-1])) + 0.25 * float(np.linalg.norm(x[:-1])) - (a if a > 0.0 else 0.0)

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.d)
        floor = self.meta.lower_bound
        v = self.g_value(p)
        if v < floor:
            return OracleReply(value=floor, subgrad=np.zeros(self.d), differentiable=True)
        if v == floor:
            return OracleReply(value=floor, subgrad=np.zeros(self.d), differentiable=False)
        z = p + self.w
        a = float(self.wbar @ z - 0.5 * np.linalg.norm(z))
        grad = np.zeros(self.d)
        grad[-1] = 1.0 if p[-1] >= 0.0 else -1.0  # right-hand slope of |.| at 0
        grad[:-1] += 0.25 * _norm_dir(p[:-1])
        if a >= 0.0:
            grad -= self.wbar - 0.5 * _norm_dir(z)
        diff = p[-1] != 0.0 and np.any(p[:-1] != 0.0) and a != 0.0
        return OracleReply(value=v, subgrad=grad, differentiable=bool(diff))


# ---------------------------------------------------------------------------
# Monotone ridge over an inflated grid
# ---------------------------------------------------------------------------


class GridGuardError(ValueError):
    """The grid construction precondition failed."""


@dataclass(frozen=True)
class GridRidge:
    """1-Lipschitz ridge ``f(x) = g(<x, w>)`` whose 1-D profile is flat
    exactly on the inflated grid and has unit slope elsewhere."""

    dim: int
    w: np.ndarray
    r: float
    M: int
    T: int
    spacing: float
    inflation: float
    K: int
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        w = as_point(self.w, self.dim)
        object.__setattr__(self, "w", w)
        object.__setattr__(
            self, "meta", InstanceMeta(dim=self.dim, lipschitz=1.0, lower_bound=-np.inf)
        )

    @property
    def grid(self) -> np.ndarray:
        return self.spacing * np.arange(self.K + 1)

    def g(self, t: float) -> float:
        """Profile value: identity minus the flat length crossed."""
        grid = self.grid
        i = self.inflation
        if t >= 0.0:
            lo = np.maximum(grid - i, 0.0)
            hi = np.minimum(grid + i, t)
            return t - float(np.sum(np.maximum(0.0, hi - lo)))
        lo = np.maximum(grid - i, t)
        hi = np.minimum(grid + i, 0.0)
        return t + float(np.sum(np.maximum(0.0, hi - lo)))

    def g_slope_right(self, t: float) -> float:
        grid = self.grid
        inside = np.any((grid - self.inflation <= t) & (t < grid + self.inflation))
        return 0.0 if inside else 1.0

    def g_is_kink(self, t: float) -> bool:
        grid = self.grid
        return bool(np.any(t == grid - self.inflation) or np.any(t == grid + self.inflation))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.dim)
        t = float(p @ self.w)
        return OracleReply(
            value=self.g(t),
            subgrad=self.g_slope_right(t) * self.w,
            differentiable=not self.g_is_kink(t),
        )


def _grid_log_term(M: int, T: int) -> float:
    return math.log((M + 1) * (T + 1))


def grid_ridge_build(d: int, r: float, M: int, T: int, seed: Seed) -> GridRidge:
    """Build the grid ridge after checking the width guard."""
    if d < 1 or r <= 0 or M < 1 or T < 1:
        raise ValueError("need d >= 1, r > 0, M >= 1, T >= 1")
    log_term = _grid_log_term(M, T)
    guard = (1.0 / (16.0 * r)) * math.sqrt(d / log_term)
    if not guard > 2.0:
        raise GridGuardError(
            f"grid guard failed: (1/16r)*sqrt(d/log((M+1)(T+1))) = {guard:.6g} <= 2"
        )
    spacing = 16.0 * r * math.sqrt(log_term / d)
    rng = seed.rng()
    w = sample_sphere(rng, 1, d)[0]
    return GridRidge(
        dim=d,
        w=w,
        r=float(r),
        M=int(M),
        T=int(T),
        spacing=spacing,
        inflation=spacing / 4.0,
        K=int(math.floor(1.0 / spacing)),
    )


# ---------------------------------------------------------------------------
# Spiral (hull-stationary origin with no small gradients)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spiral:
    """``(2 delta + u) sin(pi v / (2 delta))`` on R^2.

    With ``extended=True`` the values fade radially to 0 between radius
    ``2 delta`` and ``4 delta``, giving a globally bounded and Lipschitz
    function; otherwise the stated Lipschitz constant (2 pi) applies on
    the radius ``2 delta`` ball, the region all scans use.
    """

    delta: float
    extended: bool = True
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.extended:
            meta = InstanceMeta(dim=2, lipschitz=2.0 * math.pi + 2.0, lower_bound=-4.0 * self.delta)
        else:
            meta = InstanceMeta(dim=2, lipschitz=2.0 * math.pi, lower_bound=-np.inf)
        object.__setattr__(self, "meta", meta)

    def _inner(self, u: float, v: float) -> tuple[float, np.ndarray]:
        k = math.pi / (2.0 * self.delta)
        s, c = math.sin(k * v), math.cos(k * v)
        return (2.0 * self.delta + u) * s, np.array([s, k * (2.0 * self.delta + u) * c])

    def eval_grad(self, u: float, v: float) -> tuple[float, np.ndarray]:
        if not self.extended:
            return self._inner(u, v)
        rho = math.hypot(u, v)
        if rho <= 2.0 * self.delta:
            return self._inner(u, v)
        fade = 2.0 - rho / (2.0 * self.delta)
        if fade <= 0.0:
            return 0.0, np.zeros(2)
        xb = np.array([u, v]) / rho
        rim = 2.0 * self.delta * xb
        f_rim, g_rim = self._inner(rim[0], rim[1])
        tangential = g_rim - (g_rim @ xb) * xb
        grad = (-1.0 / (2.0 * self.delta)) * f_rim * xb + fade * (2.0 * self.delta / rho) * tangential
        return fade * f_rim, grad

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, 2)
        val, grad = self.eval_grad(float(p[0]), float(p[1]))
        diff = True
        if self.extended:
            rho = math.hypot(float(p[0]), float(p[1]))
            diff = rho != 2.0 * self.delta and rho != 4.0 * self.delta
        return OracleReply(value=val, subgrad=grad, differentiable=diff)


def spiral_eval_grad(s: Spiral, u: float, v: float) -> tuple[float, np.ndarray]:
    """Analytic value and gradient of the spiral at (u, v)."""
    return s.eval_grad(u, v)


# ---------------------------------------------------------------------------
# Simple corpus functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Constant:
    c: float
    dim: int = 1
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "meta", InstanceMeta(self.dim, 0.0, self.c))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.dim)
        return OracleReply(value=self.c, subgrad=np.zeros(self.dim), differentiable=True)


@dataclass(frozen=True)
class Affine:
    a: np.ndarray
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        a = as_point(self.a)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "meta", InstanceMeta(a.shape[0], float(np.linalg.norm(a))))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.meta.dim)
        return OracleReply(value=float(self.a @ p), subgrad=self.a.copy(), differentiable=True)


@dataclass(frozen=True)
class AbsFirstCoord:
    """``|x_1|``; the 1-Lipschitz running example for every smoother."""

    dim: int = 1
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "meta", InstanceMeta(self.dim, 1.0, 0.0))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.dim)
        g = np.zeros(self.dim)
        g[0] = 1.0 if p[0] >= 0.0 else -1.0  # right-hand slope at the kink
        return OracleReply(value=abs(float(p[0])), subgrad=g, differentiable=p[0] != 0.0)


@dataclass(frozen=True)
class NegNorm:
    """``-||x||`` (in 1-D the negative of a two-sided ReLU)."""

    dim: int = 1
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "meta", InstanceMeta(self.dim, 1.0))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.dim)
        n = float(np.linalg.norm(p))
        return OracleReply(value=-n, subgrad=-_norm_dir(p), differentiable=n != 0.0)


@dataclass(frozen=True)
class HalfSquaredNorm:
    """``||x||^2 / 2``; Lipschitz bound stated for the radius-10 ball all
    experiments stay inside."""

    dim: int = 1
    meta: InstanceMeta = field(init=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "meta", InstanceMeta(self.dim, 10.0, 0.0))

    def oracle(self, x: np.ndarray) -> OracleReply:
        p = as_point(x, self.dim)
        return OracleReply(value=0.5 * float(p @ p), subgrad=p.copy(), differentiable=True)


# ---------------------------------------------------------------------------
# Named registry and JSON round-trip
# ---------------------------------------------------------------------------


def make_instance(name: str, dim: int = 2, delta: float = 1.0) -> FunctionInstance:
    """Instances addressable by name from the CLI."""
    if name == "abs1":
        return AbsFirstCoord(dim=dim)
    if name == "abs1d":
        return AbsFirstCoord(dim=1)
    if name == "negabs":
        return NegNorm(dim=dim)
    if name == "quad":
        return HalfSquaredNorm(dim=dim)
    if name == "const":
        return Constant(c=0.0, dim=dim)
    if name == "spiral":
        return Spiral(delta=delta, extended=True)
    raise KeyError(f"unknown instance name: {name!r}")


def instance_to_dict(inst) -> dict:
    """JSON-ready description; sampled vectors are stored explicitly so
    the round trip is exact."""
    if isinstance(inst, TiltedFamily):
        return {"kind": "tilted", "N": inst.N, "sigma": list(inst.sigma)}
    if isinstance(inst, ChannelInstance):
        return {
            "kind": "channel",
            "d": inst.d,
            "rho": inst.rho,
            "xstar": inst.xstar,
            "w": inst.w.tolist(),
            "h": {"N": inst.h.N, "sigma": list(inst.h.sigma)},
        }
    if isinstance(inst, GridRidge):
        return {
            "kind": "grid-ridge",
            "d": inst.dim,
            "r": inst.r,
            "M": inst.M,
            "T": inst.T,
            "w": inst.w.tolist(),
        }
    if isinstance(inst, Spiral):
        return {"kind": "spiral", "delta": inst.delta, "extended": inst.extended}
    if isinstance(inst, GhatInstance):
        return {"kind": "ghat", "d": inst.d, "w": inst.w.tolist()}
    if isinstance(inst, AbsFirstCoord):
        return {"kind": "abs1", "dim": inst.dim}
    if isinstance(inst, NegNorm):
        return {"kind": "negabs", "dim": inst.dim}
    if isinstance(inst, HalfSquaredNorm):
        return {"kind": "quad", "dim": inst.dim}
    if isinstance(inst, Constant):
        return {"kind": "const", "dim": inst.dim, "c": inst.c}
    if isinstance(inst, Affine):
        return {"kind": "affine", "a": inst.a.tolist()}
    if isinstance(inst, BarInstance):
        return {"kind": "bar", "d": inst.d, "h": {"N": inst.h.N, "sigma": list(inst.h.sigma)}}
    raise TypeError(f"cannot serialize instance of type {type(inst).__name__}")


def instance_from_dict(doc: dict):
    kind = doc["kind"]
    if kind == "tilted":
        return tilted_build(doc["N"], doc["sigma"])
    if kind == "channel":
        h = tilted_build(doc["h"]["N"], doc["h"]["sigma"])
        return ChannelInstance(
            d=doc["d"], h=h, xstar=doc["xstar"], w=np.array(doc["w"]), rho=doc["rho"]
        )
    if kind == "grid-ridge":
        d, r, M, T = doc["d"], doc["r"], doc["M"], doc["T"]
        log_term = _grid_log_term(M, T)
        spacing = 16.0 * r * math.sqrt(log_term / d)
        return GridRidge(
            dim=d,
            w=np.array(doc["w"]),
            r=r,
            M=M,
            T=T,
            spacing=spacing,
            inflation=spacing / 4.0,
            K=int(math.floor(1.0 / spacing)),
        )
    if kind == "spiral":
        return Spiral(delta=doc["delta"], extended=doc["extended"])
    if kind == "ghat":
        return GhatInstance(d=doc["d"], w=np.array(doc["w"]))
    if kind == "abs1":
        return AbsFirstCoord(dim=doc["dim"])
    if kind == "negabs":
        return NegNorm(dim=doc["dim"])
    if kind == "quad":
        return HalfSquaredNorm(dim=doc["dim"])
    if kind == "const":
        return Constant(c=doc["c"], dim=doc["dim"])
    if kind == "affine":
        return Affine(a=np.array(doc["a"]))
    if kind == "bar":
        return BarInstance(d=doc["d"], h=tilted_build(doc["h"]["N"], doc["h"]["sigma"]))
    raise KeyError(f"unknown instance kind: {kind!r}")
