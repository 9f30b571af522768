"""Randomized, proximal (Moreau) and double-proximal (Lasry-Lions)
smoothing, plus estimators for approximation error and gradient
smoothness.

The inner minimizations are treated as oracles and solved by brute
force at desk scale: 1-D problems use a coarse grid followed by
golden-section refinement, multi-D problems use seeded multistart
quasi-Newton searches inside the trust ball that provably contains the
minimizer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import minimize
from scipy.special import betainc, betaln

from .core import (
    Ball,
    FunctionInstance,
    InstanceMeta,
    OracleReply,
    Seed,
    as_point,
    sample_ball,
    sample_sphere,
)
from .instances import AbsFirstCoord

__all__ = [
    "RsParams",
    "MoreauParams",
    "LasryLionsParams",
    "SmootherReport",
    "SolverFailure",
    "ball_cap_fraction",
    "rs_exact_gradient_abs",
    "rs_exact_value_abs",
    "rs_gradient_estimate",
    "rs_value_estimate",
    "moreau_value_grad",
    "lasry_lions_value_grad",
    "RandomizedSmoother",
    "MoreauSmoother",
    "LasryLionsSmoother",
    "make_smoother",
    "smoother_report",
]


class SolverFailure(RuntimeError):
    """Inner solver missed its tolerance; carries the best value found."""

    def __init__(self, message: str, best_value: float):
        super().__init__(message)
        self.best_value = best_value


@dataclass(frozen=True)
class RsParams:
    radius: float
    samples: int = 1
    seed: Seed = Seed(0)

    def __post_init__(self) -> None:
        if self.radius <= 0 or self.samples < 1:
            raise ValueError("radius must be positive and samples >= 1")


@dataclass(frozen=True)
class MoreauParams:
    delta: float
    inner_budget: int = 4000
    inner_tol: float = 1e-11
    multistart: int = 4
    seed: Seed = Seed(0)

    def __post_init__(self) -> None:
        if self.delta <= 0:
            raise ValueError("delta must be positive")


@dataclass(frozen=True)
class LasryLionsParams:
    delta: float
    nu: float
    outer_budget: int = 800
    inner_budget: int = 800
    multistart: int = 3
    seed: Seed = Seed(0)

    def __post_init__(self) -> None:
        if not (0 < self.delta < self.nu):
            raise ValueError("need 0 < delta < nu")


@dataclass(frozen=True)
class SmootherReport:
    method: str
    sup_error_est: float
    grad_lipschitz_est: float
    oracle_calls: int
    params: dict

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "sup_error_est": self.sup_error_est,
            "grad_lipschitz_est": self.grad_lipschitz_est,
            "oracle_calls": self.oracle_calls,
            "params": self.params,
        }


# ---------------------------------------------------------------------------
# Ball-cap closed forms for |x_1|
# ---------------------------------------------------------------------------


def ball_cap_fraction(t: float, d: int) -> float:
    """P[v_1 <= t] for v uniform in the unit ball of R^d.

    The first-coordinate marginal has density proportional to
    (1 - s^2)^((d-1)/2), so the CDF is a symmetric regularized
    incomplete beta function.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    if t <= -1.0:
        return 0.0
    if t >= 1.0:
        return 1.0
    a = (d + 1) / 2.0
    return float(betainc(a, a, (1.0 + t) / 2.0))


def rs_exact_gradient_abs(x1: float, eps: float, d: int) -> float:
    """First gradient component of the radius-``eps`` ball smoothing of
    ``|x_1|`` (all other components vanish)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if x1 == 0.0:
        return 0.0
    if x1 >= eps:
        return 1.0
    if x1 <= -eps:
        return -1.0
    return 1.0 - 2.0 * ball_cap_fraction(-x1 / eps, d)


def rs_exact_value_abs(x1: float, eps: float, d: int) -> float:
    """Exact smoothed value E|x_1 + eps v_1|, v uniform in the unit ball.

    Splitting the integral at the sign change gives
    ``x G(x) + eps C (1 - (x/eps)^2)^(m+1) / (m+1)`` with m = (d-1)/2 and
    C the marginal normalizer.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    t = x1 / eps
    if abs(t) >= 1.0:
        return abs(x1)
    m = (d - 1) / 2.0
    log_c = -betaln(0.5, m + 1.0)
    tail = math.exp(log_c + (m + 1.0) * math.log1p(-t * t)) / (m + 1.0)
    return x1 * rs_exact_gradient_abs(x1, eps, d) + eps * tail


# ---------------------------------------------------------------------------
# Randomized smoothing estimators
# ---------------------------------------------------------------------------


def rs_gradient_estimate(f: FunctionInstance, x: np.ndarray, p: RsParams) -> np.ndarray:
    """Average of ``n`` sampled gradients at uniform ball perturbations;
    unbiased for the smoothed gradient."""
    x = as_point(x, f.meta.dim)
    rng = p.seed.rng()
    vs = sample_ball(rng, p.samples, f.meta.dim)
    acc = np.zeros_like(x)
    for v in vs:
        acc += f.oracle(x + p.radius * v).subgrad
    return acc / p.samples


def rs_value_estimate(f: FunctionInstance, x: np.ndarray, p: RsParams) -> float:
    x = as_point(x, f.meta.dim)
    rng = p.seed.rng()
    vs = sample_ball(rng, p.samples, f.meta.dim)
    return float(np.mean([f.oracle(x + p.radius * v).value for v in vs]))


# ---------------------------------------------------------------------------
# Proximal inner solvers
# ---------------------------------------------------------------------------


def _golden_refine(fun, a: float, b: float, tol: float, max_iter: int):
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = fun(c), fun(d_)
    it = 0
    while (b - a) > tol and it < max_iter:
        if fc <= fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = fun(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = fun(d_)
        it += 1
    return (c, fc, (b - a) <= tol) if fc <= fd else (d_, fd, (b - a) <= tol)


def _scalar_min(fun: Callable[[float], float], lo: float, hi: float, tol: float, budget: int,
                unimodal: bool = False):
    """Deterministic global-ish 1-D minimizer.

    Coarse grid to locate candidate basins, then golden-section on the
    best three cells; refining the runners-up protects against the grid
    mis-ranking two nearly-tied local minima.  With ``unimodal=True``
    (caller guarantees it) the grid is skipped.
    """
    iter_cap = max(60, budget // 8)
    if unimodal:
        t, v, ok = _golden_refine(fun, lo, hi, tol, iter_cap)
        return float(t), float(v), ok
    grid_n = max(33, min(513, budget // 8))
    ts = np.linspace(lo, hi, grid_n)
    vals = np.array([fun(t) for t in ts])
    order = np.argsort(vals, kind="stable")[:3]
    best_t, best_v, ok_any = None, np.inf, False
    for i in order:
        a = ts[max(0, int(i) - 1)]
        b = ts[min(grid_n - 1, int(i) + 1)]
        t, v, ok = _golden_refine(fun, a, b, tol, iter_cap)
        if v < best_v:
            best_t, best_v, ok_any = float(t), float(v), ok
    return best_t, best_v, ok_any


def _multistart_min(fun_jac, center: np.ndarray, radius: float, n_starts: int, budget: int, rng,
                    polish: bool = False):
    """Seeded multistart quasi-Newton minimization inside a trust ball.

    ``fun_jac(y) -> (value, grad)`` so nested solves are paid once per
    point.  Deterministic given the generator state.  ``polish`` adds a
    derivative-free refinement, insurance against kinks stalling BFGS.
    """
    starts = [center.copy()]
    if n_starts > 1:
        starts.extend(center + radius * sample_ball(rng, n_starts - 1, center.shape[0]))
    best_x, best_v = center.copy(), fun_jac(center)[0]
    maxiter = max(60, budget // max(1, n_starts))
    for s in starts:
        res = minimize(
            fun_jac, s, jac=True, method="L-BFGS-B",
            options={"maxiter": maxiter, "ftol": 1e-16, "gtol": 1e-12},
        )
        if res.fun < best_v:
            best_x, best_v = np.asarray(res.x, dtype=float), float(res.fun)
    if polish:
        res = minimize(
            lambda y: fun_jac(y)[0], best_x, method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-15},
        )
        if res.fun < best_v:
            best_x, best_v = np.asarray(res.x, dtype=float), float(res.fun)
    return best_x, best_v


def moreau_value_grad(
    f: FunctionInstance, x: np.ndarray, p: MoreauParams
) -> tuple[float, np.ndarray]:
    """Proximal smoothing value and gradient at ``x``.

    Minimizes ``f(y) + ||y - x||^2 / (2 delta)`` over the trust ball that
    provably contains the argmin; the gradient is ``(x - y*) / delta``.
    """
    v, ystar = _prox_solve(f, x, p)
    return v, (x - ystar) / p.delta


def _prox_solve(f: FunctionInstance, x: np.ndarray, p: MoreauParams, polish: bool = True):
    x = as_point(x, f.meta.dim)
    radius = 2.0 * p.delta * f.meta.lipschitz + 1e-12

    if f.meta.dim == 1:
        def obj1(t: float) -> float:
            return f.oracle(np.array([t])).value + (t - x[0]) ** 2 / (2.0 * p.delta)

        t, v, ok = _scalar_min(obj1, x[0] - radius, x[0] + radius, p.inner_tol, p.inner_budget)
        if not ok:
            raise SolverFailure(f"proximal inner solve missed tol {p.inner_tol}", v)
        return v, np.array([t])

    def fun_jac(y: np.ndarray):
        reply = f.oracle(y)
        diff = y - x
        return (
            reply.value + (diff @ diff) / (2.0 * p.delta),
            reply.subgrad + diff / p.delta,
        )

    rng = p.seed.rng()
    ystar, v = _multistart_min(fun_jac, x, radius, p.multistart, p.inner_budget, rng, polish=polish)
    return v, ystar


def lasry_lions_value_grad(
    f: FunctionInstance, x: np.ndarray, p: LasryLionsParams
) -> tuple[float, np.ndarray]:
    """Double-proximal smoothing value and gradient at ``x``.

    Maximizes ``y -> P_nu(f)(y) - ||y - x||^2 / (2 delta)``; for
    delta < nu the outer problem is strictly concave, so multistart
    ascent is insurance rather than a necessity.  The gradient is
    ``(y* - x) / delta``.
    """
    x = as_point(x, f.meta.dim)
    inner = MoreauParams(
        delta=p.nu,
        inner_budget=p.inner_budget,
        inner_tol=1e-12,
        multistart=p.multistart,
        seed=p.seed.substream(1),
    )
    outer_radius = 2.0 * p.delta * f.meta.lipschitz + 1e-12

    if f.meta.dim == 1:
        def neg_outer1(t: float) -> float:
            v, _ = _prox_solve(f, np.array([t]), inner)
            return -(v - (t - x[0]) ** 2 / (2.0 * p.delta))

        # for delta < nu the outer objective is strictly concave, so a
        # bare golden section converges globally
        t, nv, ok = _scalar_min(
            neg_outer1, x[0] - outer_radius, x[0] + outer_radius, 1e-11, p.outer_budget,
            unimodal=True,
        )
        if not ok:
            raise SolverFailure("outer ascent missed tolerance", -nv)
        return -nv, (np.array([t]) - x) / p.delta

    def fun_jac(y: np.ndarray):
        # envelope theorem: the gradient of P_nu(f) at y is (y - z*) / nu
        v_inner, zstar = _prox_solve(f, y, inner, polish=False)
        diff = y - x
        value = -(v_inner - (diff @ diff) / (2.0 * p.delta))
        grad = -((y - zstar) / p.nu - diff / p.delta)
        return value, grad

    rng = p.seed.rng()
    ystar, nv = _multistart_min(fun_jac, x, outer_radius, p.multistart, p.outer_budget, rng)
    return -nv, (ystar - x) / p.delta


# ---------------------------------------------------------------------------
# Method adapters and the measurement report
# ---------------------------------------------------------------------------


class _CountingInstance:
    """Transparent wrapper counting local-oracle queries."""

    def __init__(self, inner: FunctionInstance):
        self._inner = inner
        self.calls = 0

    @property
    def meta(self) -> InstanceMeta:
        return self._inner.meta

    def oracle(self, x: np.ndarray) -> OracleReply:
        self.calls += 1
        return self._inner.oracle(x)


class RandomizedSmoother:
    """Uniform-ball convolution; stochastic value/gradient estimates.

    For ``|x_1|`` the gradient (and value) have closed forms via the
    ball-cap fraction, used automatically so smoothness measurements are
    noise-free.
    """

    name = "randomized"

    def __init__(self, params: RsParams):
        self.params = params
        self._counter = 0

    def accuracy(self) -> float:
        return self.params.radius

    def _is_abs1(self, f) -> bool:
        base = f._inner if isinstance(f, _CountingInstance) else f
        return isinstance(base, AbsFirstCoord)

    def value(self, f: FunctionInstance, x: np.ndarray) -> float:
        if self._is_abs1(f):
            return rs_exact_value_abs(float(x[0]), self.params.radius, f.meta.dim)
        p = RsParams(self.params.radius, self.params.samples, self.params.seed.substream(self._bump()))
        return rs_value_estimate(f, x, p)

    def grad(self, f: FunctionInstance, x: np.ndarray) -> np.ndarray:
        if self._is_abs1(f):
            g = np.zeros(f.meta.dim)
            g[0] = rs_exact_gradient_abs(float(x[0]), self.params.radius, f.meta.dim)
            return g
        p = RsParams(self.params.radius, self.params.samples, self.params.seed.substream(self._bump()))
        return rs_gradient_estimate(f, x, p)

    def _bump(self) -> int:
        self._counter += 1
        return self._counter

    def param_dict(self) -> dict:
        return {
            "radius": self.params.radius,
            "samples": self.params.samples,
            "seed": self.params.seed.seed,
            "stream": self.params.seed.stream,
        }


class MoreauSmoother:
    name = "moreau"

    def __init__(self, params: MoreauParams):
        self.params = params

    def accuracy(self) -> float:
        # sup |P_delta f - f| <= delta L^2 / 2 for L-Lipschitz f
        return self.params.delta

    def value(self, f: FunctionInstance, x: np.ndarray) -> float:
        return moreau_value_grad(f, x, self.params)[0]

    def grad(self, f: FunctionInstance, x: np.ndarray) -> np.ndarray:
        return moreau_value_grad(f, x, self.params)[1]

    def param_dict(self) -> dict:
        return {"delta": self.params.delta, "inner_budget": self.params.inner_budget,
                "inner_tol": self.params.inner_tol}


class LasryLionsSmoother:
    name = "lasry-lions"

    def __init__(self, params: LasryLionsParams):
        self.params = params

    def accuracy(self) -> float:
        return self.params.nu

    def value(self, f: FunctionInstance, x: np.ndarray) -> float:
        return lasry_lions_value_grad(f, x, self.params)[0]

    def grad(self, f: FunctionInstance, x: np.ndarray) -> np.ndarray:
        return lasry_lions_value_grad(f, x, self.params)[1]

    def param_dict(self) -> dict:
        return {"delta": self.params.delta, "nu": self.params.nu,
                "multistart": self.params.multistart,
                "seed": self.params.seed.seed, "stream": self.params.seed.stream}


def make_smoother(method: str, eps: float, delta: float | None = None,
                  nu: float | None = None, samples: int = 256, seed: Seed = Seed(0)):
    """Smoother adapter for a target accuracy ``eps`` (CLI entry point)."""
    if method == "randomized":
        return RandomizedSmoother(RsParams(radius=eps, samples=samples, seed=seed))
    if method == "moreau":
        return MoreauSmoother(MoreauParams(delta=delta if delta is not None else eps))
    if method == "lasry-lions":
        d = delta if delta is not None else eps / 4.0
        n = nu if nu is not None else 2.0 * d
        return LasryLionsSmoother(LasryLionsParams(delta=d, nu=n, seed=seed))
    raise KeyError(f"unknown smoothing method: {method!r}")


def smoother_report(
    smoother,
    f: FunctionInstance,
    region: Ball,
    probes: int,
    fd_step: float = 1e-3,
    seed: Seed = Seed(0),
) -> SmootherReport:
    """Measure approximation error and gradient smoothness over a region.

    Probe points mix a deterministic sweep along the first axis (which
    crosses the kinks of the corpus functions) with seeded ball samples;
    the gradient Lipschitz estimate is the max secant over consecutive
    sweep points and per-probe short-step pairs.
    """
    if probes < 2:
        raise ValueError("need at least 2 probes")
    counted = _CountingInstance(f)
    dim = f.meta.dim
    rng = seed.rng()

    n_sweep = max(3, probes // 2)
    if n_sweep % 2 == 0:
        n_sweep += 1  # odd count puts a probe at the region center
    ts = np.linspace(-region.radius, region.radius, n_sweep)
    e1 = np.zeros(dim)
    e1[0] = 1.0
    sweep = [region.center + t * e1 for t in ts]
    n_rand = max(0, probes - n_sweep)
    randoms = [region.center + region.radius * v for v in sample_ball(rng, n_rand, dim)] if n_rand else []

    sup_err = 0.0
    for x in sweep + randoms:
        approx = smoother.value(counted, x)
        exact = f.oracle(x).value
        sup_err = max(sup_err, abs(approx - exact))

    # consecutive sweep pairs catch broad curvature; short fd pairs at every
    # probe catch curvature concentrated near a single point
    grads_sweep = [smoother.grad(counted, x) for x in sweep]
    lip = 0.0
    for (xa, ga), (xb, gb) in zip(zip(sweep, grads_sweep), zip(sweep[1:], grads_sweep[1:])):
        gap = float(np.linalg.norm(xb - xa))
        if gap > 0:
            lip = max(lip, float(np.linalg.norm(gb - ga)) / gap)
    for x, ga in list(zip(sweep, grads_sweep)) + [(x, None) for x in randoms]:
        u = e1 if ga is not None else sample_sphere(rng, 1, dim)[0]
        if ga is None:
            ga = smoother.grad(counted, x)
        gb = smoother.grad(counted, x + fd_step * u)
        lip = max(lip, float(np.linalg.norm(gb - ga)) / fd_step)

    return SmootherReport(
        method=smoother.name,
        sup_error_est=sup_err,
        grad_lipschitz_est=lip,
        oracle_calls=counted.calls,
        params=smoother.param_dict(),
    )
