"""Discretized linear programs for the expectation bounds.

The primal optimizes over discrete CDFs placed on sample points; it is
solved on cumulative sums s_i (shifted by the lower rows, so every
right-hand side is nonnegative and phase 1 is only needed when the rows
conflict). The dual bounds h from below by a step function and is solved
on its running sums G_i = c0 + sum_{k>=i} (d_k - c_k).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .errors import ConfigurationError, LpStatusError, PBoxError
from .numerics import vectorize
from .objective import ShapeDescriptor
from .pbox import PBox, eval_cdf, quantile
from .randomset import _mass_levels, cell_extreme, end_levels, shape_levels
from .results import BoundsResult
from .chain import solve_chain
from .simplex import FEAS_TOL, LpSolution, solve_lp

MAX_POINTS = 1 << 16
SIMPLEX_MAX_POINTS = 128
# the dense tableau holds about (2N)^2 doubles; larger programs go to chain or highs
SIMPLEX_HARD_LIMIT = 2048
SAMPLERS = ("uniform", "quantile", "shape")
DUAL_RULES = ("cell", "midpoint")


LP_METHODS = ("auto", "simplex", "chain", "highs")


def _method(n: int, method: str) -> str:
    if method not in LP_METHODS:
        raise ValueError(f"LP method must be one of {LP_METHODS}")
    if method == "auto":
        return "simplex" if n <= SIMPLEX_MAX_POINTS else "chain"
    if method == "simplex" and n > SIMPLEX_HARD_LIMIT:
        raise ConfigurationError(f"dense simplex is limited to {SIMPLEX_HARD_LIMIT} points, "
                                 f"got {n}; use 'chain' or 'highs'")
    return method


def _sign(target: str) -> float:
    if target not in ("lower", "upper"):
        raise ValueError(f"target must be 'lower' or 'upper', not {target!r}")
    return 1.0 if target == "lower" else -1.0


def _points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float).ravel()
    if x.size < 1 or not np.all(np.isfinite(x)):
        raise ConfigurationError("sample points must be finite and nonempty")
    if np.any(np.diff(x) <= 0):
        raise ConfigurationError("sample points must be strictly increasing")
    return x


@dataclass
class DiscretizedPrimal:
    """Assembled primal: minimize sum sign*h(x_k) z_k over in-band cumulative sums.

    ``lower_rows``/``upper_rows`` bound s_i = z_1 + ... + z_i. The last
    upper row is 1 in the standard program (a truncated domain leaves
    F^(x_N) just below 1); the inner variant keeps it and shifts the lower
    rows to F_(x_{i+1}) with F_(x_{N+1}) = 1.
    """

    points: np.ndarray
    h_values: np.ndarray
    lower_rows: np.ndarray
    upper_rows: np.ndarray
    target: str
    inner_variant: bool
    feasible: bool
    below_first: float = 0.0

    @property
    def size(self) -> int:
        return self.points.size


@dataclass
class PrimalSolution:
    value: float
    weights: np.ndarray
    lp: LpSolution

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.weights)


def build_primal(pbox: PBox, h: Callable, points, target: str = "lower",
                 inner_variant: bool = False, tol: float = FEAS_TOL) -> DiscretizedPrimal:
    x = _points(points)
    Fl = np.atleast_1d(eval_cdf(pbox, "lower", x))
    Fu = np.atleast_1d(eval_cdf(pbox, "upper", x))
    bad = np.nonzero((Fu <= 0.0) | (Fl >= 1.0))[0]
    if bad.size:
        i = int(bad[0])
        raise ConfigurationError(
            f"sample point {i + 1} (x={x[i]:g}) needs F^(x) > 0 and F_(x) < 1")
    hv = np.asarray(vectorize(h)(x), dtype=float)
    if not np.all(np.isfinite(hv)):
        raise PBoxError("objective is not finite at some sample point")
    if inner_variant:
        lo = np.append(Fl[1:], 1.0)
        up = Fu.copy()
        short = np.nonzero(up < lo - tol)[0]
        if short.size:
            i = int(short[0])
            nxt = "F_(x_{N+1}) = 1" if i == x.size - 1 else f"F_(x_{i + 2}) = {lo[i]:.6g}"
            raise ConfigurationError(
                f"inner variant infeasible at i={i + 1}: F^(x_{i + 1}) = {up[i]:.6g} < {nxt}")
        up = np.maximum(up, lo)
    else:
        lo = Fl.copy()
        up = Fu.copy()
        up[-1] = 1.0
    feasible = bool(np.all(lo <= up + tol))
    return DiscretizedPrimal(x, hv, lo, up, target, inner_variant, feasible, float(Fl[0]))


def solve_primal(built: DiscretizedPrimal, method: str = "auto") -> PrimalSolution:
    """Solve on t_i = s_i - lo_i >= 0 with s_N = 1 substituted."""
    sgn = _sign(built.target)
    hv = sgn * built.h_values
    N = built.size
    lo, up = built.lower_rows, built.upper_rows
    if N == 1:
        if lo[0] > 1.0 + FEAS_TOL or up[0] < 1.0 - FEAS_TOL:
            raise LpStatusError("linear program infeasible: one point cannot carry mass 1")
        lp = LpSolution("optimal", float(hv[0]), np.zeros(0), solver="closed")
        return PrimalSolution(sgn * float(hv[0]), np.ones(1), lp)
    n = N - 1
    m = _method(N, method)
    if m == "chain":
        ch = solve_chain(hv, lo[:n], np.minimum(up[:n], 1.0))
        lp = LpSolution("optimal", ch.value, np.cumsum(ch.z)[:n], solver="chain",
                        slackness=abs(ch.value - ch.dual_value))
        return PrimalSolution(sgn * ch.value, ch.z, lp)
    cost = hv[:-1] - hv[1:]
    # t_k <= up_k - lo_k ; t_k - t_{k+1} <= lo_{k+1} - lo_k ; t_{N-1} <= 1 - lo_{N-1}
    eye = sp.identity(n, format="csr")
    chain = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")
    last = sp.csr_matrix(([1.0], ([0], [n - 1])), shape=(1, n))
    A = sp.vstack([eye, chain, last], format="csr")
    b = np.concatenate([up[:n] - lo[:n], lo[1:n] - lo[:n - 1], [1.0 - lo[n - 1]]])
    lp = solve_lp(cost, A if m == "highs" else A.toarray(), b, method=m)
    if not lp.optimal:
        raise LpStatusError(f"primal program {lp.status}: {lp.message}".rstrip(": "))
    s = np.append(np.clip(lp.x + lo[:n], lo[:n], np.minimum(up[:n], 1.0)), 1.0)
    z = np.diff(np.concatenate([[0.0], s]))
    value = float(hv[-1] + cost @ s[:n])
    return PrimalSolution(sgn * value, z, lp)


def primal_bound(built: DiscretizedPrimal, method: str = "auto") -> float:
    return solve_primal(built, method).value


def weights_valid(built: DiscretizedPrimal, z: np.ndarray, tol: float = FEAS_TOL) -> bool:
    """z >= 0, sums to 1, and every partial sum lies within its rows."""
    s = np.cumsum(z)
    return bool(np.all(z >= -tol) and abs(s[-1] - 1.0) <= tol
                and np.all(s >= built.lower_rows - tol) and np.all(s <= built.upper_rows + tol))


@dataclass
class DiscretizedDual:
    """Dual program and, once solved, its multipliers.

    ``rule="cell"`` bounds each running sum G_i by the inf of h over the
    cell [x_{i-1}, x_i] (x_0 the domain start) and c0 by the inf over
    [x_N, end]; the step function c0 + sum (d_k - c_k) 1{x <= x_k} then
    lies below h everywhere, so the value is a guaranteed lower bound.
    ``rule="midpoint"`` bounds G_i by h at y_i = (x_{i-1} + x_i)/2 and uses
    the CDFs at y_i; it carries no such guarantee.
    """

    points: np.ndarray
    rule: str
    target: str
    row_bounds: np.ndarray
    tail_bound: Optional[float]
    lower_cdf: np.ndarray
    upper_cdf: np.ndarray
    value: float = np.nan
    c0: float = np.nan
    c: Optional[np.ndarray] = None
    d: Optional[np.ndarray] = None
    lp: Optional[LpSolution] = field(default=None, repr=False)

    def row_residual(self) -> float:
        """Largest violation of c0 + sum_{k>=i} (d_k - c_k) <= bound_i."""
        G = self.c0 + np.cumsum((self.d - self.c)[::-1])[::-1]
        r = float(np.max(G - self.row_bounds))
        if self.tail_bound is not None:
            r = max(r, self.c0 - self.tail_bound)
        return r


def build_dual(pbox: PBox, h: Callable, points, target: str = "lower", rule: str = "cell",
               shape: Optional[ShapeDescriptor] = None) -> DiscretizedDual:
    sgn = _sign(target)
    x = _points(points)
    if rule not in DUAL_RULES:
        raise ValueError(f"dual rule must be one of {DUAL_RULES}")
    if x.size < 2:
        raise ConfigurationError("the dual program needs at least two points")
    L, U = pbox.domain
    fn = (lambda t: -h(t)) if sgn < 0 else h
    if rule == "midpoint":
        prev = np.concatenate([[min(L, x[0])], x[:-1]])
        y = 0.5 * (prev + x)
        bounds = np.asarray(vectorize(fn)(y), dtype=float)
        lo = np.atleast_1d(eval_cdf(pbox, "lower", y))
        up = np.atleast_1d(eval_cdf(pbox, "upper", y))
        tail = None
    else:
        sh = shape if shape is not None else ShapeDescriptor.unknown()
        if sgn < 0:
            sh = sh.reflected()
        edges = np.concatenate([[min(L, x[0])], x, [max(U, x[-1])]])
        inf = cell_extreme(fn, sh, edges[:-1], edges[1:], "inf")
        bounds, tail = inf[:-1], float(inf[-1])
        lo = np.atleast_1d(eval_cdf(pbox, "lower", x))
        up = np.atleast_1d(eval_cdf(pbox, "upper", x))
        up[-1] = 1.0
    if not (np.all(np.isfinite(bounds)) and (tail is None or np.isfinite(tail))):
        raise PBoxError("objective is not finite on some dual cell")
    return DiscretizedDual(x, rule, target, bounds, tail, lo, up)


def _finish_dual(dual: DiscretizedDual, c: np.ndarray, d: np.ndarray) -> DiscretizedDual:
    """Take the largest c0 the rows allow for given c, d; value follows."""
    sgn = _sign(dual.target)
    run = np.cumsum((d - c)[::-1])[::-1]
    c0 = float(np.min(dual.row_bounds - run))
    if dual.tail_bound is not None:
        c0 = min(c0, dual.tail_bound)
    dual.c, dual.d, dual.c0 = c, d, c0
    dual.value = sgn * float(c0 + d @ dual.lower_cdf - c @ dual.upper_cdf)
    return dual


def _solve_dual_by_primal(dual: DiscretizedDual) -> DiscretizedDual:
    """Large programs: solve the equivalent primal whose atoms carry the
    row bounds (plus the tail atom), read c and d off its bound
    multipliers, and certify them through the dual rows."""
    a = dual.row_bounds if dual.tail_bound is None else np.append(dual.row_bounds,
                                                                   dual.tail_bound)
    K = a.size
    N = dual.points.size
    lo, up = dual.lower_cdf, dual.upper_cdf
    if K == N and up[-1] < 1.0:
        raise LpStatusError("dual program unbounded: the points leave mass uncovered "
                            "(the last upper CDF value is below 1)")
    n = K - 1
    cost = a[:-1] - a[1:]
    bnds = list(zip(lo[:n], up[:n]))
    if n > 1:
        A = sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")
        b = np.zeros(n - 1)
    else:
        A, b = None, None
    lp = solve_lp(cost, A, b, method="highs", bounds=bnds)
    if not lp.optimal:
        raise LpStatusError(f"dual program {lp.status}: {lp.message}".rstrip(": "))
    d = np.zeros(N)
    c = np.zeros(N)
    d[:n] = np.maximum(lp.extra["lower"], 0.0)
    c[:n] = np.maximum(-lp.extra["upper"], 0.0)
    dual.lp = lp
    return _finish_dual(dual, c, d)


def _solve_dual_chain(dual: DiscretizedDual) -> DiscretizedDual:
    N = dual.points.size
    lo, up = dual.lower_cdf, dual.upper_cdf
    if dual.tail_bound is None:
        if up[-1] < 1.0:
            raise LpStatusError("dual program unbounded: the points leave mass uncovered "
                                "(the last upper CDF value is below 1)")
        ch = solve_chain(dual.row_bounds, lo[:-1], up[:-1])
        c, d = np.append(ch.c, 0.0), np.append(ch.d, 0.0)
    else:
        ch = solve_chain(np.append(dual.row_bounds, dual.tail_bound), lo, up)
        c, d = ch.c, ch.d
    dual.lp = LpSolution("optimal", -ch.dual_value, ch.G, solver="chain",
                         slackness=abs(ch.value - ch.dual_value))
    return _finish_dual(dual, c, d)


def solve_dual(dual: DiscretizedDual, method: str = "auto") -> DiscretizedDual:
    """Maximize c0 + sum (d_i F_i - c_i F^i) over G_1..G_{N+1} (G_{N+1} = c0)."""
    N = dual.points.size
    m = _method(N, method)
    if m == "highs":
        return _solve_dual_by_primal(dual)
    if m == "chain":
        return _solve_dual_chain(dual)
    # variables: G_1..G_{N+1} (free), d_1..d_N, c_1..c_N
    nG = N + 1
    cost = np.concatenate([np.zeros(N), [-1.0], -dual.lower_cdf, dual.upper_cdf])
    i = np.arange(N)
    rows = np.concatenate([i, i, i, i])
    cols = np.concatenate([i, i + 1, nG + i, nG + N + i])
    vals = np.concatenate([np.ones(N), -np.ones(N), -np.ones(N), np.ones(N)])
    A_eq = sp.csr_matrix((vals, (rows, cols)), shape=(N, nG + 2 * N))
    b_eq = np.zeros(N)
    n_ub = N + (dual.tail_bound is not None)
    A_ub = sp.csr_matrix((np.ones(n_ub), (np.arange(n_ub), np.arange(n_ub))),
                         shape=(n_ub, nG + 2 * N))
    b_ub = dual.row_bounds if dual.tail_bound is None else np.append(dual.row_bounds,
                                                                      dual.tail_bound)
    A_ub, A_eq = A_ub.toarray(), A_eq.toarray()
    lp = solve_lp(cost, A_ub, b_ub, A_eq, b_eq, free_vars=range(nG), method="simplex")
    if lp.status == "unbounded":
        raise LpStatusError("dual program unbounded: the points leave mass uncovered "
                            "(the last upper CDF value is below 1)")
    if not lp.optimal:
        raise LpStatusError(f"dual program {lp.status}: {lp.message}".rstrip(": "))
    dual.lp = lp
    t = lp.x[:N] - lp.x[1:nG]
    return _finish_dual(dual, np.maximum(-t, 0.0), np.maximum(t, 0.0))


def dual_bound(pbox: PBox, h: Callable, points, target: str = "lower", rule: str = "cell",
               shape: Optional[ShapeDescriptor] = None, method: str = "auto") -> float:
    return solve_dual(build_dual(pbox, h, points, target, rule, shape), method).value


def _usable(pbox: PBox, x: np.ndarray) -> np.ndarray:
    x = np.unique(np.asarray(x, dtype=float))
    x = x[np.isfinite(x)]
    lo, hi = pbox.domain
    x = x[(x >= lo) & (x <= hi)]
    Fu = np.atleast_1d(eval_cdf(pbox, "upper", x))
    Fl = np.atleast_1d(eval_cdf(pbox, "lower", x))
    return x[(Fu > 0.0) & (Fl < 1.0)]


def uniform_points(pbox: PBox, N: int, interval: Optional[tuple] = None) -> np.ndarray:
    lo, hi = interval if interval is not None else pbox.domain
    return _usable(pbox, lo + (hi - lo) * np.arange(1, int(N) + 1) / int(N))


def quantile_points(pbox: PBox, N: int) -> np.ndarray:
    """Both quantiles at the levels j/K, K = N/2, plus geometric levels
    toward both ends so that no coarse mass lands at a far domain end."""
    K = max(int(N) // 2, 1)
    g = np.concatenate([np.arange(1, K + 1) / K, end_levels(K)])
    x = np.concatenate([np.atleast_1d(quantile(pbox, "upper", g)),
                        np.atleast_1d(quantile(pbox, "lower", g))])
    return _usable(pbox, x)


def shape_points(pbox: PBox, N: int, h: Callable, shape: ShapeDescriptor) -> np.ndarray:
    """Quantile points plus the extrema of h, geometric clusters around
    them, and both quantiles at the levels where the extremizers switch."""
    x = [quantile_points(pbox, N)]
    ex = np.array([e for e, _ in shape.extrema_list()], dtype=float)
    if ex.size:
        lo, hi = pbox.domain
        k = np.arange(4, 4 + max(int(np.log2(max(N, 2))), 4))
        off = (hi - lo) * 2.0 ** (-k.astype(float))
        x.append(ex)
        x.append((ex[:, None] + off[None, :]).ravel())
        x.append((ex[:, None] - off[None, :]).ravel())
        g = [shape_levels(pbox, shape)]
        try:
            g.append(_mass_levels(pbox, h, shape, _tol()))
        except PBoxError:
            pass
        g = np.clip(np.concatenate(g), 0.0, 1.0)
        x.append(np.atleast_1d(quantile(pbox, "upper", g)))
        x.append(np.atleast_1d(quantile(pbox, "lower", g)))
    return _usable(pbox, np.concatenate(x))


def _tol():
    from .numerics import DEFAULT_TOL
    return DEFAULT_TOL


def sample_points(pbox: PBox, N: int, sampler: str = "quantile", h: Optional[Callable] = None,
                  shape: Optional[ShapeDescriptor] = None) -> np.ndarray:
    if sampler == "uniform":
        return uniform_points(pbox, N)
    if sampler == "quantile":
        return quantile_points(pbox, N)
    if sampler == "shape":
        if h is None or shape is None:
            raise ConfigurationError("the shape-aware sampler needs h and its shape")
        return shape_points(pbox, N, h, shape)
    raise ConfigurationError(f"unknown sampler {sampler!r}; choose from {SAMPLERS}")


@dataclass
class LpRound:
    """Primal, dual and inner-variant values for both targets at one point set."""

    size: int
    primal: tuple
    dual: tuple
    inner: Optional[tuple]
    weights_ok: bool
    warnings: list

    @property
    def gap(self) -> float:
        return max(abs(self.primal[0] - self.dual[0]), abs(self.primal[1] - self.dual[1]))


def lp_round(pbox: PBox, h: Callable, points, shape: Optional[ShapeDescriptor] = None,
             rule: str = "cell", method: str = "auto") -> LpRound:
    x = _points(points)
    prim, dual, inner = [], [], []
    ok = True
    warnings = []
    for target in ("lower", "upper"):
        built = build_primal(pbox, h, x, target)
        sol = solve_primal(built, method)
        ok = ok and weights_valid(built, sol.weights)
        prim.append(sol.value)
        dual.append(dual_bound(pbox, h, x, target, rule, shape, method))
        try:
            inner.append(primal_bound(build_primal(pbox, h, x, target, inner_variant=True), method))
        except (ConfigurationError, LpStatusError) as exc:
            warnings.append(f"inner variant skipped for {target}: {exc}")
    return LpRound(x.size, tuple(prim), tuple(dual), tuple(inner) if len(inner) == 2 else None,
                   ok, warnings)


def _result(rnd: LpRound, seconds: float, extra: dict) -> BoundsResult:
    enc = None
    if rnd.inner is not None:
        enc = ((rnd.dual[0], rnd.inner[0]), (rnd.inner[1], rnd.dual[1]))
    meta = {"primal": rnd.primal, "dual": rnd.dual, "inner": rnd.inner, "gap": rnd.gap,
            "weights_valid": rnd.weights_ok}
    meta.update(extra)
    return BoundsResult(rnd.primal[0], rnd.primal[1], "lp", enc, rnd.size, seconds, meta,
                        list(rnd.warnings))


def lp_bounds(pbox: PBox, h: Callable, N: int, sampler: str = "quantile",
              shape: Optional[ShapeDescriptor] = None, rule: str = "cell",
              method: str = "auto") -> BoundsResult:
    """Primal values at about N sampled points; dual and inner-variant
    values form the enclosure when available."""
    t0 = time.perf_counter()
    x = sample_points(pbox, N, sampler, h, shape)
    rnd = lp_round(pbox, h, x, shape, rule, method)
    return _result(rnd, time.perf_counter() - t0, {"sampler": sampler, "rule": rule})


def refine_lp(pbox: PBox, h: Callable, epsilon: float, N0: int = 64, sampler: str = "quantile",
              shape: Optional[ShapeDescriptor] = None, rule: str = "cell",
              max_points: int = MAX_POINTS, method: str = "auto") -> BoundsResult:
    """Double N until the primal/dual gap of both bounds is at most epsilon."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t0 = time.perf_counter()
    N = int(N0)
    history = []
    while True:
        x = sample_points(pbox, N, sampler, h, shape)
        rnd = lp_round(pbox, h, x, shape, rule, method)
        history.append((rnd.size, rnd.primal, rnd.dual, rnd.gap))
        if rnd.gap <= epsilon:
            break
        if 2 * N > max_points:
            rnd.warnings.append(f"point cap {max_points} reached with gap {rnd.gap:.3g}")
            break
        N *= 2
    return _result(rnd, time.perf_counter() - t0,
                   {"sampler": sampler, "rule": rule, "history": history, "epsilon": epsilon})
