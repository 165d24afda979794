"""Expectation bounds through the random-set view of a p-box.

Level g in [0, 1] carries the focal interval A_g = [Q^(g), Q_(g)]; the
lower expectation is the integral over g of inf h on A_g, the upper one
uses sup. Finite level sets give the outer, inner and left/right
discretizations.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InconsistentRandomSet, PBoxError
from .numerics import DEFAULT_TOL, Tolerance, golden_min, integrate_pieces, vectorize
from .objective import ShapeDescriptor
from .pbox import PBox, eval_cdf, quantile
from .results import BoundsResult

SCAN_POINTS = 65
KINDS = ("outer", "inner", "left", "right")


@dataclass(frozen=True)
class FocalElement:
    gamma: float
    lo: float
    hi: float

    def __post_init__(self):
        if self.lo > self.hi:
            raise PBoxError(f"focal element is reversed at gamma={self.gamma}")


def focal(pbox: PBox, gamma: float) -> FocalElement:
    return FocalElement(float(gamma), quantile(pbox, "upper", gamma), quantile(pbox, "lower", gamma))


def _interior_points(shape: ShapeDescriptor, want: str) -> np.ndarray:
    return shape.minima() if want == "inf" else shape.maxima()


def cell_extreme(h: Callable, shape: ShapeDescriptor, lo, hi, want: str = "inf") -> np.ndarray:
    """inf (or sup) of h over each interval [lo_i, hi_i]; NaN rows stay NaN.

    With a declared shape the extreme is attained at an endpoint or at a
    declared interior extremum; for an unknown shape a 65-point scan is
    followed by golden-section refinement around the best sample.
    """
    hv = vectorize(h)
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    empty = np.isnan(lo) | np.isnan(hi)
    a = np.where(empty, 0.0, lo)
    b = np.where(empty, 0.0, hi)
    pick = np.minimum if want == "inf" else np.maximum
    if shape.kind != "unknown":
        val = pick(hv(a), hv(b))
        pts = _interior_points(shape, want)
        if pts.size:
            hp = hv(pts)
            for p, v in zip(pts, hp):
                inside = (a <= p) & (p <= b)
                val = np.where(inside, pick(val, v), val)
        return np.where(empty, np.nan, val)
    sgn = 1.0 if want == "inf" else -1.0
    t = np.linspace(0.0, 1.0, SCAN_POINTS)
    grid = a[:, None] + (b - a)[:, None] * t[None, :]
    vals = sgn * hv(grid.ravel()).reshape(grid.shape)
    j = np.argmin(vals, axis=1)
    best = vals[np.arange(j.size), j]
    step = (b - a) / (SCAN_POINTS - 1)
    ga = np.maximum(a, grid[np.arange(j.size), j] - step)
    gb = np.minimum(b, grid[np.arange(j.size), j] + step)
    _, refined = golden_min(lambda x: sgn * hv(x), ga, gb, iters=50)
    val = sgn * np.minimum(best, refined)
    return np.where(empty, np.nan, val)


def gamma_integrand(pbox: PBox, h: Callable, shape: ShapeDescriptor, want: str) -> Callable:
    """g -> inf (or sup) of h over the focal interval at level g."""

    def f(g):
        g = np.asarray(g, dtype=float)
        lo = quantile(pbox, "upper", g)
        hi = quantile(pbox, "lower", g)
        return cell_extreme(h, shape, np.atleast_1d(lo), np.atleast_1d(hi), want).reshape(g.shape)

    return f


def shape_levels(pbox: PBox, shape: ShapeDescriptor) -> np.ndarray:
    """F_(e) and F^(e) for every declared extremum e."""
    ex = np.array([x for x, _ in shape.extrema_list()], dtype=float)
    if ex.size == 0:
        return np.array([], dtype=float)
    lo, hi = pbox.domain
    ex = ex[(ex >= lo) & (ex <= hi)]
    return np.concatenate([np.atleast_1d(eval_cdf(pbox, "lower", ex)),
                           np.atleast_1d(eval_cdf(pbox, "upper", ex))])


def _mass_levels(pbox: PBox, h: Callable, shape: ShapeDescriptor, tol: Tolerance) -> np.ndarray:
    """Level boundaries of the extremizing construction, for h and for -h."""
    from .analytic import construction_levels

    out = []
    for fn, sh in ((h, shape), (lambda x: -h(x), shape.reflected())):
        out.append(construction_levels(pbox, fn, sh, tol))
    return np.concatenate(out)


def bounds_exact_gamma(pbox: PBox, h: Callable, shape: ShapeDescriptor,
                       tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Lower and upper expectation as level integrals of inf/sup over A_g."""
    if shape.kind == "unknown":
        raise PBoxError("exact level integration needs a declared shape")
    t0 = time.perf_counter()
    warnings = []
    breaks = [np.array([0.0, 1.0]), shape_levels(pbox, shape)]
    if shape.extrema_list():
        try:
            breaks.append(_mass_levels(pbox, h, shape, tol))
        except PBoxError as exc:
            warnings.append(f"level split points unavailable ({exc}); integrating without them")
    brk = np.clip(np.concatenate(breaks), 0.0, 1.0)
    lo = integrate_pieces(gamma_integrand(pbox, h, shape, "inf"), brk, tol)
    up = integrate_pieces(gamma_integrand(pbox, h, shape, "sup"), brk, tol)
    for r in (lo, up):
        if r.warning:
            warnings.append(r.warning)
    return BoundsResult(lo.value, up.value, "randomset-exact", seconds=time.perf_counter() - t0,
                        metadata={"quad_error": max(lo.error, up.error),
                                  "evaluations": lo.evaluations + up.evaluations},
                        warnings=warnings)


@dataclass
class DiscreteRandomSet:
    """Finitely many focal intervals with masses.

    ``lo``/``hi`` are NaN for empty cells (inner kind only).
    """

    kind: str
    levels: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    pbox: Optional[PBox] = field(default=None, repr=False)

    @property
    def masses(self) -> np.ndarray:
        return np.diff(self.levels)

    @property
    def empty(self) -> np.ndarray:
        return np.isnan(self.lo)

    @property
    def inconsistent(self) -> bool:
        return bool(np.any(self.empty & (self.masses > 0)))

    def __len__(self):
        return self.lo.size


def uniform_levels(M: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, int(M) + 1)


END_FLOOR = 1e-13


def end_levels(M: int, floor: float = END_FLOOR) -> np.ndarray:
    """Geometric levels 2^-k/M toward both ends, nested across doublings of M."""
    steps = []
    d = 0.5 / int(M)
    while d >= floor:
        steps.append(d)
        d *= 0.5
    steps = np.array(steps)
    return np.concatenate([steps, 1.0 - steps])


def merge_levels(base: np.ndarray, extra) -> np.ndarray:
    extra = np.clip(np.asarray(extra, dtype=float), 0.0, 1.0)
    lv = np.unique(np.concatenate([base, extra, [0.0, 1.0]]))
    return lv


def discretize(pbox: PBox, kind: str, levels) -> DiscreteRandomSet:
    levels = np.asarray(levels, dtype=float)
    if levels.ndim != 1 or levels.size < 2 or levels[0] != 0.0 or levels[-1] != 1.0 \
            or np.any(np.diff(levels) < 0):
        raise PBoxError("levels must be ordered from 0 to 1")
    qu = np.atleast_1d(quantile(pbox, "upper", levels))
    ql = np.atleast_1d(quantile(pbox, "lower", levels))
    if kind == "outer":
        lo, hi = qu[:-1], ql[1:]
    elif kind == "inner":
        lo, hi = qu[1:].copy(), ql[:-1].copy()
        bad = lo > hi
        lo[bad] = np.nan
        hi[bad] = np.nan
    elif kind == "left":
        lo, hi = qu[:-1], ql[:-1]
    elif kind == "right":
        lo, hi = qu[1:], ql[1:]
    else:
        raise PBoxError(f"unknown discretization kind {kind!r}")
    return DiscreteRandomSet(kind, levels, np.array(lo, dtype=float), np.array(hi, dtype=float), pbox)


def bounds_discrete(rs: DiscreteRandomSet, h: Callable, shape: ShapeDescriptor,
                    complete_empty: bool = False, tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Weighted sums of per-cell inf/sup.

    Inner sets have empty cells wherever the level step outruns the band
    (always near a shared atomless support end). With ``complete_empty``
    those level ranges carry their exact level integrals instead; every
    other cell uses a subset of the true focal interval, so the completed
    value still bounds the exact one from the inside.
    """
    m = rs.masses
    lo_vals = cell_extreme(h, shape, rs.lo, rs.hi, "inf")
    up_vals = cell_extreme(h, shape, rs.lo, rs.hi, "sup")
    active = m > 0
    empty = rs.empty & active
    full = active & ~empty
    meta = {"cells": int(active.sum()), "kind": rs.kind}
    lower = float(np.sum(m[full] * lo_vals[full]))
    upper = float(np.sum(m[full] * up_vals[full]))
    if empty.any():
        if not complete_empty:
            raise InconsistentRandomSet(
                f"inner random set has {int(empty.sum())} empty cells; use the left/right sets")
        f_inf = gamma_integrand(rs.pbox, h, shape, "inf")
        f_sup = gamma_integrand(rs.pbox, h, shape, "sup")
        for i in np.nonzero(empty)[0]:
            a, b = rs.levels[i], rs.levels[i + 1]
            lower += integrate_pieces(f_inf, [a, b], tol).value
            upper += integrate_pieces(f_sup, [a, b], tol).value
        meta["completed_cells"] = int(empty.sum())
    return BoundsResult(lower, upper, f"randomset-{rs.kind}", size=len(rs), metadata=meta)


def sandwich(pbox: PBox, h: Callable, shape: ShapeDescriptor, levels,
             tol: Tolerance = DEFAULT_TOL) -> dict:
    """Outer and (completed) inner values at one level set.

    Returns a dict with ``outer`` and ``inner`` BoundsResults, or ``left``
    and ``right`` when the inner set is inconsistent away from its ends.
    """
    out = {"outer": bounds_discrete(discretize(pbox, "outer", levels), h, shape, tol=tol)}
    inner = discretize(pbox, "inner", levels)
    try:
        out["inner"] = bounds_discrete(inner, h, shape, complete_empty=True, tol=tol)
    except InconsistentRandomSet:
        out["left"] = bounds_discrete(discretize(pbox, "left", levels), h, shape, tol=tol)
        out["right"] = bounds_discrete(discretize(pbox, "right", levels), h, shape, tol=tol)
    return out


def augmented_levels(pbox: PBox, h: Callable, shape: ShapeDescriptor, M: int,
                     tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    extra = [shape_levels(pbox, shape)] if shape.kind != "unknown" else []
    if shape.kind not in ("unknown", "nondecreasing", "nonincreasing") and shape.extrema_list():
        try:
            extra.append(_mass_levels(pbox, h, shape, tol))
        except PBoxError:
            pass
    extra.append(end_levels(M))
    return merge_levels(uniform_levels(M), np.concatenate(extra))


def bounds_at(pbox: PBox, h: Callable, shape: ShapeDescriptor, M: int,
              tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Sandwich at (about) M levels; the value reported is the bracket centre."""
    t0 = time.perf_counter()
    levels = augmented_levels(pbox, h, shape, M, tol)
    sw = sandwich(pbox, h, shape, levels, tol)
    return _from_sandwich(sw, levels.size - 1, time.perf_counter() - t0)


def _from_sandwich(sw: dict, size: int, seconds: float) -> BoundsResult:
    o = sw["outer"]
    if "inner" in sw:
        i = sw["inner"]
        enc = ((o.lower, i.lower), (i.upper, o.upper))
        lower = 0.5 * (o.lower + i.lower)
        upper = 0.5 * (o.upper + i.upper)
        meta = {"outer": (o.lower, o.upper), "inner": (i.lower, i.upper),
                "gap_lower": i.lower - o.lower, "gap_upper": o.upper - i.upper}
        return BoundsResult(lower, upper, "randomset", enc, size, seconds, meta)
    l, r = sw["left"], sw["right"]
    lower = 0.5 * (l.lower + r.lower)
    upper = 0.5 * (l.upper + r.upper)
    meta = {"outer": (o.lower, o.upper), "left": (l.lower, l.upper), "right": (r.lower, r.upper),
            "gap_lower": abs(l.lower - r.lower), "gap_upper": abs(l.upper - r.upper)}
    return BoundsResult(lower, upper, "randomset", None, size, seconds, meta,
                        ["inner set inconsistent; reporting left/right approximations"])


def refine_bounds(pbox: PBox, h: Callable, shape: ShapeDescriptor, epsilon: float,
                  M0: int = 64, max_levels: int = 1 << 20,
                  tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Double M until both sandwich gaps are at most ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    t0 = time.perf_counter()
    M = int(M0)
    history = []
    while True:
        levels = augmented_levels(pbox, h, shape, M, tol)
        sw = sandwich(pbox, h, shape, levels, tol)
        res = _from_sandwich(sw, levels.size - 1, 0.0)
        history.append((M, res.metadata["gap_lower"], res.metadata["gap_upper"]))
        if max(res.metadata["gap_lower"], res.metadata["gap_upper"]) <= epsilon:
            break
        if 2 * M > max_levels:
            res.warnings.append(f"level cap {max_levels} reached with gaps "
                                f"{res.metadata['gap_lower']:.3g}, {res.metadata['gap_upper']:.3g}")
            break
        M *= 2
    res.seconds = time.perf_counter() - t0
    res.metadata["history"] = history
    return res
