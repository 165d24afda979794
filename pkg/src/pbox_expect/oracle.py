"""Brute-force checks that do not rely on shape information.

``certified_enclosure`` brackets the exact bounds between the outer and
inner discrete random sets with dense-scan cell optimization.
``sample_member_cdf`` draws random CDFs from the p-box so that their
expectations can be compared against claimed bounds.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .numerics import DEFAULT_TOL, Tolerance, vectorize
from .objective import ShapeDescriptor
from .pbox import PBox, eval_cdf, quantile
from .randomset import end_levels, merge_levels, sandwich, uniform_levels

TABLE_LEVELS = 1 << 16


@dataclass(frozen=True)
class Enclosure:
    """Intervals containing the exact lower and upper expectations.

    ``kind`` is ``"sandwich"`` for outer/inner brackets and ``"left-right"``
    when the inner set was unusable and the left/right sets are reported.
    """

    lower_bracket: tuple
    upper_bracket: tuple
    resolution: int
    kind: str = "sandwich"
    seconds: float = 0.0

    def __post_init__(self):
        for lo, hi in (self.lower_bracket, self.upper_bracket):
            if lo > hi:
                raise ValueError(f"bracket reversed: ({lo}, {hi})")

    def contains(self, lower: float, upper: float, slack: float = 0.0) -> bool:
        (a, b), (c, d) = self.lower_bracket, self.upper_bracket
        return a - slack <= lower <= b + slack and c - slack <= upper <= d + slack

    @property
    def widths(self) -> tuple:
        return (self.lower_bracket[1] - self.lower_bracket[0],
                self.upper_bracket[1] - self.upper_bracket[0])


def certified_enclosure(pbox: PBox, h: Callable, M: int,
                        tol: Tolerance = DEFAULT_TOL) -> Enclosure:
    """Outer and inner bounds at 2^ceil(log2 M) uniform levels, with geometric
    levels toward 0 and 1 so the truncated tails stay resolved."""
    if M < 2:
        raise ValueError("M must be at least 2")
    t0 = time.perf_counter()
    n = 1 << math.ceil(math.log2(M))
    levels = merge_levels(uniform_levels(n), end_levels(n))
    sw = sandwich(pbox, h, ShapeDescriptor.unknown(), levels, tol)
    o = sw["outer"]
    if "inner" in sw:
        i = sw["inner"]
        lb = (min(o.lower, i.lower), max(o.lower, i.lower))
        ub = (min(o.upper, i.upper), max(o.upper, i.upper))
        kind = "sandwich"
    else:
        l, r = sw["left"], sw["right"]
        lb = (min(o.lower, l.lower, r.lower), max(l.lower, r.lower))
        ub = (min(l.upper, r.upper), max(o.upper, l.upper, r.upper))
        kind = "left-right"
    return Enclosure(lb, ub, n, kind, time.perf_counter() - t0)


@dataclass
class MemberCdf:
    """F(x) = min(F^(x), max(F_(x), v(x))) for the step function v through
    ``values`` at ``knots``. Nondecreasing and inside the band by
    construction; for a degenerate p-box it is the p-box CDF itself."""

    pbox: PBox
    knots: np.ndarray
    values: np.ndarray
    seed: Optional[int] = None

    def step(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        k = np.searchsorted(self.knots, x, "right") - 1
        return np.where(k >= 0, self.values[np.maximum(k, 0)], 0.0)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lo = eval_cdf(self.pbox, "lower", x)
        hi = eval_cdf(self.pbox, "upper", x)
        return np.minimum(hi, np.maximum(lo, self.step(x)))

    def check(self, grid_size: int = 4097, slack: float = 1e-12) -> list:
        """Monotonicity and band violations on a grid (empty when valid)."""
        lo, hi = self.pbox.domain
        x = np.unique(np.concatenate([np.linspace(lo, hi, grid_size),
                                      self.knots, np.nextafter(self.knots, -np.inf)]))
        x = x[(x >= lo) & (x <= hi)]
        F = self(x)
        issues = []
        if np.any(np.diff(F) < -slack):
            issues.append("not monotone")
        if np.any(F < eval_cdf(self.pbox, "lower", x) - slack) or \
                np.any(F > eval_cdf(self.pbox, "upper", x) + slack):
            issues.append("leaves the band")
        return issues

    def expectation(self, h: Callable, table: Optional["LowerLevelTable"] = None) -> float:
        table = table or LowerLevelTable(self.pbox, h)
        return float(member_expectations(table, self.knots[None, :], self.values[None, :])[0])


def _draw(pbox: PBox, rng: np.random.Generator, count: int, knots: int) -> tuple:
    u = np.sort(rng.random((count, knots)), axis=1)
    w = rng.random((count, knots))
    qa = np.atleast_1d(quantile(pbox, "upper", u.ravel())).reshape(u.shape)
    qb = np.atleast_1d(quantile(pbox, "lower", u.ravel())).reshape(u.shape)
    x = np.sort(qa + w * (qb - qa), axis=1)
    lo = np.atleast_1d(eval_cdf(pbox, "lower", x.ravel())).reshape(x.shape)
    hi = np.atleast_1d(eval_cdf(pbox, "upper", x.ravel())).reshape(x.shape)
    v = lo + rng.random((count, knots)) * (hi - lo)
    return x, np.maximum.accumulate(v, axis=1)


def sample_member_cdf(pbox: PBox, seed: int, knots: int = 64) -> MemberCdf:
    """Random member of the p-box: knot values drawn uniformly in the band,
    made monotone by a running maximum. Deterministic per seed."""
    if knots < 2:
        raise ValueError("knots must be at least 2")
    x, v = _draw(pbox, np.random.default_rng(seed), 1, knots)
    return MemberCdf(pbox, x[0], v[0], seed)


def sample_members(pbox: PBox, seed: int, count: int, knots: int = 64) -> tuple:
    """(knots, values) arrays of shape (count, knots) from one generator."""
    if knots < 2:
        raise ValueError("knots must be at least 2")
    return _draw(pbox, np.random.default_rng(seed), int(count), int(knots))


class LowerLevelTable:
    """Running integral C(g) of h(Q_(t)) over t in [0, g], tabulated by
    Simpson's rule on a fine level grid and completed by a trapezoid on the
    last partial step."""

    def __init__(self, pbox: PBox, h: Callable, levels: int = TABLE_LEVELS):
        self.pbox = pbox
        self.hv = vectorize(h)
        g = merge_levels(uniform_levels(levels), end_levels(levels))
        f = self.f(g)
        fm = self.f(0.5 * (g[:-1] + g[1:]))
        d = np.diff(g)
        self.g = g
        self.fg = f
        self.C = np.concatenate([[0.0], np.cumsum(d / 6.0 * (f[:-1] + 4.0 * fm + f[1:]))])

    def f(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        return self.hv(np.atleast_1d(quantile(self.pbox, "lower", g.ravel()))).reshape(g.shape)

    def __call__(self, g) -> np.ndarray:
        g = np.clip(np.asarray(g, dtype=float), 0.0, 1.0)
        j = np.clip(np.searchsorted(self.g, g, "right") - 1, 0, self.g.size - 2)
        return self.C[j] + 0.5 * (g - self.g[j]) * (self.fg[j] + self.f(g))


def member_level_integrals(table: LowerLevelTable, knots: np.ndarray, values: np.ndarray,
                           upto=1.0) -> np.ndarray:
    """Integral of h(Q(g)) over g in [0, upto] for each member row.

    On the level range (v_{k-1}, v_k] the member's quantile is knot k
    projected onto the focal interval, i.e. x_k once g reaches F_(x_k) and
    Q_(g) before; above the last value it follows Q_.
    """
    pbox = table.pbox
    x = np.asarray(knots, dtype=float)
    v = np.asarray(values, dtype=float)
    u = np.broadcast_to(np.asarray(upto, dtype=float), (v.shape[0],))[:, None]
    prev = np.concatenate([np.zeros((v.shape[0], 1)), v[:, :-1]], axis=1)
    lo = np.atleast_1d(eval_cdf(pbox, "lower", x.ravel())).reshape(x.shape)
    hx = table.hv(x.ravel()).reshape(x.shape)
    start = np.maximum(prev, lo)
    atoms = np.sum(hx * np.maximum(np.minimum(v, u) - start, 0.0), axis=1)
    ramp_end = np.maximum(prev, np.minimum(lo, v))
    ramps = np.sum(table(np.minimum(ramp_end, u)) - table(np.minimum(prev, u)), axis=1)
    u1 = u[:, 0]
    tail = table(u1) - table(np.minimum(v[:, -1], u1))
    return atoms + ramps + tail


def member_cdf_values(pbox: PBox, knots: np.ndarray, values: np.ndarray, b: float) -> np.ndarray:
    """F(b) for each member row."""
    k = np.sum(np.asarray(knots) <= b, axis=1) - 1
    step = np.where(k >= 0, np.take_along_axis(values, np.maximum(k, 0)[:, None], 1)[:, 0], 0.0)
    return np.minimum(float(eval_cdf(pbox, "upper", b)),
                      np.maximum(float(eval_cdf(pbox, "lower", b)), step))


def member_expectations(table: LowerLevelTable, knots: np.ndarray, values: np.ndarray,
                        event: Optional[tuple] = None) -> np.ndarray:
    """E[h] per member row, or E[h | B] for an interval event B = [b0, b1]."""
    if event is None:
        return member_level_integrals(table, knots, values, 1.0)
    b0, b1 = event
    u0 = member_cdf_values(table.pbox, knots, values, b0)
    u1 = member_cdf_values(table.pbox, knots, values, b1)
    num = member_level_integrals(table, knots, values, u1) - \
        member_level_integrals(table, knots, values, u0)
    return num / (u1 - u0)


def audit_members(pbox: PBox, h: Callable, lower: float, upper: float, count: int = 10_000,
                  seed: int = 0, knots: int = 64, chunk: int = 2000,
                  event: Optional[tuple] = None) -> dict:
    """Largest violations of [lower, upper] over ``count`` sampled members
    (of the conditional expectations when ``event`` is given)."""
    table = LowerLevelTable(pbox, h)
    rng = np.random.default_rng(seed)
    lo_e, hi_e = math.inf, -math.inf
    done = 0
    while done < count:
        n = min(chunk, count - done)
        x, v = _draw(pbox, rng, n, knots)
        e = member_expectations(table, x, v, event)
        lo_e = min(lo_e, float(e.min()))
        hi_e = max(hi_e, float(e.max()))
        done += n
    return {"count": count, "seed": seed, "min": lo_e, "max": hi_e,
            "below": max(0.0, lower - lo_e), "above": max(0.0, hi_e - upper)}
