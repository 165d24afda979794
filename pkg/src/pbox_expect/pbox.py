"""P-boxes: a lower and an upper CDF with quantile access.

Conventions. ``lower`` is the CDF F_ that bounds the band from below and
``upper`` is F^ with F_ <= F^. The focal interval at level g is
``[Q^(g), Q_(g)]`` where ``Q^(g) = sup{x : F^(x) < g}`` and
``Q_(g) = inf{x : F_(x) > g}``; both are clamped to the working domain.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DomainError, ExpressionError, MalformedSpecError
from .expr import compile_expression

TAIL = 1e-10


class CdfSpec:
    """Base class for a CDF evaluator. Subclasses are immutable."""

    kind: str = ""
    support_hint: Optional[tuple[float, float]] = None

    def raw(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return np.clip(self.raw(x), 0.0, 1.0)

    def density(self, x):
        """Derivative where closed-form, else None."""
        return None

    def closed_quantile(self, gamma, side: str):
        """Closed-form pseudo-inverse, or None when bisection is needed."""
        return None

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class ExponentialCdf(CdfSpec):
    rate: float
    support_hint: Optional[tuple[float, float]] = (0.0, math.inf)
    kind: str = field(default="parametric-exponential", init=False)

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise MalformedSpecError(f"exponential rate must be positive, got {self.rate!r}")

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        out = -np.expm1(-self.rate * np.maximum(x, 0.0))
        return float(out) if out.ndim == 0 else out

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x >= 0, self.rate * np.exp(-self.rate * np.maximum(x, 0.0)), 0.0)
        return float(out) if out.ndim == 0 else out

    def closed_quantile(self, gamma, side):
        # strictly increasing on [0, inf): both pseudo-inverses coincide
        g = np.asarray(gamma, dtype=float)
        with np.errstate(divide="ignore"):
            return -np.log1p(-g) / self.rate

    def to_dict(self):
        return {"kind": self.kind, "rate": self.rate}


@dataclass(frozen=True)
class TabulatedCdf(CdfSpec):
    """Piecewise-linear CDF through knots; 0 left of the first knot."""

    points: tuple
    kind: str = field(default="tabulated", init=False)

    def __post_init__(self):
        pts = tuple((float(x), float(p)) for x, p in self.points)
        if len(pts) < 2:
            raise MalformedSpecError("tabulated CDF needs at least two knots")
        for i, (x, p) in enumerate(pts):
            if not (math.isfinite(x) and 0.0 <= p <= 1.0):
                raise MalformedSpecError(f"knot {i} is out of range: ({x}, {p})")
            if i and not x > pts[i - 1][0]:
                raise MalformedSpecError(f"knot x values must strictly increase (knot {i})")
            if i and p < pts[i - 1][1]:
                raise MalformedSpecError(f"knot p values must not decrease (knot {i})")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "_x", np.array([x for x, _ in pts]))
        object.__setattr__(self, "_p", np.array([p for _, p in pts]))

    @property
    def support_hint(self):
        return (float(self._x[0]), float(self._x[-1]))

    def raw(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self._x[0], 0.0, np.interp(x, self._x, self._p))
        return float(out) if out.ndim == 0 else out

    def density(self, x):
        x = np.asarray(x, dtype=float)
        slopes = np.diff(self._p) / np.diff(self._x)
        idx = np.clip(np.searchsorted(self._x, x, side="right") - 1, 0, slopes.size - 1)
        inside = (x >= self._x[0]) & (x < self._x[-1])
        out = np.where(inside, slopes[idx], 0.0)
        return float(out) if out.ndim == 0 else out

    def closed_quantile(self, gamma, side):
        g = np.asarray(gamma, dtype=float)
        xk, pk = self._x, self._p
        n = xk.size
        if side == "upper":
            # sup{x : F(x) < g}: F first reaches g inside segment j-1..j
            j = np.searchsorted(pk, g, side="left")
            jj = np.clip(j, 1, n - 1)
            x0, x1, p0, p1 = xk[jj - 1], xk[jj], pk[jj - 1], pk[jj]
            with np.errstate(invalid="ignore", divide="ignore"):
                t = np.where(p1 > p0, (g - p0) / (p1 - p0), 1.0)
            out = x0 + np.clip(t, 0.0, 1.0) * (x1 - x0)
            out = np.where(j <= 0, xk[0], out)
            out = np.where(j >= n, math.inf, out)
        else:
            # inf{x : F(x) > g}: last knot with p <= g, then linear crossing
            j = np.searchsorted(pk, g, side="right") - 1
            jj = np.clip(j, 0, n - 2)
            x0, x1, p0, p1 = xk[jj], xk[jj + 1], pk[jj], pk[jj + 1]
            with np.errstate(invalid="ignore", divide="ignore"):
                t = np.where(p1 > p0, (g - p0) / (p1 - p0), 0.0)
            out = x0 + np.clip(t, 0.0, 1.0) * (x1 - x0)
            out = np.where(j < 0, xk[0], out)
            out = np.where(j >= n - 1, math.inf, out)
        return out

    def to_dict(self):
        return {"kind": self.kind, "points": [list(p) for p in self.points]}


@dataclass(frozen=True)
class ExpressionCdf(CdfSpec):
    source: str
    support_hint: Optional[tuple[float, float]] = None
    kind: str = field(default="expression", init=False)

    def __post_init__(self):
        try:
            fn = compile_expression(self.source)
        except ExpressionError as exc:
            raise MalformedSpecError(f"CDF expression: {exc}") from exc
        object.__setattr__(self, "_fn", fn)

    def raw(self, x):
        y = self._fn(x)
        if not np.all(np.isfinite(y)):
            raise MalformedSpecError(f"CDF expression {self.source!r} is not finite at some x")
        return y

    def to_dict(self):
        d = {"kind": self.kind, "source": self.source}
        if self.support_hint is not None:
            d["support"] = list(self.support_hint)
        return d


def _bound_search(cdfs: Sequence[CdfSpec], end: str) -> float:
    """Truncation point: doubling search to bracket it, then bisection."""
    if end == "upper":
        ok = lambda x: all(c(x) >= 1.0 - TAIL for c in cdfs)
        sgn = 1.0
    else:
        ok = lambda x: all(c(x) <= TAIL for c in cdfs)
        sgn = -1.0
    far = sgn
    for _ in range(1100):
        if ok(far):
            break
        far *= 2.0
    else:
        raise MalformedSpecError(f"CDFs never reach the {end} tail level")
    if far == sgn:
        return far
    near = far / 2.0
    while abs(far - near) > 1e-12 * abs(far):
        mid = 0.5 * (near + far)
        if ok(mid):
            far = mid
        else:
            near = mid
    return far


@dataclass(frozen=True)
class PBox:
    """Validated pair of CDFs with a finite working domain.

    ``domain`` may be given explicitly. Otherwise finite support hints are
    used and infinite ends are truncated where both CDFs are within 1e-10
    of their limit.
    """

    lower: CdfSpec
    upper: CdfSpec
    domain: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.domain is None:
            object.__setattr__(self, "domain", self._infer_domain())
        lo, hi = (float(self.domain[0]), float(self.domain[1]))
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise MalformedSpecError(f"domain must be a finite interval, got {self.domain}")
        object.__setattr__(self, "domain", (lo, hi))

    def _infer_domain(self):
        cdfs = (self.lower, self.upper)
        hints = [c.support_hint or (-math.inf, math.inf) for c in cdfs]
        lows = [h[0] for h in hints]
        highs = [h[1] for h in hints]
        lo = min(lows) if all(map(math.isfinite, lows)) else _bound_search(cdfs, "lower")
        hi = max(highs) if all(map(math.isfinite, highs)) else _bound_search(cdfs, "upper")
        return (lo, hi)

    @property
    def width(self) -> float:
        return self.domain[1] - self.domain[0]

    def cdf(self, which: str):
        if which == "lower":
            return self.lower
        if which == "upper":
            return self.upper
        raise ValueError(f"which must be 'lower' or 'upper', got {which!r}")

    def tail_mass(self) -> float:
        """Probability the truncation can ignore (left plus right)."""
        lo, hi = self.domain
        return float(self.upper(np.nextafter(lo, -math.inf)) + 1.0 - self.lower(hi))

    def to_dict(self) -> dict:
        return {"lower": self.lower.to_dict(), "upper": self.upper.to_dict(),
                "domain": list(self.domain)}


def exponential_pbox(lower_rate: float, upper_rate: float) -> PBox:
    """Band between two exponential CDFs; ``lower_rate < upper_rate``."""
    return PBox(ExponentialCdf(lower_rate), ExponentialCdf(upper_rate))


def eval_cdf(pbox: PBox, which: str, x):
    """F_(x) or F^(x), clamped to [0, 1]."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("x must be finite")
    out = pbox.cdf(which)(x)
    return float(out) if np.ndim(out) == 0 else out


def _bisect_quantile(cdf: CdfSpec, g: np.ndarray, side: str, lo: float, hi: float) -> np.ndarray:
    a = np.full(g.shape, lo)
    b = np.full(g.shape, hi)
    tol = 1e-12 * (hi - lo)
    # upper: keep F(a) < g <= F(b); lower: keep F(a) <= g < F(b)
    for _ in range(200):
        if np.all(b - a <= tol):
            break
        m = 0.5 * (a + b)
        fm = cdf(m)
        left = fm < g if side == "upper" else fm <= g
        a = np.where(left, m, a)
        b = np.where(left, b, m)
    return b if side == "lower" else a


def quantile(pbox: PBox, which: str, gamma):
    """Pseudo-inverse of F^ (``which='upper'``) or F_ (``'lower'``)."""
    g = np.asarray(gamma, dtype=float)
    if np.any(~np.isfinite(g)) or np.any(g < 0.0) or np.any(g > 1.0):
        raise DomainError("gamma must lie in [0, 1]")
    cdf = pbox.cdf(which)
    lo, hi = pbox.domain
    q = cdf.closed_quantile(g, which)
    if q is None:
        gg = np.atleast_1d(g)
        q = _bisect_quantile(cdf, gg, which, lo, hi)
        if which == "upper":
            # nothing below g inside the domain: sup of the empty set is lo
            q = np.where(cdf(np.full(gg.shape, lo)) >= gg, lo, q)
        else:
            q = np.where(cdf(np.full(gg.shape, hi)) <= gg, hi, q)
        q = q.reshape(g.shape)
    q = np.clip(q, lo, hi)
    return float(q) if np.ndim(q) == 0 else q


@dataclass
class ValidationReport:
    valid: bool
    violations: list = field(default_factory=list)

    @property
    def first(self):
        return self.violations[0] if self.violations else None

    def __str__(self):
        if self.valid:
            return "valid"
        return "; ".join(f"{msg} at x={x:.6g}" for msg, x in self.violations)


def validate(pbox: PBox, grid_size: int = 4097) -> ValidationReport:
    """Check the p-box invariants on a uniform grid over the domain."""
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    lo, hi = pbox.domain
    xs = np.linspace(lo, hi, grid_size)
    out = []
    for which in ("lower", "upper"):
        raw = np.asarray(pbox.cdf(which).raw(xs), dtype=float)
        bad = (raw < -1e-12) | (raw > 1 + 1e-12)
        if bad.any():
            out.append((f"{which} CDF outside [0,1]", float(xs[np.argmax(bad)])))
        dec = np.diff(raw) < -1e-12
        if dec.any():
            out.append((f"{which} CDF decreases", float(xs[1:][np.argmax(dec)])))
    fl = pbox.lower(xs)
    fu = pbox.upper(xs)
    rev = fl > fu + 1e-12
    if rev.any():
        out.append(("F_ > F^ (lower CDF above upper CDF)", float(xs[np.argmax(rev)])))
    below = np.nextafter(lo, -math.inf)
    if pbox.upper(below) > 1e-9 or pbox.lower(below) > 1e-9:
        out.append(("CDFs do not vanish at the lower domain end", lo))
    if pbox.lower(hi) < 1 - 1e-9 or pbox.upper(hi) < 1 - 1e-9:
        out.append(("CDFs do not reach 1 at the upper domain end", hi))
    return ValidationReport(not out, out)
