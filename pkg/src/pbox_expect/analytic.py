"""Closed-form extremizing distributions for monotone, unimodal and
piecewise-monotone h.

The extremizing CDF of the lower expectation follows F^ while h rises,
sits at a constant level alpha across each local maximum, follows F_ while
h falls and jumps at each local minimum. The upper expectation is the
lower expectation of -h, negated.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BracketError, ConsistencyError, PBoxError
from .numerics import DEFAULT_TOL, Tolerance, find_all_roots, integrate, integrate_levels, \
    vectorize
from .objective import ShapeDescriptor
from .pbox import PBox, eval_cdf, quantile
from .results import BoundsResult

JUMP_CLAMP = 1e-12
FORMS = ("gamma", "x")


# --------------------------------------------------------------------------
# integrals against a bounding CDF


def _density(pbox: PBox, which: str) -> Callable:
    cdf = pbox.cdf(which)
    if cdf.density(pbox.domain[0]) is not None:
        return cdf.density
    lo, hi = pbox.domain
    step = 1e-6 * (hi - lo)

    def fd(x):
        x = np.asarray(x, dtype=float)
        a = np.maximum(x - step, lo)
        b = np.minimum(x + step, hi)
        return (cdf(b) - cdf(a)) / (b - a)

    return fd


def stieltjes(pbox: PBox, h: Callable, which: str, xa: float, xb: float,
              form: str = "gamma", tol: Tolerance = DEFAULT_TOL):
    """Integral of h dF over (xa, xb] for F = F^ (``upper``) or F_ (``lower``).

    The atom F(L) at the domain start is included when ``xa`` is the start,
    and the truncated right tail 1 - F(U) is placed at U when ``xb`` is the
    end, so the result matches the clamped-quantile level integral.
    Returns ``(value, error, warnings)``.
    """
    lo, hi = pbox.domain
    if xb <= xa:
        return 0.0, 0.0, []
    hv = vectorize(h)
    if form == "gamma":
        ga = 0.0 if xa <= lo else eval_cdf(pbox, which, xa)
        gb = 1.0 if xb >= hi else eval_cdf(pbox, which, xb)
        r = integrate_levels(lambda g: hv(quantile(pbox, which, g)), ga, gb, tol)
        return r.value, r.error, [r.warning] if r.warning else []
    if form != "x":
        raise ValueError(f"form must be one of {FORMS}")
    dens = _density(pbox, which)
    r = integrate(lambda x: hv(x) * dens(x), xa, xb, tol)
    value = r.value
    if xa <= lo:
        value += float(eval_cdf(pbox, which, lo)) * float(hv(np.array([lo]))[0])
    if xb >= hi:
        value += (1.0 - float(eval_cdf(pbox, which, hi))) * float(hv(np.array([hi]))[0])
    return value, r.error, [r.warning] if r.warning else []


# --------------------------------------------------------------------------
# extremizing distributions


@dataclass(frozen=True)
class Segment:
    kind: str  # follow-upper | follow-lower | constant
    xa: float
    xb: float
    level: Optional[float] = None


@dataclass
class ExtremizingCdf:
    """Piecewise CDF built from follow/constant segments plus jumps.

    Segments cover (xa, xb]; jumps are point masses. Before the first piece
    the CDF is 0 and after the last it is 1.
    """

    segments: list
    jumps: list  # (location, mass)
    domain: tuple

    def value(self, pbox: PBox, x) -> np.ndarray:
        """F(x): jump masses at or left of x plus follow-segment increments."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros_like(x)
        for s in self.segments:
            if s.kind == "constant" or s.xb <= s.xa:
                continue
            which = "upper" if s.kind == "follow-upper" else "lower"
            base = float(eval_cdf(pbox, which, s.xa))
            out += np.where(x > s.xa, eval_cdf(pbox, which, np.clip(x, s.xa, s.xb)) - base, 0.0)
        for b, m in self.jumps:
            out += np.where(x >= b, m, 0.0)
        return out

    def _level_before(self, pbox, b: float) -> float:
        at = float(self.value(pbox, b)[0])
        return at - sum(m for c, m in self.jumps if c == b)

    def expectation(self, pbox: PBox, h: Callable, form: str = "x",
                    tol: Tolerance = DEFAULT_TOL) -> float:
        """Integral of h against this CDF (segments plus jumps)."""
        total = 0.0
        lo, hi = pbox.domain
        hv = vectorize(h)
        for s in self.segments:
            if s.kind == "constant" or s.xb <= s.xa:
                continue
            which = "upper" if s.kind == "follow-upper" else "lower"
            if form == "x":
                dens = _density(pbox, which)
                total += integrate(lambda x: hv(x) * dens(x), s.xa, s.xb, tol).value
            else:
                ga = float(eval_cdf(pbox, which, s.xa))
                gb = float(eval_cdf(pbox, which, s.xb))
                total += integrate_levels(lambda g: hv(quantile(pbox, which, g)), ga, gb, tol).value
        for b, m in self.jumps:
            total += m * float(hv(np.array([b]))[0])
        return total

    def total_mass(self, pbox: PBox) -> float:
        return float(self.value(pbox, self.domain[1])[0])

    def check(self, pbox: PBox, grid_size: int = 4001, slack: float = 1e-9) -> list:
        """Monotonicity and band membership on a grid; returns violations."""
        lo, hi = pbox.domain
        xs = np.linspace(lo, hi, grid_size)
        extra = [b for b, _ in self.jumps] + [s.xa for s in self.segments] + [s.xb for s in self.segments]
        xs = np.unique(np.concatenate([xs, np.clip(extra, lo, hi)]))
        xs = xs[xs < hi]  # the truncated tail is absorbed at the end point
        F = self.value(pbox, xs)
        issues = []
        d = np.diff(F)
        if np.any(d < -slack):
            i = int(np.argmax(d < -slack))
            issues.append(("decreasing", float(xs[i + 1])))
        fl = eval_cdf(pbox, "lower", xs)
        fu = eval_cdf(pbox, "upper", xs)
        if np.any(F < fl - slack):
            issues.append(("below lower CDF", float(xs[np.argmax(F < fl - slack)])))
        if np.any(F > fu + slack):
            issues.append(("above upper CDF", float(xs[np.argmax(F > fu + slack)])))
        if any(m < -slack for _, m in self.jumps):
            issues.append(("negative jump", 0.0))
        return issues

    def trace(self, pbox: PBox, points_per_segment: int = 64) -> list:
        """Rows (x, F(x), segment-kind) suitable for plotting."""
        rows = []
        for s in sorted(self.segments, key=lambda s: s.xa):
            if s.xb < s.xa:
                continue
            xs = np.linspace(s.xa, s.xb, points_per_segment if s.kind != "constant" else 2)
            if s.kind == "constant":
                fs = np.full(xs.shape, s.level)
            else:
                fs = eval_cdf(pbox, "upper" if s.kind == "follow-upper" else "lower", xs)
            rows.extend((float(x), float(f), s.kind) for x, f in zip(xs, np.atleast_1d(fs)))
        for b, m in self.jumps:
            if m <= 0:
                continue
            before = self._level_before(pbox, b)
            rows.append((float(b), float(before), "jump"))
            rows.append((float(b), float(before + m), "jump"))
        rows.sort(key=lambda r: (r[0], r[1]))
        return rows


def follow(pbox: PBox, which: str) -> ExtremizingCdf:
    lo, hi = pbox.domain
    f_lo = float(eval_cdf(pbox, which, lo))
    f_hi = float(eval_cdf(pbox, which, hi))
    return ExtremizingCdf([Segment(f"follow-{which}", lo, hi)],
                          [(lo, f_lo), (hi, 1.0 - f_hi)], (lo, hi))


# --------------------------------------------------------------------------
# monotone h


def bounds_monotone(pbox: PBox, h: Callable, direction: str, form: str = "gamma",
                    tol: Tolerance = DEFAULT_TOL):
    """(BoundsResult, (lower extremizer, upper extremizer)) for monotone h."""
    if direction not in ("nondecreasing", "nonincreasing"):
        raise ValueError("direction must be nondecreasing or nonincreasing")
    t0 = time.perf_counter()
    lo, hi = pbox.domain
    low_cdf, up_cdf = ("upper", "lower") if direction == "nondecreasing" else ("lower", "upper")
    lv, le, lw = stieltjes(pbox, h, low_cdf, lo, hi, form, tol)
    uv, ue, uw = stieltjes(pbox, h, up_cdf, lo, hi, form, tol)
    res = BoundsResult(lv, uv, "analytic", seconds=time.perf_counter() - t0,
                       metadata={"shape": direction, "form": form, "quad_error": max(le, ue)},
                       warnings=lw + uw)
    return res, (follow(pbox, low_cdf), follow(pbox, up_cdf))


# --------------------------------------------------------------------------
# level equation


@dataclass
class AlphaLevel:
    value: float
    index: int
    bracket: tuple
    residual: float
    a: float
    a_left: float
    a_right: float
    candidates: list = field(default_factory=list)


def phi_function(pbox: PBox, h: Callable, clamp: tuple) -> Callable:
    """phi(alpha) = h(max(Q^(alpha), c0)) - h(min(Q_(alpha), c1))."""
    hv = vectorize(h)
    c0, c1 = clamp

    def phi(alpha):
        alpha = np.clip(np.asarray(alpha, dtype=float), 0.0, 1.0)
        left = np.maximum(quantile(pbox, "upper", alpha), c0)
        right = np.minimum(quantile(pbox, "lower", alpha), c1)
        out = hv(np.atleast_1d(left)) - hv(np.atleast_1d(right))
        return out.reshape(np.shape(alpha)) if np.ndim(alpha) else float(out[0])

    return phi


def solve_alpha(pbox: PBox, h: Callable, a: float, bracket: Optional[tuple] = None,
                clamp: Optional[tuple] = None, index: int = 0, scan_size: int = 256,
                tol: Tolerance = DEFAULT_TOL) -> AlphaLevel:
    """Level alpha at which h takes equal values at both ends of the
    (clamped) focal interval, for a maximum of h at ``a``.

    Every root found on the bracket is kept only if its clamped interval
    [a', a''] contains ``a``; among those the smallest |phi| wins.
    """
    if bracket is None:
        bracket = (float(eval_cdf(pbox, "lower", a)), float(eval_cdf(pbox, "upper", a)))
    if clamp is None:
        clamp = pbox.domain
    g0, g1 = float(bracket[0]), float(bracket[1])
    phi = phi_function(pbox, h, clamp)
    if g1 - g0 <= tol.abs_x:
        roots = [0.5 * (g0 + g1)]
    else:
        roots = find_all_roots(phi, g0, g1, scan_size, tol)
    hv = vectorize(h)
    scale = float(np.max(np.abs(hv(np.array([clamp[0], a, clamp[1]]))))) + 1.0
    xslack = 1e-9 * (pbox.width + abs(a))
    kept = []
    for r in roots:
        ql = float(quantile(pbox, "lower", r))
        qu = float(quantile(pbox, "upper", r))
        a1 = max(qu, clamp[0])
        a2 = min(ql, clamp[1])
        if qu == ql and not (abs(qu - a) <= xslack):
            continue  # degenerate focal interval away from the maximum
        if a1 - xslack <= a <= a2 + xslack:
            kept.append((abs(phi(r)), r, a1, a2))
    if not kept:
        # no sign change: the smaller end value wins on the whole bracket, so
        # the switch sits at g1 when phi < 0 throughout and at g0 when phi > 0
        p0, p1 = phi(g0), phi(g1)
        ends = [(abs(p0), g0), (abs(p1), g1)]
        res, g = min(ends)
        if not roots and p0 * p1 > 0:
            g = g1 if p0 < 0 else g0
            res = abs(phi(g))
            qu = float(quantile(pbox, "upper", g))
            ql = float(quantile(pbox, "lower", g))
            kept.append((res, g, max(qu, clamp[0]), min(ql, clamp[1])))
        elif res <= 1e-9 * scale:
            qu = float(quantile(pbox, "upper", g))
            ql = float(quantile(pbox, "lower", g))
            kept.append((res, g, max(qu, clamp[0]), min(ql, clamp[1])))
        else:
            raise BracketError(f"no admissible root of the level equation in [{g0:.6g}, {g1:.6g}] "
                               f"for the maximum at {a:.6g}")
    kept.sort()
    res, r, a1, a2 = kept[0]
    return AlphaLevel(float(r), index, (g0, g1), float(res), float(a), float(a1), float(a2),
                      [k[1] for k in kept])


# --------------------------------------------------------------------------
# general piecewise-monotone h


def _skeleton(pbox: PBox, h: Callable, shape: ShapeDescriptor):
    """Alternating list of (location, kind) starting and ending with a min,
    with virtual extrema at the domain ends."""
    lo, hi = pbox.domain
    ex = [(x, k) for x, k in shape.extrema_list() if lo < x < hi]
    if not ex:
        if shape.kind in ("nondecreasing", "nonincreasing"):
            rising = shape.kind == "nondecreasing"
        elif shape.kind in ("unimodal-max", "unimodal-min"):
            rising = (shape.kind == "unimodal-max") == (shape.location >= hi)
        else:
            hv = vectorize(h)
            rising = float(hv(np.array([hi]))[0]) >= float(hv(np.array([lo]))[0])
        ex = [(hi, "max")] if rising else []
        seq = [(lo, "min")] + ([] if rising else [(lo, "max")]) + ex
    else:
        seq = [(lo, "min")]
        if ex[0][1] == "min":
            seq.append((lo, "max"))
        seq.extend(ex)
        if seq[-1][1] == "min":
            seq.append((hi, "max"))
    if seq[-1][1] == "max":
        seq.append((hi, "min"))
    b = [seq[0][0]] + [x for x, k in seq[2::2]]
    a = [x for x, k in seq[1::2]]
    return np.array(a, dtype=float), np.array(b, dtype=float)


@dataclass
class _Piece:
    alpha: AlphaLevel
    s: float
    e: float
    b_left: float
    b_right: float


def _construct(pbox: PBox, h: Callable, shape: ShapeDescriptor, tol: Tolerance):
    lo, hi = pbox.domain
    a, b = _skeleton(pbox, h, shape)
    m = a.size
    FU = lambda x: float(eval_cdf(pbox, "upper", x))
    FL = lambda x: float(eval_cdf(pbox, "lower", x))
    alphas: list[AlphaLevel] = []
    for i in range(m):
        ai, b0, b1 = a[i], b[i], b[i + 1]
        if ai <= lo:
            g = FL(lo)
            alphas.append(AlphaLevel(g, i + 1, (g, FU(lo)), 0.0, ai, lo, lo))
        elif ai >= hi:
            g = FU(hi)
            alphas.append(AlphaLevel(g, i + 1, (FL(hi), g), 0.0, ai, hi, hi))
        else:
            alphas.append(solve_alpha(pbox, h, ai, clamp=(b0, b1), index=i + 1, tol=tol))
    vals = [al.value for al in alphas]
    jumps = []
    for j in range(m + 1):
        before = 0.0 if j == 0 else max(FL(b[j]), vals[j - 1])
        after = 1.0 if j == m else min(FU(b[j]), vals[j])
        mass = after - before
        if mass < 0:
            if mass < -JUMP_CLAMP:
                raise ConsistencyError(
                    f"negative jump {mass:.3g} at x={b[j]:.6g}: the assembled CDF would decrease")
            mass = 0.0
        jumps.append((float(b[j]), float(mass)))
    pieces = []
    for i in range(m):
        s = min(FU(b[i]), vals[i]) if i else min(FU(lo), vals[0])
        e = max(FL(b[i + 1]), vals[i])
        pieces.append(_Piece(alphas[i], s, e, float(b[i]), float(b[i + 1])))
    return pieces, jumps


def construction_levels(pbox: PBox, h: Callable, shape: ShapeDescriptor,
                        tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Alpha levels and the CDF values on both sides of every jump."""
    pieces, _ = _construct(pbox, h, shape, tol)
    out = []
    for p in pieces:
        out.extend([p.s, p.alpha.value, p.e])
    return np.array(out, dtype=float)


def bounds_general_lower(pbox: PBox, h: Callable, shape: ShapeDescriptor,
                         epsilon: float = 1e-3, form: str = "gamma",
                         tol: Tolerance = DEFAULT_TOL):
    """Lower expectation and its extremizing CDF for piecewise-monotone h.

    Intervals [b_{i-1}, b_i] between consecutive minima are handled left
    to right. The value reported covers the whole working domain; partial
    sums E_r and the first index r with |E_r - E_{r-1}| <= epsilon are
    kept in the metadata.
    """
    t0 = time.perf_counter()
    hv = vectorize(h)
    pieces, jumps = _construct(pbox, h, shape, tol)
    warnings: list = []
    segments: list = []
    qerr = 0.0
    partial = []
    total = jumps[0][1] * float(hv(np.array([jumps[0][0]]))[0])
    for i, p in enumerate(pieces):
        al = p.alpha
        contrib = 0.0
        if form == "gamma":
            for which, g0, g1 in (("upper", p.s, al.value), ("lower", al.value, p.e)):
                if g1 > g0:
                    r = integrate_levels(lambda g, w=which: hv(quantile(pbox, w, g)), g0, g1, tol)
                    contrib += r.value
                    qerr += r.error
                    if r.warning:
                        warnings.append(r.warning)
        else:
            for which, xa, xb in (("upper", p.b_left, al.a_left), ("lower", al.a_right, p.b_right)):
                if xb > xa:
                    dens = _density(pbox, which)
                    r = integrate(lambda x, d=dens: hv(x) * d(x), xa, xb, tol)
                    contrib += r.value
                    qerr += r.error
                    if r.warning:
                        warnings.append(r.warning)
        b, mass = jumps[i + 1]
        contrib += mass * float(hv(np.array([b]))[0])
        total += contrib
        partial.append(total)
        if al.a_left > p.b_left:
            segments.append(Segment("follow-upper", p.b_left, al.a_left))
        if al.a_right > al.a_left:
            segments.append(Segment("constant", al.a_left, al.a_right, al.value))
        if p.b_right > al.a_right:
            segments.append(Segment("follow-lower", al.a_right, p.b_right))
    stop = len(partial)
    for r in range(1, len(partial)):
        if abs(partial[r] - partial[r - 1]) <= epsilon:
            stop = r + 1
            break
    ext = ExtremizingCdf(segments, jumps, pbox.domain)
    meta = {
        "alphas": [p.alpha.value for p in pieces],
        "alpha_levels": [p.alpha for p in pieces],
        "maxima": [p.alpha.a for p in pieces],
        "jumps": jumps,
        "partial_sums": partial,
        "epsilon": epsilon,
        "stop_index": stop,
        "value_at_stop": partial[stop - 1] if partial else total,
        "quad_error": qerr,
        "form": form,
    }
    res = BoundsResult(total, math.nan, "analytic", seconds=time.perf_counter() - t0,
                       metadata=meta, warnings=warnings)
    return res, ext


def bounds_general(pbox: PBox, h: Callable, shape: ShapeDescriptor, epsilon: float = 1e-3,
                   form: str = "gamma", tol: Tolerance = DEFAULT_TOL):
    """Lower bound of h and upper bound as minus the lower bound of -h."""
    t0 = time.perf_counter()
    lo_res, lo_ext = bounds_general_lower(pbox, h, shape, epsilon, form, tol)
    neg = lambda x: -vectorize(h)(x)
    up_res, up_ext = bounds_general_lower(pbox, neg, shape.reflected(), epsilon, form, tol)
    meta = {"lower": lo_res.metadata, "upper_of_negation": up_res.metadata, "form": form,
            "quad_error": lo_res.metadata["quad_error"] + up_res.metadata["quad_error"]}
    res = BoundsResult(lo_res.lower, -up_res.lower, "analytic", seconds=time.perf_counter() - t0,
                       metadata=meta, warnings=lo_res.warnings + up_res.warnings)
    return res, (lo_ext, up_ext)


# --------------------------------------------------------------------------
# unimodal h


def bounds_unimodal(pbox: PBox, h: Callable, a: float, form: str = "gamma",
                    tol: Tolerance = DEFAULT_TOL):
    """Bounds for h increasing up to ``a`` and decreasing after it."""
    lo, hi = pbox.domain
    if a >= hi:
        return bounds_monotone(pbox, h, "nondecreasing", form, tol)
    if a <= lo:
        return bounds_monotone(pbox, h, "nonincreasing", form, tol)
    t0 = time.perf_counter()
    hv = vectorize(h)
    ha = float(hv(np.array([a]))[0])
    fl_a = float(eval_cdf(pbox, "lower", a))
    fu_a = float(eval_cdf(pbox, "upper", a))
    warnings: list = []
    errs = 0.0

    def part(which, xa, xb):
        nonlocal errs
        v, e, w = stieltjes(pbox, h, which, xa, xb, form, tol)
        errs += e
        warnings.extend(w)
        return v

    upper = part("lower", lo, a) + ha * (fu_a - fl_a) + part("upper", a, hi)
    alpha = solve_alpha(pbox, h, a, (fl_a, fu_a), tol=tol)
    ql = float(quantile(pbox, "lower", alpha.value))
    qu = float(quantile(pbox, "upper", alpha.value))
    if form == "gamma":
        # the level form avoids evaluating either CDF at the split points
        r1 = integrate_levels(lambda g: hv(quantile(pbox, "upper", g)), 0.0, alpha.value, tol)
        r2 = integrate_levels(lambda g: hv(quantile(pbox, "lower", g)), alpha.value, 1.0, tol)
        lower = r1.value + r2.value
        errs += r1.error + r2.error
        warnings.extend(w for w in (r1.warning, r2.warning) if w)
    else:
        lower = part("upper", lo, qu) + part("lower", ql, hi)
    up_ext = ExtremizingCdf([Segment("follow-lower", lo, a), Segment("follow-upper", a, hi)],
                            [(lo, float(eval_cdf(pbox, "lower", lo))), (a, fu_a - fl_a),
                             (hi, 1.0 - float(eval_cdf(pbox, "upper", hi)))], (lo, hi))
    low_ext = ExtremizingCdf([Segment("follow-upper", lo, qu),
                              Segment("constant", qu, ql, alpha.value),
                              Segment("follow-lower", ql, hi)],
                             [(lo, float(eval_cdf(pbox, "upper", lo))),
                              (hi, 1.0 - float(eval_cdf(pbox, "lower", hi)))], (lo, hi))
    res = BoundsResult(lower, upper, "analytic", seconds=time.perf_counter() - t0,
                       metadata={"shape": "unimodal-max", "a": a, "alpha": alpha.value,
                                 "alpha_level": alpha, "split": (qu, ql), "form": form,
                                 "quad_error": errs},
                       warnings=warnings)
    return res, (low_ext, up_ext)


def analytic_bounds(pbox: PBox, h: Callable, shape: ShapeDescriptor, form: str = "gamma",
                    epsilon: float = 1e-3, tol: Tolerance = DEFAULT_TOL):
    """Dispatch on the declared shape."""
    if shape.kind in ("nondecreasing", "nonincreasing"):
        return bounds_monotone(pbox, h, shape.kind, form, tol)
    if shape.kind == "unimodal-max":
        return bounds_unimodal(pbox, h, shape.location, form, tol)
    if shape.kind == "unimodal-min":
        neg = lambda x: -vectorize(h)(x)
        res, (lo_ext, up_ext) = bounds_unimodal(pbox, neg, shape.location, form, tol)
        out = res.negated()
        out.metadata["shape"] = "unimodal-min"
        return out, (up_ext, lo_ext)
    if shape.kind == "alternating":
        return bounds_general(pbox, h, shape, epsilon, form, tol)
    raise PBoxError("analytic bounds need a declared shape (not 'unknown')")
