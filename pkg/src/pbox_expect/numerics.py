"""Root finding and adaptive quadrature shared by the engines.

All routines accept plain Python callables. Integrands and scan functions
are evaluated on numpy arrays when they support it, which is much faster
than calling them point by point; scalar-only callables still work.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import BracketError

ABS_FLOOR = 1e-12


@dataclass(frozen=True)
class Tolerance:
    """Tolerances for root finding and quadrature.

    abs_x    width of the final root bracket
    abs_f    residual accepted as an exact root
    quad_rel relative quadrature tolerance (absolute floor 1e-12)
    """

    abs_x: float = 1e-12
    abs_f: float = 1e-14
    quad_rel: float = 1e-10

    def __post_init__(self):
        for name in ("abs_x", "abs_f", "quad_rel"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValueError(f"tolerance {name} must be positive, got {v!r}")


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class Quadrature:
    value: float
    error: float
    evaluations: int
    warning: Optional[str] = None

    def __float__(self) -> float:
        return self.value


def vectorize(f: Callable) -> Callable[[np.ndarray], np.ndarray]:
    """Return an array-in, array-out version of ``f``."""

    def call(x):
        x = np.asarray(x, dtype=float)
        try:
            y = np.asarray(f(x), dtype=float)
            if y.shape == x.shape:
                return y
            if y.ndim == 0:
                return np.full(x.shape, float(y))
        except (TypeError, ValueError):
            pass
        return np.array([float(f(float(t))) for t in x.ravel()]).reshape(x.shape)

    return call


def find_root(f: Callable[[float], float], lo: float, hi: float,
              tol: Tolerance = DEFAULT_TOL) -> float:
    """Root of ``f`` in ``[lo, hi]`` by bisection with secant steps.

    A secant step is accepted only while it keeps shrinking the bracket
    by at least half every two iterations; otherwise the step bisects.
    """
    if lo > hi:
        lo, hi = hi, lo
    flo, fhi = float(f(lo)), float(f(hi))
    if abs(flo) <= tol.abs_f:
        return lo
    if abs(fhi) <= tol.abs_f:
        return hi
    if flo * fhi > 0 or math.isnan(flo) or math.isnan(fhi):
        raise BracketError(f"no sign change on [{lo!r}, {hi!r}]: f={flo!r}, {fhi!r}")
    width = hi - lo
    use_secant = True
    for _ in range(400):
        if hi - lo <= tol.abs_x:
            break
        x = 0.5 * (lo + hi)
        if use_secant and fhi != flo:
            xs = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < xs < hi:
                x = xs
        fx = float(f(x))
        if abs(fx) <= tol.abs_f:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        new_width = hi - lo
        # secant stalls when one end never moves; force a bisection then
        use_secant = new_width < 0.5 * width
        width = new_width
    return lo if abs(flo) < abs(fhi) else hi


def find_all_roots(f: Callable, lo: float, hi: float, scan_size: int = 256,
                   tol: Tolerance = DEFAULT_TOL) -> list[float]:
    """All roots visible as sign changes (or exact zeros) on a uniform scan."""
    if scan_size < 8:
        raise ValueError("scan_size must be at least 8")
    if hi < lo:
        lo, hi = hi, lo
    if hi == lo:
        return [lo] if abs(float(f(lo))) <= tol.abs_f else []
    xs = np.linspace(lo, hi, scan_size + 1)
    ys = vectorize(f)(xs)
    roots: list[float] = []
    for i in range(scan_size + 1):
        if abs(ys[i]) <= tol.abs_f:
            roots.append(float(xs[i]))
        if i < scan_size and ys[i] * ys[i + 1] < 0 and abs(ys[i + 1]) > tol.abs_f:
            roots.append(find_root(f, float(xs[i]), float(xs[i + 1]), tol))
    roots.sort()
    out: list[float] = []
    for r in roots:
        if not out or r - out[-1] > max(tol.abs_x, 1e-15 * abs(r)):
            out.append(r)
    return out


def integrate(f: Callable, lo: float, hi: float, tol: Tolerance = DEFAULT_TOL,
              max_depth: int = 48, max_panels: int = 1 << 20,
              initial_panels: int = 16) -> Quadrature:
    """Adaptive Simpson quadrature of ``f`` over ``[lo, hi]``.

    Panels are refined level by level so that each level costs a single
    vectorized call. A panel is accepted when its Richardson error estimate
    is below its share (by width) of ``quad_rel * integral(|f|)``, with the
    absolute floor 1e-12. Exhausting depth or panel budget keeps the best
    estimate and sets ``warning``.
    """
    if hi < lo:
        r = integrate(f, hi, lo, tol, max_depth, max_panels, initial_panels)
        return Quadrature(-r.value, r.error, r.evaluations, r.warning)
    if hi == lo:
        return Quadrature(0.0, 0.0, 0)
    fv = vectorize(f)
    total_width = hi - lo
    edges = np.linspace(lo, hi, 2 * initial_panels + 1)
    vals = fv(edges)
    a, m, b = edges[0:-1:2], edges[1::2], edges[2::2]
    fa, fm, fb = vals[0:-1:2], vals[1::2], vals[2::2]
    evals = edges.size
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    absint = float(np.sum((b - a) / 6.0 * (np.abs(fa) + 4 * np.abs(fm) + np.abs(fb))))
    accepted = 0.0
    accepted_err = 0.0
    warning = None
    for depth in range(max_depth + 1):
        lm = 0.5 * (a + m)
        rm = 0.5 * (m + b)
        fl, fr = np.split(fv(np.concatenate([lm, rm])), 2)
        evals += 2 * a.size
        left = (m - a) / 6.0 * (fa + 4 * fl + fm)
        right = (b - m) / 6.0 * (fm + 4 * fr + fb)
        with np.errstate(invalid="ignore"):
            diff = left + right - whole
        if not np.all(np.isfinite(diff)):
            raise FloatingPointError("integrand is not finite on the integration range")
        budget = max(tol.quad_rel * absint, ABS_FLOOR)
        share = budget * (b - a) / total_width
        ok = np.abs(diff) <= 15.0 * share
        accepted += float(np.sum((left + right + diff / 15.0)[ok]))
        accepted_err += float(np.sum(np.abs(diff[ok]))) / 15.0
        keep = ~ok
        if not keep.any():
            break
        if depth == max_depth or 2 * keep.sum() > max_panels:
            accepted += float(np.sum((left + right + diff / 15.0)[keep]))
            accepted_err += float(np.sum(np.abs(diff[keep])))
            warning = (f"quadrature budget exhausted on [{lo:.6g}, {hi:.6g}] "
                       f"with {int(keep.sum())} unresolved panels")
            break
        a, m, b = a[keep], m[keep], b[keep]
        fa, fm, fb = fa[keep], fm[keep], fb[keep]
        lm, rm, fl, fr = lm[keep], rm[keep], fl[keep], fr[keep]
        left, right = left[keep], right[keep]
        a = np.concatenate([a, m])
        b2 = np.concatenate([m, b])
        m = np.concatenate([lm, rm])
        fa, fb2 = np.concatenate([fa, fm]), np.concatenate([fm, fb])
        fm = np.concatenate([fl, fr])
        whole = np.concatenate([left, right])
        b, fb = b2, fb2
    return Quadrature(accepted, accepted_err, evals, warning)


def integrate_pieces(f: Callable, breaks, tol: Tolerance = DEFAULT_TOL) -> Quadrature:
    """Integrate over consecutive intervals of a sorted breakpoint list."""
    pts = np.unique(np.asarray(breaks, dtype=float))
    value = err = 0.0
    evals = 0
    warnings = []
    for lo, hi in zip(pts[:-1], pts[1:]):
        r = integrate(f, float(lo), float(hi), tol)
        value += r.value
        err += r.error
        evals += r.evaluations
        if r.warning:
            warnings.append(r.warning)
    return Quadrature(value, err, evals, "; ".join(warnings) or None)


_ENDS = 2.0 ** -np.arange(1, 44)
LEVEL_BREAKS = np.concatenate([_ENDS, 1.0 - _ENDS])


def integrate_levels(f: Callable, lo: float, hi: float, tol: Tolerance = DEFAULT_TOL) -> Quadrature:
    """Integral over a level range [lo, hi] within [0, 1], split at geometric
    breakpoints toward 0 and 1 where quantile integrands are singular."""
    if hi <= lo:
        return Quadrature(0.0, 0.0, 0) if hi == lo else integrate(f, lo, hi, tol)
    inner = LEVEL_BREAKS[(LEVEL_BREAKS > lo) & (LEVEL_BREAKS < hi)]
    return integrate_pieces(f, np.concatenate([[lo], inner, [hi]]), tol)


def golden_min(f: Callable, lo, hi, iters: int = 60):
    """Vectorized golden-section search; returns (argmin, min) per bracket.

    ``lo`` and ``hi`` may be arrays; ``f`` must be vectorized.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a = np.array(lo, dtype=float, copy=True)
    b = np.array(hi, dtype=float, copy=True)
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        left = fc < fd
        b = np.where(left, d, b)
        a = np.where(left, a, c)
        new_c = b - invphi * (b - a)
        new_d = a + invphi * (b - a)
        # reuse the surviving interior point
        c2 = np.where(left, new_c, d)
        d2 = np.where(left, c, new_d)
        fc2 = np.where(left, np.nan, fd)
        fd2 = np.where(left, fc, np.nan)
        need_c = np.isnan(fc2)
        need_d = np.isnan(fd2)
        if need_c.any():
            fc2 = np.where(need_c, f(c2), fc2)
        if need_d.any():
            fd2 = np.where(need_d, f(d2), fd2)
        c, d, fc, fd = c2, d2, fc2, fd2
    x = np.where(fc < fd, c, d)
    return x, np.minimum(fc, fd)
