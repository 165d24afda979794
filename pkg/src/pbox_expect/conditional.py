"""Conditional lower/upper expectations given an interval event B = [b0, b1].

With F(b0) = alpha and F(b1) = beta the conditional bounds are the
extremes of Psi(alpha, beta)/(beta - alpha) and Phi(alpha, beta)/(beta - alpha)
over the box [F_(b0), F^(b0)] x [F_(b1), F^(b1)], where Psi and Phi
integrate the sup and inf of h over the clipped focal interval
[max(Q^(g), b0), min(Q_(g), b1)]. Writing S for the running integral of that
sup, Psi(alpha, beta) = S(beta) - S(alpha): each ratio is a secant slope.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .analytic import solve_alpha, stieltjes
from .errors import BracketError, ConfigurationError, EventError
from .numerics import DEFAULT_TOL, Tolerance, find_all_roots, integrate_pieces, vectorize
from .objective import ShapeDescriptor
from .pbox import PBox, eval_cdf, quantile
from .randomset import cell_extreme
from .results import BoundsResult

MIN_WIDTH = 1e-9
DEFAULT_GRID = (128, 128)
BRANCH_GRID = 33
POLISH_PASSES = 2
GOLDEN_ITERS = 48


@dataclass(frozen=True)
class ConditioningEvent:
    b0: float
    b1: float

    def __post_init__(self):
        if not (np.isfinite(self.b0) and np.isfinite(self.b1)) or not self.b0 < self.b1:
            raise EventError(f"event must be a finite interval with b0 < b1, got "
                             f"[{self.b0}, {self.b1}]")


@dataclass
class ConditionalProblem:
    """A p-box, an objective with its shape, and an interval event.

    Events whose lower probability F_(b1) - F^(b0) is not positive are
    rejected.
    """

    pbox: PBox
    h: Callable
    shape: ShapeDescriptor
    event: ConditioningEvent
    alpha_range: tuple = field(init=False)
    beta_range: tuple = field(init=False)

    def __post_init__(self):
        if not isinstance(self.event, ConditioningEvent):
            self.event = ConditioningEvent(*map(float, self.event))
        b0, b1 = self.event.b0, self.event.b1
        p = self.pbox
        self.alpha_range = (float(eval_cdf(p, "lower", b0)), float(eval_cdf(p, "upper", b0)))
        self.beta_range = (float(eval_cdf(p, "lower", b1)), float(eval_cdf(p, "upper", b1)))
        if self.lower_probability <= 0.0:
            raise EventError(f"event [{b0:g}, {b1:g}] has lower probability "
                             f"{self.lower_probability:.3g}; conditioning needs it positive")

    @property
    def lower_probability(self) -> float:
        return self.beta_range[0] - self.alpha_range[1]

    @property
    def level_range(self) -> tuple:
        """Levels whose clipped focal interval is nonempty."""
        return self.alpha_range[0], self.beta_range[1]

    def negated(self) -> "ConditionalProblem":
        h = self.h
        return ConditionalProblem(self.pbox, lambda x: -h(x), self.shape.reflected(), self.event)


def _clipped(problem: ConditionalProblem, g):
    g = np.atleast_1d(np.asarray(g, dtype=float))
    lo = np.maximum(np.atleast_1d(quantile(problem.pbox, "upper", g)), problem.event.b0)
    hi = np.minimum(np.atleast_1d(quantile(problem.pbox, "lower", g)), problem.event.b1)
    return lo, hi


def level_extreme(problem: ConditionalProblem, want: str) -> Callable:
    """g -> sup (``"sup"``) or inf (``"inf"``) of h over the clipped focal interval."""

    def f(g):
        g = np.asarray(g, dtype=float)
        lo, hi = _clipped(problem, g)
        # quantile round-off at the event ends must not empty a one-point interval
        slack = 1e-9 * (1.0 + abs(problem.event.b0) + abs(problem.event.b1))
        hi = np.where((lo > hi) & (lo - hi <= slack), lo, hi)
        empty = lo > hi
        lo = np.where(empty, np.nan, lo)
        hi = np.where(empty, np.nan, hi)
        return cell_extreme(problem.h, problem.shape, lo, hi, want).reshape(g.shape)

    return f


def level_breaks(problem: ConditionalProblem, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Levels where the clipped interval or its extremizing end switches."""
    p = problem.pbox
    b0, b1 = problem.event.b0, problem.event.b1
    g0, g1 = problem.level_range
    pts = [problem.alpha_range[1], problem.beta_range[0]]
    ex = np.array([e for e, _ in problem.shape.extrema_list()], dtype=float)
    ex = ex[(ex > b0) & (ex < b1)]
    if ex.size:
        pts.extend(np.atleast_1d(eval_cdf(p, "lower", ex)))
        pts.extend(np.atleast_1d(eval_cdf(p, "upper", ex)))
    if problem.shape.kind not in ("nondecreasing", "nonincreasing") and g1 > g0:
        hv = vectorize(problem.h)

        def diff(g):
            lo, hi = _clipped(problem, g)
            return (hv(lo) - hv(hi)).reshape(np.shape(g))

        try:
            pts.extend(find_all_roots(diff, g0, g1, 256, tol))
        except BracketError:
            pass
    pts = np.asarray(pts, dtype=float)
    return np.unique(pts[(pts > g0) & (pts < g1)])


class LevelProfile:
    """Running integrals S (sup) and P (inf) of the level extremes."""

    def __init__(self, problem: ConditionalProblem, tol: Tolerance = DEFAULT_TOL):
        self.problem = problem
        self.tol = tol
        self.breaks = level_breaks(problem, tol)
        self.f_sup = level_extreme(problem, "sup")
        self.f_inf = level_extreme(problem, "inf")
        self.warnings: list = []

    def _integral(self, f, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        inner = self.breaks[(self.breaks > a) & (self.breaks < b)]
        r = integrate_pieces(f, np.concatenate([[a], inner, [b]]), self.tol)
        if r.warning and r.warning not in self.warnings:
            self.warnings.append(r.warning)
        return r.value

    def check(self, alpha: float, beta: float) -> None:
        g0, g1 = self.problem.level_range
        slack = 1e-12
        if alpha < g0 - slack or beta > g1 + slack:
            raise EventError(f"clipped focal interval is empty for some level in "
                             f"({alpha:.6g}, {beta:.6g}); the event admits [{g0:.6g}, {g1:.6g}]")

    def psi_phi(self, alpha: float, beta: float) -> tuple:
        self.check(alpha, beta)
        return self._integral(self.f_sup, alpha, beta), self._integral(self.f_inf, alpha, beta)

    def cumulative(self, points) -> tuple:
        """S and P at each point, measured from the first point."""
        pts = np.asarray(points, dtype=float)
        order = np.argsort(pts, kind="stable")
        srt = pts[order]
        self.check(srt[0], srt[-1])
        S = np.zeros(srt.size)
        P = np.zeros(srt.size)
        for k in range(1, srt.size):
            S[k] = S[k - 1] + self._integral(self.f_sup, srt[k - 1], srt[k])
            P[k] = P[k - 1] + self._integral(self.f_inf, srt[k - 1], srt[k])
        outS = np.empty_like(S)
        outP = np.empty_like(P)
        outS[order] = S
        outP[order] = P
        return outS, outP


def psi_phi(problem: ConditionalProblem, alpha: float, beta: float,
            tol: Tolerance = DEFAULT_TOL) -> tuple:
    """(Psi, Phi) at (alpha, beta) by level quadrature."""
    if not alpha < beta:
        raise ValueError("psi_phi needs alpha < beta")
    return LevelProfile(problem, tol).psi_phi(alpha, beta)


def _golden(f: Callable, lo: float, hi: float, iters: int = GOLDEN_ITERS) -> tuple:
    """Maximize a scalar function on [lo, hi] by golden-section search."""
    r = 0.5 * (np.sqrt(5.0) - 1.0)
    a, b = lo, hi
    c, d = b - r * (b - a), a + r * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iters):
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - r * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + r * (b - a)
            fd = f(d)
    return (c, fc) if fc >= fd else (d, fd)


def _box_search(profile: LevelProfile, arange: tuple, brange: tuple, grid: tuple,
                want: str) -> Optional[dict]:
    """Best ratio on one rectangle: dense grid, then coordinate-wise golden polish."""
    sgn = 1.0 if want == "sup" else -1.0
    A = np.linspace(arange[0], arange[1], max(int(grid[0]), 1)) if arange[1] > arange[0] \
        else np.array([arange[0]])
    B = np.linspace(brange[0], brange[1], max(int(grid[1]), 1)) if brange[1] > brange[0] \
        else np.array([brange[0]])
    pts = np.concatenate([A, B])
    S, P = profile.cumulative(pts)
    SA, SB = (S[:A.size], S[A.size:]) if want == "sup" else (P[:A.size], P[A.size:])
    width = B[None, :] - A[:, None]
    ok = width > MIN_WIDTH
    if not ok.any():
        return None
    ratio = np.where(ok, (SB[None, :] - SA[:, None]) / np.where(ok, width, 1.0), np.nan)
    flat = np.nanargmax(sgn * ratio)
    i, j = np.unravel_index(flat, ratio.shape)
    best_a, best_b, best = float(A[i]), float(B[j]), float(ratio[i, j])
    f_int = profile.f_sup if want == "sup" else profile.f_inf

    def obj(al, be):
        if be - al <= MIN_WIDTH:
            return -np.inf
        return sgn * profile._integral(f_int, al, be) / (be - al)

    da = (A[1] - A[0]) if A.size > 1 else 0.0
    db = (B[1] - B[0]) if B.size > 1 else 0.0
    for _ in range(POLISH_PASSES):
        if db > 0:
            lo = max(brange[0], best_b - db, best_a + 2 * MIN_WIDTH)
            hi = min(brange[1], best_b + db)
            if hi > lo:
                x, v = _golden(lambda t: obj(best_a, t), lo, hi)
                if v > sgn * best:
                    best_b, best = x, sgn * v
        if da > 0:
            lo = max(arange[0], best_a - da)
            hi = min(arange[1], best_a + da, best_b - 2 * MIN_WIDTH)
            if hi > lo:
                x, v = _golden(lambda t: obj(t, best_b), lo, hi)
                if v > sgn * best:
                    best_a, best = x, sgn * v
    return {"value": float(best), "alpha": float(best_a), "beta": float(best_b)}


def conditional_bounds_search(problem: ConditionalProblem, grid: tuple = DEFAULT_GRID,
                              tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Grid search over the (alpha, beta) box with beta > alpha, then polish."""
    t0 = time.perf_counter()
    prof = LevelProfile(problem, tol)
    up = _box_search(prof, problem.alpha_range, problem.beta_range, grid, "sup")
    lo = _box_search(prof, problem.alpha_range, problem.beta_range, grid, "inf")
    if up is None or lo is None:
        raise EventError("no (alpha, beta) pair with beta > alpha in the event box")
    meta = {"upper_at": (up["alpha"], up["beta"]), "lower_at": (lo["alpha"], lo["beta"]),
            "grid": tuple(grid), "event": (problem.event.b0, problem.event.b1)}
    return BoundsResult(lo["value"], up["value"], "conditional-search", size=int(np.prod(grid)),
                        seconds=time.perf_counter() - t0, metadata=meta,
                        warnings=list(prof.warnings))


def _signed_stieltjes(pbox, h, which, xa, xb, form, tol):
    if xb >= xa:
        v, _, w = stieltjes(pbox, h, which, xa, xb, form, tol)
        return v, w
    v, _, w = stieltjes(pbox, h, which, xb, xa, form, tol)
    return -v, w


def _monotone_parts(problem: ConditionalProblem, form: str, tol: Tolerance) -> dict:
    """Closed forms for a nondecreasing h: numerators, denominators, optimal levels."""
    p, h = problem.pbox, problem.h
    b0, b1 = problem.event.b0, problem.event.b1
    Fl0, Fu0 = problem.alpha_range
    Fl1, Fu1 = problem.beta_range
    hv = vectorize(h)
    hb0, hb1 = float(hv(np.array([b0]))[0]), float(hv(np.array([b1]))[0])
    xa = float(quantile(p, "lower", Fu0))
    up_int, w1 = _signed_stieltjes(p, h, "lower", xa, b1, form, tol)
    xb = float(quantile(p, "upper", Fl1))
    lo_int, w2 = _signed_stieltjes(p, h, "upper", b0, xb, form, tol)
    return {
        "up": (up_int + hb1 * (Fu1 - Fl1), Fu1 - Fu0, (Fu0, Fu1)),
        "lo": (hb0 * (Fu0 - Fl0) + lo_int, Fl1 - Fl0, (Fl0, Fl1)),
        "warnings": w1 + w2,
    }


def conditional_bounds_monotone(problem: ConditionalProblem, form: str = "x",
                                tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Closed forms; the optimal levels sit at box corners fixed by the direction."""
    kind = problem.shape.kind
    if kind not in ("nondecreasing", "nonincreasing"):
        raise ConfigurationError("the monotone conditional formulas need a monotone shape")
    t0 = time.perf_counter()
    if kind == "nonincreasing":
        res = conditional_bounds_monotone(problem.negated(), form, tol).negated()
        res.metadata["upper_at"], res.metadata["lower_at"] = (res.metadata["lower_at"],
                                                              res.metadata["upper_at"])
        res.seconds = time.perf_counter() - t0
        return res
    parts = _monotone_parts(problem, form, tol)
    (un, ud, uat), (ln, ld, lat) = parts["up"], parts["lo"]
    if ud <= 0 or ld <= 0:
        raise EventError("event box leaves no positive conditioning mass")
    meta = {"upper_at": uat, "lower_at": lat, "form": form,
            "boundary_cdf": {"lower_b0": problem.alpha_range[0], "upper_b0": problem.alpha_range[1],
                             "lower_b1": problem.beta_range[0], "upper_b1": problem.beta_range[1]}}
    return BoundsResult(ln / ld, un / ud, "conditional-monotone",
                        seconds=time.perf_counter() - t0, metadata=meta,
                        warnings=parts["warnings"])


def _restricted(problem: ConditionalProblem) -> Optional[ConditionalProblem]:
    """The same problem with a monotone shape when the peak lies outside B."""
    a = problem.shape.location
    b0, b1 = problem.event.b0, problem.event.b1
    if a <= b0:
        sh = ShapeDescriptor.nonincreasing()
    elif a >= b1:
        sh = ShapeDescriptor.nondecreasing()
    else:
        return None
    return ConditionalProblem(problem.pbox, problem.h, sh, problem.event)


def indicator_branches(problem: ConditionalProblem) -> list:
    """Rectangles of the box on which alpha < F_(a) and beta > F^(a) are fixed."""
    a = problem.shape.location
    Fla = float(eval_cdf(problem.pbox, "lower", a))
    Fua = float(eval_cdf(problem.pbox, "upper", a))
    out = []
    (a0, a1), (c0, c1) = problem.alpha_range, problem.beta_range
    for ia, ar in ((1, (a0, min(a1, Fla))), (0, (max(a0, Fla), a1))):
        if ar[1] < ar[0] or (ia == 1 and ar[0] >= Fla) or (ia == 0 and ar[1] < Fla):
            continue
        for ib, br in ((0, (c0, min(c1, Fua))), (1, (max(c0, Fua), c1))):
            if br[1] < br[0] or (ib == 0 and br[0] > Fua) or (ib == 1 and br[1] <= Fua):
                continue
            out.append({"i_alpha": ia, "i_beta": ib, "alpha": ar, "beta": br})
    return out


def branch_function(problem: ConditionalProblem, i_alpha: int, i_beta: int,
                    form: str = "x", tol: Tolerance = DEFAULT_TOL,
                    cdf_at_peak: Optional[tuple] = None) -> Callable:
    """Psi written with fixed indicator values:

    i_alpha = 1: int_{Q_(alpha)}^{a} h dF_ - h(a) F_(a), else -h(a) alpha;
    i_beta = 1:  int_{a}^{Q^(beta)} h dF^ + h(a) F^(a), else h(a) beta;
    Psi is the sum. It equals the true Psi on its own branch rectangle only;
    outside it the integrals run backwards and the value is not a bound.
    ``cdf_at_peak`` overrides (F_(a), F^(a)), e.g. with rounded values.
    """
    p, h = problem.pbox, problem.h
    a = problem.shape.location
    if cdf_at_peak is None:
        Fla = float(eval_cdf(p, "lower", a))
        Fua = float(eval_cdf(p, "upper", a))
    else:
        Fla, Fua = map(float, cdf_at_peak)
    ha = float(vectorize(h)(np.array([a]))[0])

    def psi(alpha: float, beta: float) -> float:
        if i_alpha:
            ql = float(quantile(p, "lower", alpha))
            v = _signed_stieltjes(p, h, "lower", ql, a, form, tol)[0] - ha * Fla
        else:
            v = -ha * alpha
        if i_beta:
            qu = float(quantile(p, "upper", beta))
            v += _signed_stieltjes(p, h, "upper", a, qu, form, tol)[0] + ha * Fua
        else:
            v += ha * beta
        return v

    return psi


def _phi_linear(problem: ConditionalProblem, eps: float, form: str, tol: Tolerance):
    """Phi = h(b0)(F^(b0) - alpha) + int_{b0}^{Q^(eps)} h dF^
    + h(b1)(beta - F_(b1)) + int_{Q_(eps)}^{b1} h dF_, linear in (alpha, beta)."""
    p, h = problem.pbox, problem.h
    b0, b1 = problem.event.b0, problem.event.b1
    hv = vectorize(h)
    hb0, hb1 = float(hv(np.array([b0]))[0]), float(hv(np.array([b1]))[0])
    i1, w1 = _signed_stieltjes(p, h, "upper", b0, float(quantile(p, "upper", eps)), form, tol)
    i2, w2 = _signed_stieltjes(p, h, "lower", float(quantile(p, "lower", eps)), b1, form, tol)
    const = hb0 * problem.alpha_range[1] + i1 - hb1 * problem.beta_range[0] + i2
    return (lambda al, be: const - hb0 * al + hb1 * be), w1 + w2


def conditional_bounds_unimodal(problem: ConditionalProblem, grid: int = BRANCH_GRID,
                                form: str = "x", tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Upper: best ratio over each indicator branch rectangle. Lower: Phi is
    linear in (alpha, beta) once eps is known, so its ratio peaks at a corner."""
    kind = problem.shape.kind
    if kind == "unimodal-min":
        res = conditional_bounds_unimodal(problem.negated(), grid, form, tol).negated()
        res.metadata["upper_at"], res.metadata["lower_at"] = (res.metadata.get("lower_at"),
                                                              res.metadata.get("upper_at"))
        return res
    if kind != "unimodal-max":
        raise ConfigurationError("the unimodal conditional formulas need a unimodal shape")
    t0 = time.perf_counter()
    restricted = _restricted(problem)
    if restricted is not None:
        res = conditional_bounds_monotone(restricted, form, tol)
        res.metadata["reduced_to"] = restricted.shape.kind
        res.method = "conditional-unimodal"
        res.seconds = time.perf_counter() - t0
        return res
    prof = LevelProfile(problem, tol)
    branches = []
    for br in indicator_branches(problem):
        found = _box_search(prof, br["alpha"], br["beta"], (grid, grid), "sup")
        if found is not None:
            branches.append({"i_alpha": br["i_alpha"], "i_beta": br["i_beta"],
                             "alpha_range": br["alpha"], "beta_range": br["beta"], **found})
    if not branches:
        raise EventError("no (alpha, beta) pair with beta > alpha in the event box")
    top = max(branches, key=lambda b: b["value"])
    warnings = list(prof.warnings)
    a = problem.shape.location
    b0, b1 = problem.event.b0, problem.event.b1
    lower = None
    meta = {"branches": branches, "upper_at": (top["alpha"], top["beta"]), "form": form}
    try:
        bracket = (float(eval_cdf(problem.pbox, "lower", a)),
                   float(eval_cdf(problem.pbox, "upper", a)))
        lev = solve_alpha(problem.pbox, problem.h, a, bracket=bracket, clamp=(b0, b1), tol=tol)
        eps = lev.value
        meta["epsilon"] = eps
        meta["epsilon_quantiles"] = (float(quantile(problem.pbox, "upper", eps)),
                                     float(quantile(problem.pbox, "lower", eps)))
        (a0, a1), (c0, c1) = problem.alpha_range, problem.beta_range
        if a1 <= eps <= c0:
            phi, w = _phi_linear(problem, eps, form, tol)
            warnings.extend(w)
            corners = [(al, be) for al in (a0, a1) for be in (c0, c1) if be - al > MIN_WIDTH]
            vals = [phi(al, be) / (be - al) for al, be in corners]
            k = int(np.argmin(vals))
            lower = vals[k]
            meta["lower_at"] = corners[k]
            meta["phi_corners"] = dict(zip(corners, vals))
    except BracketError as exc:
        warnings.append(f"epsilon not found ({exc}); lower bound by search")
    if lower is None:
        found = _box_search(prof, problem.alpha_range, problem.beta_range, (grid, grid), "inf")
        lower = found["value"]
        meta["lower_at"] = (found["alpha"], found["beta"])
    return BoundsResult(lower, top["value"], "conditional-unimodal",
                        seconds=time.perf_counter() - t0, metadata=meta, warnings=warnings)


def conditional_bounds(problem: ConditionalProblem, method: str = "auto",
                       grid: tuple = DEFAULT_GRID, form: str = "x",
                       tol: Tolerance = DEFAULT_TOL) -> BoundsResult:
    """Closed forms when the shape allows them, otherwise the search."""
    kind = problem.shape.kind
    if method == "search":
        return conditional_bounds_search(problem, grid, tol)
    if method not in ("auto", "closed"):
        raise ConfigurationError(f"unknown conditional method {method!r}")
    if kind in ("nondecreasing", "nonincreasing"):
        return conditional_bounds_monotone(problem, form, tol)
    if kind in ("unimodal-max", "unimodal-min"):
        return conditional_bounds_unimodal(problem, form=form, tol=tol)
    if method == "closed":
        raise ConfigurationError(f"no closed form for shape {kind!r}")
    return conditional_bounds_search(problem, grid, tol)
