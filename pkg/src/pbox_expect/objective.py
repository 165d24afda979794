"""The function h and its declared monotonicity structure."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ExpressionError, MalformedSpecError, ShapeDetectionError
from .expr import compile_expression

SLOPE_ZERO = 1e-12


@dataclass(frozen=True)
class ObjectiveFn:
    """A univariate function usable on floats and numpy arrays."""

    evaluator: Callable = field(repr=False, compare=False)
    source: str

    def __call__(self, x):
        return self.evaluator(x)

    def negate(self) -> "ObjectiveFn":
        f = self.evaluator
        return ObjectiveFn(lambda x: -f(x), f"-({self.source})")

    def shifted(self, mu: float) -> "ObjectiveFn":
        f = self.evaluator
        return ObjectiveFn(lambda x: f(x) + mu, f"({self.source}) + {mu!r}")

    def scaled(self, c: float) -> "ObjectiveFn":
        f = self.evaluator
        return ObjectiveFn(lambda x: c * f(x), f"{c!r}*({self.source})")

    def check_finite(self, domain: tuple[float, float], grid_size: int = 1025) -> Optional[float]:
        """First grid point where h is not finite, or None."""
        xs = np.linspace(domain[0], domain[1], grid_size)
        ys = np.asarray(self(xs), dtype=float)
        bad = ~np.isfinite(ys)
        return float(xs[np.argmax(bad)]) if bad.any() else None


def parse_expression(source: str) -> ObjectiveFn:
    return ObjectiveFn(compile_expression(source), source)


def _fmt(v: float) -> str:
    return repr(float(v))


def catalog(name: str, **params) -> ObjectiveFn:
    """Built-in objectives, each equivalent to a parseable formula.

    affine(a, b)            a + b*x
    quadratic-peak(c, a, k) c - k*(x-a)^2
    x-cos-x(s)              s*x*cos(x)
    """
    known = CATALOG_PARAMS.get(name)
    if known is None:
        raise MalformedSpecError(f"unknown catalog objective {name!r}")
    extra = sorted(set(params) - set(known))
    if extra:
        raise MalformedSpecError(f"{name} takes parameters {', '.join(known)}; got {', '.join(extra)}")
    if name == "affine":
        a, b = float(params.get("a", 0.0)), float(params.get("b", 1.0))
        src = f"{_fmt(a)} + {_fmt(b)}*x"
    elif name == "quadratic-peak":
        c, a, k = float(params.get("c", 0.0)), float(params.get("a", 0.0)), float(params.get("k", 1.0))
        src = f"{_fmt(c)} - {_fmt(k)}*(x - {_fmt(a)})^2"
    elif name == "x-cos-x":
        s = float(params.get("s", 1.0))
        src = f"{_fmt(s)}*x*cos(x)"
    else:
        raise MalformedSpecError(f"unknown catalog objective {name!r}")
    return parse_expression(src)


CATALOG_PARAMS = {"affine": ("a", "b"), "quadratic-peak": ("c", "a", "k"), "x-cos-x": ("s",)}
CATALOG = tuple(CATALOG_PARAMS)

SHAPE_KINDS = ("nondecreasing", "nonincreasing", "unimodal-max", "unimodal-min",
               "alternating", "unknown")


@dataclass(frozen=True)
class ShapeDescriptor:
    """Declared monotonicity pattern of h.

    ``extrema`` is only used by the alternating kind: a tuple of
    ``(location, "min" | "max")`` pairs, strictly increasing in location
    and alternating in kind.
    """

    kind: str
    location: Optional[float] = None
    extrema: tuple = ()

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise MalformedSpecError(f"unknown shape kind {self.kind!r}")
        if self.kind in ("unimodal-max", "unimodal-min"):
            if self.location is None or not math.isfinite(self.location):
                raise MalformedSpecError(f"{self.kind} needs a finite location")
        if self.kind == "alternating":
            ex = tuple((float(x), str(k)) for x, k in self.extrema)
            object.__setattr__(self, "extrema", ex)
            for i, (x, k) in enumerate(ex):
                if k not in ("min", "max"):
                    raise MalformedSpecError(f"extremum kind must be min or max, got {k!r}")
                if i and not x > ex[i - 1][0]:
                    raise MalformedSpecError("extrema locations must strictly increase")
                if i and k == ex[i - 1][1]:
                    raise MalformedSpecError(f"extrema must alternate (two {k} in a row at {x})")

    @classmethod
    def nondecreasing(cls):
        return cls("nondecreasing")

    @classmethod
    def nonincreasing(cls):
        return cls("nonincreasing")

    @classmethod
    def unimodal_max(cls, a: float):
        return cls("unimodal-max", location=float(a))

    @classmethod
    def unimodal_min(cls, a: float):
        return cls("unimodal-min", location=float(a))

    @classmethod
    def alternating(cls, extrema: Sequence):
        return cls("alternating", extrema=tuple(extrema))

    @classmethod
    def unknown(cls):
        return cls("unknown")

    def reflected(self) -> "ShapeDescriptor":
        """Shape of -h."""
        swap = {"min": "max", "max": "min"}
        if self.kind == "nondecreasing":
            return ShapeDescriptor.nonincreasing()
        if self.kind == "nonincreasing":
            return ShapeDescriptor.nondecreasing()
        if self.kind == "unimodal-max":
            return ShapeDescriptor.unimodal_min(self.location)
        if self.kind == "unimodal-min":
            return ShapeDescriptor.unimodal_max(self.location)
        if self.kind == "alternating":
            return ShapeDescriptor.alternating([(x, swap[k]) for x, k in self.extrema])
        return self

    def extrema_list(self) -> tuple:
        """Interior extrema as an alternating list (empty for monotone)."""
        if self.kind == "unimodal-max":
            return ((self.location, "max"),)
        if self.kind == "unimodal-min":
            return ((self.location, "min"),)
        if self.kind == "alternating":
            return self.extrema
        return ()

    def minima(self) -> np.ndarray:
        return np.array([x for x, k in self.extrema_list() if k == "min"], dtype=float)

    def maxima(self) -> np.ndarray:
        return np.array([x for x, k in self.extrema_list() if k == "max"], dtype=float)

    def restricted(self, domain: tuple[float, float]) -> "ShapeDescriptor":
        """Alternating descriptor with only the extrema strictly inside ``domain``."""
        if self.kind == "unknown":
            return self
        lo, hi = domain
        ex = [(x, k) for x, k in self.extrema_list() if lo < x < hi]
        if self.kind in ("nondecreasing", "nonincreasing"):
            return self
        return ShapeDescriptor.alternating(ex)

    def direction_at_start(self, h: Optional[Callable] = None,
                           domain: Optional[tuple] = None) -> int:
        """+1 if h rises from the left end of the domain, -1 if it falls."""
        if self.kind == "nondecreasing":
            return 1
        if self.kind == "nonincreasing":
            return -1
        ex = self.extrema_list()
        if ex:
            return 1 if ex[0][1] == "max" else -1
        if h is not None and domain is not None:
            return 1 if h(domain[1]) >= h(domain[0]) else -1
        raise ShapeDetectionError("direction of an extremum-free alternating shape is undetermined")

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.location is not None:
            d["location"] = self.location
        if self.kind == "alternating":
            d["extrema"] = [[x, k] for x, k in self.extrema]
        return d


@dataclass
class ShapeReport:
    consistent: bool
    violation_x: Optional[float] = None
    message: str = ""


def _segments(shape: ShapeDescriptor, h: Callable, domain: tuple[float, float]):
    """(lo, hi, direction) pieces implied by the declared shape."""
    lo, hi = domain
    if shape.kind == "nondecreasing":
        return [(lo, hi, 1)]
    if shape.kind == "nonincreasing":
        return [(lo, hi, -1)]
    ex = [(x, k) for x, k in shape.extrema_list() if lo <= x <= hi]
    if not ex:
        if shape.kind == "alternating":
            return [(lo, hi, 0)]
        # unimodal with the extremum outside the domain
        x = shape.location
        rising = (shape.kind == "unimodal-max") == (x > hi)
        return [(lo, hi, 1 if rising else -1)]
    segs = []
    left = lo
    for x, k in ex:
        segs.append((left, x, 1 if k == "max" else -1))
        left = x
    segs.append((left, hi, -1 if ex[-1][1] == "max" else 1))
    return [(a, b, d) for a, b, d in segs if b > a]


def verify_shape(h: Callable, shape: ShapeDescriptor, domain: tuple[float, float],
                 grid_size: int = 2049) -> ShapeReport:
    """Sample h and check the declared monotone pieces; reports the first violation."""
    if grid_size < 3:
        raise ValueError("grid_size must be at least 3")
    if shape.kind == "unknown":
        return ShapeReport(True, message="nothing declared")
    xs = np.linspace(domain[0], domain[1], grid_size)
    for a, b, direction in _segments(shape, h, domain):
        inner = xs[(xs > a) & (xs < b)]
        pts = np.concatenate([[a], inner, [b]])
        ys = np.asarray(h(pts), dtype=float)
        slack = 1e-9 * (1.0 + np.max(np.abs(ys)))
        d = np.diff(ys)
        if direction == 0:
            if np.all(d >= -slack) or np.all(d <= slack):
                continue
            bad = np.nonzero(d * np.sign(d[np.argmax(np.abs(d))]) < -slack)[0]
        elif direction > 0:
            bad = np.nonzero(d < -slack)[0]
        else:
            bad = np.nonzero(d > slack)[0]
        if bad.size:
            x = float(pts[bad[0] + 1])
            want = {1: "nondecreasing", -1: "nonincreasing", 0: "monotone"}[direction]
            return ShapeReport(False, x, f"h is not {want} on [{a:.6g}, {b:.6g}] near x={x:.6g}")
    return ShapeReport(True, message="consistent")


def _slope(h: Callable, x: np.ndarray, step: float, lo: float, hi: float) -> np.ndarray:
    xm = np.maximum(x - step, lo)
    xp = np.minimum(x + step, hi)
    return (np.asarray(h(xp), dtype=float) - np.asarray(h(xm), dtype=float)) / (xp - xm)


def locate_extrema(h: Callable, domain: tuple[float, float], scan_size: int = 1024,
                   xtol: float = 1e-9) -> tuple[ShapeDescriptor, list[float]]:
    """Interior extrema of h from sign changes of a finite-difference slope.

    Returns the alternating descriptor and, per extremum, the residual
    slope at the refined location.
    """
    if scan_size < 16:
        raise ValueError("scan_size must be at least 16")
    lo, hi = float(domain[0]), float(domain[1])
    step = (hi - lo) / (64.0 * scan_size)
    xs = np.linspace(lo, hi, scan_size + 1)
    s = _slope(h, xs, step, lo, hi)
    if not np.all(np.isfinite(s)):
        raise ShapeDetectionError("h is not finite on the scan grid")
    sign = np.where(np.abs(s) < SLOPE_ZERO, 0, np.sign(s)).astype(int)
    found: list[tuple[float, str]] = []
    residuals: list[float] = []
    last = None  # index of the last nonzero slope sample
    for i in range(scan_size + 1):
        if sign[i] == 0:
            continue
        if last is not None and sign[i] != sign[last]:
            kind = "max" if sign[last] > 0 else "min"
            if i - last > 1:
                # plateau of zero slope between opposite slopes
                x = 0.5 * (xs[last + 1] + xs[i - 1])
            else:
                a, b = xs[last], xs[i]
                sa = s[last]
                while b - a > xtol:
                    m = 0.5 * (a + b)
                    sm = float(_slope(h, np.array([m]), step, lo, hi)[0])
                    if sm == 0.0:
                        a = b = m
                        break
                    if (sm > 0) == (sa > 0):
                        a = m
                    else:
                        b = m
                x = 0.5 * (a + b)
            found.append((float(x), kind))
            residuals.append(abs(float(_slope(h, np.array([x]), step, lo, hi)[0])))
        last = i
    for i in range(1, len(found)):
        if found[i][1] == found[i - 1][1] or not found[i][0] > found[i - 1][0]:
            raise ShapeDetectionError(f"extrema do not alternate near x={found[i][0]:.6g}")
    return ShapeDescriptor.alternating(found), residuals


def resolve_shape(h: Callable, shape: Optional[ShapeDescriptor], domain,
                  scan_size: int = 1024) -> ShapeDescriptor:
    """Declared shape, or auto-detection when ``shape`` is None."""
    if shape is not None:
        return shape
    detected, _ = locate_extrema(h, domain, scan_size)
    ex = detected.extrema
    if not ex:
        lo, hi = domain
        return (ShapeDescriptor.nondecreasing() if h(hi) >= h(lo)
                else ShapeDescriptor.nonincreasing())
    if len(ex) == 1:
        x, k = ex[0]
        return ShapeDescriptor.unimodal_max(x) if k == "max" else ShapeDescriptor.unimodal_min(x)
    return detected


__all__ = [
    "ObjectiveFn", "ShapeDescriptor", "ShapeReport", "parse_expression", "catalog",
    "verify_shape", "locate_extrema", "resolve_shape", "ExpressionError",
]
