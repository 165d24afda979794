"""Problem files: JSON documents describing a p-box, an objective and how
to bound it. See docs/file-format.md."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import jsonschema

from .conditional import ConditionalProblem, ConditioningEvent
from .errors import MalformedSpecError, PBoxError
from .lp import DUAL_RULES, LP_METHODS, SAMPLERS
from .numerics import Tolerance
from .objective import CATALOG, ObjectiveFn, ShapeDescriptor, catalog, parse_expression, \
    resolve_shape, verify_shape
from .pbox import CdfSpec, ExponentialCdf, ExpressionCdf, PBox, TabulatedCdf, validate

SCHEMA_VERSION = "pbox-expect/1"
METHODS = ("analytic", "lp", "randomset", "all")

_number = {"type": "number"}
_pair = {"type": "array", "items": _number, "minItems": 2, "maxItems": 2}

_cdf = {
    "type": "object",
    "required": ["kind"],
    "properties": {"kind": {"enum": ["parametric-exponential", "tabulated", "expression"]}},
    "allOf": [
        {"if": {"properties": {"kind": {"const": "parametric-exponential"}}},
         "then": {"required": ["rate"], "additionalProperties": False,
                  "properties": {"kind": True, "rate": {"type": "number", "exclusiveMinimum": 0}}}},
        {"if": {"properties": {"kind": {"const": "tabulated"}}},
         "then": {"required": ["points"], "additionalProperties": False,
                  "properties": {"kind": True,
                                 "points": {"type": "array", "minItems": 2, "items": _pair}}}},
        {"if": {"properties": {"kind": {"const": "expression"}}},
         "then": {"required": ["source"], "additionalProperties": False,
                  "properties": {"kind": True, "source": {"type": "string"}, "support": _pair}}},
    ],
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["schema", "pbox", "objective"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": SCHEMA_VERSION},
        "name": {"type": "string"},
        "pbox": {
            "type": "object", "required": ["lower", "upper"], "additionalProperties": False,
            "properties": {"lower": _cdf, "upper": _cdf, "domain": _pair},
        },
        "objective": {
            "type": "object", "additionalProperties": False,
            "oneOf": [{"required": ["expression"]}, {"required": ["catalog"]}],
            "properties": {
                "expression": {"type": "string"},
                "catalog": {"enum": list(CATALOG)},
                "params": {"type": "object", "additionalProperties": _number},
            },
        },
        "shape": {
            "oneOf": [
                {"const": "auto"},
                {"type": "object", "required": ["kind"], "additionalProperties": False,
                 "properties": {
                     "kind": {"enum": ["nondecreasing", "nonincreasing", "unimodal-max",
                                       "unimodal-min", "alternating", "unknown"]},
                     "location": _number,
                     "extrema": {"type": "array", "items": {
                         "type": "array", "minItems": 2, "maxItems": 2,
                         "prefixItems": [_number, {"enum": ["min", "max"]}]}}}},
            ],
        },
        "event": _pair,
        "method": {"enum": list(METHODS)},
        "tolerances": {
            "type": "object", "additionalProperties": False,
            "properties": {k: {"type": "number", "exclusiveMinimum": 0}
                           for k in ("abs_x", "abs_f", "quad_rel")},
        },
        "discretization": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "lp_points": {"type": "integer", "minimum": 2},
                "levels": {"type": "integer", "minimum": 2},
                "sampler": {"enum": list(SAMPLERS)},
                "dual_rule": {"enum": list(DUAL_RULES)},
                "lp_method": {"enum": list(LP_METHODS)},
                "form": {"enum": ["gamma", "x"]},
                "jump_epsilon": {"type": "number", "exclusiveMinimum": 0},
                "conditional_grid": {"type": "array", "items": {"type": "integer", "minimum": 2},
                                     "minItems": 2, "maxItems": 2},
            },
        },
        "audit": {
            "type": "object", "additionalProperties": False,
            "properties": {"members": {"type": "integer", "minimum": 0},
                           "knots": {"type": "integer", "minimum": 2}},
        },
        "output": {
            "type": "object", "additionalProperties": False,
            "properties": {"trace": {"type": "string"}, "report": {"type": "string"}},
        },
    },
}

DEFAULT_DISCRETIZATION = {
    "lp_points": 2048, "levels": 2048, "sampler": "quantile", "dual_rule": "cell",
    "lp_method": "auto", "form": "gamma", "jump_epsilon": 1e-3, "conditional_grid": [128, 128],
}


class ProblemError(MalformedSpecError):
    """Schema or consistency violation; ``location`` is a JSON path."""

    def __init__(self, location: str, message: str):
        self.location = location
        super().__init__(f"{location}: {message}")


@dataclass
class Problem:
    pbox: PBox
    h: ObjectiveFn
    shape: ShapeDescriptor
    shape_declared: Any
    event: Optional[ConditioningEvent]
    method: str
    tol: Tolerance
    discretization: dict
    audit: dict
    output: dict
    name: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def conditional(self) -> ConditionalProblem:
        if self.event is None:
            raise MalformedSpecError("problem has no event")
        return ConditionalProblem(self.pbox, self.h, self.shape, self.event)


def _path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _cdf_from(d: dict, where: str) -> CdfSpec:
    try:
        if d["kind"] == "parametric-exponential":
            return ExponentialCdf(float(d["rate"]))
        if d["kind"] == "tabulated":
            return TabulatedCdf(tuple(tuple(p) for p in d["points"]))
        sup = tuple(d["support"]) if "support" in d else None
        return ExpressionCdf(d["source"], sup)
    except MalformedSpecError as exc:
        raise ProblemError(where, str(exc)) from exc


def _shape_from(d) -> Optional[ShapeDescriptor]:
    if d == "auto":
        return None
    return ShapeDescriptor(d["kind"], d.get("location"), tuple(tuple(e) for e in d.get("extrema", ())))


def parse_problem(data: dict) -> Problem:
    """Validate a decoded problem document and build its objects."""
    validator = jsonschema.Draft202012Validator(SCHEMA)
    e = jsonschema.exceptions.best_match(validator.iter_errors(data))
    if e is not None:
        raise ProblemError(_path(e.absolute_path), e.message)
    p = data["pbox"]
    lower = _cdf_from(p["lower"], "$.pbox.lower")
    upper = _cdf_from(p["upper"], "$.pbox.upper")
    try:
        pbox = PBox(lower, upper, tuple(p["domain"]) if "domain" in p else None)
    except MalformedSpecError as exc:
        raise ProblemError("$.pbox", str(exc)) from exc
    report = validate(pbox)
    if not report.valid:
        raise ProblemError("$.pbox", str(report))
    obj = data["objective"]
    try:
        if "expression" in obj:
            h = parse_expression(obj["expression"])
        else:
            h = catalog(obj["catalog"], **obj.get("params", {}))
    except MalformedSpecError as exc:
        raise ProblemError("$.objective", str(exc)) from exc
    bad = h.check_finite(pbox.domain)
    if bad is not None:
        raise ProblemError("$.objective", f"h is not finite at x={bad:.6g}")
    declared = data.get("shape", "auto")
    try:
        shape = resolve_shape(h, _shape_from(declared), pbox.domain)
    except (MalformedSpecError, PBoxError) as exc:
        raise ProblemError("$.shape", str(exc)) from exc
    if declared != "auto":
        rep = verify_shape(h, shape, pbox.domain)
        if not rep.consistent:
            raise ProblemError("$.shape", rep.message)
    event = None
    if "event" in data:
        try:
            event = ConditioningEvent(*map(float, data["event"]))
            ConditionalProblem(pbox, h, shape, event)
        except PBoxError as exc:
            raise ProblemError("$.event", str(exc)) from exc
    method = data.get("method", "all")
    _check_method(method, shape, event)
    disc = {**DEFAULT_DISCRETIZATION, **data.get("discretization", {})}
    return Problem(pbox, h, shape, declared, event, method, Tolerance(**data.get("tolerances", {})),
                   disc, {"members": 0, "knots": 64, **data.get("audit", {})},
                   dict(data.get("output", {})), data.get("name", ""), data)


def _check_method(method: str, shape: ShapeDescriptor, event) -> None:
    if event is not None:
        if method == "lp":
            raise ProblemError("$.method", "conditional bounds are not available from the LP engine")
        if method == "analytic" and shape.kind not in ("nondecreasing", "nonincreasing",
                                                       "unimodal-max", "unimodal-min"):
            raise ProblemError("$.method", "analytic conditional bounds need a monotone or "
                                           f"unimodal shape, got {shape.kind!r}")
    elif method == "analytic" and shape.kind == "unknown":
        raise ProblemError("$.method", "analytic bounds need a declared or detectable shape")


def load_problem(path) -> Problem:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ProblemError("$", f"file not found: {path}") from exc
    except OSError as exc:
        raise ProblemError("$", f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemError(f"$ (line {exc.lineno}, column {exc.colno})", exc.msg) from exc
    return parse_problem(data)
