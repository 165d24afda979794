"""Dispatch a parsed problem to the engines and tabulate the results."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .analytic import analytic_bounds
from .conditional import conditional_bounds, conditional_bounds_search
from .errors import ConfigurationError
from .lp import lp_bounds, refine_lp
from .oracle import audit_members
from .problem import Problem
from .randomset import bounds_at, refine_bounds
from .results import BoundsResult

RESULT_COLUMNS = ("method", "lower", "upper", "encl_lo_lo", "encl_lo_hi", "encl_up_lo",
                  "encl_up_hi", "size", "seconds", "warnings")
TRACE_COLUMNS = ("x", "F(x)", "segment-kind")
AUDIT_TOL = 1e-3


@dataclass
class RunOutput:
    results: list
    extremizers: Optional[tuple] = None
    audits: dict = field(default_factory=dict)


def _methods(problem: Problem, method: Optional[str]) -> list:
    m = method or problem.method
    if m == "all":
        if problem.event is not None:
            closed = problem.shape.kind in ("nondecreasing", "nonincreasing",
                                            "unimodal-max", "unimodal-min")
            return (["analytic"] if closed else []) + ["randomset"]
        return (["analytic"] if problem.shape.kind != "unknown" else []) + ["lp", "randomset"]
    return [m]


def run_problem(problem: Problem, method: Optional[str] = None, epsilon: Optional[float] = None,
                seed: int = 0) -> RunOutput:
    """Bounds from each requested method, in a fixed order."""
    d = problem.discretization
    p, h, shape, tol = problem.pbox, problem.h, problem.shape, problem.tol
    out = RunOutput([])
    for m in _methods(problem, method):
        if problem.event is not None:
            cp = problem.conditional()
            if m == "analytic":
                res = conditional_bounds(cp, "closed", tuple(d["conditional_grid"]), "x", tol)
            elif m == "randomset":
                res = conditional_bounds_search(cp, tuple(d["conditional_grid"]), tol)
            else:
                raise ConfigurationError("conditional bounds are not available from the LP engine")
        elif m == "analytic":
            res, ext = analytic_bounds(p, h, shape, d["form"], d["jump_epsilon"], tol)
            out.extremizers = ext
        elif m == "lp":
            sh = None if shape.kind == "unknown" else shape
            if epsilon:
                res = refine_lp(p, h, epsilon, sampler=d["sampler"], shape=sh,
                                rule=d["dual_rule"], method=d["lp_method"])
            else:
                res = lp_bounds(p, h, d["lp_points"], d["sampler"], sh, d["dual_rule"],
                                d["lp_method"])
        elif m == "randomset":
            if epsilon:
                res = refine_bounds(p, h, shape, epsilon, tol=tol)
            else:
                res = bounds_at(p, h, shape, d["levels"], tol)
        else:
            raise ConfigurationError(f"unknown method {m!r}")
        out.results.append(res)
    members = problem.audit.get("members", 0)
    if members:
        ev = None if problem.event is None else (problem.event.b0, problem.event.b1)
        for res in out.results:
            a = audit_members(p, h, res.lower, res.upper, members, seed, problem.audit["knots"],
                              event=ev)
            out.audits[res.method] = a
            if max(a["below"], a["above"]) > AUDIT_TOL:
                res.warnings.append(f"sampled member outside bounds by "
                                    f"{max(a['below'], a['above']):.3g}")
    return out


def fmt(v) -> str:
    """Six significant digits."""
    return "" if v is None else f"{float(v):.6g}"


def full(v) -> str:
    return "" if v is None else repr(float(v))


def result_row(res: BoundsResult, timings: bool = True, digits=full) -> list:
    enc = res.enclosure or ((None, None), (None, None))
    return [res.method, digits(res.lower), digits(res.upper), digits(enc[0][0]), digits(enc[0][1]),
            digits(enc[1][0]), digits(enc[1][1]), "" if res.size is None else str(res.size),
            digits(res.seconds) if timings else "", "; ".join(res.warnings)]


def results_csv(results: Sequence[BoundsResult], timings: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RESULT_COLUMNS)
    for r in results:
        w.writerow(result_row(r, timings))
    return buf.getvalue()


def trace_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for x, F, kind in rows:
        w.writerow([repr(float(x)), repr(float(F)), kind])
    return buf.getvalue()


def aligned(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    cols = list(zip(*([list(header)] + [list(r) for r in rows])))
    widths = [max(len(c) for c in col) for col in cols]
    lines = ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
             for row in [header] + list(rows)]
    return "\n".join(lines) + "\n"


def results_table(results: Sequence[BoundsResult], timings: bool = True) -> str:
    return aligned(RESULT_COLUMNS, [result_row(r, timings, fmt) for r in results])


CONVERGE_COLUMNS = {
    "lp": ("lp_primal_lower", "lp_dual_lower", "lp_gap_lower",
           "lp_primal_upper", "lp_dual_upper", "lp_gap_upper"),
    "randomset": ("rs_outer_lower", "rs_inner_lower", "rs_gap_lower",
                  "rs_outer_upper", "rs_inner_upper", "rs_gap_upper"),
}


def convergence(problem: Problem, sizes: Sequence[int], method: Optional[str] = None,
                sampler: Optional[str] = None) -> tuple:
    """(header, rows of floats) with E*, E** and the outer/inner random-set
    values and their gaps at each size."""
    if len(sizes) < 2:
        raise ConfigurationError("a convergence report needs at least two sizes")
    if problem.event is not None:
        raise ConfigurationError("convergence reports cover unconditional problems only")
    m = method or problem.method
    methods = ["lp", "randomset"] if m in ("all", "analytic") else [m]
    d = problem.discretization
    sh = None if problem.shape.kind == "unknown" else problem.shape
    header = ["size"] + [c for k in methods for c in CONVERGE_COLUMNS[k]]
    rows = []
    for n in sizes:
        row = [int(n)]
        if "lp" in methods:
            r = lp_bounds(problem.pbox, problem.h, n, sampler or d["sampler"], sh,
                          d["dual_rule"], d["lp_method"])
            (pl, pu), (dl, du) = r.metadata["primal"], r.metadata["dual"]
            row += [pl, dl, pl - dl, pu, du, du - pu]
        if "randomset" in methods:
            r = bounds_at(problem.pbox, problem.h, problem.shape, n, problem.tol)
            if "inner" in r.metadata:
                (ol, ou), (il, iu) = r.metadata["outer"], r.metadata["inner"]
            else:
                (ol, ou), (il, iu) = r.metadata["outer"], r.metadata["left"]
            row += [ol, il, il - ol, ou, iu, ou - iu]
        rows.append(row)
    return header, rows


def convergence_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([str(r[0])] + [full(v) for v in r[1:]])
    return buf.getvalue()


def convergence_table(header, rows) -> str:
    return aligned(header, [[str(r[0])] + [fmt(v) for v in r[1:]] for r in rows])
