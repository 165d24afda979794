"""Generic LP solving: two-phase dense-tableau simplex with Bland's rule,
and a sparse route through HiGHS for large systems."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from . import kernels
from .errors import LpStatusError

FEAS_TOL = 1e-9
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


@dataclass
class LpSolution:
    """Outcome of ``min c.x``; ``x`` and duals are None unless optimal.

    ``duals_ub`` are nonpositive multipliers of the ``<=`` rows;
    ``residual`` is the largest constraint violation and ``slackness`` the
    largest complementary-slackness product.
    """

    status: str
    value: float
    x: Optional[np.ndarray] = None
    duals_ub: Optional[np.ndarray] = None
    duals_eq: Optional[np.ndarray] = None
    iterations: int = 0
    solver: str = "simplex"
    residual: float = 0.0
    slackness: float = 0.0
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    def require_optimal(self) -> "LpSolution":
        if not self.optimal:
            raise LpStatusError(f"linear program {self.status}: {self.message}".rstrip(": "))
        return self


def _dense(A) -> np.ndarray:
    if A is None:
        return None
    if sp.issparse(A):
        return np.asarray(A.toarray(), dtype=float)
    return np.atleast_2d(np.asarray(A, dtype=float))


def _empty(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.zeros((0, n)), np.zeros(0)


def _audit(sol: LpSolution, c, A_ub, b_ub, A_eq, b_eq, free: np.ndarray) -> None:
    """Fill residual and slackness from the primal and dual vectors."""
    x = sol.x
    res = [0.0]
    slack = [0.0]
    rc = np.array(c, dtype=float)
    if A_ub is not None and b_ub.size:
        r = A_ub @ x - b_ub
        res.append(float(np.max(r)))
        slack.append(float(np.max(np.abs(sol.duals_ub * r))))
        rc = rc - A_ub.T @ sol.duals_ub
    if A_eq is not None and b_eq.size:
        res.append(float(np.max(np.abs(A_eq @ x - b_eq))))
        rc = rc - A_eq.T @ sol.duals_eq
    rc = np.asarray(rc).ravel()
    bounded = ~free
    if bounded.any():
        res.append(float(np.max(-x[bounded])))
        slack.append(float(np.max(np.abs(x[bounded] * rc[bounded]))))
    if free.any():
        slack.append(float(np.max(np.abs(rc[free]))))
    sol.residual = max(res)
    sol.slackness = max(slack)


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None,
             free_vars: Sequence[int] = (), method: str = "simplex",
             tol: float = FEAS_TOL, max_iter: Optional[int] = None,
             bounds: Optional[Sequence[tuple]] = None) -> LpSolution:
    """Minimize ``c.x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq`` and
    ``x >= 0`` outside ``free_vars``.

    ``method`` is ``"simplex"`` (dense tableau, Bland's rule) or
    ``"highs"`` (sparse, for large chain-structured systems). ``bounds``
    (``highs`` only) replaces the sign restrictions by per-variable
    ``(lo, hi)`` pairs; the bound multipliers are then returned in
    ``extra["lower"]`` and ``extra["upper"]``.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    if not np.all(np.isfinite(c)):
        raise ValueError("objective coefficients must be finite")
    free = np.zeros(n, dtype=bool)
    free[list(free_vars)] = True
    if method == "highs":
        return _solve_highs(c, A_ub, b_ub, A_eq, b_eq, free, bounds)
    if bounds is not None:
        raise ValueError("variable bounds are only supported by the highs route")
    if method != "simplex":
        raise ValueError(f"unknown LP method {method!r}")
    A_ub = _dense(A_ub)
    A_eq = _dense(A_eq)
    if A_ub is None:
        A_ub, b_ub = _empty(n)
    if A_eq is None:
        A_eq, b_eq = _empty(n)
    b_ub = np.asarray(b_ub, dtype=float).ravel()
    b_eq = np.asarray(b_eq, dtype=float).ravel()
    for arr in (A_ub, b_ub, A_eq, b_eq):
        if not np.all(np.isfinite(arr)):
            raise ValueError("constraint coefficients must be finite")
    sol = _solve_tableau(c, A_ub, b_ub, A_eq, b_eq, free, tol, max_iter)
    if sol.optimal:
        _audit(sol, c, A_ub, b_ub, A_eq, b_eq, free)
    return sol


def _solve_tableau(c, A_ub, b_ub, A_eq, b_eq, free, tol, max_iter) -> LpSolution:
    n = c.size
    fidx = np.nonzero(free)[0]
    # x_j = x+_j - x-_j for free variables
    cols_ub = np.hstack([A_ub, -A_ub[:, fidx]])
    cols_eq = np.hstack([A_eq, -A_eq[:, fidx]])
    cost = np.concatenate([c, -c[fidx]])
    n_s = cost.size
    m1, m2 = b_ub.size, b_eq.size
    m = m1 + m2
    A = np.vstack([cols_ub, cols_eq])
    b = np.concatenate([b_ub, b_eq])
    sign = np.where(b < 0, -1.0, 1.0)
    A = A * sign[:, None]
    b = b * sign
    needs_art = np.ones(m, dtype=bool)
    needs_art[:m1] = sign[:m1] < 0
    art_rows = np.nonzero(needs_art)[0]
    n_art = art_rows.size
    ncol = n_s + m1 + n_art
    T = np.zeros((m + 1, ncol + 1))
    T[:m, :n_s] = A
    T[np.arange(m1), n_s + np.arange(m1)] = sign[:m1]
    T[art_rows, n_s + m1 + np.arange(n_art)] = 1.0
    T[:m, -1] = b
    basis = np.empty(m, dtype=np.int64)
    basis[:m1] = n_s + np.arange(m1)
    basis[art_rows] = n_s + m1 + np.arange(n_art)
    # identity column of each row, used to read duals
    ident = basis.copy()
    n_enter = n_s + m1
    limit = int(max_iter) if max_iter else 50 * (m + ncol) + 1000
    iters = 0
    if n_art:
        T[m, n_s + m1:ncol] = 1.0
        T[m] -= T[art_rows].sum(axis=0)
        st, it = kernels.simplex_loop(T, basis, n_enter, tol, limit)
        iters += it
        if st == 2:
            return LpSolution("iteration_limit", np.nan, iterations=iters, message="phase 1")
        scale = max(1.0, float(np.max(np.abs(b))) if m else 1.0)
        if -T[m, -1] > tol * scale * 10:
            return LpSolution("infeasible", np.nan, iterations=iters,
                              message=f"phase-1 residual {-T[m, -1]:.3g}")
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if basis[i] >= n_enter:
                row = np.abs(T[i, :n_enter])
                j = int(np.argmax(row)) if n_enter else -1
                if j >= 0 and row[j] > tol:
                    kernels.pivot(T, basis, i, j)
                else:
                    keep[i] = False
        if not keep.all():
            T = np.vstack([T[:m][keep], T[m:]])
            basis = np.ascontiguousarray(basis[keep])
            ident = ident[keep]
            kept_rows = np.nonzero(keep)[0]
            m = int(keep.sum())
        else:
            kept_rows = np.arange(m)
    else:
        kept_rows = np.arange(m)
    full_cost = np.zeros(ncol)
    full_cost[:n_s] = cost
    T[m, :ncol] = full_cost
    T[m, -1] = 0.0
    T[m] -= full_cost[basis] @ T[:m]
    st, it = kernels.simplex_loop(T, basis, n_enter, tol, limit)
    iters += it
    if st == 1:
        return LpSolution("unbounded", -np.inf, iterations=iters)
    if st == 2:
        return LpSolution("iteration_limit", np.nan, iterations=iters, message="phase 2")
    xs = np.zeros(ncol)
    xs[basis] = T[:m, -1]
    x = xs[:n].copy()
    x[fidx] -= xs[n:n_s]
    y_std = np.zeros(m1 + m2)
    y_std[kept_rows] = -T[m, ident]
    y = y_std * sign
    return LpSolution("optimal", float(c @ x), x, y[:m1], y[m1:], iters, "simplex")


def _solve_highs(c, A_ub, b_ub, A_eq, b_eq, free, bounds=None) -> LpSolution:
    boxed = bounds is not None
    if not boxed:
        bounds = [(None, None) if f else (0, None) for f in free]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs", options=HIGHS_OPTIONS)
    if res.status == 2:
        # presolve can misreport an unbounded program as infeasible
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                      method="highs", options={**HIGHS_OPTIONS, "presolve": False})
    status = {0: "optimal", 1: "iteration_limit", 2: "infeasible", 3: "unbounded"}.get(
        res.status, "failed")
    if status != "optimal":
        return LpSolution(status, np.nan, iterations=int(getattr(res, "nit", 0)),
                          solver="highs", message=res.message)
    sol = LpSolution("optimal", float(res.fun), np.asarray(res.x),
                     np.asarray(res.ineqlin.marginals) if A_ub is not None else np.zeros(0),
                     np.asarray(res.eqlin.marginals) if A_eq is not None else np.zeros(0),
                     int(res.nit), "highs")
    if boxed:
        sol.extra["lower"] = np.asarray(res.lower.marginals)
        sol.extra["upper"] = np.asarray(res.upper.marginals)
        return sol
    _audit(sol, c,
           None if A_ub is None else sp.csr_matrix(A_ub),
           None if b_ub is None else np.asarray(b_ub, dtype=float),
           None if A_eq is None else sp.csr_matrix(A_eq),
           None if b_eq is None else np.asarray(b_eq, dtype=float), free)
    return sol
