"""Exact solver for the chain-structured programs of the LP engine.

Minimize sum a_k z_k over z >= 0 with sum z = 1 and partial sums
s_i = z_1 + ... + z_i in [lo_i, up_i] for i < K. Reading s as a CDF over
atom indices, level g may be carried by any atom k with
alpha(g) <= k <= beta(g), alpha(g) = min{i: up_i >= g},
beta(g) = min{i: lo_i >= g}; every level choice gives a monotone s, so
the optimum is the level integral of the window minimum of a. Both window
ends are nondecreasing in g, which makes this a sliding-window minimum.

The dual potentials G_i = max of the level values v(g) over
g in (lo_{i-1}, up_i] are feasible (G <= a) and attain the same value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import LpStatusError


@dataclass
class ChainSolution:
    """Primal masses ``z`` and dual potentials ``G`` (G_K is c0)."""

    value: float
    z: np.ndarray
    G: np.ndarray
    dual_value: float
    lo: np.ndarray
    up: np.ndarray

    @property
    def c(self) -> np.ndarray:
        return np.maximum(self.G[1:] - self.G[:-1], 0.0)

    @property
    def d(self) -> np.ndarray:
        return np.maximum(self.G[:-1] - self.G[1:], 0.0)

    @property
    def c0(self) -> float:
        return float(self.G[-1])


def dual_objective(G: np.ndarray, lo: np.ndarray, up: np.ndarray) -> float:
    """c0 + sum (d_k lo_k - c_k up_k) for the potentials G."""
    t = G[:-1] - G[1:]
    return float(G[-1] + np.sum(np.where(t > 0, lo * t, up * t)))


def solve_chain(a, lo, up, tol: float = 1e-12) -> ChainSolution:
    a = np.asarray(a, dtype=float).ravel()
    lo = np.asarray(lo, dtype=float).ravel()
    up = np.asarray(up, dtype=float).ravel()
    K = a.size
    if K < 1 or lo.size != K - 1 or up.size != K - 1:
        raise ValueError("need K costs and K-1 row bounds")
    if not np.all(np.isfinite(a)):
        raise ValueError("costs must be finite")
    if np.any(lo > up + tol) or np.any(np.diff(lo) < -tol) or np.any(np.diff(up) < -tol):
        raise LpStatusError("chain program infeasible: rows must be ordered and lo <= up")
    lo_c = np.clip(np.maximum.accumulate(lo), 0.0, 1.0) if K > 1 else lo
    up_c = np.clip(np.maximum(np.maximum.accumulate(up), lo_c), 0.0, 1.0) if K > 1 else up
    lo_f = np.append(lo_c, 1.0)
    up_f = np.append(up_c, 1.0)
    g = np.unique(np.concatenate([[0.0, 1.0], lo_f, up_f]))
    left, right = g[:-1], g[1:]
    length = right - left
    alpha = np.searchsorted(up_f, right, "left")
    beta = np.searchsorted(lo_f, right, "left")
    arg = kernels.window_argmin(a, alpha, beta)
    v = a[arg]
    z = np.bincount(arg, weights=length, minlength=K)
    value = float(length @ v)
    lprev = np.concatenate([[0.0], lo_f[:-1]])
    p = np.searchsorted(left, lprev, "left")
    q = np.searchsorted(right, up_f, "right") - 1
    best = kernels.window_argmax(v, p, q)
    G = np.where(best >= 0, v[np.maximum(best, 0)], a)
    G = np.minimum(G, a)
    return ChainSolution(value, z, G, dual_objective(G, lo_f[:-1], up_f[:-1]), lo_f[:-1],
                         up_f[:-1])
