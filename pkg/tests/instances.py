"""Seeded random (p-box, objective, shape) instances shared by the suites."""
import numpy as np

from pbox_expect.objective import ShapeDescriptor, parse_expression, resolve_shape
from pbox_expect.pbox import PBox, TabulatedCdf, exponential_pbox

EXAMPLES = tuple(f"example{k}" for k in range(1, 6))


def random_pbox(rng: np.random.Generator, tabulated: bool) -> PBox:
    if not tabulated:
        r1 = float(rng.uniform(0.1, 0.6))
        return exponential_pbox(r1, r1 * float(rng.uniform(1.3, 3.0)))
    x = np.concatenate([[0.0], np.sort(rng.uniform(0, 10, 6)), [10.0 + rng.uniform(0, 2)]])
    pl = np.concatenate([[0.0], np.sort(rng.uniform(0, 1, x.size - 2)), [1.0]])
    pu = np.minimum(1.0, pl + rng.uniform(0.05, 0.4, x.size))
    pu[0] = 0.0
    pu = np.maximum.accumulate(pu)
    return PBox(TabulatedCdf(tuple(zip(x, pl))), TabulatedCdf(tuple(zip(x, pu))))


def instance(seed: int) -> tuple:
    """Exponential p-boxes on even seeds, tabulated on odd ones; the objective
    cycles through affine, quadratic peak, quadratic valley and x cos x."""
    rng = np.random.default_rng(seed)
    p = random_pbox(rng, seed % 2 == 1)
    lo, hi = p.domain
    kind = seed % 4
    if kind == 0:
        b = float(rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2))
        h = parse_expression(f"{float(rng.uniform(-5, 5))!r} + {b!r}*x")
        shape = ShapeDescriptor.nondecreasing() if b > 0 else ShapeDescriptor.nonincreasing()
    elif kind in (1, 2):
        a = lo + float(rng.uniform(0.2, 0.6)) * min(hi - lo, 15.0)
        sign = 1 if kind == 1 else -1
        h = parse_expression(f"{sign}*(30 - {float(rng.uniform(0.3, 2))!r}*(x - {a!r})^2)")
        shape = ShapeDescriptor.unimodal_max(a) if kind == 1 else ShapeDescriptor.unimodal_min(a)
    else:
        h = parse_expression(f"{float(rng.uniform(0.3, 1))!r}*x*cos(x)")
        shape = resolve_shape(h, None, p.domain)
    return p, h, shape
