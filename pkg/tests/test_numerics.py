import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pbox_expect.errors import BracketError
from pbox_expect.numerics import (Tolerance, find_all_roots, find_root, integrate,
                                  integrate_levels, integrate_pieces)


def test_find_root():
    assert find_root(lambda x: x * x - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert find_root(math.cos, 3, 1) == pytest.approx(math.pi / 2, abs=1e-12)
    assert find_root(lambda x: x, 0, 1) == 0.0
    with pytest.raises(BracketError):
        find_root(lambda x: x * x + 1, -1, 1)


@given(st.floats(-10, 10), st.floats(0.1, 5))
def test_find_root_property(r, w):
    f = lambda x: (x - r) ** 3 + (x - r)
    assert find_root(f, r - w, r + 2 * w) == pytest.approx(r, abs=1e-10)


def test_find_all_roots():
    roots = find_all_roots(np.sin, 0.5, 10)
    assert roots == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], abs=1e-10)
    with pytest.raises(ValueError):
        find_all_roots(np.sin, 0, 1, scan_size=2)


@pytest.mark.parametrize("f, lo, hi, want", [
    (np.exp, 0.0, 1.0, math.e - 1),
    (lambda x: np.sqrt(x), 0.0, 1.0, 2 / 3),
    (np.cos, 0.0, 50.0, math.sin(50.0)),
    (lambda x: 1 / (1 + x * x), -30.0, 30.0, 2 * math.atan(30.0)),
])
def test_integrate(f, lo, hi, want):
    r = integrate(f, lo, hi)
    assert r.value == pytest.approx(want, rel=1e-9)
    assert r.warning is None


def test_integrate_orientation_and_scalar_callable():
    assert integrate(lambda x: math.exp(x), 1.0, 0.0).value == pytest.approx(1 - math.e)
    assert integrate(np.exp, 2.0, 2.0).value == 0.0


def test_integrate_budget_warning():
    r = integrate(lambda x: np.sign(np.sin(1 / np.maximum(x, 1e-300))), 1e-6, 1.0,
                  Tolerance(quad_rel=1e-14), max_depth=6)
    assert r.warning is not None


def test_integrate_rejects_nonfinite():
    with pytest.raises(FloatingPointError):
        integrate(lambda x: np.where(x == 0.5, np.inf, 1.0), 0, 1)


def test_integrate_pieces_and_levels():
    step = lambda x: np.where(x < 0.3, 1.0, 2.0)
    assert integrate_pieces(step, [0, 0.3, 1]).value == pytest.approx(1.7, abs=1e-12)
    # log singularity at 1, as in level integrals of unbounded quantiles
    r = integrate_levels(lambda g: -np.log1p(-np.minimum(g, 1 - 2.0 ** -53)), 0.0, 1.0)
    assert r.value == pytest.approx(1.0, abs=1e-9)
    assert r.warning is None
