import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from instances import instance
from pbox_expect.analytic import (analytic_bounds, bounds_general, bounds_monotone,
                                  bounds_unimodal, construction_levels, follow, solve_alpha)
from pbox_expect.errors import PBoxError
from pbox_expect.objective import ShapeDescriptor, parse_expression
from pbox_expect.pbox import ExponentialCdf, PBox, TabulatedCdf, eval_cdf

S = ShapeDescriptor


@pytest.mark.parametrize("form", ["x", "gamma"])
def test_monotone_example(band, examples, form):
    h, shape = examples["decreasing"]
    res, (lo_ext, up_ext) = bounds_monotone(band, h, shape.kind, form)
    assert res.lower == pytest.approx(15.0, abs=1e-8)
    assert res.upper == pytest.approx(18.0, abs=1e-8)
    assert lo_ext.segments[0].kind == "follow-lower"
    assert up_ext.segments[0].kind == "follow-upper"
    with pytest.raises(ValueError):
        bounds_monotone(band, h, "sideways")


@pytest.mark.parametrize("form", ["x", "gamma"])
def test_unimodal_example(band, examples, form):
    h, _ = examples["peak"]
    res, (lo_ext, up_ext) = bounds_unimodal(band, h, 5.0, form)
    assert res.metadata["alpha"] == pytest.approx(0.760349, abs=1e-6)
    assert res.lower == pytest.approx(29.745125, abs=1e-5)
    assert res.upper == pytest.approx(52.737292, abs=1e-5)
    qu, ql = res.metadata["split"]
    # equal values at both ends of the constant segment
    assert h(qu) == pytest.approx(h(ql), abs=1e-8)
    assert [s.kind for s in lo_ext.segments] == ["follow-upper", "constant", "follow-lower"]


def test_unimodal_closed_form_upper(band):
    # upper: follow F_ up to the peak, jump, then follow F^
    h = parse_expression("60 - (x - 5)^2")
    res, _ = bounds_unimodal(band, h, 5.0)
    fl, fu = eval_cdf(band, "lower", 5.0), eval_cdf(band, "upper", 5.0)
    # E[(X-5)^2 ; X<=5] under Exp(0.2) and E[(X-5)^2 ; X>5] under Exp(0.5) in closed form
    def part(rate, lo, hi):
        from scipy.integrate import quad
        return quad(lambda x: (60 - (x - 5) ** 2) * rate * np.exp(-rate * x), lo, hi)[0]
    want = part(0.2, 0, 5) + 60 * (fu - fl) + part(0.5, 5, np.inf)
    assert res.upper == pytest.approx(want, abs=1e-6)


def test_peak_outside_domain_reduces_to_monotone(band):
    h = parse_expression("-(x + 1)^2")
    res, _ = bounds_unimodal(band, h, -1.0)
    mono, _ = bounds_monotone(band, h, "nonincreasing")
    assert res.lower == pytest.approx(mono.lower) and res.upper == pytest.approx(mono.upper)


def test_solve_alpha_one_signed_bracket(band):
    # phi < 0 on the whole bracket: the level sits at the upper end, residual reported
    h = parse_expression("60 - (x - 5)^2")
    lv = solve_alpha(band, h, 5.0, bracket=(0.01, 0.02))
    assert lv.value == 0.02 and lv.residual > 0.1
    exact = solve_alpha(band, h, 5.0)
    assert exact.value == pytest.approx(0.760349, abs=1e-6) and exact.residual < 1e-9


def test_alternating_example(band, examples):
    h, _ = examples["oscillating"]
    from pbox_expect.objective import resolve_shape
    shape = resolve_shape(h, None, band.domain)
    res, (lo_ext, up_ext) = bounds_general(band, h, shape)
    meta = res.metadata["lower"]
    assert meta["alphas"][:5] == pytest.approx([0.21475, 0.80846, 0.94850, 0.98575, 0.99601],
                                               abs=1e-5)
    assert res.lower == pytest.approx(-2.10119, abs=1e-5)
    assert res.upper == pytest.approx(1.91518, abs=1e-5)
    # the jumps sit at the minima of h
    minima = shape.minima()
    for b, m in meta["jumps"][1:-1]:
        assert np.min(np.abs(minima - b)) < 1e-9
    assert not lo_ext.check(band) and not up_ext.check(band)
    lv = construction_levels(band, h, shape)
    assert np.all(np.diff(lv) >= -1e-12)


def test_unimodal_min_via_negation(band):
    h = parse_expression("(x - 5)^2 - 60")
    res, _ = analytic_bounds(band, h, S.unimodal_min(5.0))
    assert res.lower == pytest.approx(-52.737292, abs=1e-5)
    assert res.upper == pytest.approx(-29.745125, abs=1e-5)


def test_unknown_shape_rejected(band):
    with pytest.raises(PBoxError):
        analytic_bounds(band, parse_expression("x"), S.unknown())


def test_degenerate_pbox_gives_expectation():
    p = PBox(ExponentialCdf(0.5), ExponentialCdf(0.5))
    for src, shape, want in (("x", S.nondecreasing(), 2.0),
                             ("(x - 2)^2", S.unimodal_min(2.0), 4.0),
                             ("x*cos(x)", None, None)):
        h = parse_expression(src)
        if shape is None:
            from pbox_expect.objective import resolve_shape
            shape = resolve_shape(h, None, p.domain)
            from scipy.integrate import quad
            want = quad(lambda x: x * np.cos(x) * 0.5 * np.exp(-0.5 * x), 0, np.inf, limit=400)[0]
        res, _ = analytic_bounds(p, h, shape)
        assert res.lower == pytest.approx(want, abs=1e-7)
        assert res.upper == pytest.approx(want, abs=1e-7)


def test_follow_extremizer(band):
    ext = follow(band, "upper")
    assert ext.total_mass(band) == pytest.approx(1.0)
    assert not ext.check(band)
    rows = ext.trace(band)
    assert rows[0][0] == band.domain[0]
    assert all(r[2] in ("follow-upper", "jump") for r in rows)


def test_tabulated_alternating_with_saturated_upper_cdf():
    # F^ reaches 1 before the last maximum of -h; the switch level sits at the bracket end
    p, h, shape = instance(7)
    res, exts = analytic_bounds(p, h, shape)
    for ext, v in zip(exts, (res.lower, res.upper)):
        assert ext.expectation(p, h) == pytest.approx(v, abs=1e-8)
        assert not ext.check(p)


@settings(max_examples=25)
@given(st.integers(0, 10_000))
def test_duality_random(seed):
    p, h, shape = instance(seed)
    res, _ = analytic_bounds(p, h, shape)
    neg, _ = analytic_bounds(p, lambda x: -h(x), shape.reflected())
    assert res.lower == pytest.approx(-neg.upper, abs=1e-8)
    assert res.upper == pytest.approx(-neg.lower, abs=1e-8)
    assert res.lower <= res.upper + 1e-9


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.floats(-3, 3), st.floats(0.5, 2))
def test_affine_equivariance(seed, shift, scale):
    p, h, shape = instance(seed)
    res, _ = analytic_bounds(p, h, shape)
    moved, _ = analytic_bounds(p, lambda x: scale * h(x) + shift, shape)
    tol = 1e-7 * (1 + abs(res.lower) + abs(res.upper))
    assert moved.lower == pytest.approx(scale * res.lower + shift, abs=tol)
    assert moved.upper == pytest.approx(scale * res.upper + shift, abs=tol)


@settings(max_examples=20)
@given(st.integers(0, 10_000))
def test_extremizers_reproduce_bounds(seed):
    p, h, shape = instance(seed)
    res, exts = analytic_bounds(p, h, shape)
    for ext, v in zip(exts, (res.lower, res.upper)):
        assert not ext.check(p)
        assert ext.expectation(p, h) == pytest.approx(v, abs=1e-7 * (1 + abs(v)))


def test_tabulated_pbox_unimodal():
    lower = TabulatedCdf(((0, 0), (2, 0.2), (6, 0.7), (10, 1)))
    upper = TabulatedCdf(((0, 0), (2, 0.5), (6, 0.95), (10, 1)))
    p = PBox(lower, upper)
    h = parse_expression("10 - (x - 4)^2")
    res, (lo_ext, up_ext) = analytic_bounds(p, h, S.unimodal_max(4.0))
    assert lo_ext.expectation(p, h) == pytest.approx(res.lower, abs=1e-9)
    assert up_ext.expectation(p, h) == pytest.approx(res.upper, abs=1e-9)
