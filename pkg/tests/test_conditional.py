import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from pbox_expect.conditional import (ConditionalProblem, ConditioningEvent, LevelProfile,
                                     branch_function, conditional_bounds,
                                     conditional_bounds_monotone, conditional_bounds_search,
                                     conditional_bounds_unimodal, indicator_branches, psi_phi)
from pbox_expect.errors import ConfigurationError, EventError
from pbox_expect.objective import ShapeDescriptor, parse_expression
from pbox_expect.pbox import ExponentialCdf, PBox

S = ShapeDescriptor


def problem(band, src, shape, event=(1.0, 8.0)):
    return ConditionalProblem(band, parse_expression(src), shape, ConditioningEvent(*event))


def test_event_validation(band):
    with pytest.raises(EventError):
        ConditioningEvent(3.0, 3.0)
    with pytest.raises(EventError):
        ConditioningEvent(0.0, float("inf"))
    # F_(1.2) < F^(1.0): lower probability not positive
    with pytest.raises(EventError):
        problem(band, "x", S.nondecreasing(), (1.0, 1.2))
    p = problem(band, "x", S.nondecreasing(), (1.0, 8.0))
    assert p.lower_probability == pytest.approx(np.exp(-0.5) - np.exp(-1.6))


def test_psi_above_phi(band):
    p = problem(band, "60 - (x - 5)^2", S.unimodal_max(5.0))
    prof = LevelProfile(p)
    for al, be in ((0.2, 0.8), (0.35, 0.9), (0.19, 0.98)):
        psi, phi = prof.psi_phi(al, be)
        assert psi >= phi
    with pytest.raises(EventError):
        prof.psi_phi(0.05, 0.9)
    with pytest.raises(ValueError):
        psi_phi(p, 0.5, 0.5)


def test_constant_objective(band):
    for method in ("auto", "search"):
        r = conditional_bounds(problem(band, "3 + 0*x", S.nondecreasing()), method=method)
        assert r.lower == pytest.approx(3.0, abs=1e-9) and r.upper == pytest.approx(3.0, abs=1e-9)


def test_degenerate_pbox_is_bayes():
    p = PBox(ExponentialCdf(0.3), ExponentialCdf(0.3))
    for src, shape in (("x", S.nondecreasing()), ("10 - (x - 4)^2", S.unimodal_max(4.0))):
        h = parse_expression(src)
        want = quad(lambda x: h(x) * 0.3 * np.exp(-0.3 * x), 1, 8)[0] / \
            (np.exp(-0.3) - np.exp(-2.4))
        for method in ("auto", "search"):
            r = conditional_bounds(ConditionalProblem(p, h, shape, (1.0, 8.0)), method=method)
            assert r.lower == pytest.approx(want, abs=1e-6)
            assert r.upper == pytest.approx(want, abs=1e-6)


def test_monotone_closed_form_matches_search(band):
    p = problem(band, "20 - x", S.nonincreasing())
    closed = conditional_bounds_monotone(p)
    search = conditional_bounds_search(p)
    assert closed.lower == pytest.approx(search.lower, abs=1e-6)
    assert closed.upper == pytest.approx(search.upper, abs=1e-6)
    assert closed.lower == pytest.approx(14.2317, abs=1e-4)
    assert closed.upper == pytest.approx(18.4081, abs=1e-4)
    with pytest.raises(ConfigurationError):
        conditional_bounds_monotone(problem(band, "x", S.unimodal_max(2.0)))


@settings(max_examples=12)
@given(st.floats(0.0, 3.0), st.floats(4.0, 15.0), st.sampled_from(["x", "-x", "ln(1 + x)"]))
def test_monotone_random_events(b0, b1, src):
    band = PBox(ExponentialCdf(0.2), ExponentialCdf(0.5))
    shape = S.nonincreasing() if src == "-x" else S.nondecreasing()
    try:
        p = problem(band, src, shape, (b0, b1))
    except EventError:
        return
    closed = conditional_bounds(p)
    search = conditional_bounds_search(p)
    tol = 1e-5 * (1 + abs(closed.upper))
    assert closed.lower == pytest.approx(search.lower, abs=tol)
    assert closed.upper == pytest.approx(search.upper, abs=tol)


def test_unimodal_matches_search(band):
    p = problem(band, "60 - (x - 5)^2", S.unimodal_max(5.0))
    closed = conditional_bounds_unimodal(p)
    search = conditional_bounds_search(p)
    assert closed.upper == pytest.approx(search.upper, abs=1e-5)
    assert closed.lower == pytest.approx(search.lower, abs=1e-5)
    assert closed.upper == pytest.approx(58.977, abs=1e-3)
    assert closed.lower == pytest.approx(47.7868, abs=1e-4)
    assert closed.metadata["lower_at"] == pytest.approx((p.alpha_range[0], p.beta_range[0]))


def test_unimodal_min_by_negation(band):
    up = conditional_bounds_unimodal(problem(band, "60 - (x - 5)^2", S.unimodal_max(5.0)))
    down = conditional_bounds_unimodal(problem(band, "(x - 5)^2 - 60", S.unimodal_min(5.0)))
    assert down.lower == pytest.approx(-up.upper, abs=1e-9)
    assert down.upper == pytest.approx(-up.lower, abs=1e-9)


@pytest.mark.parametrize("peak, kind", [(0.5, "nonincreasing"), (9.0, "nondecreasing")])
def test_peak_outside_event_reduces_to_monotone(band, peak, kind):
    src = f"10 - (x - {peak})^2"
    r = conditional_bounds_unimodal(problem(band, src, S.unimodal_max(peak)))
    assert r.metadata["reduced_to"] == kind
    s = conditional_bounds_search(problem(band, src, S.unimodal_max(peak)))
    assert r.lower == pytest.approx(s.lower, abs=1e-5)
    assert r.upper == pytest.approx(s.upper, abs=1e-5)


def test_branch_functions_on_their_rectangles(band):
    p = problem(band, "60 - (x - 5)^2", S.unimodal_max(5.0))
    prof = LevelProfile(p)
    for br in indicator_branches(p):
        f = branch_function(p, br["i_alpha"], br["i_beta"])
        al = 0.5 * sum(br["alpha"])
        be = 0.5 * sum(br["beta"])
        assert f(al, be) == pytest.approx(prof.psi_phi(al, be)[0], abs=1e-7)


def test_unknown_method_and_closed_without_shape(band):
    p = problem(band, "x*cos(x)", S.unknown())
    with pytest.raises(ConfigurationError):
        conditional_bounds(p, method="magic")
    with pytest.raises(ConfigurationError):
        conditional_bounds(p, method="closed")
