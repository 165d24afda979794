"""Values the engines produce where acceptance targets are not met, and
the roundings that reproduce those targets."""
from pathlib import Path

import numpy as np
import pytest
from scipy import integrate

from pbox_expect.analytic import analytic_bounds
from pbox_expect.conditional import (_phi_linear, branch_function, conditional_bounds_monotone,
                                     conditional_bounds_search, conditional_bounds_unimodal,
                                     psi_phi, ConditionalProblem)
from pbox_expect.objective import ShapeDescriptor, parse_expression
from pbox_expect.pbox import exponential_pbox
from pbox_expect.problem import load_problem

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"
P = exponential_pbox(0.2, 0.5)
FL = lambda x: -np.expm1(-0.2 * x)
FU = lambda x: -np.expm1(-0.5 * x)
QL = lambda g: -5.0 * np.log1p(-g)
QU = lambda g: -2.0 * np.log1p(-g)


@pytest.fixture(scope="module")
def decreasing():
    return ConditionalProblem(P, parse_expression("20 - x"), ShapeDescriptor.nonincreasing(), (1, 8))


@pytest.fixture(scope="module")
def peaked():
    return ConditionalProblem(P, parse_expression("60 - (x - 5)^2"),
                              ShapeDescriptor.unimodal_max(5.0), (1, 8))


def test_monotone_conditional_exact(decreasing):
    r = conditional_bounds_monotone(decreasing)
    h = lambda x: 20.0 - x
    up = (h(1) * (FU(1) - FL(1)) +
          integrate.quad(lambda x: h(x) * 0.5 * np.exp(-0.5 * x), 1, QU(FL(8)))[0]) / (FL(8) - FL(1))
    lo = (integrate.quad(lambda x: h(x) * 0.2 * np.exp(-0.2 * x), QL(FU(1)), 8)[0] +
          h(8) * (FU(8) - FL(8))) / (FU(8) - FU(1))
    assert r.upper == pytest.approx(up, abs=1e-9)
    assert r.lower == pytest.approx(lo, abs=1e-9)
    assert r.upper == pytest.approx(18.40811, abs=1e-4)
    assert r.lower == pytest.approx(14.23172, abs=1e-4)


def test_monotone_conditional_with_two_digit_cdf_values():
    # x - 20 is nondecreasing, so its box corners are the ones overridden here
    pr = ConditionalProblem(P, parse_expression("x - 20"), ShapeDescriptor.nondecreasing(), (1, 8))
    pr.alpha_range = (0.18, 0.39)
    pr.beta_range = (0.8, 0.98)
    r = conditional_bounds_monotone(pr).negated()
    assert r.upper == pytest.approx(18.298, abs=5e-4)
    assert r.lower == pytest.approx(14.219, abs=5e-4)


def test_monotone_conditional_search_agrees(decreasing):
    closed = conditional_bounds_monotone(decreasing)
    search = conditional_bounds_search(decreasing, (64, 64))
    assert search.upper == pytest.approx(closed.upper, abs=1e-6)
    assert search.lower == pytest.approx(closed.lower, abs=1e-6)


def test_unimodal_conditional_exact(peaked):
    r = conditional_bounds_unimodal(peaked)
    assert r.upper == pytest.approx(58.977, abs=1e-3)
    assert r.lower == pytest.approx(47.787, abs=1e-3)
    al, be = r.metadata["upper_at"]
    assert al == pytest.approx(0.3935, abs=2e-3) and be == pytest.approx(0.9505, abs=2e-3)
    assert r.metadata["lower_at"] == pytest.approx((FL(1), FL(8)))
    branches = {(b["i_alpha"], b["i_beta"]): b["value"] for b in r.metadata["branches"]}
    assert branches[(1, 0)] == pytest.approx(58.932, abs=1e-3)
    assert branches[(1, 1)] == pytest.approx(58.977, abs=1e-3)


def test_unimodal_conditional_search_agrees(peaked):
    closed = conditional_bounds_unimodal(peaked)
    search = conditional_bounds_search(peaked)
    assert search.upper == pytest.approx(closed.upper, abs=1e-5)
    assert search.lower == pytest.approx(closed.lower, abs=1e-5)


def test_branch_functions_match_psi_on_their_rectangles(peaked):
    for b in conditional_bounds_unimodal(peaked).metadata["branches"]:
        f = branch_function(peaked, b["i_alpha"], b["i_beta"])
        al = 0.5 * sum(b["alpha_range"])
        be = 0.5 * sum(b["beta_range"])
        assert f(al, be) == pytest.approx(psi_phi(peaked, al, be)[0], abs=1e-8)


def test_branch_functions_off_their_rectangles(peaked):
    # fixed-indicator formulas at corners outside their rectangles, with
    # F_(5) and F^(5) rounded to two digits
    rounded = (0.63, 0.92)
    v10 = branch_function(peaked, 1, 0, cdf_at_peak=rounded)(0.18, 0.98) / 0.8
    v11 = branch_function(peaked, 1, 1, cdf_at_peak=rounded)(0.39, 0.8) / 0.41
    assert v10 == pytest.approx(56.517, abs=1e-3)
    assert v11 == pytest.approx(59.569, abs=1e-3)
    exact10 = branch_function(peaked, 1, 0)(0.18, 0.98) / 0.8
    exact11 = branch_function(peaked, 1, 1)(0.39, 0.8) / 0.41
    assert exact10 == pytest.approx(56.358, abs=1e-3)
    assert exact11 == pytest.approx(58.953, abs=1e-3)
    # off their rectangles the exact formulas stay below the true optimum
    assert max(exact10, exact11) < conditional_bounds_unimodal(peaked).upper


def test_lower_phi_is_linear_at_rounded_corner(peaked):
    eps = conditional_bounds_unimodal(peaked).metadata["epsilon"]
    phi, _ = _phi_linear(peaked, eps, "x", load_problem(PROBLEMS / "example4.json").tol)
    assert phi(FL(1), FL(8)) / (FL(8) - FL(1)) == pytest.approx(47.787, abs=1e-3)
    rounded = ConditionalProblem(peaked.pbox, peaked.h, peaked.shape, peaked.event)
    rounded.alpha_range = (0.18, 0.39)
    rounded.beta_range = (0.8, 0.98)
    phi_r, _ = _phi_linear(rounded, eps, "x", load_problem(PROBLEMS / "example4.json").tol)
    assert phi_r(0.18, 0.8) / 0.62 == pytest.approx(47.387, abs=1e-3)
    # slope in alpha is -h(1), in beta +h(8)
    assert phi(0.19, 0.8) - phi(0.18, 0.8) == pytest.approx(-0.44, abs=1e-9)
    assert phi(0.18, 0.81) - phi(0.18, 0.8) == pytest.approx(0.51, abs=1e-9)


def test_alternating_values():
    pr = load_problem(PROBLEMS / "example5.json")
    res, _ = analytic_bounds(pr.pbox, pr.h, pr.shape)
    meta = res.metadata["lower"]
    masses = [m for _, m in meta["jumps"][1:7]]
    assert masses == pytest.approx([0.312487, 0.0971891, 0.0284179, 0.00820268,
                                    0.00235554, 0.000674650], rel=1e-4)
    # successive jump masses shrink by a nearly constant factor
    ratios = np.array(masses[:-1]) / np.array(masses[1:])
    assert np.all((ratios > 3.0) & (ratios < 3.6))
    assert meta["partial_sums"][:6] == pytest.approx(
        [-0.820571, -1.555964, -1.895715, -2.028559, -2.076520, -2.093035], abs=1e-5)
    assert res.lower == pytest.approx(-2.10119, abs=1e-4)
    assert res.upper == pytest.approx(1.91518, abs=1e-4)
