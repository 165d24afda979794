import copy
import json

import pytest

from pbox_expect.pbox import ExpressionCdf, TabulatedCdf
from pbox_expect.problem import ProblemError, load_problem, parse_problem

BASE = {
    "schema": "pbox-expect/1",
    "pbox": {"lower": {"kind": "parametric-exponential", "rate": 0.2},
             "upper": {"kind": "parametric-exponential", "rate": 0.5}},
    "objective": {"expression": "20 - x"},
    "shape": {"kind": "nonincreasing"},
}


def doc(**changes):
    d = copy.deepcopy(BASE)
    for k, v in changes.items():
        if v is None:
            d.pop(k, None)
        else:
            d[k] = v
    return d


def location(d):
    with pytest.raises(ProblemError) as info:
        parse_problem(d)
    return info.value.location


def test_defaults():
    p = parse_problem(doc())
    assert p.method == "all" and p.event is None
    assert p.discretization["lp_points"] == 2048
    assert p.shape.kind == "nonincreasing"


@pytest.mark.parametrize("changes, where", [
    ({"schema": "pbox-expect/2"}, "$.schema"),
    ({"objective": None}, "$"),
    ({"method": "magic"}, "$.method"),
    ({"pbox": {"lower": {"kind": "parametric-exponential", "rate": -1},
               "upper": {"kind": "parametric-exponential", "rate": 0.5}}}, "$.pbox.lower.rate"),
    ({"pbox": {"lower": {"kind": "tabulated", "points": [[0, 0], [1]]},
               "upper": {"kind": "parametric-exponential", "rate": 0.5}}},
     "$.pbox.lower.points[1]"),
    ({"discretization": {"lp_points": 1}}, "$.discretization.lp_points"),
    ({"extra": 1}, "$"),
])
def test_schema_errors_carry_json_path(changes, where):
    assert location(doc(**changes)) == where


def test_consistency_errors():
    # bands in the wrong order
    swapped = {"lower": BASE["pbox"]["upper"], "upper": BASE["pbox"]["lower"]}
    assert location(doc(pbox=swapped)) == "$.pbox"
    assert location(doc(objective={"expression": "20 - "})) == "$.objective"
    assert location(doc(objective={"catalog": "x-cos-x", "params": {"q": 1}})) == "$.objective"
    assert location(doc(shape={"kind": "nondecreasing"})) == "$.shape"
    assert location(doc(event=[1, 1.2])) == "$.event"
    assert location(doc(objective={"expression": "ln(x - 1)"})) == "$.objective"


def test_method_compatibility():
    assert location(doc(event=[1, 8], method="lp")) == "$.method"
    osc = doc(objective={"expression": "x*cos(x)"}, shape="auto", event=[1, 8],
              method="analytic")
    assert location(osc) == "$.method"
    assert location(doc(shape={"kind": "unknown"}, method="analytic")) == "$.method"
    assert parse_problem(doc(shape={"kind": "unknown"}, method="lp")).method == "lp"


def test_cdf_kinds():
    tab = {"kind": "tabulated", "points": [[0, 0], [2, 0.5], [10, 1]]}
    expr = {"kind": "expression", "source": "1 - exp(-0.2*x)", "support": [0, 120]}
    p = parse_problem(doc(pbox={"lower": expr, "upper": tab}))
    assert isinstance(p.pbox.lower, ExpressionCdf) and isinstance(p.pbox.upper, TabulatedCdf)


def test_load_problem_files(tmp_path):
    with pytest.raises(ProblemError) as info:
        load_problem(tmp_path / "missing.json")
    assert "file not found" in str(info.value)
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": }')
    with pytest.raises(ProblemError) as info:
        load_problem(bad)
    assert "line 1" in info.value.location
    good = tmp_path / "good.json"
    good.write_text(json.dumps(doc(name="demo")))
    assert load_problem(good).name == "demo"


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_shipped_problems_validate(n):
    p = load_problem(f"problems/example{n}.json")
    assert (p.event is not None) == (n in (2, 4))
