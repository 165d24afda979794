import numpy as np
import pytest

from pbox_expect.errors import MalformedSpecError
from pbox_expect.objective import (ShapeDescriptor, catalog, locate_extrema, parse_expression,
                                   resolve_shape, verify_shape)

S = ShapeDescriptor


def test_descriptor_validation():
    with pytest.raises(MalformedSpecError):
        S("wiggly")
    with pytest.raises(MalformedSpecError):
        S("unimodal-max")
    with pytest.raises(MalformedSpecError):
        S.alternating([(1, "min"), (2, "min")])
    with pytest.raises(MalformedSpecError):
        S.alternating([(2, "min"), (1, "max")])
    with pytest.raises(MalformedSpecError):
        S.alternating([(1, "top")])


def test_reflection_round_trip():
    for s in (S.nondecreasing(), S.unimodal_max(3.0), S.alternating([(1, "max"), (2, "min")])):
        assert s.reflected().reflected() == s
    assert S.unimodal_min(2.0).reflected() == S.unimodal_max(2.0)
    assert S.alternating([(1, "max"), (2, "min")]).reflected().extrema == ((1.0, "min"), (2.0, "max"))


def test_extrema_helpers():
    s = S.alternating([(1, "max"), (2, "min"), (3, "max")])
    assert s.maxima().tolist() == [1.0, 3.0]
    assert s.minima().tolist() == [2.0]
    assert s.direction_at_start() == 1
    assert s.restricted((1.5, 10)).extrema == ((2.0, "min"), (3.0, "max"))
    assert S.nonincreasing().direction_at_start() == -1


def test_verify_shape():
    h = parse_expression("60 - (x - 5)^2")
    assert verify_shape(h, S.unimodal_max(5.0), (0, 20)).consistent
    rep = verify_shape(h, S.unimodal_max(8.0), (0, 20))
    assert not rep.consistent and 5.0 <= rep.violation_x <= 8.0
    rep = verify_shape(h, S.nondecreasing(), (0, 20))
    assert not rep.consistent
    assert verify_shape(h, S.unknown(), (0, 20)).consistent


def test_locate_extrema_of_x_cos_x():
    h = catalog("x-cos-x", s=0.6)
    shape, res = locate_extrema(h, (0.0, 115.129))
    assert len(shape.extrema) == 37
    assert shape.extrema[0][1] == "max" and shape.extrema[0][0] == pytest.approx(0.8603, abs=1e-4)
    assert shape.extrema[1][0] == pytest.approx(3.4256, abs=1e-4)
    # extrema of x cos x solve tan x = 1/x
    for x, _ in shape.extrema:
        assert np.tan(x) * x == pytest.approx(1.0, abs=1e-5)
    assert max(res) < 1e-3


def test_resolve_shape():
    dom = (0.0, 10.0)
    assert resolve_shape(parse_expression("3 - x"), None, dom) == S.nonincreasing()
    assert resolve_shape(parse_expression("x"), None, dom) == S.nondecreasing()
    s = resolve_shape(parse_expression("(x - 4)^2"), None, dom)
    assert s.kind == "unimodal-min" and s.location == pytest.approx(4.0, abs=1e-6)
    declared = S.unimodal_max(1.0)
    assert resolve_shape(parse_expression("x"), declared, dom) is declared
