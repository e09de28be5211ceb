import math

import numpy as np
import pytest
from hypothesis import given, settings

from fptensor import EvalPoint, jet_extract
from fptensor.dsl import as_function, evaluate, parse_expression
from fptensor.errors import FPError
from fptensor.oracle import default_step, fd_derivative

from exprgen import expressions, multi_indices, points


def test_fd_polynomial_second():
    f = lambda x, y: y[0] ** 2
    for p in [EvalPoint((0, 0), (1, 1)), EvalPoint((3, -2), (-4, 0.5))]:
        assert fd_derivative(f, p, (0, 0, 2, 0)) == pytest.approx(2.0, abs=1e-6)


def test_fd_sin_first():
    f = lambda x, y: math.sin(x[0])
    assert fd_derivative(f, EvalPoint((0, 0), (1, 1)), (1, 0, 0, 0)) == pytest.approx(1.0, abs=1e-8)


def test_fd_degree_zero_is_value():
    f = lambda x, y: x[0] + y[1]
    assert fd_derivative(f, EvalPoint((2, 0), (1, 3)), (0, 0, 0, 0)) == 5.0


def test_fd_rejects_bad_input():
    f = lambda x, y: y[0]
    p = EvalPoint((0, 0), (1, 1))
    with pytest.raises(ValueError):
        fd_derivative(f, p, (5, 0, 0, 0))
    with pytest.raises(ValueError):
        fd_derivative(f, p, (1, 0, 0, 0), h=0.0)
    with pytest.raises(ValueError):
        fd_derivative(f, p, (1, 0, 0))


def test_fd_stencil_reaching_zero_section():
    f = lambda x, y: y[0] ** 2 + y[1] ** 2
    p = EvalPoint((0, 0), (1e-4, 0.0))
    with pytest.raises(FPError):
        fd_derivative(f, p, (0, 0, 1, 0), h=1e-3)


def test_default_step_first_order_is_cube_root():
    eps = np.finfo(float).eps
    assert default_step(1, 0.5) == pytest.approx(eps ** (1 / 3))
    assert default_step(1, 10.0) == pytest.approx(10 * eps ** (1 / 3))


@settings(max_examples=60)
@given(expressions(), multi_indices(max_degree=3), points())
def test_jet_matches_fd(text, idx, point):
    expr = parse_expression(text, 2)
    jet = jet_extract(evaluate(expr, point, 3), idx)
    fd = fd_derivative(as_function(expr), point, idx)
    assert abs(fd - jet) <= 1e-5 * (1 + abs(jet))


@settings(max_examples=20)
@given(expressions(n=3, depth=2), multi_indices(n=3, max_degree=2), points(n=3))
def test_jet_matches_fd_3d(text, idx, point):
    expr = parse_expression(text, 3)
    jet = jet_extract(evaluate(expr, point, 2), idx)
    fd = fd_derivative(as_function(expr), point, idx)
    assert abs(fd - jet) <= 1e-5 * (1 + abs(jet))


@pytest.mark.parametrize("text", ["exp(x1)*sin(y2)", "sqrt(y1^2 + y2^2)", "log(2 + x2) / (1 + y1^2)",
                                  "pow(y1^2 + 1, 0.75)", "cos(x1*y2) - x2^3"])
def test_agreement_to_fourth_order(text):
    expr = parse_expression(text, 2)
    p = EvalPoint((0.3, -0.2), (1.1, 0.7))
    j = evaluate(expr, p, 4)
    for idx in [(4, 0, 0, 0), (0, 1, 2, 1), (0, 0, 2, 2), (1, 1, 1, 1)]:
        jet = jet_extract(j, idx)
        fd = fd_derivative(as_function(expr), p, idx)
        assert abs(fd - jet) <= 1e-5 * (1 + abs(jet))


def test_fast_oscillation_third_derivative():
    # reference value from 40-digit mpmath differentiation
    expr = parse_expression("exp(0.5*sin(pow(1.25 + sin((y2)^3), 1.5)))", 2)
    p = EvalPoint((-0.41142464285441016, -0.654278176210342), (0.8220652186669195, 1.411548657571717))
    ref = -1410.921219854403154837
    idx = (0, 0, 0, 3)
    assert jet_extract(evaluate(expr, p, 3), idx) == pytest.approx(ref, rel=1e-12)
    assert abs(fd_derivative(as_function(expr), p, idx) - ref) <= 1e-5 * (1 + abs(ref))


def test_explicit_step_is_used_as_given():
    f = lambda x, y: y[0] ** 5
    p = EvalPoint((0, 0), (1, 1))
    # one Richardson level leaves an O(h**4) error, visible at a large explicit step
    coarse = fd_derivative(f, p, (0, 0, 1, 0), h=0.2)
    assert coarse != pytest.approx(5.0, abs=1e-6)
    assert coarse == pytest.approx(5.0, abs=1e-2)


@settings(max_examples=30)
@given(expressions(depth=2), multi_indices(max_degree=4, min_degree=4), points())
def test_jet_matches_fd_fourth_order(text, idx, point):
    expr = parse_expression(text, 2)
    jet = jet_extract(evaluate(expr, point, 4), idx)
    fd = fd_derivative(as_function(expr), point, idx)
    assert abs(fd - jet) <= 1e-5 * (1 + abs(jet))
