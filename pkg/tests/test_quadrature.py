import numpy as np
import pytest

from crossflow.quadrature import (
    EDGE_GAUSS3_POINTS,
    EDGE_GAUSS3_WEIGHTS,
    TRI_DEGREE4_POINTS,
    TRI_DEGREE4_WEIGHTS,
    TRI_DEGREE6_POINTS,
    TRI_DEGREE6_WEIGHTS,
    reference_triangle_monomial_integral,
    triangle_rule,
)

# Reference triangle (0,0)-(1,0)-(0,1): x = lambda_1, y = lambda_2, area 1/2.


def _integrate_monomial(points, weights, a, b):
    x = points[:, 1]
    y = points[:, 2]
    return 0.5 * np.sum(weights * x**a * y**b)


@pytest.mark.parametrize("a,b", [(a, b) for a in range(5) for b in range(5 - a)])
def test_degree4_rule_exact_on_monomials(a, b):
    exact = reference_triangle_monomial_integral(a, b)
    approx = _integrate_monomial(TRI_DEGREE4_POINTS, TRI_DEGREE4_WEIGHTS, a, b)
    assert abs(approx - exact) <= 1e-12 * abs(exact)


@pytest.mark.parametrize("a,b", [(a, b) for a in range(7) for b in range(7 - a)])
def test_degree6_rule_exact_on_monomials(a, b):
    exact = reference_triangle_monomial_integral(a, b)
    approx = _integrate_monomial(TRI_DEGREE6_POINTS, TRI_DEGREE6_WEIGHTS, a, b)
    assert abs(approx - exact) <= 1e-12 * abs(exact)


def test_weights_normalized():
    assert abs(TRI_DEGREE4_WEIGHTS.sum() - 1.0) < 1e-14
    assert abs(TRI_DEGREE6_WEIGHTS.sum() - 1.0) < 1e-14
    assert abs(EDGE_GAUSS3_WEIGHTS.sum() - 1.0) < 1e-14


@pytest.mark.parametrize("k", range(6))
def test_edge_rule_exact_to_degree5(k):
    exact = 1.0 / (k + 1)
    approx = np.sum(EDGE_GAUSS3_WEIGHTS * EDGE_GAUSS3_POINTS**k)
    assert abs(approx - exact) < 1e-14


def test_rule_selection():
    pts, _ = triangle_rule(2)
    assert len(pts) == 6
    pts, _ = triangle_rule(6)
    assert len(pts) == 12
    with pytest.raises(ValueError):
        triangle_rule(9)
