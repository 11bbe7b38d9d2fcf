"""Quadrature rules on the reference triangle and on edges.

Points are stored as barycentric coordinates and weights are normalized to
sum to one, so a physical integral is ``measure * sum(w_q * f(x_q))``.
"""

import numpy as np

# Dunavant 6-point rule, exact for polynomials of total degree <= 4.
_A1 = 0.445948490915965
_A2 = 0.091576213509771
_W1 = 0.223381589678011
_W2 = 0.109951743655322

TRI_DEGREE4_POINTS = np.array(
    [
        [1.0 - 2.0 * _A1, _A1, _A1],
        [_A1, 1.0 - 2.0 * _A1, _A1],
        [_A1, _A1, 1.0 - 2.0 * _A1],
        [1.0 - 2.0 * _A2, _A2, _A2],
        [_A2, 1.0 - 2.0 * _A2, _A2],
        [_A2, _A2, 1.0 - 2.0 * _A2],
    ]
)
TRI_DEGREE4_WEIGHTS = np.array([_W1, _W1, _W1, _W2, _W2, _W2])

# Dunavant 12-point rule, exact for degree <= 6; used for error integrals.
_B1 = 0.063089014491502
_B2 = 0.249286745170910
_B3a = 0.310352451033785
_B3b = 0.053145049844816
_V1 = 0.050844906370207
_V2 = 0.116786275726379
_V3 = 0.082851075618374


def _sym3(a):
    return [
        [1.0 - 2.0 * a, a, a],
        [a, 1.0 - 2.0 * a, a],
        [a, a, 1.0 - 2.0 * a],
    ]


def _perm6(a, b):
    c = 1.0 - a - b
    return [[c, a, b], [c, b, a], [a, c, b], [b, c, a], [a, b, c], [b, a, c]]


TRI_DEGREE6_POINTS = np.array(_sym3(_B1) + _sym3(_B2) + _perm6(_B3a, _B3b))
TRI_DEGREE6_WEIGHTS = np.array([_V1] * 3 + [_V2] * 3 + [_V3] * 6)

# 3-point Gauss-Legendre on [0, 1], exact for degree <= 5.
_G = 0.5 * np.sqrt(0.6)
EDGE_GAUSS3_POINTS = np.array([0.5 - _G, 0.5, 0.5 + _G])
EDGE_GAUSS3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


def reference_triangle_monomial_integral(a: int, b: int) -> float:
    """Exact value of the integral of x^a y^b over the unit reference triangle."""
    from math import factorial

    return factorial(a) * factorial(b) / factorial(a + b + 2)


def triangle_rule(degree: int):
    """Return (barycentric points, weights) exact for the given polynomial degree."""
    if degree <= 4:
        return TRI_DEGREE4_POINTS, TRI_DEGREE4_WEIGHTS
    if degree <= 6:
        return TRI_DEGREE6_POINTS, TRI_DEGREE6_WEIGHTS
    raise ValueError(f"no triangle rule available for degree {degree}")
