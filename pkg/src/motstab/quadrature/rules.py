"""Quadrature rules on the reference triangle.

The catalog is a fixed family of rules with strictly positive weights and
points strictly inside the triangle.  Small counts are classical symmetric
rules; larger counts are tensor-product Gauss-Legendre rules collapsed onto
the triangle through the Duffy map ``(u, v) = (xi, eta (1 - xi))``, which
keeps all weights positive at any order.  An ``n x n`` collapsed rule is
exact for total degree ``2 n - 2``.

Weights are normalized to sum to one: an integral over a physical triangle
is ``area * sum(w_i * f(p_i))``.

The 13-point entry is a degree-6 rule determined here once by solving the
symmetric moment equations (centroid + two 3-orbits + one 6-orbit) inside
the one-parameter family that has all weights positive; the classical
13-point degree-7 rule is unusable under the positivity requirement because
its centroid weight is negative.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

logger = logging.getLogger(__name__)

__all__ = ["TriangleRule", "triangle_rule", "RULE_SIZES"]


@dataclass(frozen=True)
class TriangleRule:
    """A quadrature rule in barycentric coordinates.

    Attributes
    ----------
    barycentric : (n, 3) array
        Barycentric coordinates of the nodes; all strictly positive.
    weights : (n,) array
        Positive weights summing to 1 (reference-triangle measure).
    degree : int
        Highest total polynomial degree integrated exactly.
    n_points : int
        Realized node count (may differ from the requested count).
    """

    barycentric: np.ndarray
    weights: np.ndarray
    degree: int
    n_points: int

    def points(self, triangle: np.ndarray) -> np.ndarray:
        """Map the nodes onto a physical triangle given as (3, 3) vertices."""
        return self.barycentric @ triangle


def _orbit3(a: float) -> np.ndarray:
    return np.array([[a, a, 1 - 2 * a], [a, 1 - 2 * a, a], [1 - 2 * a, a, a]])


def _orbit6(a: float, b: float) -> np.ndarray:
    c = 1.0 - a - b
    return np.array(
        [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]]
    )


def _collapsed(n: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Duffy-collapsed n x n Gauss-Legendre rule; degree 2n - 2."""
    x, w = np.polynomial.legendre.leggauss(n)
    xi = 0.5 * (x + 1.0)
    wx = 0.5 * w
    XI, ETA = np.meshgrid(xi, xi, indexing="ij")
    WX, WE = np.meshgrid(wx, wx, indexing="ij")
    u = XI.ravel()
    v = (ETA * (1.0 - XI)).ravel()
    wts = (2.0 * WX * WE * (1.0 - XI)).ravel()
    bary = np.column_stack([1.0 - u - v, u, v])
    return bary, wts, 2 * n - 2


# 13-point degree-6 rule with positive weights (see module docstring);
# parameters solved to 40 significant digits and rounded to double.
_W13_0 = 0.13065009988901366
_W13_1, _A13_1 = 0.09378500786774894, 0.47520210378067685
_W13_2, _A13_2 = 0.13284040165730285, 0.18390503515862639
_W13_3, _A13_3, _B13_3 = 0.031578945255971826, 0.13676377685528798, 0.007022163744807964


def _catalog_entry(size: int) -> tuple[np.ndarray, np.ndarray, int]:
    if size == 1:
        return np.array([[1, 1, 1]]) / 3.0, np.array([1.0]), 1
    if size == 3:
        return _orbit3(1.0 / 6.0), np.full(3, 1.0 / 3.0), 2
    if size == 4:
        return _collapsed(2)
    if size == 6:
        bary = np.vstack([_orbit3(0.445948490915965), _orbit3(0.091576213509771)])
        w = np.concatenate(
            [np.full(3, 0.223381589678011), np.full(3, 0.109951743655322)]
        )
        return bary, w, 4
    if size == 7:
        bary = np.vstack(
            [
                np.array([[1, 1, 1]]) / 3.0,
                _orbit3(0.470142064105115),
                _orbit3(0.101286507323456),
            ]
        )
        w = np.concatenate(
            [[9.0 / 40.0], np.full(3, 0.132394152788506), np.full(3, 0.125939180544827)]
        )
        return bary, w, 5
    if size == 12:
        bary = np.vstack(
            [
                _orbit3(0.063089014491502),
                _orbit3(0.249286745170910),
                _orbit6(0.310352451033785, 0.053145049844816),
            ]
        )
        w = np.concatenate(
            [
                np.full(3, 0.050844906370207),
                np.full(3, 0.116786275726379),
                np.full(6, 0.082851075618374),
            ]
        )
        return bary, w, 6
    if size == 13:
        bary = np.vstack(
            [
                np.array([[1, 1, 1]]) / 3.0,
                _orbit3(_A13_1),
                _orbit3(_A13_2),
                _orbit6(_A13_3, _B13_3),
            ]
        )
        w = np.concatenate(
            [[_W13_0], np.full(3, _W13_1), np.full(3, _W13_2), np.full(6, _W13_3)]
        )
        return bary, w, 6
    if size == 16:
        return _collapsed(4)
    if size == 25:
        return _collapsed(5)
    if size == 81:
        return _collapsed(9)
    if size == 400:
        return _collapsed(20)
    raise KeyError(size)


#: Available node counts, ascending.
RULE_SIZES = (1, 3, 4, 6, 7, 12, 13, 16, 25, 81, 400)


@lru_cache(maxsize=None)
def triangle_rule(n_points: int) -> TriangleRule:
    """Return the catalog rule with the smallest node count >= ``n_points``.

    If the exact count is not in the catalog the next larger one is
    substituted and the substitution logged; the realized count is in the
    returned rule.  Requests beyond the largest entry (400) are rejected.
    """
    if n_points < 1:
        raise ValueError("n_points must be >= 1")
    for size in RULE_SIZES:
        if size >= n_points:
            break
    else:
        raise ValueError(
            f"no catalog rule with >= {n_points} points (largest is {RULE_SIZES[-1]})"
        )
    if size != n_points:
        logger.info("quadrature request %d mapped to %d-point rule", n_points, size)
    bary, w, degree = _catalog_entry(size)
    bary = np.ascontiguousarray(bary, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if np.any(w <= 0.0) or np.any(bary <= 0.0):
        raise AssertionError(f"catalog rule {size} violates positivity")
    return TriangleRule(bary, w, degree, len(w))
