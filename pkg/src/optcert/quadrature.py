"""Quadrature rules on triangles, stored in barycentric coordinates.

Weights are normalized to sum to one; multiply by the triangle area at use.
"""
from dataclasses import dataclass
from functools import lru_cache
from itertools import permutations

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (nq, 3) barycentric coordinates
    weights: np.ndarray  # (nq,), sum to 1
    degree: int
    name: str = ""

    def __len__(self):
        return len(self.weights)


def _orbit3(a):
    b = 1.0 - 2.0 * a
    return [(a, a, b), (a, b, a), (b, a, a)]


def _orbit6(a, b):
    c = 1.0 - a - b
    return sorted(set(permutations((a, b, c))))


@lru_cache(maxsize=None)
def dunavant8():
    """Symmetric 16-point rule of exactness degree 8 (Dunavant 1985).

    Orbit parameters were re-solved from the moment equations in 50-digit
    arithmetic so that the rule is exact to full double precision.
    """
    pts = [(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)]
    wts = [0.14431560767778716825]
    for w, a in (
        (0.28527490280185387438, 0.45929258829272315603),
        (0.30965211160415475085, 0.17056930775176020662),
        (0.097375492869594240933, 0.050547228317030975458),
    ):
        pts += _orbit3(a)
        wts += [w / 3.0] * 3
    six = _orbit6(0.0083947774099576053372, 0.26311282963463811342)
    pts += six
    wts += [0.16338188504660996559 / 6.0] * 6
    return QuadratureRule(np.array(pts), np.array(wts), 8, "dunavant8")


@lru_cache(maxsize=None)
def conical(degree):
    """Collapsed Gauss-Jacobi x Gauss-Legendre product rule of any degree."""
    m = max(1, (degree + 2) // 2)
    xj, wj = roots_jacobi(m, 1.0, 0.0)
    xl, wl = roots_legendre(m)
    t = 0.5 * (xj + 1.0)
    s = 0.5 * (xl + 1.0)
    T, S = np.meshgrid(t, s, indexing="ij")
    l1 = T.ravel()
    l2 = (S * (1.0 - T)).ravel()
    l3 = 1.0 - l1 - l2
    w = (np.outer(wj, wl) / 4.0).ravel()
    return QuadratureRule(np.column_stack([l1, l2, l3]), w, degree, f"conical{degree}")


@lru_cache(maxsize=None)
def centroid_rule():
    """One-point rule at the centroid, degree 1."""
    return QuadratureRule(np.full((1, 3), 1.0 / 3.0), np.ones(1), 1, "centroid")


def vertex_rule():
    """Degree-1 nodal rule (trapezoidal on triangles)."""
    return QuadratureRule(np.eye(3), np.full(3, 1.0 / 3.0), 1, "vertex")


def rule_for_degree(degree):
    """Cheapest available rule with exactness at least ``degree``."""
    if degree <= 8:
        return dunavant8()
    return conical(int(np.ceil(degree)))


DEFAULT_RULE = dunavant8
