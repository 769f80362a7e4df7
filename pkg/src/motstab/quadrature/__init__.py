"""Numerical and semi-analytic integration over triangles.

Three layers live here:

``rules``
    A fixed catalog of symmetric / collapsed tensor-product Gauss rules on
    the reference triangle, used for the outer (test) integrals.

``shell``
    Closed-form evaluation of radially windowed kernel moments
    ``int R^p`` and ``int (x - y) R^p`` over the intersection of a source
    triangle with a spherical shell ``R1 <= |x - y| <= R2``.  These are the
    inner integrals of every retarded-kernel matrix element.

``oracle``
    An independent adaptive reference integrator for the same queries,
    used to validate the closed forms and available for regression tests.
"""

from .rules import TriangleRule, triangle_rule, RULE_SIZES
from .shell import (
    ShellKernelQuery,
    shell_restricted_integral,
    shell_moments_batch,
    quadrature_stats,
)
from .oracle import oracle_adaptive_integral, oracle_deviation_sweep

__all__ = [
    "TriangleRule",
    "triangle_rule",
    "RULE_SIZES",
    "ShellKernelQuery",
    "shell_restricted_integral",
    "shell_moments_batch",
    "quadrature_stats",
    "oracle_adaptive_integral",
    "oracle_deviation_sweep",
]
