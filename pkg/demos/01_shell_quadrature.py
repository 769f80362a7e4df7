"""Shell-restricted triangle integrals, the kernel evaluations everything
else is built from.

A retarded-time kernel only sees the part of a source triangle between
two distances from the observation point.  Standard triangle rules know
nothing about such annular cuts, so the package evaluates the moments

    I_p = integral over {y in T : r_lo <= |x - y| <= r_hi} of R^p dA,
    R = |x - y|,

with the cut geometry handled exactly (plus distance- and edge-element
weighted variants).  This script compares a few of them against the slow
adaptive oracle used in the tests.
"""

import numpy as np

from motstab.quadrature import oracle_adaptive_integral, shell_restricted_integral

rng = np.random.default_rng(7)
triangle = rng.standard_normal((3, 3))
x = rng.standard_normal(3) * 1.5

dists = np.linalg.norm(triangle - x, axis=1)
d0, d = dists.min(), dists.max()
print("triangle vertices:")
print(np.array_str(triangle, precision=3))
print(f"observation point {np.array_str(x, precision=3)}, "
      f"distance range [{d0:.3f}, {d:.3f}]\n")

cuts = np.linspace(0.9 * d0, 1.05 * d, 4)
print(f"{'p':>3} {'shell':>20} {'fast':>14} {'oracle':>14} {'rel err':>9}")
for p in (-2, -1, 0):
    for lo, hi in zip(cuts, cuts[1:]):
        got = shell_restricted_integral(x, triangle, p, lo, hi)
        ref = oracle_adaptive_integral(x, triangle, p, lo, hi)
        rel = abs(got - ref) / max(abs(ref), 1e-300)
        print(f"{p:>3} [{lo:8.3f},{hi:8.3f}] {got:14.6e} {ref:14.6e} {rel:9.1e}")

print("\nA shell covering the whole triangle reproduces the plain integral;")
print("an empty shell (above every vertex distance) gives exactly zero:")
print(f"  full  : {shell_restricted_integral(x, triangle, -1, 0.0, np.inf):.6e}")
print(f"  empty : {shell_restricted_integral(x, triangle, -1, 2 * d, 3 * d):.6e}")

print("\nThe same machinery produces the distance-weighted moments used by")
print("the magnetic-type kernel:")
vec = shell_restricted_integral(x, triangle, -3, 0.3 * d, d, moment="distance")
print(f"  (x - y) R^-3 over a mid shell: {np.array_str(vec, precision=6)}")
