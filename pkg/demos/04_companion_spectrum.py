"""Reading a marching recursion's fate from its companion matrix.

Stacking the stored history turns the recursion into one linear update
x_{i+1} = Q x_i.  The update is stable exactly when every eigenvalue of
Q sits inside the unit circle -- except for an exact cluster at +1 (two
static solenoidal modes per loop for the transmission problem) that a
correct discretization must reproduce.  Quadrature error perturbs that
cluster outward; the shift delta = rho(Q) - 1 is the instability rate.
"""

import numpy as np

from motstab.assembly import Medium, assemble_pmchwt_slices
from motstab.basis import build_loop_space
from motstab.cmsa import build_companion, quadrature_error_sigma, spectrum
from motstab.geometry import make_icosphere

mesh = make_icosphere(0)
loops = build_loop_space(mesh)
dt = 0.8

reference = build_companion(
    assemble_pmchwt_slices(mesh, dt, 81, interior=Medium(2.0, 1.0))
)
companion = build_companion(
    assemble_pmchwt_slices(mesh, dt, 4, interior=Medium(2.0, 1.0))
)
print(f"companion dimension {companion.dimension} "
      f"(history {companion.history} blocks of {companion.block_size})")

sigma = quadrature_error_sigma(companion, reference)
report = spectrum(companion, sigma=sigma)

print(f"\nquadrature error sigma          : {sigma:.3e}")
print(f"eigenvalue shift delta          : {report.delta:+.3e}")
print(f"spectral radius                 : {report.spectral_radius:.6f}")
print(f"eigenvalues within 1e-8 of +1   : {report.n_trivial} "
      f"(2 N_l = {2 * loops.dimension})")
print(f"cluster within 10 sigma of +1   : {report.n_cluster}")

lam = report.eigenvalues
order = np.argsort(-np.abs(lam))
print("\nsix largest-modulus eigenvalues:")
for i in order[:6]:
    print(f"  {lam[i].real:+.6f} {lam[i].imag:+.6f}j   "
          f"|lambda| = {abs(lam[i]):.6f}")

outside = int((np.abs(lam) > 1.0 + 1e-12).sum())
print(f"\n{outside} eigenvalues outside the unit circle -- each one is a")
print("mode the march amplifies by its modulus every step.  The same")
print("analysis against the 81-point assembly gives a sigma near zero and")
print("the cluster collapses back onto +1.")
