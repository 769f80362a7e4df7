"""Marching a plane-wave pulse across a sphere, step by step.

The time-domain boundary equations discretize into a recursion

    Z_0 u_i = r_i - sum_k Z_k u_{i-k} - Z_inf * (running older sum),

with one interaction matrix per retardation slice.  This script drives
both formulations with the same Gaussian plane wave on the coarse
sphere and fits the late-time growth of the solution norms, which is
where instability shows up first.
"""

import numpy as np

from motstab.assembly import (
    Medium,
    TemporalBasis,
    assemble_efie_slices,
    assemble_pmchwt_slices,
)
from motstab.basis import build_rwg
from motstab.geometry import make_icosphere
from motstab.mot import PlaneWaveExcitation, estimate_growth_rate, excitation_rhs, march

mesh = make_icosphere(0)
space = build_rwg(mesh)
dt = 0.8
n_steps = 300
wave = PlaneWaveExcitation(
    direction=(0.0, 0.0, 1.0),
    polarization=(1.0, 0.0, 0.0),
    width=3.0,
    delay=9.0,
)

for label, system in (
    ("single interface (conducting)",
     assemble_efie_slices(mesh, dt, 4, space=space)),
    ("transmission (contrast 2)",
     assemble_pmchwt_slices(mesh, dt, 4, interior=Medium(2.0, 1.0),
                            space=space)),
):
    rhs = excitation_rhs(
        wave, mesh, space, TemporalBasis(dt), system.media[0],
        system.formulation, n_steps,
    )
    result = march(system, rhs)
    fit = estimate_growth_rate(result)
    print(f"{label}: {system.n_functions} unknowns, "
          f"history {system.history} slices")
    for i in (9, 19, 49, 99, 199, 299):
        print(f"  step {i + 1:>3}  t = {(i + 1) * dt:6.1f}  "
              f"|u| = {result.norms[i]:.6e}")
    print(f"  late-time growth per step: {fit.ratio:.6f} "
          f"(fit over {fit.n_points} steps)\n")

print("A growth ratio above 1 means the recursion amplifies whatever")
print("round-off lands in the unstable mode: the transmission problem at")
print("4-point quadrature grows, the conducting one sits at 1 within")
print("fitting noise.")
