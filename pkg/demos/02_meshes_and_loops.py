"""Built-in geometries, edge elements, and the solenoidal loop space.

Every closed triangulation carries one edge element (RWG function) per
edge.  The divergence-free subspace is spanned by one loop per vertex
(minus one global redundancy) plus two extra generators per handle, so
its dimension N_l = V - 1 + 2g detects the genus.  The static limit of
the hypersingular operator annihilates exactly this subspace, which is
what produces the unit-eigenvalue clusters in the stability analysis.
"""

import numpy as np

from motstab.basis import build_loop_space, build_rwg
from motstab.geometry import (
    make_icosphere,
    make_nasa_almond,
    make_star_pyramid,
    make_torus,
)

shapes = [
    ("icosphere(0)", make_icosphere(0)),
    ("icosphere(1)", make_icosphere(1)),
    ("icosphere(2)", make_icosphere(2)),
    ("torus 8x4", make_torus(2.0, 0.7, 8, 4)),
    ("torus 16x8", make_torus(2.0, 0.7, 16, 8)),
    ("almond", make_nasa_almond(0.3, target_faces=100)),
    ("star pyramid", make_star_pyramid(1.0, 1.0, 0.4, 24)),
]

print(f"{'shape':>14} {'V':>5} {'E':>5} {'F':>5} {'chi':>4} "
      f"{'genus':>5} {'N_l':>5} {'V-1+2g':>6}")
for name, mesh in shapes:
    chi = mesh.n_vertices - mesh.n_edges + mesh.n_faces
    genus = (2 - chi) // 2
    loops = build_loop_space(mesh)
    want = mesh.n_vertices - 1 + 2 * genus
    print(f"{name:>14} {mesh.n_vertices:>5} {mesh.n_edges:>5} "
          f"{mesh.n_faces:>5} {chi:>4} {genus:>5} "
          f"{loops.dimension:>5} {want:>6}")

print("\nEvery loop is exactly divergence-free face by face.  Worst")
print("per-face divergence over all loops of the coarse torus:")
torus = make_torus(2.0, 0.7, 8, 4)
space = build_rwg(torus)
loops = build_loop_space(torus, space)
div = np.zeros((torus.n_faces, torus.n_edges))
for f in range(torus.n_faces):
    for s in range(3):
        div[f, space.slot_edge[f, s]] += space.slot_div[f, s]
worst = np.abs(div @ loops.coefficients.T).max()
print(f"  {worst:.2e} (the two handle generators are loops too)")
