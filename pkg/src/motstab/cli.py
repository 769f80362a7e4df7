"""Command-line front end.

Subcommands mirror the pipeline: ``mesh`` writes geometry, ``assemble``
writes interaction slices, ``march`` runs the time recursion against a
plane-wave excitation, ``spectrum`` eigendecomposes the companion
matrix, ``sweep`` drives configured experiments, and ``verify`` runs
built-in self checks.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .assembly import (
    Medium,
    TemporalBasis,
    _mesh_token,
    assemble_efie_slices,
    assemble_pmchwt_slices,
    load_slices,
    save_slices,
)
from .basis import build_loop_space, build_rwg
from .cmsa import (
    build_companion,
    quadrature_error_sigma,
    quadrature_error_singular,
    spectrum,
    verify_eigenvector_structure,
)
from .geometry import (
    load_mesh,
    make_icosphere,
    make_nasa_almond,
    make_star_pyramid,
    make_torus,
    save_mesh,
)
from .harness import EXPERIMENTS, ExperimentConfig
from .mot import PlaneWaveExcitation, excitation_rhs, march
from .quadrature import oracle_deviation_sweep


def _vec3(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected x,y,z - got {text!r}")
    return np.array([float(p) for p in parts])


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# handlers


def _cmd_mesh(args) -> int:
    if args.shape == "icosphere":
        mesh = make_icosphere(args.subdivisions, args.radius)
    elif args.shape == "torus":
        mesh = make_torus(
            args.major_radius, args.minor_radius, args.n_major, args.n_minor
        )
    elif args.shape == "almond":
        mesh = make_nasa_almond(args.scale, args.target_faces)
    else:
        mesh = make_star_pyramid(
            args.height, args.outer_radius, args.inner_radius, args.n_points
        )
    save_mesh(args.output, mesh)
    print(
        f"{args.shape}: {mesh.n_vertices} vertices, {mesh.n_edges} edges, "
        f"{mesh.n_faces} faces -> {args.output}"
    )
    return 0


def _interior_default(formulation: str, eps_r, mu_r) -> Medium:
    if eps_r is None:
        eps_r = 2.0 if formulation == "pmchwt" else 1.0
    if mu_r is None:
        mu_r = 1.0
    return Medium(eps_r, mu_r)


def _cmd_assemble(args) -> int:
    mesh = load_mesh(args.mesh)
    if args.formulation == "efie":
        system = assemble_efie_slices(
            mesh, args.dt, args.nq,
            medium=_interior_default("efie", args.eps_r, args.mu_r),
        )
    else:
        system = assemble_pmchwt_slices(
            mesh, args.dt, args.nq,
            interior=_interior_default("pmchwt", args.eps_r, args.mu_r),
        )
    save_slices(args.output, system)
    print(
        f"{args.formulation}: {system.n_functions} unknowns, "
        f"history {system.history}, dt {args.dt} -> {args.output}"
    )
    return 0


def _check_mesh_id(system, mesh, mesh_path) -> None:
    # The slice format stores no mesh identity, so files can only be
    # checked by size; in-process systems still carry the content hash.
    per_mesh = mesh.n_edges * (2 if system.formulation == "pmchwt" else 1)
    if system.n_functions != per_mesh:
        raise SystemExit(
            f"{mesh_path} has {mesh.n_edges} edges; the slices were "
            f"assembled for {system.n_functions} unknowns"
        )
    if system.mesh_id and system.mesh_id != _mesh_token(mesh):
        raise SystemExit(
            f"{mesh_path} is not the mesh these slices were assembled on"
        )


def _cmd_march(args) -> int:
    system = load_slices(args.slices)
    mesh = load_mesh(args.mesh)
    _check_mesh_id(system, mesh, args.mesh)
    space = build_rwg(mesh)
    width = args.width if args.width is not None else 4.0 * system.dt
    delay = args.delay if args.delay is not None else 3.0 * width
    wave = PlaneWaveExcitation(
        direction=args.direction,
        polarization=args.polarization,
        amplitude=args.e0,
        width=width,
        delay=delay,
        frequency=args.freq,
    )
    rhs = excitation_rhs(
        wave, mesh, space, TemporalBasis(system.dt), system.media[0],
        system.formulation, args.steps,
    )
    result = march(system, rhs)
    norm_j, norm_m = result.block_norms()
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "time_s", "norm_u", "norm_j", "norm_m"])
        for i in range(result.n_steps):
            writer.writerow([
                i + 1,
                _fmt((i + 1) * system.dt),
                _fmt(result.norms[i]),
                _fmt(norm_j[i]),
                _fmt(norm_m[i]) if norm_m is not None else "",
            ])
    print(f"{result.n_steps} steps -> {args.output}")
    return 0


def _cmd_spectrum(args) -> int:
    system = load_slices(args.slices)
    companion = build_companion(system)
    sigma = sigma_svd = None
    if args.reference is not None:
        reference = build_companion(load_slices(args.reference))
        sigma = quadrature_error_sigma(companion, reference)
        sigma_svd = quadrature_error_singular(companion, reference)
    report = spectrum(companion, sigma=sigma)
    with open(args.output, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["re", "im", "abs", "dist_to_one"])
        for lam in report.eigenvalues:
            writer.writerow([
                _fmt(lam.real), _fmt(lam.imag),
                _fmt(abs(lam)), _fmt(abs(lam - 1.0)),
            ])
    residuals = None
    if args.mesh is not None:
        mesh = load_mesh(args.mesh)
        _check_mesh_id(system, mesh, args.mesh)
        ev = verify_eigenvector_structure(companion, build_loop_space(mesh))
        residuals = {
            "max_ordinary": ev.max_ordinary,
            "max_jordan": ev.max_jordan,
            "min_jordan": ev.min_jordan,
        }
    summary = {
        "formulation": companion.formulation,
        "dimension": companion.dimension,
        "delta": report.delta,
        "spectral_radius": report.spectral_radius,
        "sigma": sigma,
        "sigma_singular": sigma_svd,
        "n_trivial": report.n_trivial,
        "n_p": report.n_cluster,
        "thresholds": {
            "r_trivial": report.r_trivial,
            "r_cluster": report.r_cluster,
        },
        "residuals": residuals,
    }
    summary_path = (
        Path(args.summary) if args.summary is not None
        else Path(args.output).with_suffix(".summary.json")
    )
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(
        f"delta {report.delta:+.6e}, {report.n_trivial} trivial, "
        f"{report.n_cluster} clustered -> {args.output}, {summary_path}"
    )
    return 0


def _cmd_sweep(args) -> int:
    config = ExperimentConfig.from_toml(args.config)
    for name in config.experiments:
        path = EXPERIMENTS[name](config)
        print(f"{name} -> {path}")
    return 0


def _cmd_verify(args) -> int:
    if args.quadrature:
        worst = oracle_deviation_sweep(args.samples, args.seed)
        print(f"quadrature: max relative deviation {worst:.3e} "
              f"over {args.samples} shell integrals")
        return 0 if worst <= 1e-10 else 1
    mesh = load_mesh(args.mesh)
    loops = build_loop_space(mesh)
    space = build_rwg(mesh)
    residual = _loop_divergence_residual(mesh, space, loops)
    rank = np.linalg.matrix_rank(loops.coefficients)
    print(
        f"loops: N_l {loops.dimension}, coefficient rank {rank}, "
        f"max divergence residual {residual:.3e}"
    )
    return 0 if rank == loops.dimension and residual <= 1e-10 else 1


def _loop_divergence_residual(mesh, space, loops) -> float:
    charge = np.zeros((mesh.n_faces, loops.dimension))
    slots = (space.plus_face, space.minus_face)
    for column in range(2):
        for edge in range(space.n_functions):
            face = slots[column][edge]
            sign = 1.0 if column == 0 else -1.0
            charge[face] += (
                sign
                * space.lengths[edge]
                / mesh.areas[face]
                * loops.coefficients[:, edge]
            )
    scale = np.abs(loops.coefficients).max()
    return float(np.abs(charge).max() / scale)


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="motstab",
        description="Time-domain boundary-element marching and stability analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    mesh = sub.add_parser("mesh", help="generate a triangle mesh")
    mesh.add_argument("--shape", required=True,
                      choices=["icosphere", "torus", "almond", "star-pyramid"])
    mesh.add_argument("--subdivisions", type=int, default=1)
    mesh.add_argument("--radius", type=float, default=1.0)
    mesh.add_argument("--major-radius", type=float, default=2.0)
    mesh.add_argument("--minor-radius", type=float, default=0.7)
    mesh.add_argument("--n-major", type=int, default=8)
    mesh.add_argument("--n-minor", type=int, default=4)
    mesh.add_argument("--scale", type=float, default=1.0)
    mesh.add_argument("--target-faces", type=int, default=200)
    mesh.add_argument("--height", type=float, default=1.0)
    mesh.add_argument("--outer-radius", type=float, default=1.0)
    mesh.add_argument("--inner-radius", type=float, default=0.4)
    mesh.add_argument("--n-points", type=int, default=24)
    mesh.add_argument("-o", "--output", required=True)
    mesh.set_defaults(func=_cmd_mesh)

    asm = sub.add_parser("assemble", help="assemble marching matrices")
    asm.add_argument("--mesh", required=True)
    asm.add_argument("--formulation", required=True, choices=["efie", "pmchwt"])
    asm.add_argument("--dt", type=float, required=True)
    asm.add_argument("--nq", type=int, required=True)
    asm.add_argument("--eps-r", type=float, default=None)
    asm.add_argument("--mu-r", type=float, default=None)
    asm.add_argument("-o", "--output", required=True)
    asm.set_defaults(func=_cmd_assemble)

    mar = sub.add_parser("march", help="run the marching recursion")
    mar.add_argument("--slices", required=True)
    mar.add_argument("--mesh", required=True,
                     help="mesh the slices were assembled on")
    mar.add_argument("--steps", type=int, required=True)
    mar.add_argument("--e0", type=float, default=1.0)
    mar.add_argument("--dir", dest="direction", type=_vec3,
                     default=np.array([0.0, 0.0, 1.0]))
    mar.add_argument("--pol", dest="polarization", type=_vec3,
                     default=np.array([1.0, 0.0, 0.0]))
    mar.add_argument("--width", type=float, default=None,
                     help="Gaussian width (default 4 dt)")
    mar.add_argument("--delay", type=float, default=None,
                     help="pulse delay (default 3 widths)")
    mar.add_argument("--freq", type=float, default=0.0)
    mar.add_argument("-o", "--output", required=True)
    mar.set_defaults(func=_cmd_march)

    spec = sub.add_parser("spectrum", help="companion-matrix eigenanalysis")
    spec.add_argument("--slices", required=True)
    spec.add_argument("--reference", default=None,
                      help="reference slices for the quadrature error")
    spec.add_argument("--mesh", default=None,
                      help="mesh file, enables eigenvector residuals")
    spec.add_argument("--summary", default=None,
                      help="summary JSON path (default: alongside the CSV)")
    spec.add_argument("-o", "--output", required=True)
    spec.set_defaults(func=_cmd_spectrum)

    swp = sub.add_parser("sweep", help="run configured experiments")
    swp.add_argument("--config", required=True)
    swp.set_defaults(func=_cmd_sweep)

    ver = sub.add_parser("verify", help="built-in self checks")
    which = ver.add_mutually_exclusive_group(required=True)
    which.add_argument("--quadrature", action="store_true",
                       help="cross-check shell integrals against the oracle")
    which.add_argument("--loops", action="store_true",
                       help="check the solenoidal space of --mesh")
    ver.add_argument("--mesh", default=None)
    ver.add_argument("--samples", type=int, default=200)
    ver.add_argument("--seed", type=int, default=0)
    ver.set_defaults(func=_cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "verify" and args.loops and args.mesh is None:
        parser.error("--loops requires --mesh")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
