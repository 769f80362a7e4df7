"""Experiment drivers: spectral sweeps over quadrature, time step,
mesh size, material contrast and geometry, with CSV emission.

Every run writes its table next to a provenance sidecar (the full
configuration echo) and a summary JSON with the aggregate quantities, so
a result file can always be traced back to the exact run that made it.
Runs are deterministic: re-running a configuration reproduces the files
bit for bit.
"""

from __future__ import annotations

import csv
import json

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .assembly import (
    Medium,
    TemporalBasis,
    assemble_efie_slices,
    assemble_pmchwt_slices,
)
from .basis import build_loop_space, build_rwg
from .cmsa import (
    build_companion,
    quadrature_error_sigma,
    spectral_radius_arnoldi,
    spectrum,
)

from .geometry import (
    TriangleMesh,
    load_mesh,
    make_icosphere,
    make_nasa_almond,
    make_star_pyramid,
    make_torus,
)
from .mot import PlaneWaveExcitation, estimate_growth_rate, excitation_rhs, march

# Dense eigensolves above this dimension take minutes on one core; the h
# sweep only needs the dominant modulus, so it switches to Arnoldi there.
DENSE_BUDGET = 2000

DEFAULT_EXCITATION = {
    "direction": (0.0, 0.0, 1.0),
    "polarization": (1.0, 0.0, 0.0),
    "amplitude": 1.0,
    "width": 4.0,
    "delay": 12.0,
    "frequency": 0.0,
}


def build_geometry(spec: dict) -> TriangleMesh:
    """Construct a mesh from a declarative geometry table."""
    spec = dict(spec)
    if "path" in spec:
        return load_mesh(spec["path"])
    shape = spec.pop("shape", None)
    if shape == "icosphere":
        return make_icosphere(
            spec.get("subdivisions", 1), spec.get("radius", 1.0)
        )
    if shape == "torus":
        return make_torus(
            spec.get("major_radius", 2.0),
            spec.get("minor_radius", 0.7),
            spec.get("n_major", 8),
            spec.get("n_minor", 4),
        )
    if shape == "almond":
        return make_nasa_almond(
            spec.get("scale", 1.0), spec.get("target_faces", 200)
        )
    if shape == "star-pyramid":
        return make_star_pyramid(
            spec.get("height", 1.0),
            spec.get("outer_radius", 1.0),
            spec.get("inner_radius", 0.4),
            spec.get("n_points", 24),
        )
    raise ValueError(f"unknown geometry {spec if shape is None else shape!r}")


def refine_geometry(spec: dict, level: int) -> dict:
    """Geometry table at refinement ``level`` of the same family."""
    out = dict(spec)
    shape = out.get("shape")
    if shape == "icosphere":
        out["subdivisions"] = level
    elif shape == "torus":
        out["n_major"] = out.get("n_major", 8) * 2**level
        out["n_minor"] = out.get("n_minor", 4) * 2**level
    else:
        raise ValueError(f"no refinement family for geometry {shape!r}")
    return out


def geometry_label(spec: dict) -> str:
    if "path" in spec:
        return Path(spec["path"]).stem
    return spec.get("shape", "geometry")


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment family.

    Only the fields an operation consumes need to be meaningful for that
    operation; the whole structure is echoed into each provenance file.
    """

    geometry: dict = field(default_factory=lambda: {"shape": "icosphere", "subdivisions": 1})
    geometries: list[dict] = field(default_factory=list)  # multi-geometry runs
    formulations: tuple[str, ...] = ("efie", "pmchwt")
    dts: tuple[float, ...] = (1.0,)
    n_quads: tuple[int, ...] = (4, 13, 78)
    reference_nq: int = 400
    use_reference: bool = True  # whether sigma references are assembled
    refinements: tuple[int, ...] = (0, 1, 2)
    n_steps: int = 600
    epsilon_exterior: float = 1.0
    mu_exterior: float = 1.0
    contrasts: tuple[float, ...] = (2.0, 4.0, 8.0)
    mu_interior: float = 1.0
    excitation: dict = field(default_factory=lambda: dict(DEFAULT_EXCITATION))
    output_dir: Path = Path("out")
    r_trivial: float = 1e-8
    experiments: tuple[str, ...] = ("table1",)

    def __post_init__(self):
        self.formulations = tuple(self.formulations)
        self.dts = tuple(float(v) for v in self.dts)
        self.n_quads = tuple(int(v) for v in self.n_quads)
        self.refinements = tuple(int(v) for v in self.refinements)
        self.contrasts = tuple(float(v) for v in self.contrasts)
        self.experiments = tuple(self.experiments)
        self.output_dir = Path(self.output_dir)
        for name in ("formulations", "dts", "n_quads", "contrasts"):
            if not getattr(self, name):
                raise ValueError(f"{name} must be non-empty")
        for name in self.experiments:
            if name not in EXPERIMENTS:
                raise ValueError(
                    f"unknown experiment {name!r}; "
                    f"choose from {sorted(EXPERIMENTS)}"
                )
        for form in self.formulations:
            if form not in ("efie", "pmchwt"):
                raise ValueError(f"unknown formulation {form!r}")
        if "path" in self.geometry and not Path(self.geometry["path"]).exists():
            raise ValueError(f"mesh file {self.geometry['path']} does not exist")
        if self.n_steps < 1:
            raise ValueError("n_steps must be positive")

    @classmethod
    def from_toml(cls, path) -> "ExperimentConfig":
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        kw: dict = {}
        geo = raw.get("geometry", {})
        if "list" in geo:
            kw["geometries"] = list(geo["list"])
            kw["geometry"] = dict(geo["list"][0])
        elif geo:
            kw["geometry"] = dict(geo)
        disc = raw.get("discretization", {})
        if "dt" in disc:
            kw["dts"] = (disc["dt"],)
        if "dts" in disc:
            kw["dts"] = tuple(disc["dts"])
        for key in ("n_quads", "reference_nq", "use_reference", "refinements",
                    "n_steps"):
            if key in disc:
                kw[key] = disc[key]
        mat = raw.get("materials", {})
        for key in ("epsilon_exterior", "mu_exterior", "contrasts",
                    "mu_interior"):
            if key in mat:
                kw[key] = mat[key]
        if raw.get("excitation"):
            exc = dict(DEFAULT_EXCITATION)
            exc.update(raw["excitation"])
            kw["excitation"] = exc
        out = raw.get("outputs", {})
        if "directory" in out:
            kw["output_dir"] = Path(out["directory"])
        if "formulations" in out:
            kw["formulations"] = tuple(out["formulations"])
        if "r_trivial" in out:
            kw["r_trivial"] = out["r_trivial"]
        if "experiments" in out:
            kw["experiments"] = tuple(out["experiments"])
        return cls(**kw)

    def provenance(self) -> dict:
        out = {}
        for name, value in self.__dict__.items():
            if isinstance(value, Path):
                value = str(value)
            elif isinstance(value, tuple):
                value = list(value)
            out[name] = value
        return out

    def exterior(self) -> Medium:
        return Medium(self.epsilon_exterior, self.mu_exterior)

    def interior(self, contrast: float) -> Medium:
        return Medium(self.epsilon_exterior * contrast, self.mu_interior)

    def plane_wave(self) -> PlaneWaveExcitation:
        exc = self.excitation
        return PlaneWaveExcitation(
            direction=np.asarray(exc["direction"], dtype=float),
            polarization=np.asarray(exc["polarization"], dtype=float),
            amplitude=exc.get("amplitude", 1.0),
            width=exc.get("width", 4.0),
            delay=exc.get("delay", 12.0),
            frequency=exc.get("frequency", 0.0),
        )


# ---------------------------------------------------------------------------
# shared plumbing


def _system(mesh, space, formulation, dt, nq, config: ExperimentConfig,
            contrast: float | None = None):
    if formulation == "efie":
        return assemble_efie_slices(
            mesh, dt, nq, medium=config.exterior(), space=space
        )
    if contrast is None:
        contrast = config.contrasts[0]
    return assemble_pmchwt_slices(
        mesh, dt, nq,
        exterior=config.exterior(),
        interior=config.interior(contrast),
        space=space,
    )


def _write_csv(path: Path, header: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def _write_sidecars(csv_path: Path, config: ExperimentConfig,
                    realized: dict, summary: dict) -> None:
    prov = {"config": config.provenance(), "realized": realized}
    csv_path.with_suffix(".provenance.json").write_text(
        json.dumps(prov, indent=2, sort_keys=True) + "\n"
    )
    csv_path.with_suffix(".summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )


def _fmt(x: float) -> str:
    return repr(float(x))


# ---------------------------------------------------------------------------
# operations


def run_table_I(config: ExperimentConfig) -> Path:
    """Quadrature-error magnitudes against eigenvalue shifts on one mesh.

    One row per (formulation, N_q): sigma measured against the
    ``reference_nq`` companion, delta from the dense spectrum.
    """
    mesh = build_geometry(config.geometry)
    space = build_rwg(mesh)
    dt = config.dts[0]
    rows = []
    summary: dict = {"rows": []}
    for form in config.formulations:
        ref = build_companion(
            _system(mesh, space, form, dt, config.reference_nq, config)
        )
        for nq in config.n_quads:
            comp = build_companion(_system(mesh, space, form, dt, nq, config))
            sig = quadrature_error_sigma(comp, ref)
            rep = spectrum(comp, r_trivial=config.r_trivial, sigma=sig)
            rows.append([form, nq, _fmt(sig), _fmt(rep.delta)])
            summary["rows"].append(
                {"formulation": form, "n_quad": nq, "sigma": sig,
                 "delta": rep.delta, "n_trivial": rep.n_trivial,
                 "n_p": rep.n_cluster}
            )
    path = _write_csv(
        config.output_dir / "table1.csv",
        ["formulation", "n_quad", "sigma", "delta"],
        rows,
    )
    realized = {
        "n_edges": mesh.n_edges,
        "dt": dt,
        "reference_nq": config.reference_nq,
    }
    _write_sidecars(path, config, realized, summary)
    return path


def run_table_II(config: ExperimentConfig) -> Path:
    """Eigenvalue shifts across geometries and quadrature orders.

    Requires ``config.geometries``.  A sphere entry stands in for the
    layered-sphere case of the transmission problem, which needs more
    than one interface and is out of scope; the summary marks such rows.
    When ``use_reference`` is false the cluster is counted at the fixed
    floor radius instead of ``10 sigma`` and no reference is assembled.
    """
    if not config.geometries:
        raise ValueError("table II needs config.geometries")
    form = "pmchwt" if "pmchwt" in config.formulations else config.formulations[0]
    dt = config.dts[0]
    rows = []
    summary: dict = {"rows": [], "notes": []}
    for spec in config.geometries:
        label = geometry_label(spec)
        mesh = build_geometry(spec)
        space = build_rwg(mesh)
        loops = build_loop_space(mesh)
        if spec.get("shape") == "icosphere":
            summary["notes"].append(
                f"{label}: homogeneous sphere standing in for the layered sphere"
            )
        ref = None
        if config.use_reference:
            ref = build_companion(
                _system(mesh, space, form, dt, config.reference_nq, config)
            )
        for nq in config.n_quads:
            comp = build_companion(_system(mesh, space, form, dt, nq, config))
            sig = quadrature_error_sigma(comp, ref) if ref is not None else None
            rep = spectrum(comp, r_trivial=config.r_trivial, sigma=sig)
            rows.append([label, nq, _fmt(rep.delta), rep.n_trivial, rep.n_cluster])
            summary["rows"].append(
                {"geometry": label, "n_quad": nq, "delta": rep.delta,
                 "sigma": sig, "n_trivial": rep.n_trivial,
                 "n_p": rep.n_cluster, "n_loops": loops.dimension}
            )
    path = _write_csv(
        config.output_dir / "table2.csv",
        ["geometry", "n_quad", "delta", "n_trivial", "n_p"],
        rows,
    )
    _write_sidecars(path, config, {"dt": dt, "formulation": form}, summary)
    return path


def run_dt_sweep(config: ExperimentConfig) -> Path:
    """Eigenvalue shift against the time step at fixed mesh and N_q."""
    if len(config.dts) < 3 or max(config.dts) < 4.0 * min(config.dts):
        raise ValueError("dt sweep needs >= 3 time steps spanning >= 4x")
    mesh = build_geometry(config.geometry)
    space = build_rwg(mesh)
    form = "pmchwt" if "pmchwt" in config.formulations else config.formulations[0]
    nq = config.n_quads[0]
    rows = []
    deltas = []
    for dt in config.dts:
        comp = build_companion(_system(mesh, space, form, dt, nq, config))
        rep = spectrum(comp, r_trivial=config.r_trivial)
        rho = rep.spectral_radius
        deltas.append(rep.delta)
        rows.append([_fmt(dt), _fmt(rep.delta), _fmt(rho),
                     _fmt(rho ** (1.0 / dt))])
    slope = float(np.polyfit(np.log(config.dts), np.log(deltas), 1)[0])
    per_second = [float(r[3]) for r in rows]
    summary = {
        "loglog_slope": slope,
        "per_second_growth": per_second,
        "per_second_spread": max(per_second) / min(per_second) - 1.0,
        "deltas": deltas,
    }
    path = _write_csv(
        config.output_dir / "dt_sweep.csv",
        ["dt", "delta", "rho_per_step", "rho_per_second"],
        rows,
    )
    _write_sidecars(path, config, {"formulation": form, "n_quad": nq}, summary)
    return path


def run_h_and_contrast_sweep(config: ExperimentConfig) -> Path:
    """Eigenvalue shift against mesh refinement and material contrast.

    The h rows refine ``config.geometry`` through ``config.refinements``
    at fixed dt; the contrast rows vary the interior permittivity on the
    base geometry.  Everything lands in one CSV with a ``sweep`` column.
    """
    if len(config.refinements) < 3:
        raise ValueError("h sweep needs >= 3 refinement levels")
    if len(config.contrasts) < 3:
        raise ValueError("contrast sweep needs >= 3 interior permittivities")
    form = "pmchwt" if "pmchwt" in config.formulations else config.formulations[0]
    dt = config.dts[0]
    nq = config.n_quads[0]
    rows = []
    h_deltas, c_deltas = [], []
    for level in config.refinements:
        mesh = build_geometry(refine_geometry(config.geometry, level))
        space = build_rwg(mesh)
        comp = build_companion(_system(mesh, space, form, dt, nq, config))
        if comp.dimension <= DENSE_BUDGET:
            delta = spectrum(comp, r_trivial=config.r_trivial).delta
        else:
            delta = spectral_radius_arnoldi(comp) - 1.0
        h = float(mesh.edge_lengths.mean())
        h_deltas.append(delta)
        rows.append(["h", _fmt(h), _fmt(delta)])
    mesh = build_geometry(config.geometry)
    space = build_rwg(mesh)
    for contrast in config.contrasts:
        comp = build_companion(
            _system(mesh, space, "pmchwt", dt, nq, config, contrast=contrast)
        )
        rep = spectrum(comp, r_trivial=config.r_trivial)
        c_deltas.append(rep.delta)
        rows.append(["contrast", _fmt(contrast), _fmt(rep.delta)])
    summary = {
        "h_deltas": h_deltas,
        "h_spread": max(h_deltas) / min(h_deltas),
        "contrast_deltas": c_deltas,
        "contrast_monotone_decreasing": all(
            a > b for a, b in zip(c_deltas, c_deltas[1:])
        ),
    }
    path = _write_csv(
        config.output_dir / "h_contrast_sweep.csv",
        ["sweep", "parameter", "delta"],
        rows,
    )
    _write_sidecars(path, config, {"formulation": form, "n_quad": nq,
                                   "dt": dt}, summary)
    return path


def run_fig1(config: ExperimentConfig) -> Path:
    """Per-step solution norms of plane-wave-driven marches.

    One series per (formulation, N_q) plus a late-time growth ratio per
    series in the summary.
    """
    mesh = build_geometry(config.geometry)
    space = build_rwg(mesh)
    dt = config.dts[0]
    tb = TemporalBasis(dt)
    wave = config.plane_wave()
    rows = []
    summary: dict = {"series": []}
    for form in config.formulations:
        rhs = excitation_rhs(
            wave, mesh, space, tb, config.exterior(), form, config.n_steps
        )
        for nq in config.n_quads:
            system = _system(mesh, space, form, dt, nq, config)
            result = march(system, rhs)
            for i, norm in enumerate(result.norms):
                rows.append([form, nq, i + 1, _fmt((i + 1) * dt), _fmt(norm)])
            try:
                rho = estimate_growth_rate(result).ratio
            except ValueError:  # all-quiet window
                rho = None
            summary["series"].append(
                {"formulation": form, "n_quad": nq, "rho": rho}
            )
    path = _write_csv(
        config.output_dir / "fig1.csv",
        ["formulation", "n_quad", "step", "time_s", "norm_u"],
        rows,
    )
    _write_sidecars(path, config, {"dt": dt, "n_steps": config.n_steps},
                    summary)
    return path


EXPERIMENTS = {
    "table1": run_table_I,
    "table2": run_table_II,
    "dt_sweep": run_dt_sweep,
    "h_contrast": run_h_and_contrast_sweep,
    "fig1": run_fig1,
}
