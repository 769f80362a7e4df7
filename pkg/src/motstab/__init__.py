"""Time-domain boundary-element marching and companion-matrix stability.

The pipeline: build a closed triangle mesh (:mod:`motstab.geometry`),
span currents with edge elements and their solenoidal loops
(:mod:`motstab.basis`), assemble retarded interaction slices for the
electric-field or single-interface transmission equations
(:mod:`motstab.assembly`), march them in time (:mod:`motstab.mot`), and
quantify late-time stability through the one-step companion operator
(:mod:`motstab.cmsa`).  :mod:`motstab.harness` drives parameter sweeps;
``motstab`` on the command line exposes the same steps as subcommands.
"""

from .assembly import (
    MarchingSystem,
    Medium,
    TemporalBasis,
    assemble_efie_slices,
    assemble_K_slice,
    assemble_pmchwt_slices,
    assemble_T_slice,
    assemble_Th_tail,
    history_length,
    load_slices,
    save_slices,
)
from .basis import LoopSpace, RwgSpace, build_loop_space, build_rwg, loop_dimension
from .cmsa import (
    CompanionMatrix,
    EigenvectorReport,
    SpectrumReport,
    build_companion,
    count_clusters,
    power_method_modulus,
    quadrature_error_sigma,
    quadrature_error_singular,
    spectral_radius_arnoldi,
    spectrum,
    verify_eigenvector_structure,
)
from .geometry import (
    TriangleMesh,
    load_mesh,
    make_icosphere,
    make_nasa_almond,
    make_star_pyramid,
    make_torus,
    save_mesh,
)
from .harness import (
    ExperimentConfig,
    run_dt_sweep,
    run_fig1,
    run_h_and_contrast_sweep,
    run_table_I,
    run_table_II,
)
from .mot import (
    GrowthEstimate,
    MarchResult,
    PlaneWaveExcitation,
    estimate_growth_rate,
    excitation_rhs,
    march,
)
from .quadrature import (
    RULE_SIZES,
    TriangleRule,
    oracle_adaptive_integral,
    oracle_deviation_sweep,
    shell_moments_batch,
    shell_restricted_integral,
    triangle_rule,
)

__version__ = "0.1.0"

__all__ = [
    "CompanionMatrix",
    "EigenvectorReport",
    "ExperimentConfig",
    "GrowthEstimate",
    "LoopSpace",
    "MarchResult",
    "MarchingSystem",
    "Medium",
    "PlaneWaveExcitation",
    "RULE_SIZES",
    "RwgSpace",
    "SpectrumReport",
    "TemporalBasis",
    "TriangleMesh",
    "TriangleRule",
    "assemble_K_slice",
    "assemble_T_slice",
    "assemble_Th_tail",
    "assemble_efie_slices",
    "assemble_pmchwt_slices",
    "build_companion",
    "build_loop_space",
    "build_rwg",
    "count_clusters",
    "estimate_growth_rate",
    "excitation_rhs",
    "history_length",
    "load_mesh",
    "load_slices",
    "loop_dimension",
    "make_icosphere",
    "make_nasa_almond",
    "make_star_pyramid",
    "make_torus",
    "march",
    "oracle_adaptive_integral",
    "oracle_deviation_sweep",
    "power_method_modulus",
    "quadrature_error_sigma",
    "quadrature_error_singular",
    "run_dt_sweep",
    "run_fig1",
    "run_h_and_contrast_sweep",
    "run_table_I",
    "run_table_II",
    "save_mesh",
    "save_slices",
    "shell_moments_batch",
    "shell_restricted_integral",
    "spectral_radius_arnoldi",
    "spectrum",
    "triangle_rule",
    "verify_eigenvector_structure",
]
