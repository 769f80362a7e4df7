"""Companion-matrix stability analysis of marching systems.

The homogeneous marching recursion is a linear fixed-depth recurrence once
the tail sum is appended to the state, so its late-time behaviour is the
spectral radius of one block-companion matrix

    [ Q_1  Q_2 ... Q_k0  Q_inf ]
    [  I    0  ...  0     0    ]
    [  0    I  ...  0     0    ]
    [  0    0  ...  I     I    ]

with Q_k = -Z_0^{-1} Z_k and Q_inf = -Z_0^{-1} Z_inf.  The stability
metric is the eigenvalue shift delta = max |lambda| - 1, and the
quadrature error enters through sigma, the dominant eigenvalue of the
difference against a companion built from a near-exact rule.  Solenoidal
vectors give exact eigenvectors at 1 + 0j; the electric-field equation
additionally carries rank-2 Jordan chains there, whose splitting under
roundoff produces the characteristic sqrt(machine epsilon) cloud.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvals, lu_solve
from scipy.sparse.linalg import LinearOperator
from scipy.sparse.linalg import eigs as arnoldi_eigs

from .assembly import MarchingSystem
from .basis import LoopSpace
from .mot import _factor_leading

__all__ = [
    "CompanionMatrix",
    "SpectrumReport",
    "EigenvectorReport",
    "build_companion",
    "spectrum",
    "count_clusters",
    "quadrature_error_sigma",
    "quadrature_error_singular",
    "verify_eigenvector_structure",
    "power_method_modulus",
    "spectral_radius_arnoldi",
]

DEFAULT_TRIVIAL_RADIUS = 1e-8
DEFAULT_CLUSTER_FLOOR = 1e-4
DENSE_LIMIT = 20_000


@dataclass
class CompanionMatrix:
    """One-step propagator of the homogeneous marching recursion.

    Only the first block row is stored; the identity shift structure of
    the remaining rows is implicit in :meth:`apply` and
    :meth:`materialize`.
    """

    blocks: list[np.ndarray]  # Q_1 ... Q_k0
    q_inf: np.ndarray
    formulation: str
    dt: float
    metadata: dict = field(default_factory=dict)

    @property
    def block_size(self) -> int:
        return self.q_inf.shape[0]

    @property
    def history(self) -> int:
        return len(self.blocks)

    @property
    def dimension(self) -> int:
        return (self.history + 1) * self.block_size

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Blockwise mat-vec, no materialization."""
        m, k0 = self.block_size, self.history
        parts = np.asarray(vec).reshape(k0 + 1, m)
        out = np.empty_like(parts)
        out[0] = sum(q @ p for q, p in zip(self.blocks, parts[:-1]))
        out[0] += self.q_inf @ parts[-1]
        out[1:k0] = parts[: k0 - 1]
        out[k0] = parts[k0 - 1] + parts[k0]
        return out.reshape(np.shape(vec))

    def materialize(self) -> np.ndarray:
        m, k0 = self.block_size, self.history
        n = self.dimension
        out = np.zeros((n, n))
        for j, q in enumerate(self.blocks):
            out[:m, j * m : (j + 1) * m] = q
        out[:m, k0 * m :] = self.q_inf
        for j in range(1, k0):
            out[j * m : (j + 1) * m, (j - 1) * m : j * m] = np.eye(m)
        out[k0 * m :, (k0 - 1) * m : k0 * m] = np.eye(m)
        out[k0 * m :, k0 * m :] = np.eye(m)
        return out


def build_companion(system: MarchingSystem) -> CompanionMatrix:
    """Form the companion blocks from a marching system."""
    lu = _factor_leading(system.slices[0])
    blocks = [
        -lu_solve(lu, z, check_finite=False) for z in system.slices[1:]
    ]
    q_inf = -lu_solve(lu, system.tail, check_finite=False)
    return CompanionMatrix(
        blocks=blocks,
        q_inf=q_inf,
        formulation=system.formulation,
        dt=system.dt,
        metadata={"n_quad": system.n_quad, "media": system.media,
                  "mesh_id": system.mesh_id},
    )


@dataclass
class SpectrumReport:
    """Eigenvalues of one companion matrix and the derived counts."""

    eigenvalues: np.ndarray  # (N,) complex
    delta: float  # max |lambda| - 1
    n_trivial: int
    n_cluster: int
    r_trivial: float
    r_cluster: float
    sigma: float | None = None

    @property
    def spectral_radius(self) -> float:
        return 1.0 + self.delta


def spectrum(
    companion: CompanionMatrix,
    *,
    r_trivial: float = DEFAULT_TRIVIAL_RADIUS,
    sigma: float | None = None,
    r_cluster: float | None = None,
    dense_limit: int = DENSE_LIMIT,
) -> SpectrumReport:
    """Dense eigensolve of the companion matrix.

    The cluster radius defaults to ``max(10 sigma, 1e-4)`` so that the
    near-unity cluster scales with the quadrature perturbation when a
    reference sigma is supplied.
    """
    if companion.dimension > dense_limit:
        raise ValueError(
            f"companion dimension {companion.dimension} exceeds the dense "
            f"limit {dense_limit}"
        )
    if r_cluster is None:
        r_cluster = DEFAULT_CLUSTER_FLOOR
        if sigma is not None:
            r_cluster = max(10.0 * sigma, r_cluster)
    lam = eigvals(companion.materialize(), check_finite=False)
    delta = float(np.abs(lam).max() - 1.0)
    n_trivial, n_cluster = _count(lam, r_trivial, r_cluster)
    return SpectrumReport(
        eigenvalues=lam,
        delta=delta,
        n_trivial=n_trivial,
        n_cluster=n_cluster,
        r_trivial=r_trivial,
        r_cluster=r_cluster,
        sigma=sigma,
    )


def _count(lam: np.ndarray, r_trivial: float, r_cluster: float):
    dist = np.abs(lam - 1.0)
    n_trivial = int((dist <= r_trivial).sum())
    n_cluster = int(((dist > r_trivial) & (dist <= r_cluster)).sum())
    return n_trivial, n_cluster


def count_clusters(
    report: SpectrumReport, r_trivial: float, r_cluster: float
) -> tuple[int, int]:
    """Recount the trivial and non-trivial clusters at new radii."""
    if not 0.0 < r_trivial < r_cluster < 1.0:
        raise ValueError("need 0 < r_trivial < r_cluster < 1")
    return _count(report.eigenvalues, r_trivial, r_cluster)


def _check_same_shape(a: CompanionMatrix, b: CompanionMatrix) -> None:
    if a.block_size != b.block_size or a.history != b.history:
        raise ValueError("companion matrices have different shapes")


def quadrature_error_sigma(
    companion: CompanionMatrix, reference: CompanionMatrix
) -> float:
    """Dominant eigenvalue modulus of the companion difference.

    The difference of two companions sharing mesh, time step and history
    is nonzero only in the first block row, so its nonzero spectrum is
    that of the leading block alone; the eigensolve therefore runs at
    block size rather than full dimension.
    """
    _check_same_shape(companion, reference)
    lead = companion.blocks[0] - reference.blocks[0]
    return float(np.abs(eigvals(lead, check_finite=False)).max())


def quadrature_error_singular(
    companion: CompanionMatrix, reference: CompanionMatrix
) -> float:
    """Largest singular value of the companion difference.

    Recorded alongside the eigenvalue reading: the difference is a single
    block row, so this is the spectral norm of that row.
    """
    _check_same_shape(companion, reference)
    row = np.hstack(
        [a - b for a, b in zip(companion.blocks, reference.blocks)]
        + [companion.q_inf - reference.q_inf]
    )
    return float(np.linalg.svd(row, compute_uv=False)[0])


@dataclass
class EigenvectorReport:
    """Residuals of the solenoidal eigenvector and Jordan-chain ansatz.

    ``ordinary[i]`` is ||Q c_0 - c_0|| / ||c_0|| for the i-th solenoidal
    column embedded in the trailing (running-sum) block; ``jordan[i]`` is
    ||(Q - I) c_tilde - c_0|| / ||c_0|| for the rank-2 chain ansatz.  The
    chain exists for the electric-field system only, so transmission
    systems are expected to report large Jordan residuals.
    """

    ordinary: np.ndarray
    jordan: np.ndarray

    @property
    def max_ordinary(self) -> float:
        return float(self.ordinary.max())

    @property
    def max_jordan(self) -> float:
        return float(self.jordan.max())

    @property
    def min_jordan(self) -> float:
        return float(self.jordan.min())


def _embedded_columns(companion: CompanionMatrix, loops: LoopSpace):
    cols = loops.coefficients
    m = companion.block_size
    if companion.formulation == "pmchwt":
        half = m // 2
        if cols.shape[1] != half:
            raise ValueError("loop space does not match the mesh of this system")
        out = np.zeros((2 * len(cols), m))
        out[: len(cols), :half] = cols
        out[len(cols) :, half:] = cols
        return out
    if cols.shape[1] != m:
        raise ValueError("loop space does not match the mesh of this system")
    return cols


def verify_eigenvector_structure(
    companion: CompanionMatrix, loops: LoopSpace
) -> EigenvectorReport:
    """Residuals of the predicted unit-eigenvalue structure, per loop."""
    columns = _embedded_columns(companion, loops)
    m, k0 = companion.block_size, companion.history
    ordinary = np.empty(len(columns))
    jordan = np.empty(len(columns))
    for i, g in enumerate(columns):
        scale = np.linalg.norm(g)
        c0 = np.zeros((k0 + 1, m))
        c0[-1] = g
        ordinary[i] = np.linalg.norm(companion.apply(c0) - c0) / scale
        chain = np.zeros((k0 + 1, m))
        chain[:-1] = g
        resid = companion.apply(chain) - chain - c0
        jordan[i] = np.linalg.norm(resid) / scale
    return EigenvectorReport(ordinary=ordinary, jordan=jordan)


def spectral_radius_arnoldi(
    companion: CompanionMatrix,
    n_extremal: int = 4,
    n_basis: int = 100,
    seed: int = 0,
) -> float:
    """Spectral radius from an Arnoldi solve on the blockwise action.

    For companion matrices too large to eigendecompose densely; only the
    ``n_extremal`` largest-modulus eigenvalues are computed.  The basis
    size must be generous because the dominant cluster is dense near the
    unit circle.
    """
    n = companion.dimension
    rng = np.random.default_rng(seed)
    op = LinearOperator((n, n), matvec=companion.apply, dtype=np.float64)
    lam = arnoldi_eigs(
        op,
        k=n_extremal,
        which="LM",
        ncv=min(n_basis, n - 1),
        tol=1e-10,
        maxiter=5000,
        v0=rng.standard_normal(n),
        return_eigenvectors=False,
    )
    return float(np.abs(lam).max())


def power_method_modulus(
    companion: CompanionMatrix,
    n_steps: int = 400,
    seed: int = 0,
) -> float:
    """Spectral radius estimate by blockwise power iteration.

    Geometric mean of the late-iteration norm ratios; accurate when the
    dominant modulus is well separated, which is what the cross-check
    against the dense solve assumes.
    """
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(companion.dimension)
    v /= np.linalg.norm(v)
    ratios = np.empty(n_steps)
    for i in range(n_steps):
        w = companion.apply(v)
        ratios[i] = np.linalg.norm(w)
        if ratios[i] == 0.0:
            return 0.0
        v = w / ratios[i]
    tail = ratios[-max(10, n_steps // 4) :]
    return float(np.exp(np.mean(np.log(tail))))
