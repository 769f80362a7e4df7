"""Plane-wave excitation and the marching recursion.

Each step solves the factored leading matrix against the tested incident
field minus the convolution with the recent history.  Contributions older
than the stored history are compressed into a running sum multiplied by
the saturated tail matrix, so a step costs a fixed number of dense
mat-vecs regardless of how long the run is.  Late-time behaviour is
summarized by a least-squares growth rate of the solution norms.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from .assembly import MarchingSystem, Medium, TemporalBasis, _edge_testing
from .basis import RwgSpace
from .geometry import TriangleMesh
from .quadrature import triangle_rule

__all__ = [
    "PlaneWaveExcitation",
    "MarchResult",
    "GrowthEstimate",
    "excitation_rhs",
    "march",
    "estimate_growth_rate",
]

#: steps with norms below this are treated as not yet excited
QUIET_NORM = 1e-30


@dataclass(frozen=True)
class PlaneWaveExcitation:
    """Modulated Gaussian plane wave.

    ``direction`` and ``polarization`` are normalized on construction and
    must be orthogonal.  ``frequency`` = 0 gives a plain Gaussian pulse.
    """

    direction: np.ndarray
    polarization: np.ndarray
    amplitude: float = 1.0
    width: float = 1.0
    delay: float = 0.0
    frequency: float = 0.0

    def __post_init__(self):
        k = np.asarray(self.direction, dtype=np.float64)
        p = np.asarray(self.polarization, dtype=np.float64)
        nk, np_ = np.linalg.norm(k), np.linalg.norm(p)
        if nk == 0.0 or np_ == 0.0:
            raise ValueError("direction and polarization must be nonzero")
        k, p = k / nk, p / np_
        if abs(k @ p) > 1e-12:
            raise ValueError("polarization must be orthogonal to direction")
        if self.width <= 0.0:
            raise ValueError("pulse width must be positive")
        object.__setattr__(self, "direction", k)
        object.__setattr__(self, "polarization", p)

    def _profile(self, points: np.ndarray, t, wave_speed: float) -> np.ndarray:
        """Scalar pulse amplitude at the retarded phase of each point."""
        tau = np.subtract.outer(
            np.asarray(t, dtype=np.float64) - self.delay,
            np.asarray(points) @ self.direction / wave_speed,
        )
        out = self.amplitude * np.exp(-(tau**2) / (2.0 * self.width**2))
        if self.frequency != 0.0:
            out = out * np.cos(2.0 * math.pi * self.frequency * tau)
        return out

    def electric_field(self, points, t, medium: Medium = Medium()) -> np.ndarray:
        """E at ``points`` (N, 3) and scalar time ``t`` -> (N, 3)."""
        prof = self._profile(points, t, medium.wave_speed)
        return prof.reshape(-1, 1) * self.polarization

    def magnetic_field(self, points, t, medium: Medium = Medium()) -> np.ndarray:
        """H = (k x E) / eta for the same arguments."""
        prof = self._profile(points, t, medium.wave_speed)
        pol = np.cross(self.direction, self.polarization) / medium.impedance
        return prof.reshape(-1, 1) * pol


@dataclass
class MarchResult:
    """Solution history of one marching run."""

    formulation: str
    dt: float
    coefficients: np.ndarray  # (n_steps, M)
    norms: np.ndarray  # (n_steps,)
    metadata: dict = field(default_factory=dict)

    @property
    def n_steps(self) -> int:
        return len(self.coefficients)

    def block_norms(self) -> tuple[np.ndarray, np.ndarray | None]:
        """Per-step norms of the electric and (if present) magnetic block."""
        if self.formulation != "pmchwt":
            return self.norms, None
        half = self.coefficients.shape[1] // 2
        return (
            np.linalg.norm(self.coefficients[:, :half], axis=1),
            np.linalg.norm(self.coefficients[:, half:], axis=1),
        )


def excitation_rhs(
    excitation: PlaneWaveExcitation,
    mesh: TriangleMesh,
    space: RwgSpace,
    tb: TemporalBasis,
    exterior: Medium,
    formulation: str,
    n_steps: int,
    n_quad: int = 13,
) -> np.ndarray:
    """Tested incident field at t_i = i dt, i = 1..n_steps.

    Rows are Galerkin projections of the tangential incident field onto
    the edge elements; the transmission system stacks the electric rows
    over the magnetic ones, with H = (k x E) / eta.
    """
    if n_steps < 1:
        raise ValueError("need at least one time step")
    rule = triangle_rule(n_quad)
    pts, w_area, test_vals = _edge_testing(mesh, space, rule)
    weighted = test_vals * w_area[:, :, None, None]

    # accumulate the projection onto each edge's polarization component,
    # then one matrix product evaluates every time step at once
    def edge_projection(pol: np.ndarray) -> np.ndarray:
        proj = weighted @ pol  # (F, Q, 3)
        out = np.zeros((mesh.n_edges, mesh.n_faces * rule.n_points))
        flat = np.arange(mesh.n_faces * rule.n_points).reshape(
            mesh.n_faces, rule.n_points
        )
        for s in range(3):
            np.add.at(out, (space.slot_edge[:, s][:, None], flat), proj[:, :, s])
        return out

    points = pts.reshape(-1, 3)
    times = tb.dt * np.arange(1, n_steps + 1)
    profile = excitation._profile(points, times, exterior.wave_speed)  # (N_t, FQ)

    rhs = profile @ edge_projection(excitation.polarization).T
    if formulation == "pmchwt":
        h_pol = (
            np.cross(excitation.direction, excitation.polarization)
            / exterior.impedance
        )
        rhs = np.hstack([rhs, profile @ edge_projection(h_pol).T])
    return rhs


def _factor_leading(z0: np.ndarray):
    """LU-factor Z_0, rejecting singular systems with a condition estimate."""
    with warnings.catch_warnings():
        # exact singularity is handled by the condition check below
        warnings.simplefilter("ignore", LinAlgWarning)
        lu = lu_factor(z0, check_finite=False)
    gecon = get_lapack_funcs("gecon", (z0,))
    rcond, _ = gecon(lu[0], np.linalg.norm(z0, 1))
    if not np.isfinite(rcond) or rcond < 1e2 * np.finfo(np.float64).eps:
        cond = math.inf if rcond == 0.0 else 1.0 / rcond
        raise np.linalg.LinAlgError(
            f"leading marching matrix is singular (condition estimate {cond:.3e})"
        )
    return lu


def march(
    system: MarchingSystem, rhs: np.ndarray, n_steps: int | None = None
) -> MarchResult:
    """Run the marching recursion against tested right-hand sides.

    ``rhs[i]`` drives step i+1.  History beyond the stored slices is
    multiplied by the tail matrix through a running sum, which keeps the
    cost per step independent of the run length.
    """
    rhs = np.atleast_2d(np.asarray(rhs, dtype=np.float64))
    if n_steps is None:
        n_steps = len(rhs)
    if len(rhs) < n_steps:
        raise ValueError(f"need {n_steps} right-hand sides, got {len(rhs)}")
    m_dim = system.n_functions
    if rhs.shape[1] != m_dim:
        raise ValueError("right-hand side does not match the system size")

    lu = _factor_leading(system.slices[0])
    k0 = system.history
    u = np.zeros((n_steps, m_dim))
    tail_sum = np.zeros(m_dim)
    for i in range(n_steps):
        if i - k0 - 1 >= 0:
            tail_sum += u[i - k0 - 1]
        acc = rhs[i].copy()
        for k in range(1, min(i, k0) + 1):
            acc -= system.slices[k] @ u[i - k]
        if i > k0:
            acc -= system.tail @ tail_sum
        step = lu_solve(lu, acc, check_finite=False)
        if not np.all(np.isfinite(step)):
            raise FloatingPointError(f"marching diverged to non-finite at step {i + 1}")
        u[i] = step
    return MarchResult(
        formulation=system.formulation,
        dt=system.dt,
        coefficients=u,
        norms=np.linalg.norm(u, axis=1),
        metadata={
            "n_quad": system.n_quad,
            "history": k0,
            "media": system.media,
            "mesh_id": system.mesh_id,
        },
    )


@dataclass(frozen=True)
class GrowthEstimate:
    """Late-time exponential growth fitted from solution norms."""

    ratio: float  # per-step norm ratio
    per_second: float  # log-growth per unit time
    n_points: int

    @property
    def rate(self) -> float:
        """Per-step logarithmic rate, log(ratio)."""
        return math.log(self.ratio)


def estimate_growth_rate(
    result: MarchResult, window: tuple[int, int] | None = None
) -> GrowthEstimate:
    """Least-squares slope of log-norms over a late-time window.

    The default window is the last quarter of the run; steps the
    excitation has not reached yet (norms below ``QUIET_NORM``) are
    skipped.
    """
    n = result.n_steps
    if window is None:
        window = ((3 * n) // 4, n)
    lo, hi = window
    if not 0 <= lo < hi <= n:
        raise ValueError(f"window {window} outside run of {n} steps")
    idx = np.arange(lo, hi)
    idx = idx[result.norms[idx] >= QUIET_NORM]
    if len(idx) < 2:
        raise ValueError("growth window contains fewer than two usable norms")
    slope = np.polyfit(idx, np.log(result.norms[idx]), 1)[0]
    return GrowthEstimate(
        ratio=math.exp(slope), per_second=slope / result.dt, n_points=len(idx)
    )
