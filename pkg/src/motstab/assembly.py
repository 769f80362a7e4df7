"""Retarded-potential operator slices on triangulated surfaces.

Marching schemes test the electric- and magnetic-type boundary kernels
against edge elements in space and shifted hat functions in time.  After
Galerkin testing, the k-th slice of each operator only sees source points
inside two spherical half-shells around each observation point,

    HS_k     = { c (k-1) dt <= |x-y| <= c k dt },
    HS_(k+1) = { c k dt     <= |x-y| <= c (k+1) dt },

because the hat derivative is piecewise constant in retarded distance and
the hat integral is piecewise quadratic (and saturated at ``dt`` inside
the ball ``|x-y| < c (k-1) dt``).  Restricted to a half-shell every kernel
reduces to the closed-form moment family of :mod:`motstab.quadrature`:
scalar moments at powers -1, 0, 1 and vector moments at powers -1 and -3.

The mixed kernel collapses further: hat and hat-derivative terms combine
so that slice k weighs the two half-shells by the bare constants ``1 - k``
and ``1 + k`` against ``1/R^3``.  Consecutive slices therefore share every
expensive integral, and assembly computes the half-shell moments once per
source triangle, forming all slices from the shared values.  That sharing
keeps the discrete telescoping identities exact in floating point: the
single-layer slices sum to zero, the mixed slices sum to the static
kernel, and every slice beyond the mesh transit time is bitwise equal to
the stored tail matrix.
"""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import dataclass

import numpy as np

from .basis import RwgSpace, build_rwg
from .geometry import TriangleMesh
from .quadrature import shell_moments_batch, triangle_rule

__all__ = [
    "Medium",
    "TemporalBasis",
    "history_length",
    "OperatorSlices",
    "operator_slices",
    "assemble_T_slice",
    "assemble_Th_tail",
    "assemble_K_slice",
    "MarchingSystem",
    "assemble_efie_slices",
    "assemble_pmchwt_slices",
    "save_slices",
    "load_slices",
]


@dataclass(frozen=True)
class Medium:
    """Homogeneous, lossless background: permittivity and permeability."""

    epsilon: float = 1.0
    mu: float = 1.0

    def __post_init__(self):
        if self.epsilon <= 0.0 or self.mu <= 0.0:
            raise ValueError("material constants must be positive")

    @property
    def impedance(self) -> float:
        return math.sqrt(self.mu / self.epsilon)

    @property
    def wave_speed(self) -> float:
        return 1.0 / math.sqrt(self.epsilon * self.mu)


@dataclass(frozen=True)
class TemporalBasis:
    """Shifted hat functions of width ``dt`` and their calculus.

    ``psi`` is the unit hat on [-dt, dt], ``dpsi`` its derivative and
    ``psi_integral`` its running integral, which saturates at ``dt``.
    These are the generating functions behind the per-slice coefficient
    tables used by the assembler; they are exposed for direct evaluation
    in tests and excitation sampling.
    """

    dt: float

    def psi(self, t):
        t = np.asarray(t, dtype=np.float64)
        return np.maximum(0.0, 1.0 - np.abs(t) / self.dt)

    def dpsi(self, t):
        t = np.asarray(t, dtype=np.float64)
        rising = (t > -self.dt) & (t < 0.0)
        falling = (t >= 0.0) & (t < self.dt)
        return (rising.astype(np.float64) - falling.astype(np.float64)) / self.dt

    def psi_integral(self, t):
        t = np.asarray(t, dtype=np.float64)
        u = np.clip(t, -self.dt, self.dt)
        ramp = np.where(
            u < 0.0,
            0.5 * (u + self.dt) ** 2 / self.dt,
            0.5 * self.dt + u - 0.5 * u**2 / self.dt,
        )
        return np.where(t >= self.dt, self.dt, ramp)


def history_length(mesh: TriangleMesh, dt: float, *media: Medium) -> int:
    """Number of retarded slices before every kernel saturates.

    Slices with index above this are identical to the stored tail matrix,
    because the slowest wave has then crossed the whole mesh.
    """
    if dt <= 0.0:
        raise ValueError("time step must be positive")
    if not media:
        media = (Medium(),)
    c_min = min(m.wave_speed for m in media)
    return max(1, int(math.ceil(mesh.diameter() / (c_min * dt))))


def _hat_shell_coefficients(k: int, dt: float, c: float):
    """Quadratic coefficients (a, b, q) of the hat integral on each shell.

    On HS_k the retarded hat integral equals a + b R + q R^2 with the
    ``near`` coefficients, on HS_(k+1) with the ``far`` ones.
    """
    near = (
        dt * (1.0 - 0.5 * (1.0 - k) ** 2),
        (k - 1.0) / c,
        -1.0 / (2.0 * dt * c * c),
    )
    far = (
        0.5 * dt * (k + 1.0) ** 2,
        -(k + 1.0) / c,
        1.0 / (2.0 * dt * c * c),
    )
    return near, far


@dataclass
class OperatorSlices:
    """All retarded slices of the three boundary kernels on one mesh.

    ``single[k]``/``hyper[k]``/``mixed[k]`` are the (M, M) Galerkin
    matrices of slice ``k``; ``hyper_tail`` is the limit of the
    hypersingular slices, valid once ``n_slices`` covers the mesh transit
    time.  ``single`` and ``mixed`` decay to exact zero there.
    """

    single: np.ndarray  # (n_slices+1, M, M)
    hyper: np.ndarray
    mixed: np.ndarray
    hyper_tail: np.ndarray  # (M, M)
    n_slices: int


def _mesh_token(mesh: TriangleMesh) -> str:
    token = getattr(mesh, "_assembly_token", None)
    if token is None:
        digest = hashlib.sha1()
        digest.update(mesh.vertices.tobytes())
        digest.update(mesh.faces.tobytes())
        token = digest.hexdigest()
        mesh._assembly_token = token
    return token


_SLICE_CACHE: dict[tuple, OperatorSlices] = {}


def operator_slices(
    mesh: TriangleMesh,
    medium: Medium,
    dt: float,
    n_quad: int,
    n_slices: int | None = None,
    space: RwgSpace | None = None,
) -> OperatorSlices:
    """Cached assembly of every kernel slice for one medium.

    Slices do not depend on ``n_slices`` (they share the same half-shell
    moments), so a cached longer run answers any shorter request.
    """
    if n_slices is None:
        n_slices = history_length(mesh, dt, medium)
    key = (_mesh_token(mesh), medium, float(dt), int(n_quad))
    hit = _SLICE_CACHE.get(key)
    if hit is not None and hit.n_slices >= n_slices:
        return hit
    if space is None:
        space = build_rwg(mesh)
    ops = _assemble_all(mesh, space, medium, dt, n_quad, n_slices)
    _SLICE_CACHE[key] = ops
    return ops


def _edge_testing(mesh, space, rule):
    """Observation points, area weights and edge-element values per face."""
    pts = np.einsum("qb,fbc->fqc", rule.barycentric, mesh.vertices[mesh.faces])
    w_area = rule.weights[None, :] * mesh.areas[:, None]  # (F, Q)
    vals = np.empty((mesh.n_faces, rule.n_points, 3, 3))
    for s in range(3):
        coef = (
            space.slot_sign[:, s]
            * space.lengths[space.slot_edge[:, s]]
            / (2.0 * mesh.areas)
        )
        free = mesh.vertices[space.slot_free[:, s]]
        vals[:, :, s, :] = coef[:, None, None] * (pts - free[:, None, :])
    return pts, w_area, vals


def _assemble_all(mesh, space, medium, dt, n_quad, n_slices) -> OperatorSlices:
    rule = triangle_rule(n_quad)
    n_faces, n_points = mesh.n_faces, rule.n_points
    m_dim = mesh.n_edges
    verts = mesh.vertices

    pts, w_area, test_vals = _edge_testing(mesh, space, rule)
    # rotated testing collapses: (n x f_m) . (n x G) = f_m . G for the
    # tangential test functions, so every kernel is contracted with the
    # plain edge-element values
    weighted = test_vals * w_area[:, :, None, None]

    c = medium.wave_speed
    n_shells = n_slices + 1
    radii = c * dt * np.arange(n_shells + 1)

    points = np.ascontiguousarray(pts.reshape(-1, 3))
    n_total = len(points)

    single = np.zeros((n_slices + 1, m_dim, m_dim))
    hyper = np.zeros((n_slices + 1, m_dim, m_dim))
    mixed = np.zeros((n_slices + 1, m_dim, m_dim))
    tail = np.zeros((m_dim, m_dim))

    rows = space.slot_edge[:, :, None]  # (F, 3, 1) observation edge indices
    inv4pi = 1.0 / (4.0 * math.pi)

    for src in range(n_faces):
        tri = verts[mesh.faces[src]]
        centre = mesh.centroids[src]
        reach = np.linalg.norm(tri - centre, axis=1).max()
        dist = np.linalg.norm(points - centre, axis=1)
        lo_bound = np.maximum(dist - reach, 0.0)
        hi_bound = dist + reach

        s_m1 = np.zeros((n_shells + 1, n_total))
        s_0 = np.zeros((n_shells + 1, n_total))
        s_1 = np.zeros((n_shells + 1, n_total))
        v_m1 = np.zeros((n_shells + 1, n_total, 3))
        v_m3 = np.zeros((n_shells + 1, n_total, 3))
        for j in range(1, n_shells + 1):
            active = (lo_bound < radii[j]) & (hi_bound > radii[j - 1])
            if not active.any():
                continue
            mom = shell_moments_batch(
                points[active],
                tri,
                radii[j - 1],
                radii[j],
                scalar_powers=(-1, 0, 1),
                vector_powers=(-1, -3),
            )
            s_m1[j, active] = mom[("S", -1)]
            s_0[j, active] = mom[("S", 0)]
            s_1[j, active] = mom[("S", 1)]
            v_m1[j, active] = mom[("V", -1)]
            v_m3[j, active] = mom[("V", -3)]
        ball = np.cumsum(s_m1, axis=0)  # ball[j]: moment S_-1 over R < c j dt

        cols = space.slot_edge[src][None, None, :]
        signs = space.slot_sign[src]
        half = (
            signs
            * space.lengths[space.slot_edge[src]]
            / (2.0 * mesh.areas[src])
            * inv4pi
        )
        div_src = space.slot_div[src] * inv4pi
        spray = points[None, :, :] - verts[space.slot_free[src]][:, None, :]

        # (shell, point, source slot, component)
        inner_single = half[None, None, :, None] * (
            spray.transpose(1, 0, 2)[None] * s_m1[:, :, None, None]
            - v_m1[:, :, None, :]
        )
        inner_mixed = half[None, None, :, None] * np.cross(
            v_m3[:, :, None, :], spray.transpose(1, 0, 2)[None]
        )
        # the mixed kernel vanishes identically on the source triangle
        # itself (both factors lie in its plane); skip those rows
        inner_mixed[:, src * n_points : (src + 1) * n_points] = 0.0

        for k in range(n_slices + 1):
            near, far = _hat_shell_coefficients(k, dt, c)
            diff = (inner_single[k] - inner_single[k + 1]) / (c * dt)
            contrib = np.einsum(
                "fqmc,fqnc->fmn",
                weighted,
                diff.reshape(n_faces, n_points, 3, 3),
            )
            np.add.at(single[k], (rows, cols), contrib)

            g = (
                near[0] * s_m1[k]
                + near[1] * s_0[k]
                + near[2] * s_1[k]
                + far[0] * s_m1[k + 1]
                + far[1] * s_0[k + 1]
                + far[2] * s_1[k + 1]
            )
            if k >= 1:
                g = g + dt * ball[k - 1]
            g_face = np.einsum("fq,fq->f", w_area, g.reshape(n_faces, n_points))
            contrib = -c * np.einsum("fm,f,n->fmn", space.slot_div, g_face, div_src)
            np.add.at(hyper[k], (rows, cols), contrib)

            # gradient of the retarded kernel points along -(x - y), hence
            # the leading minus sign
            kin = (k - 1.0) * inner_mixed[k] - (1.0 + k) * inner_mixed[k + 1]
            contrib = np.einsum(
                "fqmc,fqnc->fmn",
                weighted,
                kin.reshape(n_faces, n_points, 3, 3),
            )
            np.add.at(mixed[k], (rows, cols), contrib)

        # same operation order as the slice loop so that saturated slices
        # come out bitwise equal to the tail
        g_face = np.einsum(
            "fq,fq->f", w_area, (dt * ball[n_shells]).reshape(n_faces, n_points)
        )
        contrib = -c * np.einsum("fm,f,n->fmn", space.slot_div, g_face, div_src)
        np.add.at(tail, (rows, cols), contrib)

    return OperatorSlices(
        single=single, hyper=hyper, mixed=mixed, hyper_tail=tail, n_slices=n_slices
    )


def assemble_T_slice(
    mesh: TriangleMesh,
    medium: Medium,
    dt: float,
    k: int,
    n_quad: int,
    space: RwgSpace | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Slice k of the electric-type operator: (single layer, hypersingular)."""
    n_slices = max(history_length(mesh, dt, medium), k)
    ops = operator_slices(mesh, medium, dt, n_quad, n_slices, space)
    return ops.single[k], ops.hyper[k]


def assemble_Th_tail(
    mesh: TriangleMesh,
    dt: float,
    n_quad: int,
    medium: Medium = Medium(),
    space: RwgSpace | None = None,
) -> np.ndarray:
    """Hypersingular tail: -dt times the static kernel (medium-independent).

    The per-medium slices converge to ``wave_speed`` times this matrix;
    the ``medium`` argument only selects which cached assembly supplies it.
    """
    ops = operator_slices(mesh, medium, dt, n_quad, None, space)
    return ops.hyper_tail / medium.wave_speed


def assemble_K_slice(
    mesh: TriangleMesh,
    medium: Medium,
    dt: float,
    k: int,
    n_quad: int,
    space: RwgSpace | None = None,
) -> np.ndarray:
    """Slice k of the magnetic-type (mixed) operator."""
    n_slices = max(history_length(mesh, dt, medium), k)
    ops = operator_slices(mesh, medium, dt, n_quad, n_slices, space)
    return ops.mixed[k]


@dataclass
class MarchingSystem:
    """Everything a marching recursion needs: Z_0..Z_k0 and the tail.

    ``slices[k]`` multiplies the solution ``k`` steps back; every older
    step is multiplied by ``tail``, so the recursion only keeps a running
    sum beyond the stored history.
    """

    formulation: str  # "efie" or "pmchwt"
    slices: list[np.ndarray]
    tail: np.ndarray
    dt: float
    n_quad: int
    media: tuple[Medium, ...]
    mesh_id: str = ""

    @property
    def history(self) -> int:
        return len(self.slices) - 1

    @property
    def n_functions(self) -> int:
        return self.tail.shape[0]


def assemble_efie_slices(
    mesh: TriangleMesh,
    dt: float,
    n_quad: int,
    medium: Medium = Medium(),
    space: RwgSpace | None = None,
) -> MarchingSystem:
    """Marching matrices of the electric-field equation in one medium."""
    k0 = history_length(mesh, dt, medium)
    ops = operator_slices(mesh, medium, dt, n_quad, k0, space)
    eta = medium.impedance
    slices = [eta * (ops.single[k] + ops.hyper[k]) for k in range(k0 + 1)]
    tail = eta * ops.hyper_tail
    return MarchingSystem(
        formulation="efie",
        slices=slices,
        tail=tail,
        dt=dt,
        n_quad=n_quad,
        media=(medium,),
        mesh_id=_mesh_token(mesh),
    )


def assemble_pmchwt_slices(
    mesh: TriangleMesh,
    dt: float,
    n_quad: int,
    exterior: Medium = Medium(),
    interior: Medium = Medium(2.0, 1.0),
    space: RwgSpace | None = None,
) -> MarchingSystem:
    """Marching matrices of the single-interface transmission equations.

    Unknowns are stacked as (electric current, magnetic current); both
    media contribute their own retarded operators on the shared surface.
    """
    k0 = history_length(mesh, dt, exterior, interior)
    if space is None:
        space = build_rwg(mesh)
    ops_e = operator_slices(mesh, exterior, dt, n_quad, k0, space)
    ops_i = operator_slices(mesh, interior, dt, n_quad, k0, space)
    eta_e, eta_i = exterior.impedance, interior.impedance

    slices = []
    for k in range(k0 + 1):
        t_e = ops_e.single[k] + ops_e.hyper[k]
        t_i = ops_i.single[k] + ops_i.hyper[k]
        k_sum = ops_e.mixed[k] + ops_i.mixed[k]
        top = np.hstack([eta_e * t_e + eta_i * t_i, -k_sum])
        bottom = np.hstack([k_sum, t_e / eta_e + t_i / eta_i])
        slices.append(np.vstack([top, bottom]))

    m_dim = mesh.n_edges
    tail = np.zeros((2 * m_dim, 2 * m_dim))
    tail[:m_dim, :m_dim] = eta_e * ops_e.hyper_tail + eta_i * ops_i.hyper_tail
    tail[m_dim:, m_dim:] = ops_e.hyper_tail / eta_e + ops_i.hyper_tail / eta_i
    return MarchingSystem(
        formulation="pmchwt",
        slices=slices,
        tail=tail,
        dt=dt,
        n_quad=n_quad,
        media=(exterior, interior),
        mesh_id=_mesh_token(mesh),
    )


# -- slice files ---------------------------------------------------------------

_MAGIC = b"MOTSLICE"
_VERSION = 1
_HEADER = struct.Struct("<8sIB3xIII5d")
_FORM_CODE = {"efie": 0, "pmchwt": 1}
_FORM_NAME = {v: k for k, v in _FORM_CODE.items()}


def save_slices(path, system: MarchingSystem) -> None:
    """Write a marching system to the binary slice format."""
    m_dim = system.n_functions
    media = list(system.media)
    if len(media) == 1:
        pars = (media[0].epsilon, media[0].mu, math.nan, math.nan)
    else:
        pars = (media[0].epsilon, media[0].mu, media[1].epsilon, media[1].mu)
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        _FORM_CODE[system.formulation],
        m_dim,
        system.history,
        system.n_quad,
        system.dt,
        *pars,
    )
    stack = np.concatenate(
        [np.stack(system.slices), system.tail[None]], axis=0
    ).astype("<f8", copy=False)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(stack.tobytes())


def load_slices(path) -> MarchingSystem:
    """Read a marching system written by :func:`save_slices`."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size or raw[:8] != _MAGIC:
        raise ValueError("not a slice file")
    magic, version, form, m_dim, k0, n_quad, dt, e1, m1, e2, m2 = _HEADER.unpack(
        raw[: _HEADER.size]
    )
    if version != _VERSION:
        raise ValueError(f"unsupported slice file version {version}")
    count = (k0 + 2) * m_dim * m_dim
    data = np.frombuffer(raw, dtype="<f8", count=count, offset=_HEADER.size)
    stack = data.reshape(k0 + 2, m_dim, m_dim).copy()
    if math.isnan(e2):
        media = (Medium(e1, m1),)
    else:
        media = (Medium(e1, m1), Medium(e2, m2))
    return MarchingSystem(
        formulation=_FORM_NAME[form],
        slices=list(stack[:-1]),
        tail=stack[-1],
        dt=dt,
        n_quad=n_quad,
        media=media,
    )
