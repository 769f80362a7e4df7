"""Closed-form moments of R-power kernels over shell-clipped triangles.

Everything a causal time-stepping kernel needs from a flat triangle reduces
to the three moment families

    S_p = int_T' R^p dA,
    V_p = int_T' (x - y) R^p dA,
    int_T' (y - v) R^p dA = (x - v) S_p - V_p,

taken over T' = the part of the triangle between two spheres
``r_lo <= R <= r_hi`` centered on the observation point ``x`` (``R = |x - y|``).
These are evaluated here in closed form, which is what lets sums of
consecutive shells telescope to machine precision.

Geometry: with ``d`` the signed height of ``x`` over the plane and ``x0``
its projection, split the triangle into three signed wedges, one per edge,
apex at ``x0``.  In a wedge the spheres become concentric circles
(radii rho_i = sqrt(r_i^2 - d^2)), and along the edge, parametrized by the
signed offset ``s`` from the perpendicular foot, each subinterval is in one
of three regimes: fully inside the inner circle (no contribution), capped
by the edge (an antiderivative in the wedge angle ``u = atan(s/hh)``), or
capped by the outer circle (a pure arc term).  The vector moment is a
plane gradient, so it needs only the boundary of T': the edge pieces with
outward normal m, plus the two circular arcs -- radial cuts cancel
identically between adjacent wedges and never appear.

All antiderivatives are elementary except the scalar p = -2 edge term,
whose angular integral ``int ln R du`` has no elementary form; that one
piece (never needed by operator assembly, which only sees p in
{-3, -1, 0, 1}) goes to adaptive quadrature on an analytic integrand.

Principal-value convention: for p = -3 with the observation point in the
triangle plane, the inner-arc coefficient ``rho1/R1`` is taken as its
limit 1 when both radii vanish; the signed arcs then cancel, which
reproduces the symmetric-limit principal value.

Counters for the rare near-degenerate paths (shell tangent to an edge
line, inner radius clipped away from an off-triangle singularity) are kept
in module stats; see :func:`quadrature_stats`.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

logger = logging.getLogger(__name__)

__all__ = [
    "ShellKernelQuery",
    "shell_restricted_integral",
    "shell_moments_batch",
    "quadrature_stats",
]

_POWERS = (-3, -2, -1, 0, 1)

_STATS = {
    "queries": 0,
    "points": 0,
    "tangency_near_hits": 0,
    "inner_radius_clips": 0,
}


def quadrature_stats(reset: bool = False) -> dict:
    """Counters of near-degenerate handling since the last reset."""
    out = dict(_STATS)
    if reset:
        for key in _STATS:
            _STATS[key] = 0
    return out


def _pval(p: int, r):
    """Radial antiderivative P_p(R) = int R^p rho drho expressed in R."""
    if p == -2:
        return np.log(r)
    return r ** (p + 2) / (p + 2)


def _a_table(p: int, t, u, rho_e, r_t, hh, w, absd):
    """Angular antiderivative A_p with dA_p/du = P_p(R(u)); s-form."""
    if p == 0:
        return 0.5 * (absd * absd * u + hh * t)
    asinh_tw = np.arcsinh(t / w)
    if p == -1:
        arg = np.clip(absd * t / (w * rho_e), -1.0, 1.0)
        return hh * asinh_tw + absd * np.arcsin(arg)
    if p == -3:
        arg = np.clip(absd * t / (w * rho_e), -1.0, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            general = -np.arcsin(arg) / absd
            planar = -t / (rho_e * hh)
        return np.where(absd > 0.0, general, planar)
    if p == 1:
        a_m1 = _a_table(-1, t, u, rho_e, r_t, hh, w, absd)
        return (absd * absd * a_m1 + 0.5 * hh * (t * r_t + w * w * asinh_tw)) / 3.0
    raise AssertionError(p)


def _l_table(p: int, t, r_t, w):
    """Edge antiderivative L_p with dL_p/ds = P_p(R(s)) along the edge line."""
    if p == -3:
        return -np.arcsinh(t / w)
    if p == -2:
        return 0.5 * t * np.log(w * w + t * t) - t + w * np.arctan(t / w)
    asinh_tw = np.arcsinh(t / w)
    if p == -1:
        return 0.5 * (t * r_t + w * w * asinh_tw)
    if p == 0:
        return 0.5 * (w * w * t + t**3 / 3.0)
    if p == 1:
        return (0.25 * t * r_t**3 + 0.375 * w * w * (t * r_t + w * w * asinh_tw)) / 3.0
    raise AssertionError(p)


def _arc_coef_inner(p: int, rho1, r1):
    """-P_p(rho1) * rho1, with the p = -3 principal-value limit at 0/0."""
    if p == 1:
        return -rho1 * r1**3 / 3.0
    if p == 0:
        return -0.5 * rho1 * r1 * r1
    if p == -1:
        return -rho1 * r1
    if p == -2:
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -rho1 * np.log(r1)
        return np.where(rho1 > 0.0, val, 0.0)
    if p == -3:
        with np.errstate(divide="ignore", invalid="ignore"):
            val = rho1 / r1
        return np.where(r1 > 0.0, val, 1.0)
    raise AssertionError(p)


def _arc_coef_outer(p: int, rho2, r2):
    """+P_p(rho2) * rho2; zero when the outer circle is at infinity."""
    finite = np.isfinite(rho2)
    rho = np.where(finite, rho2, 1.0)
    r = np.where(finite, r2, 1.0)
    if p == 1:
        val = rho * r**3 / 3.0
    elif p == 0:
        val = 0.5 * rho * r * r
    elif p == -1:
        val = rho * r
    elif p == -2:
        val = rho * np.log(r)
    elif p == -3:
        val = -rho / r
    else:
        raise AssertionError(p)
    return np.where(finite, val, 0.0)


def _scalar_arc_band(p: int, r1, r2):
    """P_p(rho2) - P_p(rho1): the radial band crossed by pure-arc sectors.

    An infinite outer sphere leaves no pure-arc sectors at all, so its band
    is pinned to zero rather than evaluated.
    """
    finite = np.isfinite(r2)
    r2s = np.where(finite, r2, 1.0)
    if p == -2:
        band = np.log(r2s / r1)
    else:
        band = (r2s ** (p + 2) - r1 ** (p + 2)) / (p + 2)
    return np.where(finite, band, 0.0)


def _log_edge_quad(u_lo, u_hi, hh, w2, r1):
    """int_{u_lo}^{u_hi} ln(R(u)/R1) du with R(u)^2 = w^2 + hh^2 tan^2 u."""
    log_r1 = math.log(r1)

    def f(u):
        tan_u = math.tan(u)
        return 0.5 * math.log(w2 + hh * hh * tan_u * tan_u) - log_r1

    ref = max(abs(f(0.5 * (u_lo + u_hi))), 1.0) * (u_hi - u_lo)
    return integrate.quad(
        f, u_lo, u_hi, epsabs=1e-14 * ref, epsrel=1e-13, limit=200, full_output=1
    )[0]


def _moments_chunk(pts, tri, r_lo, r_hi, scalar_ps, vector_ps):
    """Core evaluation for one chunk of observation points."""
    n_pts = len(pts)
    v0, v1, v2 = tri
    nvec = np.cross(v1 - v0, v2 - v0)
    two_area = np.linalg.norm(nvec)
    if two_area <= 0.0:
        raise ValueError("degenerate triangle")
    n_hat = nvec / two_area

    d = (pts - v0) @ n_hat
    absd = np.abs(d)
    x0 = pts - d[:, None] * n_hat

    rho1 = np.sqrt(np.maximum(r_lo * r_lo - d * d, 0.0))
    rho2_sq = r_hi * r_hi - d * d if np.isfinite(r_hi) else np.full(n_pts, np.inf)
    valid = rho2_sq > 0.0
    rho2 = np.sqrt(np.maximum(rho2_sq, 0.0))

    # per-edge frames and in-plane coordinates: s along the edge from the
    # perpendicular foot, hh the unsigned foot distance, sg the wedge sign
    edge_t = np.empty((3, 3))
    edge_m = np.empty((3, 3))
    hh = np.empty((3, n_pts))
    sg = np.empty((3, n_pts))
    s_lo = np.empty((3, n_pts))
    s_hi = np.empty((3, n_pts))
    verts = (v0, v1, v2)
    for e in range(3):
        a, b = verts[e], verts[(e + 1) % 3]
        length = np.linalg.norm(b - a)
        if length <= 0.0:
            raise ValueError("degenerate triangle edge")
        t_hat = (b - a) / length
        m_hat = np.cross(t_hat, n_hat)
        edge_t[e], edge_m[e] = t_hat, m_hat
        h = (a - x0) @ m_hat
        sg[e] = np.sign(h)
        hh[e] = np.abs(h)
        s_lo[e] = (a - x0) @ t_hat
        s_hi[e] = s_lo[e] + length
    edge_ok = hh > 0.0

    # distance from x0 to the closed triangle, needed to pull a vanished
    # inner radius off an off-triangle kernel singularity
    inside = (sg > 0.0).all(axis=0)
    foot_between = (s_lo <= 0.0) & (s_hi >= 0.0)
    seg_d = np.where(
        foot_between,
        hh,
        np.sqrt(hh * hh + np.minimum(s_lo * s_lo, s_hi * s_hi)),
    )
    dist_inplane = np.where(inside, 0.0, seg_d.min(axis=0))

    r1_zero = (np.maximum(r_lo, absd) == 0.0) & valid
    clip_mask = r1_zero & (dist_inplane > 0.0)
    if np.any(clip_mask):
        rho1 = np.where(clip_mask, (1.0 - 1e-12) * dist_inplane, rho1)
        _STATS["inner_radius_clips"] += int(clip_mask.sum())
        logger.debug("inner radius clipped for %d points", int(clip_mask.sum()))
    on_surface = r1_zero & (dist_inplane <= 0.0)
    if np.any(on_surface & valid) and any(p <= -2 for p in scalar_ps):
        raise ValueError(
            "divergent scalar moment: power <= -2 with zero inner radius and "
            "the observation point on the triangle"
        )

    r1 = np.hypot(d, rho1)
    r2 = np.where(np.isfinite(rho2), np.hypot(d, rho2), np.inf)

    # crossing offsets and the five-interval partition of each edge
    hh2 = hh * hh
    c1_sq = rho1 * rho1 - hh2
    c2_sq = rho2 * rho2 - hh2
    near = np.abs(c1_sq) < 1e-12 * np.maximum(rho1 * rho1, hh2)
    near |= np.isfinite(rho2) & (np.abs(c2_sq) < 1e-12 * np.maximum(rho2 * rho2, hh2))
    _STATS["tangency_near_hits"] += int((near & edge_ok).sum())
    s1 = np.sqrt(np.maximum(c1_sq, 0.0))
    s2 = np.where(np.isinf(rho2), np.inf, np.sqrt(np.maximum(c2_sq, 0.0)))

    t = np.empty((3, n_pts, 6))
    t[..., 0] = s_lo
    t[..., 1] = np.clip(-s2, s_lo, s_hi)
    t[..., 2] = np.clip(-s1, s_lo, s_hi)
    t[..., 3] = np.clip(s1, s_lo, s_hi)
    t[..., 4] = np.clip(s2, s_lo, s_hi)
    t[..., 5] = s_hi

    hh_e = hh[..., None]
    w2 = (d * d)[None, :] + hh2
    w = np.sqrt(w2)[..., None]
    u = np.arctan2(t, hh_e)
    rho_e = np.hypot(t, hh_e)
    r_t = np.sqrt(w * w + t * t)

    mid = np.abs(0.5 * (t[..., :5] + t[..., 1:]))
    edge_band = (mid >= s1[..., None]) & (mid < s2[..., None])
    arc_band = mid >= s2[..., None]

    du = np.diff(u, axis=-1)
    results: dict[tuple[str, int], np.ndarray] = {}

    internal_scalars = set(scalar_ps) | set(vector_ps)
    scalar_vals: dict[int, np.ndarray] = {}
    for p in sorted(internal_scalars):
        requested = p in scalar_ps
        band = _scalar_arc_band(p, r1, r2)
        arc_sum = np.where(arc_band, du, 0.0).sum(axis=-1) * band[None, :]
        if p == -2:
            edge_sum = np.zeros((3, n_pts))
            # adaptive angular integral for the one non-elementary piece;
            # only points that can actually need it (requested, or feeding
            # a vector moment through d * S with d != 0) are visited
            needs = valid & (r1 > 0.0) if requested else valid & (d != 0.0)
            todo = edge_band & edge_ok[..., None] & needs[None, :, None]
            todo &= np.diff(t, axis=-1) > 0.0
            for e, i, k in np.argwhere(todo):
                edge_sum[e, i] += _log_edge_quad(
                    u[e, i, k], u[e, i, k + 1], hh[e, i], w2[e, i], r1[i]
                )
        else:
            a_vals = _a_table(p, t, u, rho_e, r_t, hh_e, w, absd[None, :, None])
            b_vals = a_vals - u * _pval(p, r1)[None, :, None]
            edge_sum = np.where(edge_band, np.diff(b_vals, axis=-1), 0.0).sum(axis=-1)
        per_edge = np.where(edge_ok, sg * (edge_sum + arc_sum), 0.0)
        s_total = np.where(valid, per_edge.sum(axis=0), 0.0)
        scalar_vals[p] = s_total
        if requested:
            results[("S", p)] = s_total

    if vector_ps:
        sin_part = t / rho_e
        cos_part = hh_e / rho_e
        d_sin = np.diff(sin_part, axis=-1)
        d_cos = np.diff(cos_part, axis=-1)
        reach_band = edge_band | arc_band
        inner_m = np.where(reach_band, d_sin, 0.0).sum(axis=-1)
        inner_t = np.where(reach_band, d_cos, 0.0).sum(axis=-1)
        outer_m = np.where(arc_band, d_sin, 0.0).sum(axis=-1)
        outer_t = np.where(arc_band, d_cos, 0.0).sum(axis=-1)
        for p in sorted(vector_ps):
            lid = np.where(edge_band, np.diff(_l_table(p, t, r_t, w), axis=-1), 0.0)
            lid = lid.sum(axis=-1)
            cf_in = _arc_coef_inner(p, rho1, r1)[None, :]
            cf_out = _arc_coef_outer(p, rho2, r2)[None, :]
            coef_m = lid + cf_in * inner_m + cf_out * outer_m
            coef_t = sg * (cf_in * inner_t + cf_out * outer_t)
            coef_m = np.where(edge_ok, coef_m, 0.0)
            coef_t = np.where(edge_ok, coef_t, 0.0)
            w_vec = coef_m.T @ edge_m - coef_t.T @ edge_t
            with np.errstate(invalid="ignore"):
                normal_term = np.where(d != 0.0, d * scalar_vals[p], 0.0)
            v_vec = normal_term[:, None] * n_hat[None, :] - w_vec
            results[("V", p)] = np.where(valid[:, None], v_vec, 0.0)

    return results


def shell_moments_batch(
    points,
    triangle,
    r_lo: float,
    r_hi: float,
    scalar_powers=(),
    vector_powers=(),
    chunk: int = 8192,
) -> dict[tuple[str, int], np.ndarray]:
    """Batched shell-restricted moments against one source triangle.

    Returns ``{("S", p): (N,) array}`` for each requested scalar power and
    ``{("V", p): (N, 3) array}`` for each requested vector power, where the
    vector moment is ``int (x - y) R^p dA``.  ``r_hi`` may be ``inf``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    tri = np.asarray(triangle, dtype=np.float64)
    if tri.shape != (3, 3):
        raise ValueError("triangle must be (3, 3) vertex rows")
    scalar_ps = tuple(int(p) for p in scalar_powers)
    vector_ps = tuple(int(p) for p in vector_powers)
    for p in scalar_ps + vector_ps:
        if p not in _POWERS:
            raise ValueError(f"unsupported kernel power {p}")
    if r_lo < 0.0 or not r_hi > 0.0:
        raise ValueError("need 0 <= r_lo and r_hi > 0")

    _STATS["queries"] += 1
    _STATS["points"] += len(pts)

    keys = [("S", p) for p in scalar_ps] + [("V", p) for p in vector_ps]
    if r_hi <= r_lo:
        return {
            (kind, p): np.zeros(len(pts) if kind == "S" else (len(pts), 3))
            for kind, p in keys
        }

    out = {}
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for start in range(0, len(pts), chunk):
            part = _moments_chunk(
                pts[start : start + chunk], tri, r_lo, r_hi, scalar_ps, vector_ps
            )
            for key, val in part.items():
                out.setdefault(key, []).append(val)
    return {key: np.concatenate(vals, axis=0) for key, vals in out.items()}


def shell_restricted_integral(
    point,
    triangle,
    power: int,
    r_lo: float,
    r_hi: float,
    moment: str = "scalar",
    vertex=None,
):
    """Single shell-restricted moment; see :func:`shell_moments_batch`.

    ``moment`` selects the integrand: ``"scalar"`` for R^p, ``"distance"``
    for (x - y) R^p, ``"rwg"`` for (y - vertex) R^p.
    """
    if moment == "scalar":
        res = shell_moments_batch(point, triangle, r_lo, r_hi, scalar_powers=(power,))
        return float(res[("S", power)][0])
    if moment == "distance":
        res = shell_moments_batch(point, triangle, r_lo, r_hi, vector_powers=(power,))
        return res[("V", power)][0]
    if moment == "rwg":
        if vertex is None:
            raise ValueError("moment='rwg' needs the free vertex")
        res = shell_moments_batch(
            point, triangle, r_lo, r_hi, scalar_powers=(power,), vector_powers=(power,)
        )
        x = np.asarray(point, dtype=np.float64)
        v = np.asarray(vertex, dtype=np.float64)
        return (x - v) * res[("S", power)][0] - res[("V", power)][0]
    raise ValueError(f"unknown moment {moment!r}")


@dataclass
class ShellKernelQuery:
    """One shell-restricted moment request, kept as data for logging/replay."""

    point: np.ndarray
    triangle: np.ndarray
    power: int
    r_lo: float
    r_hi: float
    moment: str = "scalar"
    vertex: np.ndarray | None = field(default=None)

    def evaluate(self):
        return shell_restricted_integral(
            self.point,
            self.triangle,
            self.power,
            self.r_lo,
            self.r_hi,
            self.moment,
            self.vertex,
        )
