"""Independent reference evaluator for shell-restricted triangle moments.

This module exists to cross-check the closed forms in :mod:`.shell` and is
deliberately built on a different reduction.  Every kernel handled here
depends on the source point ``y`` only through ``R = |x - y|``, which in
turn depends only on the in-plane radius ``rho = |y - x0|`` around the
projection ``x0`` of the observation point onto the triangle plane.  The
surface integral therefore collapses to one radial dimension,

    S_p = int rho (d^2 + rho^2)^(p/2) Theta(rho) drho,
    W_p = int rho^2 (d^2 + rho^2)^(p/2) C(rho) drho,

where ``Theta(rho)`` is the angular measure of the circle of radius
``rho`` that lies inside the triangle and ``C(rho)`` the corresponding
direction integral of the unit radial vector.  Both are computed exactly
from circle/edge intersection angles; the radial integrals go to
``scipy.integrate.quad`` after splitting at every radius where the arc
structure changes character (vertex distances, edge-foot distances, shell
bounds), so each piece QUADPACK sees is analytic.

Slow but trustworthy; use for validation, never for assembly.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate

__all__ = ["oracle_adaptive_integral"]

_TWO_PI = 2.0 * math.pi


class _PolarGeometry:
    """2-D polar view of a triangle around the projected observation point."""

    def __init__(self, point: np.ndarray, triangle: np.ndarray):
        verts = np.asarray(triangle, dtype=float)
        point = np.asarray(point, dtype=float)
        v0, v1, v2 = verts
        nvec = np.cross(v1 - v0, v2 - v0)
        nlen = float(np.linalg.norm(nvec))
        if nlen <= 0.0:
            raise ValueError("degenerate triangle")
        n_hat = nvec / nlen
        e1 = (v1 - v0) / np.linalg.norm(v1 - v0)
        e2 = np.cross(n_hat, e1)

        self.n_hat = n_hat
        self.d = float(np.dot(point - v0, n_hat))
        x0 = point - self.d * n_hat
        self.x0 = x0
        self.e1, self.e2 = e1, e2
        self.P = [
            (float(np.dot(v - x0, e1)), float(np.dot(v - x0, e2))) for v in verts
        ]
        area2 = 0.0
        for i in range(3):
            ax, ay = self.P[i]
            bx, by = self.P[(i + 1) % 3]
            area2 += ax * by - ay * bx
        # winding follows the vertex order that defined n_hat, so this frame
        # always sees the triangle counterclockwise
        if area2 <= 0.0:
            raise AssertionError("projected triangle lost its orientation")
        self.vertex_radii = [math.hypot(px, py) for px, py in self.P]
        self.rho_far = max(self.vertex_radii)
        self.scale = self.rho_far

    def contains(self, qx: float, qy: float, tol: float) -> bool:
        for i in range(3):
            ax, ay = self.P[i]
            bx, by = self.P[(i + 1) % 3]
            if (bx - ax) * (qy - ay) - (by - ay) * (qx - ax) < -tol:
                return False
        return True

    def inplane_distance(self) -> float:
        """Distance from the origin (= x0) to the closed triangle, in plane."""
        if self.contains(0.0, 0.0, 0.0):
            return 0.0
        best = math.inf
        for i in range(3):
            ax, ay = self.P[i]
            bx, by = self.P[(i + 1) % 3]
            ex, ey = bx - ax, by - ay
            t = -(ax * ex + ay * ey) / (ex * ex + ey * ey)
            t = min(1.0, max(0.0, t))
            best = min(best, math.hypot(ax + t * ex, ay + t * ey))
        return best

    def spans(self, rho: float) -> list[tuple[float, float]]:
        """Angular intervals of the circle |q| = rho lying inside the triangle."""
        tol = 1e-13 * max(self.scale, rho)
        events: list[float] = []
        for i in range(3):
            ax, ay = self.P[i]
            bx, by = self.P[(i + 1) % 3]
            ex, ey = bx - ax, by - ay
            qa = ex * ex + ey * ey
            qb = 2.0 * (ax * ex + ay * ey)
            qc = ax * ax + ay * ay - rho * rho
            disc = qb * qb - 4.0 * qa * qc
            if disc <= 0.0:
                continue
            root = math.sqrt(disc)
            for t in ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)):
                if 0.0 < t < 1.0:
                    events.append(math.atan2(ay + t * ey, ax + t * ex))
        if not events:
            if self.contains(rho, 0.0, tol):
                return [(0.0, _TWO_PI)]
            return []
        events.sort()
        spans = []
        for j, th_a in enumerate(events):
            th_b = events[j + 1] if j + 1 < len(events) else events[0] + _TWO_PI
            mid = 0.5 * (th_a + th_b)
            if self.contains(rho * math.cos(mid), rho * math.sin(mid), tol):
                spans.append((th_a, th_b))
        return spans

    def theta(self, rho: float) -> float:
        return sum(b - a for a, b in self.spans(rho))

    def cvec(self, rho: float) -> tuple[float, float]:
        c1 = c2 = 0.0
        for a, b in self.spans(rho):
            c1 += math.sin(b) - math.sin(a)
            c2 += math.cos(a) - math.cos(b)
        return c1, c2

    def breakpoints(self, rho_lo: float, rho_hi: float) -> list[float]:
        """Radii in (rho_lo, rho_hi) where the arc structure can change."""
        crit = set(self.vertex_radii)
        for i in range(3):
            ax, ay = self.P[i]
            bx, by = self.P[(i + 1) % 3]
            ex, ey = bx - ax, by - ay
            t = -(ax * ex + ay * ey) / (ex * ex + ey * ey)
            if 0.0 < t < 1.0:
                crit.add(math.hypot(ax + t * ex, ay + t * ey))
        cuts = sorted(r for r in crit if rho_lo < r < rho_hi)
        merged = [rho_lo]
        for r in cuts + [rho_hi]:
            if r - merged[-1] > 1e-14 * max(self.scale, 1.0):
                merged.append(r)
        if merged[-1] != rho_hi:
            merged[-1] = rho_hi
        return merged


def _quad_pieces(func, grid: list[float]) -> float:
    total = 0.0
    for a, b in zip(grid[:-1], grid[1:]):
        probes = [func(a + f * (b - a)) for f in (0.137, 0.391, 0.5, 0.743, 0.926)]
        ref = max(abs(p) for p in probes) * (b - a)
        epsabs = 1e-13 * ref + 1e-300
        val = integrate.quad(
            func, a, b, epsabs=epsabs, epsrel=1e-12, limit=250, full_output=1
        )[0]
        total += val
    return total


def oracle_adaptive_integral(
    point,
    triangle,
    power: int,
    r_lo: float,
    r_hi: float,
    moment: str = "scalar",
    vertex=None,
):
    """Shell-restricted moment over a triangle by adaptive radial quadrature.

    Evaluates, over the part of ``triangle`` with ``r_lo <= |x - y| <= r_hi``
    around the observation point ``x``:

    - ``moment="scalar"``:   integral of R**power                (float)
    - ``moment="distance"``: integral of (x - y) R**power        ((3,) array)
    - ``moment="rwg"``:      integral of (y - vertex) R**power   ((3,) array)

    ``r_hi`` may be infinite (the triangle is bounded, so nothing diverges
    at large R).  Scalar and rwg moments with power <= -2 require the
    kernel bounded on the domain: ``r_lo > 0`` or the observation point
    off the triangle.
    """
    if moment not in ("scalar", "distance", "rwg"):
        raise ValueError(f"unknown moment {moment!r}")
    if moment == "rwg" and vertex is None:
        raise ValueError("moment='rwg' needs the free vertex")
    power = int(power)
    if not -3 <= power <= 1:
        raise ValueError("power must be in -3..1")

    geo = _PolarGeometry(point, triangle)
    d = geo.d

    def _zero():
        if moment == "scalar":
            return 0.0
        return np.zeros(3)

    if r_hi <= r_lo or r_hi <= abs(d):
        return _zero()

    rho_lo = math.sqrt(max(r_lo * r_lo - d * d, 0.0))
    rho_hi_sq = r_hi * r_hi - d * d
    rho_hi = math.inf if math.isinf(r_hi) else math.sqrt(rho_hi_sq)
    rho_hi = min(rho_hi, geo.rho_far)
    if rho_hi <= rho_lo:
        return _zero()

    if power <= -2 and r_lo == 0.0 and d == 0.0 and geo.inplane_distance() == 0.0:
        if moment in ("scalar", "rwg"):
            raise ValueError(
                "divergent moment: kernel unbounded on the triangle "
                "(power <= -2 with the observation point on the surface)"
            )

    grid = geo.breakpoints(rho_lo, rho_hi)
    half_p = 0.5 * power

    def f_scalar(rho: float) -> float:
        return rho * (d * d + rho * rho) ** half_p * geo.theta(rho)

    need_scalar = moment != "scalar" and d != 0.0
    s_val = None
    if moment == "scalar" or need_scalar:
        s_val = _quad_pieces(f_scalar, grid)
    if moment == "scalar":
        return s_val

    def f_c1(rho: float) -> float:
        return rho * rho * (d * d + rho * rho) ** half_p * geo.cvec(rho)[0]

    def f_c2(rho: float) -> float:
        return rho * rho * (d * d + rho * rho) ** half_p * geo.cvec(rho)[1]

    w_vec = _quad_pieces(f_c1, grid) * geo.e1 + _quad_pieces(f_c2, grid) * geo.e2
    v_vec = (d * s_val) * geo.n_hat - w_vec if d != 0.0 else -w_vec
    if moment == "distance":
        return v_vec
    x = np.asarray(point, dtype=float)
    v = np.asarray(vertex, dtype=float)
    if s_val is None:
        s_val = _quad_pieces(f_scalar, grid)
    return (x - v) * s_val - v_vec


def oracle_deviation_sweep(samples: int = 200, seed: int = 0) -> float:
    """Max relative deviation of the closed forms from this oracle.

    Draws well-posed random cases: non-degenerate triangles, kernel
    powers -2..0, scalar and distance moments, and shells that cover a
    non-negligible part of the triangle.  Shells that barely clip it are
    redrawn - the integral is then arbitrarily small against the
    ``L**(p+2)`` magnitude a covered shell produces, and a relative
    comparison on it measures nothing but cancellation noise.
    """
    from .shell import shell_restricted_integral

    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    while done < samples:
        tri = rng.normal(size=(3, 3))
        if 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) < 0.05:
            continue
        x = rng.normal(scale=1.5, size=3)
        r_max = float(np.linalg.norm(x - tri, axis=1).max())
        r_lo = rng.uniform(0.0, 0.9) * r_max
        r_hi = r_lo + rng.uniform(0.15, 1.0) * r_max
        p = int(rng.integers(-2, 1))
        moment = ("scalar", "distance")[done % 2]
        ref = np.atleast_1d(
            oracle_adaptive_integral(x, tri, p, r_lo, r_hi, moment)
        )
        scale = float(np.linalg.norm(ref))
        if not scale > 1e-6 * r_max ** (p + 2):
            continue
        got = np.atleast_1d(
            shell_restricted_integral(x, tri, p, r_lo, r_hi, moment)
        )
        worst = max(worst, float(np.linalg.norm(got - ref)) / scale)
        done += 1
    return worst
