"""Triangulated closed surfaces and the canonical test geometries.

A surface is stored as a vertex array and a face array.  Everything else
(edge table, face adjacency, areas, normals, topological invariants) is
derived.  All meshes handled here are closed orientable 2-manifolds: every
edge is shared by exactly two triangles whose traversal directions disagree,
so that face normals point consistently to one side.  For the analytic
geometries the generators below produce outward-oriented meshes directly;
meshes read from disk are re-oriented by breadth-first propagation.

Topological bookkeeping follows the Euler relation

    chi = N_v - N_e + N_f = 2 - 2 g

for a closed orientable surface of genus ``g``.  The genus feeds directly
into the dimension of the solenoidal (loop) subspace of the RWG space built
on top of the mesh, which is why it is computed here and carried around in
:class:`TopologySummary`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

logger = logging.getLogger(__name__)

__all__ = [
    "MeshError",
    "TriangleMesh",
    "TopologySummary",
    "load_mesh",
    "save_mesh",
    "make_icosphere",
    "make_torus",
    "make_nasa_almond",
    "make_star_pyramid",
]


class MeshError(Exception):
    """Raised when a vertex/face soup is not a closed orientable 2-manifold."""


@dataclass(frozen=True)
class TopologySummary:
    """Counts and invariants of a closed triangulated surface.

    Attributes
    ----------
    n_vertices, n_edges, n_faces : int
        Element counts.
    euler_characteristic : int
        ``N_v - N_e + N_f``.
    genus : int
        Number of handles, ``(2 - chi) / 2``.
    """

    n_vertices: int
    n_edges: int
    n_faces: int
    euler_characteristic: int
    genus: int


@dataclass
class TriangleMesh:
    """A closed, consistently oriented triangle mesh.

    Parameters
    ----------
    vertices : (N_v, 3) float array
        Vertex coordinates in metres.
    faces : (N_f, 3) int array
        Vertex indices of each triangle, oriented so that the right-hand
        normal points to the same (outward) side everywhere.

    Derived quantities are computed once in ``__post_init__``:

    ``edges``
        (N_e, 2) int array of vertex pairs, each sorted ascending; rows are
        ordered lexicographically, which fixes the global edge numbering.
    ``edge_faces``
        (N_e, 2) int array; the two faces adjacent to each edge, lower face
        index first.
    ``face_edges``
        (N_f, 3) int array; edge index opposite each local vertex.
    ``areas``, ``normals``, ``centroids``, ``edge_lengths``
        The usual per-element metric data.
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray = field(init=False, repr=False)
    edge_faces: np.ndarray = field(init=False, repr=False)
    face_edges: np.ndarray = field(init=False, repr=False)
    areas: np.ndarray = field(init=False, repr=False)
    normals: np.ndarray = field(init=False, repr=False)
    centroids: np.ndarray = field(init=False, repr=False)
    edge_lengths: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(self.faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (N_v, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be an (N_f, 3) array")
        if self.faces.min(initial=0) < 0 or self.faces.max(initial=-1) >= len(self.vertices):
            raise MeshError("face indices out of range")
        self._build_edge_table()
        self._build_metrics()

    # -- construction helpers ------------------------------------------------

    def _build_edge_table(self):
        f = self.faces
        # the three directed edges of each face, in traversal order
        halfedges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
        key = np.sort(halfedges, axis=1)
        edges, inverse, counts = np.unique(
            key, axis=0, return_inverse=True, return_counts=True
        )
        if np.any(counts != 2):
            bad = edges[counts != 2]
            raise MeshError(
                f"surface is not a closed 2-manifold: {len(bad)} edge(s) not "
                f"shared by exactly two faces (first: {bad[0].tolist()})"
            )
        n_f = len(f)
        owner = np.tile(np.arange(n_f), 3)
        order = np.argsort(inverse, kind="stable")
        pairs = owner[order].reshape(-1, 2)
        pairs.sort(axis=1)
        # orientation consistency: the two half-edges of a shared edge must
        # run in opposite directions
        directed = halfedges[order].reshape(-1, 2, 2)
        same_dir = np.all(directed[:, 0, :] == directed[:, 1, :], axis=1)
        if np.any(same_dir):
            raise MeshError(
                f"{int(same_dir.sum())} edge(s) traversed in the same "
                "direction by both faces; orientation is inconsistent"
            )
        self.edges = edges
        self.edge_faces = pairs
        # edge opposite each local vertex: face (a,b,c) -> edges (b,c),(c,a),(a,b)
        n_e = len(edges)
        lookup = {}
        for i, (u, v) in enumerate(edges):
            lookup[(int(u), int(v))] = i
        fe = np.empty((n_f, 3), dtype=np.int64)
        for t, (a, b, c) in enumerate(f):
            fe[t, 0] = lookup[tuple(sorted((int(b), int(c))))]
            fe[t, 1] = lookup[tuple(sorted((int(c), int(a))))]
            fe[t, 2] = lookup[tuple(sorted((int(a), int(b))))]
        self.face_edges = fe

    def _build_metrics(self):
        v = self.vertices
        f = self.faces
        e1 = v[f[:, 1]] - v[f[:, 0]]
        e2 = v[f[:, 2]] - v[f[:, 0]]
        cross = np.cross(e1, e2)
        nrm = np.linalg.norm(cross, axis=1)
        if np.any(nrm <= 0.0):
            raise MeshError("degenerate (zero-area) triangle present")
        self.areas = 0.5 * nrm
        self.normals = cross / nrm[:, None]
        self.centroids = v[f].mean(axis=1)
        d = v[self.edges[:, 1]] - v[self.edges[:, 0]]
        self.edge_lengths = np.linalg.norm(d, axis=1)

    # -- queries ---------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def topology(self) -> TopologySummary:
        """Element counts, Euler characteristic and genus."""
        chi = self.n_vertices - self.n_edges + self.n_faces
        if chi % 2 != 0:
            raise MeshError(f"odd Euler characteristic {chi}")
        return TopologySummary(
            n_vertices=self.n_vertices,
            n_edges=self.n_edges,
            n_faces=self.n_faces,
            euler_characteristic=chi,
            genus=(2 - chi) // 2,
        )

    def diameter(self) -> float:
        """Largest pairwise vertex distance (the geometric diameter D)."""
        v = self.vertices
        # hull vertices suffice; at desk scale the direct O(N^2) sweep is fine
        d2 = 0.0
        block = 512
        for i in range(0, len(v), block):
            diff = v[i : i + block, None, :] - v[None, :, :]
            d2 = max(d2, float(np.max(np.einsum("ijk,ijk->ij", diff, diff))))
        return float(np.sqrt(d2))

    def min_edge_length(self) -> float:
        return float(self.edge_lengths.min())

    def signed_volume(self) -> float:
        """Volume enclosed by the surface; positive for outward orientation."""
        v = self.vertices[self.faces]
        return float(np.einsum("ij,ij->", v[:, 0], np.cross(v[:, 1], v[:, 2]))) / 6.0


# -- OBJ input / output --------------------------------------------------------


def load_mesh(path) -> TriangleMesh:
    """Read an ASCII OBJ file (``v``/``f`` records, triangles only).

    Face indices are 1-based; ``f a/b/c`` style records are accepted and the
    leading vertex index of each token is used.  After reading, face windings
    are made globally consistent by breadth-first propagation across shared
    edges, and flipped wholesale if the enclosed volume comes out negative.

    Raises
    ------
    MeshError
        If a face is not a triangle, an edge is not shared by exactly two
        faces, or the surface is not orientable.
    """
    verts = []
    faces = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            tokens = line.split()
            if tokens[0] == "v":
                if len(tokens) < 4:
                    raise MeshError(f"{path}:{lineno}: malformed vertex record")
                verts.append([float(t) for t in tokens[1:4]])
            elif tokens[0] == "f":
                idx = [int(t.split("/")[0]) for t in tokens[1:]]
                if len(idx) != 3:
                    raise MeshError(
                        f"{path}:{lineno}: non-triangle face with {len(idx)} vertices"
                    )
                faces.append([i - 1 for i in idx])
    if not verts or not faces:
        raise MeshError(f"{path}: no usable geometry found")
    faces = _orient_consistently(np.asarray(verts, float), np.asarray(faces, np.int64))
    mesh = TriangleMesh(np.asarray(verts, float), faces)
    if mesh.signed_volume() < 0.0:
        mesh = TriangleMesh(mesh.vertices, mesh.faces[:, ::-1])
    logger.info(
        "loaded %s: %d vertices, %d faces", path, mesh.n_vertices, mesh.n_faces
    )
    return mesh


def _orient_consistently(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Flip face windings by BFS so that neighbours traverse shared edges
    in opposite directions.  Raises :class:`MeshError` if impossible."""
    n_f = len(faces)
    # map sorted edge -> list of (face, directed traversal)
    edge_map: dict[tuple, list] = {}
    for t, (a, b, c) in enumerate(faces):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_map.setdefault((min(u, v), max(u, v)), []).append((t, (u, v)))
    for key, adj in edge_map.items():
        if len(adj) != 2:
            raise MeshError(
                f"edge {key} shared by {len(adj)} faces; not a closed 2-manifold"
            )
    flip = np.full(n_f, -1, dtype=np.int8)  # -1 unvisited, 0 keep, 1 flip
    faces = faces.copy()
    for seed in range(n_f):
        if flip[seed] >= 0:
            continue
        flip[seed] = 0
        stack = [seed]
        while stack:
            t = stack.pop()
            a, b, c = faces[t]
            tri = ((a, b), (b, c), (c, a))
            directed = [e if flip[t] == 0 else e[::-1] for e in tri]
            for u, v in directed:
                adj = edge_map[(min(u, v), max(u, v))]
                for s, (p, q) in adj:
                    if s == t:
                        continue
                    # neighbour must traverse v -> u
                    runs_same = ((p, q) == (u, v))
                    want_flip = 1 if runs_same else 0
                    if flip[s] < 0:
                        flip[s] = want_flip
                        stack.append(s)
                    elif flip[s] != want_flip:
                        raise MeshError("surface is not orientable")
    flipped = np.where(flip == 1)[0]
    if len(flipped):
        logger.info("re-oriented %d of %d faces", len(flipped), n_f)
        faces[flipped] = faces[flipped][:, ::-1]
    return faces


def save_mesh(path, mesh: TriangleMesh) -> None:
    """Write an ASCII OBJ file that :func:`load_mesh` reads back verbatim."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# motstab triangle mesh\n")
        for x, y, z in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces + 1:
            fh.write(f"f {a} {b} {c}\n")


# -- generators ----------------------------------------------------------------


def make_icosphere(subdivisions: int, radius: float = 1.0) -> TriangleMesh:
    """Icosahedron subdivided ``subdivisions`` times, projected to a sphere.

    Each subdivision splits every triangle in four, so the face count is
    ``20 * 4**subdivisions``.
    """
    if subdivisions < 0:
        raise ValueError("subdivisions must be >= 0")
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=float,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    for _ in range(subdivisions):
        verts, faces = _subdivide_once(verts, faces)
        verts /= np.linalg.norm(verts, axis=1)[:, None]
    return TriangleMesh(radius * verts, faces)


def _subdivide_once(verts, faces):
    verts = list(map(tuple, verts))
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            m = 0.5 * (np.asarray(verts[i]) + np.asarray(verts[j]))
            cache[key] = len(verts)
            verts.append(tuple(m))
        return cache[key]

    out = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        out.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return np.asarray(verts, float), np.asarray(out, np.int64)


def make_torus(
    major_radius: float, minor_radius: float, n_major: int, n_minor: int
) -> TriangleMesh:
    """Structured torus: ``n_major * n_minor`` quads, each split in two.

    The torus lies in the xy-plane, centred at the origin; the tube circles
    the z-axis at distance ``major_radius``.
    """
    if not (0.0 < minor_radius < major_radius):
        raise ValueError("need 0 < minor_radius < major_radius")
    if n_major < 3 or n_minor < 3:
        raise ValueError("need at least 3 segments in each direction")
    u = 2.0 * np.pi * np.arange(n_major) / n_major
    v = 2.0 * np.pi * np.arange(n_minor) / n_minor
    uu, vv = np.meshgrid(u, v, indexing="ij")
    r = major_radius + minor_radius * np.cos(vv)
    verts = np.stack(
        [r * np.cos(uu), r * np.sin(uu), minor_radius * np.sin(vv)], axis=-1
    ).reshape(-1, 3)

    def vid(i, j):
        return (i % n_major) * n_minor + (j % n_minor)

    faces = []
    for i in range(n_major):
        for j in range(n_minor):
            p00, p10 = vid(i, j), vid(i + 1, j)
            p01, p11 = vid(i, j + 1), vid(i + 1, j + 1)
            faces.append([p00, p10, p11])
            faces.append([p00, p11, p01])
    mesh = TriangleMesh(verts, np.asarray(faces, np.int64))
    if mesh.signed_volume() < 0.0:
        mesh = TriangleMesh(verts, mesh.faces[:, ::-1])
    return mesh


# Cross-section semi-axis profiles of the almond body.  The classic CAD
# description uses an elliptical section whose semi-axes follow one law over
# the front (blunt) 5/12 of the length and another over the rear 7/12 that
# tapers to a sharp tip.  Coefficients here are scaled so the full bounding
# box of a unit-scale body is 9.936 x 1.92 x 0.64.
_ALMOND_LENGTH = 9.936
_ALMOND_T_MIN = -0.416667
_ALMOND_T_MAX = 0.583333


def _almond_section(t: np.ndarray):
    """Semi-axes (a_y, a_z) of the cross-section at axial parameter t."""
    ay = np.empty_like(t)
    az = np.empty_like(t)
    front = t < 0.0
    tf = t[front]
    root = np.sqrt(np.maximum(0.0, 1.0 - (tf / 0.416667) ** 2))
    ay[front] = 0.0966665 * root
    az[front] = 0.0322220 * root
    tb = t[~front]
    root = np.sqrt(np.maximum(0.0, 1.0 - (tb / 2.08335) ** 2)) - 0.96
    ay[~front] = 2.4167250 * root
    az[~front] = 0.8055750 * root
    return ay, az


def make_nasa_almond(scale: float, target_faces: int = 200) -> TriangleMesh:
    """Almond-shaped closed body with a sharp rear tip.

    The mesh is a ring lattice over (axial station, azimuth) capped by
    vertex fans at the two tips.  ``target_faces`` steers the resolution;
    the realized count is ``2 * n_axial * n_ring`` for internally chosen
    ``n_axial, n_ring``.

    Bounding box of the result: ``(9.936, 1.92, 0.64) * scale`` along
    (x, y, z), to within a fraction of a percent.
    """
    if scale <= 0.0:
        raise ValueError("scale must be positive")
    if target_faces < 24:
        raise ValueError("target_faces too small to close the surface")
    # stations ~ 2.5x denser than azimuth to keep triangles near-isotropic;
    # rings in multiples of 4 so the extreme-y and extreme-z azimuths are hit
    n_ring = 4 * max(2, int(round(np.sqrt(target_faces / 5.0) / 4.0)))
    n_axial = max(4, int(round(target_faces / (2.0 * n_ring))))
    # interior stations excluding the two tip points; always include t = 0,
    # the widest section, so the bounding box matches the analytic body
    n_front = max(2, int(round(n_axial * (-_ALMOND_T_MIN))))
    n_back = max(2, n_axial - n_front)
    t = np.concatenate(
        [
            np.linspace(_ALMOND_T_MIN, 0.0, n_front + 1)[1:],
            np.linspace(0.0, _ALMOND_T_MAX, n_back + 1)[1:-1],
        ]
    )
    ay, az = _almond_section(t)
    phi = 2.0 * np.pi * np.arange(n_ring) / n_ring
    L = _ALMOND_LENGTH * scale
    verts = []
    for ti, ayi, azi in zip(t, ay, az):
        verts.append(
            np.stack(
                [
                    np.full(n_ring, ti * L),
                    ayi * L * np.cos(phi),
                    azi * L * np.sin(phi),
                ],
                axis=-1,
            )
        )
    verts = np.concatenate(verts)
    tip_front = np.array([[_ALMOND_T_MIN * L, 0.0, 0.0]])
    tip_back = np.array([[_ALMOND_T_MAX * L, 0.0, 0.0]])
    verts = np.concatenate([verts, tip_front, tip_back])
    i_front = len(verts) - 2
    i_back = len(verts) - 1
    n_st = len(t)

    def vid(i, j):
        return i * n_ring + (j % n_ring)

    faces = []
    for j in range(n_ring):  # front fan (x = min): wind so normals point out
        faces.append([i_front, vid(0, j), vid(0, j + 1)])
    for i in range(n_st - 1):
        for j in range(n_ring):
            p00, p01 = vid(i, j), vid(i, j + 1)
            p10, p11 = vid(i + 1, j), vid(i + 1, j + 1)
            faces.append([p00, p11, p01])
            faces.append([p00, p10, p11])
    for j in range(n_ring):
        faces.append([i_back, vid(n_st - 1, j + 1), vid(n_st - 1, j)])
    mesh = TriangleMesh(verts, np.asarray(faces, np.int64))
    if mesh.signed_volume() < 0.0:
        mesh = TriangleMesh(mesh.vertices, mesh.faces[:, ::-1])
    return mesh


def make_star_pyramid(
    height: float, outer_radius: float, inner_radius: float, n_points: int = 24
) -> TriangleMesh:
    """Closed pyramid over a star polygon base.

    The base is a ``n_points``-pointed star in the z = 0 plane (vertices
    alternating between ``outer_radius`` and ``inner_radius``), triangulated
    by a fan from its centroid; the lateral surface is a fan from the apex
    at ``(0, 0, height)``.  Face count: ``4 * n_points``.
    """
    if height <= 0.0 or outer_radius <= 0.0:
        raise ValueError("height and outer_radius must be positive")
    if not (0.0 < inner_radius < outer_radius):
        raise ValueError("need 0 < inner_radius < outer_radius")
    if n_points < 3:
        raise ValueError("need at least 3 star points")
    m = 2 * n_points
    ang = 2.0 * np.pi * np.arange(m) / m
    rad = np.where(np.arange(m) % 2 == 0, outer_radius, inner_radius)
    rim = np.stack([rad * np.cos(ang), rad * np.sin(ang), np.zeros(m)], axis=-1)
    verts = np.concatenate([rim, [[0.0, 0.0, 0.0]], [[0.0, 0.0, height]]])
    i_base, i_apex = m, m + 1
    faces = []
    for j in range(m):
        k = (j + 1) % m
        faces.append([i_base, k, j])      # base, normal -z (outward below)
        faces.append([i_apex, j, k])      # lateral, normal outward/upward
    mesh = TriangleMesh(verts, np.asarray(faces, np.int64))
    if mesh.signed_volume() < 0.0:
        mesh = TriangleMesh(mesh.vertices, mesh.faces[:, ::-1])
    return mesh
