"""Divergence-conforming edge elements and their solenoidal subspace.

Each interior edge of a closed triangle mesh carries one vector basis
function: on its two adjacent triangles the function is a linear spray
from the opposite ("free") vertex,

    f_e(y) = +- l_e / (2 A) (y - v_free),    div f_e = +- l_e / A,

with the plus triangle chosen as the lower face index.  The normal
component across the shared edge is continuous (unit), so surface currents
expanded in these functions carry no line charge.

The kernel of the surface divergence inside this space has dimension
``n_vertices - 1 + 2 genus``.  Vertex loops give the first part: around a
vertex ``v``, weight each incident edge by ``+-1 / l_e`` according to
whether the edge (oriented the way its plus triangle traverses it) leaves
or enters ``v``; the two incident edges of any triangle at ``v`` then
cancel each other's divergence exactly.  The remaining ``2 genus``
generators are the handle circulations, recovered tree/cotree style: edges
outside a vertex spanning tree whose duals are also outside a face
spanning tree each close one cycle of faces, and weighting every crossed
edge by ``+-1 / l_e`` pushes a unit of current around the handle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .geometry import TriangleMesh

__all__ = ["RwgSpace", "LoopSpace", "build_rwg", "build_loop_space", "loop_dimension"]


@dataclass
class RwgSpace:
    """Edge-element bookkeeping in face-slot form.

    ``slot_*`` arrays are indexed ``(face, local_slot)`` where the slot
    numbering follows the mesh convention that slot ``s`` of a face is the
    edge opposite its ``s``-th vertex; that vertex is exactly the free
    vertex of the edge element restricted to this face.
    """

    mesh: TriangleMesh
    lengths: np.ndarray  # (M,) edge lengths
    plus_face: np.ndarray  # (M,)
    minus_face: np.ndarray  # (M,)
    slot_edge: np.ndarray  # (F, 3) global edge index per face slot
    slot_sign: np.ndarray  # (F, 3) +1 on the plus face, -1 on the minus face
    slot_free: np.ndarray  # (F, 3) global index of the free vertex
    slot_div: np.ndarray  # (F, 3) sign * l / A
    edge_start: np.ndarray  # (M,) oriented by the plus triangle traversal
    edge_end: np.ndarray  # (M,)

    @property
    def n_functions(self) -> int:
        return self.mesh.n_edges

    def values_on_face(self, face: int, points: np.ndarray) -> np.ndarray:
        """Basis values of the face's three slots at points (Q, 3) -> (3, Q, 3)."""
        mesh = self.mesh
        pts = np.atleast_2d(points)
        out = np.empty((3, len(pts), 3))
        for s in range(3):
            e = self.slot_edge[face, s]
            coef = self.slot_sign[face, s] * self.lengths[e] / (2.0 * mesh.areas[face])
            out[s] = coef * (pts - mesh.vertices[self.slot_free[face, s]])
        return out


def build_rwg(mesh: TriangleMesh) -> RwgSpace:
    edges = mesh.edges
    lengths = mesh.edge_lengths
    plus_face = mesh.edge_faces[:, 0]
    minus_face = mesh.edge_faces[:, 1]

    slot_edge = mesh.face_edges
    slot_sign = np.where(plus_face[slot_edge] == np.arange(mesh.n_faces)[:, None], 1, -1)
    slot_free = mesh.faces
    slot_div = slot_sign * lengths[slot_edge] / mesh.areas[:, None]

    # orientation of each edge: the direction its plus triangle walks it
    edge_start = np.empty(mesh.n_edges, dtype=np.int64)
    edge_end = np.empty(mesh.n_edges, dtype=np.int64)
    for e in range(mesh.n_edges):
        a, b = edges[e]
        cyc = mesh.faces[plus_face[e]]
        for i in range(3):
            if cyc[i] == a and cyc[(i + 1) % 3] == b:
                edge_start[e], edge_end[e] = a, b
                break
            if cyc[i] == b and cyc[(i + 1) % 3] == a:
                edge_start[e], edge_end[e] = b, a
                break
        else:
            raise AssertionError("edge missing from its plus face")

    return RwgSpace(
        mesh=mesh,
        lengths=lengths,
        plus_face=plus_face,
        minus_face=minus_face,
        slot_edge=slot_edge,
        slot_sign=slot_sign,
        slot_free=slot_free,
        slot_div=slot_div,
        edge_start=edge_start,
        edge_end=edge_end,
    )


@dataclass
class LoopSpace:
    """Coefficient rows spanning the divergence-free subspace."""

    coefficients: np.ndarray  # (N_l, M)
    n_vertex_loops: int
    n_generator_loops: int

    @property
    def dimension(self) -> int:
        return len(self.coefficients)


def loop_dimension(mesh: TriangleMesh) -> int:
    """Dimension of the solenoidal subspace: n_vertices - 1 + 2 genus."""
    topo = mesh.topology()
    return topo.n_vertices - 1 + 2 * topo.genus


def _vertex_loops(mesh: TriangleMesh, space: RwgSpace) -> np.ndarray:
    inv_l = 1.0 / space.lengths
    rows = np.zeros((mesh.n_vertices, mesh.n_edges))
    cols = np.arange(mesh.n_edges)
    rows[space.edge_start, cols] += inv_l
    rows[space.edge_end, cols] -= inv_l
    # the rows sum to zero; drop the last vertex to keep an independent set
    return rows[:-1]


def _bfs_tree(n_nodes: int, adjacency: list[list[tuple[int, int]]], root: int = 0):
    """Parent arrays of a breadth-first spanning tree; (-1, -1) at the root."""
    parent = np.full(n_nodes, -1, dtype=np.int64)
    via = np.full(n_nodes, -1, dtype=np.int64)
    seen = np.zeros(n_nodes, dtype=bool)
    seen[root] = True
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w, label in adjacency[u]:
            if not seen[w]:
                seen[w] = True
                parent[w] = u
                via[w] = label
                queue.append(w)
    if not seen.all():
        raise ValueError("mesh is not connected")
    return parent, via


def _generator_loops(mesh: TriangleMesh, space: RwgSpace) -> np.ndarray:
    n_e = mesh.n_edges
    edges = mesh.edges

    vertex_adj: list[list[tuple[int, int]]] = [[] for _ in range(mesh.n_vertices)]
    for e in range(n_e):
        a, b = edges[e]
        vertex_adj[a].append((b, e))
        vertex_adj[b].append((a, e))
    _, v_via = _bfs_tree(mesh.n_vertices, vertex_adj)
    in_vertex_tree = np.zeros(n_e, dtype=bool)
    in_vertex_tree[v_via[v_via >= 0]] = True

    face_adj: list[list[tuple[int, int]]] = [[] for _ in range(mesh.n_faces)]
    for e in range(n_e):
        if in_vertex_tree[e]:
            continue
        f, g = mesh.edge_faces[e]
        face_adj[f].append((g, e))
        face_adj[g].append((f, e))
    f_parent, f_via = _bfs_tree(mesh.n_faces, face_adj)
    crossed = np.zeros(n_e, dtype=bool)
    crossed[f_via[f_via >= 0]] = True

    leftover = np.flatnonzero(~in_vertex_tree & ~crossed)

    def ancestry(face: int) -> list[tuple[int, int]]:
        chain = []
        while f_parent[face] >= 0:
            chain.append((face, f_via[face]))
            face = f_parent[face]
        return chain

    rows = []
    for e_star in leftover:
        u, w = space.plus_face[e_star], space.minus_face[e_star]
        up, down = ancestry(u), ancestry(w)
        while up and down and up[-1][0] == down[-1][0] and up[-1][1] == down[-1][1]:
            up.pop()
            down.pop()
        row = np.zeros(n_e)

        def hop(row, from_face: int, through: int) -> None:
            sign = 1.0 if space.plus_face[through] == from_face else -1.0
            row[through] += sign / space.lengths[through]

        # close the cycle: across the leftover edge, then back through
        # the face tree from the minus side up and down to the plus side
        hop(row, u, e_star)
        for face, through in down:
            hop(row, face, through)
        for face, through in reversed(up):
            hop(row, f_parent[face], through)
        rows.append(row)
    return np.asarray(rows).reshape(len(rows), n_e)


def build_loop_space(mesh: TriangleMesh, space: RwgSpace | None = None) -> LoopSpace:
    if space is None:
        space = build_rwg(mesh)
    vertex_rows = _vertex_loops(mesh, space)
    generator_rows = _generator_loops(mesh, space)
    coefficients = np.vstack([vertex_rows, generator_rows])
    expected = loop_dimension(mesh)
    if len(coefficients) != expected:
        raise AssertionError(
            f"loop construction found {len(coefficients)} rows, expected {expected}"
        )
    return LoopSpace(
        coefficients=coefficients,
        n_vertex_loops=len(vertex_rows),
        n_generator_loops=len(generator_rows),
    )
