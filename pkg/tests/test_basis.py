"""Edge-element and loop-space checks on closed meshes of genus 0 and 1."""

import numpy as np
import numpy.testing as npt
import pytest

from motstab.basis import build_loop_space, build_rwg, loop_dimension
from motstab.geometry import make_icosphere, make_torus


@pytest.fixture(scope="module")
def sphere():
    return make_icosphere(1)


@pytest.fixture(scope="module")
def torus():
    return make_torus(2.0, 0.7, 10, 5)


def per_face_divergence(mesh, space, coeffs):
    """Surface divergence of sum_e coeffs[e] f_e, one constant per face."""
    div = np.zeros(mesh.n_faces)
    for f in range(mesh.n_faces):
        for s in range(3):
            div[f] += space.slot_div[f, s] * coeffs[space.slot_edge[f, s]]
    return div


def test_one_function_per_edge(sphere):
    space = build_rwg(sphere)
    assert space.n_functions == sphere.n_edges
    assert np.all(space.plus_face < space.minus_face)


def test_slot_signs_partition(sphere):
    # every edge appears in exactly two face slots, once with each sign
    space = build_rwg(sphere)
    plus_count = np.zeros(sphere.n_edges, dtype=int)
    minus_count = np.zeros(sphere.n_edges, dtype=int)
    for f in range(sphere.n_faces):
        for s in range(3):
            e = space.slot_edge[f, s]
            if space.slot_sign[f, s] > 0:
                plus_count[e] += 1
            else:
                minus_count[e] += 1
    assert np.all(plus_count == 1)
    assert np.all(minus_count == 1)


def test_free_vertex_is_opposite(sphere):
    space = build_rwg(sphere)
    for f in range(min(sphere.n_faces, 40)):
        for s in range(3):
            e = space.slot_edge[f, s]
            assert space.slot_free[f, s] not in sphere.edges[e]
            assert space.slot_free[f, s] in sphere.faces[f]


def test_normal_flux_continuity(sphere):
    """The component across the shared edge is 1 from both sides."""
    mesh = sphere
    space = build_rwg(mesh)
    rng = np.random.default_rng(7)
    for e in rng.choice(mesh.n_edges, size=12, replace=False):
        a, b = mesh.vertices[mesh.edges[e]]
        mid = 0.5 * (a + b)
        t_hat = (b - a) / np.linalg.norm(b - a)
        for face in mesh.edge_faces[e]:
            s = int(np.flatnonzero(space.slot_edge[face] == e)[0])
            val = space.values_on_face(face, mid[None])[s, 0]
            m_hat = np.cross(t_hat, mesh.normals[face])
            centroid = mesh.centroids[face]
            if np.dot(m_hat, centroid - mid) > 0:  # make it outward
                m_hat = -m_hat
            npt.assert_allclose(abs(np.dot(val, m_hat)), 1.0, rtol=1e-12)


def test_divergence_value(sphere):
    space = build_rwg(sphere)
    f = 5
    for s in range(3):
        e = space.slot_edge[f, s]
        expect = space.slot_sign[f, s] * space.lengths[e] / sphere.areas[f]
        npt.assert_allclose(space.slot_div[f, s], expect, rtol=0)


def test_loop_dimension_genus0(sphere):
    assert loop_dimension(sphere) == sphere.n_vertices - 1


def test_loop_dimension_genus1(torus):
    assert loop_dimension(torus) == torus.n_vertices + 1


def test_loop_space_counts(sphere, torus):
    for mesh, handles in ((sphere, 0), (torus, 2)):
        loops = build_loop_space(mesh)
        assert loops.dimension == loop_dimension(mesh)
        assert loops.n_vertex_loops == mesh.n_vertices - 1
        assert loops.n_generator_loops == handles


def test_vertex_loops_divergence_free(sphere):
    space = build_rwg(sphere)
    loops = build_loop_space(sphere, space)
    for row in loops.coefficients:
        div = per_face_divergence(sphere, space, row)
        npt.assert_allclose(div, 0.0, atol=1e-13)


def test_generator_loops_divergence_free(torus):
    space = build_rwg(torus)
    loops = build_loop_space(torus, space)
    assert loops.n_generator_loops == 2
    for row in loops.coefficients[loops.n_vertex_loops:]:
        div = per_face_divergence(torus, space, row)
        npt.assert_allclose(div, 0.0, atol=1e-13)
        assert np.linalg.norm(row) > 0


def test_loops_linearly_independent(torus):
    loops = build_loop_space(torus)
    rank = np.linalg.matrix_rank(loops.coefficients)
    assert rank == loops.dimension


def test_loop_rank_matches_divergence_kernel(sphere):
    """Rank of the per-face divergence operator + loop dimension = n_edges."""
    space = build_rwg(sphere)
    div_op = np.zeros((sphere.n_faces, sphere.n_edges))
    for f in range(sphere.n_faces):
        for s in range(3):
            div_op[f, space.slot_edge[f, s]] += space.slot_div[f, s]
    rank = np.linalg.matrix_rank(div_op)
    assert rank + loop_dimension(sphere) == sphere.n_edges


def test_values_on_face_shape_and_plane(sphere):
    space = build_rwg(sphere)
    pts = sphere.centroids[3][None] + 0.0
    vals = space.values_on_face(3, pts)
    assert vals.shape == (3, 1, 3)
    for s in range(3):
        npt.assert_allclose(np.dot(vals[s, 0], sphere.normals[3]), 0.0, atol=1e-12)
