"""Companion-matrix construction and stability analysis tests.

The assembled cases run on the coarse icosahedral sphere where dense
eigensolves are cheap.  Numerical bounds on spectral quantities were
frozen from oracle runs at these exact configurations.
"""

import numpy as np
import pytest

from motstab.assembly import (
    MarchingSystem,
    Medium,
    assemble_efie_slices,
    assemble_pmchwt_slices,
)
from motstab.basis import build_loop_space, build_rwg
from motstab.cmsa import (
    CompanionMatrix,
    build_companion,
    count_clusters,
    power_method_modulus,
    quadrature_error_sigma,
    quadrature_error_singular,
    spectrum,
    verify_eigenvector_structure,
)
from motstab.geometry import make_icosphere, make_torus
from motstab.mot import estimate_growth_rate, march

DT = 0.31
INTERIOR = Medium(2.0, 1.0)


@pytest.fixture(scope="module")
def sphere():
    return make_icosphere(0)


@pytest.fixture(scope="module")
def sphere_space(sphere):
    return build_rwg(sphere)


@pytest.fixture(scope="module")
def sphere_loops(sphere):
    return build_loop_space(sphere)


@pytest.fixture(scope="module")
def efie4(sphere, sphere_space):
    return assemble_efie_slices(sphere, DT, 4, space=sphere_space)


@pytest.fixture(scope="module")
def efie13(sphere, sphere_space):
    return assemble_efie_slices(sphere, DT, 13, space=sphere_space)


@pytest.fixture(scope="module")
def pmchwt4(sphere, sphere_space):
    return assemble_pmchwt_slices(
        sphere, DT, 4, interior=INTERIOR, space=sphere_space
    )


@pytest.fixture(scope="module")
def comp_efie4(efie4):
    return build_companion(efie4)


@pytest.fixture(scope="module")
def comp_efie13(efie13):
    return build_companion(efie13)


@pytest.fixture(scope="module")
def comp_pmchwt4(pmchwt4):
    return build_companion(pmchwt4)


def scalar_system(z0, z1, tail):
    """One-unknown marching system with explicit slice values."""
    slices = np.array([[[z0]], [[z1]]])
    return MarchingSystem(
        formulation="efie",
        slices=slices,
        tail=np.array([[tail]]),
        dt=1.0,
        n_quad=4,
        media=(Medium(),),
        mesh_id="scalar",
    )


# ---------------------------------------------------------------------------
# structure


def test_hand_companion():
    # Z0 = 1, Z1 = 0, tail = 0: the propagator only accumulates the sum.
    comp = build_companion(scalar_system(1.0, 0.0, 0.0))
    assert comp.block_size == 1
    assert comp.history == 1
    assert comp.dimension == 2
    np.testing.assert_array_equal(
        comp.materialize(), np.array([[0.0, 0.0], [1.0, 1.0]])
    )
    rep = spectrum(comp)
    assert sorted(np.abs(rep.eigenvalues)) == pytest.approx([0.0, 1.0], abs=1e-14)
    assert abs(rep.delta) <= 1e-14
    assert rep.n_trivial == 1
    assert rep.n_cluster == 0


def test_blocks_are_scaled_slices(efie4, comp_efie4):
    z0 = efie4.slices[0]
    for k, q in enumerate(comp_efie4.blocks, start=1):
        expect = -np.linalg.solve(z0, efie4.slices[k])
        np.testing.assert_allclose(q, expect, rtol=1e-12, atol=1e-15)
    expect = -np.linalg.solve(z0, efie4.tail)
    np.testing.assert_allclose(comp_efie4.q_inf, expect, rtol=1e-12, atol=1e-15)


def test_materialize_layout(comp_efie4):
    m, k0 = comp_efie4.block_size, comp_efie4.history
    dense = comp_efie4.materialize()
    eye = np.eye(m)
    for j in range(1, k0):
        np.testing.assert_array_equal(
            dense[j * m : (j + 1) * m, (j - 1) * m : j * m], eye
        )
        # everything else in that block row is zero
        row = dense[j * m : (j + 1) * m].copy()
        row[:, (j - 1) * m : j * m] = 0.0
        assert not row.any()
    last = dense[k0 * m :]
    np.testing.assert_array_equal(last[:, (k0 - 1) * m : k0 * m], eye)
    np.testing.assert_array_equal(last[:, k0 * m :], eye)
    assert not last[:, : (k0 - 1) * m].any()


def test_apply_matches_materialize(comp_efie4):
    rng = np.random.default_rng(7)
    dense = comp_efie4.materialize()
    flat = rng.standard_normal(comp_efie4.dimension)
    want = dense @ flat
    tol = 1e-14 * np.linalg.norm(want)
    out = comp_efie4.apply(flat)
    assert out.shape == flat.shape
    np.testing.assert_allclose(out, want, rtol=0, atol=tol)
    stacked = flat.reshape(comp_efie4.history + 1, comp_efie4.block_size)
    np.testing.assert_allclose(
        comp_efie4.apply(stacked).ravel(), want, rtol=0, atol=tol
    )


def test_singular_leading_slice_rejected():
    with pytest.raises(np.linalg.LinAlgError, match="condition"):
        build_companion(scalar_system(0.0, 1.0, 0.0))


def test_dense_limit_enforced(comp_efie4):
    with pytest.raises(ValueError, match="dense limit"):
        spectrum(comp_efie4, dense_limit=comp_efie4.dimension - 1)


def test_sigma_shape_mismatch_rejected(comp_efie4):
    other = build_companion(scalar_system(1.0, 0.5, 0.0))
    with pytest.raises(ValueError, match="different shapes"):
        quadrature_error_sigma(comp_efie4, other)


def test_count_clusters_validates_radii(comp_efie4):
    rep = spectrum(comp_efie4)
    with pytest.raises(ValueError):
        count_clusters(rep, 1e-4, 1e-8)
    with pytest.raises(ValueError):
        count_clusters(rep, 0.0, 1e-4)
    with pytest.raises(ValueError):
        count_clusters(rep, 1e-8, 1.5)
    assert count_clusters(rep, rep.r_trivial, rep.r_cluster) == (
        rep.n_trivial,
        rep.n_cluster,
    )


def test_cluster_radius_scales_with_sigma(comp_efie4):
    rep = spectrum(comp_efie4, sigma=0.05)
    assert rep.r_cluster == pytest.approx(0.5)
    assert rep.sigma == pytest.approx(0.05)
    rep = spectrum(comp_efie4, sigma=1e-9)
    assert rep.r_cluster == pytest.approx(1e-4)
    rep = spectrum(comp_efie4)
    assert rep.sigma is None
    assert rep.r_cluster == pytest.approx(1e-4)


def test_loop_space_mesh_mismatch_rejected(comp_efie4):
    torus_loops = build_loop_space(make_torus(2.0, 0.7, 5, 3))
    with pytest.raises(ValueError, match="loop space"):
        verify_eigenvector_structure(comp_efie4, torus_loops)


# ---------------------------------------------------------------------------
# propagation


def test_companion_propagates_marching_states(efie4, comp_efie4):
    # After the sources switch off, every marching step is one application
    # of the companion matrix to the stacked history-plus-sum state.
    rng = np.random.default_rng(3)
    m, k0 = comp_efie4.block_size, comp_efie4.history
    n_steps = k0 + 15
    rhs = np.zeros((n_steps, m))
    rhs[0] = rng.standard_normal(m)
    result = march(efie4, rhs)
    u = np.vstack([np.zeros((k0, m)), result.coefficients])  # u[k0 + j] = u_{j+1}

    def state(i):
        # newest-first history, then the exhausted running sum
        hist = [u[k0 + i - 1 - t] for t in range(k0)]
        s = u[: max(k0 + i - k0, 0)].sum(axis=0)
        return np.concatenate(hist + [s])

    for i in range(k0 + 2, n_steps + 1):
        prev, here = state(i - 1), state(i)
        np.testing.assert_allclose(
            comp_efie4.apply(prev), here, atol=1e-10 * np.linalg.norm(here)
        )


def test_growth_rate_matches_spectral_radius(pmchwt4, comp_pmchwt4):
    rng = np.random.default_rng(11)
    m = comp_pmchwt4.block_size
    n_steps = 600
    rhs = np.zeros((n_steps, m))
    rhs[0] = rng.standard_normal(m)
    result = march(pmchwt4, rhs)
    growth = estimate_growth_rate(result)
    rho = spectrum(comp_pmchwt4).spectral_radius
    assert growth.ratio == pytest.approx(rho, rel=1e-2)


# ---------------------------------------------------------------------------
# spectra


def test_efie_delta_small_and_quadrature_insensitive(comp_efie4, comp_efie13):
    d4 = spectrum(comp_efie4).delta
    d13 = spectrum(comp_efie13).delta
    for d in (d4, d13):
        assert 1e-9 < d < 1e-6
    assert max(d4, d13) / min(d4, d13) < 5.0


def test_pmchwt_delta_decreases_with_quadrature(sphere, sphere_space, comp_pmchwt4):
    d4 = spectrum(comp_pmchwt4).delta
    sys13 = assemble_pmchwt_slices(
        sphere, DT, 13, interior=INTERIOR, space=sphere_space
    )
    d13 = spectrum(build_companion(sys13)).delta
    assert d4 > 10.0 * abs(d13)
    assert d4 > 1e-4


def test_pmchwt_trivial_eigenvalue_count(comp_pmchwt4, sphere_loops):
    rep = spectrum(comp_pmchwt4)
    assert rep.n_trivial == 2 * sphere_loops.dimension


def test_conjugate_pair_symmetry(comp_pmchwt4):
    lam = spectrum(comp_pmchwt4).eigenvalues
    complex_lam = lam[np.abs(lam.imag) > 1e-12]
    assert complex_lam.size  # the spectrum is genuinely complex
    dist = np.abs(np.conj(complex_lam)[:, None] - complex_lam[None, :])
    assert dist.min(axis=1).max() < 1e-10


def test_eigenvalues_near_minus_one_stay_inside(comp_pmchwt4):
    lam = spectrum(comp_pmchwt4).eigenvalues
    near = lam[np.abs(lam + 1.0) < 0.5]
    assert near.size  # the oscillating end of the spectrum is populated
    assert np.abs(near).max() < 1.0


# ---------------------------------------------------------------------------
# eigenvector structure


def test_efie_jordan_chain(comp_efie4, sphere_loops):
    report = verify_eigenvector_structure(comp_efie4, sphere_loops)
    assert report.ordinary.shape == (sphere_loops.dimension,)
    assert report.max_ordinary < 1e-12
    assert report.max_jordan < 1e-10


def test_pmchwt_has_no_jordan_chain(comp_pmchwt4, comp_efie4, sphere_loops):
    report = verify_eigenvector_structure(comp_pmchwt4, sphere_loops)
    assert report.ordinary.shape == (2 * sphere_loops.dimension,)
    assert report.max_ordinary < 1e-12
    efie = verify_eigenvector_structure(comp_efie4, sphere_loops)
    assert report.min_jordan > 1e-2
    assert report.min_jordan > 1e3 * efie.max_jordan


# ---------------------------------------------------------------------------
# quadrature error


def test_sigma_vanishes_for_identical(comp_efie4):
    assert quadrature_error_sigma(comp_efie4, comp_efie4) == 0.0
    assert quadrature_error_singular(comp_efie4, comp_efie4) == 0.0


def test_sigma_shortcut_matches_full_difference(comp_efie4, comp_efie13):
    sig = quadrature_error_sigma(comp_efie4, comp_efie13)
    diff = comp_efie4.materialize() - comp_efie13.materialize()
    full = np.abs(np.linalg.eigvals(diff)).max()
    assert sig == pytest.approx(full, rel=1e-10)


def test_singular_value_dominates_eigenvalue(comp_efie4, comp_efie13):
    sig = quadrature_error_sigma(comp_efie4, comp_efie13)
    svd = quadrature_error_singular(comp_efie4, comp_efie13)
    assert svd >= sig > 0.0


def test_sigma_decreases_with_quadrature(sphere, sphere_space, comp_efie4,
                                         comp_efie13):
    ref = build_companion(
        assemble_efie_slices(sphere, DT, 81, space=sphere_space)
    )
    s4 = quadrature_error_sigma(comp_efie4, ref)
    s13 = quadrature_error_sigma(comp_efie13, ref)
    assert s4 > 3.0 * s13 > 0.0


# ---------------------------------------------------------------------------
# power iteration


def test_power_method_exact_on_separated_spectrum():
    comp = CompanionMatrix(
        blocks=[np.array([[0.5]])],
        q_inf=np.array([[0.3]]),
        formulation="efie",
        dt=0.1,
    )
    rho = np.abs(np.linalg.eigvals(comp.materialize())).max()
    assert power_method_modulus(comp) == pytest.approx(rho, rel=1e-6)


def test_power_method_tracks_dense_solve(comp_efie4):
    rho = spectrum(comp_efie4).spectral_radius
    assert power_method_modulus(comp_efie4) == pytest.approx(rho, rel=1e-2)
