"""Shell-restricted moment closed forms against frozen and live references.

The frozen numbers below were produced by the adaptive radial-reduction
evaluator (quadrature.oracle) at tolerances a couple of orders tighter than
the assertions; the live randomized sweeps re-derive smaller batches on
every run with a fixed seed.
"""

import numpy as np
import pytest

from motstab.quadrature import (
    ShellKernelQuery,
    oracle_adaptive_integral,
    quadrature_stats,
    shell_moments_batch,
    shell_restricted_integral,
)

TRI = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
X_OFF = np.array([0.3, 0.2, 0.5])
X_IN = np.array([0.25, 0.25, 0.0])

# scalar and distance-vector moments of R^p over the whole triangle, seen
# from X_OFF (outer radius beyond the far vertex)
FULL_MOMENTS = {
    -3: (2.4725118029071953, [-0.06592118530751404, -0.21777447326715968, 1.2362559014535976]),
    -2: (1.4279529222024645, [-0.041839824775385524, -0.14395411112061143, 0.7139764611012323]),
    -1: (0.8374790406736734, [-0.02648501672297237, -0.09696731025852831, 0.4187395203368367]),
    0: (0.5, [-0.016666666666666677, -0.06666666666666667, 0.25]),
    1: (0.30467774160518024, [-0.010373550535511655, -0.04684260838071312, 0.15233887080259012]),
}

# same kernels restricted to the shell 0.6 <= R <= 0.8
SHELL_MOMENTS = {
    -2: (0.4101866440151011, [-0.039466378188795274, -0.08792510524398908, 0.20509332200755054]),
    -1: (0.27247870196550555, [-0.026018310088760477, -0.05937182323285477, 0.13623935098275278]),
    0: (0.1821329718366282, [-0.01724566697870791, -0.040366453995882866, 0.0910664859183141]),
}


@pytest.mark.parametrize("p", sorted(FULL_MOMENTS))
def test_full_triangle_moments_frozen(p):
    r_hi = np.inf if p == -3 else 10.0
    s_ref, v_ref = FULL_MOMENTS[p]
    s = shell_restricted_integral(X_OFF, TRI, p, 0.0, r_hi)
    v = shell_restricted_integral(X_OFF, TRI, p, 0.0, r_hi, moment="distance")
    np.testing.assert_allclose(s, s_ref, rtol=1e-12)
    np.testing.assert_allclose(v, v_ref, rtol=1e-11, atol=1e-14)


@pytest.mark.parametrize("p", sorted(SHELL_MOMENTS))
def test_partial_shell_moments_frozen(p):
    s_ref, v_ref = SHELL_MOMENTS[p]
    s = shell_restricted_integral(X_OFF, TRI, p, 0.6, 0.8)
    v = shell_restricted_integral(X_OFF, TRI, p, 0.6, 0.8, moment="distance")
    np.testing.assert_allclose(s, s_ref, rtol=1e-12)
    np.testing.assert_allclose(v, v_ref, rtol=1e-11, atol=1e-14)


def test_area_and_centroid_recovered():
    """p = 0 moments are pure geometry: area and area-weighted offset."""
    s = shell_restricted_integral(X_OFF, TRI, 0, 0.0, 50.0)
    v = shell_restricted_integral(X_OFF, TRI, 0, 0.0, 50.0, moment="distance")
    np.testing.assert_allclose(s, 0.5, rtol=1e-14)
    np.testing.assert_allclose(v, (X_OFF - TRI.mean(axis=0)) * 0.5, rtol=1e-13)


def test_coplanar_observation_point():
    s = shell_restricted_integral(X_IN, TRI, -1, 0.0, 10.0)
    np.testing.assert_allclose(s, 2.3707144571862053, rtol=1e-12)
    v_pv = shell_restricted_integral(X_IN, TRI, -3, 0.0, np.inf, moment="distance")
    np.testing.assert_allclose(
        v_pv, [-0.6582111781307632, -0.6582111781308084, 0.0], rtol=1e-11, atol=1e-13
    )
    v_ring = shell_restricted_integral(X_IN, TRI, -3, 0.1, 0.4, moment="distance")
    np.testing.assert_allclose(
        v_ring, [-0.46696236863361906, -0.46696236863362006, 0.0], rtol=1e-11, atol=1e-13
    )


def test_rwg_moment_identity():
    """(y - v) moments must equal (x - v) S - V for any free vertex."""
    got = shell_restricted_integral(X_OFF, TRI, -1, 0.0, 10.0, "rwg", TRI[2])
    np.testing.assert_allclose(
        got, [0.2777287289250744, -0.5730159222804104, 0.0], rtol=1e-11, atol=1e-14
    )
    s = shell_restricted_integral(X_OFF, TRI, -1, 0.0, 10.0)
    v = shell_restricted_integral(X_OFF, TRI, -1, 0.0, 10.0, "distance")
    np.testing.assert_allclose(got, (X_OFF - TRI[2]) * s - v, rtol=1e-13)


def test_empty_and_degenerate_shells():
    assert shell_restricted_integral(X_OFF, TRI, -1, 5.0, 6.0) == 0.0
    assert shell_restricted_integral(X_OFF, TRI, -1, 0.7, 0.7) == 0.0
    assert shell_restricted_integral(X_OFF, TRI, -1, 0.0, 0.3) == 0.0  # below reach
    v = shell_restricted_integral(X_OFF, TRI, 0, 3.0, 2.0, moment="distance")
    np.testing.assert_array_equal(v, 0.0)


def test_consecutive_shells_sum_exactly():
    """Closed forms share boundary terms, so shell sums telescope exactly."""
    edges = np.linspace(0.0, 2.0, 9)
    parts_s = [
        shell_restricted_integral(X_OFF, TRI, -1, a, b)
        for a, b in zip(edges[:-1], edges[1:])
    ]
    parts_v = [
        shell_restricted_integral(X_OFF, TRI, -3, a, b, moment="distance")
        for a, b in zip(edges[:-1], edges[1:])
    ]
    total_s = shell_restricted_integral(X_OFF, TRI, -1, 0.0, 2.0)
    total_v = shell_restricted_integral(X_OFF, TRI, -3, 0.0, 2.0, moment="distance")
    np.testing.assert_allclose(sum(parts_s), total_s, rtol=1e-14)
    np.testing.assert_allclose(np.sum(parts_v, axis=0), total_v, rtol=1e-13)


def test_divergent_scalar_raises():
    with pytest.raises(ValueError):
        shell_restricted_integral(X_IN, TRI, -2, 0.0, 1.0)
    with pytest.raises(ValueError):
        shell_restricted_integral(X_IN, TRI, -3, 0.0, 1.0)
    # bounded once the inner radius is positive
    assert np.isfinite(shell_restricted_integral(X_IN, TRI, -3, 0.05, 1.0))


def test_off_triangle_planar_point_is_finite():
    """In-plane points outside the triangle stay integrable at any power."""
    x = np.array([1.4, 1.3, 0.0])
    for p in (-3, -2, -1):
        got = shell_restricted_integral(x, TRI, p, 0.0, 10.0 if p > -3 else np.inf)
        ref = oracle_adaptive_integral(x, TRI, p, 0.0, 10.0 if p > -3 else np.inf)
        np.testing.assert_allclose(got, ref, rtol=1e-9)
    assert quadrature_stats()["inner_radius_clips"] > 0


def test_batch_matches_single_queries():
    rng = np.random.default_rng(42)
    pts = rng.normal(scale=1.2, size=(40, 3))
    res = shell_moments_batch(
        pts, TRI, 0.2, 1.1, scalar_powers=(-1, 0, 1), vector_powers=(-3, -1)
    )
    for i in (0, 7, 23, 39):
        for p in (-1, 0, 1):
            single = shell_restricted_integral(pts[i], TRI, p, 0.2, 1.1)
            np.testing.assert_allclose(res[("S", p)][i], single, rtol=1e-13)
        for p in (-3, -1):
            single = shell_restricted_integral(pts[i], TRI, p, 0.2, 1.1, "distance")
            np.testing.assert_allclose(res[("V", p)][i], single, rtol=1e-13, atol=1e-16)


def test_batch_chunking_is_invisible():
    rng = np.random.default_rng(3)
    pts = rng.normal(scale=1.5, size=(50, 3))
    a = shell_moments_batch(pts, TRI, 0.1, 0.9, scalar_powers=(-1,), chunk=7)
    b = shell_moments_batch(pts, TRI, 0.1, 0.9, scalar_powers=(-1,), chunk=5000)
    np.testing.assert_array_equal(a[("S", -1)], b[("S", -1)])


def test_randomized_sweep_against_oracle():
    """Seeded random geometry/shell/power sweep against the reference path."""
    rng = np.random.default_rng(20260816)
    checked = 0
    while checked < 60:
        tri = rng.normal(size=(3, 3))
        if 0.5 * np.linalg.norm(np.cross(tri[1] - tri[0], tri[2] - tri[0])) < 0.05:
            continue
        x = rng.normal(scale=1.5, size=3)
        p = int(rng.integers(-3, 2))
        rads = sorted(np.linalg.norm(x - tri, axis=1))
        r_lo = rng.uniform(0.0, rads[-1])
        r_hi = r_lo + rng.uniform(0.05, 1.0) * rads[-1]
        moment = ("scalar", "distance")[checked % 2]
        got = shell_restricted_integral(x, tri, p, r_lo, r_hi, moment)
        ref = oracle_adaptive_integral(x, tri, p, r_lo, r_hi, moment)
        err = np.linalg.norm(np.atleast_1d(got - ref))
        scale = np.linalg.norm(np.atleast_1d(ref))
        assert err <= 1e-9 * scale + 1e-13, (p, moment, r_lo, r_hi, got, ref)
        checked += 1


def test_query_dataclass_roundtrip():
    q = ShellKernelQuery(X_OFF, TRI, -1, 0.6, 0.8)
    np.testing.assert_allclose(q.evaluate(), SHELL_MOMENTS[-1][0], rtol=1e-12)
    q_rwg = ShellKernelQuery(X_OFF, TRI, 0, 0.0, 10.0, moment="rwg", vertex=TRI[1])
    np.testing.assert_allclose(
        q_rwg.evaluate(),
        (X_OFF - TRI[1]) * 0.5 - np.asarray(FULL_MOMENTS[0][1]),
        rtol=1e-12,
    )


def test_stats_counters_accumulate():
    before = quadrature_stats()["queries"]
    shell_restricted_integral(X_OFF, TRI, 0, 0.0, 1.0)
    assert quadrature_stats()["queries"] == before + 1
    snap = quadrature_stats(reset=True)
    assert snap["queries"] >= 1
    assert quadrature_stats()["queries"] == 0
