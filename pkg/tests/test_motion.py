import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import cKDTree
from scipy.stats import ks_2samp

from holocap.capacity import energy_capacity, fekete_capacity
from holocap.core import INFINITY, InvalidArgument, PointCloud, gen_circle, gen_segment
from holocap.motion import (BottcherParams, Motion, bottcher_map, check_motion_axioms, external_ray_landing,
                            forward_orbit_radius, julia_inverse_iteration, make_motion, mandelbrot_membership,
                            motion_affine_stretch, motion_bottcher, motion_scaling, motion_translation)

from . import oracles

angles = st.floats(0, 1, exclude_max=True, allow_nan=False)
small_real_c = st.floats(-0.2, 0.2)
region_c = st.builds(lambda r, t: r * complex(math.cos(t), math.sin(t)), st.floats(0, 0.2), st.floats(0, 2 * math.pi))


def _xy(z):
    return np.column_stack([np.real(z), np.imag(z)])


def test_translation_examples():
    m = motion_translation(1)
    assert m(0.5, 2) == 2.5
    z = gen_circle(50).points
    np.testing.assert_array_equal(m(0, z), z)
    assert m(0.3, INFINITY) is INFINITY
    with pytest.raises(InvalidArgument):
        m(1.0, 0)


def test_translation_keeps_capacity():
    m = motion_translation(1 + 2j)
    z = gen_circle(512).points
    base = fekete_capacity(z, (4, 8, 16)).extrapolated
    for lam in (0.3, -0.5j, 0.9):
        assert fekete_capacity(m(lam, z), (4, 8, 16)).extrapolated == pytest.approx(base, abs=1e-9)


def test_scaling_examples():
    m = motion_scaling(0.5)
    assert m(0.5, 2) == 2.5
    with pytest.raises(InvalidArgument):
        motion_scaling(0.6)
    z = gen_circle(1024).points
    for lam in (0.5, -0.5, 0.4j):
        cap = fekete_capacity(m(lam, z)).extrapolated
        assert cap == pytest.approx(abs(1 + lam / 2), rel=0.02)


def test_stretch_examples():
    m = motion_affine_stretch()
    assert m(0.5, 1) == 1.5 and m(0.5, 1j) == 0.5j
    e = m(0.5, gen_circle(400).points)
    np.testing.assert_allclose((e.real / 1.5) ** 2 + (e.imag / 0.5) ** 2, 1, atol=1e-12)
    seg = gen_segment(4096, -1, 1).points
    for lam in (-0.5, 0.0, 0.6):
        cap = fekete_capacity(m(lam, seg)).extrapolated
        assert cap == pytest.approx((1 + lam) / 2, rel=0.03)
    for lam in (-0.6, 0.5):
        assert fekete_capacity(m(lam, gen_circle(2048).points)).extrapolated == pytest.approx(1, rel=0.03)


def test_make_motion_and_apply():
    m = make_motion("scaling", beta="0.25")
    assert m.ident == "scaling:beta=0.25"
    moved = m.apply(0.4, gen_circle(8))
    assert moved.generator_params["motion"]["lambda"] == [0.4, 0.0]
    assert make_motion("translation", a=[0, 1])(0.5, 0) == 0.5j
    with pytest.raises(InvalidArgument):
        make_motion("rotation")


def test_mandelbrot_membership():
    assert mandelbrot_membership(0)
    assert not mandelbrot_membership(1)
    assert mandelbrot_membership(-2)
    assert mandelbrot_membership(-1 + 0.1j, max_iter=500)
    assert not mandelbrot_membership(-0.75 + 0.1j, max_iter=500)
    with pytest.raises(InvalidArgument):
        mandelbrot_membership(0, max_iter=0)


def test_inverse_iteration_circle():
    cloud = julia_inverse_iteration(0, 5000, burn_in=50, seed=1)
    assert cloud.points.size == 5000
    assert np.max(np.abs(np.abs(cloud.points) - 1)) < 1e-6


def test_inverse_iteration_capacity_one():
    cloud = julia_inverse_iteration(0.1, 8192, seed=2)
    assert abs(energy_capacity(cloud.points).capacity - 1) < 0.05


def test_inverse_iteration_conjugation_symmetric():
    a = julia_inverse_iteration(-0.5, 4000, seed=3).points
    b = julia_inverse_iteration(-0.5, 4000, seed=4).points
    assert ks_2samp(a.imag, -b.imag).pvalue > 0.01
    assert ks_2samp(a.real, b.real).pvalue > 0.01


def test_inverse_iteration_worker_independent():
    a = julia_inverse_iteration(0.15j, 40000, seed=7, workers=1).points
    b = julia_inverse_iteration(0.15j, 40000, seed=7, workers=4).points
    np.testing.assert_array_equal(a, b)


def test_bottcher_params_validation():
    with pytest.raises(InvalidArgument):
        BottcherParams(depth=7, tolerance=1.0)
    with pytest.raises(InvalidArgument):
        BottcherParams(escape_radius=50)
    with pytest.raises(InvalidArgument):
        BottcherParams(depth=8)  # radius 1e4 ** (1/256) is 0.037 away from 1
    assert BottcherParams(depth=8, tolerance=0.05).boundary_radius() < 1.05


def test_landing_examples():
    assert abs(external_ray_landing(0, 0.25) - 1j) < 1e-6
    assert external_ray_landing(0.1, 0.0) == pytest.approx((1 + math.sqrt(0.6)) / 2, abs=1e-6)
    assert external_ray_landing(0.1, 0.0) == pytest.approx(oracles.repelling_fixed_point(0.1), abs=1e-6)
    # the doubling 2-cycle {1/3, 2/3} lands on the period-2 orbit z^2 + z + c + 1 = 0
    cycle = np.roots([1, 1, 1.1])
    p = external_ray_landing(0.1, 1 / 3)
    assert min(abs(p - cycle)) < 1e-6
    assert p == pytest.approx(-0.5 + 0.92195j, abs=1e-5)
    assert external_ray_landing(0.1, 2 / 3) == pytest.approx(np.conj(p), abs=1e-6)


def test_landing_region_check():
    with pytest.raises(InvalidArgument):
        external_ray_landing(0.21, 0.3)
    external_ray_landing(0.2, 0.3)
    external_ray_landing(0.21, 0.3, BottcherParams(allow_outside_region=True))


@given(small_real_c, angles)
def test_landing_conjugation_equivariance(c, theta):
    a = external_ray_landing(c, theta)
    b = external_ray_landing(c, (1 - theta) % 1)
    assert abs(a - np.conj(b)) < 1e-6


@given(region_c, angles)
def test_landing_semiconjugacy_and_bounded_orbit(c, theta):
    p = BottcherParams()
    z = external_ray_landing(c, theta, p)
    assert abs(z * z + c - external_ray_landing(c, (2 * theta) % 1, p)) < 1e-6
    # bounded for depth - 1 steps; the last step returns to the seed circle |w| = R up to rounding
    assert forward_orbit_radius(c, z, p.depth - 1)[0] <= p.escape_radius
    assert forward_orbit_radius(c, z, p.depth)[0] <= 2 * p.escape_radius


def test_bottcher_map_exterior():
    # B_c(z) = z + O(1/z): far out the map is close to the identity
    z = 1e3 * np.exp(2j * np.pi * np.arange(8) / 8)
    np.testing.assert_allclose(bottcher_map(0.1, z), z, atol=1e-3)
    # conjugacy p_c(B_c(z)) = B_c(z^2) off the unit circle
    z = 1.3 * np.exp(2j * np.pi * (np.arange(16) + 0.1) / 16)
    np.testing.assert_allclose(bottcher_map(0.15, z) ** 2 + 0.15, bottcher_map(0.15, z ** 2), atol=1e-10)
    with pytest.raises(InvalidArgument):
        bottcher_map(0.1, 0.5)


def test_bottcher_depth_convergence():
    z = 1.01 * np.exp(2j * np.pi * np.linspace(0.05, 0.95, 12))
    c = 0.18
    vals = {d: bottcher_map(c, z, BottcherParams(depth=d, tolerance=1.0)) for d in (8, 16, 32)}
    d1 = np.max(np.abs(vals[16] - vals[8]))
    d2 = np.max(np.abs(vals[32] - vals[16]))
    assert d1 > 0
    assert d2 < 0.75 * d1


def test_motion_bottcher_identity_and_infinity():
    m = motion_bottcher()
    z = np.concatenate([gen_circle(64).points, 2.5 * gen_circle(16).points])
    np.testing.assert_array_equal(m(0, z), z)
    assert m(0.5, INFINITY) is INFINITY
    assert m.domain_note == "closed exterior of unit disk plus boundary"


def test_motion_bottcher_matches_julia_cloud():
    img = motion_bottcher()(0.8, gen_circle(256).points)
    cloud = julia_inverse_iteration(0.2, 50000, seed=0).points
    d, _ = cKDTree(_xy(cloud)).query(_xy(img))
    assert d.max() < 1e-2


def test_motion_bottcher_capacity_one():
    m = motion_bottcher()
    circle = gen_circle(2048).points
    for lam in (0, 0.4, -0.4, 0.8, -0.8):
        assert fekete_capacity(m(lam, circle)).extrapolated == pytest.approx(1, abs=0.03)


def test_axioms_translation_exact():
    rep = check_motion_axioms(motion_translation(1), gen_circle(64))
    assert rep.identity_residual < 1e-10 and rep.holomorphy_residual < 1e-10
    assert rep.passed and not rep.injectivity_flagged
    assert rep.to_dict()["note"].startswith("injectivity is a sampled check")


def test_axioms_flag_antiholomorphic():
    fake = Motion(lambda lam, z: z + np.conj(lam), "fake")
    rep = check_motion_axioms(fake, gen_circle(64))
    assert rep.holomorphy_residual > 1e3 * rep.tolerance
    assert not rep.passed


def test_axioms_flag_collapse():
    collapse = Motion(lambda lam, z: z if lam == 0 else np.round(z), "collapse")
    rep = check_motion_axioms(collapse, gen_circle(64))
    assert rep.injectivity_flagged and not rep.passed


def test_axioms_stretch_injective_near_boundary():
    rep = check_motion_axioms(motion_affine_stretch(), gen_circle(128), lambda_circle_radius=0.9)
    assert not rep.injectivity_flagged and rep.passed


@pytest.mark.parametrize("motion", [motion_translation(0.3 - 1j), motion_scaling(0.5j), motion_affine_stretch()],
                         ids=lambda m: m.name)
def test_exact_motions_pass_axioms(motion):
    pts = PointCloud(np.concatenate([gen_circle(32).points, gen_segment(17, -2, 2j).points]))
    assert check_motion_axioms(motion, pts, seed=5).passed


def test_bottcher_motion_passes_axioms():
    m = motion_bottcher(BottcherParams(depth=24, tolerance=1e-4))
    pts = PointCloud(np.concatenate([gen_circle(48).points, 1.5 * gen_circle(16).points]))
    rep = check_motion_axioms(m, pts, lambda_circle_radius=0.5)
    assert rep.tolerance == 1e-4 and rep.passed, rep.to_dict()
