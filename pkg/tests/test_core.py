import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holocap.core import (INFINITY, InvalidArgument, JordanCurveApprox, LambdaGrid, PointCloud, SegmentLocator,
                          cantor_quarter_squares, dist_to_curve, farthest_pair, gen_arcsine_segment,
                          gen_cantor_quarter_square, gen_circle, gen_ellipse, gen_segment, is_infinity,
                          self_intersections)

from . import oracles

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
points = st.builds(complex, finite, finite)


def test_gen_circle_examples():
    np.testing.assert_array_equal(gen_circle(4).points, [1, 1j, -1, -1j])
    np.testing.assert_allclose(gen_circle(3).points ** 3, 1, atol=1e-15)
    np.testing.assert_allclose(gen_circle(4, 0.5, 1).points, [1.5, 1 + 0.5j, 0.5, 1 - 0.5j], atol=1e-16)
    with pytest.raises(InvalidArgument):
        gen_circle(2)


@given(st.integers(3, 500), st.floats(0.01, 100), points)
def test_gen_circle_on_circle(n, r, c):
    p = gen_circle(n, r, c).points
    assert p.size == n
    np.testing.assert_allclose(np.abs(p - c), r, rtol=1e-12, atol=1e-12 * abs(c))


def test_gen_segment_examples():
    np.testing.assert_array_equal(gen_segment(3, -2, 2).points, [-2, 0, 2])
    np.testing.assert_array_equal(gen_segment(2, 0, 1).points, [0, 1])
    np.testing.assert_allclose(gen_segment(5, 0, 4j).points, [0, 1j, 2j, 3j, 4j])
    with pytest.raises(InvalidArgument):
        gen_segment(4, 1, 1)


def test_arcsine_and_ellipse_generators():
    x = gen_arcsine_segment(64, -1, 1).points.real
    # Chebyshev nodes of the first kind
    np.testing.assert_allclose(np.sort(x), np.sort(np.cos(np.pi * (np.arange(64) + 0.5) / 64)), atol=1e-14)
    e = gen_ellipse(100, 2, 0.5).points
    np.testing.assert_allclose((e.real / 2) ** 2 + (e.imag / 0.5) ** 2, 1, atol=1e-14)


def test_cantor_construction():
    corners, side = cantor_quarter_squares(0)
    assert side == 1 and corners.tolist() == [0]
    p0 = gen_cantor_quarter_square(0).points
    assert sorted(map(tuple, np.c_[p0.real, p0.imag])) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    corners, side = cantor_quarter_squares(1)
    assert side == 0.25
    assert sorted(corners.tolist(), key=lambda z: (z.real, z.imag)) == [0, 0.75j, 0.75, 0.75 + 0.75j]


@given(st.integers(0, 5), st.integers(1, 3))
def test_cantor_counts_and_bounds(level, m):
    corners, side = cantor_quarter_squares(level)
    assert corners.size == 4 ** level and side == 4.0 ** -level
    p = gen_cantor_quarter_square(level, m).points
    assert p.size == 4 ** level * m * m
    assert np.all((p.real >= 0) & (p.real <= 1) & (p.imag >= 0) & (p.imag <= 1))


def test_pointcloud_validation_and_serialisation():
    with pytest.raises(InvalidArgument):
        PointCloud([])
    with pytest.raises(InvalidArgument):
        PointCloud([1, np.nan])
    with pytest.raises(InvalidArgument):
        PointCloud([1, INFINITY])
    assert is_infinity(INFINITY) and not is_infinity(1e300)
    c = PointCloud([1 + 2j, -0.5, 1 + 2j], "dup", {"note": "duplicates allowed"})
    back = PointCloud.from_csv(c.to_csv("comment line"), "dup", c.generator_params)
    np.testing.assert_array_equal(back.points, c.points)
    assert c.to_csv().splitlines()[0] == "re,im"
    data = json.loads(c.to_json())
    assert set(data) == {"label", "points", "generator_params"}
    assert data["points"][0] == [1.0, 2.0]
    back = PointCloud.from_json(c.to_json())
    np.testing.assert_array_equal(back.points, c.points)
    assert back.label == "dup" and back.generator_params == c.generator_params


@given(st.lists(points, min_size=1, max_size=40))
def test_pointcloud_csv_roundtrip(pts):
    c = PointCloud(pts)
    np.testing.assert_array_equal(PointCloud.from_csv(c.to_csv()).points, c.points)


def test_lambda_grid():
    g = LambdaGrid.real(-0.9, 0.9, 19)
    assert len(g) == 19 and np.any(g.samples == 0)
    g = LambdaGrid.real(-0.8, 0.8, 4)
    assert np.any(g.samples == 0)
    p = LambdaGrid.polar([0.4, 0.8], 16)
    assert len(p) == 33
    with pytest.raises(InvalidArgument):
        LambdaGrid([0, 1.0])
    with pytest.raises(InvalidArgument):
        LambdaGrid([0.5])


def test_jordan_curve_validation():
    with pytest.raises(InvalidArgument):
        JordanCurveApprox([0, 1])
    with pytest.raises(InvalidArgument):
        JordanCurveApprox([0, 1, 1, 1j])
    bowtie = [0, 1 + 1j, 1, 1j]
    assert self_intersections(np.array(bowtie))
    with pytest.raises(InvalidArgument):
        JordanCurveApprox(bowtie, check_simple=True)
    assert self_intersections(gen_circle(500).points) == []


def test_dist_to_curve_examples():
    square = JordanCurveApprox([1 + 1j, -1 + 1j, -1 - 1j, 1 - 1j])
    assert dist_to_curve(0, square) == pytest.approx(1.0)
    assert dist_to_curve(1 + 1j, square) == 0.0
    circle = JordanCurveApprox(gen_circle(1024).points)
    assert abs(dist_to_curve(3, circle) - 2) < 1e-4


@given(st.lists(points, min_size=2, max_size=30))
def test_dist_matches_brute_force(zs):
    curve = JordanCurveApprox(gen_circle(40, 2.0).points * (1 + 0.3j))
    d = dist_to_curve(np.array(zs), curve)
    v = curve.vertices
    for z, dz in zip(zs, d):
        ref = min(oracles.brute_segment_distance(z, v[k], v[(k + 1) % v.size]) for k in range(v.size))
        assert dz == pytest.approx(ref, abs=1e-12)


@given(points, points)
def test_dist_is_one_lipschitz(z1, z2):
    curve = JordanCurveApprox(gen_ellipse(300, 2, 1).points)
    assert abs(dist_to_curve(z1, curve) - dist_to_curve(z2, curve)) <= abs(z1 - z2) + 1e-12


def test_query_radius_is_a_lower_bound():
    curve = JordanCurveApprox(gen_ellipse(2000, 1.5, 0.4).points)
    loc = SegmentLocator(curve)
    rng = np.random.default_rng(3)
    z = 1.5 * (rng.random(5000) - 0.5) * 2 + 0.4j * (rng.random(5000) - 0.5) * 2
    exact, _ = loc.query(z)
    r, seg = loc.query_radius(z, 1e-3)
    assert np.all(r <= exact + 1e-15)
    close = r < 1e-3
    np.testing.assert_array_equal(r[close], exact[close])
    assert np.all(seg[close] >= 0)


def test_contains_against_winding_number():
    rng = np.random.default_rng(0)
    v = np.exp(2j * np.pi * np.sort(rng.random(40))) * (0.6 + 0.8 * rng.random(40))
    curve = JordanCurveApprox(v)
    z = 1.6 * ((rng.random(400) - 0.5) + 1j * (rng.random(400) - 0.5)) * 2
    inside = curve.contains(z)
    for zi, ins in zip(z, inside):
        assert ins == oracles.winding_inside(zi, v)


@given(st.lists(points, min_size=2, max_size=60, unique=True))
def test_farthest_pair_matches_brute_force(pts):
    z = np.array(pts)
    i, j = farthest_pair(z)
    _, best = oracles.brute_farthest(z)
    assert i < j
    assert abs(z[i] - z[j]) == pytest.approx(best, rel=1e-15)


def test_farthest_pair_large_hull():
    z = gen_ellipse(3000, 2, 1).points
    i, j = farthest_pair(z)
    assert abs(z[i] - z[j]) == pytest.approx(4.0, abs=1e-12)
    (bi, bj), best = oracles.brute_farthest(z[:800])
    assert farthest_pair(z[:800]) == (bi, bj)
