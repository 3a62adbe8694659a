import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from holocap.capacity import (DEFAULT_NS, capacity_from_diameters, energy_capacity, fekete_capacity,
                              fekete_exchange, gamma_is_null_on_circle, leja_sequence, log_vandermonde,
                              nth_diameter, reference_capacity, reference_gamma)
from holocap.core import (DegenerateInput, InvalidArgument, gen_arcsine_segment, gen_circle, gen_ellipse,
                          gen_segment)

from . import oracles

# Fekete (Gauss-Lobatto) n-th diameters of [-2, 2], from the oracle module
SEGMENT_DELTA = {8: 1.498837982926454, 32: 1.1445576848833467, 64: 1.080335987432978}


def test_log_vandermonde_examples():
    assert log_vandermonde([0, 1]) == 0.0
    assert log_vandermonde([0, 1, 2]) == pytest.approx(math.log(2))
    assert log_vandermonde(gen_circle(3).points) == pytest.approx(1.5 * math.log(3))
    assert log_vandermonde([0, 1, 1]) == -math.inf
    with pytest.raises(InvalidArgument):
        log_vandermonde([1])


def test_nth_diameter_examples():
    assert nth_diameter([0, 4]) == pytest.approx(4)
    assert nth_diameter([-2, 0, 2]) == pytest.approx(16 ** (1 / 3))
    assert nth_diameter([0, 1, 1]) == 0.0
    for n in range(3, 9):
        assert nth_diameter(gen_circle(n).points) == pytest.approx(oracles.circle_delta(n), rel=1e-14)
        assert nth_diameter(gen_circle(n).points) == pytest.approx(oracles.brute_delta(gen_circle(n).points))


def test_segment_oracle_values_frozen():
    for n, v in SEGMENT_DELTA.items():
        assert oracles.segment_delta(n, 2.0) == pytest.approx(v, rel=1e-12)


def test_leja_examples():
    assert sorted(leja_sequence([0, 1, 5], 2)) == [0, 2]
    grid = gen_segment(4001, -2, 2).points
    assert sorted(grid[leja_sequence(grid, 3)].real.tolist()) == pytest.approx([-2, 0, 2], abs=1e-12)
    circ = gen_circle(720).points
    sq = circ[leja_sequence(circ, 4)]
    # a rotated square: all four points a quarter turn apart
    assert np.allclose(np.sort(np.abs(sq[:, None] - sq[None, :]).ravel())[-4:], 2, atol=1e-2)
    with pytest.raises(InvalidArgument):
        leja_sequence([0, 1], 3)


def test_fekete_examples():
    r = fekete_exchange([0, 1, 3], 3)
    assert sorted(r.indices) == [0, 1, 2] and r.exchanges == 0
    grid = gen_segment(2001, -2, 2).points
    assert fekete_exchange(grid, 3).delta == pytest.approx(16 ** (1 / 3), abs=1e-6)
    circle = gen_circle(4096).points
    assert abs(fekete_exchange(circle, 16).delta - 16 ** (1 / 15)) < 1e-3
    with pytest.raises(InvalidArgument):
        fekete_exchange([0, 1], 3)


def test_fekete_segment_grid_matches_lobatto():
    grid = gen_segment(8192, -2, 2).points
    for n in (8, 32):
        d = fekete_exchange(grid, n).delta
        assert d <= SEGMENT_DELTA[n] * (1 + 1e-12)
        assert d == pytest.approx(SEGMENT_DELTA[n], rel=1e-4)


@given(st.integers(3, 12), st.integers(0, 2**32 - 1))
def test_fekete_never_worse_than_leja(n, seed):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=60) + 1j * rng.normal(size=60)
    r = fekete_exchange(z, n, seed=seed)
    assert r.log_vandermonde >= r.initial_log_vandermonde
    assert r.log_vandermonde == pytest.approx(log_vandermonde(z[r.indices]))


@given(st.floats(0.1, 10), st.floats(0, 2 * math.pi), st.floats(-5, 5), st.floats(-5, 5))
def test_scaling_equivariance(s, angle, tx, ty):
    z = gen_ellipse(200, 1.3, 0.6).points
    scale = s * complex(math.cos(angle), math.sin(angle))
    base = fekete_exchange(z, 10)
    moved = fekete_exchange(scale * z + complex(tx, ty), 10)
    assert moved.delta == pytest.approx(s * base.delta, rel=1e-9)


def test_set_monotonicity():
    big = gen_circle(512).points
    small = big[::4]
    for n in (8, 16):
        assert fekete_exchange(small, n).delta <= fekete_exchange(big, n).delta + 1e-12


def test_duplicates_are_tolerated():
    z = np.concatenate([gen_circle(64).points, gen_circle(64).points])
    r = fekete_exchange(z, 8)
    assert r.delta == pytest.approx(8 ** (1 / 7))


def test_capacity_from_diameters_examples():
    rep = capacity_from_diameters([(n, 0.7) for n in (8, 16, 32, 64)])
    assert rep.raw_estimate == 0.7 and rep.extrapolated == 0.7
    rep = capacity_from_diameters([(n, oracles.circle_delta(n)) for n in range(8, 65)])
    assert abs(rep.extrapolated - 1) < 0.02
    assert rep.raw_estimate >= rep.extrapolated
    seg = [(n, oracles.segment_delta(n, 2.0)) for n in DEFAULT_NS]
    assert abs(capacity_from_diameters(seg).extrapolated - 1) < 0.03
    with pytest.raises(InvalidArgument):
        capacity_from_diameters([(8, 1.0), (16, 1.0)])
    with pytest.raises(InvalidArgument):
        capacity_from_diameters([(8, 1.0), (8, 1.0), (16, 1.0)])


def test_capacity_report_flags_increase():
    rep = capacity_from_diameters([(8, 1.2), (16, 1.1), (32, 1.15)])
    assert not rep.monotone and rep.violations[0][0] == 32


def test_capacity_report_json():
    rep = fekete_capacity(gen_circle(512).points, (4, 8, 16))
    d = json.loads(rep.to_json())
    assert {"diameters", "raw", "extrapolated", "method", "stats"} <= set(d)
    assert d["diameters"][0] == [4, pytest.approx(4 ** (1 / 3))]
    assert rep.monotone


def test_segment_pipeline():
    rep = fekete_capacity(gen_segment(8192, -2, 2).points)
    assert rep.monotone
    assert abs(rep.extrapolated - 1) < 0.03


def test_energy_capacity_examples():
    e = energy_capacity(gen_circle(4096).points)
    assert abs(e.capacity - 1) < 0.03 and e.pair_count > 0
    e2 = energy_capacity(gen_circle(4096, 2.0).points)
    assert e2.capacity == pytest.approx(2 * e.capacity, rel=1e-12)
    assert abs(e2.capacity - 2) < 0.06
    a = energy_capacity(gen_arcsine_segment(4096, -2, 2).points)
    assert abs(a.capacity - 1) < 0.06
    with pytest.raises(DegenerateInput):
        energy_capacity([1, 1, 1])


def test_energy_matches_nth_diameter_exactly_on_full_pairs():
    for n in (5, 12, 40):
        z = gen_circle(n).points
        assert energy_capacity(z).capacity == pytest.approx(nth_diameter(z), rel=1e-13)


def test_energy_sampled_is_deterministic_and_worker_independent():
    z = gen_circle(5000).points
    a = energy_capacity(z, max_pairs=200_000, seed=3, workers=1)
    b = energy_capacity(z, max_pairs=200_000, seed=3, workers=4)
    assert a == b and not a.exhaustive
    assert abs(a.capacity - 1) < 0.03


def test_energy_skips_coincident_pairs():
    e = energy_capacity([0, 0, 1, 1j])
    assert e.skipped_coincident == 1 and e.pair_count == 5


def test_reference_capacity():
    assert reference_capacity("disk", r=0.5) == 0.5
    assert reference_capacity("segment", length=4) == 1
    assert reference_capacity("ellipse", a=1.5, b=0.5) == 1
    with pytest.raises(InvalidArgument):
        reference_capacity("disk", r=0)
    with pytest.raises(InvalidArgument):
        reference_capacity("square", side=1)


def test_reference_capacity_against_fekete():
    disk = fekete_capacity(gen_circle(2048, 0.5).points)
    assert disk.extrapolated == pytest.approx(0.5, rel=0.02)
    ell = fekete_capacity(gen_ellipse(4096, 1.5, 0.5).points)
    assert ell.extrapolated == pytest.approx(1.0, rel=0.03)


def test_reference_gamma():
    assert reference_gamma("disk", r=1).value == 1
    assert reference_gamma("intervals", intervals=[(-1, 1)]).value == 0.5
    g = reference_gamma("intervals", intervals=[(0, 1), (2, 4)])
    assert g.value == 0.75 and "literature" in g.provenance
    with pytest.raises(InvalidArgument):
        reference_gamma("intervals", intervals=[(0, 2), (1, 3)])
    assert reference_gamma("cardioid").value is None
    # connected shapes: analytic capacity equals logarithmic capacity
    assert reference_gamma("disk", r=0.7).value == reference_capacity("disk", r=0.7)
    assert reference_gamma("intervals", intervals=[(-2, 2)]).value == reference_capacity("segment", length=4)


def test_gamma_null_on_circle():
    assert gamma_is_null_on_circle([])
    assert gamma_is_null_on_circle([(1.0, 1.0)])
    assert not gamma_is_null_on_circle([(0.0, 0.1)])
