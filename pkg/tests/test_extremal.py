import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from envelab.extremal import Grid, c_exponent, chebyshev_value, envelope_field
from envelab.geometry import ArcSet, ChartPoint, WeightPotential

Z = WeightPotential.zero()
HALF = ArcSet.centered(math.pi / 2)
ANTIPODE = ChartPoint.from_affine(-1.0)


def test_full_circle_at_origin_is_log2():
    assert chebyshev_value(ChartPoint.from_affine(0.0), ArcSet.full(), Z, 8) == pytest.approx(math.log(2), abs=5e-3)


def test_value_vanishes_on_the_set():
    assert abs(chebyshev_value(ChartPoint.from_affine(1.0), ArcSet.full(), Z, 8)) <= 1e-6
    assert abs(chebyshev_value(ChartPoint.from_affine(1j), HALF, Z, 16)) <= 1e-6


def test_degree_32_vs_64_at_antipode():
    a = chebyshev_value(ANTIPODE, HALF, Z, 32, full=True)
    b = chebyshev_value(ANTIPODE, HALF, Z, 64, full=True)
    assert a.converged and b.converged
    assert b.value > a.upper
    assert b.value - a.value <= 2e-2


def test_certified_bracket():
    r = chebyshev_value(ANTIPODE, HALF, Z, 24, full=True)
    assert 0 <= r.gap <= 1e-3 * abs(r.value)


def test_full_circle_field_closed_form():
    grid = Grid.default(3, 4)
    f = envelope_field(ArcSet.full(), Z, 64, grid)
    want = math.log(2) - np.log1p(grid.radii**2)
    err = np.max(np.abs(f.values - want[None, :, None]))
    assert err <= 1e-2


def test_field_monotone_in_the_set_and_nonnegative():
    grid = Grid.default(3, 4)
    small = envelope_field(ArcSet.centered(math.pi / 3), Z, 16, grid)
    big = envelope_field(HALF, Z, 16, grid)
    assert np.all(small.values >= big.values - 1e-6)
    assert np.all(big.values >= -1e-9)


def test_reflection_through_circle():
    a = chebyshev_value(ChartPoint.from_affine(2.0), HALF, Z, 16)
    b = chebyshev_value(ChartPoint.from_affine(0.5), HALF, Z, 16)
    assert a == pytest.approx(b, abs=1e-8)


@settings(max_examples=5)
@given(st.floats(0.0, 2 * math.pi))
def test_rotation_equivariance(beta):
    p = ChartPoint.from_affine(-0.6)
    q = ChartPoint.from_affine(-0.6 * complex(math.cos(beta), math.sin(beta)))
    a = chebyshev_value(p, HALF, Z, 12)
    b = chebyshev_value(q, HALF.rotated(beta), Z, 12)
    assert a == pytest.approx(b, abs=1e-7)


def test_closure_insensitivity():
    a = chebyshev_value(ANTIPODE, HALF, Z, 16)
    b = chebyshev_value(ANTIPODE, ArcSet.centered(math.pi / 2 * (1 - 1e-10)), Z, 16)
    c = chebyshev_value(ANTIPODE, ArcSet.from_intervals([(-math.pi / 2, math.pi / 2), (3.0, 3.0)]), Z, 16)
    assert a == pytest.approx(b, abs=1e-6)
    assert a == pytest.approx(c, abs=1e-9)


def test_exponent_of_full_circle_is_zero():
    assert abs(c_exponent(ArcSet.full(), k=16, grid=Grid.default(3, 4), refine=False)) <= 1e-2


def test_exponent_decreasing_in_half_angle():
    grid = Grid.default(3, 8)
    cs = [c_exponent(ArcSet.centered(a), k=16, grid=grid, refine=False) for a in (math.pi / 6, math.pi / 3, math.pi / 2)]
    assert cs[0] > cs[1] > cs[2] > 0
