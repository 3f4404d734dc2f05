import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from envelab.geometry import (
    ArcSet,
    Chart,
    ChartPoint,
    NegligibleSetError,
    RadialSet,
    WeightPotential,
    density_canonicalize,
    fs_potential,
    quadrature,
)


def test_fs_potential_at_origin_and_unit_circle():
    assert fs_potential(ChartPoint.from_affine(0.0)) == 0.0
    assert fs_potential(ChartPoint.from_affine(1.0)) == pytest.approx(math.log(2), abs=1e-15)


def test_fs_curvature_has_unit_mass():
    # Delta log(1+r^2) / (4 pi) = 1 / (pi (1+r^2)^2), integrated over the plane
    rule = quadrature("radial_x_angular", 40)
    mass = rule.integrate(lambda r, th: r / (math.pi * (1 + r**2) ** 2))
    assert abs(mass - 1.0) <= 1e-10


def test_circle_rule_constant_and_orthogonality():
    rule = quadrature("circle", 8)
    assert abs(rule.integrate(lambda th: np.ones_like(th)) - 2 * math.pi) <= 1e-14
    assert abs(rule.integrate(lambda th: np.cos(3 * th))) <= 1e-14


def test_radial_rule_closed_form():
    rule = quadrature("radial_x_angular", 12)
    val = rule.integrate_radial(lambda r: r**3 / (1 + r**2) ** 3)
    assert val == pytest.approx(0.25, abs=1e-10)


def test_chart_transition():
    p = ChartPoint.from_affine(3.0 + 4.0j)
    assert p.chart is Chart.INFINITY
    assert p.affine() == pytest.approx(3.0 + 4.0j)
    assert ChartPoint.infinity().in_chart(Chart.INFINITY) == 0


@given(st.floats(0.05, 20.0), st.floats(0.0, 2 * math.pi))
def test_fs_potential_transforms_between_charts(r, th):
    # log(1+|z|^2) = log(1+|w|^2) + log|z|^2 with w = 1/z
    z = r * complex(math.cos(th), math.sin(th))
    lhs = math.log1p(abs(z) ** 2)
    rhs = fs_potential(ChartPoint(Chart.INFINITY, 1 / z)) + math.log(abs(z) ** 2)
    assert lhs == pytest.approx(rhs, abs=1e-12)


def test_density_canonicalize_drops_isolated_point():
    A = ArcSet.from_intervals([(0.0, math.pi), (1.5 * math.pi, 1.5 * math.pi)])
    assert density_canonicalize(A).arcs == ((0.0, math.pi),)


def test_touching_intervals_merge():
    A = RadialSet.from_intervals([(0.0, 1.0), (1.0, 2.0)])
    assert A.intervals == ((0.0, 2.0),)


def test_separated_intervals_survive():
    A = RadialSet.from_intervals([(0.0, 1.0), (1.0 + 1e-9, 2.0)])
    assert len(density_canonicalize(A).intervals) == 2


def test_negligible_set_rejected():
    with pytest.raises(NegligibleSetError):
        density_canonicalize(ArcSet.from_intervals([(1.0, 1.0)]))


@given(st.floats(0.01, 3.1), st.floats(-10.0, 10.0))
def test_arc_rotation_preserves_measure(a, shift):
    A = ArcSet.centered(a)
    assert A.rotated(shift).measure() == pytest.approx(2 * a, abs=1e-12)
    assert A.mirrored().measure() == pytest.approx(2 * a, abs=1e-12)


def test_outside_disk_curvature_mass_is_half():
    assert RadialSet.outside_disk().curvature_mass() == pytest.approx(0.5, abs=1e-15)
    assert RadialSet.everything().curvature_mass() == pytest.approx(1.0, abs=1e-15)


def test_weight_potential_charts_agree_on_overlap():
    phi = WeightPotential.from_function(
        lambda z: 0.1 * np.real(z), lambda w: 0.1 * np.real(1 / np.where(w == 0, 1, w)),
        n_radial=256, n_angular=128,
    )
    assert phi.overlap_discrepancy() < 1e-2


def test_zero_potential_is_fs():
    z = np.array([0.0, 0.5j, 2.0, 100.0])
    assert np.all(WeightPotential.zero()(z) == 0)
