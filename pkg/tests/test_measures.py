import numpy as np
import pytest
from hypothesis import given, strategies as st

from envelab.measures import DiscreteMeasure, PushforwardMeasure, kolmogorov_distance


def test_uniform_moments():
    m = DiscreteMeasure.uniform([1.0, -1.0, 2.0, 0.0])
    assert m.moment(1) == pytest.approx(1.0)
    assert m.moment(2) == pytest.approx(1.5)
    assert m.moment(1, absolute=False) == pytest.approx(0.5)


def test_pushforward_of_identity_is_uniform():
    m = PushforwardMeasure(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert m.moment(2) == pytest.approx(1 / 3)
    assert m.cdf(0.25) == pytest.approx(0.25)


def test_pushforward_plateau_is_an_atom():
    m = PushforwardMeasure(np.array([0.0, 0.5, 1.0]), np.array([1.0, 0.0, 0.0]))
    assert m.cdf(0.0) == pytest.approx(0.5)
    assert m.cdf(0.0, strict=True) == pytest.approx(0.0)


def test_kolmogorov_distance_of_dirac_and_uniform():
    d = DiscreteMeasure.uniform([0.0])
    u = PushforwardMeasure(np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert kolmogorov_distance(d, u) == pytest.approx(1.0)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=30))
def test_kolmogorov_distance_to_itself_is_zero(xs):
    m = DiscreteMeasure.uniform(xs)
    assert kolmogorov_distance(m, m) == 0.0


@given(st.lists(st.floats(-5, 5), min_size=2, max_size=10), st.floats(1, 4))
def test_pushforward_moment_matches_fine_sampling(vals, p):
    nodes = np.linspace(0, 1, len(vals))
    m = PushforwardMeasure(nodes, np.array(vals))
    s = np.linspace(0, 1, 200001)
    g = np.interp(s, nodes, vals)
    assert m.moment(p) == pytest.approx(np.trapezoid(np.abs(g) ** p, s), rel=1e-6, abs=1e-9)
