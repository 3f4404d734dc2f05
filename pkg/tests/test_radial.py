import math

import mpmath as mp
import numpy as np
import pytest
from scipy.stats import beta
from hypothesis import given, strategies as st

from envelab.geometry import RadialSet
from envelab.radial import (
    RadialProfile,
    RadialSymbol,
    UnorderedPairError,
    diagonal_speed_values,
    diagonal_toeplitz_spectrum,
    diagonal_toeplitz_values,
    geodesic,
    geodesic_speed,
    inverse_legendre,
    legendre,
    radial_envelope,
    speed_pushforward,
)

T = np.linspace(-12, 12, 481)
FS = RadialProfile.fubini_study()
ENV = radial_envelope(FS, RadialSet.outside_disk())


def quad_profile():
    # t^2/4 clipped to slopes [0, 1]: t^2/4 on [0, 2], 0 left of 0, t - 1 right of 2
    t = np.linspace(0, 2, 2001)
    return RadialProfile(t, t**2 / 4, 0.0, 1.0)


def test_conjugate_of_kink_is_zero():
    d = legendre(RadialProfile.kink())
    s = np.linspace(0, 1, 11)
    assert np.max(np.abs(d(s))) == 0.0


def test_conjugate_of_clipped_parabola():
    d = legendre(quad_profile())
    s = np.linspace(0, 1, 101)
    assert np.max(np.abs(d(s) - s**2)) < 1e-6  # piecewise-linear sampling error


def test_biconjugation_fs():
    back = inverse_legendre(legendre(FS))
    assert np.max(np.abs(back(T) - FS(T))) <= 1e-10


@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8), st.floats(-3, 3))
def test_biconjugation_random(slopes, c):
    s = np.sort(np.array(slopes))
    t = np.cumsum(np.full(s.size - 1, 0.7)) - 1.0
    v = c + np.concatenate([[0.0], np.cumsum(s[1:-1] * 0.7)]) if s.size > 2 else np.array([c])
    t = t[: v.size] if s.size > 2 else np.array([0.0])
    prof = RadialProfile(t, v, float(s[0]), float(s[-1]))
    back = inverse_legendre(legendre(prof))
    tt = np.linspace(-5, 5, 101)
    assert np.max(np.abs(back(tt) - prof(tt))) <= 1e-10


def test_envelope_over_everything_is_obstacle():
    env = radial_envelope(FS, RadialSet.everything())
    assert np.max(np.abs(env(T) - FS(T))) <= 1e-12


def test_envelope_of_unit_circle_is_log2_plus_kink():
    env = radial_envelope(FS, RadialSet.from_intervals([(0.0, 0.0)]))
    assert np.max(np.abs(env(T) - (math.log(2) + np.maximum(0, T)))) <= 1e-9


def test_envelope_on_interval_by_hand():
    a = 1.5
    env = radial_envelope(FS, RadialSet.from_intervals([(-a, a)]))
    inside = np.abs(T) <= a
    assert np.max(np.abs(env(T[inside]) - FS(T[inside]))) <= 1e-9
    # outside S the envelope continues with the extreme admissible slopes 0 and 1
    left, right = T < -a, T > a
    assert np.max(np.abs(env(T[left]) - FS(-a))) <= 1e-9
    assert np.max(np.abs(env(T[right]) - (FS(a) + T[right] - a))) <= 1e-9


def test_outside_disk_envelope_closed_form():
    expect = np.where(T < 0, math.log(2), np.logaddexp(0, T))
    assert np.max(np.abs(ENV(T) - expect)) <= 1e-9


def test_envelope_idempotent_and_below_obstacle():
    S = RadialSet.from_intervals([(-2.0, -1.0), (0.5, 4.0)])
    env = radial_envelope(FS, S)
    assert np.max(np.abs(radial_envelope(env, S)(T) - env(T))) <= 1e-10
    on_s = S.contains(T)
    assert np.all(env(T[on_s]) <= FS(T[on_s]) + 1e-12)
    assert np.all(env(T) >= FS(T) - 1e-12)  # FS itself is a competitor


def test_geodesic_endpoints_and_translation():
    assert np.max(np.abs(geodesic(FS, ENV, 0.0)(T) - FS(T))) <= 1e-9
    assert np.max(np.abs(geodesic(FS, ENV, 1.0)(T) - ENV(T))) <= 1e-9
    shifted = FS.shifted(-0.3)
    assert np.max(np.abs(geodesic(FS, shifted, 0.4)(T) - (FS(T) - 0.12))) <= 1e-9


def test_geodesic_midpoint_brute_force():
    # brute-force discrete sup over affine-in-tau contenders, in dual form:
    # v_tau(t) = sup_s (s t - (1-tau) v0*(s) - tau v1*(s))
    v0 = RadialProfile.kink()
    v1 = RadialProfile(np.array([-1.0, 0.0]), np.array([-1.0, 0.0]), 0.0, 1.0)
    mid = geodesic(v0, v1, 0.5)
    s = np.linspace(0, 1, 20001)
    d0, d1 = legendre(v0), legendre(v1)
    tt = np.linspace(-3, 3, 61)
    brute = np.max(s[None, :] * tt[:, None] - 0.5 * d0(s)[None, :] - 0.5 * d1(s)[None, :], axis=1)
    assert np.max(np.abs(mid(tt) - brute)) <= 1e-9


def test_speed_trivial_cases():
    assert geodesic_speed(FS, FS).sup_norm == 0.0
    sp = geodesic_speed(FS, FS.shifted(-0.25))
    assert np.max(np.abs(sp.on_slopes + 0.25)) <= 1e-12


def test_speed_vanishes_on_contact_set():
    sp = geodesic_speed(FS, ENV, convention="potential")
    t = np.linspace(0.01, 10, 200)
    assert np.max(np.abs(sp.at(t))) <= 1e-8
    assert np.all(sp.on_slopes >= -1e-8)  # the envelope lies above FS


def test_speed_conventions_are_negatives():
    a = geodesic_speed(FS, ENV, "potential")
    b = geodesic_speed(FS, ENV, "metric")
    assert np.array_equal(a.on_slopes, -b.on_slopes)


def test_unordered_pair_rejected():
    with pytest.raises(UnorderedPairError):
        geodesic_speed(RadialProfile.kink(), FS.shifted(-0.3))


def test_pushforward_trivial_laws():
    assert speed_pushforward(FS, FS).moment(2) == 0.0
    law = speed_pushforward(FS, FS.shifted(0.4))
    assert law.moment(1, absolute=False) == pytest.approx(0.4)
    assert law.cdf(0.4 + 1e-9) == pytest.approx(1.0)
    assert law.cdf(0.4 - 1e-9) == pytest.approx(0.0)


def test_pushforward_moments_vs_curvature_grid():
    law = speed_pushforward(FS, ENV)
    sp = geodesic_speed(FS, ENV)
    t = np.linspace(-40, 40, 400001)
    dens = np.exp(t) / (1 + np.exp(t)) ** 2
    g = np.abs(np.interp(1 / (1 + np.exp(-t)), sp.s, sp.on_slopes))
    for p in (1, 2, 3):
        assert law.moment(p) == pytest.approx(np.trapezoid(g**p * dens, t), rel=1e-3)


def test_constant_symbol_spectrum():
    spec = diagonal_toeplitz_spectrum(RadialSymbol.constant(1.0), FS, 10)
    assert all(abs(float(x)) <= 1e-25 for x in spec.log_values)
    spec = diagonal_toeplitz_spectrum(RadialSymbol.constant(3.0), FS, 6)
    assert np.allclose(np.exp(spec.by_basis_index()), 3.0, rtol=1e-14)


def test_indicator_spectrum_incomplete_beta_k8():
    k = 8
    vals = diagonal_toeplitz_values(RadialSymbol.indicator(RadialSet.outside_disk()), FS, k)
    with mp.workprec(256):
        for j in range(k + 1):
            w = lambda r: r ** (2 * j + 1) * (1 + r * r) ** (-k - 2)
            ref = mp.quad(w, [1, mp.inf]) / mp.quad(w, [0, 1, mp.inf])
            assert abs(mp.mpf(vals[j]) / ref - 1) <= 1e-12


def test_indicator_spectrum_symmetry():
    # |z|>=1 and |z|<=1 are exchanged by z -> 1/z, which maps z^j to z^(k-j)
    k = 12
    a = diagonal_toeplitz_values(RadialSymbol.indicator(RadialSet.outside_disk()), FS, k)
    assert all(abs(float(a[j] + a[k - j]) - 1) <= 1e-12 for j in range(k + 1))


def test_speed_diagonal_is_beta_average():
    # for FS the weight of z^j in the slope variable is Beta(j+1, k-j+1)
    k = 20
    vals = diagonal_speed_values(FS, ENV, k)
    speed = geodesic_speed(FS, ENV, "metric")
    s = np.linspace(0.0, 1.0, 2_000_001)
    g = speed.at_slope(s)
    for j in (0, 5, 10, 15, 20):
        ref = np.trapezoid(beta(j + 1, k - j + 1).pdf(s) * g, s)
        assert vals[j] == pytest.approx(ref, rel=1e-8, abs=1e-12)
