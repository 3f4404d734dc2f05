import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from envelab.energy import (
    NotPlurisubharmonicError,
    d1_distance,
    dp_distance_radial,
    energy_diff,
    energy_diff_dual,
)
from envelab.geometry import RadialSet, WeightPotential
from envelab.radial import RadialProfile, UnorderedPairError, radial_envelope, speed_pushforward

FS = RadialProfile.fubini_study()
ENV = radial_envelope(FS, RadialSet.outside_disk())
CIRCLE_ENV = RadialProfile(np.array([0.0]), np.array([math.log(2)]), 0.0, 1.0)


def test_energy_of_equal_potentials():
    assert energy_diff(FS, FS) == 0.0


@given(st.floats(-2, 2))
def test_energy_of_translate(c):
    assert energy_diff(FS.shifted(c), FS) == pytest.approx(c, abs=1e-12)


def test_circle_envelope_atoms_vs_dual():
    a = energy_diff(CIRCLE_ENV, FS)
    b = energy_diff_dual(CIRCLE_ENV, FS)
    assert a == pytest.approx(b, abs=1e-6)


def test_outside_disk_envelope_energy():
    # int_0^{1/2} (s log s + (1-s) log(1-s) + log 2) ds in closed form
    exact = 0.5 * math.log(2) - 0.25
    assert energy_diff(ENV, FS) == pytest.approx(exact, abs=1e-6)
    assert energy_diff_dual(ENV, FS) == pytest.approx(exact, abs=1e-6)


def test_energy_is_monotone():
    assert energy_diff(ENV, FS) > 0
    assert energy_diff(FS.shifted(-0.1), FS) < 0


def test_grid_energy_matches_radial():
    u, v = WeightPotential.from_radial(ENV), WeightPotential.zero()
    assert energy_diff(u, v, n_r=400, n_theta=16) == pytest.approx(energy_diff(ENV, FS), abs=1e-3)


def test_grid_energy_of_constant_shift():
    f = lambda z: np.full(np.shape(z), 0.2)
    u = WeightPotential.from_function(f, f, 64, 16)
    assert energy_diff(u, WeightPotential.zero(), n_r=100, n_theta=16) == pytest.approx(0.2, abs=1e-6)


def test_unbounded_profile_rejected():
    with pytest.raises(NotPlurisubharmonicError):
        energy_diff(RadialProfile(np.array([0.0]), np.array([0.0]), 0.2, 1.0), FS)


def test_d1_trivial_cases():
    assert d1_distance(FS, FS) == 0.0
    assert d1_distance(FS, FS.shifted(0.3)) == pytest.approx(0.3, abs=1e-12)


def test_d1_is_first_speed_moment():
    assert d1_distance(FS, ENV) == pytest.approx(speed_pushforward(FS, ENV).moment(1), abs=1e-3)


def test_d1_rejects_unordered_pair():
    with pytest.raises(UnorderedPairError):
        d1_distance(RadialProfile.kink(), FS.shifted(-0.3))


@pytest.mark.parametrize("p", [1, 2, 3.5])
def test_dp_trivial_cases(p):
    assert dp_distance_radial(FS, FS, p) == 0.0
    assert dp_distance_radial(FS, FS.shifted(-0.25), p) == pytest.approx(0.25, abs=1e-12)


def test_dp_one_equals_d1():
    assert dp_distance_radial(FS, ENV, 1) == pytest.approx(d1_distance(FS, ENV), abs=1e-6)


def test_dp_nondecreasing_in_p():
    ds = [dp_distance_radial(FS, ENV, p) for p in (1, 2, 3, 6)]
    assert all(a <= b for a, b in zip(ds, ds[1:]))
