import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, strategies as st

from envelab.bigtoeplitz import (
    EscalationExhausted,
    HermitianToeplitzMatrix,
    PiecewiseSymbol,
    fit_decay_exponent,
    fit_decay_exponent_logs,
    fourier_coeffs,
    inertia,
    log_spectrum,
    precision_policy,
    smallest_eigenvalue,
)

TRIDIAG = PiecewiseSymbol.trig({0: 2.0, 1: 1.0, -1: 1.0})


def test_coefficients_of_constant():
    a = fourier_coeffs(PiecewiseSymbol.constant(1.0), 5)
    assert a[0] == 1
    assert all(abs(x) < mp.mpf(2) ** -200 for x in a[1:])


@pytest.mark.parametrize("alpha", [math.pi / 6, 1.0, math.pi / 2])
def test_coefficients_of_arc(alpha):
    a = fourier_coeffs(PiecewiseSymbol.arc_indicator(alpha), 12, prec=200)
    with mp.workprec(200):
        assert abs(a[0] - mp.mpf(alpha) / mp.pi) < mp.mpf(2) ** -180
        for j in range(1, 13):
            assert abs(a[j] - mp.sin(j * mp.mpf(alpha)) / (j * mp.pi)) < mp.mpf(2) ** -180


def test_coefficients_of_cosine_symbol():
    f = PiecewiseSymbol.from_function(lambda th: 2 + 2 * mp.cos(th))
    a = fourier_coeffs(f, 4)
    assert abs(a[0] - 2) < 1e-25 and abs(a[1] - 1) < 1e-25
    assert all(abs(x) < 1e-25 for x in a[2:])


def test_inertia_of_identity():
    T = HermitianToeplitzMatrix.from_symbol(PiecewiseSymbol.constant(1.0), 6)
    assert inertia(T, 0.5) == 0
    assert inertia(T, 1.5) == 7


def test_inertia_tridiagonal():
    # eigenvalues 2 + 2 cos(j pi / 5), j = 1..4; two of them lie below 2
    T = HermitianToeplitzMatrix.from_symbol(TRIDIAG, 3)
    assert inertia(T, 2) == 2


def test_tridiagonal_closed_form_spectrum():
    k = 10
    with mp.workprec(256):
        T = HermitianToeplitzMatrix.from_symbol(TRIDIAG, k, 256)
        spec = log_spectrum(T, tol_log=mp.mpf(10) ** -22, prec=256, refine_min=False)
        got = sorted(mp.exp((lo + hi) / 2) for lo, hi in zip(spec.log_lo, spec.log_hi))
        want = sorted(2 + 2 * mp.cos(j * mp.pi / (k + 2)) for j in range(1, k + 2))
        assert max(abs(g - w) for g, w in zip(got, want)) < mp.mpf(10) ** -20


def test_arc_lambda_min_positive_and_exponentially_bounded():
    k = 40
    T = HermitianToeplitzMatrix.from_symbol(PiecewiseSymbol.arc_indicator(lambda: mp.pi / 2), k, 512)
    lo, hi = smallest_eigenvalue(T)
    assert hi - lo <= 2.0**-32
    # positive, and above exp(-d k) for a d of the size of the decay exponent
    assert -2.0 * k < lo < 0


def test_identity_spectrum():
    T = HermitianToeplitzMatrix.from_symbol(PiecewiseSymbol.constant(1.0), 8)
    spec = log_spectrum(T, tol_log=1e-12)
    assert max(abs(float(x)) for x in spec.log_values) < 1e-11


def test_escalation_exhausted():
    T = HermitianToeplitzMatrix.from_symbol(PiecewiseSymbol.arc_indicator(math.pi / 6), 80, 64)
    with pytest.raises(EscalationExhausted):
        smallest_eigenvalue(T, prec=64)


def test_exact_exponential_fit():
    fit = fit_decay_exponent([(k, mp.exp(-mp.mpf("0.7") * k)) for k in range(20, 81, 10)])
    assert fit.c_hat == pytest.approx(0.7, abs=1e-12)


def test_polynomial_decay_fit_tends_to_zero():
    def c(ks):
        return fit_decay_exponent([(k, mp.mpf(k + 1) ** -2) for k in ks]).c_hat

    assert c(range(10, 50, 10)) > c(range(100, 500, 100)) > c(range(1000, 5000, 1000)) > 0


def test_precision_policy_floor():
    assert precision_policy(0.0, 10) == 256
    assert precision_policy(4.0, 80) >= int(1.5 * 4 * 80 / math.log(2))


def random_toeplitz(draw_coeffs, k):
    """Toeplitz matrix of ``3 + 2 Re sum c_j e^{i j theta}`` built from its exact coefficients."""
    a = [3.0] + [complex(re, im) for re, im in draw_coeffs]
    a = (a + [0.0] * (k + 1))[: k + 1]
    return HermitianToeplitzMatrix.from_coeffs([mp.mpc(x) for x in a], 128)


coeff_lists = st.lists(st.tuples(st.floats(-0.5, 0.5), st.floats(-0.5, 0.5)), min_size=1, max_size=3)


@given(coeff_lists, st.integers(3, 9))
def test_inertia_monotone_and_matches_numpy(coeffs, k):
    T = random_toeplitz(coeffs, k)
    ev = np.linalg.eigvalsh(T.to_numpy())
    grid = np.linspace(ev.min() - 0.5, ev.max() + 0.5, 15)
    counts = [inertia(T, x) for x in grid]
    assert counts == sorted(counts)
    for x, c in zip(grid, counts):
        if np.min(np.abs(ev - x)) > 1e-8:
            assert c == int(np.sum(ev < x))


@given(coeff_lists, st.integers(3, 9))
def test_interlacing_and_trace(coeffs, k):
    A = random_toeplitz(coeffs, k).to_numpy()
    B = random_toeplitz(coeffs, k + 1).to_numpy()
    a, b = np.linalg.eigvalsh(A), np.linalg.eigvalsh(B)
    assert np.all(b[:-1] <= a + 1e-10) and np.all(a <= b[1:] + 1e-10)
    assert np.trace(A).real == pytest.approx((k + 1) * 3.0, abs=1e-12)
    assert a.sum() == pytest.approx((k + 1) * 3.0, abs=1e-9)


@given(coeff_lists, st.integers(3, 8))
def test_smallest_eigenvalue_matches_numpy(coeffs, k):
    T = random_toeplitz(coeffs, k)
    ev = np.linalg.eigvalsh(T.to_numpy())
    if ev.min() <= 1e-3:
        return
    lo, hi = smallest_eigenvalue(T)
    assert float(lo) <= math.log(ev.min()) + 1e-12 and math.log(ev.min()) <= float(hi) + 1e-12


def test_fit_from_logs_equals_fit_from_values():
    ks = [10, 20, 30, 40]
    ys = [1.0, 2.2, 3.1, 4.3]
    a = fit_decay_exponent_logs(ks, ys)
    b = fit_decay_exponent([(k, mp.exp(-y)) for k, y in zip(ks, ys)])
    assert a.c_hat == pytest.approx(b.c_hat, abs=1e-14)
