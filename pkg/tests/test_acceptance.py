"""Acceptance run: every criterion at its stated tolerance.

Each test prints, and records for the terminal summary, one line of the
form ``PASS criterion N: ...`` or ``FAIL criterion N: ...``.  Nothing is
marked as an expected failure; a criterion that does not hold fails.
"""

import math

import pytest

from envelab import experiments as E

pytestmark = pytest.mark.slow


def report(acceptance_report, number, title, checks):
    ok = all(c.passed for c in checks)
    parts = []
    for c in checks:
        ref = "" if c.reference is None else f" ref {c.reference:.6g}"
        tol = "" if c.tolerance is None else f" tol {c.tolerance:g}"
        parts.append(f"{c.name}: {c.value + 0.0:.6g}{ref}{tol} [{'ok' if c.passed else 'miss'}]")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} | " + "; ".join(parts)
    print(line)
    acceptance_report.append(line)
    return ok


def failures(checks):
    return "\n".join(f"{c.name}: value {c.value!r}, reference {c.reference!r}, tolerance {c.tolerance!r}"
                     for c in checks if not c.passed)


@pytest.fixture(scope="module")
def outside_disk():
    """One radial run at k = 200 with the moment probe at k = 50, 100, 200."""
    return E.radial_distribution("outside-disk", k=200, probe_ks=(50, 100, 200))


def by_prefix(res, *prefixes):
    return [c for c in res.checks if c.name.startswith(prefixes)]


def test_criterion_1_arc_decay(acceptance_report):
    res = E.arc_decay([math.pi / 6, math.pi / 3, math.pi / 2], range(20, 81, 10),
                      precision_bits=512, degree=64, tol=0.10)
    assert report(acceptance_report, 1, "arc decay vs envelope exponent", res.checks), failures(res.checks)


def test_criterion_2_spectral_distribution(acceptance_report, outside_disk):
    checks = by_prefix(outside_disk, "moment p=", "Kolmogorov")
    assert len(checks) == 4
    assert report(acceptance_report, 2, "log spectral distribution at k=200", checks), failures(checks)


def test_criterion_3_small_eigenvalue_fraction(acceptance_report, outside_disk):
    checks = by_prefix(outside_disk, "fraction below")
    assert len(checks) == 1
    assert report(acceptance_report, 3, "exponentially small eigenvalue fraction", checks), failures(checks)


def test_criterion_4_transfer_identity(acceptance_report):
    res = E.transfer_identity(n_symbols=10, k=12, seed=0, tol=1e-10)
    assert report(acceptance_report, 4, "transfer identity", res.checks), failures(res.checks)


def test_criterion_5_ball_growth(acceptance_report):
    res = E.ball_growth((25, 50, 100), tol=0.05)
    assert report(acceptance_report, 5, "ball growth vs energy difference", res.checks), failures(res.checks)


def test_criterion_6_schatten(acceptance_report):
    res = E.schatten_convergence((40, 80, 160))
    assert report(acceptance_report, 6, "Schatten 1-norm convergence", res.checks), failures(res.checks)


def test_criterion_7_subexponential(acceptance_report):
    res = E.radial_distribution("log-tent", k=60, fit_ks=range(40, 121, 10), max_exponent=0.01,
                                distribution=False)
    assert report(acceptance_report, 7, "subexponential regime", res.checks), failures(res.checks)


def test_criterion_8_property_suite(acceptance_report):
    res = E.property_suite(seed=0)
    assert len(res.checks) >= 9
    assert report(acceptance_report, 8, "property suite", res.checks), failures(res.checks)


def test_criterion_9_moment_probe(acceptance_report, outside_disk):
    checks = by_prefix(outside_disk, "exactly one of")
    assert len(checks) == 1
    assert outside_disk.info["moment_probe_match"] in ("d_p", "d_p^p")
    ok = report(acceptance_report, 9, f"moment probe (matches {outside_disk.info['moment_probe_match']})", checks)
    assert ok, failures(checks)
