"""Reproducible experiments shared by the command line and the acceptance tests.

Every experiment returns an :class:`ExperimentResult`: named checks that
carry their tolerance, CSV-ready tables and x/y plot data.  Work that fans
out over independent inputs goes through a ``pool_map`` argument with the
semantics of the builtin ``map`` (ordered results), so a process pool
produces the same output as a serial run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .bigtoeplitz import (
    HermitianToeplitzMatrix,
    PiecewiseSymbol,
    fit_decay_exponent_logs,
    inertia,
    log_spectrum,
    precision_policy,
    smallest_eigenvalue,
)
from .extremal import c_exponent, chebyshev_value
from .geometry import ArcSet, ChartPoint, RadialSet, WeightPotential
from .measures import DiscreteMeasure, kolmogorov_distance
from .norms import MeasureSpec, gram, relative_spectrum, toeplitz_vs_transfer, volume_ratio
from .radial import (
    RadialProfile,
    RadialSymbol,
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
from .energy import dp_distance_radial, energy_diff

PoolMap = Callable[[Callable, Sequence], Sequence]


@dataclass(frozen=True)
class Check:
    """One numeric assertion.

    ``mode``: ``"rel"`` (``|value-reference| <= tol*|reference|``), ``"abs"``
    (``|value-reference| <= tol``), ``"le"`` (``value <= tol``) or ``"true"``
    (``value`` is a boolean outcome, reference and tolerance informative).
    """

    name: str
    value: float
    reference: Optional[float]
    tolerance: Optional[float]
    mode: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "name": self.name, "value": self.value, "reference": self.reference,
            "tolerance": self.tolerance, "mode": self.mode, "passed": self.passed,
            "detail": self.detail,
        }


def check_rel(name, value, reference, tol, detail="") -> Check:
    value, reference = float(value), float(reference)
    if reference == 0.0:
        ok = abs(value) <= tol
        return Check(name, value, reference, tol, "abs", ok, detail or "zero reference: absolute test")
    return Check(name, value, reference, tol, "rel", abs(value - reference) <= tol * abs(reference), detail)


def check_abs(name, value, reference, tol, detail="") -> Check:
    value, reference = float(value), float(reference)
    return Check(name, value, reference, tol, "abs", abs(value - reference) <= tol, detail)


def check_le(name, value, bound, detail="") -> Check:
    return Check(name, float(value), None, float(bound), "le", float(value) <= bound, detail)


def check_true(name, ok, detail="", value=None) -> Check:
    return Check(name, float(bool(ok)) if value is None else float(value), None, None, "true", bool(ok), detail)


@dataclass
class ExperimentResult:
    name: str
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (columns, rows)
    plots: dict = field(default_factory=dict)  # name -> (x label, y label, rows)
    info: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# ---------------------------------------------------------------------------
# shared radial data

OUTSIDE_DISK = RadialSet.outside_disk()


def fs_profile() -> RadialProfile:
    return RadialProfile.fubini_study()


def radial_symbol(kind: str, value: float = 1.0) -> RadialSymbol:
    if kind == "outside-disk":
        return RadialSymbol.indicator(OUTSIDE_DISK)
    if kind == "constant":
        return RadialSymbol.constant(value)
    if kind == "log-tent":
        return RadialSymbol.log_tent()
    raise ValueError(f"unknown radial symbol {kind!r}")


def limit_envelope(kind: str) -> RadialProfile:
    """Envelope of Fubini-Study over the essential support of the symbol."""
    fs = fs_profile()
    if kind == "outside-disk":
        return radial_envelope(fs, OUTSIDE_DISK)
    return fs


def eta_neg_logs(kind: str, k: int, value: float = 1.0) -> np.ndarray:
    """``-log(lambda)`` of the radial Toeplitz operator, ordered by basis index."""
    spec = diagonal_toeplitz_spectrum(radial_symbol(kind, value), fs_profile(), k)
    return -spec.by_basis_index()


def _eta_task(args):
    kind, k, value = args
    return eta_neg_logs(kind, k, value)


# ---------------------------------------------------------------------------
# arc decay


def _arc_lambda_min(args):
    half_angle, k, bits = args
    f = PiecewiseSymbol.arc_indicator(half_angle)
    prec = max(bits, precision_policy(4.5, k))
    T = HermitianToeplitzMatrix.from_symbol(f, k, prec)
    lo, hi = smallest_eigenvalue(T, prec=prec)
    return -float((lo + hi) / 2), float(hi - lo)


def _arc_envelope(args):
    half_angle, degree = args
    r = c_exponent(ArcSet.centered(half_angle), k=degree, full=True)
    return r.value, r.upper


def arc_decay(half_angles: Sequence[float], ks: Sequence[int], precision_bits: int = 512,
              degree: int = 64, tol: float = 0.10, pool_map: PoolMap = map) -> ExperimentResult:
    res = ExperimentResult("arc-decay")
    ks = [int(k) for k in ks]
    jobs = [(a, k, precision_bits) for a in half_angles for k in ks]
    lam = list(pool_map(_arc_lambda_min, jobs))
    envs = list(pool_map(_arc_envelope, [(a, degree) for a in half_angles]))
    eig_rows, fit_rows, c_hats = [], [], []
    for ia, a in enumerate(half_angles):
        ys = [lam[ia * len(ks) + i][0] for i in range(len(ks))]
        for i, k in enumerate(ks):
            eig_rows.append([a, k, ys[i], lam[ia * len(ks) + i][1]])
        fit = fit_decay_exponent_logs(ks, ys)
        c_env, c_up = envs[ia]
        gap = abs(fit.c_hat - c_env) / c_env
        fit_rows.append([a, fit.c_hat, fit.stderr, fit.intercept, c_env, c_up, gap])
        c_hats.append(fit.c_hat)
        res.checks.append(check_rel(f"c_hat vs c_envelope (half-angle {a:.6f})", fit.c_hat, c_env, tol))
        res.plots[f"decay_alpha_{ia}"] = ("k", "-log(lambda_min)/k", [[k, y / k] for k, y in zip(ks, ys)])
    if len(half_angles) > 1:
        order = np.argsort(half_angles)
        dec = all(c_hats[order[i]] > c_hats[order[i + 1]] for i in range(len(order) - 1))
        res.checks.append(check_true("c_hat strictly decreasing in half-angle", dec))
    res.tables["eigenvalues"] = (["half_angle", "k", "neg_log_lambda_min", "log_width"], eig_rows)
    res.tables["fits"] = (["half_angle", "c_hat", "stderr", "intercept", "c_envelope", "c_envelope_upper", "rel_gap"], fit_rows)
    return res


# ---------------------------------------------------------------------------
# radial distribution, small-eigenvalue fraction, moment probe


def eta_measure(neg_logs: np.ndarray, k: int) -> DiscreteMeasure:
    return DiscreteMeasure.uniform(np.asarray(neg_logs) / k)


def extrapolate_moments(ks: Sequence[int], moments: np.ndarray) -> np.ndarray:
    """Fit ``m + a log(k)/k + b/k`` through one moment per ``k`` (exact for three k)."""
    ks = np.asarray(ks, dtype=float)
    A = np.column_stack([np.ones_like(ks), np.log(ks) / ks, 1.0 / ks])
    sol, *_ = np.linalg.lstsq(A, np.asarray(moments, dtype=float), rcond=None)
    return sol[0]


def radial_distribution(symbol: str = "outside-disk", k: int = 200, value: float = 1.0,
                        moment_tol: float = 0.02, ks_tol: float = 0.05, eps: float = 0.02,
                        fraction_tol: float = 0.03, fit_ks: Sequence[int] = (),
                        max_exponent: float = 0.01, probe_ks: Sequence[int] = (),
                        probe_tol: float = 0.03, distribution: bool = True, pool_map: PoolMap = map,
                        cache: Optional[dict] = None) -> ExperimentResult:
    """Spectral measure of a radial Toeplitz operator against its limit law.

    ``distribution`` toggles the moment, Kolmogorov and small-eigenvalue
    checks; ``fit_ks`` adds a decay fit of the smallest eigenvalue and
    ``probe_ks`` a moment extrapolation compared with ``d_p`` and ``d_p^p``.
    """
    res = ExperimentResult("radial-distribution")
    cache = {} if cache is None else cache
    need = sorted({int(k), *map(int, probe_ks)} - set(cache))
    for kk, nl in zip(need, pool_map(_eta_task, [(symbol, kk, value) for kk in need])):
        cache[kk] = nl
    nl = cache[int(k)]
    eta = eta_measure(nl, k)
    env = limit_envelope(symbol)
    limit = speed_pushforward(fs_profile(), env)
    res.tables["spectrum"] = (["k", "basis_index", "neg_log_lambda"], [[k, j, x] for j, x in enumerate(nl)])
    if distribution:
        rows = []
        for p in (1, 2, 3):
            m_eta, m_lim = eta.moment(p), limit.moment(p)
            rows.append([k, p, m_eta, m_lim])
            res.checks.append(check_rel(f"moment p={p} at k={k}", m_eta, m_lim, moment_tol))
        res.tables["moments"] = (["k", "p", "eta_moment", "limit_moment"], rows)
        ks_dist = kolmogorov_distance(eta, limit)
        res.checks.append(check_le(f"Kolmogorov distance at k={k}", ks_dist, ks_tol))
        frac = float(np.mean(nl > eps * k))
        # small eigenvalues come from the part of the sphere where the symbol vanishes
        target = 1.0 - OUTSIDE_DISK.curvature_mass() if symbol == "outside-disk" else 0.0
        res.checks.append(check_abs(f"fraction below exp(-{eps} k) at k={k}", frac, target, fraction_tol))
        xs = np.unique(np.concatenate([eta.jump_points(), limit.jump_points()]))
        res.plots["cdf"] = ("x", "eta_cdf limit_cdf", [[x, eta.cdf(x), limit.cdf(x)] for x in xs])
        res.info["kolmogorov"] = ks_dist
        res.info["fraction"] = frac

    if fit_ks:
        ys = []
        for kk in fit_ks:
            ys.append(lambda_min_radial(symbol, int(kk), value))
        fit = fit_decay_exponent_logs(list(map(int, fit_ks)), ys)
        res.tables["decay_fit"] = (["k", "neg_log_lambda_min"], [[kk, y] for kk, y in zip(fit_ks, ys)])
        res.checks.append(check_le(f"fitted exponent over k in {list(fit_ks)}", fit.c_hat, max_exponent,
                                   f"stderr {fit.stderr:.2e}"))
        res.info["fitted_exponent"] = fit.c_hat

    if probe_ks:
        res.checks.extend(moment_probe(symbol, probe_ks, cache, probe_tol, res))
    return res


def lambda_min_radial(symbol: str, k: int, value: float = 1.0, window: int = 3) -> float:
    """``-log(lambda_min)`` for a symmetric radial symbol (minimum at ``j = k/2``).

    Only a window around the center is computed; the minimum must be
    interior to it, which the symmetry ``j <-> k - j`` of the problem and
    unimodality of the diagonal make automatic for the symbols used here.
    """
    idx = list(range(max(0, k // 2 - window), min(k, k // 2 + window) + 1))
    vals = [float(x) for x in diagonal_toeplitz_values(radial_symbol(symbol, value), fs_profile(), k, indices=idx)]
    i = int(np.argmin(vals))
    if 0 < idx[i] < k and not (0 < i < len(vals) - 1):
        raise ArithmeticError("diagonal minimum is not interior to the window")
    return -math.log(vals[i])


def moment_probe(symbol: str, ks: Sequence[int], cache: dict, tol: float, res: ExperimentResult) -> list:
    ks = [int(k) for k in ks]
    fs, env = fs_profile(), limit_envelope(symbol)
    rows, checks = [], []
    match_d, match_dpp = [], []
    for p in (1, 2, 3):
        ms = [eta_measure(cache[k], k).moment(p) for k in ks]
        m = float(extrapolate_moments(ks, ms))
        d = dp_distance_radial(fs, env, p)
        rows.append([p, *ms, m, d, d**p])
        match_d.append(abs(m - d) <= tol * abs(d))
        match_dpp.append(abs(m - d**p) <= tol * abs(d**p))
    res.tables["moment_probe"] = (["p", *[f"moment_k{k}" for k in ks], "extrapolated", "d_p", "d_p_pow_p"], rows)
    a, b = all(match_d), all(match_dpp)
    name = "d_p^p" if (b and not a) else ("d_p" if (a and not b) else "none" if not (a or b) else "both")
    res.info["moment_probe_match"] = name
    checks.append(check_true(f"exactly one of d_p, d_p^p matches all moments (matched: {name})", a != b,
                             f"d_p matches {match_d}; d_p^p matches {match_dpp}"))
    return checks


# ---------------------------------------------------------------------------
# transfer identity


def random_smooth_symbol(rng: np.random.Generator):
    """Positive symbol ``1 + sum`` of a few small random modes in angle and radius."""
    modes = rng.integers(1, 4, size=3)
    amps = rng.uniform(-0.15, 0.15, size=3) + 1j * rng.uniform(-0.15, 0.15, size=3)
    radial = rng.uniform(-0.2, 0.2)

    def f(z):
        z = np.asarray(z, dtype=complex)
        th = np.angle(z)
        x = np.abs(z) ** 2 / (1.0 + np.abs(z) ** 2)
        out = 1.0 + radial * (2 * x - 1)
        for m, a in zip(modes, amps):
            out = out + 2 * np.real(a * np.exp(1j * m * th))
        return out

    return f


def transfer_identity(n_symbols: int = 10, k: int = 12, seed: int = 0, tol: float = 1e-10) -> ExperimentResult:
    res = ExperimentResult("transfer-identity")
    rng = np.random.default_rng(seed)
    h = WeightPotential.zero()
    rows = []
    for i in range(n_symbols):
        rep = toeplitz_vs_transfer(random_smooth_symbol(rng), h, k)
        rows.append([i, k, rep.max_discrepancy, float(rep.toeplitz_neg_log.min()), float(rep.toeplitz_neg_log.max())])
        res.checks.append(check_le(f"symbol {i}: spectrum of -log T_k(f) vs transfer spectrum", rep.max_discrepancy, tol))
    res.tables["transfer"] = (["symbol", "k", "max_discrepancy", "min_neg_log", "max_neg_log"], rows)
    return res


# ---------------------------------------------------------------------------
# ball growth


def ball_growth_value(k: int) -> float:
    """``log vol(B_A) - log vol(B)`` per ``k (k+1)`` for unit balls of the Gram norms.

    The ball volume ratio is ``log det G - log det G_A``, which is twice
    ``volume_ratio(G_A, G)``.
    """
    h = WeightPotential.zero()
    G = gram(h, MeasureSpec.area(), k)
    GA = gram(h, MeasureSpec.restricted(OUTSIDE_DISK), k)
    return 2.0 * volume_ratio(GA, G) / (k * (k + 1))


def ball_growth(ks: Sequence[int] = (25, 50, 100), tol: float = 0.05) -> ExperimentResult:
    res = ExperimentResult("ball-growth")
    ks = [int(k) for k in ks]
    target = energy_diff(limit_envelope("outside-disk"), fs_profile())
    vals = [ball_growth_value(k) for k in ks]
    res.tables["ball_growth"] = (["k", "volume_growth", "energy_limit"], [[k, v, target] for k, v in zip(ks, vals)])
    res.checks.append(check_rel(f"volume growth at k={ks[-1]} vs energy difference", vals[-1], target, tol))
    dist = [abs(v - target) for v in vals]
    mono = all(a > b for a, b in zip(dist, dist[1:]))
    res.checks.append(check_true(f"distance to the limit decreasing over k={ks}", mono, f"distances {dist}"))
    res.plots["ball_growth"] = ("k", "volume_growth", [[k, v] for k, v in zip(ks, vals)])
    return res


# ---------------------------------------------------------------------------
# Schatten convergence


def _schatten_task(k):
    nl = eta_neg_logs("outside-disk", k)
    tv = diagonal_speed_values(fs_profile(), limit_envelope("outside-disk"), k, convention="metric")
    return float(np.mean(np.abs(-nl / k - tv)))


def schatten_convergence(ks: Sequence[int] = (40, 80, 160), pool_map: PoolMap = map) -> ExperimentResult:
    """``|(1/k) log T_k(f) - T_k(speed)|_1``; both operators are diagonal in the monomials."""
    res = ExperimentResult("schatten-convergence")
    ks = [int(k) for k in ks]
    vals = list(pool_map(_schatten_task, ks))
    res.tables["schatten"] = (["k", "schatten_1"], [[k, v] for k, v in zip(ks, vals)])
    res.plots["schatten"] = ("k", "schatten_1", [[k, v] for k, v in zip(ks, vals)])
    res.checks.append(check_true("strictly decreasing", all(a > b for a, b in zip(vals, vals[1:])), str(vals)))
    res.checks.append(check_le(f"k={ks[-1]} value over k={ks[0]} value", vals[-1] / vals[0], 0.5))
    return res


# ---------------------------------------------------------------------------
# property suite


def property_suite(seed: int = 0) -> ExperimentResult:
    res = ExperimentResult("property-suite")
    rng = np.random.default_rng(seed)
    fs = fs_profile()
    S = RadialSet.from_intervals([(-1.0, 0.5), (2.0, 3.0)])
    S_big = RadialSet.from_intervals([(-1.5, 0.5), (1.0, 3.5)])
    env = radial_envelope(fs, S)
    t = np.linspace(-8, 8, 801)
    res.checks.append(check_le("envelope idempotence", float(np.max(np.abs(radial_envelope(env, S)(t) - env(t)))), 1e-10))
    res.checks.append(check_le("envelope monotone in the set", float(np.max(radial_envelope(fs, S_big)(t) - env(t))), 1e-12))

    v1 = radial_envelope(fs, OUTSIDE_DISK)
    g0, g1 = geodesic(fs, v1, 0.0), geodesic(fs, v1, 1.0)
    bd = max(float(np.max(np.abs(g0(t) - fs(t)))), float(np.max(np.abs(g1(t) - v1(t)))))
    res.checks.append(check_le("geodesic endpoints", bd, 1e-9))
    taus = np.linspace(0, 1, 11)
    vals = np.array([geodesic(fs, v1, tau)(t) for tau in taus])
    second = vals[:-2] - 2 * vals[1:-1] + vals[2:]
    res.checks.append(check_le("geodesic convex in time", float(-second.min()), 1e-9))

    sp = geodesic_speed(fs, v1, convention="metric")
    res.checks.append(check_le("speed sign (metric convention, nonpositive)", float(sp.on_slopes.max()), 1e-8))
    contact = sp.s > 0.5 + 1e-6
    res.checks.append(check_le("speed vanishes on the contact set", float(np.max(np.abs(sp.on_slopes[contact]))), 1e-8))

    dual_err = float(np.max(np.abs(inverse_legendre(legendre(fs))(t) - fs(t))))
    res.checks.append(check_le("biconjugation", dual_err, 1e-10))

    worst_tri, worst_mono, worst_sym = 0.0, 0.0, 0.0
    for _ in range(20):
        Gs = []
        for _ in range(3):
            A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            Gs.append(A @ A.conj().T + 0.5 * np.eye(4))
        for p in (1, 2, 3, math.inf):
            d01 = relative_spectrum(Gs[0], Gs[1]).d_p(p)
            d12 = relative_spectrum(Gs[1], Gs[2]).d_p(p)
            d02 = relative_spectrum(Gs[0], Gs[2]).d_p(p)
            worst_tri = max(worst_tri, d02 - d01 - d12)
            worst_sym = max(worst_sym, abs(d01 - relative_spectrum(Gs[1], Gs[0]).d_p(p)))
        ds = [relative_spectrum(Gs[0], Gs[1]).d_p(p) for p in (1, 2, 3, math.inf)]
        worst_mono = max(worst_mono, max(a - b for a, b in zip(ds, ds[1:])))
    res.checks.append(check_le("d_p triangle inequality (random triples)", worst_tri, 1e-12))
    res.checks.append(check_le("d_p symmetric", worst_sym, 1e-12))
    res.checks.append(check_le("d_p nondecreasing in p", worst_mono, 1e-12))

    f = PiecewiseSymbol.trig({0: 2.0, 1: 0.6 - 0.3j, -1: 0.6 + 0.3j, 2: 0.2j, -2: -0.2j})
    T = HermitianToeplitzMatrix.from_symbol(f, 8, 128)
    grid = np.linspace(-1, 4, 26)
    counts = [inertia(T, x) for x in grid]
    res.checks.append(check_true("inertia nondecreasing", all(a <= b for a, b in zip(counts, counts[1:])),
                                 f"counts {counts}"))
    ev8 = np.sort(np.exp([float(x) for x in log_spectrum(T, 1e-12).log_values]))
    ev9 = np.sort(np.exp([float(x) for x in log_spectrum(HermitianToeplitzMatrix.from_symbol(f, 9, 128), 1e-12).log_values]))
    inter = all(ev9[i] <= ev8[i] + 1e-9 and ev8[i] <= ev9[i + 1] + 1e-9 for i in range(ev8.size))
    res.checks.append(check_true("interlacing T_8 within T_9", inter))
    res.checks.append(check_le("trace identity", abs(ev8.sum() - 9 * 2.0), 1e-9))

    z = WeightPotential.zero()
    p = ChartPoint.from_affine(-1.0)
    closed = chebyshev_value(p, ArcSet.centered(math.pi / 2), z, 24)
    shrunk = chebyshev_value(p, ArcSet.centered(math.pi / 2 * (1 - 1e-9)), z, 24)
    res.checks.append(check_abs("closure insensitivity of arc envelopes", shrunk, closed, 1e-6))
    return res
