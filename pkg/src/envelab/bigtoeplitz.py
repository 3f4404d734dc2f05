"""Extended-precision spectra of Hermitian Toeplitz matrices.

Scalars are ``mpmath`` multiprecision floats, used as the ``BigReal`` type.
Eigenvalues are located by bisection in ``log(lambda)``.  Each step counts
the negative pivots of an LDL^H factorization of ``T - lambda I``, which by
Sylvester's law of inertia is the number of eigenvalues below ``lambda``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from mpmath import mp
from scipy import stats

from .measures import DiscreteMeasure

BigReal = mpmath.mpf

DEFAULT_PREC = 256


class PrecisionError(ArithmeticError):
    """Pivot dynamic range exceeds the mantissa budget."""


class EscalationExhausted(ArithmeticError):
    """Precision was escalated and the computation still failed."""


class ZeroPivotError(ArithmeticError):
    """Shift coincides with an eigenvalue even after jittering."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature did not reach the requested accuracy."""

    def __init__(self, message: str, worst_index: int | None = None, error: float | None = None):
        super().__init__(message)
        self.worst_index = worst_index
        self.error = error


# ---------------------------------------------------------------------------
# symbols on the circle


@dataclass(frozen=True)
class Segment:
    """Piece of a symbol on ``[lo, hi]`` (radians).

    Either a constant ``value`` or a callable ``func`` accepting mpf angles.
    """

    lo: float
    hi: float
    value: Optional[float] = None
    func: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if (self.value is None) == (self.func is None):
            raise ValueError("segment needs exactly one of value / func")
        if not self.hi > self.lo:
            raise ValueError("segment must have positive length")


@dataclass(frozen=True)
class PiecewiseSymbol:
    """Real bounded symbol on the unit circle with explicit breakpoints.

    Angles outside the segments carry the value 0.  Exact expressions for
    the segment ends may be kept in ``exact_ends`` as ``(lo, hi)`` mpmath
    callables of no argument, so that coefficients can be recomputed at any
    precision without inheriting double-precision breakpoints.
    """

    segments: tuple[Segment, ...]
    exact_ends: Optional[tuple] = field(default=None, compare=False)
    label: str = ""

    @classmethod
    def constant(cls, c: float) -> "PiecewiseSymbol":
        return cls(
            (Segment(0.0, 2 * math.pi, value=c),),
            ((lambda: mp.zero, lambda: 2 * mp.pi),),
            label=f"constant {c}",
        )

    @classmethod
    def arc_indicator(cls, half_angle, center: float = 0.0) -> "PiecewiseSymbol":
        """Indicator of the arc ``{|theta - center| <= half_angle}``.

        ``half_angle`` may be a callable returning an mpf for exact
        evaluation at any precision (e.g. ``lambda: mp.pi / 2``).
        """
        exact = half_angle if callable(half_angle) else (lambda: mp.mpf(half_angle))
        a = float(exact())
        return cls(
            (Segment(center - a, center + a, value=1.0),),
            ((lambda: center - exact(), lambda: center + exact()),),
            label=f"arc half-angle {a!r}",
        )

    @classmethod
    def from_function(cls, func: Callable, breakpoints: Sequence[float] = ()) -> "PiecewiseSymbol":
        """Smooth pieces of ``func`` between the given breakpoints."""
        if not breakpoints:
            return cls(
                (Segment(0.0, 2 * math.pi, func=func),),
                ((lambda: mp.zero, lambda: 2 * mp.pi),),
                label="function",
            )
        pts = sorted({0.0, 2 * math.pi, *[b % (2 * math.pi) for b in breakpoints]})
        segs = tuple(Segment(a, b, func=func) for a, b in zip(pts[:-1], pts[1:]) if b > a)
        return cls(segs, label="function")

    @classmethod
    def trig(cls, coeffs: dict[int, complex]) -> "PiecewiseSymbol":
        """Real trigonometric polynomial ``sum_j c_j e^{i j theta}``."""
        for j, c in coeffs.items():
            if abs(complex(coeffs.get(-j, 0)) - complex(c).conjugate()) > 1e-15:
                raise ValueError("coefficients must satisfy c_{-j} = conj(c_j)")

        def func(th):
            return mpmath.re(mpmath.fsum(mpmath.mpc(c) * mpmath.expj(j * th) for j, c in coeffs.items()))

        sym = cls.from_function(func)
        return PiecewiseSymbol(sym.segments, sym.exact_ends, label="trig")

    def __call__(self, theta: float) -> float:
        th = float(theta) % (2 * math.pi)
        total = 0.0
        for seg in self.segments:
            for shift in (0.0, 2 * math.pi, -2 * math.pi):
                if seg.lo <= th + shift <= seg.hi:
                    total += seg.value if seg.value is not None else float(seg.func(mp.mpf(th + shift)))
                    break
        return total

    def sampled_range(self, n: int = 4096) -> tuple[float, float]:
        th = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
        vals = np.array([self(t) for t in th])
        return float(vals.min()), float(vals.max())


def fourier_coeffs(f: PiecewiseSymbol, k: int, prec: int = DEFAULT_PREC) -> list:
    """``a_j = (1/2pi) int f(theta) e^{-i j theta} dtheta`` for ``j = 0..k``.

    Constant pieces are integrated in closed form; other pieces use
    adaptive tanh-sinh quadrature on subintervals short enough to resolve
    the oscillation of ``e^{-i j theta}``.  Values are mpc at ``prec`` bits.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    with mp.workprec(prec):
        out = []
        ends = f.exact_ends or tuple((None, None) for _ in f.segments)
        for j in range(k + 1):
            acc = mp.mpc(0)
            for seg, (elo, ehi) in zip(f.segments, ends):
                lo = elo() if elo else mp.mpf(seg.lo)
                hi = ehi() if ehi else mp.mpf(seg.hi)
                if seg.value is not None:
                    c = mp.mpf(seg.value)
                    if j == 0:
                        acc += c * (hi - lo)
                    else:
                        acc += c * (mp.expj(-j * hi) - mp.expj(-j * lo)) / mp.mpc(0, -j)
                else:
                    pieces = max(1, int(math.ceil(j * float(hi - lo) / math.pi)))
                    nodes = mp.linspace(lo, hi, pieces + 1)
                    val, err = mp.quad(lambda th: seg.func(th) * mp.expj(-j * th), nodes, error=True)
                    if err > mp.mpf(2) ** (-prec // 2) * max(1, abs(val)):
                        raise QuadratureError(f"Fourier coefficient {j} did not converge", j, float(err))
                    acc += val
            out.append(acc / (2 * mp.pi))
        return out


# ---------------------------------------------------------------------------
# matrices and inertia


@dataclass(frozen=True)
class HermitianToeplitzMatrix:
    """``T_k[a]`` with entries ``T[i][j] = a_{i-j}``, ``a_{-j} = conj(a_j)``."""

    k: int
    coeffs: tuple
    prec: int = DEFAULT_PREC
    symbol: Optional[PiecewiseSymbol] = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.coeffs) != self.k + 1:
            raise ValueError("need coefficients a_0..a_k")
        if abs(mpmath.im(self.coeffs[0])) > 0:
            raise ValueError("a_0 must be real for a Hermitian matrix")

    @classmethod
    def from_symbol(cls, f: PiecewiseSymbol, k: int, prec: int = DEFAULT_PREC) -> "HermitianToeplitzMatrix":
        return cls(k, tuple(fourier_coeffs(f, k, prec)), prec, f)

    @classmethod
    def from_coeffs(cls, coeffs, prec: int = DEFAULT_PREC) -> "HermitianToeplitzMatrix":
        with mp.workprec(prec):
            cs = tuple(mp.mpc(c) for c in coeffs)
        return cls(len(cs) - 1, cs, prec)

    @property
    def dim(self) -> int:
        return self.k + 1

    @property
    def is_real(self) -> bool:
        return all(mpmath.im(c) == 0 for c in self.coeffs)

    def with_precision(self, prec: int) -> "HermitianToeplitzMatrix":
        """Same matrix at a different precision; coefficients are recomputed
        from the symbol when one is attached."""
        if self.symbol is not None:
            return HermitianToeplitzMatrix.from_symbol(self.symbol, self.k, prec)
        return HermitianToeplitzMatrix(self.k, self.coeffs, prec)

    def entry(self, i: int, j: int):
        d = i - j
        return self.coeffs[d] if d >= 0 else mpmath.conj(self.coeffs[-d])

    def dense(self) -> list[list]:
        if self.is_real:
            return [[mpmath.re(self.entry(i, j)) for j in range(self.dim)] for i in range(self.dim)]
        return [[self.entry(i, j) for j in range(self.dim)] for i in range(self.dim)]

    def gershgorin_bound(self) -> BigReal:
        with mp.workprec(self.prec):
            return abs(self.coeffs[0]) + 2 * mpmath.fsum(abs(c) for c in self.coeffs[1:])

    def to_numpy(self) -> np.ndarray:
        return np.array([[complex(x) for x in row] for row in self.dense()])


def _negative_pivots(T: HermitianToeplitzMatrix, lam, prec: int) -> int:
    """Count negative pivots of the LDL^H factorization of ``T - lam I``."""
    n = T.dim
    real = T.is_real
    with mp.workprec(prec):
        lam = mp.mpf(lam)
        # lower triangle, row-major: A[i][j] for j <= i
        A = [[T.entry(i, j) if not real else mpmath.re(T.entry(i, j)) for j in range(i + 1)] for i in range(n)]
        for i in range(n):
            A[i][i] = mpmath.re(A[i][i]) - lam
        scale = max(abs(mpmath.re(T.coeffs[0]) - lam), max((abs(c) for c in T.coeffs), default=mp.one))
        tiny = scale * mp.mpf(2) ** (-(prec - 8))
        budget = scale * mp.mpf(2) ** (-(prec - 40))
        neg = 0
        smallest = None
        for p in range(n):
            d = mpmath.re(A[p][p])
            ad = abs(d)
            if ad <= tiny:
                raise ZeroPivotError(f"zero pivot at step {p}")
            smallest = ad if smallest is None else min(smallest, ad)
            if d < 0:
                neg += 1
            col = [A[i][p] for i in range(p + 1, n)]
            if real:
                scaled = [c / d for c in col]
                for ii in range(len(col)):
                    row = A[p + 1 + ii]
                    li = scaled[ii]
                    if li == 0:
                        continue
                    for jj in range(ii + 1):
                        row[p + 1 + jj] -= li * col[jj]
            else:
                scaled = [c / d for c in col]
                for ii in range(len(col)):
                    row = A[p + 1 + ii]
                    li = scaled[ii]
                    if li == 0:
                        continue
                    for jj in range(ii + 1):
                        row[p + 1 + jj] -= li * mpmath.conj(col[jj])
        if smallest is not None and smallest < budget:
            raise PrecisionError(
                f"pivot {mpmath.nstr(smallest, 5)} below the {prec}-bit budget"
            )
        return neg


def inertia(T: HermitianToeplitzMatrix, lam, prec: Optional[int] = None, max_jitter: int = 3) -> int:
    """Number of eigenvalues of ``T`` strictly below ``lam``.

    A zero pivot means ``lam`` is (numerically) an eigenvalue; the shift is
    then jittered deterministically by ``lam * (1 +- 2^{-p/2})`` up to
    ``max_jitter`` times.
    """
    prec = prec or T.prec
    with mp.workprec(prec):
        lam = mp.mpf(lam)
        delta = mp.mpf(2) ** (-prec // 2)
        shifts = [lam] + [lam * (1 + (-1) ** i * (i // 2 + 1) * delta) for i in range(max_jitter)]
        for shift in shifts:
            try:
                return _negative_pivots(T, shift, prec)
            except ZeroPivotError:
                continue
    raise ZeroPivotError(f"shift {mpmath.nstr(lam, 8)} hits an eigenvalue after {max_jitter} jitters")


# ---------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class LogSpectrum:
    """Eigenvalues ``lambda_1 >= ... >= lambda_{k+1}`` stored through ``log``.

    ``log_lo[i] <= log(lambda_i) <= log_hi[i]``.  ``basis_index`` optionally
    records which basis vector an eigenvalue belongs to (diagonal cases).
    """

    k: int
    log_lo: tuple
    log_hi: tuple
    basis_index: Optional[tuple] = None

    def __post_init__(self):
        if len(self.log_lo) != self.k + 1 or len(self.log_hi) != self.k + 1:
            raise ValueError("spectrum must have k+1 entries")

    @classmethod
    def from_values(cls, k: int, log_values, widths=None, basis_index=None) -> "LogSpectrum":
        """Build from point values of ``log(lambda)`` (any order)."""
        lv = list(log_values)
        ws = list(widths) if widths is not None else [mp.zero] * len(lv)
        order = sorted(range(len(lv)), key=lambda i: lv[i], reverse=True)
        lo = tuple(lv[i] - ws[i] / 2 for i in order)
        hi = tuple(lv[i] + ws[i] / 2 for i in order)
        idx = tuple(basis_index[i] for i in order) if basis_index is not None else None
        return cls(k, lo, hi, idx)

    @property
    def log_values(self) -> list:
        return [(a + b) / 2 for a, b in zip(self.log_lo, self.log_hi)]

    @property
    def eigenvalues(self) -> list:
        return [mp.exp(x) for x in self.log_values]

    @property
    def neg_log(self) -> np.ndarray:
        """``-log(lambda_i)`` as floats, in the stored (decreasing-lambda) order."""
        return np.array([-float(x) for x in self.log_values])

    @property
    def widths(self) -> np.ndarray:
        return np.array([float(b - a) for a, b in zip(self.log_lo, self.log_hi)])

    @property
    def lambda_min(self) -> BigReal:
        return mp.exp(self.log_values[-1])

    def eta(self) -> DiscreteMeasure:
        """Normalized counting measure of ``-log(lambda)/k``."""
        return DiscreteMeasure.uniform(self.neg_log / self.k)

    def by_basis_index(self) -> np.ndarray:
        """``log(lambda)`` as floats ordered by basis index (diagonal cases)."""
        if self.basis_index is None:
            raise ValueError("spectrum carries no basis index")
        out = np.empty(self.k + 1)
        for i, x in zip(self.basis_index, self.log_values):
            out[i] = float(x)
        return out


def precision_policy(c_guess: float, k: int) -> int:
    """Working bits ``max(256, ceil(1.5 c k / log 2) + 128)``."""
    return max(256, int(math.ceil(1.5 * max(c_guess, 0.0) * k / math.log(2))) + 128)


def _log_bracket(T: HermitianToeplitzMatrix, prec: int):
    """``(x_lo, x_hi)`` with no eigenvalue below ``e^{x_lo}`` and all below ``e^{x_hi}``."""
    with mp.workprec(prec):
        ub = T.gershgorin_bound()
        if ub <= 0:
            raise ValueError("zero matrix")
        x_hi = mp.log(ub) + mp.mpf("0.01")
        x_lo = mp.mpf(-1)
        floor = -mp.mpf(0.9) * prec * mp.log(2)
        while inertia(T, mp.exp(x_lo), prec) > 0:
            if x_lo <= floor:
                raise PrecisionError("smallest eigenvalue below the precision floor (or not positive)")
            x_lo = max(2 * x_lo - 1, floor)
        return x_lo, x_hi


def _count(T, x, prec):
    with mp.workprec(prec):
        return inertia(T, mp.exp(x), prec)


def smallest_eigenvalue(T: HermitianToeplitzMatrix, rel_width: float = 2.0**-32, prec: Optional[int] = None):
    """Enclosure ``(log_lo, log_hi)`` of ``log(lambda_min)``, width <= ``rel_width``.

    Escalates like :func:`log_spectrum`: one retry at doubled precision,
    then ``EscalationExhausted``.
    """
    prec = prec or T.prec
    try:
        return _smallest_once(T, rel_width, prec)
    except PrecisionError:
        bigger = 2 * prec
        try:
            return _smallest_once(T.with_precision(bigger), rel_width, bigger)
        except (PrecisionError, ZeroPivotError) as exc:
            raise EscalationExhausted(f"failed at {prec} and {bigger} bits: {exc}") from exc


def _smallest_once(T: HermitianToeplitzMatrix, rel_width: float, prec: int):
    with mp.workprec(prec):
        lo, hi = _log_bracket(T, prec)
        tol = mp.mpf(rel_width)
        while hi - lo > tol:
            mid = (lo + hi) / 2
            if _count(T, mid, prec) >= 1:
                hi = mid
            else:
                lo = mid
        return lo, hi


def _slice(T, prec, tol, lo, hi):
    c_lo, c_hi = _count(T, lo, prec), _count(T, hi, prec)
    if c_lo != 0 or c_hi != T.dim:
        raise ArithmeticError("bracket does not contain the spectrum")
    found: list[tuple] = []
    stack = [(lo, hi, c_lo, c_hi)]
    while stack:
        a, b, ca, cb = stack.pop()
        if cb == ca:
            continue
        if b - a <= tol:
            found.extend([(a, b)] * (cb - ca))
            continue
        m = (a + b) / 2
        cm = _count(T, m, prec)
        stack.append((a, m, ca, cm))
        stack.append((m, b, cm, cb))
    found.sort(key=lambda ab: ab[0], reverse=True)
    return found


def _log_spectrum_once(T, tol_log, prec, refine_min):
    with mp.workprec(prec):
        lo, hi = _log_bracket(T, prec)
        found = _slice(T, prec, mp.mpf(tol_log), lo, hi)
        if refine_min:
            a, b = found[-1]
            # refine only when the smallest enclosure isolates one eigenvalue
            if len(found) == 1 or found[-2] != found[-1]:
                while b - a > mp.mpf(2) ** -32:
                    m = (a + b) / 2
                    if _count(T, m, prec) >= 1:
                        b = m
                    else:
                        a = m
                found[-1] = (a, b)
        return LogSpectrum(T.k, tuple(a for a, _ in found), tuple(b for _, b in found))


def log_spectrum(
    T: HermitianToeplitzMatrix,
    tol_log: float = 1e-8,
    prec: Optional[int] = None,
    refine_min: bool = True,
) -> LogSpectrum:
    """All eigenvalues enclosed to width ``tol_log`` in ``log(lambda)``.

    The smallest eigenvalue is further refined to relative width 2^-32.
    On a precision failure the precision is doubled once; a second failure
    raises ``EscalationExhausted``.
    """
    prec = prec or T.prec
    try:
        return _log_spectrum_once(T, tol_log, prec, refine_min)
    except PrecisionError:
        bigger = 2 * prec
        try:
            return _log_spectrum_once(T.with_precision(bigger), tol_log, bigger, refine_min)
        except (PrecisionError, ZeroPivotError) as exc:
            raise EscalationExhausted(f"failed at {prec} and {bigger} bits: {exc}") from exc


@dataclass(frozen=True)
class DecayFit:
    c_hat: float
    stderr: float
    intercept: float
    ks: tuple
    neg_logs: tuple


def fit_decay_exponent(samples: Sequence[tuple]) -> DecayFit:
    """Least-squares slope of ``-log(lambda_min)`` against ``k``.

    ``samples`` holds ``(k, lambda_min)`` pairs; ``lambda_min`` may be an
    mpf far below the double-precision range.
    """
    if len(samples) < 4:
        raise ValueError("need at least four samples")
    ks = [int(k) for k, _ in samples]
    if any(b <= a for a, b in zip(ks, ks[1:])):
        raise ValueError("k values must be strictly increasing")
    ys = []
    for _, lam in samples:
        lam = mp.mpf(lam)
        if lam <= 0:
            raise ValueError("lambda_min must be positive")
        ys.append(-float(mp.log(lam)))
    res = stats.linregress(ks, ys)
    return DecayFit(float(res.slope), float(res.stderr), float(res.intercept), tuple(ks), tuple(ys))


def fit_decay_exponent_logs(ks: Sequence[int], neg_logs: Sequence[float]) -> DecayFit:
    """Same fit from precomputed ``-log(lambda_min)`` values."""
    return fit_decay_exponent([(k, mp.exp(-mp.mpf(y))) for k, y in zip(ks, neg_logs)])


def pilot_exponent(f: PiecewiseSymbol, ks: Sequence[int] = (8, 12, 16, 20), prec: int = 256) -> float:
    """Cheap low-k estimate of the decay exponent used by the precision policy."""
    samples = []
    for k in ks:
        T = HermitianToeplitzMatrix.from_symbol(f, k, prec)
        lo, hi = smallest_eigenvalue(T, 1e-3, prec)
        samples.append((k, mp.exp((lo + hi) / 2)))
    return max(fit_decay_exponent(samples).c_hat, 0.0)
