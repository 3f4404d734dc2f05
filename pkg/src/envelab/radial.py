"""Rotation-invariant reduction in the variable ``t = log|z|^2``.

A rotation-invariant metric on O(1) has total local potential ``v(t)``:
a convex function with slopes in ``[0, 1]``.  Fubini-Study is
``log(1 + e^t)``.  The normalized curvature measure is ``v''(t) dt``, of
total mass ``s_right - s_left``.

In this setting envelopes are convex minorants, Mabuchi geodesics are
linear interpolations of Legendre duals, and Toeplitz operators are
diagonal in the monomial basis.  Profiles are stored as piecewise-linear
functions with exact affine tails, so all Legendre transforms are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np
from mpmath import mp

from .bigtoeplitz import LogSpectrum, QuadratureError
from .geometry import RadialSet
from .measures import PushforwardMeasure

SLOPE_TOL = 1e-9


class UnorderedPairError(ValueError):
    """Geodesic speed is only validated for ordered pairs ``v1 <= v0`` or ``v0 <= v1``."""


@dataclass(frozen=True)
class AnalyticProfile:
    """Exact value / slope / curvature callables accepting mpf arguments.

    ``inverse_slope(s)`` returns the ``t`` with ``v'(t) = s``.
    """

    value: Callable
    slope: Callable
    curvature: Callable
    inverse_slope: Callable
    name: str = ""


FS_ANALYTIC = AnalyticProfile(
    value=lambda t: mp.log1p(mp.exp(t)),
    slope=lambda t: 1 / (1 + mp.exp(-t)),
    curvature=lambda t: mp.exp(t) / (1 + mp.exp(t)) ** 2,
    inverse_slope=lambda s: mp.log(s / (1 - s)),
    name="fubini-study",
)


@dataclass(frozen=True)
class RadialProfile:
    """Convex piecewise-linear ``v(t)`` with affine tails of slopes
    ``s_left`` (t -> -inf) and ``s_right`` (t -> +inf)."""

    t: np.ndarray
    v: np.ndarray
    s_left: float
    s_right: float
    analytic: Optional[AnalyticProfile] = field(default=None, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "v", v)
        if t.ndim != 1 or t.shape != v.shape or t.size < 1:
            raise ValueError("breakpoints and values must be equal-length 1-D arrays")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ValueError("breakpoints and values must be finite")
        if np.any(np.diff(t) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not (-SLOPE_TOL <= self.s_left <= self.s_right + SLOPE_TOL and self.s_right <= 1 + SLOPE_TOL):
            raise ValueError(f"tail slopes ({self.s_left}, {self.s_right}) must satisfy 0 <= s_left <= s_right <= 1")
        sl = self.all_slopes
        if np.any(np.diff(sl) < -SLOPE_TOL * max(1.0, float(np.max(np.abs(sl))))):
            raise ValueError("profile is not convex")

    # -- construction -----------------------------------------------------

    @classmethod
    def from_function(cls, func, t_grid, s_left: float, s_right: float, analytic=None) -> "RadialProfile":
        t = np.asarray(t_grid, dtype=float)
        return cls(t, np.asarray(func(t), dtype=float), s_left, s_right, analytic)

    @classmethod
    def fubini_study(cls, window: float = 36.0, n: int = 7201) -> "RadialProfile":
        """``log(1+e^t)`` sampled on ``[-window, window]``; at the default
        window the tails are affine to about 2e-16."""
        t = np.linspace(-window, window, n)
        return cls(t, np.logaddexp(0.0, t), 0.0, 1.0, FS_ANALYTIC)

    @classmethod
    def kink(cls, c: float = 0.0) -> "RadialProfile":
        """``c + max(0, t)``."""
        return cls(np.array([0.0]), np.array([c]), 0.0, 1.0)

    def shifted(self, c: float) -> "RadialProfile":
        an = None
        if self.analytic is not None:
            a = self.analytic
            an = AnalyticProfile(lambda t: a.value(t) + c, a.slope, a.curvature, a.inverse_slope, a.name + "+c")
        return RadialProfile(self.t, self.v + c, self.s_left, self.s_right, an)

    def reflected(self) -> "RadialProfile":
        """Profile in the chart at infinity: ``v(-t) + t``."""
        t = -self.t[::-1]
        return RadialProfile(t, self.v[::-1] + t, 1.0 - self.s_right, 1.0 - self.s_left)

    # -- evaluation -------------------------------------------------------

    @property
    def slopes(self) -> np.ndarray:
        """Slopes of the interior segments."""
        return np.diff(self.v) / np.diff(self.t)

    @property
    def all_slopes(self) -> np.ndarray:
        return np.concatenate([[self.s_left], self.slopes, [self.s_right]])

    @property
    def is_bounded(self) -> bool:
        """True when the potential relative to Fubini-Study is bounded."""
        return abs(self.s_left) <= SLOPE_TOL and abs(self.s_right - 1.0) <= SLOPE_TOL

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        out = np.interp(t, self.t, self.v)
        with np.errstate(invalid="ignore"):
            left = self.v[0] + self.s_left * (t - self.t[0])
            right = self.v[-1] + self.s_right * (t - self.t[-1])
        out = np.where(t < self.t[0], left, out)
        out = np.where(t > self.t[-1], right, out)
        # 0 * inf tails
        out = np.where(np.isneginf(t), self.v[0] if abs(self.s_left) <= SLOPE_TOL else -np.inf, out)
        out = np.where(np.isposinf(t), self.v[-1] if abs(self.s_right) <= SLOPE_TOL else np.inf, out)
        return out

    def subdifferential(self, i: int) -> tuple[float, float]:
        """Slope interval at breakpoint ``i``."""
        sl = self.all_slopes
        return float(sl[i]), float(sl[i + 1])

    def curvature_atoms(self) -> tuple[np.ndarray, np.ndarray]:
        """Locations and masses of the measure ``v''(dt)`` (slope jumps)."""
        return self.t.copy(), np.diff(self.all_slopes)

    def relative_range(self, lo: float = -60.0, hi: float = 60.0) -> float:
        """``max |v - log(1+e^t)|`` on a window, used by precision policies."""
        t = np.linspace(lo, hi, 2001)
        return float(np.max(np.abs(self(t) - np.logaddexp(0.0, t))))


@dataclass(frozen=True)
class LegendreDual:
    """Convex piecewise-linear ``v*(s)`` on ``[s[0], s[-1]] subset [0, 1]``;
    ``+inf`` outside."""

    s: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "values", vals)
        if s.size < 1 or s.shape != vals.shape:
            raise ValueError("dual needs matching nonempty grids")
        if np.any(np.diff(s) <= 0):
            raise ValueError("dual grid must be strictly increasing")
        if s[0] < -SLOPE_TOL or s[-1] > 1 + SLOPE_TOL:
            raise ValueError("slopes outside [0, 1]")

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.s[0]), float(self.s[-1])

    def __call__(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.interp(s, self.s, self.values)
        lo, hi = self.domain
        return np.where((s < lo - 1e-15) | (s > hi + 1e-15), np.inf, out)


def _dedupe(x: np.ndarray, y: np.ndarray, tol: float = 1e-14) -> tuple[np.ndarray, np.ndarray]:
    """Make ``x`` strictly increasing: roundoff-level decreases are flattened
    and points that coincide with their predecessor are dropped."""
    x = np.maximum.accumulate(x)
    keep = np.concatenate([[True], np.diff(x) > tol * np.maximum(1.0, np.abs(x[1:]))])
    return x[keep], y[keep]


def legendre(v: RadialProfile) -> LegendreDual:
    """Exact conjugate ``v*(s) = sup_t (s t - v(t))`` of a piecewise-linear profile.

    The dual is piecewise linear with nodes at the slopes of ``v``: on
    ``[sigma_{i-1}, sigma_i]`` the supremum sits at the breakpoint ``t_i``.
    """
    sl = v.all_slopes
    if sl[0] < -SLOPE_TOL or sl[-1] > 1 + SLOPE_TOL:
        raise ValueError("slopes outside [0, 1]")
    # slope sigma_i (i = 0..N) is attained between breakpoints i-1 and i;
    # the dual value is sigma_i t_i - v_i, using breakpoint i (or N-1 at the end)
    idx = np.minimum(np.arange(sl.size), v.t.size - 1)
    vals = sl * v.t[idx] - v.v[idx]
    s, vals = _dedupe(np.clip(sl, 0.0, 1.0), vals)
    return LegendreDual(s, vals)


def inverse_legendre(d: LegendreDual) -> RadialProfile:
    """Profile ``v(t) = sup_s (s t - v*(s))`` of a piecewise-linear dual."""
    if d.s.size == 1:
        return RadialProfile(np.array([0.0]), np.array([-d.values[0]]), d.s[0], d.s[0])
    # the conjugate only sees the convex hull; taking it removes roundoff-level
    # nonconvexity where dual nodes crowd together
    hs, hv = _lower_hull(d.s, d.values)
    if hs.size == 1:
        return RadialProfile(np.array([0.0]), np.array([-hv[0]]), hs[0], hs[0])
    tau = np.diff(hv) / np.diff(hs)
    vals = hs[:-1] * tau - hv[:-1]
    # breakpoints closer than this leave slopes dominated by roundoff; merging
    # them moves the profile by at most (slope gap) * (breakpoint gap)
    tau, vals = _dedupe(tau, vals, 1e-9)
    return RadialProfile(tau, vals, float(d.s[0]), float(d.s[-1]))


# ---------------------------------------------------------------------------
# envelopes


def _lower_hull(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Monotone-chain lower convex hull of points sorted by x."""
    hx: list[float] = []
    hy: list[float] = []
    for xi, yi in zip(x, y):
        while len(hx) >= 2 and (hy[-1] - hy[-2]) * (xi - hx[-2]) >= (yi - hy[-2]) * (hx[-1] - hx[-2]):
            hx.pop()
            hy.pop()
        hx.append(float(xi))
        hy.append(float(yi))
    return np.array(hx), np.array(hy)


def radial_envelope(obstacle, S: RadialSet, t_grid: Optional[np.ndarray] = None) -> RadialProfile:
    """Largest convex ``v`` with slopes in ``[0, 1]`` and ``v <= obstacle`` on ``S``.

    ``obstacle`` is a ``RadialProfile`` (its breakpoints are used as samples
    and its affine tails are respected exactly) or any vectorized callable
    sampled on ``t_grid``.  The envelope is the inverse Legendre transform
    of ``s -> max_i (s t_i - obstacle(t_i))`` over ``s`` in ``[0, 1]``,
    evaluated through the lower convex hull of the samples.
    """
    if not S.intervals:
        raise ValueError("empty set: the envelope is unbounded")
    if isinstance(obstacle, RadialProfile):
        grid = obstacle.t
        tails = (obstacle.s_left, obstacle.s_right)
    else:
        if t_grid is None:
            raise ValueError("a sampled obstacle needs t_grid")
        grid = np.asarray(t_grid, dtype=float)
        tails = (0.0, 1.0)
    pts = [grid[S.contains(grid)]]
    s_lo, s_hi = 0.0, 1.0
    for lo, hi in S.intervals:
        pts.append(np.array([e for e in (lo, hi) if math.isfinite(e)]))
        if lo == -math.inf:
            # v <= obstacle on a left half-line forces v's slope at -inf
            # to dominate the obstacle's; the leftmost sample covers the rest
            s_lo = max(s_lo, tails[0])
            pts.append(grid[:1])
        if hi == math.inf:
            s_hi = min(s_hi, tails[1])
            pts.append(grid[-1:])
    ts = np.unique(np.concatenate(pts))
    ts = ts[S.contains(ts)]
    if ts.size == 0:
        raise ValueError("set does not meet the sampling window")
    ys = np.asarray(obstacle(ts), dtype=float)
    hx, hy = _lower_hull(ts, ys)
    # dual nodes: the clamp ends plus hull slopes strictly inside them
    m = np.diff(hy) / np.diff(hx) if hx.size > 1 else np.empty(0)
    inner = m[(m > s_lo) & (m < s_hi)]
    s_nodes = np.concatenate([[s_lo], inner, [s_hi]]) if s_hi > s_lo else np.array([s_lo])
    # maximizing hull vertex for each node: first vertex whose right slope >= s
    right = np.concatenate([m, [np.inf]])
    vertex = np.searchsorted(right, s_nodes, side="left")
    vertex = np.minimum(vertex, hx.size - 1)
    dual_vals = s_nodes * hx[vertex] - hy[vertex]
    s_nodes, dual_vals = _dedupe(s_nodes, dual_vals)
    return inverse_legendre(LegendreDual(s_nodes, dual_vals))


# ---------------------------------------------------------------------------
# geodesics and speed


def _common_nodes(d0: LegendreDual, d1: LegendreDual) -> np.ndarray:
    lo = max(d0.domain[0], d1.domain[0])
    hi = min(d0.domain[1], d1.domain[1])
    if hi < lo - 1e-12:
        raise ValueError("dual domains do not overlap")
    s = np.union1d(d0.s, d1.s)
    s = s[(s >= lo - 1e-15) & (s <= hi + 1e-15)]
    s, _ = _dedupe(np.clip(s, lo, hi), np.zeros_like(s))
    return s


def geodesic(v0: RadialProfile, v1: RadialProfile, tau: float) -> RadialProfile:
    """Point at time ``tau`` of the geodesic: dual ``(1-tau) v0* + tau v1*``."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError("tau must lie in [0, 1]")
    d0, d1 = legendre(v0), legendre(v1)
    if tau == 0.0:
        return inverse_legendre(d0)
    if tau == 1.0:
        return inverse_legendre(d1)
    s = _common_nodes(d0, d1)
    return inverse_legendre(LegendreDual(s, (1.0 - tau) * d0(s) + tau * d1(s)))


def is_ordered(v0: RadialProfile, v1: RadialProfile, tol: float = 1e-9) -> tuple[bool, bool]:
    """``(v1 <= v0 + tol, v0 <= v1 + tol)`` everywhere, tails included."""
    t = np.union1d(v0.t, v1.t)
    diff = v1(t) - v0(t)
    below = bool(np.all(diff <= tol)) and v1.s_left >= v0.s_left - tol and v1.s_right <= v0.s_right + tol
    above = bool(np.all(diff >= -tol)) and v1.s_left <= v0.s_left + tol and v1.s_right >= v0.s_right - tol
    return below, above


CONVENTIONS = ("potential", "metric")


@dataclass(frozen=True)
class GeodesicSpeed:
    """Initial speed of the geodesic from ``v0`` to ``v1``.

    ``convention = "potential"`` stores ``d/dtau`` of the potential at
    ``tau = 0+`` (so ``v1 = v0 + c`` gives ``c`` and ``v1 <= v0`` gives
    speed ``<= 0``).  ``convention = "metric"`` stores the negative, the
    logarithmic derivative of the metric ``e^{-v_tau}``.

    ``s, on_slopes`` give the speed as a function of the slope variable;
    ``t, on_breakpoints`` give it at the breakpoints of ``v0``.
    """

    s: np.ndarray
    on_slopes: np.ndarray
    t: np.ndarray
    on_breakpoints: np.ndarray
    segment_slopes: np.ndarray
    segment_values: np.ndarray
    convention: str = "potential"

    def at_slope(self, s) -> np.ndarray:
        return np.interp(s, self.s, self.on_slopes)

    def at(self, t) -> np.ndarray:
        """Speed at arbitrary ``t`` (breakpoint values at breakpoints)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        i = np.searchsorted(self.t, t, side="left")
        exact = (i < self.t.size) & (self.t[np.minimum(i, self.t.size - 1)] == t)
        seg = np.searchsorted(self.t, t, side="right")  # segment 0 is the left tail
        out = self.segment_values[seg]
        return np.where(exact, self.on_breakpoints[np.minimum(i, self.t.size - 1)], out)

    def with_convention(self, convention: str) -> "GeodesicSpeed":
        if convention not in CONVENTIONS:
            raise ValueError(f"unknown convention {convention!r}")
        if convention == self.convention:
            return self
        return GeodesicSpeed(
            self.s, -self.on_slopes, self.t, -self.on_breakpoints,
            self.segment_slopes, -self.segment_values, convention,
        )

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.on_slopes)))


def geodesic_speed(
    v0: RadialProfile, v1: RadialProfile, convention: str = "potential", tol: float = 1e-9
) -> GeodesicSpeed:
    """One-sided ``tau = 0+`` derivative of the geodesic from ``v0`` to ``v1``.

    In dual variables the potential speed at slope ``s`` is
    ``v0*(s) - v1*(s)``.  At a kink of ``v0`` the derivative is the maximum
    of that difference over the subdifferential (Danskin).
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    below, above = is_ordered(v0, v1, tol)
    if not (below or above):
        raise UnorderedPairError("geodesic speed requires v1 <= v0 or v0 <= v1")
    d0, d1 = legendre(v0), legendre(v1)
    if abs(d0.domain[0] - d1.domain[0]) > tol or abs(d0.domain[1] - d1.domain[1]) > tol:
        raise UnorderedPairError("tail slopes differ: the initial speed is unbounded")
    s = _common_nodes(d0, d1)
    g = d0(s) - d1(s)
    # the contact set is an exact plateau at zero; dual roundoff must not hide it
    scale = max(1.0, float(np.max(np.abs(d0.values))), float(np.max(np.abs(d1.values))))
    g = np.where(np.abs(g) <= 1e-12 * scale, 0.0, g)

    def best_on(a: float, b: float) -> float:
        inside = g[(s > a) & (s < b)]
        ends = np.interp([a, b], s, g)
        return float(max(ends.max(), inside.max())) if inside.size else float(ends.max())

    sl = v0.all_slopes
    on_bp = np.array([best_on(sl[i], sl[i + 1]) for i in range(v0.t.size)])
    seg_vals = np.interp(sl, s, g)
    sign = 1.0 if convention == "potential" else -1.0
    return GeodesicSpeed(s, sign * g, v0.t.copy(), sign * on_bp, sl, sign * seg_vals, convention)


def speed_pushforward(v0: RadialProfile, v1: RadialProfile, convention: str = "potential") -> PushforwardMeasure:
    """Law of the initial speed under the normalized curvature measure of ``v0``.

    The map ``t -> v0'(t)`` pushes ``v0''(dt)`` to Lebesgue measure on the
    slope interval, so the law is that of ``speed(s)`` with ``s`` uniform.
    """
    sp = geodesic_speed(v0, v1, convention)
    if sp.s.size == 1:
        return PushforwardMeasure(np.array([0.0, 1.0]), np.repeat(sp.on_slopes, 2))
    return PushforwardMeasure(sp.s, sp.on_slopes)


# ---------------------------------------------------------------------------
# diagonal Toeplitz operators


@dataclass(frozen=True)
class RadialSymbol:
    """Rotation-invariant symbol ``f(t)`` with its breakpoints in ``t``.

    ``func`` must accept mpf arguments.  ``sup`` and ``inf`` are essential
    bounds used for validation.
    """

    func: Callable
    breakpoints: tuple = ()
    sup: float = 1.0
    inf: float = 0.0
    label: str = ""
    # constant between consecutive breakpoints; lets quadrature skip a pass
    piecewise_constant: bool = False

    @classmethod
    def constant(cls, c: float) -> "RadialSymbol":
        return cls(lambda t: mp.mpf(c), (), c, c, f"constant {c}", True)

    @classmethod
    def indicator(cls, S: RadialSet) -> "RadialSymbol":
        def f(t):
            return mp.one if bool(S.contains(float(t))) else mp.zero

        bps = tuple(sorted({e for iv in S.intervals for e in iv if math.isfinite(e)}))
        return cls(f, bps, 1.0, 0.0, "indicator", True)

    @classmethod
    def log_tent(cls) -> "RadialSymbol":
        """``min(|log|z||, 1) = min(|t|/2, 1)``, vanishing only on the unit circle."""
        return cls(lambda t: min(abs(t) / 2, mp.one), (-2.0, 0.0, 2.0), 1.0, 0.0, "log-tent")

    def __call__(self, t):
        return self.func(t)


def _peak(profile: RadialProfile, j: int, k: int) -> float:
    """Approximate maximizer of ``j t - k v(t)`` (the measure concentrates there)."""
    s = (j + 1.0) / (k + 2.0)
    a = profile.analytic
    if a is not None:
        return float(a.inverse_slope(mp.mpf(s)))
    sl = profile.all_slopes
    i = int(np.clip(np.searchsorted(sl, s), 0, profile.t.size - 1))
    return float(profile.t[i])


def _scaled_quad(logdens, func, nodes, piecewise_constant=False):
    """Integrate ``e^logdens`` and ``func * e^logdens`` over consecutive nodes.

    Each piece is rescaled by the density at its finite endpoints before
    calling ``mp.quad``.  The density is log-concave with its peak at a node,
    so this keeps every piece of order one and makes the absolute error
    estimates of ``mp.quad`` meaningful even for far tails.
    """
    den_terms, num_terms = [], []
    den_err = num_err = mp.mpf(0)
    for x, y in zip(nodes[:-1], nodes[1:]):
        scale = max(logdens(e) for e in (x, y) if mp.isfinite(e))

        def dens(t, scale=scale):
            return mp.exp(logdens(t) - scale)

        d, ed = mp.quad(dens, [x, y], error=True)
        if piecewise_constant:
            if mp.isfinite(x) and mp.isfinite(y):
                mid = (x + y) / 2
            else:
                mid = x + 1 if mp.isfinite(x) else y - 1
            c = func(mid)
            n, en = c * d, abs(c) * ed
        else:
            n, en = mp.quad(lambda t: func(t) * dens(t), [x, y], error=True)
        w = mp.exp(scale)
        den_terms.append(d * w)
        num_terms.append(n * w)
        den_err += ed * w
        num_err += en * w
    den, num = mp.fsum(den_terms), mp.fsum(num_terms)
    mass = mp.fsum(abs(x) for x in num_terms)
    rel = float(den_err / den) + (float(num_err / mass) if mass != 0 else 0.0)
    return den, num, rel


def diagonal_toeplitz_values(
    g,
    profile: RadialProfile,
    k: int,
    prec: Optional[int] = None,
    rel_tol: float = 1e-12,
    strict: bool = True,
    indices: Optional[Sequence[int]] = None,
) -> list:
    """``int g e^{jt - kv} dV / int e^{jt - kv} dV`` for ``j = 0..k``.

    ``dV`` is the curvature measure of the profile: ``v''(t) dt`` for an
    analytic profile, the slope-jump atoms for a piecewise-linear one.  The
    symbol ``g`` may take either sign.  Returns mpf values at ``prec`` bits,
    for all ``j`` or only for ``indices`` when given.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if prec is None:
        if profile.analytic is None:
            prec = 64 + int(math.ceil(k * profile.relative_range() / math.log(2)))
        else:
            # tanh-sinh error estimates are unreliable at double-ish precision
            prec = 128
    bps = tuple(float(b) for b in getattr(g, "breakpoints", ()))
    func = g.func if isinstance(g, RadialSymbol) else g
    js = list(range(k + 1)) if indices is None else [int(j) for j in indices]
    if any(j < 0 or j > k for j in js):
        raise ValueError("indices must lie in 0..k")
    out = []
    worst = (0.0, -1)
    with mp.workprec(prec):
        if profile.analytic is None:
            ts, ms = profile.curvature_atoms()
            keep = ms > 0
            ts, ms = ts[keep], ms[keep]
            tsm = [mp.mpf(x) for x in ts]
            logm = [mp.log(mp.mpf(x)) for x in ms]
            vs = [mp.mpf(x) for x in profile(ts)]
            gs = [mp.mpf(func(x)) for x in tsm]
            for j in js:
                ex = [j * t - k * v + lm for t, v, lm in zip(tsm, vs, logm)]
                top = max(ex)
                w = [mp.exp(e - top) for e in ex]
                out.append(mp.fsum(gi * wi for gi, wi in zip(gs, w)) / mp.fsum(w))
            return out
        a = profile.analytic
        for j in js:
            tp = mp.mpf(_peak(profile, j, k))
            width = 6 / mp.sqrt(k * a.curvature(tp) + 1)

            def logdens(t, j=j):
                return j * t - k * a.value(t) + mp.log(a.curvature(t))

            pts = {tp + m * width for m in (-4, -1, 0, 1, 4)}
            for b in map(mp.mpf, bps):
                # symbol jumps far from the peak sit where the density decays
                # at rate ~k: resolve that boundary layer geometrically
                pts |= {b + m * mp.mpf(d) / k for m in (-1, 0, 1) for d in (0, 2, 32)}
            nodes = [mp.ninf] + sorted(pts) + [mp.inf]
            pc = getattr(g, "piecewise_constant", False)
            den, num, rel = _scaled_quad(logdens, func, nodes, pc)
            if rel > worst[0]:
                worst = (rel, j)
            out.append(num / den)
    if strict and worst[0] > rel_tol:
        raise QuadratureError(f"quadrature error {worst[0]:.2e} at j={worst[1]}", worst[1], worst[0])
    return out


def speed_symbol(v0: RadialProfile, v1: RadialProfile, convention: str = "metric") -> RadialSymbol:
    """The geodesic speed as a radial symbol ``t -> speed(v0'(t))``.

    With an analytic ``v0`` the slope map is exact and the symbol is the
    piecewise-linear speed in the slope variable composed with it.  The
    edges of the contact set (where the speed starts to vanish) are passed
    as breakpoints.
    """
    sp = geodesic_speed(v0, v1, convention)
    zero = np.abs(sp.on_slopes) <= 1e-12
    edges = sp.s[np.flatnonzero(zero[1:] != zero[:-1])]
    if v0.analytic is not None:
        a = v0.analytic
        slope = lambda t: float(a.slope(t))
        bps = tuple(float(a.inverse_slope(mp.mpf(x))) for x in edges if 0 < x < 1)
    else:
        ts, sl = v0.t, v0.all_slopes
        slope = lambda t: float(sl[np.searchsorted(ts, float(t), side="right")])
        bps = ()
    vals = sp.on_slopes

    def f(t):
        return mp.mpf(float(np.interp(slope(t), sp.s, vals)))

    return RadialSymbol(f, bps, float(vals.max()), float(vals.min()), f"speed ({convention})")


def diagonal_speed_values(v0: RadialProfile, v1: RadialProfile, k: int, convention: str = "metric",
                          order: int = 6) -> np.ndarray:
    """Diagonal of ``T_k(speed)`` for the geodesic from ``v0`` to ``v1``.

    In the slope variable ``s = v0'(t)`` the measure ``v0''(t) dt`` becomes
    ``ds`` and the speed is piecewise linear, so the averages
    ``int speed(s) e^{j t(s) - k v0(t(s))} ds`` are computed with composite
    Gauss rules on the speed's own segments.  A piecewise-linear ``v0`` uses
    its curvature atoms instead.  Double precision suffices because every
    average is normalized in log space.
    """
    sp = geodesic_speed(v0, v1, convention)
    js = np.arange(k + 1)
    if v0.analytic is None:
        ts, ms = v0.curvature_atoms()
        keep = ms > 0
        t, g = ts[keep], sp.on_breakpoints[keep]
        logw = np.log(ms[keep])[None, :] + np.outer(js, t) - k * v0(t)[None, :]
    else:
        a = v0.analytic
        x, w = np.polynomial.legendre.leggauss(order)
        lo, hi = sp.s[:-1], sp.s[1:]
        keep = hi > lo
        lo, hi = lo[keep], hi[keep]
        half = 0.5 * (hi - lo)
        s = ((lo + hi) / 2)[:, None] + half[:, None] * x[None, :]
        wt = (half[:, None] * w[None, :]).ravel()
        s = s.ravel()
        inside = (s > 0) & (s < 1)
        s, wt = s[inside], wt[inside]
        t = np.array([float(a.inverse_slope(mp.mpf(float(x)))) for x in s])
        v = np.array([float(a.value(mp.mpf(float(x)))) for x in t])
        g = np.interp(s, sp.s, sp.on_slopes)
        logw = np.log(wt)[None, :] + np.outer(js, t) - k * v[None, :]
    logw -= logw.max(axis=1, keepdims=True)
    wts = np.exp(logw)
    return (wts @ g) / wts.sum(axis=1)


def diagonal_toeplitz_spectrum(
    f: RadialSymbol,
    profile: RadialProfile,
    k: int,
    prec: Optional[int] = None,
    rel_tol: float = 1e-12,
) -> LogSpectrum:
    """Spectrum of ``T_k(f)`` for a rotation-invariant symbol and metric.

    The monomials ``z^j`` diagonalize the operator; eigenvalue ``j`` is the
    average of ``f`` against ``|z|^{2j} e^{-k v} dV``.
    """
    if f.sup <= 0:
        raise ValueError("symbol must not vanish identically")
    if f.inf < 0:
        raise ValueError("symbol must be non-negative")
    vals = diagonal_toeplitz_values(f, profile, k, prec, rel_tol)
    if any(x <= 0 for x in vals):
        raise QuadratureError("non-positive eigenvalue: symbol vanishes on the support of the measure")
    logs = [mp.log(x) for x in vals]
    return LogSpectrum.from_values(k, logs, None, tuple(range(k + 1)))
