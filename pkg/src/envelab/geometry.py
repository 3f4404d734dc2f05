"""Charts, the Fubini-Study reference, quadrature rules and interval sets.

The Riemann sphere is covered by two charts: the affine coordinate ``z`` and
the coordinate ``w = 1/z`` around infinity.  Sections of O(k) are polynomials
of degree at most k in the affine chart, and a metric is written
``|s|^2 = |P(z)|^2 exp(-k * Phi(z))`` with ``Phi = log(1+|z|^2) + phi``.
The reference curvature form has total mass 1.

Measurable sets are restricted to finite unions of closed intervals: arcs of
the unit circle (``ArcSet``) and radial shells in the variable
``t = log|z|^2`` (``RadialSet``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

TWO_PI = 2.0 * math.pi


class NegligibleSetError(ValueError):
    """The set has no Lebesgue density points; its envelope is undefined."""


class Chart(enum.Enum):
    AFFINE = "affine"
    INFINITY = "infinity"


@dataclass(frozen=True)
class ChartPoint:
    chart: Chart
    z: complex

    @classmethod
    def from_affine(cls, z: complex) -> "ChartPoint":
        """Point given by its affine coordinate, stored in the chart where
        the coordinate has modulus at most one."""
        z = complex(z)
        if abs(z) <= 1.0:
            return cls(Chart.AFFINE, z)
        return cls(Chart.INFINITY, 1.0 / z)

    @classmethod
    def infinity(cls) -> "ChartPoint":
        return cls(Chart.INFINITY, 0j)

    def in_chart(self, chart: Chart) -> complex:
        if chart is self.chart:
            return self.z
        if self.z == 0:
            raise ZeroDivisionError("chart origin has no coordinate in the other chart")
        return 1.0 / self.z

    def preferred(self) -> "ChartPoint":
        """Representation with |coordinate| <= 1."""
        if abs(self.z) <= 1.0:
            return self
        other = Chart.INFINITY if self.chart is Chart.AFFINE else Chart.AFFINE
        return ChartPoint(other, 1.0 / self.z)

    def affine(self) -> complex:
        """Affine coordinate; ``complex('inf')`` at the point at infinity."""
        if self.chart is Chart.AFFINE:
            return self.z
        if self.z == 0:
            return complex(math.inf, 0.0)
        return 1.0 / self.z


def fs_potential(p: ChartPoint) -> float:
    """Local Fubini-Study potential ``log(1+|z|^2)`` in the chart of ``p``.

    The expression is the same in both charts because the frames ``1`` and
    ``z`` of O(1) are exchanged by the coordinate change.
    """
    return math.log1p(abs(p.z) ** 2)


# ---------------------------------------------------------------------------
# quadrature


@dataclass(frozen=True)
class CircleRule:
    angles: np.ndarray
    weights: np.ndarray

    def integrate(self, g: Callable[[np.ndarray], np.ndarray]) -> complex:
        return complex(np.sum(self.weights * g(self.angles)))


@dataclass(frozen=True)
class RadialAngularRule:
    """Product rule for ``int_0^inf int_0^2pi g(r, theta) dtheta dr``.

    Radial nodes are Gauss-Legendre nodes in ``x = r^2/(1+r^2)``; the
    weights include the Jacobian ``dr/dx``.
    """

    radii: np.ndarray
    radial_weights: np.ndarray
    x: np.ndarray
    x_weights: np.ndarray
    circle: CircleRule

    def integrate_radial(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.sum(self.radial_weights * g(self.radii)))

    def integrate(self, g: Callable[[np.ndarray, np.ndarray], np.ndarray]) -> complex:
        r, th = np.meshgrid(self.radii, self.circle.angles, indexing="ij")
        w = np.outer(self.radial_weights, self.circle.weights)
        return complex(np.sum(w * g(r, th)))


def circle_rule(n_nodes: int) -> CircleRule:
    angles = TWO_PI * np.arange(n_nodes) / n_nodes
    return CircleRule(angles, np.full(n_nodes, TWO_PI / n_nodes))


def gauss_x(order: int, lo: float = 0.0, hi: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    u, w = np.polynomial.legendre.leggauss(order)
    half = 0.5 * (hi - lo)
    return lo + half * (u + 1.0), half * w


def quadrature(kind: str, order: int):
    """Quadrature rule of the requested kind.

    ``circle``: ``order + 1`` equispaced nodes; exact for trigonometric
    polynomials of degree at most ``order``.

    ``radial_x_angular``: ``order`` Gauss nodes in ``x = r^2/(1+r^2)``
    (exact for integrands that become polynomials of degree ``2*order - 1``
    in x after the substitution) times the circle rule of the same order.
    """
    if order < 2:
        raise ValueError("quadrature order must be at least 2")
    if kind == "circle":
        return circle_rule(order + 1)
    if kind == "radial_x_angular":
        x, wx = gauss_x(order)
        r = np.sqrt(x / (1.0 - x))
        # r^2 = x/(1-x)  =>  dr/dx = 1 / (2 r (1-x)^2)
        wr = wx / (2.0 * r * (1.0 - x) ** 2)
        return RadialAngularRule(r, wr, x, wx, circle_rule(order + 1))
    raise ValueError(f"unknown quadrature kind {kind!r}")


# ---------------------------------------------------------------------------
# weight potentials


def radial_nodes(n: int, r_max: float = 2.0, clustering: float = 3.0) -> np.ndarray:
    """Radial nodes on ``[0, r_max]`` clustered geometrically around r = 1."""
    u = np.linspace(-1.0, 1.0, n)
    lo_span, hi_span = 1.0, r_max - 1.0
    r = np.where(
        u < 0,
        1.0 + lo_span * np.sinh(clustering * u) / math.sinh(clustering),
        1.0 + hi_span * np.sinh(clustering * u) / math.sinh(clustering),
    )
    r[0] = 0.0
    return r


@dataclass(frozen=True)
class WeightPotential:
    """A metric ``e^{-phi} h_FS`` on O(1), sampled on a two-chart polar grid.

    ``values[c]`` holds ``phi`` at the nodes ``radii x angles`` of chart
    ``c`` (0 = affine, 1 = infinity).  ``phi == 0`` is Fubini-Study.  An
    exact callable may be kept for quadrature; evaluation otherwise uses
    bilinear interpolation in the chart where the point has modulus at most
    one.
    """

    radii: np.ndarray
    angles: np.ndarray
    values: np.ndarray
    smoothness: str = "smooth"
    exact: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    reflection_symmetric: bool = False

    def __post_init__(self):
        if self.smoothness not in ("smooth", "continuous", "bounded-psh"):
            raise ValueError(f"unknown smoothness tag {self.smoothness!r}")
        if self.values.shape != (2, self.radii.size, self.angles.size):
            raise ValueError("values must have shape (2, n_radial, n_angular)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("potential must be finite at all grid nodes")

    @classmethod
    def from_function(
        cls,
        phi_affine: Callable[[np.ndarray], np.ndarray],
        phi_infinity: Callable[[np.ndarray], np.ndarray],
        n_radial: int = 512,
        n_angular: int = 256,
        smoothness: str = "smooth",
        reflection_symmetric: bool = False,
    ) -> "WeightPotential":
        """Sample ``phi`` given in each chart's own coordinate.

        ``phi_infinity(w)`` must equal ``phi_affine(1/w)`` for ``w != 0``;
        it is needed separately because the chart origin ``w = 0`` is the
        point at infinity.
        """
        r = radial_nodes(n_radial)
        th = TWO_PI * np.arange(n_angular) / n_angular
        pts = r[:, None] * np.exp(1j * th[None, :])
        vals = np.stack([phi_affine(pts), phi_infinity(pts)]).real.astype(float)

        def exact(z):
            z = np.asarray(z, dtype=complex)
            out = np.empty(z.shape)
            inside = np.abs(z) <= 1.0
            out[inside] = np.real(phi_affine(z[inside]))
            out[~inside] = np.real(phi_infinity(1.0 / z[~inside]))
            return out

        return cls(r, th, vals, smoothness, exact, reflection_symmetric)

    @classmethod
    def zero(cls, n_radial: int = 64, n_angular: int = 32) -> "WeightPotential":
        f = lambda z: np.zeros(np.shape(z))
        return cls.from_function(f, f, n_radial, n_angular, reflection_symmetric=True)

    @classmethod
    def from_radial(cls, profile, n_radial: int = 512, n_angular: int = 16) -> "WeightPotential":
        """Rotation-invariant potential from a bounded radial profile ``v(t)``.

        ``phi(z) = v(log|z|^2) - log(1+|z|^2)`` in the affine chart.
        """
        dual = profile.reflected()

        def in_chart(prof):
            def phi(z):
                r2 = np.abs(np.asarray(z, dtype=complex)) ** 2
                with np.errstate(divide="ignore"):
                    t = np.log(r2)
                return prof(t) - np.log1p(r2)

            return phi

        sym = bool(np.allclose(dual(profile.t), profile(profile.t), atol=1e-12))
        return cls.from_function(
            in_chart(profile), in_chart(dual), n_radial, n_angular, "bounded-psh", sym
        )

    def _interp_chart(self, c: int, w: np.ndarray) -> np.ndarray:
        r = np.abs(w)
        th = np.mod(np.angle(w), TWO_PI)
        n_th = self.angles.size
        dth = TWO_PI / n_th
        j = np.floor(th / dth).astype(int) % n_th
        j1 = (j + 1) % n_th
        a = (th - j * dth) / dth
        i = np.clip(np.searchsorted(self.radii, r, side="right") - 1, 0, self.radii.size - 2)
        b = (r - self.radii[i]) / (self.radii[i + 1] - self.radii[i])
        v = self.values[c]
        return (
            (1 - b) * ((1 - a) * v[i, j] + a * v[i, j1])
            + b * ((1 - a) * v[i + 1, j] + a * v[i + 1, j1])
        )

    def interpolate(self, z, chart: Chart | None = None) -> np.ndarray:
        """Grid interpolation of ``phi`` at affine points ``z``.

        With ``chart`` given, the points are coordinates in that chart and
        no chart switching happens (used for overlap consistency checks).
        """
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if chart is not None:
            return self._interp_chart(0 if chart is Chart.AFFINE else 1, z)
        out = np.empty(z.shape)
        inside = np.abs(z) <= 1.0
        out[inside] = self._interp_chart(0, z[inside])
        out[~inside] = self._interp_chart(1, 1.0 / z[~inside])
        return out

    def __call__(self, z) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        if self.exact is not None:
            return self.exact(z)
        return self.interpolate(z)

    def overlap_discrepancy(self, n: int = 400) -> float:
        """Max difference of the two charts' interpolants on 1/2 <= |z| <= 2."""
        rng = np.random.default_rng(0)
        r = np.exp(rng.uniform(math.log(0.5), math.log(2.0), n))
        z = r * np.exp(1j * rng.uniform(0, TWO_PI, n))
        a = self.interpolate(z, Chart.AFFINE)
        b = self.interpolate(1.0 / z, Chart.INFINITY)
        return float(np.max(np.abs(a - b)))


# ---------------------------------------------------------------------------
# interval sets


def _merge(intervals: list[tuple[float, float]]) -> tuple[tuple[float, float], ...]:
    out: list[list[float]] = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1][1] = max(out[-1][1], hi)
        else:
            out.append([lo, hi])
    return tuple((float(a), float(b)) for a, b in out)


@dataclass(frozen=True)
class ArcSet:
    """Finite union of closed arcs of the unit circle.

    Arcs are stored as sorted, disjoint intervals of ``[0, 2pi]``; an arc
    through angle 0 is split in two pieces touching 0 and 2pi.
    """

    arcs: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for lo, hi in self.arcs:
            if not (0.0 <= lo <= hi <= TWO_PI):
                raise ValueError(f"arc [{lo}, {hi}] outside [0, 2pi]")

    @classmethod
    def from_intervals(cls, intervals) -> "ArcSet":
        pieces: list[tuple[float, float]] = []
        for lo, hi in intervals:
            if hi < lo:
                raise ValueError("arc with hi < lo")
            if hi - lo >= TWO_PI:
                return cls(((0.0, TWO_PI),))
            a = lo % TWO_PI
            b = a + (hi - lo)
            if b <= TWO_PI:
                pieces.append((a, b))
            else:
                pieces.append((a, TWO_PI))
                pieces.append((0.0, b - TWO_PI))
        return cls(_merge(pieces))

    @classmethod
    def full(cls) -> "ArcSet":
        return cls(((0.0, TWO_PI),))

    @classmethod
    def centered(cls, half_angle: float, center: float = 0.0) -> "ArcSet":
        if not 0.0 < half_angle <= math.pi:
            raise ValueError("half-angle must lie in (0, pi]")
        return cls.from_intervals([(center - half_angle, center + half_angle)])

    def measure(self) -> float:
        return sum(hi - lo for lo, hi in self.arcs)

    def is_full(self) -> bool:
        return self.measure() >= TWO_PI - 1e-15

    def runs(self) -> list[tuple[float, float]]:
        """Arcs as ``(start, length)`` with the pieces across angle 0 joined."""
        arcs = list(self.arcs)
        if self.is_full():
            return [(0.0, TWO_PI)]
        if len(arcs) >= 2 and arcs[0][0] == 0.0 and arcs[-1][1] == TWO_PI:
            first, last = arcs.pop(0), arcs.pop()
            arcs.append((last[0], last[1] - last[0] + first[1] - first[0]))
            return [(lo, hi - lo) for lo, hi in arcs[:-1]] + [arcs[-1]]
        return [(lo, hi - lo) for lo, hi in arcs]

    def contains(self, theta) -> np.ndarray:
        th = np.mod(np.asarray(theta, dtype=float), TWO_PI)
        hit = np.zeros(th.shape, dtype=bool)
        for lo, hi in self.arcs:
            hit |= (th >= lo) & (th <= hi)
        return hit

    def rotated(self, angle: float) -> "ArcSet":
        return ArcSet.from_intervals([(s + angle, s + angle + ln) for s, ln in self.runs()])

    def mirrored(self) -> "ArcSet":
        """Image under complex conjugation."""
        return ArcSet.from_intervals([(-(s + ln), -s) for s, ln in self.runs()])

    def sample(self, per_arc: int) -> np.ndarray:
        """Equispaced angles on every arc, endpoints included."""
        out = [s + ln * np.linspace(0.0, 1.0, per_arc + 1) for s, ln in self.runs()]
        th = np.concatenate(out)
        if self.is_full():
            th = th[:-1]
        return th


@dataclass(frozen=True)
class RadialSet:
    """Finite union of closed intervals in ``t = log|z|^2``, merged and sorted."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        for lo, hi in self.intervals:
            if hi < lo or math.isnan(lo) or math.isnan(hi):
                raise ValueError(f"bad interval [{lo}, {hi}]")

    @classmethod
    def from_intervals(cls, intervals) -> "RadialSet":
        return cls(_merge([(float(a), float(b)) for a, b in intervals]))

    @classmethod
    def everything(cls) -> "RadialSet":
        return cls(((-math.inf, math.inf),))

    @classmethod
    def outside_disk(cls, radius: float = 1.0) -> "RadialSet":
        """``{|z| >= radius}``."""
        return cls(((2.0 * math.log(radius), math.inf),))

    def contains(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        hit = np.zeros(t.shape, dtype=bool)
        for lo, hi in self.intervals:
            hit |= (t >= lo) & (t <= hi)
        return hit

    def curvature_mass(self, slope=None) -> float:
        """Mass of the set for the curvature measure ``v''(t) dt``.

        With ``slope`` (the derivative ``v'``) omitted the Fubini-Study
        slope ``e^t/(1+e^t)`` is used.
        """
        if slope is None:
            slope = lambda t: 0.5 * (1.0 + math.tanh(0.5 * t)) if math.isfinite(t) else (0.0 if t < 0 else 1.0)
        return sum(slope(hi) - slope(lo) for lo, hi in self.intervals)


def density_canonicalize(A):
    """Canonical representative whose envelope equals that of the density points.

    For finite unions of closed intervals this is the closure of the
    interior: degenerate pieces are dropped and touching pieces merged.
    """
    if isinstance(A, ArcSet):
        kept = [(lo, hi) for lo, hi in A.arcs if hi > lo]
        if not kept:
            raise NegligibleSetError("arc set has no density points")
        return ArcSet(_merge(kept))
    if isinstance(A, RadialSet):
        kept = [(lo, hi) for lo, hi in A.intervals if hi > lo]
        if not kept:
            raise NegligibleSetError("radial set has no density points")
        return RadialSet(_merge(kept))
    raise TypeError(f"cannot canonicalize {type(A).__name__}")
