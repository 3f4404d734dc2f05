"""Weighted extremal functions of arc sets via Chebyshev sections.

For a compact set ``K`` of the unit circle and a weight ``phi`` (the metric
``e^{-phi} h_FS`` on O(1)), the degree-k extremal value at a point ``p`` is

    V_k(p) = sup { (1/k) log |s(p)|^2 : |s|^2 <= 1 on K } - Phi(p),

where ``|s|^2 = |P|^2 e^{-k Phi}`` and ``Phi = log(1+|z|^2) + phi`` is the
total local potential in the chart of ``p``.  Equivalently, with
``opt = min { sup_K |P| e^{-k Phi / 2} : P(p) = 1 }``,

    V_k(p) = -(2/k) log(opt) - Phi(p).

``V_k`` increases to the envelope ``log(h_K / h)``, which is nonnegative
and vanishes on ``K``.

The complex minimax problem is solved on a discretization of ``K`` with
Lawson's iteratively reweighted least squares in a Vandermonde-with-Arnoldi
basis.  For any probability weights ``lam`` on the samples, the constrained
least-squares value ``min { sum lam |w P|^2 : P(p) = 1 }`` is at most
``opt^2``, which gives a certified lower bound.  The supremum of the current
polynomial on a finer sampling with local refinement gives the upper bound.
Samples where the polynomial peaks above the active set are exchanged in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from .geometry import ArcSet, Chart, ChartPoint, WeightPotential, density_canonicalize

TWO_PI = 2.0 * math.pi


class ExchangeError(RuntimeError):
    """Raised only when the caller asks for a certified gap that was not reached."""


# ---------------------------------------------------------------------------
# weight helpers


def _phi_on_circle(phi: WeightPotential, theta: np.ndarray) -> np.ndarray:
    return phi(np.exp(1j * np.asarray(theta, dtype=float)))


def _phi_at(phi: WeightPotential, p: ChartPoint) -> float:
    if p.chart is Chart.INFINITY and p.z == 0:
        return float(phi.interpolate(np.array([0j]), chart=Chart.INFINITY)[0])
    return float(phi(np.array([p.affine()]))[0])


def total_potential(phi: WeightPotential, p: ChartPoint) -> float:
    """``Phi`` in the chart of ``p``: ``log(1+|coord|^2) + phi(p)``."""
    return math.log1p(abs(p.z) ** 2) + _phi_at(phi, p)


# ---------------------------------------------------------------------------
# Vandermonde with Arnoldi


def _arnoldi(z: np.ndarray, d: np.ndarray, k: int):
    """Orthonormal columns ``Q[:, j] = d * p_j(z)`` with ``deg p_j = j``.

    Returns ``Q`` and the Hessenberg matrix ``H`` of the recurrence
    ``z p_j = sum_i H[i, j] p_i``.
    """
    n = z.size
    Q = np.zeros((n, k + 1), dtype=complex)
    H = np.zeros((k + 1, k), dtype=complex)
    nd = np.linalg.norm(d)
    Q[:, 0] = d / nd
    for j in range(k):
        q = z * Q[:, j]
        for _ in range(2):
            c = Q[:, : j + 1].conj().T @ q
            q = q - Q[:, : j + 1] @ c
            H[: j + 1, j] += c
        H[j + 1, j] = np.linalg.norm(q)
        Q[:, j + 1] = q / H[j + 1, j]
    return Q, H, nd


def _basis_at(H: np.ndarray, nd: float, z: np.ndarray) -> np.ndarray:
    """Values ``p_j(z)`` of the Arnoldi polynomials at arbitrary points."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    k = H.shape[1]
    W = np.zeros((z.size, k + 1), dtype=complex)
    W[:, 0] = 1.0 / nd
    for j in range(k):
        w = z * W[:, j] - W[:, : j + 1] @ H[: j + 1, j]
        W[:, j + 1] = w / H[j + 1, j]
    return W


# ---------------------------------------------------------------------------
# problem and result


def _arc_angles(K: ArcSet, per_arc: int) -> np.ndarray:
    """Chebyshev-clustered angles on each arc (endpoints included)."""
    if K.is_full():
        return TWO_PI * np.arange(per_arc) / per_arc
    out = []
    for s, ln in K.runs():
        u = 0.5 * (1.0 - np.cos(np.pi * np.arange(per_arc + 1) / per_arc))
        out.append(s + ln * u)
    return np.concatenate(out)


@dataclass(frozen=True)
class ChebyshevProblem:
    """Weighted Chebyshev problem normalized at ``point``.

    ``theta`` are constraint samples on ``K``; ``log_w`` the log-weights
    ``-k Phi / 2`` at those samples (on the circle ``Phi = log 2 + phi`` in
    both charts); ``p0`` the coordinate of the point in the chart where it
    has modulus at most one.  Circle points map to ``e^{i theta}`` in the
    affine chart and to ``e^{-i theta}`` in the chart at infinity.
    """

    k: int
    point: ChartPoint
    K: ArcSet
    phi: WeightPotential = field(compare=False)
    theta: np.ndarray = field(compare=False)
    log_w: np.ndarray = field(compare=False)

    @classmethod
    def build(cls, p: ChartPoint, K: ArcSet, phi: WeightPotential, k: int,
              per_arc: Optional[int] = None) -> "ChebyshevProblem":
        if k < 1:
            raise ValueError("degree must be at least 1")
        K = density_canonicalize(K)
        per_arc = per_arc or 16 * k
        theta = _arc_angles(K, per_arc)
        if theta.size < k + 2:
            raise ValueError("need at least k+2 constraint samples")
        log_w = -0.5 * k * (math.log(2.0) + _phi_on_circle(phi, theta))
        return cls(k, p.preferred(), K, phi, theta, log_w)

    @property
    def p0(self) -> complex:
        return self.point.z

    def coords(self, theta: np.ndarray) -> np.ndarray:
        sign = 1.0 if self.point.chart is Chart.AFFINE else -1.0
        return np.exp(1j * sign * np.asarray(theta, dtype=float))

    def log_weight(self, theta: np.ndarray) -> np.ndarray:
        return -0.5 * self.k * (math.log(2.0) + _phi_on_circle(self.phi, theta))


@dataclass(frozen=True)
class ChebyshevResult:
    """``value`` is attained by the returned polynomial; ``upper`` bounds the
    degree-k optimum from above.  ``gap = upper - value``."""

    value: float
    upper: float
    k: int
    iterations: int
    converged: bool
    n_samples: int

    @property
    def gap(self) -> float:
        return self.upper - self.value


def _solve(prob: ChebyshevProblem, max_iters: int, stagnation: float, gap_tol: float,
           fine_factor: int = 4) -> ChebyshevResult:
    k = prob.k
    theta = np.sort(prob.theta)
    shift = float(np.max(prob.log_w))  # weights are scaled to max 1
    p0 = prob.p0
    phi_p = total_potential(prob.phi, prob.point)

    def to_value(log_opt: float) -> float:
        return -(2.0 / k) * (log_opt + shift) - phi_p

    def fine_sup(H, nd, a, th_active):
        # equispaced refinement of the active samples plus local polishing
        runs = prob.K.runs()
        if prob.K.is_full():
            grid = TWO_PI * np.arange(fine_factor * th_active.size) / (fine_factor * th_active.size)
        else:
            grid = np.concatenate([
                s + ln * np.linspace(0.0, 1.0, fine_factor * max(th_active.size // len(runs), k) + 1)
                for s, ln in runs
            ])
        g = _abs_weighted(grid)
        top = _local_maxima(g, max(8, k // 2), periodic=prob.K.is_full())
        best = float(g.max())
        polished = []
        step = (grid[1] - grid[0]) if grid.size > 1 else 1e-3
        for i in top:
            lo, hi = grid[i] - step, grid[i] + step
            if not prob.K.is_full():
                run = _run_of(runs, grid[i])
                lo, hi = max(lo, run[0]), min(hi, run[0] + run[1])
            res = minimize_scalar(lambda t: -_abs_weighted(np.array([t]))[0], bounds=(lo, hi),
                                  method="bounded", options={"xatol": 1e-12})
            val = -float(res.fun)
            polished.append(float(res.x))
            best = max(best, val)
        return best, grid[top], np.array(polished)

    def _abs_weighted(th):
        W = _basis_at(H_cur[0], H_cur[1], prob.coords(th))
        lw = prob.log_weight(th) - shift
        return np.abs(W @ a_cur[0]) * np.exp(lw)

    H_cur = [None, None]
    a_cur = [None]
    it_total = 0
    converged = False
    lower_log = -np.inf
    upper_log = np.inf
    while True:
        z = prob.coords(theta)
        w = np.exp(prob.log_weight(theta) - shift)
        Q, H, nd = _arnoldi(z, w, k)
        v = _basis_at(H, nd, np.array([p0]))[0]
        H_cur[0], H_cur[1] = H, nd
        lam = np.full(theta.size, 1.0 / theta.size)
        prev = -np.inf
        for _ in range(max_iters):
            it_total += 1
            R = np.linalg.qr(np.sqrt(lam)[:, None] * Q, mode="r")
            u = np.linalg.solve(R.T, v)
            nu = float(np.linalg.norm(u))
            b = u.conj() / nu**2
            a = np.linalg.solve(R, b)
            a_cur[0] = a
            ls_log = -math.log(nu)  # log sqrt(min LS value)
            lower_log = max(lower_log, ls_log)
            e = np.abs(Q @ a)
            emax = float(e.max())
            if (emax - math.exp(lower_log)) <= stagnation * emax or abs(ls_log - prev) <= stagnation:
                break
            if (2.0 / k) * (math.log(emax) - lower_log) <= gap_tol / 4:
                break
            prev = ls_log
            lam = lam * e
            lam /= lam.sum()
            lam = np.maximum(lam, 1e-15 / lam.size)
            lam /= lam.sum()
        # coefficients are relative to the Arnoldi basis on the active set;
        # the basis values at new points come from the same recurrence
        sup, peaks, polished = fine_sup(H, nd, a, theta)
        upper_log = min(upper_log, math.log(sup))
        gap = (2.0 / k) * (upper_log - lower_log)
        if gap <= gap_tol:
            converged = True
            break
        if it_total >= max_iters * 4:
            break
        new = np.concatenate([peaks, polished])
        new = new[~np.isin(np.round(new, 14), np.round(theta, 14))]
        if new.size == 0:
            break
        theta = np.sort(np.concatenate([theta, new]))
    return ChebyshevResult(
        value=to_value(upper_log), upper=to_value(lower_log), k=k,
        iterations=it_total, converged=converged, n_samples=theta.size,
    )


def _run_of(runs, t):
    for s, ln in runs:
        if s - 1e-12 <= t <= s + ln + 1e-12:
            return (s, ln)
    return runs[0]


def _local_maxima(g: np.ndarray, count: int, periodic: bool) -> np.ndarray:
    left = np.roll(g, 1) if periodic else np.concatenate([[-np.inf], g[:-1]])
    right = np.roll(g, -1) if periodic else np.concatenate([g[1:], [-np.inf]])
    idx = np.flatnonzero((g >= left) & (g >= right))
    return idx[np.argsort(g[idx])[::-1][:count]]


def chebyshev_value(p: ChartPoint, K: ArcSet, phi: WeightPotential, k: int, *,
                    max_iters: int = 200, stagnation: float = 1e-10, gap_tol: float = 1e-3,
                    per_arc: Optional[int] = None, full: bool = False):
    """Degree-k extremal value ``log(h_K / h)`` at ``p``, in potential units.

    Returns the value attained by the computed polynomial, or the full
    :class:`ChebyshevResult` with its certified upper bound when ``full``.
    """
    prob = ChebyshevProblem.build(p, K, phi, k, per_arc)
    res = _solve(prob, max_iters, stagnation, gap_tol)
    return res if full else res.value


# ---------------------------------------------------------------------------
# fields on two-chart grids


@dataclass(frozen=True)
class Grid:
    """Polar grid in both charts: ``radii`` in [0, 1] times ``angles``."""

    radii: np.ndarray
    angles: np.ndarray

    @classmethod
    def default(cls, n_radial: int = 6, n_angular: int = 16) -> "Grid":
        return cls(np.linspace(0.0, 1.0, n_radial), TWO_PI * np.arange(n_angular) / n_angular)

    def point(self, chart: int, i: int, j: int) -> ChartPoint:
        z = self.radii[i] * np.exp(1j * self.angles[j])
        return ChartPoint(Chart.AFFINE if chart == 0 else Chart.INFINITY, complex(z))


@dataclass(frozen=True)
class EnvelopeField:
    """``values[c, i, j]``: extremal value at grid point ``(c, i, j)``;
    ``upper`` holds the certified upper bounds, ``converged`` the flags."""

    K: ArcSet
    k: int
    grid: Grid
    values: np.ndarray
    upper: np.ndarray
    converged: np.ndarray

    def argmax_diff(self, other: "EnvelopeField"):
        d = self.values - other.values
        idx = np.unravel_index(int(np.argmax(d)), d.shape)
        return float(d[idx]), idx


def _mirror_symmetric(K: ArcSet, phi: WeightPotential) -> bool:
    if not np.allclose(np.array(K.arcs), np.array(K.mirrored().arcs), atol=1e-12):
        return False
    th = np.linspace(0, TWO_PI, 64, endpoint=False)
    z = np.exp(1j * th) * np.linspace(0.1, 1.0, 64)
    return bool(np.allclose(phi(z), phi(z.conj()), atol=1e-12))


def _grid_index_of_conjugate(grid: Grid, j: int) -> Optional[int]:
    target = (-grid.angles[j]) % TWO_PI
    hit = np.flatnonzero(np.isclose(grid.angles, target, atol=1e-12) | np.isclose(grid.angles - TWO_PI, target - TWO_PI, atol=1e-12))
    return int(hit[0]) if hit.size else None


def envelope_field(K: ArcSet, phi: WeightPotential, k: int, grid: Optional[Grid] = None,
                   **solver) -> EnvelopeField:
    """Extremal values on the grid, reusing reflection and mirror symmetries."""
    grid = grid or Grid.default()
    nr, na = grid.radii.size, grid.angles.size
    vals = np.full((2, nr, na), np.nan)
    ups = np.full((2, nr, na), np.nan)
    conv = np.zeros((2, nr, na), dtype=bool)
    reflect = bool(phi.reflection_symmetric)
    mirror = _mirror_symmetric(K, phi)
    for c in (0, 1):
        for i in range(nr):
            for j in range(na):
                if not np.isnan(vals[c, i, j]):
                    continue
                p = grid.point(c, i, j)
                if grid.radii[i] == 0.0 and j > 0:
                    vals[c, i, j], ups[c, i, j], conv[c, i, j] = vals[c, i, 0], ups[c, i, 0], conv[c, i, 0]
                    continue
                res = chebyshev_value(p, K, phi, k, full=True, **solver)
                # mirror z -> conj(z) keeps the chart and negates the angle;
                # reflection z -> 1/conj(z) swaps charts and negates the angle
                # (the circle is fixed pointwise, so the problem is unchanged)
                jc = _grid_index_of_conjugate(grid, j)
                fill = [(c, i, j)]
                if jc is not None and mirror:
                    fill.append((c, i, jc))
                if jc is not None and reflect:
                    fill.append((1 - c, i, jc))
                if mirror and reflect:
                    fill.append((1 - c, i, j))
                for idx in fill:
                    vals[idx], ups[idx], conv[idx] = res.value, res.upper, res.converged
    return EnvelopeField(K, k, grid, vals, ups, conv)


# ---------------------------------------------------------------------------
# the decay exponent


@dataclass(frozen=True)
class ExponentResult:
    value: float
    upper: float
    argmax: ChartPoint
    k: int
    grid_value: float

    @property
    def gap(self) -> float:
        return self.upper - self.value


def c_exponent(K: ArcSet, phi: Optional[WeightPotential] = None, k: int = 64,
               grid: Optional[Grid] = None, refine: bool = True, full: bool = False, **solver):
    """``max_x (field_K(x) - field_circle(x))`` at Chebyshev degree ``k``.

    The grid maximum is refined with a local Nelder-Mead search in the chart
    of the grid argmax.  Returns the value, or an :class:`ExponentResult`
    whose ``upper`` combines the certified bounds of both fields.
    """
    phi = phi or WeightPotential.zero()
    K = density_canonicalize(K)
    circle = ArcSet.full()
    fK = envelope_field(K, phi, k, grid, **solver)
    fS = envelope_field(circle, phi, k, grid, **solver)
    grid_val, idx = fK.argmax_diff(fS)
    c, i, j = idx
    p = fK.grid.point(c, i, j)
    chart = p.chart

    def diff(xy, want_full=False):
        z = complex(xy[0], xy[1])
        if abs(z) > 1.0:
            z = z / abs(z)
        q = ChartPoint(chart, z)
        a = chebyshev_value(q, K, phi, k, full=True, **solver)
        b = chebyshev_value(q, circle, phi, k, full=True, **solver)
        return (a, b) if want_full else -(a.value - b.upper)

    best_xy = np.array([p.z.real, p.z.imag])
    if refine:
        step = 0.5 * float(np.min(np.diff(fK.grid.radii))) if fK.grid.radii.size > 1 else 0.1
        simplex = np.array([best_xy, best_xy + [step, 0.0], best_xy + [0.0, step]])
        res = minimize(diff, best_xy, method="Nelder-Mead",
                       options={"initial_simplex": simplex, "xatol": 1e-4, "fatol": 1e-6, "maxiter": 80})
        if -res.fun > grid_val:
            best_xy = res.x
    a, b = diff(best_xy, want_full=True)
    value = max(a.value - b.upper, grid_val) if not refine else a.value - b.upper
    value = max(value, grid_val)
    upper = a.upper - b.value
    z = complex(best_xy[0], best_xy[1])
    out = ExponentResult(value, max(upper, value), ChartPoint(chart, z if abs(z) <= 1 else z / abs(z)), k, grid_val)
    return out if full else out.value
