"""Monge-Ampere energy differences and the distances built from them.

On the sphere (n = 1) the energy difference of two bounded potentials is

    E(u) - E(v) = 1/2 * int (u - v) (omega_u + omega_v),

with curvature forms normalized to total mass one.  Radial profiles carry
their curvature as exact atoms, and the same quantity has the dual form
``-int_0^1 (u*(s) - v*(s)) ds`` in Legendre variables.  General weight
potentials use a finite-volume Laplacian on polar grids in both charts.
"""

from __future__ import annotations

import math
from typing import Union

import numpy as np

from .geometry import WeightPotential
from .radial import RadialProfile, UnorderedPairError, _common_nodes, is_ordered, legendre, speed_pushforward

Potential = Union[RadialProfile, WeightPotential]


class NotPlurisubharmonicError(ValueError):
    """Input is not a bounded psh potential."""


def _check_profile(u: RadialProfile) -> None:
    if not u.is_bounded:
        raise NotPlurisubharmonicError("energy needs a bounded profile with tail slopes 0 and 1")


# ---------------------------------------------------------------------------
# radial


def _radial_energy(u: RadialProfile, v: RadialProfile) -> float:
    total = 0.0
    for w in (u, v):
        ts, ms = w.curvature_atoms()
        total += float(np.sum((u(ts) - v(ts)) * ms))
    # curvature beyond the sampled window is carried by the tails, where
    # u - v is constant; add it so the total mass is exactly one
    for w in (u, v):
        ts, ms = w.curvature_atoms()
        missing = (w.s_right - w.s_left) - float(np.sum(ms))
        if abs(missing) > 1e-15:
            far = np.array([-1e6, 1e6])
            total += missing * 0.5 * float(np.sum(u(far) - v(far)))
    return 0.5 * total


def energy_diff_dual(u: RadialProfile, v: RadialProfile) -> float:
    """``E(u) - E(v) = -int_0^1 (u*(s) - v*(s)) ds`` (exact for piecewise-linear duals)."""
    for w in (u, v):
        _check_profile(w)
    du, dv = legendre(u), legendre(v)
    s = _common_nodes(du, dv)
    g = du(s) - dv(s)
    return float(-np.trapezoid(g, s))


# ---------------------------------------------------------------------------
# two-chart grids


def _chart_masses(Phi, n_r: int, n_theta: int):
    """Cell centers and finite-volume masses of ``Delta Phi / (4 pi)`` on the unit disk.

    ``Phi`` is the total local potential in the chart.  Faces sit at
    ``r = i/n_r``; the outer face flux is a centered difference across
    ``|z| = 1`` so that a circle of curvature is split evenly between the
    two charts.
    """
    h = 1.0 / n_r
    rc = (np.arange(n_r + 1) + 0.5) * h  # one ghost ring beyond the circle
    dth = 2 * np.pi / n_theta
    th = (np.arange(n_theta) + 0.5) * dth
    R, TH = np.meshgrid(rc, th, indexing="ij")
    P = Phi(R * np.exp(1j * TH))
    # radial flux r * dPhi/dr through faces r = h, ..., 1
    rf = np.arange(1, n_r + 1) * h
    flux_r = rf[:, None] * (P[1:] - P[:-1]) / h * dth
    inner = P[:n_r]
    d_th = (np.roll(inner, -1, axis=1) - inner) / dth  # face between j and j+1
    flux_t = (h / rc[:n_r, None]) * d_th
    mass = np.zeros((n_r, n_theta))
    mass += flux_r
    mass[1:] -= flux_r[:-1]
    mass += flux_t - np.roll(flux_t, 1, axis=1)
    return R[:n_r] * np.exp(1j * TH[:n_r]), mass / (4 * np.pi)


def _grid_energy(u: WeightPotential, v: WeightPotential, n_r: int, n_theta: int) -> float:
    total = 0.0
    for chart in (0, 1):
        # affine point of a chart coordinate; cell centers avoid the origin
        to_affine = (lambda z: z) if chart == 0 else (lambda w: 1.0 / w)

        def total_potential(w: WeightPotential):
            def Phi(z):
                flat = np.asarray(z, dtype=complex).ravel()
                val = w(to_affine(flat)) + np.log1p(np.abs(flat) ** 2)
                return val.reshape(np.shape(z))

            return Phi

        zc, mu = _chart_masses(total_potential(u), n_r, n_theta)
        _, mv = _chart_masses(total_potential(v), n_r, n_theta)
        pts = to_affine(zc.ravel())
        total += float(np.sum((u(pts) - v(pts)) * (mu.ravel() + mv.ravel())))
    return 0.5 * total


# ---------------------------------------------------------------------------
# public API


def energy_diff(u: Potential, v: Potential, n_r: int = 400, n_theta: int = 64) -> float:
    """``E(u) - E(v)`` for bounded psh potentials.

    Two radial profiles use exact curvature atoms.  Anything else is moved
    to weight potentials (relative to Fubini-Study) and evaluated with grid
    Laplacians on ``n_r x n_theta`` polar cells per chart.
    """
    if isinstance(u, RadialProfile) and isinstance(v, RadialProfile):
        _check_profile(u)
        _check_profile(v)
        return _radial_energy(u, v)
    u = WeightPotential.from_radial(u) if isinstance(u, RadialProfile) else u
    v = WeightPotential.from_radial(v) if isinstance(v, RadialProfile) else v
    return _grid_energy(u, v, n_r, n_theta)


def _ordered(h0: Potential, h1: Potential, tol: float) -> bool:
    if isinstance(h0, RadialProfile) and isinstance(h1, RadialProfile):
        return any(is_ordered(h0, h1, tol))
    a = WeightPotential.from_radial(h0) if isinstance(h0, RadialProfile) else h0
    b = WeightPotential.from_radial(h1) if isinstance(h1, RadialProfile) else h1
    rng = np.random.default_rng(0)
    z = np.exp(rng.uniform(-3, 3, 2000)) * np.exp(1j * rng.uniform(0, 2 * np.pi, 2000))
    d = a(z) - b(z)
    return bool(np.all(d <= tol) or np.all(d >= -tol))


def d1_distance(h0: Potential, h1: Potential, tol: float = 1e-9, **grid) -> float:
    """Darvas distance of an ordered pair: ``|E(h0) - E(h1)|``."""
    if not _ordered(h0, h1, tol):
        raise UnorderedPairError("d1 is only evaluated on ordered pairs")
    return abs(energy_diff(h0, h1, **grid))


def dp_distance_radial(v0: RadialProfile, v1: RadialProfile, p: float) -> float:
    """``(int |speed|^p)^{1/p}`` for the geodesic joining an ordered radial pair."""
    if p < 1:
        raise ValueError("p must be at least 1")
    m = speed_pushforward(v0, v1).moment(p)
    return float(m ** (1.0 / p))
