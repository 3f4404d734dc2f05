"""Probability measures on the real line used to compare spectra with symbols.

Two concrete representations are enough for this package:

* ``DiscreteMeasure``: finitely many atoms, e.g. the normalized counting
  measure of a rescaled log-spectrum.
* ``PushforwardMeasure``: the law of a piecewise-linear function ``g`` of a
  uniform variable on an interval.  Moments and the CDF are exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol

import numpy as np


class SpectralMeasure(Protocol):
    def total_mass(self) -> float: ...

    def moment(self, p: float, absolute: bool = True) -> float: ...

    def cdf(self, x: float, strict: bool = False) -> float: ...

    def support(self) -> tuple[float, float]: ...

    def jump_points(self) -> np.ndarray: ...


@dataclass(frozen=True)
class DiscreteMeasure:
    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if atoms.shape != weights.shape or atoms.ndim != 1 or atoms.size == 0:
            raise ValueError("atoms and weights must be equal-length 1-D arrays")
        if np.any(weights < 0):
            raise ValueError("negative weight")
        order = np.argsort(atoms, kind="stable")
        object.__setattr__(self, "atoms", atoms[order])
        object.__setattr__(self, "weights", weights[order])

    @classmethod
    def uniform(cls, atoms) -> "DiscreteMeasure":
        atoms = np.asarray(atoms, dtype=float)
        return cls(atoms, np.full(atoms.shape, 1.0 / atoms.size))

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def moment(self, p: float, absolute: bool = True) -> float:
        x = np.abs(self.atoms) if absolute else self.atoms
        return float(np.sum(self.weights * x**p))

    def expect(self, g: Callable[[np.ndarray], np.ndarray]) -> float:
        return float(np.sum(self.weights * g(self.atoms)))

    def cdf(self, x: float, strict: bool = False) -> float:
        side = "left" if strict else "right"
        i = np.searchsorted(self.atoms, x, side=side)
        return float(self.weights[:i].sum())

    def support(self) -> tuple[float, float]:
        return float(self.atoms[0]), float(self.atoms[-1])

    def jump_points(self) -> np.ndarray:
        return self.atoms


@dataclass(frozen=True)
class PushforwardMeasure:
    """Law of ``g(s)`` for ``s`` uniform on ``[nodes[0], nodes[-1]]``.

    ``g`` is the piecewise-linear interpolant of ``values`` at ``nodes``.
    """

    nodes: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if nodes.shape != values.shape or nodes.size < 2:
            raise ValueError("need at least two nodes")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "values", values)

    @property
    def _length(self) -> float:
        return float(self.nodes[-1] - self.nodes[0])

    def total_mass(self) -> float:
        return 1.0

    def _pieces(self):
        # split every segment at a sign change so |g|^p is a power of an
        # affine function with constant sign on each piece
        s, g = self.nodes, self.values
        for a, b, ga, gb in zip(s[:-1], s[1:], g[:-1], g[1:]):
            if ga * gb < 0:
                m = a + (b - a) * ga / (ga - gb)
                yield a, m, ga, 0.0
                yield m, b, 0.0, gb
            else:
                yield a, b, ga, gb

    def moment(self, p: float, absolute: bool = True) -> float:
        total = 0.0
        for a, b, ga, gb in self._pieces():
            if absolute:
                ga, gb = abs(ga), abs(gb)
            h = b - a
            if abs(gb - ga) <= 1e-6 * max(abs(ga), abs(gb)):
                # the closed form below cancels catastrophically here; the
                # midpoint rule is exact to second order in gb - ga
                total += h * _signed_pow(0.5 * (ga + gb), p)
            else:
                # integral of (ga + (gb-ga) u)^p over u in [0,1]
                total += h * (_signed_pow(gb, p + 1) - _signed_pow(ga, p + 1)) / ((p + 1) * (gb - ga))
        return total / self._length

    def expect(self, g: Callable[[np.ndarray], np.ndarray], order: int = 16) -> float:
        x, w = np.polynomial.legendre.leggauss(order)
        total = 0.0
        for a, b, ga, gb in self._pieces():
            u = 0.5 * (x + 1.0)
            total += 0.5 * (b - a) * np.sum(w * g(ga + (gb - ga) * u))
        return float(total / self._length)

    def cdf(self, x: float, strict: bool = False) -> float:
        h = np.diff(self.nodes)
        ga, gb = self.values[:-1], self.values[1:]
        lo, hi = np.minimum(ga, gb), np.maximum(ga, gb)
        flat = ga == gb
        hit = (ga < x) if strict else (ga <= x)
        with np.errstate(divide="ignore", invalid="ignore"):
            frac = np.clip((x - lo) / (hi - lo), 0.0, 1.0)
        frac = np.where(flat, hit.astype(float), frac)
        return float(np.sum(h * frac) / self._length)

    def support(self) -> tuple[float, float]:
        return float(self.values.min()), float(self.values.max())

    def jump_points(self) -> np.ndarray:
        # the CDF jumps only at plateau values; support ends are added so
        # that a measure without plateaus still has candidate points
        flat = self.values[:-1][self.values[:-1] == self.values[1:]]
        return np.unique(np.concatenate([flat, self.support()]))


def _signed_pow(x: float, p: float) -> float:
    return float(np.sign(x) * abs(x) ** p)


def kolmogorov_distance(mu: SpectralMeasure, nu: SpectralMeasure) -> float:
    """sup_x |F_mu(x) - F_nu(x)|, evaluated at all jump and node candidates.

    Both CDFs are monotone and piecewise continuous.  When one of them is a
    step function the supremum is attained (or approached) at a jump point
    of either measure, from the right or from the left.  Two continuous
    pushforwards additionally need their node values as candidates.
    """
    pts = np.union1d(mu.jump_points(), nu.jump_points())
    if not isinstance(mu, DiscreteMeasure) and not isinstance(nu, DiscreteMeasure):
        extra = [getattr(m, "values", np.empty(0)) for m in (mu, nu)]
        pts = np.union1d(pts, np.concatenate(extra))
    best = 0.0
    for x in pts:
        for strict in (False, True):
            best = max(best, abs(mu.cdf(x, strict) - nu.cdf(x, strict)))
    return best
