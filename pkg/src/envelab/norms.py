"""Hermitian norms on degree-k sections and the spectra that compare them.

Sections of O(k) are polynomials of degree at most k in the affine
coordinate, so a norm is a Hermitian positive-definite Gram matrix in the
monomial basis ``1, z, ..., z^k``.  For a weight potential ``phi`` (the
metric is ``e^{-phi} h_FS``) and a measure ``mu``,

    G[i, j] = int z^i conj(z^j) (1+|z|^2)^{-k} e^{-k phi} dmu.

Conventions used throughout:

* ``relative_spectrum(G1, G2)`` returns ``log(|w|_2/|w|_1)`` in min-max
  order, i.e. half the log of the generalized eigenvalues of ``(G2, G1)``.
* a transfer map ``T`` from ``G0`` to ``G1`` satisfies ``G1 = G0 exp(-T)``,
  so its eigenvalues are ``-log eig(G1, G0)`` with no factor one half.
  The Toeplitz operator of a symbol ``f`` is ``exp(-T)`` for the pair
  (area, f * area).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg
from mpmath import mp

from .geometry import ArcSet, NegligibleSetError, RadialSet, WeightPotential, gauss_x, density_canonicalize


class IndefiniteGramError(np.linalg.LinAlgError):
    """A Gram matrix lost positive-definiteness to rounding."""


# ---------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class MeasureSpec:
    """One of the supported measure families on the sphere.

    ``area``: Fubini-Study area, total mass one.
    ``arc``: normalized arc length ``dtheta/2pi`` on an arc set of the unit circle.
    ``weighted``: ``f * area`` for a real symbol ``f(z)``.
    ``restricted``: area restricted to a rotation-invariant set ``{t in A}``.

    ``t_breaks`` lists values of ``t = log|z|^2`` where the density is not
    smooth; the radial quadrature is split there.
    """

    kind: str
    arcs: Optional[ArcSet] = None
    symbol: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False)
    radial_set: Optional[RadialSet] = None
    t_breaks: tuple = ()
    rotation_invariant: bool = True

    @classmethod
    def area(cls) -> "MeasureSpec":
        return cls("area")

    @classmethod
    def arc(cls, K: ArcSet) -> "MeasureSpec":
        K = density_canonicalize(K)
        return cls("arc", arcs=K, rotation_invariant=K.is_full())

    @classmethod
    def weighted(cls, f, t_breaks=(), rotation_invariant: bool = False) -> "MeasureSpec":
        """``f * area``.

        ``f`` is either a numpy callable of the affine coordinate or a
        radial symbol (anything with ``func`` and ``breakpoints`` in ``t``).
        """
        if hasattr(f, "breakpoints") and hasattr(f, "func"):
            func = f.func

            def g(z):
                r2 = np.abs(np.asarray(z, dtype=complex)) ** 2
                with np.errstate(divide="ignore"):
                    t = np.log(r2)
                flat = [float(func(mp.mpf(float(x)))) for x in t.ravel()]
                return np.asarray(flat).reshape(t.shape)

            return cls("weighted", symbol=g, t_breaks=tuple(f.breakpoints), rotation_invariant=True)
        return cls("weighted", symbol=f, t_breaks=tuple(t_breaks), rotation_invariant=rotation_invariant)

    @classmethod
    def restricted(cls, A: RadialSet) -> "MeasureSpec":
        A = density_canonicalize(A)
        bps = tuple(e for iv in A.intervals for e in iv if math.isfinite(e))
        return cls("restricted", radial_set=A, t_breaks=bps)


def _x_of_t(t: float) -> float:
    return 1.0 / (1.0 + math.exp(-t)) if t > -745 else 0.0


def _x_pieces(spec: MeasureSpec) -> list[tuple[float, float]]:
    """Integration pieces in ``x = r^2/(1+r^2)``, restricted to the set if any."""
    cuts = sorted({0.0, 1.0, *(_x_of_t(t) for t in spec.t_breaks)})
    pieces = [(a, b) for a, b in zip(cuts[:-1], cuts[1:]) if b > a]
    if spec.kind == "restricted":
        A = spec.radial_set
        pieces = [
            (a, b) for a, b in pieces
            if bool(A.contains(math.log((a + b) / 2) - math.log1p(-(a + b) / 2)))
        ]
    if not pieces:
        raise NegligibleSetError("measure has empty support")
    return pieces


def _is_radial(h: WeightPotential) -> bool:
    return bool(np.all(np.ptp(h.values, axis=2) <= 1e-14))


# ---------------------------------------------------------------------------
# Gram matrices


def gram(h: WeightPotential, mu: MeasureSpec, k: int, order: Optional[int] = None,
         n_theta: Optional[int] = None) -> np.ndarray:
    """Gram matrix of the monomials ``z^0..z^k`` for ``Hilb_k(h, mu)``.

    ``order`` is the Gauss order per radial piece (default ``k + 24``); it
    integrates the Fubini-Study case exactly.  ``n_theta`` is the number of
    equispaced angular nodes (default ``2k + 64``).  The result is exactly
    diagonal when the potential and the measure are rotation invariant.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    order = order or k + 24
    n_theta = n_theta or 2 * k + 64
    radial = _is_radial(h) and mu.rotation_invariant
    if mu.kind == "arc":
        return _gram_arc(h, mu.arcs, k, order, n_theta, radial)

    xs, ws = [], []
    for a, b in _x_pieces(mu):
        x, w = gauss_x(order, a, b)
        xs.append(x)
        ws.append(w)
    x, w = np.concatenate(xs), np.concatenate(ws)
    r = np.sqrt(x / (1.0 - x))
    idx = np.arange(k + 1)

    if radial:
        phi = h(r.astype(complex))
        dens = w * np.exp(-k * phi)
        if mu.kind == "weighted":
            dens = dens * mu.symbol(r.astype(complex))
        # x^j (1-x)^(k-j), accumulated in logs to survive large k
        logs = np.outer(np.log(x), idx) + np.outer(np.log1p(-x), k - idx)
        diag = np.sum(dens[:, None] * np.exp(logs), axis=0)
        return np.diag(diag).astype(complex)

    th = 2 * np.pi * np.arange(n_theta) / n_theta
    R, TH = np.meshgrid(r, th, indexing="ij")
    X = np.broadcast_to(x[:, None], R.shape)
    z = R * np.exp(1j * TH)
    wt = (w[:, None] / n_theta) * np.exp(-k * h(z.ravel()).reshape(z.shape))
    if mu.kind == "weighted":
        wt = wt * mu.symbol(z)
    # amplitude of z^j e^{-k Phi / 2}: x^{j/2} (1-x)^{(k-j)/2}
    la = 0.5 * (np.log(X).ravel()[:, None] * idx + np.log1p(-X).ravel()[:, None] * (k - idx))
    V = np.exp(la) * np.exp(1j * np.outer(TH.ravel(), idx))
    G = (V * wt.ravel()[:, None]).T @ V.conj()
    return 0.5 * (G + G.conj().T)


def _gram_arc(h, K: ArcSet, k, order, n_theta, radial):
    idx = np.arange(k + 1)
    if K.is_full():
        th = 2 * np.pi * np.arange(n_theta) / n_theta
        w = np.full(n_theta, 1.0 / n_theta)
    else:
        parts = [gauss_x(order, a, b) for a, b in K.runs()]
        th = np.concatenate([p[0] for p in parts])
        w = np.concatenate([p[1] for p in parts]) / (2 * np.pi)
    z = np.exp(1j * th)
    wt = w * np.exp(-k * (h(z) + math.log(2.0)))
    if radial:
        return np.diag(np.full(k + 1, wt.sum())).astype(complex)
    V = np.exp(1j * np.outer(th, idx))
    G = (V * wt[:, None]).T @ V.conj()
    return 0.5 * (G + G.conj().T)


@dataclass(frozen=True)
class GramPair:
    k: int
    G0: np.ndarray
    G1: np.ndarray

    def __post_init__(self):
        for G in (self.G0, self.G1):
            if G.shape != (self.k + 1, self.k + 1):
                raise ValueError("Gram matrices must be (k+1) x (k+1)")
            _whiten(G)


def _jacobi(G: np.ndarray) -> np.ndarray:
    d = np.real(np.diag(G))
    if np.any(d <= 0):
        raise IndefiniteGramError("nonpositive diagonal entry")
    return 1.0 / np.sqrt(d)


def _whiten(G: np.ndarray):
    """Cholesky factor of the Jacobi-scaled matrix, plus the scaling."""
    s = _jacobi(G)
    try:
        L = np.linalg.cholesky(s[:, None] * G * s[None, :])
    except np.linalg.LinAlgError as exc:
        raise IndefiniteGramError(str(exc)) from None
    return L, s


def _pencil_eigs(G1: np.ndarray, G2: np.ndarray) -> np.ndarray:
    """Generalized eigenvalues of ``G2 v = mu G1 v``, decreasing."""
    L, s = _whiten(G1)
    B = s[:, None] * G2 * s[None, :]
    Y = scipy.linalg.solve_triangular(L, B, lower=True)
    M = scipy.linalg.solve_triangular(L, Y.conj().T, lower=True).conj().T
    mu = np.linalg.eigvalsh(0.5 * (M + M.conj().T))
    if np.any(mu <= 0):
        raise IndefiniteGramError("pencil has nonpositive eigenvalues")
    return mu[::-1]


# ---------------------------------------------------------------------------
# relative spectra


@dataclass(frozen=True)
class RelativeSpectrum:
    """``lambda_1 >= ... >= lambda_n``: log-ratios ``log(|w|_2/|w|_1)``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.sort(np.asarray(self.values, dtype=float))[::-1]
        object.__setattr__(self, "values", v)

    def d_p(self, p: float) -> float:
        if p < 1:
            raise ValueError("p must be at least 1")
        if math.isinf(p):
            return self.d_inf()
        return float(np.mean(np.abs(self.values) ** p) ** (1.0 / p))

    def d_inf(self) -> float:
        return float(max(abs(self.values[0]), abs(self.values[-1])))

    def swapped(self) -> "RelativeSpectrum":
        return RelativeSpectrum(-self.values[::-1])

    def total(self) -> float:
        return float(np.sum(self.values))


def relative_spectrum(G1: np.ndarray, G2: np.ndarray) -> RelativeSpectrum:
    """Logarithmic relative spectrum of the norm of ``G2`` against that of ``G1``.

    ``lambda_j = sup_{dim W = j} inf_{w in W} log(|w|_2 / |w|_1)``, which is
    half the log of the generalized eigenvalues of the pencil ``(G2, G1)``.
    """
    return RelativeSpectrum(0.5 * np.log(_pencil_eigs(G1, G2)))


def transfer_spectrum(G0: np.ndarray, G1: np.ndarray) -> np.ndarray:
    """Eigenvalues of the transfer map ``T`` with ``G1 = G0 exp(-T)``, increasing."""
    return np.sort(-np.log(_pencil_eigs(G0, G1)))


def transfer_operator(G0: np.ndarray, G1: np.ndarray) -> np.ndarray:
    """Matrix of the transfer map in the monomial basis."""
    L, s = _whiten(G0)
    B = s[:, None] * G1 * s[None, :]
    Y = scipy.linalg.solve_triangular(L, B, lower=True)
    M = scipy.linalg.solve_triangular(L, Y.conj().T, lower=True).conj().T
    mu, U = np.linalg.eigh(0.5 * (M + M.conj().T))
    Tw = (U * -np.log(mu)) @ U.conj().T
    # back from whitened coordinates: T = S L^{-H} Tw L^H S^{-1}
    LH = L.conj().T
    T = scipy.linalg.solve_triangular(LH, Tw @ LH, lower=False)
    return s[:, None] * T / s[None, :]


def schatten_distance(A: np.ndarray, B: np.ndarray, p: float, gram_matrix: Optional[np.ndarray] = None) -> float:
    """Normalized Schatten norm ``((1/n) Tr|A-B|^p)^{1/p}``.

    ``A`` and ``B`` are operators self-adjoint for the inner product of
    ``gram_matrix`` (identity when omitted).
    """
    if p < 1:
        raise ValueError("p must be at least 1")
    D = np.asarray(A) - np.asarray(B)
    if gram_matrix is not None:
        L, s = _whiten(gram_matrix)
        # orthonormal coordinates: C = L^H S^{-1} D S L^{-H}
        Ds = (D * s[None, :]) / s[:, None]
        X = L.conj().T @ Ds
        C = scipy.linalg.solve_triangular(L, X.conj().T, lower=True).conj().T
    else:
        C = D
    ev = np.abs(np.linalg.eigvalsh(0.5 * (C + C.conj().T)))
    if math.isinf(p):
        return float(ev.max())
    return float(np.mean(ev**p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# Toeplitz operators and the transfer identity


@dataclass(frozen=True)
class TransferReport:
    k: int
    toeplitz_neg_log: np.ndarray
    transfer: np.ndarray
    relative: RelativeSpectrum
    max_discrepancy: float

    @property
    def holds(self) -> bool:
        return self.max_discrepancy <= 1e-10


def toeplitz_matrix(G0: np.ndarray, G1: np.ndarray) -> np.ndarray:
    """``T_k(f)`` in the orthonormal basis obtained by whitening ``G0``.

    ``G1`` is the Gram matrix of ``f * mu`` and ``G0`` that of ``mu``.
    """
    L, s = _whiten(G0)
    B = s[:, None] * G1 * s[None, :]
    Y = scipy.linalg.solve_triangular(L, B, lower=True)
    M = scipy.linalg.solve_triangular(L, Y.conj().T, lower=True).conj().T
    return 0.5 * (M + M.conj().T)


def toeplitz_vs_transfer(f, h: WeightPotential, k: int, **quad) -> TransferReport:
    """Compare ``spec(-log T_k(f))`` with the transfer spectrum of the Gram pair.

    Path one diagonalizes the Toeplitz matrix in an orthonormal basis.  Path
    two solves the generalized Hermitian problem for the pair with LAPACK's
    pencil driver.  The relative spectrum is carried along; it equals minus
    one half of the transfer spectrum.
    """
    mu = f if isinstance(f, MeasureSpec) else MeasureSpec.weighted(f)
    G0 = gram(h, MeasureSpec.area(), k, **quad)
    G1 = gram(h, mu, k, **quad)
    tk = np.linalg.eigvalsh(toeplitz_matrix(G0, G1))
    if np.any(tk <= 0):
        raise IndefiniteGramError("Toeplitz operator is not positive")
    a = np.sort(-np.log(tk))
    s = _jacobi(G0)
    mu_b = scipy.linalg.eigh(s[:, None] * G1 * s[None, :], s[:, None] * G0 * s[None, :], eigvals_only=True)
    b = np.sort(-np.log(mu_b))
    rel = relative_spectrum(G0, G1)
    gap = float(np.max(np.abs(a - b)))
    gap = max(gap, float(np.max(np.abs(np.sort(-2 * rel.values) - a))))
    return TransferReport(k, a, b, rel, gap)


# ---------------------------------------------------------------------------
# volumes


def log_det(G: np.ndarray) -> float:
    L, s = _whiten(G)
    return float(2 * np.sum(np.log(np.real(np.diag(L)))) - 2 * np.sum(np.log(s)))


def volume_ratio(G1: np.ndarray, G2: np.ndarray, rtol: float = 1e-9) -> float:
    """Sum of the relative spectrum, ``(1/2)(log det G2 - log det G1)``.

    The unit ball of a Hermitian norm on C^n has Euclidean volume
    proportional to ``1/det G``, so twice this value is the log-ratio of
    unit-ball volumes ``log vol(B_1) - log vol(B_2)``.  Both evaluations
    are computed and must agree to ``rtol``.
    """
    by_spectrum = relative_spectrum(G1, G2).total()
    by_det = 0.5 * (log_det(G2) - log_det(G1))
    scale = max(abs(by_spectrum), abs(by_det), 1e-300)
    if abs(by_spectrum - by_det) > rtol * scale + 1e-12:
        raise ArithmeticError(f"volume evaluations disagree: {by_spectrum!r} vs {by_det!r}")
    return by_spectrum
