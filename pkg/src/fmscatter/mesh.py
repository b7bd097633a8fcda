"""Regularized Lagrange-Laguerre mesh and angular quadrature."""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np


class MeshError(ArithmeticError):
    pass


def laguerre(N: int, x):
    """Return ``(L_N(x), L_N'(x))`` by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    if N == 0:
        return p0, np.zeros_like(x)
    p1 = 1.0 - x
    for k in range(1, N):
        p0, p1 = p1, ((2 * k + 1 - x) * p1 - k * p0) / (k + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        dp = N * (p1 - p0) / x
    return p1, dp


def laguerre_nodes(N: int, maxiter: int = 100) -> np.ndarray:
    """Zeros of L_N by Newton iteration from asymptotic guesses.

    Each root is confined to a sign-change bracket; a Newton step leaving
    the bracket is replaced by bisection.
    """
    if N < 1:
        raise MeshError("N must be >= 1")
    roots = np.empty(N)
    for i in range(N):
        if i == 0:
            z = 3.0 / (1.0 + 2.4 * N)
        elif i == 1:
            z = roots[0] + 15.0 / (1.0 + 2.5 * N)
        else:
            ai = i - 1
            z = roots[i - 1] + (1.0 + 2.55 * ai) / (1.9 * ai) * (roots[i - 1] - roots[i - 2])
        lo = roots[i - 1] + 1e-12 if i > 0 else 0.0
        # bracket: march forward until the sign changes
        step = max(z - lo, 1e-3) / 4
        a, fa = lo, float(laguerre(N, lo)[0])
        b = a + step
        while float(laguerre(N, b)[0]) * fa > 0:
            a, fa = b, float(laguerre(N, b)[0])
            b += step
            if b > 4 * N + 10:
                raise MeshError(f"no sign change found for Laguerre root index {i}")
        z = min(max(z, a), b)
        for _ in range(maxiter):
            p, dp = laguerre(N, z)
            p, dp = float(p), float(dp)
            if p * fa > 0:
                a = z
            else:
                b = z
            znew = z - p / dp if dp != 0 else 0.5 * (a + b)
            if not a < znew < b:
                znew = 0.5 * (a + b)
            if abs(znew - z) <= 1e-15 * max(1.0, abs(z)):
                z = znew
                break
            z = znew
        else:
            raise MeshError(f"Newton iteration did not converge for root index {i}")
        roots[i] = z
    return roots


@dataclass(frozen=True)
class LagrangeBasis:
    """Regularized Lagrange-Laguerre functions ``h^-1/2 F_i(r / h)``."""

    N: int
    scale: float = 1.0

    def __post_init__(self):
        if self.N < 1:
            raise MeshError("N must be >= 1")
        if not self.scale > 0:
            raise MeshError("scale must be positive")

    @cached_property
    def nodes(self) -> np.ndarray:
        return laguerre_nodes(self.N)

    @cached_property
    def _dlag(self) -> np.ndarray:
        return laguerre(self.N, self.nodes)[1]

    @cached_property
    def lam(self) -> np.ndarray:
        """Gauss-Laguerre weights including the ``e^x`` factor."""
        x = self.nodes
        return np.exp(x) / (x * self._dlag**2)

    @cached_property
    def norms(self) -> np.ndarray:
        """The c_i prefactors (equal to sqrt(x_i) up to the (-1)^i sign)."""
        return np.sqrt(self.nodes)

    @property
    def points(self) -> np.ndarray:
        """Mesh points in physical units, ``h x_i``."""
        return self.scale * self.nodes

    @property
    def weights(self) -> np.ndarray:
        """Quadrature weights in physical units, ``h lambda_i``."""
        return self.scale * self.lam

    def values(self, r) -> np.ndarray:
        """Basis functions at points ``r``; shape ``r.shape + (N,)``."""
        r = np.asarray(r, dtype=float)
        t = r / self.scale
        x = self.nodes
        LN = laguerre(self.N, t)[0]
        diff = t[..., None] - x
        near = np.abs(diff) < 1e-9 * np.maximum(1.0, x)
        safe = np.where(near, 1.0, diff)
        core = np.where(near, self._dlag, LN[..., None] / safe)
        sgn = np.sign(self._dlag)
        F = sgn * t[..., None] * core * np.exp(-0.5 * t)[..., None] / np.sqrt(x)
        return F / math.sqrt(self.scale)

    def expand(self, coeffs, r) -> np.ndarray:
        return self.values(r) @ coeffs

    def kinetic(self, l: int = 0) -> np.ndarray:
        return kinetic_matrix(self, l)


def build_laguerre_basis(N: int, h: float = 1.0) -> LagrangeBasis:
    return LagrangeBasis(N, h)


def kinetic_matrix(basis: LagrangeBasis, l: int = 0) -> np.ndarray:
    """Gauss-consistent matrix of ``-d^2/dr^2 + l(l+1)/r^2``."""
    x = basis.nodes
    N = basis.N
    xi, xj = np.meshgrid(x, x, indexing="ij")
    sign = (-1.0) ** np.add.outer(np.arange(N), np.arange(N))
    with np.errstate(divide="ignore", invalid="ignore"):
        T = sign * (xi + xj) / (np.sqrt(xi * xj) * (xi - xj) ** 2)
    T[np.diag_indices(N)] = (-x**2 + 2 * (2 * N + 1) * x + 4) / (12 * x**2)
    T = T / basis.scale**2
    if l:
        T = T + np.diag(l * (l + 1) / basis.points**2)
    return T


@dataclass(frozen=True)
class AngularGrid:
    order: int
    abscissas: np.ndarray
    weights: np.ndarray


def gauss_legendre(order: int) -> AngularGrid:
    if order < 1:
        raise MeshError("quadrature order must be >= 1")
    u, w = np.polynomial.legendre.leggauss(order)
    return AngularGrid(order, u, w)
