"""Hydrogenic two-body states and Riccati-Bessel functions.

Everything is expressed in the mass-scaled pair coordinate ``x`` where the
pair Hamiltonian is ``-d^2/dx^2 + l(l+1)/x^2 + g/x``.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .kinematics import BinaryChannel, ThreeBodySystem, InvalidInputError
from .mesh import LagrangeBasis, kinetic_matrix


class NoBoundStateError(InvalidInputError):
    pass


class ScaledRepresentationError(OverflowError):
    """Riccati functions requested where exp(|Im z|) overflows doubles."""


def assoc_laguerre(k: int, a: int, t):
    """Generalized Laguerre polynomial L_k^(a)(t), valid for complex t."""
    t = np.asarray(t)
    out = np.zeros(t.shape, dtype=np.result_type(t, float))
    for i in range(k + 1):
        out = out + (-1) ** i * math.comb(k + a, k - i) / math.factorial(i) * t**i
    return out


@dataclass(frozen=True)
class BoundState:
    """Normalized reduced radial hydrogenic function ``phi(x)``."""

    channel: BinaryChannel
    strength: float  # g > 0 for the attractive potential -g/x

    @property
    def n(self) -> int:
        return self.channel.n

    @property
    def l(self) -> int:
        return self.channel.l_x

    @property
    def energy(self) -> float:
        return self.channel.energy

    @property
    def bohr(self) -> float:
        return 2.0 / self.strength

    @property
    def mean_radius(self) -> float:
        n, l = self.n, self.l
        return self.bohr * (3 * n * n - l * (l + 1)) / 2

    def __call__(self, x):
        """Evaluate at real or complex ``x``."""
        n, l = self.n, self.l
        a = self.bohr
        rho = np.asarray(x) / a
        norm = math.sqrt((2.0 / n) ** 3 * math.factorial(n - l - 1) / (2 * n * math.factorial(n + l)))
        t = 2.0 * rho / n
        R = norm * np.exp(-rho / n) * t**l * assoc_laguerre(n - l - 1, 2 * l + 1, t)
        return rho * R / math.sqrt(a)

    def on_mesh(self, basis: LagrangeBasis) -> np.ndarray:
        """Lagrange-mesh coefficients ``sqrt(h lambda_i) phi(h x_i)``."""
        return np.sqrt(basis.weights) * self(basis.points)


def hydrogenic_energy(system: ThreeBodySystem, partition: int, n: int) -> float:
    g = -system.coulomb_strength(partition)
    return -g * g / (4.0 * n * n)


def hydrogenic_bound_state(system: ThreeBodySystem, partition: int, n: int, l_x: int = 0,
                           label: str = "") -> BoundState:
    if not system.bound_pair(partition):
        raise NoBoundStateError(f"pair of partition {partition} is not attractive")
    g = -system.coulomb_strength(partition)
    E = -g * g / (4.0 * n * n)
    ch = BinaryChannel(partition, n, l_x, E, label or f"{partition}:{n}{'spdfghik'[l_x]}")
    return BoundState(ch, g)


def diagonalize_pair_on_mesh(basis: LagrangeBasis, system: ThreeBodySystem, partition: int,
                             l: int = 0):
    """Eigenvalues and Lagrange-mesh eigenvectors of the pair Hamiltonian."""
    g = system.coulomb_strength(partition)
    H = kinetic_matrix(basis, l) + np.diag(g / basis.points)
    return np.linalg.eigh(H)


# -- Riccati functions ------------------------------------------------------

def _ric_j_upward(lmax, z):
    out = np.empty((lmax + 1,) + z.shape, dtype=complex)
    out[0] = np.sin(z)
    if lmax >= 1:
        out[1] = np.sin(z) / z - np.cos(z)
    for l in range(1, lmax):
        out[l + 1] = (2 * l + 1) / z * out[l] - out[l - 1]
    return out


def _ric_j_miller(lmax, z):
    start = lmax + 20 + int(np.max(np.abs(z), initial=0.0))
    out = np.zeros((lmax + 1,) + z.shape, dtype=complex)
    nxt = np.zeros(z.shape, dtype=complex)
    cur = np.full(z.shape, 1e-30, dtype=complex)
    for l in range(start, 0, -1):
        prev = (2 * l + 1) / z * cur - nxt
        nxt, cur = cur, prev
        if l - 1 <= lmax:
            out[l - 1] = cur
        big = np.abs(cur) > 1e200
        if np.any(big):
            f = np.where(big, 1e-200, 1.0)
            cur = cur * f
            nxt = nxt * f
            out = out * f
    # normalize against whichever of sin z, sin z / z - cos z is larger
    j0 = np.sin(z)
    j1 = np.sin(z) / z - np.cos(z)
    use0 = np.abs(j0) >= np.abs(j1)
    ref = np.where(use0, j0, j1)
    got = np.where(use0, out[0], out[1] if lmax >= 1 else out[0])
    if lmax == 0:
        got = out[0]
        ref = j0
    return out * (ref / got)


def riccati_bessel(lmax: int, z, derivative: bool = False):
    """Riccati-Bessel ``j^_l(z) = z j_l(z)`` and outgoing Riccati-Hankel
    ``h^+_l(z) = z h^(1)_l(z)`` for ``l = 0..lmax``.

    Convention: ``j^_0 = sin z``, ``h^+_0 = -i e^{iz}``, so that
    ``h^+_l -> -i exp(i(z - l pi/2))`` and ``W[j^, h^+] = i``.
    Returns arrays of shape ``(lmax + 1,) + z.shape``; with
    ``derivative=True`` also their z-derivatives.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z.imag) > 700):
        raise ScaledRepresentationError("|Im z| too large for unscaled Riccati functions")
    zero = z == 0
    zs = np.where(zero, 1.0, z)
    # ascending recurrence is stable for j^ once |z| exceeds l
    up = np.abs(zs) > lmax
    j = np.empty((lmax + 1,) + z.shape, dtype=complex)
    if np.any(up):
        j[:, up] = _ric_j_upward(lmax, zs[up])
    if np.any(~up):
        j[:, ~up] = _ric_j_miller(lmax, zs[~up])
    h = np.empty_like(j)
    e = np.exp(1j * zs)
    h[0] = -1j * e
    if lmax >= 1:
        h[1] = -e * (1 + 1j / zs)
    for l in range(1, lmax):
        h[l + 1] = (2 * l + 1) / zs * h[l] - h[l - 1]
    j[:, zero] = 0.0
    h[:, zero] = np.inf
    if not derivative:
        return j, h
    dj = np.empty_like(j)
    dh = np.empty_like(h)
    dj[0] = np.cos(zs)
    dh[0] = e
    for l in range(1, lmax + 1):
        dj[l] = j[l - 1] - l / zs * j[l]
        dh[l] = h[l - 1] - l / zs * h[l]
    return j, h, dj, dh


def ric_j(l: int, z):
    return riccati_bessel(l, z)[0][l]


def ric_h(l: int, z):
    return riccati_bessel(l, z)[1][l]
