"""Particles, mass-scaled Jacobi coordinates and channel kinematics.

Units: atomic units (hbar = m_e = e = 1) with the reference mass m = m_e
folded into the Jacobi vectors, so the internal Hamiltonian reads
``H = -Lap_x - Lap_y + sum V`` and a channel momentum is ``q = sqrt(E - E_a)``.

Partition ``alpha`` is labelled by its spectator particle; ``(alpha, beta,
gamma)`` is a cyclic permutation of ``(0, 1, 2)`` (zero-based internally).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
import math

import numpy as np

PROTON_MASS = 1836.15267343
# an infinite mass is carried as this value; every mass ratio it enters then
# rounds to its exact limit in double precision
HEAVY_MASS = 1e20


class InvalidInputError(ValueError):
    """Raised for physically meaningless input (nonpositive masses, ...)."""


@dataclass(frozen=True)
class Particle:
    mass: float
    charge: float
    name: str = ""

    def __post_init__(self):
        if not self.mass > 0 or math.isnan(self.mass):
            raise InvalidInputError(f"particle mass must be positive, got {self.mass}")
        if not math.isfinite(self.charge):
            raise InvalidInputError(f"particle charge must be finite, got {self.charge}")


def cyclic(alpha: int) -> tuple[int, int]:
    """Return ``(beta, gamma)`` completing the cyclic permutation of ``alpha``."""
    return (alpha + 1) % 3, (alpha + 2) % 3


@dataclass(frozen=True)
class ThreeBodySystem:
    particles: tuple[Particle, Particle, Particle]
    reference_mass: float = 1.0

    def __post_init__(self):
        if len(self.particles) != 3:
            raise InvalidInputError("exactly three particles are required")
        if not self.reference_mass > 0:
            raise InvalidInputError("reference mass must be positive")

    @property
    def masses(self) -> np.ndarray:
        return np.array([min(p.mass, HEAVY_MASS) for p in self.particles])

    @property
    def charges(self) -> np.ndarray:
        return np.array([p.charge for p in self.particles])

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    @cached_property
    def jacobi_scale(self) -> np.ndarray:
        """sqrt(2 m_b m_c / ((m_b + m_c) m)) for every partition."""
        m = self.masses
        out = np.empty(3)
        for a in range(3):
            b, c = cyclic(a)
            out[a] = math.sqrt(2 * m[b] * m[c] / ((m[b] + m[c]) * self.reference_mass))
        return out

    @cached_property
    def y_scale(self) -> np.ndarray:
        """sqrt(2 m_a (m_b + m_c) / (M m)) for every partition."""
        m = self.masses
        M = m.sum()
        out = np.empty(3)
        for a in range(3):
            b, c = cyclic(a)
            out[a] = math.sqrt(2 * m[a] * (m[b] + m[c]) / (M * self.reference_mass))
        return out

    @cached_property
    def channel_mass_factor(self) -> np.ndarray:
        """Projectile-target reduced mass m_a (m_b + m_c) / (M m_e)."""
        m = self.masses
        M = m.sum()
        out = np.empty(3)
        for a in range(3):
            b, c = cyclic(a)
            out[a] = m[a] * (m[b] + m[c]) / M
        return out

    @cached_property
    def pair_reduced_mass(self) -> np.ndarray:
        m = self.masses
        out = np.empty(3)
        for a in range(3):
            b, c = cyclic(a)
            out[a] = m[b] * m[c] / (m[b] + m[c])
        return out

    def pair_charge_product(self, alpha: int) -> float:
        b, c = cyclic(alpha)
        z = self.charges
        return float(z[b] * z[c])

    def coulomb_strength(self, alpha: int) -> float:
        """Coefficient ``g`` of the pair potential ``V_alpha(x) = g / x``."""
        return self.pair_charge_product(alpha) * float(self.jacobi_scale[alpha])

    def _forward(self, alpha: int) -> np.ndarray:
        # (x, y) in terms of particle positions (r_0, r_1, r_2)
        m = self.masses
        b, c = cyclic(alpha)
        mbc = m[b] + m[c]
        A = np.zeros((2, 3))
        A[0, c] = self.jacobi_scale[alpha]
        A[0, b] = -self.jacobi_scale[alpha]
        A[1, alpha] = self.y_scale[alpha]
        A[1, b] = -self.y_scale[alpha] * m[b] / mbc
        A[1, c] = -self.y_scale[alpha] * m[c] / mbc
        return A

    def _inverse(self, alpha: int) -> np.ndarray:
        # centre-of-mass-frame positions in terms of (x, y)
        m = self.masses
        M = m.sum()
        b, c = cyclic(alpha)
        mbc = m[b] + m[c]
        sx, sy = self.jacobi_scale[alpha], self.y_scale[alpha]
        B = np.zeros((3, 2))
        B[alpha, 1] = mbc / M / sy
        B[b, 1] = -m[alpha] / M / sy
        B[c, 1] = -m[alpha] / M / sy
        B[b, 0] = -m[c] / mbc / sx
        B[c, 0] = m[b] / mbc / sx
        return B

    def rotation(self, alpha: int, beta: int) -> np.ndarray:
        """2x2 matrix mapping ``(x_alpha, y_alpha)`` onto ``(x_beta, y_beta)``."""
        if alpha == beta:
            return np.eye(2)
        return self._forward(beta) @ self._inverse(alpha)

    def bound_pair(self, alpha: int) -> bool:
        return self.pair_charge_product(alpha) < 0

    def dipole_coefficient(self, alpha: int) -> float:
        """Coefficient of ``x (x^.y^) / y^2`` in the large-y expansion of the
        projectile-target interaction, in scaled coordinates."""
        m, z = self.masses, self.charges
        b, c = cyclic(alpha)
        mbc = m[b] + m[c]
        d = z[alpha] * (z[c] * m[b] - z[b] * m[c]) / mbc
        return float(d * self.y_scale[alpha] ** 2 / self.jacobi_scale[alpha])


def build_system(particles, reference_mass: float = 1.0) -> ThreeBodySystem:
    parts = tuple(p if isinstance(p, Particle) else Particle(*p) for p in particles)
    return ThreeBodySystem(parts, reference_mass)


@dataclass(frozen=True)
class BinaryChannel:
    """A projectile (the spectator of ``partition``) on a hydrogenic target."""

    partition: int
    n: int
    l_x: int
    energy: float
    label: str = field(default="")

    def __post_init__(self):
        if not self.energy < 0:
            raise InvalidInputError("binary channel energy must be negative")
        if not 0 <= self.l_x < self.n:
            raise InvalidInputError(f"need 0 <= l_x < n, got n={self.n}, l_x={self.l_x}")


def channel_momentum(E: float, channel: BinaryChannel | float) -> complex | float:
    """``sqrt(E - E_a)``; imaginary with positive imaginary part when closed."""
    Ea = channel.energy if isinstance(channel, BinaryChannel) else float(channel)
    d = E - Ea
    if d >= 0:
        return math.sqrt(d)
    return 1j * math.sqrt(-d)


# -- presets --------------------------------------------------------------

def electron() -> Particle:
    return Particle(1.0, -1.0, "e-")


def positron() -> Particle:
    return Particle(1.0, 1.0, "e+")


def proton(mass: float = math.inf) -> Particle:
    return Particle(mass, 1.0, "p")


def e_h_system(proton_mass: float = math.inf) -> ThreeBodySystem:
    """e- e- p; the two electrons occupy slots 0 and 1.

    The proton is infinitely heavy by default (thresholds at -1/(2n^2));
    pass ``PROTON_MASS`` for the finite-mass system.
    """
    return build_system((electron(), electron(), proton(proton_mass)))


def e_ps_system() -> ThreeBodySystem:
    """e- e- e+; the two electrons occupy slots 0 and 1."""
    return build_system((electron(), electron(), positron()))


def positron_h_system(proton_mass: float = math.inf) -> ThreeBodySystem:
    """e+ e- p: partition 0 is e+ + H, partition 2 is p + Ps."""
    return build_system((positron(), electron(), proton(proton_mass)))
