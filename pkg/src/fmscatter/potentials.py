"""Merkuriev splitting of pair Coulomb potentials and the three-body term.

Evaluators take *real* radial magnitudes plus the complex-scaling angle
``theta``; the complex-scaled value is the analytic continuation to
``r e^{i theta}``. Geometry (the angle ``u = x^.y^`` and inter-set
rotations) is always real, since a uniform dilation commutes with the
kinematic rotations.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import partial
import math

import numpy as np

from .kinematics import ThreeBodySystem, cyclic


class ConfigError(ValueError):
    pass


class BranchError(ArithmeticError):
    pass


@dataclass(frozen=True)
class MerkurievCutoff:
    x0: float
    y0: float = 10.0
    mu: float = 2.1

    def __post_init__(self):
        if not self.mu > 2:
            raise ConfigError(f"Merkuriev exponent must exceed 2, got {self.mu}")
        if not (self.x0 > 0 and self.y0 > 0):
            raise ConfigError("x0 and y0 must be positive")


@dataclass(frozen=True)
class ScreeningProfile:
    y_cut: float = 32.0
    y_sc: float = 5.5
    n_exp: float = 2.0

    def __post_init__(self):
        if not self.n_exp > 1:
            raise ConfigError(f"screening exponent must exceed 1, got {self.n_exp}")
        if not (self.y_cut >= 0 and self.y_sc > 0):
            raise ConfigError("y_cut must be >= 0 and y_sc > 0")

    def factor(self, y):
        y = np.asarray(y, dtype=float)
        t = np.clip(y - self.y_cut, 0.0, None) / self.y_sc
        return np.where(y <= self.y_cut, 1.0, np.exp(-(t**self.n_exp)))


def screen_residual(value, y, profile: ScreeningProfile):
    return value * profile.factor(y)


def cutoff_chi(x, y, params: MerkurievCutoff, theta: float = 0.0):
    """Merkuriev cut-off at ``(x e^{i theta}, y e^{i theta})``; real when theta = 0."""
    if params.mu * theta >= math.pi / 2:
        raise BranchError("complex-scaled cut-off exponent leaves the right half plane")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if theta == 0.0:
        s = (x / params.x0) ** params.mu / (1.0 + y / params.y0)
        e = np.exp(-s)
        return 2.0 * e / (1.0 + e)
    ph = np.exp(1j * theta)
    s = (x / params.x0) ** params.mu * np.exp(1j * params.mu * theta) / (1.0 + y * ph / params.y0)
    e = np.exp(-s)
    return 2.0 * e / (1.0 + e)


def coulomb(g: float, x, theta: float = 0.0):
    x = np.asarray(x, dtype=float)
    if theta == 0.0:
        return g / x
    return g * np.exp(-1j * theta) / x


class MerkurievSplit:
    """Short/long-range split of all three pair potentials.

    ``cutoffs[alpha] is None`` puts the whole pair potential into the long
    range part (used for repulsive pairs, which never bind).
    """

    def __init__(self, system: ThreeBodySystem, cutoffs):
        self.system = system
        self.cutoffs = tuple(cutoffs)
        self.g = np.array([system.coulomb_strength(a) for a in range(3)])

    def pair(self, alpha, x, theta=0.0):
        return coulomb(self.g[alpha], x, theta)

    def chi(self, alpha, x, y, theta=0.0):
        c = self.cutoffs[alpha]
        if c is None:
            return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return cutoff_chi(x, y, c, theta)

    def short(self, alpha, x, y, theta=0.0):
        c = self.cutoffs[alpha]
        if c is None:
            shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
            return np.zeros(shape, dtype=complex if theta else float)
        return self.pair(alpha, x, theta) * cutoff_chi(x, y, c, theta)

    def long(self, alpha, x, y, theta=0.0):
        c = self.cutoffs[alpha]
        V = self.pair(alpha, x, theta)
        if c is None:
            return V * np.ones(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        # 1 - chi = tanh(s/2); avoids cancellation for small x
        ph = np.exp(1j * theta) if theta else 1.0
        s = (x / c.x0) ** c.mu * (np.exp(1j * c.mu * theta) if theta else 1.0) / (1.0 + y * ph / c.y0)
        return V * np.tanh(0.5 * s)

    def rotated_magnitudes(self, alpha, beta, x, y, u):
        R = self.system.rotation(alpha, beta)
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xb2 = R[0, 0] ** 2 * x * x + R[0, 1] ** 2 * y * y + 2 * R[0, 0] * R[0, 1] * x * y * u
        yb2 = R[1, 0] ** 2 * x * x + R[1, 1] ** 2 * y * y + 2 * R[1, 0] * R[1, 1] * x * y * u
        return np.sqrt(np.clip(xb2, 0, None)), np.sqrt(np.clip(yb2, 0, None))

    def three_body_term(self, alpha, x, y, u, theta=0.0):
        """W_alpha = V^l_beta + V^l_gamma at a set-alpha configuration."""
        out = 0.0
        for b in cyclic(alpha):
            xb, yb = self.rotated_magnitudes(alpha, b, x, y, u)
            out = out + self.long(b, xb, yb, theta)
        return out

    def residual(self, alpha, x, y, u, theta=0.0):
        """Full interaction of the spectator with the pair, V_beta + V_gamma."""
        out = 0.0
        for b in cyclic(alpha):
            xb, _ = self.rotated_magnitudes(alpha, b, x, y, u)
            out = out + self.pair(b, xb, theta)
        return out

    def total(self, alpha, x, y, u, theta=0.0):
        return self.pair(alpha, x, theta) + self.residual(alpha, x, y, u, theta)


def split_pair_potential(split: MerkurievSplit, alpha: int):
    return partial(split.short, alpha), partial(split.long, alpha)


def three_body_term(split: MerkurievSplit, alpha: int):
    return partial(split.three_body_term, alpha)


def complex_scaled(evaluator, theta: float):
    """Bind the complex-scaling angle of an evaluator taking ``theta=``."""
    if not 0 <= theta < math.pi / 4:
        raise ConfigError("complex-scaling angle must lie in [0, pi/4)")
    return partial(evaluator, theta=theta)


def default_cutoffs(system: ThreeBodySystem, y0: float = 10.0, mu: float = 2.1,
                    x0_factor: float = 1.0, repulsive: str = "long-range"):
    """x0 = mean radius of the pair ground state (for attractive pairs)."""
    out = []
    for a in range(3):
        g = system.coulomb_strength(a)
        if g < 0:
            out.append(MerkurievCutoff(x0_factor * 1.5 * 2.0 / (-g), y0, mu))
        elif repulsive == "long-range":
            out.append(None)
        elif repulsive == "split":
            out.append(MerkurievCutoff(x0_factor * 1.5 * 2.0 / abs(g), y0, mu))
        else:
            raise ConfigError(f"unknown repulsive-pair treatment {repulsive!r}")
    return out
