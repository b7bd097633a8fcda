"""Distorted incoming waves from a separable auxiliary potential.

The auxiliary potential couples hydrogenic target states through their
long-range dipole interaction with the projectile. Projecting the
three-body equation on the target states leaves a coupled-channel radial
problem in y, solved here by a renormalized Numerov propagation on the
real axis and, with the same asymptotic coefficients, along the
complex-scaled ray ``y e^{i theta}``.

Normalization: channel ``c`` behaves as
``delta_ca j^(q_a y) + A_ca sqrt(q_a/q_c) exp(i(q_c y - l_c pi/2))`` so
that ``S = 1 + 2iA`` is the unitary (flux-normalized) S-matrix.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from .angular import PartialWaveChannel, multipole_kernel
from .kinematics import ThreeBodySystem, channel_momentum
from .mesh import gauss_legendre
from .twobody import BoundState, hydrogenic_bound_state, riccati_bessel

VARIANTS = ("free", "dipole", "dipole+polarization")


class DistortedWaveError(ValueError):
    pass


@dataclass(frozen=True)
class DWChannel:
    state: BoundState
    l_y: int

    @property
    def l_x(self) -> int:
        return self.state.l

    @property
    def threshold(self) -> float:
        return self.state.energy

    @property
    def pw(self) -> PartialWaveChannel:
        return PartialWaveChannel(self.l_x, self.l_y)


def radial_dipole(a: BoundState, b: BoundState, npts: int = 40) -> float:
    """``<phi_a| x |phi_b>``; exact Gauss-Laguerre for hydrogenic pairs."""
    t, w = np.polynomial.laguerre.laggauss(npts)
    rate = 1.0 / (a.bohr * a.n) + 1.0 / (b.bohr * b.n)
    x = t / rate
    return float(np.sum(w * np.exp(t) * a(x) * x * b(x)) / rate)


def polarizability(state: BoundState) -> float:
    """Static dipole polarizability of a hydrogenic ground state in the
    scaled pair coordinate (the hydrogen value 9/2 rescaled)."""
    if state.n != 1:
        raise DistortedWaveError("closed-form polarizability only for n = 1")
    return 2.25 * state.bohr**4


@dataclass
class AuxiliaryPotential:
    """Coupled-channel set plus the coupling matrix ``Lambda(z)``.

    ``coupling(z)`` returns an array of shape ``(nch, nch) + z.shape`` for
    complex ``z``.
    """

    channels: list[DWChannel]
    coupling: Callable | None
    variant: str = "free"
    partition: int = 0
    entrance: int = 0

    @property
    def nch(self) -> int:
        return len(self.channels)

    def matrix(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        if self.coupling is None:
            return np.zeros((self.nch, self.nch) + z.shape, dtype=complex)
        return np.asarray(self.coupling(z), dtype=complex)

    def is_free(self) -> bool:
        return self.coupling is None


def _regularized(z, na, nb, a0):
    return z + a0 * na**3 * nb**3 / z**2


def build_auxiliary(system: ThreeBodySystem, partition: int, L: int, variant: str = "free",
                    n_max: int = 2, entrance_n: int = 1, entrance_l: int = 0,
                    parity: int | None = None, a0: float = 1.0, y_damp: float = 100.0,
                    lmax: int | None = None) -> AuxiliaryPotential:
    """Auxiliary potential for projectile ``partition`` on its bound pair.

    ``free`` keeps only the entrance channel with no coupling; the dipole
    variants include all target states with ``n <= n_max``. The coupling is
    multiplied by ``exp(-(y/y_damp)^4)`` so that it is analytic and
    effectively short-ranged beyond ``y_damp``.
    """
    if variant not in VARIANTS:
        raise DistortedWaveError(f"unknown distorted-wave variant {variant!r}")
    if parity is None:
        parity = (-1) ** (entrance_l + L)
    entrance_state = hydrogenic_bound_state(system, partition, entrance_n, entrance_l)
    if variant == "free":
        ly = L if entrance_l == 0 else None
        if ly is None:
            raise DistortedWaveError("free variant supports s-wave targets only")
        ch = [DWChannel(entrance_state, ly)]
        return AuxiliaryPotential(ch, None, variant, partition, 0)

    channels: list[DWChannel] = []
    for n in range(1, n_max + 1):
        for lx in range(n):
            st = hydrogenic_bound_state(system, partition, n, lx)
            for ly in range(abs(L - lx), L + lx + 1):
                if (-1) ** (lx + ly) != parity:
                    continue
                if lmax is not None and max(lx, ly) > lmax:
                    continue
                channels.append(DWChannel(st, ly))
    entrance = next(i for i, c in enumerate(channels)
                    if c.state.n == entrance_n and c.l_x == entrance_l and c.l_y == L)

    D = system.dipole_coefficient(partition)
    grid = gauss_legendre(8)
    G = multipole_kernel([c.pw for c in channels], L, grid.abscissas)
    ang = np.einsum("abk,k->ab", G, grid.weights * grid.abscissas)
    nch = len(channels)
    strength = np.zeros((nch, nch))
    nn = np.ones((nch, nch))
    for i, ci in enumerate(channels):
        for j, cj in enumerate(channels):
            nn[i, j] = ci.state.n**3 * cj.state.n**3
            if ang[i, j] == 0.0 or abs(ci.l_x - cj.l_x) != 1:
                continue
            strength[i, j] = D * radial_dipole(ci.state, cj.state) * ang[i, j]
    strength[np.abs(strength) < 1e-14] = 0.0
    strength = 0.5 * (strength + strength.T)

    pol = np.zeros(nch)
    if variant == "dipole+polarization":
        for i, ci in enumerate(channels):
            if ci.state.n != 1:
                continue
            alpha_tot = polarizability(ci.state)
            included = 0.0
            for st in {c.state for c in channels if c.l_x == 1}:
                r = radial_dipole(ci.state, st)
                included += 2.0 / 3.0 * r * r / (st.energy - ci.state.energy)
            pol[i] = -0.5 * (alpha_tot - included) * D * D

    def coupling(z):
        z = np.asarray(z, dtype=complex)
        damp = np.exp(-((z / y_damp) ** 4))
        out = np.zeros((nch, nch) + z.shape, dtype=complex)
        for i in range(nch):
            for j in range(nch):
                if strength[i, j] != 0.0:
                    yt = _regularized(z, channels[i].state.n, channels[j].state.n, a0)
                    out[i, j] = strength[i, j] / yt**2 * damp
            if pol[i] != 0.0:
                yt = _regularized(z, 1, 1, a0)
                out[i, i] = out[i, i] + pol[i] / yt**4 * damp
        return out

    return AuxiliaryPotential(channels, coupling, variant, partition, entrance)


# -- coupled-channel propagation -------------------------------------------

@dataclass
class _Propagation:
    z: np.ndarray          # complex grid points (excluding the origin)
    u: np.ndarray          # (npts, nch, nopen) solution values


def _numerov(aux: AuxiliaryPotential, E: float, grid: np.ndarray, step: complex):
    ls = np.array([c.l_y for c in aux.channels])
    thr = np.array([c.threshold for c in aux.channels])
    nch = aux.nch
    Lam = np.moveaxis(aux.matrix(grid), -1, 0)
    Q = Lam.copy()
    idx = np.arange(nch)
    Q[:, idx, idx] += (ls * (ls + 1))[None, :] / grid[:, None] ** 2 - (E - thr)[None, :]
    T = (step**2) / 12.0 * Q
    eye = np.eye(nch)
    ImT = eye - T
    U = 12.0 * np.linalg.inv(ImT) - 10.0 * eye
    npts = len(grid)
    Rinv = np.empty((npts, nch, nch), dtype=complex)
    R = U[0]
    Rinv[0] = np.linalg.inv(R)
    for n in range(1, npts):
        R = U[n] - Rinv[n - 1]
        Rinv[n] = np.linalg.inv(R)
    return ImT, Rinv


@dataclass
class DistortedWave:
    """Solution of the auxiliary coupled-channel problem at energy E."""

    aux: AuxiliaryPotential
    E: float
    q: np.ndarray                 # channel momenta (complex for closed)
    open: np.ndarray              # indices of open channels
    amplitude: np.ndarray         # A~ over open x open channels
    coeff: np.ndarray             # outgoing coefficients Y (nch x nopen) at R_match
    r_match: float
    step: float
    theta: float = 0.0
    _splines: list = field(default_factory=list, repr=False)

    @property
    def entrance(self) -> int:
        return self.aux.entrance

    @property
    def entrance_open_index(self) -> int:
        return int(np.nonzero(self.open == self.aux.entrance)[0][0])

    def _asymptotic(self, z, k):
        """Asymptotic channel functions for entrance column ``k``."""
        z = np.asarray(z, dtype=complex)
        ls = [c.l_y for c in self.aux.channels]
        lm = max(ls)
        out = np.zeros((self.aux.nch,) + z.shape, dtype=complex)
        a = self.open[k]
        zm = self.r_match
        for c in range(self.aux.nch):
            jz, hz = riccati_bessel(lm, self.q[c] * z)
            _, hm = riccati_bessel(lm, np.array([self.q[c] * zm]))
            out[c] = self.coeff[c, k] * hz[ls[c]] / hm[ls[c]][0]
            if c == a:
                out[c] = out[c] + jz[ls[c]]
        return out

    def radial(self, y, k: int | None = None) -> np.ndarray:
        """Channel functions ``u_c(y e^{i theta})`` for real ``y``; shape
        ``(nch,) + y.shape``."""
        if k is None:
            k = self.entrance_open_index
        y = np.asarray(y, dtype=float)
        if self.aux.is_free():
            c = self.aux.channels[0]
            return riccati_bessel(c.l_y, self.q[0] * y * np.exp(1j * self.theta))[0][c.l_y][None]
        out = self._asymptotic(y * np.exp(1j * self.theta), k)
        inside = y <= self.r_match
        if np.any(inside):
            sp = self._splines[k]
            vals = sp(y[inside])
            out[:, inside] = np.moveaxis(vals, -1, 0)
        return out

    def target(self, x) -> np.ndarray:
        """Target functions ``phi_c(x e^{i theta})``; shape ``(nch,) + x.shape``."""
        x = np.asarray(x, dtype=float) * np.exp(1j * self.theta)
        return np.array([c.state(x) for c in self.aux.channels])

    @property
    def S(self) -> np.ndarray:
        return np.eye(len(self.open)) + 2j * self.amplitude


def solve_coupled_channels(aux: AuxiliaryPotential, E: float, r_match: float = 250.0,
                           step: float = 0.01) -> DistortedWave:
    """Real-axis solution with outgoing-wave matching at ``r_match``."""
    q = np.array([channel_momentum(E, c.threshold) for c in aux.channels], dtype=complex)
    open_ = np.array([i for i, c in enumerate(aux.channels) if E > c.threshold])
    if aux.entrance not in open_:
        raise DistortedWaveError("entrance channel is closed at this energy")
    if aux.is_free():
        return DistortedWave(aux, E, q, open_, np.zeros((1, 1), complex),
                             np.zeros((1, 1), complex), r_match, step)
    if r_match < 2.0 * 60.0:
        raise DistortedWaveError(f"matching radius {r_match} too small; use >= 200 a.u.")
    n = int(round(r_match / step))
    grid = step * np.arange(1, n + 1, dtype=float)
    dw = DistortedWave(aux, E, q, open_, None, None, float(grid[-1]), step)
    dw.coeff, dw.amplitude = _match(aux, E, q, open_, grid.astype(complex), complex(step))
    _fill_splines(dw, grid, theta=0.0)
    return dw


def _match(aux, E, q, open_, grid, step):
    ImT, Rinv = _numerov(aux, E, grid, step)
    nch = aux.nch
    ls = [c.l_y for c in aux.channels]
    lm = max(ls)
    zN, zN1 = grid[-1], grid[-2]
    J = np.zeros((2, nch, len(open_)), dtype=complex)
    Hr = np.zeros((nch,), dtype=complex)
    for c in range(nch):
        jN, hN = riccati_bessel(lm, np.array([q[c] * zN, q[c] * zN1]))
        Hr[c] = hN[ls[c]][1] / hN[ls[c]][0]
        for k, a in enumerate(open_):
            if a == c:
                J[0, c, k] = jN[ls[c]][0]
                J[1, c, k] = jN[ls[c]][1]
    # F_{N-1} = Rinv_{N-1} F_N ;  u = J + diag(h/h_N) Y
    A = ImT[-2] @ np.diag(Hr) - Rinv[-2] @ ImT[-1]
    rhs = Rinv[-2] @ ImT[-1] @ J[0] - ImT[-2] @ J[1]
    Y = np.linalg.solve(A, rhs)
    amp = np.zeros((len(open_), len(open_)), dtype=complex)
    for k, a in enumerate(open_):
        for kk, c in enumerate(open_):
            _, hN = riccati_bessel(lm, np.array([q[c] * zN]))
            X = Y[c, k] / hN[ls[c]][0]
            amp[kk, k] = -1j * X * math.sqrt((q[c] / q[a]).real)
    return Y, amp


def _back_substitute(aux, E, grid, step, uN):
    ImT, Rinv = _numerov(aux, E, grid, step)
    F = ImT[-1] @ uN
    out = np.empty((len(grid),) + uN.shape, dtype=complex)
    out[-1] = uN
    for n in range(len(grid) - 2, -1, -1):
        F = Rinv[n] @ F
        out[n] = np.linalg.solve(ImT[n], F)
    return out


def _fill_splines(dw: DistortedWave, grid: np.ndarray, theta: float):
    ph = np.exp(1j * theta)
    z = grid * ph
    nopen = len(dw.open)
    uN = np.empty((dw.aux.nch, nopen), dtype=complex)
    for k in range(nopen):
        uN[:, k] = dw._asymptotic(np.array([z[-1]]), k)[:, 0]
    u = _back_substitute(dw.aux, dw.E, z, dw.step * ph, uN)
    yy = np.concatenate([[0.0], grid])
    dw._splines = []
    for k in range(nopen):
        vals = np.concatenate([np.zeros((1, dw.aux.nch), complex), u[:, :, k]])
        dw._splines.append(CubicSpline(yy, vals, axis=0))


def scale_incoming(wave: DistortedWave, theta: float) -> DistortedWave:
    """Complex-scaled incoming wave ``u(y e^{i theta})`` from the CS-rotated
    coupled-channel system, reusing the real-axis asymptotic coefficients."""
    out = DistortedWave(wave.aux, wave.E, wave.q, wave.open, wave.amplitude, wave.coeff,
                        wave.r_match, wave.step, theta)
    if theta == 0.0:
        out._splines = wave._splines
        return out
    if wave.aux.is_free():
        return out
    n = int(round(wave.r_match / wave.step))
    grid = wave.step * np.arange(1, n + 1, dtype=float)
    _fill_splines(out, grid, theta)
    return out
