"""Complex-scaled Faddeev-Merkuriev linear system on Lagrange meshes.

Unknowns are the outgoing parts of the independent FM components,
``psi_{alpha c}(x, y) = sum_ij C[alpha, c, i, j] f_i(x) f_j(y)`` in the
reduced-radial partial-wave representation of their own Jacobi set.
Components whose pair has no short-range part vanish identically and are
dropped; components related by the exchange of identical particles are
carried as signed images of one independent component.

The assembled equations read ``M C = rhs`` with

    M = e^{-2i theta} T + V_alpha + W_alpha - E   (diagonal in component)
      + V^s_alpha P_{alpha beta}                   (coupling to beta != alpha)

where ``P`` evaluates a component expanded in set beta at the rotated mesh
points of set alpha and projects it onto the channels of set alpha.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Sequence

import numpy as np

from .angular import ChannelConfigError, PartialWaveChannel, enumerate_channels, rotation_kernel
from .kinematics import InvalidInputError, ThreeBodySystem
from .mesh import AngularGrid, LagrangeBasis, gauss_legendre, kinetic_matrix
from .potentials import MerkurievSplit, ScreeningProfile


class ResourceError(MemoryError):
    """The requested discretization exceeds the configured size guard."""


# -- components and identical-particle images --------------------------------

@dataclass(frozen=True)
class Instance:
    """Physical FM component ``partition`` expressed through independent
    component ``source``: ``psi_partition,c = sign * (+-1)^l_x psi_source,c``."""

    partition: int
    source: int
    sign: int = 1
    parity_sign: bool = False

    def factor(self, ch: PartialWaveChannel) -> int:
        s = self.sign
        if self.parity_sign and ch.l_x % 2:
            s = -s
        return s


@dataclass(frozen=True)
class ComponentLayout:
    independent: tuple[int, ...]
    instances: tuple[Instance, ...]
    exchange: tuple[int, int] | None = None
    spin: int | None = None

    def instance(self, partition: int) -> Instance | None:
        for inst in self.instances:
            if inst.partition == partition:
                return inst
        return None

    def images(self, partition: int) -> list[Instance]:
        """Instances other than ``partition`` itself that share its source."""
        return [i for i in self.instances if i.source == partition and i.partition != partition]

    def spin_weight(self) -> float:
        if self.spin is None:
            return 1.0
        return (2 * self.spin + 1) / 4.0


def identical_pair(system: ThreeBodySystem) -> tuple[int, int] | None:
    p = system.particles
    for i in range(3):
        for j in range(i + 1, 3):
            if (p[i].mass == p[j].mass and p[i].charge == p[j].charge
                    and p[i].name == p[j].name):
                return i, j
    return None


def component_layout(system: ThreeBodySystem, split: MerkurievSplit,
                     spin: int | None = None) -> ComponentLayout:
    """Independent components and their images.

    Exchanging identical particles ``i <-> j`` maps component ``i`` onto
    component ``j`` with the factor ``(-1)^(S + l_x)``; the third component
    is mapped onto itself and keeps only channels with a ``+1`` factor.
    """
    live = [a for a in range(3) if split.cutoffs[a] is not None]
    if not live:
        raise ChannelConfigError("no pair carries a short-range potential")
    pair = identical_pair(system)
    if pair is None:
        if spin is not None:
            raise InvalidInputError("spin given for a system without identical particles")
        inst = tuple(Instance(a, a) for a in live)
        return ComponentLayout(tuple(live), inst)
    if spin not in (0, 1):
        raise InvalidInputError("systems with identical particles need spin 0 or 1")
    i, j = pair
    sgn = -1 if spin else 1
    indep, inst = [], []
    for a in live:
        if a == j and i in live:
            inst.append(Instance(j, i, sgn, True))
        else:
            indep.append(a)
            inst.append(Instance(a, a))
    return ComponentLayout(tuple(indep), tuple(inst), pair, spin)


# -- meshes -----------------------------------------------------------------

@dataclass
class MeshSet:
    """Lagrange bases of every live partition."""

    x: dict
    y: dict

    def size(self, alpha: int) -> int:
        return self.x[alpha].N * self.y[alpha].N

    def rho(self, alpha: int) -> np.ndarray:
        """``sqrt(h_x lambda_i h_y lambda_j)``: converts point values to
        mesh coefficients."""
        return np.sqrt(np.outer(self.x[alpha].weights, self.y[alpha].weights))

    def grid(self, alpha: int):
        return np.meshgrid(self.x[alpha].points, self.y[alpha].points, indexing="ij")


def default_meshes(system: ThreeBodySystem, partitions: Sequence[int], Nx: int, Ny: int,
                   hx: float | dict | None = None, hy: float | dict = 1.0) -> MeshSet:
    """``h_x`` defaults to ``1/|g|`` (half the pair Bohr radius), for which
    the hydrogenic ground state is reproduced exactly by the mesh."""
    xs, ys = {}, {}
    for a in partitions:
        g = abs(system.coulomb_strength(a))
        ha = hx[a] if isinstance(hx, dict) else (hx if hx is not None else 1.0 / g)
        hb = hy[a] if isinstance(hy, dict) else hy
        xs[a] = LagrangeBasis(Nx, ha)
        ys[a] = LagrangeBasis(Ny, hb)
    return MeshSet(xs, ys)


# -- rotation kernels ---------------------------------------------------------

@dataclass
class RotationKernel:
    """Geometry and recoupling linking set ``alpha`` (rows) to set ``beta``.

    ``xb, yb`` have shape ``(Nx, Ny, K)``; ``kernel`` has shape
    ``(nrows, ncols, Nx, Ny, K)`` and already contains the angular weights
    and the reduced-radial factor ``x y / (x_beta y_beta)``.
    """

    alpha: int
    beta: int
    rows: list
    cols: list
    x: np.ndarray
    y: np.ndarray
    xb: np.ndarray
    yb: np.ndarray
    kernel: np.ndarray

    def radius_defect(self) -> float:
        r2 = self.x[:, None, None] ** 2 + self.y[None, :, None] ** 2
        return float(np.max(np.abs(self.xb**2 + self.yb**2 - r2) / r2))


def build_rotation_kernel(system: ThreeBodySystem, alpha: int, beta: int, rows, cols, L: int,
                          x: np.ndarray, y: np.ndarray, grid: AngularGrid) -> RotationKernel:
    R = system.rotation(alpha, beta)
    X = x[:, None, None]
    Y = y[None, :, None]
    u = grid.abscissas[None, None, :]
    xb = np.sqrt(np.clip(R[0, 0] ** 2 * X * X + R[0, 1] ** 2 * Y * Y
                         + 2 * R[0, 0] * R[0, 1] * X * Y * u, 0, None))
    yb = np.sqrt(np.clip(R[1, 0] ** 2 * X * X + R[1, 1] ** 2 * Y * Y
                         + 2 * R[1, 0] * R[1, 1] * X * Y * u, 0, None))
    K = rotation_kernel(rows, cols, L, R, X, Y, u)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(xb * yb > 0, X * Y / (xb * yb), 0.0)
    K = K * (grid.weights * ratio)[None, None]
    return RotationKernel(alpha, beta, list(rows), list(cols), np.asarray(x), np.asarray(y),
                          xb, yb, K)


def projection_blocks(rk: RotationKernel, bx: LagrangeBasis, by: LagrangeBasis,
                      mask: np.ndarray | None = None) -> np.ndarray:
    """Matrices mapping set-beta coefficients onto set-alpha point values.

    Returns ``P[c, c', i, j, i', j']`` with ``(i, j)`` the set-alpha mesh
    point; rows outside ``mask`` are left zero, as are rotated points
    beyond the last node of either set-beta basis.
    """
    Nx, Ny, K = rk.xb.shape
    nr, nc = len(rk.rows), len(rk.cols)
    if mask is None:
        mask = np.ones((Nx, Ny), dtype=bool)
    ii, jj = np.nonzero(mask)
    xb, yb = rk.xb[ii, jj], rk.yb[ii, jj]
    # beyond its last node an expansion is polynomial extrapolation
    Fx = bx.values(xb) * (xb <= bx.points[-1])[..., None]    # (m, K, Nx')
    Fy = by.values(yb) * (yb <= by.points[-1])[..., None]    # (m, K, Ny')
    out = np.zeros((nr, nc, Nx, Ny, bx.N, by.N))
    for c in range(nr):
        for cp in range(nc):
            w = rk.kernel[c, cp][ii, jj]   # (m, K)
            if not np.any(w):
                continue
            out[c, cp, ii, jj] = np.matmul(np.swapaxes(Fx * w[..., None], 1, 2), Fy)
    return out


# -- problem definition -------------------------------------------------------

@dataclass
class SeparableResidual:
    """Model residual ``|phi Y_c> lambda(y) <phi Y_c|`` in channel ``(l_x, l_y)``.

    Replaces ``W_alpha`` (and the inter-component couplings are switched
    off) to reduce the three-body equations to a two-body problem that an
    ODE solver handles independently.
    """

    partition: int
    state: object
    l_y: int
    strength: object  # callable on complex y

    @property
    def channel(self) -> PartialWaveChannel:
        return PartialWaveChannel(self.state.l, self.l_y)

    def block(self, bx: LagrangeBasis, by: LagrangeBasis, theta: float) -> np.ndarray:
        ph = np.exp(1j * theta)
        v = np.sqrt(bx.weights) * self.state(bx.points * ph)
        lam = np.asarray(self.strength(by.points * ph), dtype=complex)
        return ph * np.kron(np.outer(v, v), np.diag(lam))


@dataclass
class FMProblem:
    """Everything that fixes the discretization apart from ``E`` and ``theta``."""

    system: ThreeBodySystem
    L: int
    channels: list
    split: MerkurievSplit
    meshes: MeshSet
    layout: ComponentLayout
    grid: AngularGrid
    screening: ScreeningProfile | None = field(default_factory=ScreeningProfile)
    couplings: bool = True
    residual_model: SeparableResidual | None = None
    max_unknowns: int = 20000
    _proj: dict = field(default_factory=dict, repr=False)
    _wkern: dict = field(default_factory=dict, repr=False)

    @property
    def parity(self) -> int:
        return self.channels[0].parity

    @property
    def components(self) -> tuple[int, ...]:
        return self.layout.independent

    def offsets(self) -> dict:
        out, k = {}, 0
        for a in self.components:
            out[a] = k
            k += len(self.channels) * self.meshes.size(a)
        return out

    @property
    def dimension(self) -> int:
        return sum(len(self.channels) * self.meshes.size(a) for a in self.components)

    def check_size(self):
        if self.dimension > self.max_unknowns:
            raise ResourceError(f"{self.dimension} unknowns exceed the limit of "
                                f"{self.max_unknowns}; reduce N or lmax")

    def projection(self, alpha: int, beta: int) -> np.ndarray:
        """Cached ``P[c, c', i, j, i', j']`` from set ``beta`` to set ``alpha``."""
        key = (alpha, beta)
        if key not in self._proj:
            m = self.meshes
            rk = build_rotation_kernel(self.system, alpha, beta, self.channels, self.channels,
                                       self.L, m.x[alpha].points, m.y[alpha].points, self.grid)
            self._proj[key] = projection_blocks(rk, m.x[beta], m.y[beta])
        return self._proj[key]

    def multipole(self, cols=None) -> np.ndarray:
        """``G[c, c', k]`` times the angular weights, rows = mesh channels."""
        cols = self.channels if cols is None else cols
        key = tuple(cols)
        if key not in self._wkern:
            u = self.grid.abscissas
            G = rotation_kernel(self.channels, cols, self.L, np.eye(2), np.ones_like(u),
                                np.ones_like(u), u)
            self._wkern[key] = G * self.grid.weights
        return self._wkern[key]


def angular_order(lmax: int, minimum: int = 24) -> int:
    """Default Gauss-Legendre order for the rotation integrals."""
    return max(2 * lmax + 6, minimum)


def build_problem(system: ThreeBodySystem, L: int, lmax: int, Nx: int, Ny: int, *,
                  hx=None, hy=1.0, spin: int | None = None, parity: int | None = None,
                  cutoffs=None, screening: ScreeningProfile | None = None,
                  order: int | None = None, couplings: bool = True,
                  components: Sequence[int] | None = None,
                  residual_model: SeparableResidual | None = None,
                  max_unknowns: int = 20000) -> FMProblem:
    from .potentials import default_cutoffs
    if lmax < L and parity in (None, (-1) ** L):
        raise ChannelConfigError(f"lmax={lmax} < L={L} leaves no natural-parity channels")
    channels = enumerate_channels(lmax, L, parity)
    split = MerkurievSplit(system, cutoffs if cutoffs is not None else default_cutoffs(system))
    layout = component_layout(system, split, spin)
    if layout.exchange is not None:
        k = 3 - sum(layout.exchange)
        if split.cutoffs[k] is not None:
            raise ChannelConfigError("short-range splitting of the identical-particle pair "
                                     "is not supported")
    if components is not None:
        keep = tuple(a for a in layout.independent if a in components)
        if not keep:
            raise ChannelConfigError(f"none of the components {components} is independent")
        inst = tuple(i for i in layout.instances if i.source in keep)
        layout = ComponentLayout(keep, inst, layout.exchange, layout.spin)
    parts = sorted({i.partition for i in layout.instances})
    meshes = default_meshes(system, parts, Nx, Ny, hx, hy)
    grid = gauss_legendre(order if order is not None else angular_order(lmax))
    prob = FMProblem(system, L, channels, split, meshes, layout, grid,
                     screening if screening is not None else ScreeningProfile(),
                     couplings, residual_model, max_unknowns)
    prob.check_size()
    return prob


# -- left-hand side -------------------------------------------------------------

def three_body_block(prob: FMProblem, alpha: int, theta: float) -> np.ndarray:
    """``W_{cc'}(x_i, y_j)`` at the scaled mesh points, shape ``(nc, nc, Nx, Ny)``."""
    X, Y = prob.meshes.grid(alpha)
    u = prob.grid.abscissas
    W = prob.split.three_body_term(alpha, X[..., None], Y[..., None], u, theta)
    G = prob.multipole()
    return np.einsum("abk,ijk->abij", G, W)


def short_range(prob: FMProblem, alpha: int, theta: float) -> np.ndarray:
    X, Y = prob.meshes.grid(alpha)
    return np.asarray(prob.split.short(alpha, X, Y, theta), dtype=complex)


def diagonal_block(prob: FMProblem, alpha: int, E: float, theta: float) -> np.ndarray:
    """``(e^{-2i theta} T + V_alpha + W_alpha - E)`` over the channels of ``alpha``."""
    bx, by = prob.meshes.x[alpha], prob.meshes.y[alpha]
    nc, Nx, Ny = len(prob.channels), bx.N, by.N
    n = Nx * Ny
    ph2 = np.exp(-2j * theta)
    out = np.zeros((nc * n, nc * n), dtype=complex)
    Vx = prob.split.pair(alpha, bx.points, theta)
    pot = np.broadcast_to(np.asarray(Vx)[:, None], (Nx, Ny)).ravel()
    for c, ch in enumerate(prob.channels):
        Tx = kinetic_matrix(bx, ch.l_x)
        Ty = kinetic_matrix(by, ch.l_y)
        blk = ph2 * (np.kron(Tx, np.eye(Ny)) + np.kron(np.eye(Nx), Ty))
        blk[np.diag_indices(n)] += pot - E
        out[c * n:(c + 1) * n, c * n:(c + 1) * n] = blk
    model = prob.residual_model
    if model is not None:
        if model.partition == alpha and model.channel in prob.channels:
            c = prob.channels.index(model.channel)
            out[c * n:(c + 1) * n, c * n:(c + 1) * n] += model.block(bx, by, theta)
    else:
        W = three_body_block(prob, alpha, theta)
        for c in range(nc):
            for cp in range(nc):
                idx = np.arange(n)
                out[c * n + idx, cp * n + idx] += W[c, cp].ravel()
    return out


def coupling_block(prob: FMProblem, alpha: int, inst: Instance, theta: float) -> np.ndarray:
    """``V^s_alpha`` times component ``inst.partition`` seen from set ``alpha``,
    as a matrix from the coefficients of ``inst.source`` to those of ``alpha``."""
    P = prob.projection(alpha, inst.partition)
    Vs = short_range(prob, alpha, theta) * prob.meshes.rho(alpha)
    nc = len(prob.channels)
    na, nb = prob.meshes.size(alpha), prob.meshes.size(inst.partition)
    out = np.zeros((nc * na, nc * nb), dtype=complex)
    vs = Vs.ravel()
    for c in range(nc):
        for cp, ch in enumerate(prob.channels):
            f = inst.factor(ch)
            out[c * na:(c + 1) * na, cp * nb:(cp + 1) * nb] = (
                f * vs[:, None] * P[c, cp].reshape(na, nb))
    return out


@dataclass
class CSLinearSystem:
    problem: FMProblem
    E: float
    theta: float
    matrix: np.ndarray
    rhs: np.ndarray | None = None
    entrance: object | None = None

    @property
    def dimension(self) -> int:
        return self.matrix.shape[0]

    def block(self, alpha: int, beta: int) -> np.ndarray:
        off = self.problem.offsets()
        na = len(self.problem.channels) * self.problem.meshes.size(alpha)
        nb = len(self.problem.channels) * self.problem.meshes.size(beta)
        return self.matrix[off[alpha]:off[alpha] + na, off[beta]:off[beta] + nb]

    def unpack(self, vec: np.ndarray) -> dict:
        """Split a solution vector into ``C[alpha]`` of shape ``(nc, Nx, Ny)``."""
        p = self.problem
        out = {}
        for a, o in p.offsets().items():
            shp = (len(p.channels), p.meshes.x[a].N, p.meshes.y[a].N)
            out[a] = vec[o:o + int(np.prod(shp))].reshape(shp)
        return out


def assemble_system(prob: FMProblem, E: float, theta: float) -> CSLinearSystem:
    """Left-hand side of the complex-scaled FM equations at energy ``E``."""
    if not 0.0 <= theta < math.pi / 4:
        raise InvalidInputError("complex-scaling angle must lie in [0, pi/4)")
    prob.check_size()
    off = prob.offsets()
    M = np.zeros((prob.dimension, prob.dimension), dtype=complex)
    for a in prob.components:
        blk = diagonal_block(prob, a, E, theta)
        s = slice(off[a], off[a] + blk.shape[0])
        M[s, s] = blk
        if not prob.couplings:
            continue
        for inst in prob.layout.instances:
            if inst.partition == a:
                continue
            cb = coupling_block(prob, a, inst, theta)
            o = off[inst.source]
            M[s, o:o + cb.shape[1]] += cb
    return CSLinearSystem(prob, E, theta, M)


# -- incoming wave and right-hand side ---------------------------------------

class RHSDivergenceError(AssertionError):
    """The inhomogeneous term does not decay towards the edge of the y mesh."""


@dataclass
class IncomingWave:
    """A complex-scaled distorted wave viewed as a three-body function.

    ``wave`` must already be scaled to the angle of the system it is used
    with. Values are reduced-radial: ``phi_c(x e^{i theta}) u_c(y e^{i theta})``.
    """

    wave: object  # DistortedWave
    partition: int
    column: int | None = None  # open-channel column; defaults to the entrance

    @property
    def theta(self) -> float:
        return self.wave.theta

    @property
    def channels(self) -> list:
        return [c.pw for c in self.wave.aux.channels]

    def values(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        phi = self.wave.target(np.broadcast_to(x, shape))
        u = self.wave.radial(np.broadcast_to(y, shape), self.column)
        return phi * u

    def auxiliary_values(self, x, y) -> np.ndarray:
        """``W~ Phi`` per auxiliary channel (zero for plane waves)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        shape = np.broadcast(x, y).shape
        if self.wave.aux.is_free():
            return np.zeros((len(self.channels),) + shape, dtype=complex)
        ph = np.exp(1j * self.theta)
        yb = np.broadcast_to(y, shape)
        lam = self.wave.aux.matrix(yb * ph)
        u = self.wave.radial(yb, self.column)
        phi = self.wave.target(np.broadcast_to(x, shape))
        return phi * np.einsum("ab...,b...->a...", lam, u)


def incoming_instances(prob: FMProblem, entrance: int) -> list[Instance]:
    """The entrance partition and its exchange images."""
    if entrance not in prob.components:
        raise InvalidInputError(f"entrance partition {entrance} is not an independent component")
    return [i for i in prob.layout.instances if i.source == entrance]


def project_rotated_incoming(prob: FMProblem, alpha: int, inst: Instance,
                             inc: IncomingWave) -> np.ndarray:
    """Channel projections in set ``alpha`` of the incoming wave seen as
    component ``inst.partition``; point values of shape ``(nc, Nx, Ny)``."""
    m = prob.meshes
    rk = build_rotation_kernel(prob.system, alpha, inst.partition, prob.channels, inc.channels,
                               prob.L, m.x[alpha].points, m.y[alpha].points, prob.grid)
    vals = inc.values(rk.xb, rk.yb)
    f = np.array([inst.factor(c) for c in inc.channels], dtype=float)
    return np.einsum("abijk,b,bijk->aij", rk.kernel, f, vals)


def residual_on_incoming(prob: FMProblem, inc: IncomingWave, theta: float,
                         residual: str = "W") -> np.ndarray:
    """Point values of ``(R Phi)_c`` in the entrance set, where ``R`` is
    ``W_alpha`` (``residual='W'``) or the full ``V_beta + V_gamma``
    (``residual='V'``), or the separable model when one is configured."""
    a = inc.partition
    X, Y = prob.meshes.grid(a)
    nc = len(prob.channels)
    model = prob.residual_model
    if model is not None:
        out = np.zeros((nc,) + X.shape, dtype=complex)
        if model.channel not in prob.channels:
            return out
        bx = prob.meshes.x[a]
        ph = np.exp(1j * theta)
        vals = inc.values(X, Y)
        w = bx.weights * model.state(bx.points * ph)
        lam = np.asarray(model.strength(prob.meshes.y[a].points * ph))
        c = prob.channels.index(model.channel)
        for k, pw in enumerate(inc.channels):
            if pw == model.channel:
                ov = ph * np.einsum("i,ij->j", w, vals[k])
                out[c] += model.state(X * ph) * (lam * ov)[None, :]
        return out
    u = prob.grid.abscissas
    if residual == "W":
        R = prob.split.three_body_term(a, X[..., None], Y[..., None], u, theta)
    else:
        R = prob.split.residual(a, X[..., None], Y[..., None], u, theta)
    G = prob.multipole(inc.channels)
    vals = inc.values(X, Y)
    return np.einsum("abk,ijk,bij->aij", G, R, vals)


def auxiliary_on_incoming(prob: FMProblem, inc: IncomingWave) -> np.ndarray:
    """Point values of ``(W~ Phi)_c`` in the entrance set."""
    X, Y = prob.meshes.grid(inc.partition)
    out = np.zeros((len(prob.channels),) + X.shape, dtype=complex)
    aux = inc.auxiliary_values(X, Y)
    for k, pw in enumerate(inc.channels):
        if pw in prob.channels:
            out[prob.channels.index(pw)] += aux[k]
    return out


def build_rhs(sys: CSLinearSystem, wave, entrance: int, check_tail: bool = True) -> np.ndarray:
    """Inhomogeneous term ``-(V^s_alpha sum_{beta != alpha} Phi_beta
    + screened (W_alpha - W~_alpha) Phi delta_{alpha a})``.

    ``wave`` is a distorted wave scaled to ``sys.theta`` (or an
    :class:`IncomingWave`).
    """
    prob = sys.problem
    inc = wave if isinstance(wave, IncomingWave) else IncomingWave(wave, entrance)
    if abs(inc.theta - sys.theta) > 1e-14:
        raise InvalidInputError("incoming wave and linear system use different scaling angles")
    insts = incoming_instances(prob, entrance)
    off = prob.offsets()
    rhs = np.zeros(prob.dimension, dtype=complex)
    for a in prob.components:
        b = np.zeros((len(prob.channels), prob.meshes.x[a].N, prob.meshes.y[a].N), dtype=complex)
        if prob.couplings:
            Vs = short_range(prob, a, sys.theta)
            for inst in insts:
                if inst.partition == a:
                    continue
                b += Vs * project_rotated_incoming(prob, a, inst, inc)
        if a == entrance:
            res = residual_on_incoming(prob, inc, sys.theta) - auxiliary_on_incoming(prob, inc)
            if prob.screening is not None:
                res = res * prob.screening.factor(prob.meshes.y[a].points)[None, None, :]
            b += res
        b *= prob.meshes.rho(a)[None]
        if check_tail:
            check_rhs_tail(b, prob.meshes.y[a].points)
        rhs[off[a]:off[a] + b.size] = -b.ravel()
    sys.rhs = rhs
    sys.entrance = entrance
    return rhs


def check_rhs_tail(b: np.ndarray, y: np.ndarray, fraction: float = 0.2, ratio: float = 0.1):
    """Raise if the last ``fraction`` of the y mesh carries a sizeable part
    of the inhomogeneous term (a sign of an unscreened long-range residual)."""
    if not np.any(b):
        return
    tail = y >= y[-1] * (1 - fraction)
    top = np.max(np.abs(b))
    edge = np.max(np.abs(b[..., tail]))
    if edge > ratio * top:
        raise RHSDivergenceError(f"inhomogeneous term does not decay in y: edge/max = {edge / top:.2e}")
