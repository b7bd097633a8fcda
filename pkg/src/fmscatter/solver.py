"""Linear solve, Green's-theorem amplitudes, S-matrix and cross sections.

With channel functions normalized as ``phi_b(x) j^(q_b y)`` the amplitude
from entrance ``a`` into exit ``b`` follows from the equation for component
``b`` alone,

    A~bar_ba = -<psi_b | V^s_b sum_{beta != b} Psi_beta + (W_b - W~_b) Psi_b>
               / sqrt(q_a q_b),

with the bilinear (non-conjugating) pairing. Other components enter only
through the compact ``V^s_b``, so the partial-wave truncation is the same
as in the linear system. Everything except the incoming wave of the exit
partition is integrated along the rotated contour on the assembly mesh;
that incoming wave is not compact and is integrated on the real axis with
a dedicated quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math
import warnings

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .fm_assembler import (CSLinearSystem, FMProblem, IncomingWave, auxiliary_on_incoming,
                           incoming_instances, project_rotated_incoming, residual_on_incoming,
                           short_range)
from .kinematics import InvalidInputError


class SingularSystemError(ArithmeticError):
    """The energy coincides with an eigenvalue of the discretized operator."""


class ThresholdError(ValueError):
    """Cross sections are undefined exactly at a channel threshold."""


class AccuracyWarning(UserWarning):
    pass


# -- linear solve -----------------------------------------------------------

@dataclass
class FMSolution:
    system: CSLinearSystem
    coefficients: np.ndarray       # (dimension,) or (dimension, nrhs)
    residual: float
    condition: float

    @property
    def problem(self) -> FMProblem:
        return self.system.problem

    def components(self, column: int | None = None) -> dict:
        vec = self.coefficients if self.coefficients.ndim == 1 else self.coefficients[:, column or 0]
        return self.system.unpack(vec)


def _condition(M: np.ndarray, lu) -> float:
    anorm = np.linalg.norm(M, 1)
    rcond, info = lapack.zgecon(lu[0], anorm, norm="1")
    return math.inf if rcond == 0 else 1.0 / rcond


def nearest_eigenvalues(sys: CSLinearSystem, k: int = 3) -> np.ndarray:
    """Eigenvalues of ``H`` closest to ``E`` (``H = M + E``)."""
    from scipy.sparse.linalg import eigs
    n = sys.dimension
    H = sys.matrix + sys.E * np.eye(n)
    k = min(k, n - 2)
    shift = sys.E + 1e-7 * (1 + abs(sys.E))
    return eigs(H, k=k, sigma=shift, return_eigenvectors=False)


def solve(sys: CSLinearSystem, rhs: np.ndarray | None = None, refine: int = 2,
          max_condition: float = 1e13) -> FMSolution:
    """Dense LU solve with iterative refinement and a 1-norm condition estimate."""
    b = sys.rhs if rhs is None else rhs
    if b is None:
        raise InvalidInputError("the system has no right-hand side")
    b = np.asarray(b, dtype=complex)
    M = sys.matrix
    if not np.any(b):
        return FMSolution(sys, np.zeros_like(b), 0.0, math.nan)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lu = lu_factor(M, check_finite=False)
    cond = _condition(M, lu)
    if not np.isfinite(cond) or cond > max_condition:
        near = nearest_eigenvalues(sys)
        near = near[np.argsort(np.abs(near - sys.E))]
        raise SingularSystemError(
            f"matrix is singular to working precision at E={sys.E} (condition {cond:.2e}); "
            f"nearest eigenvalue {near[0]:.8g}")
    x = lu_solve(lu, b, check_finite=False)
    for _ in range(refine):
        r = b - M @ x
        x = x + lu_solve(lu, r, check_finite=False)
    res = np.linalg.norm(b - M @ x) / np.linalg.norm(b)
    return FMSolution(sys, x, float(res), float(cond))


# -- amplitudes ---------------------------------------------------------------

def _point_values(prob: FMProblem, C: np.ndarray, alpha: int) -> np.ndarray:
    return C / prob.meshes.rho(alpha)[None]


def outgoing_in_set(sol: FMSolution, b: int, column: int | None = None,
                    own: bool = True) -> np.ndarray:
    """Point values in set ``b`` of the outgoing components; ``own=False``
    leaves out the instances living in partition ``b``."""
    prob = sol.problem
    comps = sol.components(column)
    nc = len(prob.channels)
    mx, my = prob.meshes.x[b], prob.meshes.y[b]
    out = np.zeros((nc, mx.N, my.N), dtype=complex)
    for inst in prob.layout.instances:
        C = comps[inst.source]
        f = np.array([inst.factor(c) for c in prob.channels], dtype=float)
        if inst.partition == b:
            if own:
                out += f[:, None, None] * _point_values(prob, C, b)
            continue
        P = prob.projection(b, inst.partition)
        out += np.einsum("abijkl,b,bkl->aij", P, f, C)
    return out


def incoming_images_in_set(prob: FMProblem, inc_a: IncomingWave, b: int) -> np.ndarray:
    """Point values in set ``b`` of the incoming wave instances that live in
    other partitions."""
    nc = len(prob.channels)
    out = np.zeros((nc, prob.meshes.x[b].N, prob.meshes.y[b].N), dtype=complex)
    for inst in incoming_instances(prob, inc_a.partition):
        if inst.partition == b:
            continue
        out += project_rotated_incoming(prob, b, inst, inc_a)
    return out


def exit_vertices(prob: FMProblem, inc_b: IncomingWave, theta: float):
    """``(V^s_b psi_b)_c`` and ``((W_b - W~_b) psi_b)_c`` at the scaled mesh
    points of set ``b``."""
    b = inc_b.partition
    X, Y = prob.meshes.grid(b)
    vals = inc_b.values(X, Y)
    Vs = short_range(prob, b, theta)
    vs = np.zeros((len(prob.channels),) + X.shape, dtype=complex)
    for k, pw in enumerate(inc_b.channels):
        if pw in prob.channels:
            vs[prob.channels.index(pw)] += Vs * vals[k]
    dw = residual_on_incoming(prob, inc_b, theta, "W") - auxiliary_on_incoming(prob, inc_b)
    return vs, dw


def rotated_term(sol: FMSolution, inc_a: IncomingWave, inc_b: IncomingWave,
                 column: int | None = None) -> complex:
    """``<psi_b | V^s_b sum_{beta != b} Psi_beta + (W_b - W~_b) Psi~_b>`` on
    the scaled contour, without the Jacobian phase."""
    prob = sol.problem
    b = inc_b.partition
    theta = sol.system.theta
    others = outgoing_in_set(sol, b, column, own=False) + incoming_images_in_set(prob, inc_a, b)
    own = _point_values(prob, sol.components(column)[b], b)
    vs, dw = exit_vertices(prob, inc_b, theta)
    by = prob.meshes.y[b]
    w = np.outer(prob.meshes.x[b].weights, by.weights)
    # below breakup the integrand is confined to y_b of a few screening
    # radii; far out only discretization noise remains, amplified by the
    # growing exit wave, so it is screened like the inhomogeneous term
    if prob.screening is not None:
        w = w * prob.screening.factor(by.points)[None, :]
    return complex(np.sum(w[None] * (vs * others + dw * own)))


def _composite_legendre(R: float, panel: float, order: int):
    n = max(1, int(math.ceil(R / panel)))
    t, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, R, n + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * (edges[1:] - edges[:-1])
    y = (mid[:, None] + half[:, None] * t[None]).ravel()
    wy = (half[:, None] * w[None]).ravel()
    return y, wy


def boundary_term(prob: FMProblem, inc_a: IncomingWave, inc_b: IncomingWave,
                  R: float | None = None, panel: float = 2.0, order: int = 16,
                  nx: int = 48, chunk: int = 256) -> complex:
    """``<psi_b | s(y) (W~_b - W_b) | Phi_a>`` on the real axis for exit and
    entrance waves of the same partition (both unscaled); ``s`` is the
    screening profile used in the inhomogeneous term."""
    if inc_a.partition != inc_b.partition:
        return 0.0
    if inc_a.theta or inc_b.theta:
        raise InvalidInputError("the boundary term uses unscaled incoming waves")
    a = inc_a.partition
    wa, wb = inc_a.wave, inc_b.wave
    R = min(wa.r_match, wb.r_match) if R is None else R
    states = [c.state for c in wa.aux.channels] + [c.state for c in wb.aux.channels]
    rate = min(2.0 / (s.bohr * s.n) for s in states)
    t, wt = np.polynomial.laguerre.laggauss(nx)
    x = t / rate
    wx = wt * np.exp(t) / rate
    y, wy = _composite_legendre(R, panel, order)
    # the solved components are driven by the screened residual
    wy = wy * prob.screening.factor(y)
    model = prob.residual_model
    ua = wa.radial(y, inc_a.column)        # (nch_a, ny)
    ub = wb.radial(y, inc_b.column)
    total = 0.0 + 0.0j
    # separable auxiliary potential: target states are orthonormal
    if not wa.aux.is_free():
        lam = wa.aux.matrix(y.astype(complex))
        total += np.einsum("ay,aby,by,y->", ub, lam, ua, wy)
    if model is not None:
        pa = np.array([_overlap(model.state, c.state) for c in wa.aux.channels])
        pb = np.array([_overlap(model.state, c.state) for c in wb.aux.channels])
        ka = np.array([c.pw == model.channel for c in wa.aux.channels])
        kb = np.array([c.pw == model.channel for c in wb.aux.channels])
        lam = np.asarray(model.strength(y.astype(complex)))
        fa = np.einsum("a,ay->y", pa * ka, ua)
        fb = np.einsum("a,ay->y", pb * kb, ub)
        return complex(total - np.sum(wy * fb * lam * fa))
    u = prob.grid.abscissas
    cols_a = inc_a.channels
    cols_b = inc_b.channels
    from .angular import rotation_kernel
    G = rotation_kernel(cols_b, cols_a, prob.L, np.eye(2), np.ones_like(u), np.ones_like(u), u)
    G = G * prob.grid.weights
    phia = wa.target(x)                      # (nch_a, nx)
    phib = wb.target(x)
    for s0 in range(0, len(y), chunk):
        sl = slice(s0, s0 + chunk)
        Vr = prob.split.three_body_term(a, x[:, None, None], y[None, sl, None], u[None, None, :])
        K = np.einsum("abk,ijk->abij", G, Vr)    # (nb, na, nx, ny)
        fa = phia[:, :, None] * ua[:, None, sl]
        fb = phib[:, :, None] * ub[:, None, sl]
        total -= np.einsum("aij,abij,bij,i,j->", fb, K, fa, wx, wy[sl])
    return complex(total)


def _overlap(s1, s2) -> float:
    if s1.l != s2.l or s1.strength != s2.strength:
        return 0.0
    return 1.0 if s1.n == s2.n else 0.0


@dataclass
class AmplitudeMatrix:
    """Amplitudes over a list of open binary channels ``(partition, column)``."""

    channels: list
    momenta: np.ndarray
    bar: np.ndarray
    tilde: np.ndarray
    labels: list = field(default_factory=list)

    @property
    def total(self) -> np.ndarray:
        return self.bar + self.tilde

    @property
    def S(self) -> np.ndarray:
        return np.eye(len(self.channels)) + 2j * self.total


def extract_amplitude(sol: FMSolution, inc_a: IncomingWave, inc_b: IncomingWave,
                      inc_a0: IncomingWave | None, inc_b0: IncomingWave | None,
                      column: int | None = None) -> complex:
    """``A-bar_ba``: rotated-contour part plus the real-axis boundary part."""
    qa = _momentum(inc_a)
    qb = _momentum(inc_b)
    val = -np.exp(2j * sol.system.theta) * rotated_term(sol, inc_a, inc_b, column)
    if inc_a.partition == inc_b.partition:
        if inc_a0 is None or inc_b0 is None:
            raise InvalidInputError("same-partition amplitudes need the unscaled waves")
        val += boundary_term(sol.problem, inc_a0, inc_b0)
    return val / math.sqrt(qa * qb)


def _momentum(inc: IncomingWave) -> float:
    w = inc.wave
    col = w.entrance_open_index if inc.column is None else inc.column
    return float(np.real(w.q[w.open[col]]))


def total_amplitude(bar: np.ndarray, tilde: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    bar = np.asarray(bar)
    tilde = np.asarray(tilde)
    if bar.shape != tilde.shape:
        raise InvalidInputError(f"amplitude shapes differ: {bar.shape} vs {tilde.shape}")
    A = bar + tilde
    return A, np.eye(A.shape[0]) + 2j * A if A.ndim == 2 else 1 + 2j * A


# -- observables ------------------------------------------------------------

@dataclass
class CrossSectionRecord:
    E: float
    L: int
    labels: list
    sigma: np.ndarray          # sigma[b, a] in a0^2
    sigma_inel: np.ndarray     # per entrance channel, a0^2

    @property
    def sigma_pi(self) -> np.ndarray:
        return self.sigma / math.pi

    @property
    def sigma_inel_pi(self) -> np.ndarray:
        return self.sigma_inel / math.pi


def cross_sections(A: np.ndarray, E: float, L: int, momenta, mass_factors,
                   labels=None, weight: float = 1.0) -> CrossSectionRecord:
    """Partial cross sections ``sigma_ba`` and total inelastic ``sigma_inel_a``.

    ``momenta`` are the scaled channel momenta ``q_a`` and ``mass_factors``
    the projectile-target reduced masses (units of m_e).
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    q = np.asarray(momenta, dtype=float)
    mu = np.asarray(mass_factors, dtype=float)
    if np.any(q <= 0):
        raise ThresholdError("cross section undefined at or below a channel threshold")
    pref = (2 * L + 1) * weight
    sigma = 2 * math.pi * pref * np.abs(A) ** 2 / (mu * q * q)[None, :]
    Saa = 1 + 2j * np.diag(A)
    inel = math.pi * pref * (1 - np.abs(Saa) ** 2) / (2 * mu * q * q)
    return CrossSectionRecord(E, L, list(labels or []), sigma, inel)


@dataclass
class UnitarityReport:
    defect: float                   # || S^dagger S - 1 ||_max
    column_defect: np.ndarray       # per entrance channel: | sum_b |S_ba|^2 - 1 |
    modulus_defect: np.ndarray      # | |S_aa| - 1 |
    inelastic_mismatch: np.ndarray  # sigma_inel - sum of explicit inelastic sigmas
    flagged: bool

    def as_dict(self) -> dict:
        return {"defect": self.defect, "column_defect": self.column_defect.tolist(),
                "modulus_defect": self.modulus_defect.tolist(),
                "inelastic_mismatch": self.inelastic_mismatch.tolist(), "flagged": self.flagged}


def unitarity_report(A: np.ndarray, record: CrossSectionRecord | None = None,
                     tol: float = 1e-3) -> UnitarityReport:
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    S = np.eye(A.shape[0]) + 2j * A
    D = S.conj().T @ S - np.eye(A.shape[0])
    col = np.abs(np.sum(np.abs(S) ** 2, axis=0) - 1)
    mod = np.abs(np.abs(np.diag(S)) - 1)
    if record is not None:
        off = record.sigma.copy()
        np.fill_diagonal(off, 0.0)
        mism = record.sigma_inel - off.sum(axis=0)
    else:
        mism = np.zeros(A.shape[0])
    defect = float(np.max(np.abs(D)))
    return UnitarityReport(defect, col, mod, mism, bool(np.max(col) > tol))
