"""Run orchestration: S-matrices over energy and partial-wave grids,
convergence sweeps and complex-scaled spectra.

The unit of work is one ``(L, spin)`` pair: its :class:`FMProblem` (and the
expensive rotation projections cached on it) is reused for every energy.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
import math
import os
import warnings

import numpy as np
from scipy.linalg import eigh, eigvals

from .distorted_waves import build_auxiliary, scale_incoming, solve_coupled_channels
from .fm_assembler import (FMProblem, IncomingWave, assemble_system, build_problem, build_rhs,
                           diagonal_block, identical_pair)
from .kinematics import ThreeBodySystem, channel_momentum, cyclic
from .potentials import ConfigError, ScreeningProfile, default_cutoffs
from .solver import (cross_sections, extract_amplitude, nearest_eigenvalues, solve,
                     unitarity_report)

WORKERS_ENV = "FMSCATTER_WORKERS"

_TARGETS = {frozenset(("e-", "p")): "H", frozenset(("e+", "e-")): "Ps",
            frozenset(("e+", "p")): "pe+"}


class RunError(RuntimeError):
    """A numerical failure, tagged with the energy and partial wave."""


@dataclass(frozen=True)
class Settings:
    """Numerical parameters of one run (all lengths in scaled units)."""

    N: int = 35
    lmax: int = 4
    theta_deg: float = 7.5
    hx: float | None = None
    hy: float = 1.5
    variant: str = "free"
    n_max: int = 2
    order: int | None = None
    x0_factor: float = 1.0
    y0: float = 10.0
    mu: float = 2.1
    y_cut: float = 32.0
    y_sc: float = 5.5
    n_exp: float = 2.0
    r_match: float = 250.0
    step: float = 0.01
    tolerance: float = 1e-3

    @property
    def theta(self) -> float:
        return math.radians(self.theta_deg)

    @property
    def screening(self) -> ScreeningProfile:
        return ScreeningProfile(self.y_cut, self.y_sc, self.n_exp)


# -- channels -------------------------------------------------------------------

def ground_threshold(system: ThreeBodySystem, partition: int) -> float:
    g = system.coulomb_strength(partition)
    if g >= 0:
        raise ConfigError(f"partition {partition} has no bound pair")
    return -g * g / 4.0


def channel_label(system: ThreeBodySystem, partition: int, n: int = 1) -> str:
    p = system.particles
    b, c = cyclic(partition)
    names = frozenset((p[b].name, p[c].name))
    target = _TARGETS.get(names, f"({p[b].name}{p[c].name})")
    return f"{p[partition].name}+{target}({n}s)"


def entrance_partitions(system: ThreeBodySystem, split_partitions) -> list[int]:
    """Partitions carrying an independent component with a bound pair."""
    return [a for a in split_partitions if system.coulomb_strength(a) < 0]


def spin_states(system: ThreeBodySystem) -> list[tuple[int | None, float]]:
    """``(S, weight)`` pairs: singlet/triplet of the identical pair, if any."""
    if identical_pair(system) is None:
        return [(None, 1.0)]
    return [(0, 0.25), (1, 0.75)]


def open_excited(system: ThreeBodySystem, partitions, E: float) -> list[str]:
    """Excited binary channels that are open but not carried in the S-matrix."""
    out = []
    for a in partitions:
        g = system.coulomb_strength(a)
        for n in range(2, 6):
            if E > -g * g / (4.0 * n * n):
                out.append(channel_label(system, a, n).replace(f"({n}s)", f"(n={n})"))
    return out


def make_problem(system: ThreeBodySystem, L: int, settings: Settings,
                 spin: int | None = None) -> FMProblem:
    cut = default_cutoffs(system, settings.y0, settings.mu, settings.x0_factor)
    return build_problem(system, L, max(settings.lmax, L), settings.N, settings.N,
                         hx=settings.hx, hy=settings.hy, spin=spin, cutoffs=cut,
                         screening=settings.screening, order=settings.order)


# -- S-matrix -------------------------------------------------------------------

@dataclass
class SMatrixResult:
    """Amplitudes among the open ground-state channels at one ``(E, L, spin)``."""

    E: float
    L: int
    spin: int | None
    partitions: list
    labels: list
    momenta: np.ndarray
    mass_factors: np.ndarray
    A: np.ndarray
    condition: float
    residual: float
    excluded_open: list = field(default_factory=list)

    @property
    def S(self) -> np.ndarray:
        return np.eye(len(self.partitions)) + 2j * self.A

    def phase_shift(self, k: int = 0) -> float:
        """Elastic phase shift of channel ``k``, ``arg(S_kk)/2``."""
        return float(np.angle(self.S[k, k]) / 2)

    @property
    def unitarity_defect(self) -> float:
        """Largest ``| sum_b |S_ba|^2 - 1 |`` over entrance channels."""
        S = self.S
        return float(np.max(np.abs(np.sum(np.abs(S) ** 2, axis=0) - 1)))


def s_matrix(problem: FMProblem, E: float, settings: Settings,
             partitions: list[int] | None = None, auxiliaries: dict | None = None) -> SMatrixResult:
    """Solve the FM equations for every open ground-state entrance channel."""
    system = problem.system
    theta = settings.theta
    cand = entrance_partitions(system, problem.layout.independent)
    if partitions is not None:
        cand = [a for a in cand if a in partitions]
    parts = [a for a in cand if E > ground_threshold(system, a)]
    if not parts:
        raise RunError(f"no entrance channel is open at E={E}")
    aux = auxiliaries if auxiliaries is not None else {}
    waves = {}
    for a in parts:
        if a not in aux:
            aux[a] = build_auxiliary(system, a, problem.L, settings.variant,
                                     n_max=settings.n_max, lmax=max(settings.lmax, problem.L))
        w0 = solve_coupled_channels(aux[a], E, settings.r_match, settings.step)
        waves[a] = (w0, scale_incoming(w0, theta))
    sys = assemble_system(problem, E, theta)
    rhs = np.column_stack([build_rhs(sys, waves[a][1], a, check_tail=False) for a in parts])
    sol = solve(sys, rhs)
    n = len(parts)
    A = np.zeros((n, n), dtype=complex)
    for j, a in enumerate(parts):
        ia, ia0 = IncomingWave(waves[a][1], a), IncomingWave(waves[a][0], a)
        for i, b in enumerate(parts):
            ib, ib0 = IncomingWave(waves[b][1], b), IncomingWave(waves[b][0], b)
            A[i, j] = extract_amplitude(sol, ia, ib, ia0, ib0, column=j)
            if a == b:
                w0 = waves[a][0]
                k = w0.entrance_open_index
                A[i, j] += w0.amplitude[k, k]
    q = np.array([channel_momentum(E, ground_threshold(system, a)) for a in parts], dtype=float)
    mu = np.array([system.channel_mass_factor[a] for a in parts])
    return SMatrixResult(E, problem.L, problem.layout.spin, parts,
                         [channel_label(system, a) for a in parts], q, mu, A,
                         sol.condition, sol.residual, open_excited(system, parts, E))


def scattering_records(res: SMatrixResult, weight: float, tolerance: float) -> list[dict]:
    """Flat per-(entrance, exit) records with cross sections and flags."""
    rec = cross_sections(res.A, res.E, res.L, res.momenta, res.mass_factors, res.labels, weight)
    rep = unitarity_report(res.A, rec, tolerance)
    S = res.S
    out = []
    for j, a in enumerate(res.labels):
        for i, b in enumerate(res.labels):
            out.append({
                "L": res.L, "spin": res.spin, "spin_weight": weight,
                "entrance": a, "exit": b,
                "S_re": float(S[i, j].real), "S_im": float(S[i, j].imag),
                "sigma": float(rec.sigma[i, j]),
                "sigma_inel": float(rec.sigma_inel[j]) if i == j else None,
                "phase_shift": res.phase_shift(j) if i == j else None,
                "unitarity_defect": float(rep.column_defect[j]),
                "modulus_defect": float(rep.modulus_defect[j]),
                "flag_unitarity": bool(rep.column_defect[j] > tolerance),
                "flag_condition": bool(res.condition > 1e10),
                "excluded_open": list(res.excluded_open),
                "condition": float(res.condition),
            })
    return out


def _job(args):
    system, L, spin, weight, energies, settings, partitions = args
    out = []
    try:
        prob = make_problem(system, L, settings, spin)
    except (ArithmeticError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise RunError(f"L={L}, spin={spin}: {exc}") from exc
    aux: dict = {}
    for E in energies:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", RuntimeWarning)
                res = s_matrix(prob, E, settings, partitions, aux)
        except (ArithmeticError, RunError, np.linalg.LinAlgError) as exc:
            raise RunError(f"E={E}, L={L}, spin={spin}: {exc}") from exc
        for r in scattering_records(res, weight, settings.tolerance):
            r["E"] = float(E)
            out.append(r)
    return out


def worker_count() -> int:
    try:
        n = int(os.environ.get(WORKERS_ENV, "1"))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None
    return max(1, n)


def scan(system: ThreeBodySystem, energies, Ls, settings: Settings,
         partitions: list[int] | None = None, spins=None, workers: int | None = None) -> list[dict]:
    """All ``(E, L, spin)`` records, sorted deterministically."""
    states = spin_states(system) if spins is None else [s for s in spin_states(system)
                                                        if s[0] in spins]
    jobs = [(system, L, s, w, list(energies), settings, partitions) for L in Ls for s, w in states]
    workers = worker_count() if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            chunks = list(pool.map(_job, jobs))
    else:
        chunks = [_job(j) for j in jobs]
    records = [r for c in chunks for r in c]
    records.sort(key=lambda r: (r["E"], r["L"], -1 if r["spin"] is None else r["spin"],
                                r["entrance"], r["exit"]))
    return records


def summed_cross_sections(records: list[dict]) -> list[dict]:
    """Spin-weighted partial cross sections summed over the computed L."""
    acc: dict = {}
    for r in records:
        key = (r["E"], r["entrance"], r["exit"])
        d = acc.setdefault(key, {"E": r["E"], "entrance": r["entrance"], "exit": r["exit"],
                                 "sigma": 0.0, "sigma_inel": 0.0, "L_values": set(),
                                 "max_unitarity_defect": 0.0, "flagged": False})
        d["sigma"] += r["sigma"]
        if r["sigma_inel"] is not None:
            d["sigma_inel"] += r["sigma_inel"]
        d["L_values"].add(r["L"])
        d["max_unitarity_defect"] = max(d["max_unitarity_defect"], r["unitarity_defect"])
        d["flagged"] = d["flagged"] or r["flag_unitarity"] or r["flag_condition"]
    out = []
    for key in sorted(acc):
        d = acc[key]
        d["L_values"] = sorted(d["L_values"])
        if d["entrance"] != d["exit"]:
            d["sigma_inel"] = None
        out.append(d)
    return out


# -- convergence sweeps ---------------------------------------------------------

SWEEP_AXES = {"N": "N", "theta": "theta_deg", "lmax": "lmax", "y_cut": "y_cut"}


def sweep(system: ThreeBodySystem, E: float, L: int, settings: Settings, axis: str, values,
          partitions: list[int] | None = None, spin: int | None = None) -> list[dict]:
    """Observables versus one numerical parameter, with deltas to the last row."""
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}; expected one of {sorted(SWEEP_AXES)}")
    if not len(values):
        raise ConfigError("sweep needs at least one value")
    states = spin_states(system)
    if spin is not None:
        states = [s for s in states if s[0] == spin]
    name = SWEEP_AXES[axis]
    rows = []
    for v in values:
        st = replace(settings, **{name: int(v) if axis in ("N", "lmax") else float(v)})
        for s, w in states:
            prob = make_problem(system, L, st, s)
            try:
                res = s_matrix(prob, E, st, partitions)
            except (ArithmeticError, RunError) as exc:
                raise RunError(f"{axis}={v}, E={E}, L={L}: {exc}") from exc
            rec = cross_sections(res.A, E, L, res.momenta, res.mass_factors, res.labels, w)
            rows.append({"axis": axis, "value": v, "spin": s, "E": E, "L": L,
                         "phase_shift": res.phase_shift(0),
                         "S": [[complex(z) for z in row] for row in res.S],
                         "A": [[complex(z) for z in row] for row in res.A],
                         "sigma": rec.sigma.tolist(),
                         "unitarity_defect": res.unitarity_defect})
    for s, _ in states:
        mine = [r for r in rows if r["spin"] == s]
        ref = np.array(mine[-1]["S"])
        for r in mine:
            r["delta_S"] = float(np.max(np.abs(np.array(r["S"]) - ref)))
            r["delta_phase"] = abs(r["phase_shift"] - mine[-1]["phase_shift"])
    return rows


def sweep_summary(rows: list[dict]) -> dict:
    """Largest amplitude spread relative to the largest amplitude, and
    whether the unitarity defect shrinks monotonically along the sweep."""
    out = {}
    for s in sorted({r["spin"] for r in rows}, key=lambda v: -1 if v is None else v):
        mine = [r for r in rows if r["spin"] == s]
        A = np.array([np.array(r["A"]) for r in mine])
        diff = np.abs(A[:, None] - A[None, :]).max(axis=(0, 1))
        spread = float(diff.max() / max(float(np.abs(A).max()), 1e-300))
        d = [r["unitarity_defect"] for r in mine]
        out[str(s)] = {"relative_spread": spread,
                       "defect_monotone": bool(all(b < a for a, b in zip(d, d[1:]))),
                       "defects": d}
    return out


# -- spectra --------------------------------------------------------------------

@dataclass
class SpectrumLine:
    value: complex
    kind: str          # "bound", "continuum", "other"
    threshold: float | None = None
    angle_deg: float | None = None


def thresholds(system: ThreeBodySystem, partitions, n_max: int = 3) -> list[float]:
    out = set()
    for a in partitions:
        g = system.coulomb_strength(a)
        if g < 0:
            out.update(-g * g / (4.0 * n * n) for n in range(1, n_max + 1))
    out.add(0.0)
    return sorted(out)


def cs_eigenvalues(problem: FMProblem, theta: float, shift: float | None = None,
                   k: int = 12) -> np.ndarray:
    """Eigenvalues of the complex-scaled FM operator; all of them when
    ``shift`` is None, otherwise the ``k`` nearest to ``shift``."""
    if shift is None:
        sys = assemble_system(problem, 0.0, theta)
        return np.sort_complex(eigvals(sys.matrix, check_finite=False))
    sys = assemble_system(problem, shift, theta)
    return np.sort_complex(nearest_eigenvalues(sys, k))


def classify(values, thr: list[float], theta: float, tol_deg: float = 1.0,
             bound_tol: float = 1e-6) -> list[SpectrumLine]:
    """Label eigenvalues: bound states below the lowest threshold, and
    rotated-continuum members whose angle from a threshold is near -2 theta."""
    out = []
    lowest = min(thr)
    target = -2 * math.degrees(theta)
    for z in values:
        z = complex(z)
        if z.real < lowest and abs(z.imag) < bound_tol * (1 + abs(z.real)) * 1e3:
            out.append(SpectrumLine(z, "bound"))
            continue
        best = None
        for t in thr:
            if z.real <= t:
                continue
            ang = math.degrees(math.atan2(z.imag, z.real - t))
            if best is None or abs(ang - target) < abs(best[1] - target):
                best = (t, ang)
        if best is not None and abs(best[1] - target) < tol_deg:
            out.append(SpectrumLine(z, "continuum", best[0], best[1]))
        else:
            out.append(SpectrumLine(z, "other", None if best is None else best[0],
                                    None if best is None else best[1]))
    return out


def continuum_angle(values, threshold: float, upper: float, margin: float = 0.05) -> float:
    """Rotation angle (degrees) of the discretized continuum of ``threshold``.

    A straight line is fitted through the eigenvalues with real parts in
    ``(threshold + margin, upper - margin)`` and negative imaginary parts;
    with ``upper`` the next threshold this interval holds that continuum and
    isolated resonances only. The slope, not the angle seen from the
    threshold, is used because the discrete ray's apex is slightly displaced.
    """
    z = np.asarray(values)
    sel = (z.real > threshold + margin) & (z.real < upper - margin) & (z.imag < 0)
    if np.count_nonzero(sel) < 2:
        raise RunError("fewer than two eigenvalues in the continuum window")
    slope = np.polyfit(z[sel].real, z[sel].imag, 1)[0]
    return float(np.degrees(np.arctan(slope)))


def variational_eigenvalues(problem: FMProblem, k: int = 5) -> np.ndarray:
    """Lowest eigenvalues of the full Hamiltonian at theta = 0 in the
    partial-wave basis of the first independent component.

    No exchange symmetry is imposed. The lowest state of a system with two
    identical fermions is spatially symmetric, so the ground eigenvalue is
    that of the spin singlet. The matrix is real symmetric and independent
    of the Merkuriev splitting, which makes it an oracle for the bound
    states of the FM operator.
    """
    a = problem.layout.independent[0]
    H = diagonal_block(replace(problem, couplings=False), a, 0.0, 0.0).real
    # T + V_a + W_a plus the short-range parts of the other pairs
    X, Y = problem.meshes.grid(a)
    u = problem.grid.abscissas
    R = (problem.split.residual(a, X[..., None], Y[..., None], u)
         - problem.split.three_body_term(a, X[..., None], Y[..., None], u))
    D = np.einsum("abk,ijk->abij", problem.multipole(), R).real
    nc = len(problem.channels)
    H = H + np.block([[np.diag(D[c, d].ravel()) for d in range(nc)] for c in range(nc)])
    return eigh(0.5 * (H + H.T), eigvals_only=True, subset_by_index=[0, k - 1])


def spectrum_listing(problem: FMProblem, theta: float, values) -> list[dict]:
    thr = thresholds(problem.system, problem.layout.independent)
    lines = classify(values, thr, theta)
    return [{"re": l.value.real, "im": l.value.imag, "kind": l.kind, "threshold": l.threshold,
             "angle_deg": l.angle_deg} for l in lines]


def settings_dict(settings: Settings) -> dict:
    return asdict(settings)
