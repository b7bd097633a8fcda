"""Run configuration: YAML schema, named presets, validation and hashing.

Schema (version 1)::

    version: 1
    system: e-Ps            # preset name, or {particles: [{mass, charge, name}] x 3}
    energies:               # Hartree; either values or a range
      mode: impact          # "impact" (above the entrance threshold) or "total"
      values: [0.05, 0.1]   # or range: {start, stop, num}
    L: [0]
    theta: 7.0              # degrees
    basis: {N: 35, hx: null, hy: 1.5}
    truncation: {lmax: 4}
    merkuriev: {x0_factor: 1.0, y0: 10.0, mu: 2.1}
    screening: {y_cut: 32.0, y_sc: 5.5, n_exp: 2.0}
    distorted_wave: {variant: free, n_max: 2}
    entrance: all           # or a list of partition indices
    spin: null              # null runs every spin state with its weight
    tolerance: 1.0e-3       # unitarity flag threshold
    output: {dir: results, stem: run}

Presets cap the angular truncation at ``lmax = 4`` for desk-scale runs;
cross sections summed over the computed ``L`` therefore omit higher partial
waves, and that truncation error is not quantified.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
import copy
import hashlib
import json
import math
import warnings

import numpy as np
import yaml

from .distorted_waves import VARIANTS
from .kinematics import (InvalidInputError, ThreeBodySystem, build_system, e_h_system, e_ps_system,
                         positron_h_system)
from .potentials import ConfigError
from .runner import Settings, ground_threshold

SCHEMA_VERSION = 1
DESK_LMAX = 4
THETA_WARN_DEG = 10.0
THETA_MAX_DEG = 45.0

PRESETS = {
    "e-H": {"factory": e_h_system, "entrance": 0},
    "e-Ps": {"factory": e_ps_system, "entrance": 0},
    "e+-H": {"factory": positron_h_system, "entrance": 0},
}
_ALIASES = {"eH": "e-H", "e-h": "e-H", "ePs": "e-Ps", "e-ps": "e-Ps", "e+H": "e+-H",
            "e+-h": "e+-H", "e⁺-H": "e+-H", "positron-H": "e+-H"}

DEFAULTS = {
    "version": SCHEMA_VERSION,
    "system": "e-H",
    "energies": {"mode": "impact", "values": [0.1]},
    "L": [0],
    "theta": 7.5,
    "basis": {"N": 35, "hx": None, "hy": 1.5},
    "truncation": {"lmax": DESK_LMAX},
    "merkuriev": {"x0_factor": 1.0, "y0": 10.0, "mu": 2.1},
    "screening": {"y_cut": 32.0, "y_sc": 5.5, "n_exp": 2.0},
    "distorted_wave": {"variant": "free", "n_max": 2},
    "entrance": "all",
    "spin": None,
    "tolerance": 1e-3,
    "output": {"dir": "results", "stem": "run"},
}


class ConfigWarning(UserWarning):
    pass


@dataclass
class RunConfig:
    system_name: str
    system: ThreeBodySystem
    energies_total: list
    energies_impact: list
    Ls: list
    settings: Settings
    entrance: list | None
    spin: int | None
    output_dir: str
    output_stem: str
    raw: dict = field(default_factory=dict)

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def canonical(raw: dict) -> dict:
    """Defaults filled in, preset names normalized."""
    unknown = set(raw) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    out = _merge(DEFAULTS, raw)
    # an energy grid replaces the default one rather than merging with it
    if isinstance(raw.get("energies"), dict):
        out["energies"] = {"mode": "impact", **copy.deepcopy(raw["energies"])}
    if isinstance(out["system"], str):
        out["system"] = _ALIASES.get(out["system"], out["system"])
    return out


def config_hash(raw: dict) -> str:
    """Hash of the physics inputs; the output location is excluded."""
    cfg = canonical(raw)
    cfg.pop("output", None)
    blob = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _system(spec) -> tuple[str, ThreeBodySystem]:
    if isinstance(spec, str):
        if spec not in PRESETS:
            raise ConfigError(f"unknown preset {spec!r}; expected one of {sorted(PRESETS)}")
        return spec, PRESETS[spec]["factory"]()
    if isinstance(spec, dict) and "particles" in spec:
        parts = spec["particles"]
        if len(parts) != 3:
            raise ConfigError("a custom system needs exactly three particles")
        try:
            sys = build_system([(float(p["mass"]), float(p["charge"]), str(p.get("name", "")))
                                for p in parts])
        except (KeyError, TypeError, InvalidInputError) as exc:
            raise ConfigError(f"invalid particle list: {exc}") from exc
        return "custom", sys
    raise ConfigError("system must be a preset name or {particles: [...]}")


def _energies(spec: dict) -> tuple[list, str]:
    mode = spec.get("mode", "impact")
    if mode not in ("impact", "total"):
        raise ConfigError(f"energy mode must be 'impact' or 'total', got {mode!r}")
    if spec.get("values") is not None and spec.get("range") is not None:
        raise ConfigError("energies take either 'values' or 'range', not both")
    if "values" in spec and spec["values"] is not None:
        vals = [float(v) for v in spec["values"]]
    elif "range" in spec:
        r = spec["range"]
        try:
            vals = np.linspace(float(r["start"]), float(r["stop"]), int(r["num"])).tolist()
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"energy range needs start, stop, num: {exc}") from exc
    else:
        raise ConfigError("energies need 'values' or 'range'")
    if not vals:
        raise ConfigError("energy grid is empty")
    if not all(math.isfinite(v) for v in vals):
        raise ConfigError("energies must be finite")
    return vals, mode


def validate(raw: dict) -> RunConfig:
    """Check a raw mapping and expand it into a :class:`RunConfig`."""
    cfg = canonical(raw)
    if cfg["version"] != SCHEMA_VERSION:
        raise ConfigError(f"unsupported config version {cfg['version']}")
    name, system = _system(cfg["system"])

    theta = float(cfg["theta"])
    if not 0 < theta < THETA_MAX_DEG:
        raise ConfigError(f"theta must lie in (0, {THETA_MAX_DEG}) degrees, got {theta}")
    if theta > THETA_WARN_DEG:
        warnings.warn(f"theta = {theta} deg exceeds the recommended {THETA_WARN_DEG} deg",
                      ConfigWarning, stacklevel=2)

    basis, trunc = cfg["basis"], cfg["truncation"]
    N = int(basis["N"])
    if N < 2:
        raise ConfigError("basis N must be at least 2")
    hy = float(basis["hy"])
    hx = None if basis.get("hx") is None else float(basis["hx"])
    if hy <= 0 or (hx is not None and hx <= 0):
        raise ConfigError("mesh scales must be positive")
    lmax = int(trunc["lmax"])
    Ls = [int(L) for L in (cfg["L"] if isinstance(cfg["L"], list) else [cfg["L"]])]
    if not Ls:
        raise ConfigError("L list is empty")
    if min(Ls) < 0 or lmax < 0:
        raise ConfigError("L and lmax must be non-negative")

    m, sc = cfg["merkuriev"], cfg["screening"]
    if not float(m["mu"]) > 2:
        raise ConfigError(f"Merkuriev exponent mu must exceed 2, got {m['mu']}")
    if not float(sc["n_exp"]) > 1:
        raise ConfigError(f"screening exponent must exceed 1, got {sc['n_exp']}")
    if float(m["y0"]) <= 0 or float(m["x0_factor"]) <= 0:
        raise ConfigError("Merkuriev y0 and x0_factor must be positive")
    if float(sc["y_cut"]) < 0 or float(sc["y_sc"]) <= 0:
        raise ConfigError("screening needs y_cut >= 0 and y_sc > 0")

    dw = cfg["distorted_wave"]
    if dw["variant"] not in VARIANTS:
        raise ConfigError(f"unknown distorted-wave variant {dw['variant']!r}")
    tol = float(cfg["tolerance"])
    if not tol > 0:
        raise ConfigError("tolerance must be positive")

    settings = Settings(N=N, lmax=lmax, theta_deg=theta, hx=hx, hy=hy,
                        variant=str(dw["variant"]), n_max=int(dw["n_max"]),
                        x0_factor=float(m["x0_factor"]), y0=float(m["y0"]), mu=float(m["mu"]),
                        y_cut=float(sc["y_cut"]), y_sc=float(sc["y_sc"]),
                        n_exp=float(sc["n_exp"]), tolerance=tol)

    ent = cfg["entrance"]
    if ent == "all" or ent is None:
        entrance = None
    else:
        entrance = [int(a) for a in (ent if isinstance(ent, list) else [ent])]
        if not entrance or any(a not in (0, 1, 2) for a in entrance):
            raise ConfigError("entrance must be 'all' or partition indices in 0..2")
    first = entrance[0] if entrance else PRESETS.get(name, {"entrance": 0})["entrance"]
    if system.coulomb_strength(first) >= 0:
        first = next((a for a in range(3) if system.coulomb_strength(a) < 0), None)
        if first is None:
            raise ConfigError("no pair of the system can bind")
    thr = ground_threshold(system, first)

    vals, mode = _energies(cfg["energies"])
    if mode == "impact":
        impact = vals
        total = [thr + v for v in vals]
    else:
        total = vals
        impact = [v - thr for v in vals]
    if min(impact) <= 0:
        raise ConfigError("every energy must lie above the entrance threshold")

    spin = cfg["spin"]
    if spin is not None and int(spin) not in (0, 1):
        raise ConfigError("spin must be null, 0 or 1")

    out = cfg["output"]
    return RunConfig(name, system, total, impact, sorted(set(Ls)), settings, entrance,
                     None if spin is None else int(spin), str(out["dir"]), str(out["stem"]),
                     raw=canonical(raw))


def load(path) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("the config file must hold a mapping")
    return data


def set_key(raw: dict, dotted: str, value) -> dict:
    """Override ``a.b.c = value`` in a raw mapping (value parsed as YAML)."""
    out = copy.deepcopy(raw)
    parts = dotted.split(".")
    node = out
    for p in parts[:-1]:
        nxt = node.get(p)
        if not isinstance(nxt, dict):
            nxt = copy.deepcopy(DEFAULTS.get(p, {})) if node is out else {}
            node[p] = nxt
        node = nxt
    node[parts[-1]] = yaml.safe_load(value) if isinstance(value, str) else value
    return out


def preset_config(name: str, **over) -> dict:
    """A raw config for a preset with optional top-level overrides."""
    name = _ALIASES.get(name, name)
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}")
    return _merge({"system": name}, over)


def describe(cfg: RunConfig) -> dict:
    return {"system": cfg.system_name, "energies_total": cfg.energies_total,
            "energies_impact": cfg.energies_impact, "L": cfg.Ls,
            "settings": asdict(cfg.settings), "entrance": cfg.entrance, "spin": cfg.spin,
            "config_hash": cfg.config_hash}


__all__ = ["RunConfig", "validate", "load", "set_key", "preset_config", "config_hash",
           "canonical", "describe", "ConfigError", "ConfigWarning", "PRESETS"]
