"""Command line interface: ``fmscatter {run,sweep,spectrum,validate-config}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure. The
worker count for ``run`` comes from ``FMSCATTER_WORKERS`` (default 1).
Outputs are deterministic: sorted records, sorted JSON keys, no
timestamps.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import warnings

import numpy as np
import yaml

from . import __version__
from .config import ConfigError, ConfigWarning, describe, load, set_key, validate
from .kinematics import InvalidInputError
from .runner import (RunError, SWEEP_AXES, cs_eigenvalues, make_problem, scan, spectrum_listing,
                     spin_states, summed_cross_sections, sweep, sweep_summary, thresholds,
                     variational_eigenvalues)

log = logging.getLogger("fmscatter")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _jsonable(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, tuple)):
        return sorted(obj) if isinstance(obj, set) else list(obj)
    raise TypeError(f"not serializable: {type(obj)}")


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            vals = []
            for c in columns:
                v = r.get(c)
                if isinstance(v, float):
                    v = repr(v)
                elif isinstance(v, (list, tuple)):
                    v = ";".join(str(x) for x in v)
                vals.append("" if v is None else v)
            w.writerow(vals)


def _config_from_args(args) -> tuple[dict, object]:
    raw = load(args.config) if args.config else {}
    if getattr(args, "preset", None):
        raw["system"] = args.preset
    for item in args.set or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        raw = set_key(raw, k.strip(), v)
    shortcuts = {"N": "basis.N", "theta": "theta", "lmax": "truncation.lmax",
                 "variant": "distorted_wave.variant", "out": "output.dir"}
    for attr, key in shortcuts.items():
        val = getattr(args, attr, None)
        if val is not None:
            raw = set_key(raw, key, val if isinstance(val, str) else str(val))
    if getattr(args, "L", None):
        raw["L"] = [int(x) for x in args.L.split(",")]
    if getattr(args, "energies", None):
        mode = args.energy_mode or raw.get("energies", {}).get("mode", "impact")
        raw["energies"] = {"mode": mode, "values": [float(x) for x in args.energies.split(",")]}
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConfigWarning)
        cfg = validate(raw)
    for w in caught:
        log.warning("%s", w.message)
    return raw, cfg


def _provenance(cfg) -> dict:
    return {"config_hash": cfg.config_hash, "code_version": __version__,
            "config": cfg.raw}


def _outdir(cfg) -> str:
    os.makedirs(cfg.output_dir, exist_ok=True)
    return cfg.output_dir


def cmd_validate(args) -> int:
    _, cfg = _config_from_args(args)
    print(json.dumps(describe(cfg), indent=1, sort_keys=True, default=_jsonable))
    return EXIT_OK


def cmd_run(args) -> int:
    _, cfg = _config_from_args(args)
    spins = None if cfg.spin is None else [cfg.spin]
    records = scan(cfg.system, cfg.energies_total, cfg.Ls, cfg.settings, cfg.entrance, spins)
    shift = {e: i for e, i in zip(cfg.energies_total, cfg.energies_impact)}
    for r in records:
        r["E_impact"] = shift[r["E"]]
        r["config_hash"] = cfg.config_hash
    summary = summed_cross_sections(records)
    for s in summary:
        s["E_impact"] = shift[s["E"]]
        s["config_hash"] = cfg.config_hash
    out = _outdir(cfg)
    stem = os.path.join(out, cfg.output_stem)
    _write_csv(stem + "_partial.csv", records,
               ["config_hash", "E", "E_impact", "L", "spin", "spin_weight", "entrance", "exit",
                "S_re", "S_im", "phase_shift", "sigma", "sigma_inel", "unitarity_defect",
                "modulus_defect", "flag_unitarity", "flag_condition", "excluded_open"])
    _write_csv(stem + "_total.csv", summary,
               ["config_hash", "E", "E_impact", "entrance", "exit", "sigma", "sigma_inel",
                "L_values", "max_unitarity_defect", "flagged"])
    _write_json(stem + ".json", {"provenance": _provenance(cfg), "records": records,
                                 "totals": summary})
    flagged = sum(1 for s in summary if s["flagged"])
    print(f"{len(records)} records, {flagged} flagged totals -> {stem}.json")
    return EXIT_OK


def cmd_sweep(args) -> int:
    _, cfg = _config_from_args(args)
    values = [float(v) for v in args.values.split(",")]
    E = cfg.energies_total[0]
    L = cfg.Ls[0]
    rows = sweep(cfg.system, E, L, cfg.settings, args.axis, values, cfg.entrance, cfg.spin)
    summ = sweep_summary(rows)
    out = _outdir(cfg)
    stem = os.path.join(out, f"{cfg.output_stem}_sweep_{args.axis}")
    flat = [{k: v for k, v in r.items() if k not in ("S", "A", "sigma")} |
            {"S00_re": r["S"][0][0].real, "S00_im": r["S"][0][0].imag,
             "config_hash": cfg.config_hash} for r in rows]
    _write_csv(stem + ".csv", flat, ["config_hash", "axis", "value", "spin", "E", "L",
                                     "phase_shift", "S00_re", "S00_im", "unitarity_defect",
                                     "delta_S", "delta_phase"])
    _write_json(stem + ".json", {"provenance": _provenance(cfg), "rows": rows, "summary": summ})
    print(json.dumps(summ, indent=1, sort_keys=True))
    return EXIT_OK


def cmd_spectrum(args) -> int:
    _, cfg = _config_from_args(args)
    theta = cfg.settings.theta
    listing = []
    for L in cfg.Ls:
        for spin, _ in spin_states(cfg.system):
            if cfg.spin is not None and spin != cfg.spin:
                continue
            prob = make_problem(cfg.system, L, cfg.settings, spin)
            if args.shift is None and prob.dimension > args.dense_limit:
                thr = thresholds(cfg.system, prob.layout.independent)
                shift = min(thr) - 0.02
            else:
                shift = args.shift
            vals = cs_eigenvalues(prob, theta, shift, args.k)
            for row in spectrum_listing(prob, theta, vals):
                row.update({"L": L, "spin": spin, "theta_deg": cfg.settings.theta_deg,
                            "config_hash": cfg.config_hash})
                listing.append(row)
            if args.variational:
                for e in variational_eigenvalues(prob, 3):
                    listing.append({"L": L, "spin": spin, "re": float(e), "im": 0.0,
                                    "kind": "variational", "threshold": None, "angle_deg": None,
                                    "theta_deg": 0.0, "config_hash": cfg.config_hash})
    listing.sort(key=lambda r: (r["L"], -1 if r["spin"] is None else r["spin"], r["kind"],
                                r["re"], r["im"]))
    out = _outdir(cfg)
    stem = os.path.join(out, f"{cfg.output_stem}_spectrum")
    _write_csv(stem + ".csv", listing, ["config_hash", "L", "spin", "theta_deg", "kind", "re",
                                        "im", "threshold", "angle_deg"])
    _write_json(stem + ".json", {"provenance": _provenance(cfg), "eigenvalues": listing})
    bound = [r for r in listing if r["kind"] == "bound"]
    for r in bound:
        print(f"L={r['L']} spin={r['spin']} bound {r['re']:.8f}{r['im']:+.2e}j")
    print(f"{len(listing)} eigenvalues -> {stem}.json")
    return EXIT_OK


def _common(p):
    p.add_argument("config", nargs="?", help="YAML run configuration")
    p.add_argument("--preset", help="named system preset (e-H, e-Ps, e+-H)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a config key, e.g. basis.N=30 (repeatable)")
    p.add_argument("--N", type=int)
    p.add_argument("--theta", type=float, help="complex-scaling angle in degrees")
    p.add_argument("--lmax", type=int)
    p.add_argument("--L", help="comma-separated total angular momenta")
    p.add_argument("--energies", help="comma-separated energies (Hartree)")
    p.add_argument("--energy-mode", choices=("impact", "total"))
    p.add_argument("--variant", help="distorted-wave variant")
    p.add_argument("--out", help="output directory")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fmscatter", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)
    p = sub.add_parser("run", help="S-matrices and cross sections over the energy/L grid")
    _common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("sweep", help="convergence sweep along one numerical axis")
    _common(p)
    p.add_argument("--axis", required=True, choices=sorted(SWEEP_AXES))
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("spectrum", help="eigenvalues of the complex-scaled FM operator")
    _common(p)
    p.add_argument("--shift", type=float, help="target energy for shift-invert")
    p.add_argument("-k", type=int, default=12, help="eigenvalues per shift")
    p.add_argument("--dense-limit", type=int, default=3000,
                   help="largest dimension for a full dense eigensolve")
    p.add_argument("--variational", action="store_true",
                   help="also list the theta = 0 variational eigenvalues")
    p.set_defaults(func=cmd_spectrum)
    p = sub.add_parser("validate-config", help="check a configuration and print its expansion")
    _common(p)
    p.set_defaults(func=cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, InvalidInputError, yaml.YAMLError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RunError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
