"""Command line front end.

Two subcommands: ``solve`` runs one scenario and writes its artifacts,
``sweep`` runs a convergence study along one axis. Resolutions are
accepted as fractions ("1/32") or as the denominator alone ("32"). A JSON
config file can override any scenario constant: material coefficients,
load vectors, and the contact-law parameters.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .fem import LoadData, MaterialParams
from .harness import (SCENARIO_NAMES, SWEEP_CONFIG, emit_loglog, run_scenario,
                      scenario, space_sweep, time_sweep)
from .laws import BoundFunction, ContactLaw, FrictionPotential, catalog


def parse_resolution(text: str) -> float:
    """Resolution as a float from "1/32", "32", or "0.03125"."""
    text = text.strip()
    if "/" in text:
        num_s, den_s = text.split("/", 1)
        num, den = float(num_s), float(den_s)
        if den == 0.0:
            raise ValueError(f"zero denominator in resolution {text!r}")
        value = num / den
    else:
        value = float(text)
        if value > 1.0:
            value = 1.0 / value
    if not 0.0 < value <= 1.0:
        raise ValueError(f"resolution {text!r} must land in (0, 1]")
    return value


def _bound_from_config(entry: dict, fallback: BoundFunction) -> BoundFunction:
    return BoundFunction(
        slope=float(entry.get("slope", fallback.slope)),
        eta_cap=float(entry.get("eta_cap", fallback.eta_cap)),
        zero_from_x=float(entry.get("zero_from_x", fallback.zero_from_x)),
    )


def load_config(path: Optional[str], name: str):
    """Read a JSON override file; returns (material, law, f0, fN), any None.

    Recognized keys: material {phi, xi, eta, lam, T}, loads {f0, fN},
    law {g_nu, g_tau, j_tau} with bound fields {slope, eta_cap,
    zero_from_x} and potential fields {exp_coef, lin_coef}.
    """
    if path is None:
        return None, None, None, None
    with open(path) as fh:
        raw = json.load(fh)
    unknown = set(raw) - {"material", "loads", "law"}
    if unknown:
        raise ValueError(f"unknown config sections: {sorted(unknown)}")

    material = None
    if "material" in raw:
        m = raw["material"]
        material = MaterialParams(
            phi=float(m.get("phi", 2.0)), xi=float(m.get("xi", 2.0)),
            eta=float(m.get("eta", 4.0)), lam=float(m.get("lam", 4.0)),
            T=float(m.get("T", 1.0)))

    law = None
    if "law" in raw:
        base_law = catalog(name)
        entry = raw["law"]
        j_tau = base_law.j_tau
        if "j_tau" in entry:
            jt = entry["j_tau"]
            j_tau = FrictionPotential(
                exp_coef=float(jt.get("exp_coef", j_tau.exp_coef)),
                lin_coef=float(jt.get("lin_coef", j_tau.lin_coef)))
        law = ContactLaw(
            g_nu=_bound_from_config(entry.get("g_nu", {}), base_law.g_nu),
            g_tau=_bound_from_config(entry.get("g_tau", {}), base_law.g_tau),
            j_tau=j_tau)

    f0 = fN = None
    if "loads" in raw:
        loads = raw["loads"]
        if "f0" in loads:
            f0 = tuple(float(c) for c in loads["f0"])
        if "fN" in loads:
            fN = tuple(float(c) for c in loads["fN"])
    return material, law, f0, fN


def _cmd_solve(args: argparse.Namespace) -> int:
    material, law, f0, fN = load_config(args.config, args.scenario)
    s = scenario(args.scenario, n_per_side=args.n, n_steps=args.steps,
                 material=material, law=law, f0=f0, fN=fN)
    result = run_scenario(s, out_dir=args.out)
    history = result.history
    print(f"scenario {s.name}: n={s.n_per_side} steps={s.n_steps} "
          f"degraded={history.degraded}")
    for kind, path in sorted(result.artifacts.items()):
        print(f"  {kind}: {path}")
    return 1 if history.degraded else 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    material, law, f0, fN = load_config(args.config, "convergence")
    if any(v is not None for v in (material, law, f0, fN)):
        raise SystemExit("config overrides are not supported for sweeps; "
                         "run the scenario of interest with `solve`")
    overrides = {}
    if args.levels is not None:
        parsed = tuple(parse_resolution(tok) for tok in args.levels.split(","))
        overrides["k_levels" if args.axis == "time" else "h_levels"] = parsed
    if args.fixed is not None:
        key = "h_fixed" if args.axis == "time" else "k_fixed"
        overrides[key] = parse_resolution(args.fixed)
    if args.ref is not None:
        key = "k_ref" if args.axis == "time" else "h_ref"
        overrides[key] = parse_resolution(args.ref)
    study = time_sweep if args.axis == "time" else space_sweep
    report = study(cfg=SWEEP_CONFIG, max_over_steps=args.max_over_steps,
                   **overrides)
    label = "k" if report.axis == "time" else "h"
    for res, err, order in report.levels:
        order_s = "-" if order is None else f"{order:.4f}"
        print(f"{label}={res:.6f}  error={err:.6e}  order={order_s}")
    if len(report.levels) > 1 and all(e > 0.0 for e in report.errors):
        print(f"least-squares slope: {report.lsq_slope():.4f}")
    print(f"reference final-time velocity norm: {report.ref_norm_final:.6e}")
    print(f"reference max-over-time velocity norm: {report.ref_norm_max:.6e}")
    if args.out:
        paths = emit_loglog(report, args.out)
        for kind in sorted(paths):
            print(f"  {kind}: {paths[kind]}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="viscontact",
        description="Quasistatic viscoelastic contact solver with normal "
                    "compliance and velocity friction")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run one scenario and write artifacts")
    solve.add_argument("--scenario", choices=SCENARIO_NAMES, default="base")
    solve.add_argument("--n", type=int, default=32,
                       help="mesh subdivisions per side (default 32)")
    solve.add_argument("--steps", type=int, default=32,
                       help="number of time steps (default 32)")
    solve.add_argument("--out", default=None, help="artifact directory")
    solve.add_argument("--config", default=None,
                       help="JSON file overriding material/law/load constants")
    solve.set_defaults(func=_cmd_solve)

    sweep = sub.add_parser("sweep", help="run a convergence sweep")
    sweep.add_argument("--axis", choices=("time", "space"), required=True)
    sweep.add_argument("--fixed", default=None,
                       help="resolution held fixed (h for time axis, k for "
                            "space); default 1/32 or 1/64")
    sweep.add_argument("--levels", default=None,
                       help="comma list of swept resolutions, e.g. 1/2,1/4,1/8"
                            " (default 1/2 through 1/16)")
    sweep.add_argument("--ref", default=None,
                       help="reference resolution (default 1/64)")
    sweep.add_argument("--out", default=None, help="artifact directory")
    sweep.add_argument("--max-over-steps", action="store_true",
                       help="report the worst error over time nodes instead "
                            "of the final-time error")
    sweep.add_argument("--config", default=None, help=argparse.SUPPRESS)
    sweep.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
