"""Command line: ``slipflow <subcommand> --config <path> [--out <dir>] [--seed <int>]``.

Exit status is 0 when every check in scope passes, 1 when a check fails,
2 for configuration errors and 3 when a module raises during the run.
Each run writes the effective configuration, ``summary.json`` and the CSV
tables of the subcommand into the output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time

import numpy as np

from .config import RunConfig, load_config
from .errors import ConfigError, SlipflowError

SUBCOMMANDS = (
    "verify-geometry", "verify-greens", "verify-representation", "verify-commutator",
    "simulate", "probe-inequalities",
)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_ERROR = 0, 1, 2, 3


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_table(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


def write_summary(out, summary):
    with open(os.path.join(out, "summary.json"), "w", encoding="utf-8") as fh:
        json.dump(_jsonable(summary), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- subcommands -------------------------------------------------------------------------
def _maps(cfg: RunConfig):
    from .suites import catalog_maps

    return catalog_maps(cfg.map if "map.kind" in cfg.explicit else None)


def _suite(sub: str, cfg: RunConfig):
    from . import suites

    seed = cfg["seed"]
    if sub == "verify-geometry":
        return suites.geometry_suite(_maps(cfg), cfg["grid.Nr"], cfg["grid.Ntheta"], cfg["verify.n_boundary"],
                                     cfg["tolerance.inverse"], cfg["tolerance.pushforward"],
                                     cfg["tolerance.orthogonality"], seed)
    if sub == "verify-greens":
        return suites.greens_suite(_maps(cfg), cfg["verify.n_boundary"], cfg["verify.Nr_list"],
                                   cfg["tolerance.normal_derivative"], cfg["tolerance.flux_total"],
                                   cfg["tolerance.harmonic_order"], seed)
    if sub == "verify-representation":
        return suites.representation_suite(cfg.map, cfg["verify.Nr_list"], cfg["verify.n_probes"], seed,
                                           cfg["tolerance.constant_field"], cfg["tolerance.min_order"])
    if sub == "verify-commutator":
        nr = tuple(sorted(cfg["verify.Nr_list"])[:2])
        return suites.commutator_suite(_maps(cfg), nr, cfg["verify.n_probes"], seed,
                                       cfg["tolerance.decomposition"])
    if sub == "probe-inequalities":
        nr = tuple(sorted(cfg["verify.Nr_list"])[:2])
        return suites.probe_suite(cfg.map, nr, cfg["probe.p"], cfg["probe.p_list"], 2 * cfg["probe.n_samples"],
                                  cfg["probe.n_samples"], cfg["probe.nu"], seed)
    raise ValueError(sub)


def _simulate(cfg: RunConfig, out: str) -> tuple[bool, dict]:
    from .diagnostics import Recorder, default_commutator_probes, probe_bkm, probe_density_lp, records_csv_text
    from .dynamics import Simulation, initial_state, manufactured
    from .elliptic import SIGN_CONVENTION, resolve_sign
    from .fields import write_snapshot_csv

    grid = cfg.grid()
    scen = cfg["scenario"]
    if scen == "manufactured":
        ms = manufactured(cfg["dynamics.mu"], cfg["dynamics.beta"], cfg["dynamics.gamma"])
        params = cfg.params(forcing=ms.forcing)
    else:
        params = cfg.params()
    state = initial_state(grid, scen, cfg["initial.amplitude"], cfg["initial.velocity"], cfg["initial.rho0"])
    sim = Simulation(state, params)

    def snap(st, k):
        write_snapshot_csv(grid, os.path.join(out, f"fields_t{k}.csv"), rho=st.rho, u=st.u)

    probes = default_commutator_probes(grid) if scen != "equilibrium" else []
    rec = Recorder(params, cfg["output.every_steps"], probes, snapshot=snap if cfg["output.fields"] else None)
    rec.start(sim)
    max_steps = cfg["dynamics.max_steps"]
    t_end = params.t_end
    while sim.state.t < t_end - 1e-14 and sim.steps < max_steps:
        from .dynamics import stable_dt

        dt = min(stable_dt(sim.state, params), t_end - sim.state.t)
        sim.advance(dt)
        rec(sim)
    rec(sim, force=True)
    if not cfg["output.fields"]:
        snap(sim.state, len(rec.records) - 1)
    with open(os.path.join(out, "diagnostics.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write(records_csv_text(rec.records))

    first, last = rec.records[0], rec.records[-1]
    mass_drift = abs(last.mass - first.mass) / first.mass
    E0 = first.energy
    defect = (last.energy + last.D_cum - E0) / E0 if E0 else 0.0
    checks = {
        "mass_conserved": mass_drift <= cfg["tolerance.mass"],
        "density_nonnegative": all(r.rho_min >= 0 for r in rec.records),
        "R_T_monotone": all(b.R_T >= a.R_T for a, b in zip(rec.records, rec.records[1:])),
    }
    if scen == "equilibrium":
        checks["equilibrium_kinetic"] = all(r.E_kin <= cfg["tolerance.equilibrium"] for r in rec.records)
    summary = {
        "scenario": scen,
        "steps": sim.steps,
        "t_final": sim.state.t,
        "theorem_regime": params.theorem_regime,
        "mass_drift": mass_drift,
        "energy_defect": defect,
        "min_vacuum_ratio": min(r.vacuum_ratio for r in rec.records),
        "max_R_T": last.R_T,
        "representation_sign": resolve_sign(grid),
        "sign_convention": SIGN_CONVENTION,
        "probe_bkm_final": probe_bkm(sim.state),
        "density_lp_final": {repr(k): v for k, v in probe_density_lp(sim.state).items()},
        "prop_lhs_final": last.prop_lhs,
        "prop_rhs_final": last.R_T_bound,
    }
    return all(checks.values()), {"checks": checks, **summary}


def run(subcommand: str, config: RunConfig, out: str) -> int:
    """Execute ``subcommand`` with ``config``; artifacts go to ``out``."""
    if subcommand not in SUBCOMMANDS:
        raise ConfigError(f"unknown subcommand {subcommand!r}; expected one of {SUBCOMMANDS}")
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "effective_config.txt"), "w", encoding="utf-8") as fh:
        fh.write(config.to_text())
    t0 = time.perf_counter()
    summary = {"subcommand": subcommand, "seed": config["seed"]}
    try:
        if subcommand == "simulate":
            ok, extra = _simulate(config, out)
            summary.update(extra)
        else:
            res = _suite(subcommand, config)
            write_table(os.path.join(out, f"{subcommand}.csv"), res.columns, res.rows)
            ok = res.passed
            summary["checks"] = res.checks
            summary.update(res.summary)
    except SlipflowError as e:
        summary["error"] = {"type": type(e).__name__, "message": str(e)}
        summary["passed"] = False
        summary["seconds"] = time.perf_counter() - t0
        write_summary(out, summary)
        return EXIT_ERROR
    summary["passed"] = bool(ok)
    summary["seconds"] = time.perf_counter() - t0
    write_summary(out, summary)
    return EXIT_OK if ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="slipflow", description=__doc__.splitlines()[0])
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("--config", required=True, help="path to a key = value configuration file")
    ap.add_argument("--out", default="slipflow_out", help="output directory")
    ap.add_argument("--seed", type=int, default=None, help="override the configured seed")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_overrides(seed=args.seed)
    except (ConfigError, OSError) as e:
        os.makedirs(args.out, exist_ok=True)
        kind = type(e).__name__
        write_summary(args.out, {"subcommand": args.subcommand, "passed": False,
                                 "error": {"type": kind, "message": str(e)}})
        print(f"slipflow: {e}", file=sys.stderr)
        return EXIT_CONFIG
    code = run(args.subcommand, cfg, args.out)
    status = {EXIT_OK: "passed", EXIT_FAIL: "failed", EXIT_ERROR: "error"}[code]
    print(f"{args.subcommand}: {status} ({args.out})")
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
