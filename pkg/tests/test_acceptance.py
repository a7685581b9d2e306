"""One test per acceptance criterion, each printing a PASS/FAIL line with its numbers.

The lines are echoed again in the terminal summary.  Run alone with
``pytest tests/test_acceptance.py -s``.
"""
import time

import numpy as np
import pytest

from slipflow import suites
from slipflow.cli import main

from conftest import ACCEPTANCE_LINES


def report(n, title, res, budget, detail=""):
    ok = res.passed and res.seconds < budget
    failed = [k for k, v in res.checks.items() if not v]
    line = (f"{'PASS' if ok else 'FAIL'} criterion {n} ({title}): {len(res.checks) - len(failed)}/"
            f"{len(res.checks)} checks, {res.seconds:.1f} s of {budget:.0f} s{detail}")
    if failed:
        line += f"; failed: {', '.join(failed)}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert res.passed, failed
    assert res.seconds < budget


def test_criterion_1_geometry():
    res = suites.geometry_suite(Nr=64, Ntheta=128, n_boundary=64)
    worst = {c: max(r[2] for r in res.rows if r[1] == c) for c in ("round_trip", "pushforward", "orthogonality")}
    report(1, "geometry", res, 10, "; worst " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_2_greens():
    res = suites.greens_suite(n_boundary=64, Nr_list=(32, 64, 128), n_probes=3)
    orders = {k: v for k, v in res.summary.items() if k.startswith("harmonicity")}
    report(2, "Green's kernel", res, 30, "; min harmonicity order %.2f" % min(orders.values()))


def test_criterion_3_representation():
    res = suites.representation_suite(Nr_list=(32, 64, 128), n_probes=20)
    s = res.summary
    report(3, "representation", res, 180,
           f"; sign {s['representation_sign']:+d}, constant err {s['constant_max_error']:.1e}, "
           f"orders manufactured {s['manufactured_order']:.2f} snapshot {s['snapshot_order']:.2f}")


def test_criterion_4_commutator():
    res = suites.commutator_suite(Nr_pair=(32, 64), n_probes=20)
    s = res.summary
    spread = max(max(v) / min(v) for k, v in s.items() if k.startswith("max_ratio"))
    report(4, "commutator", res, 180,
           f"; worst ratio change x{spread:.3f}, slope {s['holder_slope']:.3f} vs {s['holder_target']:.2f}")


def test_criterion_5_dynamics():
    res = suites.dynamics_suite(Nr_list=(32, 64, 128), t_end=0.5)
    s = res.summary
    d = s["energy_defects"]
    report(5, "dynamics", res, 300,
           f"; manufactured order {s['manufactured_order']:.2f}, ledger defect {d[1]:.1e} -> {d[2]:.1e}, "
           f"min rho ratio {min(v for k, v in s.items() if k.startswith('vacuum')):.3f}, "
           f"residual orders {s['theta_residual_order']:.2f}/{s['pressure_residual_order']:.2f}")


def test_criterion_6_probes():
    res = suites.probe_suite(Nr_pair=(32, 64), p=2.0, n_div=100, n_samples=50, nu=0.1)
    s = res.summary
    dc = s["div_curl_max"]
    report(6, "probes", res, 120,
           f"; div-curl {dc[0]:.4f}/{dc[1]:.4f}, PS spread {s['poincare_sobolev_spread']:.2f}")


CONFIGS = {
    "verify-geometry": "grid.Nr = 32\ngrid.Ntheta = 64\n",
    "verify-greens": "map.kind = quadratic\nmap.c = 0.3\nverify.Nr_list = 16, 32\n",
    "verify-representation": "verify.Nr_list = 16, 32\nverify.n_probes = 4\n",
    "verify-commutator": "map.kind = cubic\nmap.c = 0.25\nverify.Nr_list = 16, 32\nverify.n_probes = 4\n",
    "probe-inequalities": "verify.Nr_list = 32, 64\n",
    "simulate": "scenario = bump\nmap.kind = moebius\nmap.a = 0.3+0.2i\ngrid.Nr = 16\ngrid.Ntheta = 32\n"
                "dynamics.cfl = 0.9\ndynamics.t_end = 0.02\noutput.every_steps = 20\noutput.fields = true\n",
}


def test_criterion_7_determinism(tmp_path):
    t0 = time.perf_counter()
    bad = []
    n_files = 0
    for sub, text in CONFIGS.items():
        cfg = tmp_path / f"{sub}.cfg"
        cfg.write_text(text)
        outs = [tmp_path / f"{sub}-{k}" for k in range(2)]
        codes = [main([sub, "--config", str(cfg), "--out", str(o), "--seed", "11"]) for o in outs]
        if codes != [0, 0]:
            bad.append(f"{sub} exit {codes}")
        for f in sorted(p.name for p in outs[0].glob("*.csv")):
            n_files += 1
            if (outs[0] / f).read_bytes() != (outs[1] / f).read_bytes():
                bad.append(f"{sub}/{f}")
    ok = not bad and n_files >= len(CONFIGS)
    line = (f"{'PASS' if ok else 'FAIL'} criterion 7 (determinism): {n_files} CSV files byte-identical "
            f"across reruns, {time.perf_counter() - t0:.1f} s" + (f"; differing: {', '.join(bad)}" if bad else ""))
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, bad
