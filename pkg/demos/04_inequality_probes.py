"""
Empirical constants of the functional inequalities
==================================================

Each probe returns the ratio of the two sides for seeded fields.  The
numbers are observations at one resolution, not proofs.
"""

from slipflow.diagnostics import probe_div_curl, probe_poincare_sobolev, probe_weighted_gradient
from slipflow.fields import DiscGrid
from slipflow.suites import CATALOG

for name in ("identity", "quadratic"):
    g = DiscGrid(64, 128, CATALOG[name])
    dc = probe_div_curl(g, p=2.0, n_samples=40, seed=0)
    wg = probe_weighted_gradient(g, nu=0.1, n_samples=40, seed=0)
    ps = probe_poincare_sobolev(g, (4, 8, 16, 32), n_samples=40, seed=0)
    print(name)
    print(f"  div-curl       max {dc.max:.4f}  median {dc.median:.4f}")
    print(f"  weighted grad  max {wg.max:.4f}  median {wg.median:.4f}")
    print("  Poincare-Sobolev", {int(p): round(v, 4) for p, v in ps.items()})
