"""
Conformal domains and the pulled-back Neumann kernel
====================================================

Four domains, all images of the unit disc.  On the wall the normal
derivative of the kernel does not depend on the source point.
"""

import numpy as np

from slipflow.conformal import ConformalMap, bilipschitz_constants
from slipflow.fields import DiscGrid
from slipflow.greens import boundary_flux_total, boundary_normal_derivative, harmonicity_order, normal_derivative_law

maps = {
    "identity": ConformalMap("identity"),
    "moebius": ConformalMap("moebius", a=0.3 + 0.2j),
    "quadratic": ConformalMap("quadratic", c=0.3),
    "cubic": ConformalMap("cubic", c=0.25),
}

# area of each domain from the midpoint rule on a 64 x 128 polar grid
for name, m in maps.items():
    g = DiscGrid(64, 128, m)
    c1, c2 = bilipschitz_constants(m, m.psi(DiscGrid(12, 24, m).z))
    print(f"{name:10s} area {g.integrate(np.ones(g.shape)):.6f}  bi-Lipschitz [{c1:.3f}, {c2:.3f}]")

# the wall normal derivative is -(1/2pi)|grad phi_1| for any interior x
s = np.linspace(0, 2 * np.pi, 9, endpoint=False)
m = maps["quadratic"]
for x in (0j, m.psi(0.5 + 0.2j), m.psi(-0.7j)):
    dev = np.max(np.abs(boundary_normal_derivative(m, x, s) - normal_derivative_law(m, s)))
    print(f"x = {complex(x):.3f}: max deviation {dev:.1e}, total flux {boundary_flux_total(m, x):+.12f}")

# away from x the grid Laplacian of the kernel is a truncation error of order h^2
order, errs = harmonicity_order(m, m.psi(0.2 + 0.1j))
print("harmonicity residuals", np.array2string(errs, formatter={"float_kind": "{:.2e}".format}), f"order {order:.2f}")
