"""Commutator term of the effective-flux representation and its pointwise bound.

For a state ``(rho, u)`` and an interior point ``x``

    J(x) = int [ d_{x_i} d_{y_j} N(x,y) u_i(x) + d_{y_i} d_{y_j} N(x,y) u_i(y) ] rho u_j(y) dy,

split as ``J = J1 + J2 + J3``: ``J1`` carries the difference ``u(x) - u(y)``
and ``J2``, ``J3`` carry the kernels ``Lambda(phi(y), v)`` for ``v = phi(x)``
and its reflection ``w = phi(x)/|phi(x)|^2``.  Every integral is evaluated
with the shared singular quadrature.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .conformal import ConformalMap, anti_cr_matrix, cr_hessian, cr_matrix, to_complex
from .errors import CenterSingularityError, SingularityError
from .greens import C_LOG, kernel_disc_data, pullback_kernel
from .quadrature import PointQuadrature

CENTER_TOL = 1e-8
REFLECTION_RADIUS = 0.75


def special_points(cmap: ConformalMap, x):
    """Return ``(w, x_prime)``: ``w = phi(x)/|phi(x)|^2`` (disc plane) and ``x' = psi(phi(x)/|phi(x)|)``."""
    X = cmap.phi(to_complex(x))
    r = np.abs(X)
    if np.any(r < CENTER_TOL):
        raise CenterSingularityError("phi(x) is at the disc centre; w(x) and x' are undefined")
    w = X / r**2
    xp = cmap.psi(X / r)
    return np.stack([w.real, w.imag], -1), np.stack([xp.real, xp.imag], -1)


def lambda_tensor(P, A, B, v, dv):
    """``Lambda[..., i, j] = (d_{x_i} d_{y_j} + d_{y_i} d_{y_j}) log|P(y) - v(x)|``.

    ``P`` and ``v`` are complex, ``A[i, k] = d_i P_k``, ``B[i, j, k] = d_i d_j P_k``
    and ``dv[i, k] = d_i v_k``.
    """
    d = np.asarray(P, dtype=complex) - np.asarray(v, dtype=complex)
    if np.any(np.abs(d) == 0):
        raise SingularityError("Lambda evaluated where phi(y) = v")
    dk = np.stack([d.real, d.imag], -1)
    s2 = (d.real**2 + d.imag**2)[..., None, None]
    C = A - dv
    t1 = np.einsum("...k,...ijk->...ij", dk, B)
    t2 = np.einsum("...jk,...ik->...ij", A, C)
    a = np.einsum("...k,...ik->...i", dk, C)
    b = np.einsum("...s,...js->...j", dk, A)
    t3 = -2 * a[..., :, None] * b[..., None, :] / s2
    return (t1 + t2 + t3) / s2


def kernel_lambda(cmap: ConformalMap, i: int, j: int, y, v, dv) -> np.ndarray:
    """Single entry ``Lambda_{ij}(phi(y), v)`` with ``dv[i, k] = d_i v_k``."""
    Y, dY, d2Y = cmap.phi_derivatives(to_complex(y))
    L = lambda_tensor(Y, cr_matrix(dY), cr_hessian(d2Y), to_complex(v), np.asarray(dv, dtype=float))
    return L[..., i, j]


@dataclass
class CommutatorBreakdown:
    x: tuple
    phi_abs: float
    J_direct: float
    J1: float
    J2: float
    J3: float
    rhs_order1: float
    rhs_comm_x: float
    rhs_comm_xprime: float
    ratio: float

    @property
    def decomposition_defect(self) -> float:
        return abs(self.J1 + self.J2 + self.J3 - self.J_direct)

    @property
    def rhs_total(self) -> float:
        parts = [self.rhs_order1, self.rhs_comm_x]
        if np.isfinite(self.rhs_comm_xprime):
            parts.append(self.rhs_comm_xprime)
        return float(sum(parts))

    def as_dict(self):
        return asdict(self)


def commutator_breakdown(state, x) -> CommutatorBreakdown:
    """All parts of ``J(x)`` and the three bound integrals for a state on a grid."""
    grid = state.grid
    cmap = grid.map
    xc = complex(to_complex(x))
    X, dX, _ = cmap.phi_derivatives(np.array([xc]))
    X, dX = X[0], dX[0]
    if abs(X) < CENTER_TOL:
        raise CenterSingularityError("phi(x) is at the disc centre")
    rho = np.asarray(state.rho, dtype=float)
    u = np.asarray(state.u, dtype=float)
    ux = grid.interpolate(u, np.array([X]))[0]

    q = PointQuadrature(grid, X)
    Y, dY, d2Y = q.disc_derivatives()
    ke = kernel_disc_data(X, dX, Y, dY, d2Y)
    ry = q.sample(rho)
    uy = q.sample(u)
    flux = ry[:, None] * uy  # rho u_j(y)

    J_direct = q.integrate(
        np.einsum("nij,i,nj->n", ke.hess_xy, ux, flux) + np.einsum("nij,ni,nj->n", ke.hess_yy, uy, flux)
    )
    J1 = q.integrate(np.einsum("nij,ni,nj->n", ke.hess_xy, ux[None, :] - uy, flux))
    A = cr_matrix(dY)
    B = cr_hessian(d2Y)
    L2 = lambda_tensor(Y, A, B, X, cr_matrix(dX))
    w = X / abs(X) ** 2
    L3 = lambda_tensor(Y, A, B, w, anti_cr_matrix(-dX / X**2))
    J2 = C_LOG * q.integrate(np.einsum("nij,ni,nj->n", L2, uy, flux))
    J3 = C_LOG * q.integrate(np.einsum("nij,ni,nj->n", L3, uy, flux))

    y = cmap.psi(Y)
    dist = np.abs(y - xc)
    speed = np.sqrt(np.sum(uy**2, -1))
    rhs1 = q.integrate(ry * speed**2 / dist)
    rhsx = q.integrate(np.sqrt(np.sum((ux[None, :] - uy) ** 2, -1)) / dist**2 * ry * speed)

    if abs(X) > REFLECTION_RADIUS:
        Xb = X / abs(X)
        xp = complex(cmap.psi(Xb))
        qb = PointQuadrature(grid, Xb)
        ub = grid.interpolate(u, np.array([Xb]))[0]
        uyb = qb.sample(u)
        ryb = qb.sample(rho)
        db = np.abs(qb.points - xp)
        rhsxp = qb.integrate(
            np.sqrt(np.sum((ub[None, :] - uyb) ** 2, -1)) / db**2 * ryb * np.sqrt(np.sum(uyb**2, -1))
        )
        total = rhs1 + rhsx + rhsxp
    else:
        rhsxp = np.nan
        total = rhs1 + rhsx
    ratio = abs(J_direct) / total if total > 0 else 0.0
    return CommutatorBreakdown(
        (xc.real, xc.imag), float(abs(X)), float(J_direct), float(J1), float(J2), float(J3),
        float(rhs1), float(rhsx), float(rhsxp), float(ratio),
    )


# -- Hoelder cancellation of the J1 integrand -------------------------------------
def j1_integrand(cmap: ConformalMap, x, y, u_x, u_y, rho_y):
    """Pointwise ``d_{x_i} d_{y_j} N (u_i(x) - u_i(y)) rho u_j(y)`` at physical points ``y``."""
    ke = pullback_kernel(cmap, np.broadcast_to(to_complex(x), to_complex(y).shape), y)
    du = np.asarray(u_x)[None, :] - np.asarray(u_y)
    return np.einsum("nij,ni,nj->n", ke.hess_xy, du, np.asarray(rho_y)[:, None] * np.asarray(u_y))


def holder_field(x, p: float, base=(1.0, 0.5), amp=(0.3, -0.2)):
    """Velocity ``U0 + |y - x|^(1 - 2/p) E``: gradient in ``L^q`` for every ``q < p``."""
    xc = complex(to_complex(x))
    a = 1 - 2.0 / p
    U0 = np.asarray(base, dtype=float)
    E = np.asarray(amp, dtype=float)

    def u(y):
        r = np.abs(to_complex(y) - xc)
        return U0[None, :] + (r**a)[:, None] * E[None, :]

    return u


def holder_slope(cmap: ConformalMap, x, p: float, radii=None, n_dirs: int = 16):
    """Log-log slope of the direction-averaged ``|J1 integrand|`` against ``|x - y|``."""
    xc = complex(to_complex(x))
    if radii is None:
        radii = np.geomspace(1e-4, 1e-2, 9)
    u = holder_field(xc, p)
    ux = u(np.array([xc]))[0]
    alpha = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
    prof = []
    for r in radii:
        y = xc + r * np.exp(1j * alpha)
        val = j1_integrand(cmap, xc, y, ux, u(y), np.ones(n_dirs))
        prof.append(np.mean(np.abs(val)))
    slope = np.polyfit(np.log(radii), np.log(prof), 1)[0]
    return float(slope), np.asarray(radii), np.asarray(prof)
