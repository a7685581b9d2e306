"""Effective viscous flux and vorticity: direct evaluation, elliptic solves, representation.

Both solves are finite-volume discretisations of the Laplacian in the disc
variable.  For a source vector ``g`` the pulled-back field ``conj(psi') g``
has disc divergence ``|psi'|^2 div g``, so ``Lap F = div g`` in the domain
becomes ``Lap_xi F = div_xi (conj(psi') g)`` on the disc with the same
boundary flux.  In the Neumann problem the outer-face fluxes cancel, which
leaves a symmetric semidefinite system on interior faces only.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import cg

from .conformal import to_complex
from .errors import PreconditionError, SolverError, StateCorruptionError
from .greens import C_LOG, kernel_disc_data
from .quadrature import PointQuadrature

SOLVER_RTOL = 1e-10
REPRESENTATION_SIGN = 1
SIGN_CONVENTION = "F(x) = int grad_y N(x,y) . rho*udot(y) dy - oint dN/dn(x,y) F(y) dS"


@dataclass(frozen=True)
class FluxFields:
    F: np.ndarray
    omega: np.ndarray


def flux_from_state(state, params, ghost=None) -> FluxFields:
    """Pointwise ``F = (2 mu + rho^beta) div u - rho^gamma`` and ``omega = curl u``."""
    rho = np.asarray(state.rho, dtype=float)
    if np.any(rho < 0) or not np.all(np.isfinite(rho)):
        raise StateCorruptionError("density is negative or non-finite")
    grid = state.grid
    div = grid.div(state.u, ghost)
    om = grid.curl(state.u, ghost)
    F = (2 * params.mu + rho**params.beta) * div - rho**params.gamma
    return FluxFields(F, om)


# -- finite-volume operators -------------------------------------------------
def _face_coefficients(grid):
    r_face = (np.arange(1, grid.Nr)) * grid.dr
    t_rad = r_face * grid.dtheta / grid.dr
    t_ang = grid.dr / (grid.r * grid.dtheta)
    return t_rad, t_ang


def _assemble(grid, dirichlet: bool):
    Nr, Nt = grid.shape
    idx = np.arange(Nr * Nt).reshape(Nr, Nt)
    t_rad, t_ang = _face_coefficients(grid)
    rows, cols, vals = [], [], []
    # radial faces
    a = idx[:-1].ravel()
    b = idx[1:].ravel()
    t = np.repeat(t_rad, Nt)
    rows += [a, b, a, b]
    cols += [a, b, b, a]
    vals += [t, t, -t, -t]
    # angular faces
    a = idx.ravel()
    b = np.roll(idx, -1, axis=1).ravel()
    t = np.repeat(t_ang, Nt)
    rows += [a, b, a, b]
    cols += [a, b, b, a]
    vals += [t, t, -t, -t]
    if dirichlet:
        # ghost = -last makes the face value vanish
        a = idx[-1]
        rows.append(a)
        cols.append(a)
        vals.append(np.full(Nt, 2 * grid.dtheta / grid.dr))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(Nr * Nt, Nr * Nt)
    )
    return A


@lru_cache(maxsize=16)
def _operator(Nr, Nt, cmap, dirichlet):
    from .fields import DiscGrid

    A = _assemble(DiscGrid(Nr, Nt, cmap), dirichlet)
    return A, 1.0 / A.diagonal()


def _face_flux_rhs(grid, gt, outer=None):
    """``-sum over faces of (gt . n_out) * length`` per cell; ``gt`` complex disc vectors."""
    Nr, Nt = grid.shape
    b = np.zeros((Nr, Nt))
    r_face = np.arange(1, Nr) * grid.dr
    er = grid.eith[None, :]
    fr = 0.5 * (gt[:-1] + gt[1:])
    flux_r = (np.conj(er) * fr).real * r_face[:, None] * grid.dtheta
    b[:-1] -= flux_r
    b[1:] += flux_r
    th_face = grid.theta + 0.5 * grid.dtheta
    et = 1j * np.exp(1j * th_face)[None, :]
    ft = 0.5 * (gt + np.roll(gt, -1, axis=1))
    flux_t = (np.conj(et) * ft).real * grid.dr
    b -= flux_t
    b += np.roll(flux_t, 1, axis=1)
    if outer is not None:
        b[-1] -= (np.conj(grid.eith) * outer).real * grid.dtheta
    return b


def _cg(A, dinv, b, maxiter):
    if not np.any(b):
        return np.zeros_like(b)
    M = sp.diags(dinv)
    x, info = cg(A, b, rtol=SOLVER_RTOL, atol=0.0, maxiter=maxiter, M=M)
    if info != 0:
        raise SolverError(f"conjugate gradient did not converge in {maxiter} iterations")
    return x


def _as_complex_vectors(source):
    return to_complex(np.asarray(source, dtype=float))


def solve_neumann_flux(grid, source, mean: float = 0.0) -> np.ndarray:
    """Solve ``Lap F = div g`` with ``dF/dn = g . n``; the result has area-weighted mean ``mean``."""
    g = _as_complex_vectors(source)
    A, dinv = _operator(grid.Nr, grid.Ntheta, grid.map, False)
    gt = np.conj(grid.dpsi) * g
    b = _face_flux_rhs(grid, gt).ravel()
    b -= b.mean()
    F = _cg(A, dinv, b, 20 * b.size).reshape(grid.shape)
    return F + (mean - grid.integrate(F) / grid.integrate(np.ones(grid.shape)))


def solve_dirichlet_vorticity(grid, source, mu: float) -> np.ndarray:
    """Solve ``mu Lap omega = curl g`` with ``omega = 0`` on the boundary."""
    g = _as_complex_vectors(source)
    A, dinv = _operator(grid.Nr, grid.Ntheta, grid.map, True)
    gt = np.conj(grid.dpsi) * (1j * g) / mu
    outer = grid.boundary_values(np.stack([gt.real, gt.imag], -1))
    b = _face_flux_rhs(grid, gt, outer[:, 0] + 1j * outer[:, 1]).ravel()
    return _cg(A, dinv, b, 20 * b.size).reshape(grid.shape)


def solve_dirichlet_cells(grid, b) -> np.ndarray:
    """Dirichlet system with a cellwise right-hand side (integrated source per cell)."""
    A, dinv = _operator(grid.Nr, grid.Ntheta, grid.map, True)
    return _cg(A, dinv, np.asarray(b, dtype=float).ravel(), 20 * A.shape[0]).reshape(grid.shape)


# -- representation formula ---------------------------------------------------
def boundary_term(grid, X, dX, F_boundary):
    """``oint dN/dn(x, .) F dS`` by the trapezoid rule at the grid angles."""
    zeta = grid.eith
    dpsi = grid.map.dpsi(zeta)
    ke = kernel_disc_data(X, dX, zeta, 1.0 / dpsi, -grid.map.d2psi(zeta) / dpsi**3, second=False)
    n = zeta * dpsi / np.abs(dpsi)
    dn = ke.grad_y[..., 0] * n.real + ke.grad_y[..., 1] * n.imag
    return float(np.sum(dn * np.asarray(F_boundary, dtype=float) * np.abs(dpsi)) * grid.dtheta)


def representation(grid, x, source, F_boundary, sign: int = REPRESENTATION_SIGN) -> float:
    """Evaluate ``F(x)`` from ``rho*udot`` and the boundary trace of ``F`` (one value per grid angle)."""
    xc = complex(to_complex(x))
    X, dX, _ = grid.map.phi_derivatives(np.array([xc]))
    X, dX = X[0], dX[0]
    if 1 - abs(X) < 2 * grid.dr:
        raise PreconditionError("representation point lies within two cells of the boundary")
    q = PointQuadrature(grid, X)
    Y, dY, d2Y = q.disc_derivatives()
    ke = kernel_disc_data(X, dX, Y, dY, d2Y, second=False)
    g = q.sample(source)
    vol = q.integrate(np.sum(ke.grad_y * g, axis=-1))
    return float(sign * (vol - boundary_term(grid, X, dX, F_boundary)))


def constant_field_value(grid, x, c: float = 1.0, sign: int = REPRESENTATION_SIGN) -> float:
    """Representation of the constant field ``c`` (zero source)."""
    return representation(grid, x, np.zeros(grid.shape + (2,)), np.full(grid.Ntheta, c), sign)


def resolve_sign(grid, probes=None) -> int:
    """Pick the sign that reproduces constant fields; ``C_LOG < 0`` makes it ``+1``."""
    if probes is None:
        probes = [grid.map.psi(0.3 + 0.1j)]
    vals = [constant_field_value(grid, p_, 1.0, sign=1) for p_ in probes]
    return 1 if np.mean(vals) > 0 else -1


__all__ = [
    "C_LOG",
    "FluxFields",
    "REPRESENTATION_SIGN",
    "SIGN_CONVENTION",
    "constant_field_value",
    "flux_from_state",
    "representation",
    "resolve_sign",
    "solve_dirichlet_cells",
    "solve_dirichlet_vorticity",
    "solve_neumann_flux",
]
