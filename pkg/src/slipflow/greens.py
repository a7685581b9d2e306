"""Neumann function of the unit disc and its pull-back to a mapped domain.

On the disc

    N(X, Y) = -(1/2pi) [ log|X - Y| + log|1 - conj(X) Y| ],

where ``|1 - conj(X) Y|^2 = |X|^2 |Y|^2 - 2 X.Y + 1`` is the regular form of
the image-point distance.  The pull-back is ``Ntilde(x, y) = N(phi(x), phi(y))``.
Both logarithms are real parts of functions holomorphic in ``y`` (and,
after conjugation, in ``x``), so every derivative follows from complex
derivatives of ``phi``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .conformal import ConformalMap, to_complex
from .errors import SingularityError

C_LOG = -1.0 / (2 * np.pi)
COINCIDENCE_TOL = 1e-14


def _check_distinct(d):
    if np.any(np.abs(d) <= COINCIDENCE_TOL):
        raise SingularityError("kernel evaluated at coincident points")


def disc_kernel(xt, yt):
    """Neumann function of the unit disc, ``xt`` and ``yt`` in the closed disc."""
    X = to_complex(xt)
    Y = to_complex(yt)
    d = X - Y
    _check_distinct(d)
    q = (X.real**2 + X.imag**2) * (Y.real**2 + Y.imag**2) - 2 * (X.real * Y.real + X.imag * Y.imag) + 1
    return C_LOG * (np.log(np.abs(d)) + 0.5 * np.log(q))


@dataclass(frozen=True)
class KernelEval:
    """Pull-back kernel with first and second derivatives.

    ``hess_xy[..., i, j] = d_{x_i} d_{y_j} Ntilde`` and
    ``hess_yy[..., i, j] = d_{y_i} d_{y_j} Ntilde``.
    """

    value: np.ndarray
    grad_y: np.ndarray
    grad_x: np.ndarray
    hess_xy: np.ndarray
    hess_yy: np.ndarray


def _pairs(w):
    return np.stack([w.real, w.imag], axis=-1)


def kernel_disc_data(X, dX, Y, dY, d2Y, second=True):
    """Kernel from disc data: ``X = phi(x)``, ``dX = phi'(x)``, ``Y = phi(y)`` and
    ``dY, d2Y`` the first two derivatives of ``phi`` at ``y``.  Broadcasts."""
    X, dX, Y, dY, d2Y = np.broadcast_arrays(*(np.asarray(a, dtype=complex) for a in (X, dX, Y, dY, d2Y)))
    D = X - Y
    _check_distinct(D)
    Q = 1 - np.conj(X) * Y
    Xb = np.conj(X)
    value = C_LOG * (np.log(np.abs(D)) + np.log(np.abs(Q)))
    Gp = -dY / D - Xb * dY / Q
    Hp = dX / D - np.conj(Y) * dX / np.conj(Q)
    grad_y = C_LOG * _pairs(np.conj(Gp))
    grad_x = C_LOG * _pairs(np.conj(Hp))
    if not second:
        nan = np.full(value.shape + (2, 2), np.nan)
        return KernelEval(value, grad_y, grad_x, nan, nan)
    Gpp = -d2Y / D - dY**2 / D**2 - Xb * d2Y / Q - Xb**2 * dY**2 / Q**2
    hess_yy = C_LOG * np.stack(
        [np.stack([Gpp.real, -Gpp.imag], -1), np.stack([-Gpp.imag, -Gpp.real], -1)], -2
    )
    K = dY * dX / D**2
    L = -dX * np.conj(dY) / np.conj(Q) ** 2
    hess_xy = C_LOG * np.stack(
        [
            np.stack([K.real + L.real, -K.imag + L.imag], -1),
            np.stack([-K.imag - L.imag, -K.real + L.real], -1),
        ],
        -2,
    )
    return KernelEval(value, grad_y, grad_x, hess_xy, hess_yy)


def pullback_kernel(cmap: ConformalMap, x, y, second: bool = True) -> KernelEval:
    """``Ntilde(x, y)`` with analytic derivatives; ``x`` interior, ``y`` in the closed domain."""
    xc = to_complex(x)
    yc = to_complex(y)
    if np.any(np.abs(xc - yc) <= COINCIDENCE_TOL):
        raise SingularityError("kernel evaluated at x = y")
    X, dX, _ = cmap.phi_derivatives(xc)
    Y, dY, d2Y = cmap.phi_derivatives(yc)
    return kernel_disc_data(X, dX, Y, dY, d2Y, second=second)


def boundary_normal_derivative(cmap: ConformalMap, x, s):
    """``n . grad_y Ntilde(x, y0)`` at ``y0 = psi(e^{is})``; one value per ``s``."""
    xc = complex(to_complex(x))
    s = np.asarray(s, dtype=float)
    zeta = np.exp(1j * s)
    dpsi = cmap.dpsi(zeta)
    X, dX, _ = cmap.phi_derivatives(np.array([xc]))
    dY = 1.0 / dpsi
    d2Y = -cmap.d2psi(zeta) / dpsi**3
    ke = kernel_disc_data(X[0], dX[0], zeta, dY, d2Y, second=False)
    n = zeta * dpsi / np.abs(dpsi)
    return ke.grad_y[..., 0] * n.real + ke.grad_y[..., 1] * n.imag


def normal_derivative_law(cmap: ConformalMap, s):
    """The closed-form value ``-(1/2pi)|grad phi_1(y0)|``."""
    return C_LOG / np.abs(cmap.dpsi(np.exp(1j * np.asarray(s, dtype=float))))


def boundary_flux_total(cmap: ConformalMap, x, n: int = 256) -> float:
    """Trapezoid rule for the boundary integral of the normal derivative in ``dS``."""
    s = 2 * np.pi * np.arange(n) / n
    dS = np.abs(cmap.dpsi(np.exp(1j * s))) * (2 * np.pi / n)
    return float(np.sum(boundary_normal_derivative(cmap, x, s) * dS))


def kernel_on_grid(grid, x, second: bool = False) -> KernelEval:
    """``Ntilde(x, .)`` at every cell centre of ``grid`` (disc data from the grid itself)."""
    cmap = grid.map
    X, dX, _ = cmap.phi_derivatives(np.array([complex(to_complex(x))]))
    dY = grid.dphi
    d2Y = -cmap.d2psi(grid.z) / grid.dpsi**3
    return kernel_disc_data(X[0], dX[0], grid.z, dY, d2Y, second=second)


def harmonicity_residual(grid, x, exclusion: float) -> float:
    """L2 norm of the grid Laplacian of ``Ntilde(x, .)`` over cells farther than ``exclusion`` from ``x``."""
    xc = complex(to_complex(x))
    val = kernel_on_grid(grid, xc).value
    lap = grid.laplacian(val)
    far = np.abs(grid.x - xc) > exclusion
    return float(np.sqrt(np.sum(np.where(far, lap, 0.0) ** 2 * grid.area)))


def harmonicity_order(cmap: ConformalMap, x, Nr_list=(32, 64, 128), exclusion: float | None = None):
    """Least-squares order of the harmonicity residual over ``h = 1/Nr``.

    The excluded neighbourhood is fixed in physical space (five coarse-grid
    cell widths) so every grid measures the same region.
    """
    from .fields import DiscGrid

    Nr_list = sorted(Nr_list)
    if exclusion is None:
        exclusion = 5.0 * np.hypot(1.0, 1.0) / Nr_list[0] * float(np.abs(cmap.dpsi(np.exp(1j * np.linspace(0, 2 * np.pi, 64)))).max())
    errs = np.array([harmonicity_residual(DiscGrid(n, 2 * n, cmap), x, exclusion) for n in Nr_list])
    h = 1.0 / np.asarray(Nr_list, dtype=float)
    order = float(np.polyfit(np.log(h), np.log(errs), 1)[0])
    return order, errs
