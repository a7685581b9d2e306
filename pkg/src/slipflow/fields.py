"""Polar grid on the unit disc, mapped to the physical domain, with field operators.

Scalar fields are ``(Nr, Ntheta)`` arrays and vector fields ``(Nr, Ntheta, 2)``
arrays of physical Cartesian components.  Derivatives are taken by central
differences in ``(r, theta)`` and pushed to physical coordinates through the
analytic map derivative.  The first ring reaches across the origin by pairing
``(0, j)`` with ``(0, j + Ntheta/2)``.  Angular stencils are normalised by ``sin(dtheta)`` and
``2(1 - cos(dtheta))`` so that linear fields are differentiated exactly.  The outer ring uses a cubic ghost
extrapolation, which is equivalent to second-order one-sided stencils.
"""
from __future__ import annotations

import csv
import io

import numpy as np

from .conformal import ConformalMap, to_complex
from .errors import DomainError


class DiscGrid:
    """Cell-centred polar grid ``r_i = (i + 1/2)/Nr``, ``theta_j = (j + 1/2) 2pi/Ntheta``."""

    def __init__(self, Nr: int, Ntheta: int, cmap: ConformalMap | None = None):
        if Nr < 4 or Ntheta < 8 or Ntheta % 2:
            raise DomainError("grid needs Nr >= 4 and an even Ntheta >= 8")
        self.Nr = int(Nr)
        self.Ntheta = int(Ntheta)
        self.map = cmap if cmap is not None else ConformalMap()
        self.dr = 1.0 / self.Nr
        self.dtheta = 2 * np.pi / self.Ntheta
        self.r = (np.arange(self.Nr) + 0.5) * self.dr
        self.theta = (np.arange(self.Ntheta) + 0.5) * self.dtheta
        self.eith = np.exp(1j * self.theta)
        self.z = self.r[:, None] * self.eith[None, :]
        self.x = self.map.psi(self.z)
        self.dpsi = self.map.dpsi(self.z)
        self.dphi = 1.0 / self.dpsi
        self.area = np.abs(self.dpsi) ** 2 * self.r[:, None] * self.dr * self.dtheta
        # ghost ring just outside the boundary
        self.r_ghost = 1.0 + 0.5 * self.dr
        self.z_ghost = self.r_ghost * self.eith
        self.dpsi_ghost = self.map.dpsi(self.z_ghost)
        self._anti = (np.arange(self.Ntheta) + self.Ntheta // 2) % self.Ntheta
        # angular stencil denominators exact on the m = 1 modes (linear fields)
        self.dtheta_d1 = np.sin(self.dtheta)
        self.dtheta_d2 = 2 * (1 - np.cos(self.dtheta))

    @property
    def shape(self):
        return (self.Nr, self.Ntheta)

    @property
    def points(self) -> np.ndarray:
        """Physical cell centres as ``(Nr, Ntheta, 2)``."""
        return np.stack([self.x.real, self.x.imag], axis=-1)

    def cell_diameter(self) -> np.ndarray:
        return np.abs(self.dpsi) * np.hypot(self.dr, self.r[:, None] * self.dtheta)

    def refine(self, factor: int = 2) -> "DiscGrid":
        return DiscGrid(self.Nr * factor, self.Ntheta * factor, self.map)

    def sample(self, func) -> np.ndarray:
        """Evaluate ``func(x1, x2)`` at the physical cell centres."""
        return np.asarray(func(self.x.real, self.x.imag), dtype=float)

    # -- raw polar differences ------------------------------------------------
    def extrapolated_ghost(self, f):
        """Cubic extrapolation of ``f`` to the ghost ring."""
        return 4 * f[-1] - 6 * f[-2] + 4 * f[-3] - f[-4]

    def antipodal(self, f0):
        return f0[self._anti]

    def polar_derivatives(self, f, ghost=None):
        """Central ``(f_r, f_theta)`` for an array with leading axes ``(Nr, Ntheta)``."""
        f = np.asarray(f, dtype=float)
        if ghost is None:
            ghost = self.extrapolated_ghost(f)
        inner = self.antipodal(f[0])
        up = np.concatenate([f[1:], ghost[None]], axis=0)
        down = np.concatenate([inner[None], f[:-1]], axis=0)
        f_r = (up - down) / (2 * self.dr)
        f_t = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) / (2 * self.dtheta_d1)
        return f_r, f_t

    def complex_gradient(self, f, ghost=None):
        """Physical gradient ``d1 f + i d2 f`` of a scalar field."""
        f_r, f_t = self.polar_derivatives(f, ghost)
        gxi = self.eith[None, :] * (f_r + 1j * f_t / self.r[:, None])
        return np.conj(self.dphi) * gxi

    # -- physical operators -------------------------------------------------
    def grad(self, f, ghost=None):
        """Gradient of a scalar field as ``(..., 2)``; of a vector field as ``T[..., i, j] = d_i u_j``."""
        f = np.asarray(f, dtype=float)
        if f.ndim == 3:
            g1 = self.grad(f[..., 0], None if ghost is None else ghost[..., 0])
            g2 = self.grad(f[..., 1], None if ghost is None else ghost[..., 1])
            return np.stack([g1, g2], axis=-1)
        g = self.complex_gradient(f, ghost)
        return np.stack([g.real, g.imag], axis=-1)

    def div(self, u, ghost=None):
        g1 = self.complex_gradient(u[..., 0], None if ghost is None else ghost[..., 0])
        g2 = self.complex_gradient(u[..., 1], None if ghost is None else ghost[..., 1])
        return g1.real + g2.imag

    def curl(self, u, ghost=None):
        """Vorticity ``d2 u1 - d1 u2``."""
        g1 = self.complex_gradient(u[..., 0], None if ghost is None else ghost[..., 0])
        g2 = self.complex_gradient(u[..., 1], None if ghost is None else ghost[..., 1])
        return g1.imag - g2.real

    def perp_grad(self, f, ghost=None):
        """``(d2 f, -d1 f)``."""
        g = self.complex_gradient(f, ghost)
        return np.stack([g.imag, -g.real], axis=-1)

    def laplacian(self, f, ghost=None):
        f = np.asarray(f, dtype=float)
        if f.ndim == 3:
            return np.stack([self.laplacian(f[..., k]) for k in range(f.shape[-1])], axis=-1)
        if ghost is None:
            ghost = self.extrapolated_ghost(f)
        inner = self.antipodal(f[0])
        up = np.concatenate([f[1:], ghost[None]], axis=0)
        down = np.concatenate([inner[None], f[:-1]], axis=0)
        r = self.r[:, None]
        f_rr = (up - 2 * f + down) / self.dr**2
        f_r = (up - down) / (2 * self.dr)
        # f_r / r amplifies the truncation error near the origin; a wider
        # stencil there keeps the Laplacian second order on every ring
        ext = np.concatenate([self.antipodal(f[1])[None], inner[None], f, ghost[None]], axis=0)
        n = self.Nr - 1
        f_r[:n] = (-ext[4:n + 4] + 8 * ext[3:n + 3] - 8 * ext[1:n + 1] + ext[0:n]) / (12 * self.dr)
        f_tt = (np.roll(f, -1, axis=1) - 2 * f + np.roll(f, 1, axis=1)) / self.dtheta_d2
        return np.abs(self.dphi) ** 2 * (f_rr + f_r / r + f_tt / r**2)

    # -- quadrature and norms -------------------------------------------------
    def integrate(self, f) -> float:
        f = np.asarray(f, dtype=float)
        if f.ndim == 3:
            return np.array([self.integrate(f[..., k]) for k in range(f.shape[-1])])
        return float(np.sum(f * self.area))

    def pointwise_abs(self, f):
        f = np.asarray(f, dtype=float)
        if f.ndim == 2:
            return np.abs(f)
        return np.sqrt(np.sum(f.reshape(self.Nr, self.Ntheta, -1) ** 2, axis=-1))

    def lp_norm(self, f, p) -> float:
        a = self.pointwise_abs(f)
        if p == np.inf:
            return float(a.max())
        if p < 1:
            raise DomainError("L^p norm needs p >= 1")
        m = a.max()
        if m == 0:
            return 0.0
        return float(m * np.sum((a / m) ** p * self.area) ** (1.0 / p))

    def h1_norm(self, f) -> float:
        return float(np.sqrt(self.lp_norm(f, 2) ** 2 + self.lp_norm(self.grad(f), 2) ** 2))

    # -- point evaluation -----------------------------------------------------
    def interpolate(self, f, zeta):
        """Bilinear interpolation in ``(r, theta)`` index space at disc points ``zeta``.

        Points inside the first ring borrow the antipodal cell; points beyond
        the outer cell centre are linearly extrapolated.
        """
        f = np.asarray(f, dtype=float)
        zeta = np.asarray(zeta, dtype=complex)
        rr = np.abs(zeta)
        tt = np.mod(np.angle(zeta), 2 * np.pi)
        fr = rr * self.Nr - 0.5
        i0 = np.floor(fr).astype(int)
        i0 = np.clip(i0, -1, self.Nr - 2)
        wr = fr - i0
        ft = tt / self.dtheta - 0.5
        j0 = np.floor(ft).astype(int)
        wt = ft - j0
        j0 %= self.Ntheta
        j1 = (j0 + 1) % self.Ntheta

        def ring(i, j):
            below = i < 0
            ii = np.where(below, 0, i)
            jj = np.where(below, self._anti[j], j)
            return f[ii, jj]

        wt_ = wt.reshape(wt.shape + (1,) * (f.ndim - 2))
        wr_ = wr.reshape(wr.shape + (1,) * (f.ndim - 2))
        lo = (1 - wt_) * ring(i0, j0) + wt_ * ring(i0, j1)
        hi = (1 - wt_) * ring(i0 + 1, j0) + wt_ * ring(i0 + 1, j1)
        return (1 - wr_) * lo + wr_ * hi

    def interpolate_physical(self, f, x):
        return self.interpolate(f, self.map.phi(to_complex(x) if not np.iscomplexobj(x) else x))

    def boundary_values(self, f):
        """Quadratic extrapolation of ``f`` to ``r = 1`` at each ``theta_j``."""
        f = np.asarray(f, dtype=float)
        return (15 * f[-1] - 10 * f[-2] + 3 * f[-3]) / 8


def differential(grid: DiscGrid, f, which: str):
    """Dispatch to one of ``grad, div, curl, perp_grad, laplacian``."""
    ops = {
        "grad": grid.grad,
        "div": grid.div,
        "curl": grid.curl,
        "perp_grad": grid.perp_grad,
        "laplacian": grid.laplacian,
    }
    if which not in ops:
        raise DomainError(f"unknown operator {which!r}")
    return ops[which](f)


def integrate(grid: DiscGrid, f) -> float:
    return grid.integrate(f)


def lp_norm(grid: DiscGrid, f, p) -> float:
    return grid.lp_norm(f, p)


def h1_norm(grid: DiscGrid, f) -> float:
    return grid.h1_norm(f)


# -- smooth fields satisfying u.n = 0 -----------------------------------------
class SlipField:
    """Analytic vector field ``grad_perp(s) + grad(chi)`` pulled back through the map.

    The stream function ``s = (1 - |z|^2)^k Re(sum a_m z^m)`` vanishes on the
    boundary and the potential ``chi`` has vanishing normal derivative, so the
    field is tangent to the boundary of the mapped domain.  With ``k = 3`` the
    disc Laplacian of ``s`` also vanishes there, so the vorticity is zero on
    the boundary as well.
    """

    def __init__(self, cmap: ConformalMap, stream, potential, radial=0.0, power: int = 1):
        self.map = cmap
        self.stream = np.asarray(stream, dtype=complex)
        self.potential = np.asarray(potential, dtype=complex)
        self.radial = float(radial)
        self.power = int(power)

    def _disc_gradients(self, zeta):
        """Complex disc-coordinate gradients of the stream function and potential."""
        zeta = np.asarray(zeta, dtype=complex)
        rsq = np.abs(zeta) ** 2
        g = np.zeros_like(zeta)
        dg = np.zeros_like(zeta)
        for m, a in enumerate(self.stream):
            g = g + a * zeta**m
            if m:
                dg = dg + m * a * zeta ** (m - 1)
        # grad Re(h) = conj(h') for holomorphic h; grad |z|^2 = 2 z
        k = self.power
        grad_s = -2 * k * zeta * (1 - rsq) ** (k - 1) * g.real + (1 - rsq) ** k * np.conj(dg)
        grad_chi = self.radial * (2 * zeta - 2 * rsq * zeta)
        for m, d in enumerate(self.potential, start=1):
            c = m / (m + 2.0)
            h = d * zeta**m
            dh = m * d * zeta ** (m - 1)
            grad_chi = grad_chi + np.conj(dh) - c * (2 * zeta * h.real + rsq * np.conj(dh))
        return grad_s, grad_chi

    def at_disc(self, zeta):
        """Physical velocity (complex form) at disc points ``zeta``."""
        zeta = np.asarray(zeta, dtype=complex)
        gs, gc = self._disc_gradients(zeta)
        cd = np.conj(1.0 / self.map.dpsi(zeta))
        grad_s = cd * gs
        grad_chi = cd * gc
        # grad_perp s = (d2 s, -d1 s) = -i * grad s in complex form
        return -1j * grad_s + grad_chi

    def __call__(self, x):
        zc = self.map.phi(to_complex(x))
        u = self.at_disc(zc)
        return np.stack([u.real, u.imag], axis=-1)

    def on_grid(self, grid: DiscGrid) -> np.ndarray:
        u = self.at_disc(grid.z)
        return np.stack([u.real, u.imag], axis=-1)

    def tangency_residual(self, n_samples: int = 256) -> float:
        """Max ``|u . n|`` over boundary samples."""
        from .conformal import boundary_frame

        s = np.linspace(0, 2 * np.pi, n_samples, endpoint=False)
        fr = boundary_frame(self.map, s)
        u = self.at_disc(np.exp(1j * s))
        return float(np.max(np.abs(u.real * fr.n[:, 0] + u.imag * fr.n[:, 1])))


def slip_field_sampler(cmap: ConformalMap, seed: int, modes: int = 3, power: int = 1) -> SlipField:
    if modes < 1:
        raise DomainError("modes must be >= 1")
    rng = np.random.default_rng(seed)
    stream = (rng.standard_normal(modes + 1) + 1j * rng.standard_normal(modes + 1)) / (
        1 + np.arange(modes + 1)
    )
    potential = (rng.standard_normal(modes) + 1j * rng.standard_normal(modes)) / (
        1 + np.arange(modes)
    )
    radial = rng.standard_normal()
    return SlipField(cmap, stream, potential, radial, power)


def random_slip_field(grid: DiscGrid, seed: int, modes: int = 3) -> np.ndarray:
    """Random smooth vector field on ``grid`` with ``u . n = 0`` on the boundary."""
    return slip_field_sampler(grid.map, seed, modes).on_grid(grid)


def write_snapshot_csv(grid: DiscGrid, path_or_buffer, **fields):
    """Write ``i,j,r,theta,x1,x2,<fields...>`` one row per cell; vectors expand to ``name1,name2``."""
    names, cols = [], []
    for name, f in fields.items():
        f = np.asarray(f, dtype=float)
        if f.ndim == 3:
            for k in range(f.shape[-1]):
                names.append(f"{name}{k + 1}")
                cols.append(f[..., k])
        else:
            names.append(name)
            cols.append(f)
    own = isinstance(path_or_buffer, (str, bytes)) or hasattr(path_or_buffer, "__fspath__")
    fh = open(path_or_buffer, "w", newline="") if own else path_or_buffer
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["i", "j", "r", "theta", "x1", "x2"] + names)
        for i in range(grid.Nr):
            for j in range(grid.Ntheta):
                row = [i + 1, j + 1, grid.r[i], grid.theta[j], grid.x[i, j].real, grid.x[i, j].imag]
                row += [c[i, j] for c in cols]
                w.writerow([fmt(v) for v in row])
    finally:
        if own:
            fh.close()


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def snapshot_csv_text(grid: DiscGrid, **fields) -> str:
    buf = io.StringIO()
    write_snapshot_csv(grid, buf, **fields)
    return buf.getvalue()
