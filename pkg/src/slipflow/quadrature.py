"""Area quadrature for integrands with an integrable point singularity.

A smooth cutoff ``chi`` splits the integral at a centre point ``c``.  It is
one on every cell within ``RADIUS_CELLS`` cell diameters of ``c`` and decays
to zero over a further ``BLEND_CELLS`` diameters.  The far
part ``f (1 - chi)`` is summed by the grid's midpoint rule; the near part
``f chi`` is integrated in polar coordinates about ``c`` in the disc variable,
where the polar Jacobian ``rho`` absorbs a ``1/|x - y|`` singularity.  Rays
are clipped at the unit circle, so the same rule handles centres on the
boundary (a half-disc patch).

All integrands share one node set: far nodes are grid cell centres, near
nodes are patch points whose field values come from grid interpolation.
"""
from __future__ import annotations

import numpy as np

RADIUS_CELLS = 3.0
BLEND_CELLS = 3.0
N_RAD = 16
N_ANG = 32
BOUNDARY_TOL = 1e-12


def cutoff(t):
    """Smooth partition function: 1 for ``t <= 0``, 0 for ``t >= 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1 - t, 1.0)), 0.0)
        b = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    return a / (a + b)


def _gauss(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


class PointQuadrature:
    """Nodes and weights for ``int_Omega f(y) dy`` with ``f`` singular at ``psi(center)``.

    ``center`` is a disc coordinate with ``|center| <= 1``.
    """

    def __init__(self, grid, center, radius_cells=RADIUS_CELLS, n_rad=N_RAD, n_ang=N_ANG,
                 blend_cells=BLEND_CELLS):
        self.grid = grid
        c = complex(center)
        self.center = c
        rc = abs(c)
        self.on_boundary = rc >= 1 - BOUNDARY_TOL
        if self.on_boundary:
            c = c / rc
            rc = 1.0
            self.center = c
        diam = np.hypot(grid.dr, max(rc, grid.dr) * grid.dtheta)
        self.inner = radius_cells * diam
        self.radius = (radius_cells + blend_cells) * diam
        R = self.radius

        d = np.abs(grid.z - c)
        fw = grid.area * (1 - self.weight(d))
        keep = fw.ravel() > 0
        self.far_index = np.flatnonzero(keep)
        far_zeta = grid.z.ravel()[self.far_index]
        far_w = fw.ravel()[self.far_index]

        near_zeta, near_w = self._patch(c, rc, R, n_rad, n_ang)
        self.n_far = far_zeta.size
        self.zeta = np.concatenate([far_zeta, near_zeta])
        self.weights = np.concatenate([far_w, near_w])
        self.near_zeta = near_zeta

    def _patch(self, c, rc, R, n_rad, n_ang):
        cmap = self.grid.map
        th = np.angle(c) if rc > 0 else 0.0
        if self.on_boundary:
            lo, hi = th + np.pi / 2, th + 1.5 * np.pi
        else:
            lo, hi = th, th + 2 * np.pi
        brk = [lo, hi]
        if rc > 0:
            # angles where the clipped radius switches between R and the chord
            bstar = (1 - rc**2 - R**2) / (2 * R * rc)
            if -1 < bstar < 1:
                a = np.arccos(bstar)
                for k in (th + a, th - a):
                    k = lo + np.mod(k - lo, 2 * np.pi)
                    if lo < k < hi:
                        brk.append(k)
        brk = np.sort(np.array(brk))
        if len(brk) == 2 and not self.on_boundary:
            alpha = lo + 2 * np.pi * np.arange(n_ang) / n_ang
            walpha = np.full(n_ang, 2 * np.pi / n_ang)
        else:
            ga, gw = _gauss(max(8, n_ang // 2))
            alpha, walpha = [], []
            for a0, a1 in zip(brk[:-1], brk[1:]):
                alpha.append(a0 + (a1 - a0) * (ga + 1) / 2)
                walpha.append((a1 - a0) / 2 * gw)
            alpha = np.concatenate(alpha)
            walpha = np.concatenate(walpha)
        e = np.exp(1j * alpha)
        b = (np.conj(c) * e).real
        exit_ = -b + np.sqrt(np.maximum(b**2 + 1 - rc**2, 0.0))
        rmax = np.minimum(R, exit_)
        gr, gwr = _gauss(n_rad)
        rho = rmax[:, None] * (gr[None, :] + 1) / 2
        wrho = rmax[:, None] / 2 * gwr[None, :]
        zeta = c + rho * e[:, None]
        w = walpha[:, None] * wrho * rho * np.abs(cmap.dpsi(zeta)) ** 2 * self.weight(rho)
        good = (rmax[:, None] > 0) & (w > 0)
        return zeta[good], w[good]

    def weight(self, d):
        """Cutoff: 1 inside ``inner``, smooth decay to 0 at ``radius``."""
        return cutoff((d - self.inner) / (self.radius - self.inner))

    # -- node data ------------------------------------------------------------
    def sample(self, f):
        """Values of a grid field at every node (interpolated on the patch)."""
        f = np.asarray(f, dtype=float)
        g = self.grid
        flat = f.reshape((g.Nr * g.Ntheta,) + f.shape[2:])
        near = g.interpolate(f, self.near_zeta)
        return np.concatenate([flat[self.far_index], near], axis=0)

    def disc_derivatives(self):
        """``(Y, phi'(y), phi''(y))`` at the nodes, from the forward map."""
        cmap = self.grid.map
        d1 = cmap.dpsi(self.zeta)
        return self.zeta, 1.0 / d1, -cmap.d2psi(self.zeta) / d1**3

    @property
    def points(self):
        return self.grid.map.psi(self.zeta)

    def integrate(self, values):
        """Weighted sum over nodes; trailing axes of ``values`` are kept."""
        v = np.asarray(values)
        return np.tensordot(self.weights, v, axes=(0, 0))
