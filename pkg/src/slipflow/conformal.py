"""Closed-form conformal maps from the unit disc onto smooth simply connected domains.

Points are handled internally as complex numbers ``x1 + 1j*x2``.  The public
helpers accept either complex arrays or real arrays whose last axis has
length 2, and return real ``(..., 2)`` arrays.

The forward map ``psi`` sends the closed unit disc onto the closed domain;
its inverse ``phi`` is evaluated by damped Newton iteration.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NoConvergenceError, PreconditionError

KINDS = ("identity", "moebius", "quadratic", "cubic")

NEWTON_TOL = 1e-13
NEWTON_MAXITER = 50
RESIDUAL_TOL = 1e-12
DISC_SLACK = 1e-10


def to_complex(p) -> np.ndarray:
    """Convert ``(..., 2)`` real input (or complex input) to a complex array."""
    a = np.asarray(p)
    if np.iscomplexobj(a):
        return a.astype(complex)
    a = a.astype(float)
    if a.shape[-1:] != (2,):
        raise ValueError(f"expected trailing axis of length 2, got shape {a.shape}")
    return a[..., 0] + 1j * a[..., 1]


def to_pairs(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return np.stack([z.real, z.imag], axis=-1)


def cr_matrix(d) -> np.ndarray:
    """Real Jacobian ``M[i, k] = d_i f_k`` of a holomorphic f with complex derivative d.

    With ``d = p + iq`` the matrix is ``[[p, q], [-q, p]]``.
    """
    d = np.asarray(d, dtype=complex)
    p, q = d.real, d.imag
    return np.stack([np.stack([p, q], -1), np.stack([-q, p], -1)], -2)


def anti_cr_matrix(d) -> np.ndarray:
    """Jacobian ``M[i, k] = d_i f_k`` of ``f = conj(h)`` where ``h' = d``."""
    d = np.asarray(d, dtype=complex)
    p, q = d.real, d.imag
    return np.stack([np.stack([p, -q], -1), np.stack([-q, -p], -1)], -2)


def cr_hessian(d2) -> np.ndarray:
    """Second derivatives ``H[i, j, k] = d_i d_j f_k`` of a holomorphic f with f'' = d2."""
    d2 = np.asarray(d2, dtype=complex)
    a, b = d2.real, d2.imag
    h11 = np.stack([a, b], -1)
    h12 = np.stack([-b, a], -1)
    h22 = np.stack([-a, -b], -1)
    return np.stack([np.stack([h11, h12], -2), np.stack([h12, h22], -2)], -3)


@dataclass(frozen=True)
class ConformalMap:
    """A member of the analytic map catalogue.

    Parameters
    ----------
    kind : {"identity", "moebius", "quadratic", "cubic"}
    a : complex
        Moebius parameter, ``|a| < 1``.
    c : float
        Polynomial coefficient; ``|c| < 1/2`` (quadratic) or ``|c| < 1/3`` (cubic).
    rotation : float
        Rotation angle post-composed with the Moebius factor.
    """

    kind: str = "identity"
    a: complex = 0j
    c: float = 0.0
    rotation: float = 0.0
    _scale: float = field(init=False, repr=False, compare=False, default=1.0)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown map kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "a", complex(self.a))
        object.__setattr__(self, "c", float(self.c))
        if self.kind == "moebius" and not abs(self.a) < 1:
            raise DomainError("moebius parameter must satisfy |a| < 1")
        if self.kind == "quadratic" and not abs(self.c) < 0.5:
            raise DomainError("quadratic map is univalent only for |c| < 1/2")
        if self.kind == "cubic" and not abs(self.c) < 1.0 / 3.0:
            raise DomainError("cubic map is univalent only for |c| < 1/3")
        s = np.exp(1j * np.linspace(0, 2 * np.pi, 512, endpoint=False))
        object.__setattr__(self, "_scale", max(1.0, float(np.abs(self.psi(s)).max())))

    # forward map and its complex derivatives -------------------------------
    def psi(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "identity":
            return z.copy()
        if self.kind == "moebius":
            a = self.a
            return np.exp(1j * self.rotation) * (z - a) / (1 - np.conj(a) * z)
        if self.kind == "quadratic":
            return z + self.c * z**2
        return z + self.c * z**3

    def dpsi(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "identity":
            return np.ones_like(z)
        if self.kind == "moebius":
            a = self.a
            return np.exp(1j * self.rotation) * (1 - abs(a) ** 2) / (1 - np.conj(a) * z) ** 2
        if self.kind == "quadratic":
            return 1 + 2 * self.c * z
        return 1 + 3 * self.c * z**2

    def d2psi(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "identity":
            return np.zeros_like(z)
        if self.kind == "moebius":
            a = self.a
            ac = np.conj(a)
            return np.exp(1j * self.rotation) * 2 * ac * (1 - abs(a) ** 2) / (1 - ac * z) ** 3
        if self.kind == "quadratic":
            return np.full_like(z, 2 * self.c)
        return 6 * self.c * z

    # inverse map -----------------------------------------------------------
    def newton_inverse(self, x):
        """Solve ``psi(z) = x`` without raising.

        Returns ``(z, ok)`` where ``ok`` flags points that converged to a
        preimage inside the closed disc (up to ``DISC_SLACK``).
        """
        x = np.asarray(x, dtype=complex)
        if self.kind == "identity":
            z = x.copy()
            return z, np.abs(z) <= 1 + DISC_SLACK
        z = x / self._scale
        res = self.psi(z) - x
        err = np.abs(res)
        lam = np.ones(z.shape)
        for _ in range(NEWTON_MAXITER):
            active = err > NEWTON_TOL
            if not active.any():
                break
            step = res / self.dpsi(z)
            trial = z - lam * step
            tres = self.psi(trial) - x
            terr = np.abs(tres)
            better = (terr < err) | ~np.isfinite(err)
            upd = active & better
            z = np.where(upd, trial, z)
            res = np.where(upd, tres, res)
            err = np.where(upd, terr, err)
            lam = np.where(upd, np.minimum(1.0, 2 * lam), np.where(active, 0.5 * lam, lam))
        ok = (err <= RESIDUAL_TOL) & (np.abs(z) <= 1 + DISC_SLACK)
        return z, ok

    def phi(self, x):
        """Inverse map as complex array; raises on failure."""
        x = np.asarray(x, dtype=complex)
        z, ok = self.newton_inverse(x)
        if not np.all(ok):
            bad = np.abs(self.psi(z) - x) > RESIDUAL_TOL
            if np.any(bad):
                raise NoConvergenceError(
                    f"Newton inversion failed to converge in {NEWTON_MAXITER} iterations "
                    f"for {int(np.count_nonzero(bad))} point(s); point outside domain or near-critical map"
                )
            raise DomainError("point lies outside the closed image domain")
        r = np.abs(z)
        return np.where(r > 1, z / np.maximum(r, 1.0), z)

    def phi_derivatives(self, x):
        """Return ``(phi(x), phi'(x), phi''(x))`` as complex arrays."""
        z = self.phi(x)
        d1 = self.dpsi(z)
        d2 = self.d2psi(z)
        return z, 1.0 / d1, -d2 / d1**3

    def contains(self, x):
        return self.newton_inverse(x)[1]

    def boundary_scale(self) -> float:
        """Largest modulus of the boundary image, used to rescale Newton guesses."""
        return self._scale


def map_point(cmap: ConformalMap, z) -> np.ndarray:
    """Evaluate the forward map at disc point(s) ``z``."""
    zc = to_complex(z)
    if np.any(np.abs(zc) > 1 + 1e-12):
        raise DomainError("map_point requires |z| <= 1")
    return to_pairs(cmap.psi(zc))


def inverse_point(cmap: ConformalMap, x) -> np.ndarray:
    """Evaluate the inverse map at domain point(s) ``x`` (clamped to the closed disc)."""
    return to_pairs(cmap.phi(to_complex(x)))


def phi_gradient(cmap: ConformalMap, x) -> np.ndarray:
    """Real 2x2 gradient ``G[i, k] = d_i phi_k`` at domain point(s) ``x``."""
    _, d1, _ = cmap.phi_derivatives(to_complex(x))
    return cr_matrix(d1)


@dataclass(frozen=True)
class BoundaryFrame:
    """Orthonormal frame on the domain boundary at arc parameter ``s``."""

    s: float
    point: np.ndarray
    n: np.ndarray
    n_perp: np.ndarray
    pushforward_residual: np.ndarray


def _frame_arrays(cmap: ConformalMap, s):
    s = np.asarray(s, dtype=float)
    e = np.exp(1j * s)
    pt = cmap.psi(e)
    tangent = 1j * e * cmap.dpsi(e)
    tangent = tangent / np.abs(tangent)
    n = -1j * tangent
    # outward check: a point slightly inside the disc must land on the inner side
    eps = 1e-6
    probe = cmap.psi((1 - eps) * e)
    side = np.real(np.conj(probe - pt) * n)
    n = np.where(side > 0, -n, n)
    return e, pt, n


def boundary_frame(cmap: ConformalMap, s) -> BoundaryFrame:
    """Boundary point, outward normal and tangent ``n_perp = (n2, -n1)`` at ``psi(e^{is})``.

    ``pushforward_residual`` is ``n . grad(phi) - |grad(phi_1)| * n_disc`` where
    ``n_disc = phi(point)`` is the disc normal; it vanishes for a conformal map.
    """
    if np.ndim(s) == 0 and not (0 <= float(s) < 2 * np.pi + 1e-12):
        raise DomainError("boundary parameter must lie in [0, 2*pi)")
    e, pt, n = _frame_arrays(cmap, s)
    dphi = 1.0 / cmap.dpsi(e)
    # (n . grad) phi in complex form is n_vec rotated/scaled by phi'
    push = n * dphi - np.abs(dphi) * e
    n_pairs = to_pairs(n)
    n_perp = np.stack([n_pairs[..., 1], -n_pairs[..., 0]], axis=-1)
    return BoundaryFrame(
        s=s, point=to_pairs(pt), n=n_pairs, n_perp=n_perp, pushforward_residual=to_pairs(push)
    )


def boundary_orthogonality_residual(cmap: ConformalMap, s, u) -> float:
    """Max over samples of ``|u_i d_i phi_j phi_j|`` for tangent boundary vectors.

    Parameters
    ----------
    s : array of boundary parameters locating the samples on the boundary.
    u : array ``(n, 2)`` of vectors at those points; must satisfy ``u . n = 0``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=float))
    uc = to_complex(np.atleast_2d(u))
    e, _, n = _frame_arrays(cmap, s)
    normal = np.real(np.conj(uc) * n)
    if np.any(np.abs(normal) > 1e-8):
        raise PreconditionError(
            f"boundary samples are not tangent: max |u.n| = {np.abs(normal).max():.3e}"
        )
    dphi = 1.0 / cmap.dpsi(e)
    # (u . grad) phi  <->  phi' * u  for holomorphic phi
    du = dphi * uc
    return float(np.abs(np.real(np.conj(du) * e)).max())


def bilipschitz_constants(cmap: ConformalMap, points, chunk: int = 2048):
    """Measured ``(c1, c2)`` with ``c1 |x-y| <= |phi(x)-phi(y)| <= c2 |x-y|`` over all pairs."""
    x = to_complex(points).ravel()
    z = cmap.phi(x)
    c1, c2 = np.inf, 0.0
    n = x.size
    for start in range(0, n, chunk):
        xa = x[start:start + chunk, None]
        za = z[start:start + chunk, None]
        dx = np.abs(xa - x[None, :])
        dz = np.abs(za - z[None, :])
        mask = dx > 0
        ratio = dz[mask] / dx[mask]
        c1 = min(c1, float(ratio.min()))
        c2 = max(c2, float(ratio.max()))
    return c1, c2


def cauchy_riemann_residual(cmap: ConformalMap, z, h: float) -> float:
    """Max Cauchy-Riemann defect of psi from central differences with step ``h``."""
    z = np.asarray(z, dtype=complex)
    px = (cmap.psi(z + h) - cmap.psi(z - h)) / (2 * h)
    py = (cmap.psi(z + 1j * h) - cmap.psi(z - 1j * h)) / (2 * h)
    r1 = px.real - py.imag
    r2 = py.real + px.imag
    return float(np.max(np.hypot(r1, r2)))


def from_config(kind: str, a_re: float = 0.0, a_im: float = 0.0, c: float = 0.0) -> ConformalMap:
    return ConformalMap(kind=kind, a=complex(a_re, a_im), c=c)
