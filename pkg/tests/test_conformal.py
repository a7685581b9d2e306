import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slipflow.conformal import (
    ConformalMap, bilipschitz_constants, boundary_frame, boundary_orthogonality_residual,
    cauchy_riemann_residual, cr_hessian, cr_matrix, inverse_point, map_point, phi_gradient,
)
from slipflow.errors import DomainError, NoConvergenceError, PreconditionError

from conftest import MAPS, disc_points

Q = ConformalMap("quadratic", c=0.3)


def test_identity_point():
    assert np.allclose(map_point(ConformalMap(), [0.3, 0.4]), [0.3, 0.4])
    assert np.allclose(inverse_point(ConformalMap(), [0.3, 0.4]), [0.3, 0.4])


def test_quadratic_closed_form():
    assert np.allclose(map_point(Q, [0.5, 0.0]), [0.575, 0.0], atol=1e-15)
    assert np.allclose(inverse_point(Q, [0.575, 0.0]), [0.5, 0.0], atol=1e-13)


def test_moebius_zero_is_identity(rng):
    z = disc_points(rng, 50, 1.0)
    m = ConformalMap("moebius", a=0j)
    assert np.allclose(m.psi(z), z, atol=1e-15)


def test_map_point_outside_disc():
    with pytest.raises(DomainError):
        map_point(Q, [1.1, 0.0])


@pytest.mark.parametrize("kind,kw", [("quadratic", dict(c=0.5)), ("cubic", dict(c=0.34)),
                                     ("moebius", dict(a=1.0 + 0j)), ("spiral", {})])
def test_parameter_ranges(kind, kw):
    with pytest.raises(DomainError):
        ConformalMap(kind, **kw)


def test_inverse_far_outside_raises():
    with pytest.raises((NoConvergenceError, DomainError)):
        Q.phi(np.array([5.0 + 5.0j]))


def test_round_trip_grid(cmap):
    from slipflow.fields import DiscGrid

    g = DiscGrid(64, 128, cmap)
    z = np.concatenate([g.z.ravel(), g.eith])
    assert np.max(np.abs(cmap.phi(cmap.psi(z)) - z)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(r=st.floats(0.0, 0.999), t=st.floats(0, 2 * np.pi), c=st.floats(-0.45, 0.45))
def test_quadratic_round_trip_property(r, t, c):
    m = ConformalMap("quadratic", c=c)
    z = np.array([r * np.exp(1j * t)])
    assert abs(m.phi(m.psi(z))[0] - z[0]) < 1e-12


def test_phi_gradient_examples():
    assert np.allclose(phi_gradient(ConformalMap(), [0.2, -0.4]), np.eye(2))
    assert np.allclose(phi_gradient(Q, map_point(Q, [0.0, 0.0])), np.eye(2))
    G = phi_gradient(Q, map_point(Q, [0.5, 0.0]))
    assert np.hypot(G[0, 0], G[1, 0]) == pytest.approx(1 / 1.3, rel=1e-12)


def test_phi_gradient_fd(cmap, rng):
    x = cmap.psi(disc_points(rng, 5, 0.8))
    h = 1e-6
    for xc in x:
        G = phi_gradient(cmap, np.array([xc.real, xc.imag]))
        for i, e in enumerate((1.0, 1j)):
            d = (cmap.phi(np.array([xc + h * e])) - cmap.phi(np.array([xc - h * e])))[0] / (2 * h)
            assert np.allclose(G[i], [d.real, d.imag], atol=1e-6)


def test_cauchy_riemann(cmap, rng):
    assert cauchy_riemann_residual(cmap, disc_points(rng, 20), 1e-5) < 1e-8


def test_cr_hessian_fd(rng):
    z0 = 0.2 + 0.1j
    d2 = Q.d2psi(z0)
    H = cr_hessian(d2)
    h = 1e-5
    for i, e in enumerate((1.0, 1j)):
        dJ = (cr_matrix(Q.dpsi(z0 + h * e)) - cr_matrix(Q.dpsi(z0 - h * e))) / (2 * h)
        assert np.allclose(H[i], dJ, atol=1e-8)


def test_boundary_frame_identity():
    fr = boundary_frame(ConformalMap(), 0.0)
    assert np.allclose(fr.point, [1, 0])
    assert np.allclose(fr.n, [1, 0])
    # tangent (n2, -n1)
    assert np.allclose(fr.n_perp, [0, -1])
    assert np.allclose(fr.pushforward_residual, 0, atol=1e-15)
    s = np.linspace(0, 2 * np.pi, 17, endpoint=False)
    fr = boundary_frame(ConformalMap(), s)
    assert np.allclose(fr.n, fr.point, atol=1e-15)


def test_pushforward_identity(cmap):
    s = 2 * np.pi * np.arange(64) / 64
    fr = boundary_frame(cmap, s)
    assert np.max(np.abs(fr.pushforward_residual)) < 1e-8
    assert np.allclose(np.sum(fr.n**2, -1), 1)
    assert np.allclose(np.sum(fr.n * fr.n_perp, -1), 0, atol=1e-15)


def test_normal_points_outward(cmap):
    s = np.linspace(0, 2 * np.pi, 32, endpoint=False)
    fr = boundary_frame(cmap, s)
    inner = cmap.psi(0.99 * np.exp(1j * s))
    d = fr.point[:, 0] - inner.real, fr.point[:, 1] - inner.imag
    assert np.all(d[0] * fr.n[:, 0] + d[1] * fr.n[:, 1] > 0)


def test_orthogonality(cmap):
    s = 2 * np.pi * np.arange(64) / 64
    fr = boundary_frame(cmap, s)
    assert boundary_orthogonality_residual(cmap, s, fr.n_perp * 1.7) < 1e-8


def test_orthogonality_rejects_normal_component():
    s = np.array([0.3, 1.0])
    fr = boundary_frame(Q, s)
    with pytest.raises(PreconditionError):
        boundary_orthogonality_residual(Q, s, fr.n_perp + 1e-3 * fr.n)


def test_bilipschitz(cmap, rng):
    x = cmap.psi(disc_points(rng, 200, 1.0))
    c1, c2 = bilipschitz_constants(cmap, np.stack([x.real, x.imag], -1))
    assert 0 < c1 <= c2 < np.inf
    if cmap.kind == "identity":
        assert c1 == pytest.approx(1) and c2 == pytest.approx(1)
