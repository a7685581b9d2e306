import numpy as np
import pytest

from slipflow.dynamics import Params, State
from slipflow.elliptic import (
    constant_field_value, flux_from_state, representation, resolve_sign, solve_dirichlet_vorticity,
    solve_neumann_flux,
)
from slipflow.errors import PreconditionError, StateCorruptionError
from slipflow.fields import DiscGrid
from slipflow.suites import manufactured_flux, snapshot_source, snapshot_state

from conftest import MAPS


def _state(g, u=None, rho=None):
    rho = np.ones(g.shape) if rho is None else rho
    u = np.zeros(g.shape + (2,)) if u is None else u
    return State(g, rho, u)


def test_flux_at_rest():
    g = DiscGrid(16, 32)
    ff = flux_from_state(_state(g), Params(mu=1.0, beta=1.5, gamma=1.5))
    assert np.allclose(ff.F, -1) and np.allclose(ff.omega, 0)


def test_flux_linear_expansion():
    g = DiscGrid(16, 32)
    u = np.stack([g.x.real, g.x.imag], -1)
    ff = flux_from_state(_state(g, u), Params(mu=1.0, beta=1.5, gamma=1.5))
    assert np.allclose(ff.F[:-2], 5.0, atol=1e-10)


def test_flux_rotation_vorticity():
    g = DiscGrid(16, 32)
    u = np.stack([-g.x.imag, g.x.real], -1)
    ff = flux_from_state(_state(g, u), Params())
    assert np.allclose(ff.omega, -2, atol=1e-10)


def test_flux_rejects_bad_density():
    g = DiscGrid(8, 16)
    rho = np.ones(g.shape)
    rho[2, 3] = -0.1
    with pytest.raises(StateCorruptionError):
        flux_from_state(_state(g, rho=rho), Params())


def test_neumann_zero_source_gives_mean(cmap):
    g = DiscGrid(16, 32, cmap)
    F = solve_neumann_flux(g, np.zeros(g.shape + (2,)), mean=0.7)
    assert np.allclose(F, 0.7, atol=1e-9)


def test_neumann_order(cmap):
    errs = []
    for n in (16, 32, 64):
        g = DiscGrid(n, 2 * n, cmap)
        F, src = manufactured_flux(g.x)
        Fh = solve_neumann_flux(g, src, mean=g.integrate(F) / g.integrate(np.ones(g.shape)))
        errs.append(np.sqrt(g.integrate((Fh - F) ** 2)))
    assert np.log2(errs[1] / errs[2]) > 1.8


def _vorticity_case(g, mu):
    # omega = 1 - |phi|^2 vanishes on the wall; g = mu (d2 omega, -d1 omega)
    cmap = g.map
    P, dP, _ = cmap.phi_derivatives(g.x)
    grad = -2 * P * np.conj(dP)
    src = -1j * mu * grad
    return 1 - np.abs(P) ** 2, np.stack([src.real, src.imag], -1)


def test_dirichlet_order(cmap):
    mu = 0.5
    errs = []
    for n in (16, 32, 64):
        g = DiscGrid(n, 2 * n, cmap)
        om, src = _vorticity_case(g, mu)
        errs.append(np.sqrt(g.integrate((solve_dirichlet_vorticity(g, src, mu) - om) ** 2)))
    assert errs[2] < 1e-3
    assert np.log2(errs[1] / errs[2]) > 1.8


def test_representation_constant(cmap):
    g = DiscGrid(32, 64, cmap)
    assert resolve_sign(g) == 1
    for z in (0.0, 0.4 + 0.3j, -0.6j):
        assert constant_field_value(g, cmap.psi(z), 2.5) == pytest.approx(2.5, abs=2.5e-3)


def test_representation_manufactured(cmap):
    g = DiscGrid(64, 128, cmap)
    _, src = manufactured_flux(g.x)
    Fb, _ = manufactured_flux(cmap.psi(g.eith))
    x = cmap.psi(0.3 - 0.2j)
    ref = manufactured_flux(np.array([x]))[0][0]
    assert representation(g, x, src, Fb) == pytest.approx(ref, abs=5e-3)


def test_representation_snapshot_consistent():
    g = DiscGrid(64, 128, MAPS["moebius"])
    st = snapshot_state(g, 1)
    src, F = snapshot_source(st, Params())
    z = 0.2 + 0.3j
    val = representation(g, g.map.psi(z), src, g.boundary_values(F))
    ref = g.interpolate(F, np.array([z]))[0]
    assert val == pytest.approx(ref, abs=2e-2 * max(1.0, np.abs(F).max()))


def test_representation_near_wall_rejected():
    g = DiscGrid(32, 64)
    with pytest.raises(PreconditionError):
        constant_field_value(g, 0.99 + 0j)
