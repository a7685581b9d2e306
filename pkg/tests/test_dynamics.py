import numpy as np
import pytest

from slipflow.dynamics import (
    Params, Simulation, State, apply_slip_bc, boundary_normal_velocity, boundary_vorticity,
    dissipation_rate, energy, evaluate_rhs, initial_state, manufactured, polar_filter,
    pressure_transport_residual, residual_norm, rhs, stable_dt, step, theta_transport_residual,
)
from slipflow.errors import DomainError, PositivityError, StiffnessError
from slipflow.fields import DiscGrid, slip_field_sampler

from conftest import MAPS

FAST = dict(cfl=0.9)


@pytest.mark.parametrize("kw", [dict(mu=0), dict(beta=1.0), dict(gamma=0.5), dict(a=2.0), dict(cfl=1.0)])
def test_params_validation(kw):
    with pytest.raises(DomainError):
        Params(**kw)


def test_theorem_regime():
    assert Params(beta=1.5).theorem_regime
    assert not Params(beta=1.2).theorem_regime


def test_equilibrium_is_exact(cmap):
    g = DiscGrid(16, 32, cmap)
    p = Params(**FAST)
    sim = Simulation(initial_state(g, "equilibrium"), p)
    for _ in range(50):
        sim.advance()
    assert np.array_equal(sim.state.rho, np.ones(g.shape))
    assert np.max(np.abs(sim.state.u)) == 0.0
    assert sim.D_cum == 0.0


def test_solid_rotation_density_steady():
    g = DiscGrid(32, 64)
    u = 0.3 * np.stack([-g.x.imag, g.x.real], -1)
    st = apply_slip_bc(State(g, np.ones(g.shape), u))
    drho, _ = rhs(st, Params())
    assert np.max(np.abs(drho)) < 1e-12


def test_slip_ghost_zero_normal_velocity(cmap):
    g = DiscGrid(32, 64, cmap)
    u = slip_field_sampler(cmap, 4, power=1).on_grid(g)
    # add a radial part on purpose: the wall face still sees u.n = 0
    u = u + 0.1 * np.stack([g.x.real, g.x.imag], -1)
    st = apply_slip_bc(State(g, np.ones(g.shape), u))
    assert np.max(np.abs(boundary_normal_velocity(st))) < 1e-12


def test_boundary_vorticity_vanishes(cmap):
    g = DiscGrid(32, 64, cmap)
    u = slip_field_sampler(cmap, 1, power=2).on_grid(g) + 0.2
    assert np.max(np.abs(boundary_vorticity(apply_slip_bc(State(g, np.ones(g.shape), u))))) < 1e-12


def test_polar_filter_keeps_low_modes():
    g = DiscGrid(16, 32)
    f = np.broadcast_to(np.cos(g.theta)[None, :], g.shape).copy()
    out = polar_filter(g, f)
    assert np.allclose(out, f, atol=1e-14)
    hi = np.broadcast_to(np.cos(12 * g.theta)[None, :], g.shape).copy()
    assert np.allclose(polar_filter(g, hi)[0], 0, atol=1e-14)


def test_mass_and_energy_bump(cmap):
    g = DiscGrid(16, 32, cmap)
    p = Params(**FAST)
    sim = Simulation(initial_state(g, "bump"), p)
    e0 = sum(energy(sim.state, p))
    ek = [energy(sim.state, p)[0]]
    sim.run_until(0.05, lambda s: ek.append(energy(s.state, p)[0]))
    assert abs(sim.state.mass() - sim.mass0) <= 1e-12 * sim.mass0
    assert sim.state.rho.min() > 0
    e1 = sum(energy(sim.state, p)) + sim.D_cum
    assert abs(e1 - e0) / e0 < 1e-3


def test_dissipation_nonnegative():
    g = DiscGrid(16, 32, MAPS["cubic"])
    p = Params()
    st = initial_state(g, "vortex", velocity=0.3)
    assert dissipation_rate(st, p) > 0
    assert dissipation_rate(initial_state(g, "equilibrium"), p) == 0


def test_rhs_cached():
    g = DiscGrid(8, 16)
    st = initial_state(g, "bump")
    p = Params()
    a = evaluate_rhs(st, p)
    assert evaluate_rhs(st, p) is a


def test_stable_dt_scales_with_grid():
    p = Params()
    dts = [stable_dt(initial_state(DiscGrid(n, 2 * n), "bump"), p) for n in (16, 32)]
    assert 2.5 < dts[0] / dts[1] < 4.5


def test_negative_density_raises():
    g = DiscGrid(8, 16)
    rho = np.ones(g.shape)
    rho[3, 3] = -1.0
    with pytest.raises(PositivityError):
        step(apply_slip_bc(State(g, rho, np.zeros(g.shape + (2,)))), Params(), dt=1e-3)


def test_stiffness_raises():
    g = DiscGrid(8, 16)
    with pytest.raises(StiffnessError):
        step(initial_state(g, "bump"), Params(), dt=1e-14)


def test_unknown_preset():
    with pytest.raises(DomainError):
        initial_state(DiscGrid(8, 16), "shock")
    with pytest.raises(DomainError):
        initial_state(DiscGrid(8, 16, MAPS["quadratic"]), "manufactured")


def _manufactured_error(n, t_end=0.1):
    g = DiscGrid(n, 2 * n)
    ms = manufactured()
    p = ms.make_params(**FAST)
    sim = Simulation(initial_state(g, "manufactured"), p)
    sim.run_until(t_end)
    rho, u = ms.exact(g, sim.state.t)
    return np.sqrt(g.integrate((sim.state.rho - rho) ** 2 + np.sum((sim.state.u - u) ** 2, -1)))


def test_manufactured_convergence():
    e = [_manufactured_error(n) for n in (8, 16, 32)]
    orders = np.log2(np.array(e[:-1]) / np.array(e[1:]))
    assert np.all(orders > 1.5), (e, orders)


def test_manufactured_mass_exact():
    g = DiscGrid(16, 32)
    p = manufactured().make_params(**FAST)
    sim = Simulation(initial_state(g, "manufactured"), p)
    sim.run_until(0.05)
    assert abs(sim.state.mass() - sim.mass0) < 1e-12


def test_transport_residuals_shrink():
    thetas, press = [], []
    for n in (16, 32, 64):
        g = DiscGrid(n, 2 * n)
        p = Params(**FAST)
        sim = Simulation(initial_state(g, "bump"), p)
        sim.run_until(0.01)
        prev = sim.state
        sim.advance()
        res, nvac = theta_transport_residual(prev, sim.state, p)
        assert nvac == 0
        thetas.append(residual_norm(g, res))
        press.append(residual_norm(g, pressure_transport_residual(prev, sim.state, p)))
    assert thetas[2] < thetas[1] < thetas[0]
    assert press[2] < press[1] < press[0]


def test_vacuum_cells_flagged():
    g = DiscGrid(8, 16)
    p = Params()
    a = apply_slip_bc(State(g, np.ones(g.shape), np.zeros(g.shape + (2,))))
    rho = np.ones(g.shape)
    rho[2, 2] = 0.0
    b = State(g, rho, np.zeros(g.shape + (2,)), t=0.1)
    res, nvac = theta_transport_residual(a, b, p)
    assert nvac == 1 and np.isnan(res[2, 2]) and np.isfinite(res[3, 3])
    with pytest.raises(DomainError):
        theta_transport_residual(b, a, p)
