import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slipflow.diagnostics import (
    RECORD_FIELDS, Recorder, check_tangency, div_curl_ratio, log_profile, poincare_sobolev_ratio,
    probe_bkm, probe_density_lp, probe_div_curl, probe_poincare_sobolev, probe_weighted_gradient,
    record, records_csv_text, weighted_gradient_ratio,
)
from slipflow.dynamics import Params, Simulation, State, initial_state
from slipflow.errors import DomainError, PreconditionError
from slipflow.fields import DiscGrid, slip_field_sampler

from conftest import MAPS


def test_equilibrium_record():
    g = DiscGrid(32, 64)
    p = Params(mu=1.0, beta=1.5, gamma=1.5)
    st = initial_state(g, "equilibrium")
    rec = record(st, None, p)
    area = g.integrate(np.ones(g.shape))
    assert rec.mass == pytest.approx(area)
    assert area == pytest.approx(np.pi, rel=1e-3)
    assert rec.A1_sq == pytest.approx(1 + area / 3, rel=1e-14)
    assert rec.A2_sq == 0 and rec.E_kin == 0 and rec.D_cum == 0
    assert rec.R_T == 2.0 and rec.vacuum_ratio == 1.0
    assert rec.theta_residual_norm == 0 and rec.n_vacuum == 0
    assert rec.nu == pytest.approx(0.05 * 2 ** -0.75)


def test_recorder_run_and_csv():
    g = DiscGrid(16, 32, MAPS["quadratic"])
    p = Params(cfl=0.9)
    sim = Simulation(initial_state(g, "bump"), p)
    rec = Recorder(p, every=5, probes=g.map.psi(np.array([0.8 + 0j])))
    rec.start(sim)
    sim.run_until(0.02, rec)
    rec(sim, force=True)
    rs = rec.records
    assert len(rs) >= 3
    assert all(b.R_T >= a.R_T for a, b in zip(rs, rs[1:]))
    assert all(b.D_cum >= a.D_cum for a, b in zip(rs, rs[1:]))
    assert rs[-1].J_time_integral > 0
    text = records_csv_text(rs)
    assert text.splitlines()[0].split(",") == RECORD_FIELDS
    assert len(text.splitlines()) == len(rs) + 1
    assert text == records_csv_text(rs)


def _slip(cmap=None, seed=0, n=32):
    cmap = cmap or MAPS["identity"]
    g = DiscGrid(n, 2 * n, cmap)
    return g, slip_field_sampler(cmap, seed).on_grid(g)


def test_div_curl_bounded_below(cmap):
    g, _ = _slip(cmap)
    stats = probe_div_curl(g, 2.0, n_samples=10, seed=3)
    assert stats.n_used == 10 and stats.n_skipped == 0
    # |grad v|^2 = |div v|^2 + |curl v|^2 + boundary terms, so the ratio stays O(1)
    assert 0.4 < stats.median < 2.0


def test_div_curl_rejects_normal_flow():
    g = DiscGrid(16, 32)
    v = np.stack([g.x.real, g.x.imag], -1)
    with pytest.raises(PreconditionError):
        check_tangency(g, v)
    with pytest.raises(PreconditionError):
        div_curl_ratio(g, v, 2.0)
    with pytest.raises(DomainError):
        div_curl_ratio(g, np.zeros(g.shape + (2,)), 1.0)


def test_degenerate_field_skipped():
    g = DiscGrid(16, 32)
    z = np.zeros(g.shape + (2,))
    stats = probe_div_curl(g, fields=[z])
    assert stats.n_used == 0 and stats.n_skipped == 1 and np.isnan(stats.max)
    assert poincare_sobolev_ratio(g, np.zeros(g.shape), 4.0) is None
    assert probe_weighted_gradient(g, fields=[z]).n_skipped == 1


@settings(max_examples=20, deadline=None)
@given(scale=st.floats(1e-3, 1e3), seed=st.integers(0, 50))
def test_scale_invariance(scale, seed):
    g, v = _slip(seed=seed, n=16)
    for f, arg in ((div_curl_ratio, 3.0), (weighted_gradient_ratio, 0.2), (poincare_sobolev_ratio, 8.0)):
        assert f(g, scale * v, arg) == pytest.approx(f(g, v, arg), rel=1e-12)


def test_poincare_sobolev_table():
    g = DiscGrid(32, 64)
    table = probe_poincare_sobolev(g, (4, 8, 16, 32), n_samples=10, seed=1)
    assert list(table) == [4.0, 8.0, 16.0, 32.0]
    assert all(0 < v < 2 for v in table.values())
    with pytest.raises(DomainError):
        poincare_sobolev_ratio(g, np.ones(g.shape), 2.0)


def test_log_profile_shape():
    g = DiscGrid(32, 64)
    f = log_profile(g, 0j, 0.05)
    assert f.max() == pytest.approx(np.log(10), rel=0.05)
    assert np.all(f[np.abs(g.x) > 0.5] == 0)


def test_weighted_gradient_small_nu_limit():
    g, v = _slip(MAPS["cubic"], 2)
    r0 = weighted_gradient_ratio(g, v, 0.0)
    vals = [weighted_gradient_ratio(g, v, nu) for nu in (1e-2, 1e-3, 1e-4)]
    assert abs(vals[-1] - r0) < abs(vals[0] - r0) + 1e-15
    assert abs(vals[-1] - r0) < 1e-3 * r0
    with pytest.raises(DomainError):
        weighted_gradient_ratio(g, v, 0.5)


def test_bkm_linear_closed_form():
    g = DiscGrid(32, 64)
    u = np.stack([g.x.real, g.x.imag], -1)
    st = State(g, np.ones(g.shape), u)
    gl2 = np.sqrt(g.integrate(np.full(g.shape, 4.0)))
    assert probe_bkm(st) == pytest.approx(2 / (2 + gl2 + 1), rel=1e-10)
    assert probe_bkm(State(g, np.ones(g.shape), np.zeros_like(u))) == 0.0


def test_density_lp_unit():
    g = DiscGrid(64, 128)
    st = initial_state(g, "equilibrium")
    lp = probe_density_lp(st, (2, 4, np.inf))
    assert lp[2.0] == pytest.approx(np.pi ** 0.5, rel=1e-4)
    assert lp[4.0] == pytest.approx(np.pi ** 0.25, rel=1e-4)
    assert lp[np.inf] == 1.0
