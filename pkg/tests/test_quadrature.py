import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from slipflow.fields import DiscGrid
from slipflow.quadrature import PointQuadrature, cutoff

from conftest import MAPS


def test_cutoff_shape():
    t = np.linspace(-1, 2, 301)
    c = cutoff(t)
    assert np.all(c[t <= 0] == 1) and np.all(c[t >= 1] == 0)
    assert np.all(np.diff(c) <= 0)
    assert cutoff(0.5) == pytest.approx(0.5)


@pytest.mark.parametrize("center", [0.0, 0.3 + 0.4j, 0.97, 1.0, -1j])
def test_constant_integrates_area(cmap, center):
    g = DiscGrid(64, 128, cmap)
    q = PointQuadrature(g, center)
    assert q.integrate(np.ones(q.zeta.size)) == pytest.approx(g.integrate(np.ones(g.shape)), rel=2e-3)


@settings(max_examples=15, deadline=None)
@given(r=st.floats(0, 1), t=st.floats(0, 2 * np.pi))
def test_log_singularity(r, t):
    # circle means of log|y - c| give int_D log|y - c| dy = pi (|c|^2 - 1) / 2 for |c| <= 1
    c = complex(r * np.exp(1j * t))
    g = DiscGrid(48, 96)
    q = PointQuadrature(g, c)
    c = q.center
    exact = np.pi * (abs(c) ** 2 - 1) / 2
    assert q.integrate(np.log(np.abs(q.zeta - c))) == pytest.approx(exact, abs=5e-3)


def test_inverse_distance_singularity():
    # int_D 1/|y| dy = 2 pi
    g = DiscGrid(64, 128)
    q = PointQuadrature(g, 0.0)
    assert q.integrate(1 / np.abs(q.zeta)) == pytest.approx(2 * np.pi, rel=1e-3)


def test_sample_matches_grid_on_far_nodes():
    g = DiscGrid(16, 32, MAPS["moebius"])
    q = PointQuadrature(g, 0.2)
    f = g.x.real
    v = q.sample(f)
    assert np.array_equal(v[: q.n_far], f.ravel()[q.far_index])
    assert np.allclose(v[q.n_far:], q.points[q.n_far:].real, atol=1e-2)
