"""Verification suites shared by the command line and the acceptance tests.

Each suite returns a :class:`SuiteResult`: a flat table of rows (written as
``<subcommand>.csv``), the named checks with their pass flags, and a summary.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .commutator import commutator_breakdown, holder_slope
from .conformal import (
    ConformalMap, boundary_frame, boundary_orthogonality_residual,
)
from .diagnostics import (
    probe_div_curl, probe_poincare_sobolev, probe_weighted_gradient, div_curl_ratio,
    weighted_gradient_ratio,
)
from .dynamics import (
    Params, Simulation, State, energy, initial_state, manufactured, pressure_transport_residual,
    residual_norm, theta_transport_residual,
)
from .elliptic import constant_field_value, flux_from_state, representation, resolve_sign
from .fields import DiscGrid, slip_field_sampler
from .greens import boundary_flux_total, boundary_normal_derivative, harmonicity_order, normal_derivative_law

CATALOG = {
    "identity": ConformalMap("identity"),
    "moebius": ConformalMap("moebius", a=0.3 + 0.2j),
    "quadratic": ConformalMap("quadratic", c=0.3),
    "cubic": ConformalMap("cubic", c=0.25),
}


@dataclass
class SuiteResult:
    name: str
    columns: list
    rows: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def check(self, name, ok):
        self.checks[name] = bool(self.checks.get(name, True) and ok)


def catalog_maps(cmap: ConformalMap | None = None):
    """The configured map, or every catalog map when ``cmap`` is ``None``."""
    if cmap is not None:
        return {cmap.kind: cmap}
    return dict(CATALOG)


def interior_probes(cmap: ConformalMap, n: int, seed: int = 0, r_max: float = 0.85, r_min: float = 0.1):
    """Seeded physical probe points with disc radius in ``[r_min, r_max]``."""
    rng = np.random.default_rng(seed)
    r = np.sqrt(rng.uniform(r_min**2, r_max**2, n))
    t = rng.uniform(0, 2 * np.pi, n)
    return cmap.psi(r * np.exp(1j * t))


# -- geometry -----------------------------------------------------------------------
def geometry_suite(maps=None, Nr=64, Ntheta=128, n_boundary=64, tol_inverse=1e-10,
                   tol_push=1e-8, tol_orth=1e-8, seed=0) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("verify-geometry", ["map", "check", "value", "tolerance", "passed"])
    rng = np.random.default_rng(seed)
    s = 2 * np.pi * np.arange(n_boundary) / n_boundary
    for kind, cmap in (maps or CATALOG).items():
        g = DiscGrid(Nr, Ntheta, cmap)
        z = np.concatenate([g.z.ravel(), g.eith])
        back, ok = cmap.newton_inverse(cmap.psi(z))
        inv = float(np.max(np.abs(back - z))) if np.all(ok) else np.inf
        fr = boundary_frame(cmap, s)
        push = float(np.max(np.hypot(fr.pushforward_residual[:, 0], fr.pushforward_residual[:, 1])))
        u = fr.n_perp * rng.uniform(0.5, 2.0, (n_boundary, 1))
        orth = boundary_orthogonality_residual(cmap, s, u)
        for name, val, tol in (("round_trip", inv, tol_inverse), ("pushforward", push, tol_push),
                               ("orthogonality", orth, tol_orth)):
            ok_ = val <= tol
            res.rows.append([kind, name, val, tol, ok_])
            res.check(f"{name}[{kind}]", ok_)
    res.seconds = time.perf_counter() - t0
    return res


# -- Green's kernel -----------------------------------------------------------------
def greens_suite(maps=None, n_boundary=64, Nr_list=(32, 64, 128), tol_normal=1e-8, tol_flux=1e-6,
                 min_order=1.8, seed=0, n_probes=3) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("verify-greens", ["map", "check", "probe", "s", "value", "reference", "error", "passed"])
    s = 2 * np.pi * np.arange(n_boundary) / n_boundary
    for kind, cmap in (maps or CATALOG).items():
        probes = interior_probes(cmap, n_probes, seed, r_max=0.7)
        law = normal_derivative_law(cmap, s)
        for k, x in enumerate(probes):
            dn = boundary_normal_derivative(cmap, x, s)
            err = np.abs(dn - law)
            for sj, v, l_, e in zip(s, dn, law, err):
                res.rows.append([kind, "normal_derivative", k, sj, v, l_, e, e <= tol_normal])
            res.check(f"normal_derivative[{kind}]", err.max() <= tol_normal)
            tot = boundary_flux_total(cmap, x, 4 * n_boundary)
            res.rows.append([kind, "flux_total", k, np.nan, tot, -1.0, abs(tot + 1), abs(tot + 1) <= tol_flux])
            res.check(f"flux_total[{kind}]", abs(tot + 1) <= tol_flux)
        order, errs = harmonicity_order(cmap, probes[0], Nr_list)
        for n, e in zip(sorted(Nr_list), errs):
            res.rows.append([kind, "harmonicity_residual", 0, np.nan, e, 0.0, e, True])
        res.rows.append([kind, "harmonicity_order", 0, np.nan, order, min_order, max(0.0, min_order - order),
                         order >= min_order])
        res.check(f"harmonicity_order[{kind}]", order >= min_order)
        res.summary[f"harmonicity_order[{kind}]"] = order
    res.seconds = time.perf_counter() - t0
    return res


# -- representation -----------------------------------------------------------------
def manufactured_flux(x):
    """Smooth test field ``F = sin(x1) cosh(x2/2) + x1^2 x2`` and its gradient."""
    x = np.asarray(x, dtype=complex)
    x1, x2 = x.real, x.imag
    F = np.sin(x1) * np.cosh(0.5 * x2) + x1**2 * x2
    g = np.stack([np.cos(x1) * np.cosh(0.5 * x2) + 2 * x1 * x2, 0.5 * np.sin(x1) * np.sinh(0.5 * x2) + x1**2], -1)
    return F, g


def snapshot_state(grid: DiscGrid, seed: int = 0) -> State:
    """Smooth state whose velocity satisfies both slip conditions exactly."""
    u = 0.5 * slip_field_sampler(grid.map, seed, modes=3, power=3).on_grid(grid)
    z = grid.z
    rho = 1.0 + 0.3 * (1 - np.abs(z) ** 2) * (1 + 0.5 * z.real)
    return State(grid, rho, u)


def snapshot_source(state: State, params: Params):
    """``rho udot = grad F + mu grad_perp omega`` from the grid fields, and ``F`` itself."""
    g = state.grid
    ff = flux_from_state(state, params)
    src = g.grad(ff.F) + params.mu * g.perp_grad(ff.omega, -ff.omega[-1])
    return src, ff.F


def _order(h, e):
    e = np.asarray(e, dtype=float)
    if np.any(e <= 0):
        return np.inf
    return float(np.polyfit(np.log(h), np.log(e), 1)[0])


def representation_suite(cmap=None, Nr_list=(32, 64, 128), n_probes=20, seed=0, tol_const=1e-3,
                         min_order=1.0, n_convergence=6) -> SuiteResult:
    t0 = time.perf_counter()
    cmap = cmap or CATALOG["identity"]
    res = SuiteResult("verify-representation", ["case", "Nr", "probe", "x1", "x2", "F_direct", "F_repr", "abs_err"])
    Nr_list = sorted(Nr_list)
    g = DiscGrid(Nr_list[0], 2 * Nr_list[0], cmap)
    sign = resolve_sign(g)
    res.summary["representation_sign"] = sign
    probes = interior_probes(cmap, n_probes, seed)
    const_err = 0.0
    for k, x in enumerate(probes):
        v = constant_field_value(g, x, 1.0, sign)
        const_err = max(const_err, abs(v - 1))
        res.rows.append(["constant", g.Nr, k, x.real, x.imag, 1.0, v, abs(v - 1)])
    res.check("constant_field", const_err <= tol_const)
    res.summary["constant_max_error"] = const_err

    cprobes = probes[:n_convergence]
    params = Params()
    man, snap = [], []
    for n in Nr_list:
        g = DiscGrid(n, 2 * n, cmap)
        # manufactured: source grad F, boundary trace of F
        F, _ = manufactured_flux(g.x)
        _, src = manufactured_flux(g.x)
        Fb, _ = manufactured_flux(cmap.psi(g.eith))
        errs = []
        for k, x in enumerate(cprobes):
            v = representation(g, x, src, Fb, sign)
            ref = float(manufactured_flux(np.array([complex(x)]))[0][0])
            errs.append(abs(v - ref))
            res.rows.append(["manufactured", n, k, x.real, x.imag, ref, v, abs(v - ref)])
        man.append(np.sqrt(np.mean(np.square(errs))))
        # snapshot: the grid's own F from a slip state
        st = snapshot_state(g, seed)
        src, Fg = snapshot_source(st, params)
        Fb = g.boundary_values(Fg)
        Fx = g.interpolate(Fg, cmap.phi(np.asarray(cprobes)))
        errs = []
        for k, x in enumerate(cprobes):
            v = representation(g, x, src, Fb, sign)
            errs.append(abs(v - Fx[k]))
            res.rows.append(["snapshot", n, k, x.real, x.imag, Fx[k], v, abs(v - Fx[k])])
        snap.append(np.sqrt(np.mean(np.square(errs))))
    h = 1.0 / np.asarray(Nr_list, dtype=float)
    for name, e in (("manufactured", man), ("snapshot", snap)):
        order = _order(h, e)
        mono = bool(np.all(np.diff(e) < 0))
        res.summary[f"{name}_errors"] = [float(v) for v in e]
        res.summary[f"{name}_order"] = order
        res.check(f"{name}_monotone", mono)
        res.check(f"{name}_order", order >= min_order)
    res.seconds = time.perf_counter() - t0
    return res


# -- commutator -----------------------------------------------------------------------
def commutator_probes(cmap: ConformalMap, n: int, seed: int = 0):
    """``n`` probes with ``|phi(x)|`` in ``(0.76, 0.85)`` followed by ``n // 4`` inner ones."""
    rng = np.random.default_rng(seed)
    m = n // 4
    r = np.concatenate([rng.uniform(0.76, 0.85, n), rng.uniform(0.3, 0.7, m)])
    t = rng.uniform(0, 2 * np.pi, n + m)
    return cmap.psi(r * np.exp(1j * t))


def commutator_suite(maps=None, Nr_pair=(32, 64), n_probes=20, seed=0, tol=1e-6, p_holder=4.0,
                     slope_tol=0.15) -> SuiteResult:
    t0 = time.perf_counter()
    res = SuiteResult("verify-commutator", ["map", "Nr", "x1", "x2", "phi_abs", "J_direct", "J1", "J2", "J3",
                                            "defect", "rhs_order1", "rhs_comm_x", "rhs_comm_xprime", "rhs_total", "ratio"])
    for kind, cmap in (maps or CATALOG).items():
        probes = commutator_probes(cmap, n_probes, seed)
        max_ratio = []
        for n in Nr_pair:
            g = DiscGrid(n, 2 * n, cmap)
            st = snapshot_state(g, seed)
            mr = 0.0
            for x in probes:
                b = commutator_breakdown(st, x)
                d = b.decomposition_defect
                res.rows.append([kind, n, b.x[0], b.x[1], b.phi_abs, b.J_direct, b.J1, b.J2, b.J3, d,
                                 b.rhs_order1, b.rhs_comm_x, b.rhs_comm_xprime, b.rhs_total, b.ratio])
                res.check(f"decomposition[{kind}]", d <= tol * (1 + abs(b.J_direct)))
                if kind == "identity":
                    res.check("J2_zero_identity", b.J2 == 0.0)
                if b.phi_abs > 0.75:
                    res.check(f"ratio_finite[{kind}]", np.isfinite(b.ratio))
                    mr = max(mr, b.ratio)
            max_ratio.append(mr)
        stable = max_ratio[0] > 0 and max_ratio[1] > 0 and max(max_ratio) / min(max_ratio) <= 2
        res.check(f"ratio_stable[{kind}]", stable)
        res.summary[f"max_ratio[{kind}]"] = max_ratio
    cmap = next(iter((maps or CATALOG).values()))
    slope, _, _ = holder_slope(cmap, cmap.psi(0.3 + 0.2j), p_holder)
    target = -1 - 2 / p_holder
    res.summary["holder_slope"] = slope
    res.summary["holder_target"] = target
    res.check("holder_slope", abs(slope - target) <= slope_tol)
    res.seconds = time.perf_counter() - t0
    return res


# -- inequality probes -------------------------------------------------------------------
def probe_suite(cmap=None, Nr_pair=(32, 64), p=2.0, p_list=(4, 8, 16, 32), n_div=100, n_samples=50,
                nu=0.1, seed=0) -> SuiteResult:
    t0 = time.perf_counter()
    cmap = cmap or CATALOG["identity"]
    res = SuiteResult("probe-inequalities", ["probe", "Nr", "parameter", "statistic", "value"])
    dc = []
    for n in Nr_pair:
        g = DiscGrid(n, 2 * n, cmap)
        st = probe_div_curl(g, p, n_div, seed)
        dc.append(st.max)
        for k, v in st.as_dict().items():
            res.rows.append(["div_curl", n, p, k, v])
    res.check("div_curl_finite", all(np.isfinite(dc)))
    res.check("div_curl_stable", abs(dc[1] - dc[0]) <= 0.1 * dc[0])
    g = DiscGrid(Nr_pair[-1], 2 * Nr_pair[-1], cmap)
    table = probe_poincare_sobolev(g, p_list, n_samples, seed)
    for pp, v in table.items():
        res.rows.append(["poincare_sobolev", g.Nr, pp, "max", v])
    vals = np.array(list(table.values()))
    spread = float(vals.max() / vals.min())
    res.summary["poincare_sobolev_spread"] = spread
    res.check("poincare_sobolev_spread", spread < 3)
    wg = probe_weighted_gradient(g, nu, n_samples, seed)
    for k, v in wg.as_dict().items():
        res.rows.append(["weighted_gradient", g.Nr, nu, k, v])
    res.check("weighted_gradient_finite", np.isfinite(wg.max))
    u = slip_field_sampler(cmap, seed).on_grid(g)
    same = div_curl_ratio(g, u, p) == div_curl_ratio(g, 2 * u, p) and \
        weighted_gradient_ratio(g, u, nu) == weighted_gradient_ratio(g, 2 * u, nu)
    res.check("scale_invariance", same)
    res.summary["div_curl_max"] = dc
    res.summary["weighted_gradient_max"] = wg.max
    res.seconds = time.perf_counter() - t0
    return res

# -- dynamics -------------------------------------------------------------------------
def _mass_ok(sim, tol):
    return abs(sim.state.mass() - sim.mass0) <= tol * sim.mass0


def dynamics_suite(cmap=None, Nr_list=(32, 64, 128), t_end=0.5, cfl=0.9, n_equilibrium=1000,
                   manufactured_Nr=(16, 32, 64), manufactured_t=0.1, tol_mass=1e-12, tol_eq=1e-12,
                   max_defect=0.02, min_vacuum_ratio=0.5) -> SuiteResult:
    """Equilibrium, mass, manufactured convergence, energy ledger and transport residuals.

    The bump runs use ``(mu, beta, gamma) = (1, 1.5, 1.5)``; the ledger defect is
    checked on the second grid of ``Nr_list`` and must shrink on the third.
    """
    t0 = time.perf_counter()
    cmap = cmap or CATALOG["identity"]
    res = SuiteResult("verify-dynamics", ["case", "Nr", "quantity", "value"])

    g = DiscGrid(Nr_list[0], 2 * Nr_list[0], cmap)
    sim = Simulation(initial_state(g, "equilibrium"), Params(cfl=cfl))
    drift = 0.0
    for _ in range(n_equilibrium):
        sim.advance()
        drift = max(drift, float(np.max(np.abs(sim.state.rho - 1.0))), float(np.max(np.abs(sim.state.u))))
    res.rows.append(["equilibrium", g.Nr, "max_drift", drift])
    res.check("equilibrium", drift <= tol_eq)
    res.check("mass", _mass_ok(sim, tol_mass))

    ms = manufactured()
    errs, hs = [], []
    for n in manufactured_Nr:
        g = DiscGrid(n, 2 * n)
        sim = Simulation(initial_state(g, "manufactured"), ms.make_params(cfl=cfl))
        sim.run_until(manufactured_t)
        rho, u = ms.exact(g, sim.state.t)
        e = float(np.sqrt(g.integrate((sim.state.rho - rho) ** 2 + np.sum((sim.state.u - u) ** 2, -1))))
        errs.append(e)
        hs.append(1.0 / n)
        res.rows.append(["manufactured", n, "l2_error", e])
        res.check("mass", _mass_ok(sim, tol_mass))
    order = _order(np.array(hs), errs)
    res.rows.append(["manufactured", 0, "order", order])
    res.summary["manufactured_order"] = order
    res.check("manufactured_order", order >= 1.0)

    params = Params(mu=1.0, beta=1.5, gamma=1.5, cfl=cfl, t_end=t_end)
    defects, th, pr = [], [], []
    for n in Nr_list:
        g = DiscGrid(n, 2 * n, cmap)
        sim = Simulation(initial_state(g, "bump"), params)
        E0 = sum(energy(sim.state, params))
        ek_prev, mono = energy(sim.state, params)[0], True
        rmin = [sim.rho_min0]

        def watch(s):
            nonlocal ek_prev, mono
            ek = energy(s.state, params)[0]
            mono = mono and ek <= ek_prev * (1 + 1e-12)
            ek_prev = ek
            rmin.append(float(s.state.rho.min()))

        sim.run_until(t_end, watch)
        E1 = sum(energy(sim.state, params))
        defect = abs(E1 + sim.D_cum - E0) / E0
        ratio = min(rmin) / sim.rho_min0
        rt, _ = theta_transport_residual(sim.prev, sim.state, params)
        rp = pressure_transport_residual(sim.prev, sim.state, params)
        defects.append(defect)
        th.append(residual_norm(g, rt))
        pr.append(residual_norm(g, rp))
        for q, v in (("steps", sim.steps), ("energy_defect", defect), ("vacuum_ratio", ratio),
                     ("theta_residual", th[-1]), ("pressure_residual", pr[-1]),
                     ("kinetic_monotone", float(mono))):
            res.rows.append(["bump", n, q, v])
        res.check("mass", _mass_ok(sim, tol_mass))
        res.check("vacuum_ratio", ratio >= min_vacuum_ratio)
        res.summary[f"vacuum_ratio[{n}]"] = ratio
    res.summary["energy_defects"] = defects
    res.check("energy_defect", defects[1] <= max_defect)
    res.check("energy_defect_decreasing", defects[2] < defects[1])
    h = 1.0 / np.asarray(Nr_list, dtype=float)
    for name, e in (("theta_residual", th), ("pressure_residual", pr)):
        o = _order(h, e)
        res.summary[f"{name}_order"] = o
        res.summary[f"{name}s"] = [float(v) for v in e]
        # O(h + dt) with dt proportional to h^2 at these grids: first order in h
        res.check(f"{name}_order", o >= 0.8 and bool(np.all(np.diff(e) < 0)))
    res.seconds = time.perf_counter() - t0
    return res


__all__ = [
    "CATALOG", "SuiteResult", "catalog_maps", "commutator_probes", "commutator_suite", "dynamics_suite",
    "geometry_suite",
    "greens_suite", "interior_probes", "manufactured_flux", "probe_suite", "representation_suite",
    "snapshot_source", "snapshot_state",
]
