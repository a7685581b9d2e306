"""A-priori quantities along a run and empirical constants of the functional inequalities.

Records collect the energy ledger, ``A1^2 = 1 + int (omega^2 + F^2/(2 mu + lambda))``,
``A2^2 = int rho |udot|^2``, the running density bound ``R_T`` and related
integrals.  The probes sample seeded slip fields and report ratios of the
two sides of each inequality; none of them asserts a constant.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, fields
from typing import Optional, Sequence

import numpy as np

from .commutator import commutator_breakdown
from .errors import DomainError, PreconditionError
from .fields import DiscGrid, slip_field_sampler
from .dynamics import (
    VACUUM_RHO, Params, State, dissipation_rate, energy, evaluate_rhs, slip_ghost, theta,
    theta_transport_residual, residual_norm,
)

NU0 = 0.05
PROP_ALPHA = 0.5
DEGENERATE_TOL = 1e-14
TANGENCY_TOL = 0.05


@dataclass
class DiagnosticsRecord:
    t: float
    mass: float
    E_kin: float
    E_int: float
    D_cum: float
    A1_sq: float
    A2_sq: float
    R_T: float
    rho_min: float
    vacuum_ratio: float
    theta_residual_norm: float
    moment_nu: float
    nu: float
    log_A1_sq: float
    J_time_integral: float
    A2_A1_integral: float = 0.0
    R_T_bound: float = 1.0
    n_vacuum: int = 0

    @property
    def energy(self) -> float:
        return self.E_kin + self.E_int

    @property
    def prop_lhs(self) -> float:
        """``log A1^2 + int A2^2/A1^2``, logged against ``R_T^(1 + alpha)``."""
        return self.log_A1_sq + self.A2_A1_integral

    def as_dict(self):
        return asdict(self)


RECORD_FIELDS = [f.name for f in fields(DiagnosticsRecord)]


def _material_derivative(grid: DiscGrid, prev: Optional[State], state: State, params: Params):
    """``udot`` and the density it is weighted with.

    With two states: midpoint difference plus transport.  With one state the
    velocity tendency of the right-hand side is used.
    """
    if prev is None:
        du = evaluate_rhs(state, params).du
        u = state.u
        rho = state.rho
        ut = du
    else:
        dt = state.t - prev.t
        if not dt > 0:
            raise DomainError("states must be in increasing time order")
        u = 0.5 * (prev.u + state.u)
        rho = 0.5 * (prev.rho + state.rho)
        ut = (state.u - prev.u) / dt
    gu = grid.grad(u, slip_ghost(grid, u))  # [..., i, j] = d_i u_j
    conv = np.einsum("...i,...ij->...j", u, gu)
    return ut + conv, rho


def _instant_theta_residual(state: State, params: Params):
    g = state.grid
    res_all = evaluate_rhs(state, params)
    vac = state.rho <= VACUUM_RHO
    rho = np.where(vac, 1.0, state.rho)
    dtheta = 2 * params.mu / rho + rho ** (params.beta - 1)
    res = dtheta * res_all.drho + np.sum(state.u * g.grad(theta(rho, params)), -1)
    res = res + (2 * params.mu + rho**params.beta) * res_all.div
    return np.where(vac, np.nan, res), int(vac.sum())


def record(state: State, prev_state: Optional[State], params: Params,
           history: Optional[DiagnosticsRecord] = None, *, D_cum: Optional[float] = None,
           rho_min0: Optional[float] = None, J_now: float = 0.0, nu0: float = NU0,
           alpha: float = PROP_ALPHA) -> DiagnosticsRecord:
    """Diagnostics of ``state``; running quantities continue from ``history``."""
    g = state.grid
    rho = np.maximum(state.rho, 0.0)
    mass = state.mass()
    ek, ei = energy(state, params)
    r = evaluate_rhs(state, params)
    lam = rho**params.beta
    A1 = 1.0 + g.integrate(r.omega**2 + r.F**2 / (2 * params.mu + lam))
    udot, rho_m = _material_derivative(g, prev_state, state, params)
    A2 = g.integrate(np.maximum(rho_m, 0) * np.sum(udot**2, -1))
    rho_max = float(rho.max())
    rho_min = float(rho.min())
    if history is None:
        R_T = 1.0 + rho_max
        if rho_min0 is None:
            rho_min0 = rho_min
        J_int = 0.0
        a2a1 = 0.0
        D_prev = 0.0
    else:
        R_T = max(history.R_T, 1.0 + rho_max)
        if rho_min0 is None:
            rho_min0 = history.rho_min / history.vacuum_ratio if history.vacuum_ratio > 0 else rho_min
        h = state.t - history.t
        J_int = history.J_time_integral + h * 0.5 * (J_now + getattr(history, "_J_now", 0.0))
        a2a1 = history.A2_A1_integral + h * 0.5 * (A2 / A1 + history.A2_sq / history.A1_sq)
        D_prev = history.D_cum
    if D_cum is None:
        if history is None:
            D_cum = 0.0
        else:
            # trapezoid between records when the stepper's running value is unavailable
            D_cum = D_prev + 0.5 * (state.t - history.t) * (
                dissipation_rate(state, params) + getattr(history, "_D_now", 0.0)
            )
    if prev_state is None:
        res, nvac = _instant_theta_residual(state, params)
    else:
        res, nvac = theta_transport_residual(prev_state, state, params)
    nu = R_T ** (-params.beta / 2) * nu0
    moment = g.integrate(rho * np.sqrt(np.sum(state.u**2, -1)) ** (2 + nu))
    rec = DiagnosticsRecord(
        t=float(state.t), mass=float(mass), E_kin=float(ek), E_int=float(ei), D_cum=float(D_cum),
        A1_sq=float(A1), A2_sq=float(A2), R_T=float(R_T), rho_min=rho_min,
        vacuum_ratio=float(rho_min / rho_min0) if rho_min0 > 0 else 0.0,
        theta_residual_norm=residual_norm(g, res), moment_nu=float(moment), nu=float(nu),
        log_A1_sq=float(np.log(A1)), J_time_integral=float(J_int), A2_A1_integral=float(a2a1),
        R_T_bound=float(R_T ** (1 + alpha)), n_vacuum=nvac,
    )
    rec._J_now = J_now
    rec._D_now = dissipation_rate(state, params)
    return rec


def default_commutator_probes(grid: DiscGrid, n: int = 4, radius: float = 0.8):
    """Physical probe points at disc radius ``radius``, beyond the reflection threshold."""
    ang = 2 * np.pi * (np.arange(n) + 0.25) / n
    return grid.map.psi(radius * np.exp(1j * ang))


class Recorder:
    """Callback for :class:`~slipflow.dynamics.Simulation` that records every ``every`` steps."""

    def __init__(self, params: Params, every: int = 100, probes=None, nu0: float = NU0,
                 snapshot=None):
        self.params = params
        self.every = max(1, int(every))
        self.probes = probes
        self.nu0 = nu0
        self.records: list[DiagnosticsRecord] = []
        self.snapshot = snapshot
        self.rho_min0 = None

    def _J(self, state):
        if self.probes is None or len(self.probes) == 0:
            return 0.0
        return max(abs(commutator_breakdown(state, x).J_direct) for x in self.probes)

    def start(self, sim):
        self.rho_min0 = float(sim.state.rho.min())
        rec = record(sim.state, None, self.params, None, D_cum=sim.D_cum, rho_min0=self.rho_min0,
                     J_now=self._J(sim.state), nu0=self.nu0)
        self.records.append(rec)
        if self.snapshot is not None:
            self.snapshot(sim.state, 0)
        return rec

    def __call__(self, sim, force: bool = False):
        if not force and sim.steps % self.every:
            return None
        if self.records and self.records[-1].t >= sim.state.t:
            return None
        rec = record(sim.state, sim.prev, self.params, self.records[-1] if self.records else None,
                     D_cum=sim.D_cum, rho_min0=self.rho_min0, J_now=self._J(sim.state), nu0=self.nu0)
        self.records.append(rec)
        if self.snapshot is not None:
            self.snapshot(sim.state, len(self.records) - 1)
        return rec


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def records_csv_text(records: Sequence[DiagnosticsRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        w.writerow([fmt(getattr(r, k)) for k in RECORD_FIELDS])
    return buf.getvalue()


# -- inequality probes ---------------------------------------------------------------
@dataclass
class RatioStats:
    max: float
    median: float
    q90: float
    n_used: int
    n_skipped: int
    ratios: np.ndarray

    def as_dict(self):
        return {"max": self.max, "median": self.median, "q90": self.q90,
                "n_used": self.n_used, "n_skipped": self.n_skipped}


def _stats(ratios, skipped) -> RatioStats:
    r = np.asarray(ratios, dtype=float)
    if r.size == 0:
        return RatioStats(np.nan, np.nan, np.nan, 0, skipped, r)
    return RatioStats(float(r.max()), float(np.median(r)), float(np.quantile(r, 0.9)), int(r.size), skipped, r)


def _normalize(u):
    m = np.max(np.abs(u))
    return u / m if m > 0 else u


def _samples(grid: DiscGrid, n_samples: int, seed: int, fields_=None):
    if fields_ is not None:
        return [np.asarray(f, dtype=float) for f in fields_]
    ss = np.random.SeedSequence(seed)
    return [slip_field_sampler(grid.map, int(c.generate_state(1)[0])).on_grid(grid)
            for c in ss.spawn(n_samples)]


def check_tangency(grid: DiscGrid, v, tol: float = TANGENCY_TOL):
    """Raise unless ``v . n`` on the boundary is small relative to ``max |v|``."""
    vb = grid.boundary_values(v)
    n = grid.eith * grid.map.dpsi(grid.eith)
    n = n / np.abs(n)
    vn = vb[:, 0] * n.real + vb[:, 1] * n.imag
    scale = np.max(np.abs(v))
    if scale > 0 and np.max(np.abs(vn)) > tol * scale:
        raise PreconditionError("field is not tangent to the boundary (v . n != 0)")


def _grad_norm(grid, v):
    """Pointwise Frobenius norm of the velocity gradient."""
    gv = grid.grad(v)
    return np.sqrt(np.sum(gv**2, axis=(-2, -1)))


def div_curl_ratio(grid: DiscGrid, v, p: float) -> Optional[float]:
    """``|grad v|_p / (|div v|_p + |curl v|_p)``; ``None`` for a degenerate field."""
    if not 1 < p < np.inf:
        raise DomainError("p must lie in (1, inf)")
    check_tangency(grid, v)
    v = _normalize(v)
    a = grid.lp_norm(grid.div(v), p)
    b = grid.lp_norm(grid.curl(v), p)
    if a < DEGENERATE_TOL and b < DEGENERATE_TOL:
        return None
    return grid.lp_norm(_grad_norm(grid, v), p) / (a + b)


def probe_div_curl(grid: DiscGrid, p: float = 2.0, n_samples: int = 100, seed: int = 0,
                   fields=None) -> RatioStats:
    ratios, skipped = [], 0
    for v in _samples(grid, n_samples, seed, fields):
        r = div_curl_ratio(grid, v, p)
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    return _stats(ratios, skipped)


def poincare_sobolev_ratio(grid: DiscGrid, u, p: float) -> Optional[float]:
    """``|u|_p / (p^(1/2) |u|_2^(2/p) |u|_{H1}^(1-2/p))``."""
    if not 2 < p < np.inf:
        raise DomainError("p must lie in (2, inf)")
    u = _normalize(u)
    l2 = grid.lp_norm(u, 2)
    if l2 < DEGENERATE_TOL:
        return None
    h1 = np.sqrt(l2**2 + grid.lp_norm(_grad_norm(grid, u) if np.ndim(u) == 3 else grid.grad(u), 2) ** 2)
    return grid.lp_norm(u, p) / (np.sqrt(p) * l2 ** (2 / p) * h1 ** (1 - 2 / p))


def log_profile(grid: DiscGrid, center, eps: float, outer: float = 0.5):
    """Truncated logarithm ``max(0, log(outer / max(|x - c|, eps)))``: an H1 function whose
    ``L^p`` norms grow like ``p``, the extremal behaviour behind the ``p^(1/2)`` factor."""
    d = np.abs(grid.x - complex(center))
    return np.clip(np.log(outer / np.maximum(d, eps)), 0.0, None)


def _ps_samples(grid: DiscGrid, n_samples: int, seed: int):
    """Alternate seeded slip fields with seeded log profiles of grid-resolved core size."""
    rng = np.random.default_rng(seed)
    n_log = n_samples // 2
    out = _samples(grid, n_samples - n_log, seed)
    h = grid.dr * float(np.abs(grid.dpsi).max())
    for _ in range(n_log):
        zc = 0.6 * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        eps = float(np.exp(rng.uniform(np.log(h), np.log(0.2))))
        out.append(log_profile(grid, grid.map.psi(zc), eps))
    return out


def probe_poincare_sobolev(grid: DiscGrid, p_list=(4, 8, 16, 32), n_samples: int = 50, seed: int = 0,
                           fields=None) -> dict:
    """``{p: max ratio over samples}``; samples mix slip fields and log profiles."""
    samples = [np.asarray(f, dtype=float) for f in fields] if fields is not None else _ps_samples(grid, n_samples, seed)
    table = {}
    for p in p_list:
        vals = [poincare_sobolev_ratio(grid, u, float(p)) for u in samples]
        vals = [v for v in vals if v is not None]
        table[float(p)] = float(max(vals)) if vals else float("nan")
    return table


def weighted_gradient_ratio(grid: DiscGrid, u, nu: float) -> Optional[float]:
    """``int |u|^nu |grad u|^2 / int |u|^nu ((div u)^2 + omega^2)``."""
    if not 0 <= nu < 0.5:
        raise DomainError("nu must lie in [0, 0.5)")
    check_tangency(grid, u)
    u = _normalize(u)
    w = np.sqrt(np.sum(u**2, -1)) ** nu
    den = grid.integrate(w * (grid.div(u) ** 2 + grid.curl(u) ** 2))
    if den < DEGENERATE_TOL:
        return None
    return grid.integrate(w * _grad_norm(grid, u) ** 2) / den


def probe_weighted_gradient(grid: DiscGrid, nu: float = 0.1, n_samples: int = 50, seed: int = 0,
                            fields=None) -> RatioStats:
    ratios, skipped = [], 0
    for u in _samples(grid, n_samples, seed, fields):
        r = weighted_gradient_ratio(grid, u, nu)
        if r is None:
            skipped += 1
        else:
            ratios.append(r)
    return _stats(ratios, skipped)


def _l1_entry_norm(T):
    return np.sum(np.abs(T), axis=(-2, -1))


def probe_bkm(state, q: float = 4.0) -> float:
    """``|grad u|_inf / [(|div u|_inf + |omega|_inf) log(e + |grad^2 u|_q) + |grad u|_2 + 1]``.

    Matrix entries are measured with the entrywise l1 norm; second differences
    skip the two outermost rings.
    """
    g = state.grid
    u = np.asarray(state.u, dtype=float)
    ghost = getattr(state, "u_ghost", None)
    gu = g.grad(u, ghost)
    num = float(_l1_entry_norm(gu).max())
    if num == 0:
        return 0.0
    d = g.div(u, ghost)
    w = g.curl(u, ghost)
    flat = gu.reshape(g.Nr, g.Ntheta, 4)
    h2 = np.stack([g.grad(flat[..., k]) for k in range(4)], -1)  # [..., i, k]
    h2 = np.sum(np.abs(h2), axis=(-2, -1))
    h2 = np.where(np.arange(g.Nr)[:, None] < g.Nr - 2, h2, 0.0)
    hq = g.lp_norm(h2, q)
    gl2 = float(np.sqrt(g.integrate(_l1_entry_norm(gu) ** 2)))
    den = (np.abs(d).max() + np.abs(w).max()) * np.log(np.e + hq) + gl2 + 1.0
    return num / den


def probe_density_lp(state, p_list=(2, 4, 8, np.inf)) -> dict:
    g = state.grid
    rho = np.maximum(np.asarray(state.rho, dtype=float), 0.0)
    return {float(p): g.lp_norm(rho, p) for p in p_list}


__all__ = [
    "DiagnosticsRecord", "RECORD_FIELDS", "RatioStats", "Recorder", "check_tangency",
    "default_commutator_probes", "div_curl_ratio", "log_profile", "poincare_sobolev_ratio", "probe_bkm",
    "probe_density_lp", "probe_div_curl", "probe_poincare_sobolev", "probe_weighted_gradient",
    "record", "records_csv_text", "weighted_gradient_ratio",
]
