"""
Estimate ledger: per-output diagnostics, inequality verdicts and decay fits.

Every row is computed with the same quadrature as the solver, so that the
discrete energy balance

    (E_{n+1} - E_n) / dt + (D_n + D_{n+1}) - (B_n + B_{n+1}) = r_n

has a residual ``r_n`` that only reflects time discretisation error.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .errors import DegenerateInputError, DomainError
from .grid import (
    ScalarField,
    cell_average,
    cell_gradient,
    deformation_dissipation,
    gradient_norm,
    mac_operators,
    sobolev_norm,
)
from .stepper import FluidState
from .transport import ViscosityLaw, grad_mu_lq, viscosity_field

ABS_SLACK = 1e-8
REL_SLACK = 1e-10


@dataclass(frozen=True)
class LedgerRow:
    t: float
    E: float
    D: float
    B: float
    grad_u_l2: float
    grad_theta_l2: float
    grad_u_linf: float
    grad_mu_lq: float
    sq_rho_ut_l2: float
    sq_rho_thetat_l2: float
    grad_rho_l2: float
    rho_t_l32: float
    mass_l1: float
    rho_min: float
    rho_max: float
    c1_ratio: float
    u_h2: float
    theta_h2: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return list(asdict(self).values())


@dataclass(frozen=True)
class RateParams:
    mu_lower: float
    kappa: float
    rho_bar: float
    diameter: float
    sigma: float
    C1: float
    m0: float
    threshold: float

    @staticmethod
    def zeta(t: float) -> float:
        return min(1.0, t)


@dataclass(frozen=True)
class Verdict:
    name: str
    holds: bool
    margin: float
    first_violation_t: float | None = None

    def line(self) -> str:
        fv = "none" if self.first_violation_t is None else repr(float(self.first_violation_t))
        return f"{self.name}={str(self.holds).lower()} {float(self.margin)!r} {fv}"


def sigma_and_threshold(mu_lower, kappa, rho_bar, diameter, C1, m0=float("nan")) -> RateParams:
    """Decay rate ``min(mu_lower, kappa) / (2 rho_bar d^2)`` and mass threshold.

    The threshold is ``mu_lower kappa / (C1^2 rho_bar^(2/3))``.
    """
    for name, v in (("mu_lower", mu_lower), ("kappa", kappa), ("rho_bar", rho_bar), ("diameter", diameter), ("C1", C1)):
        if not v > 0:
            raise DomainError(f"{name} must be positive, got {v}")
    scale = 2.0 * rho_bar * diameter**2
    sigma = min(mu_lower / scale, kappa / scale)
    threshold = mu_lower * kappa / (C1**2 * rho_bar ** (2.0 / 3.0))
    return RateParams(mu_lower, kappa, rho_bar, diameter, sigma, C1, m0, threshold)


def energy(state: FluidState) -> float:
    """``||sqrt(rho) u||^2 + ||sqrt(rho) theta||^2`` with face-averaged density."""
    grid = state.grid
    ops = mac_operators(grid)
    x = state.u.dofs()
    rf = ops.face_density(state.rho.values)
    V = grid.cell_volume
    return float(np.sum(rf * x * x)) * V + float(np.sum(state.rho.values * state.theta.values**2)) * V


def buoyancy_work(state: FluidState) -> float:
    """``2 int rho (u . e_3) theta`` with the vertical velocity averaged to cells."""
    grid = state.grid
    w = cell_average(state.u)[grid.vertical]
    return 2.0 * float(np.sum(state.rho.values * w * state.theta.values)) * grid.cell_volume


def _lp_cells(vals, p, V):
    a = np.abs(vals)
    return float(np.sum(a**p) * V) ** (1.0 / p)


def ledger_row(
    state: FluidState,
    prev: FluidState | None,
    law: ViscosityLaw,
    kappa: float,
    q: float,
    rho_bar: float,
    m0: float,
    mu_average: str = "arithmetic",
) -> LedgerRow:
    """All tracked quantities at ``state.t``.

    Time derivatives are backward differences against ``prev``; without a
    previous state they are ``nan``.
    """
    grid = state.grid
    V = grid.cell_volume
    rho = state.rho.values
    mu = viscosity_field(state.rho, law)
    gu = gradient_norm(state.u, 2.0)
    gth = gradient_norm(state.theta, 2.0)
    D = deformation_dissipation(state.u, mu, mu_average) + kappa * gth**2
    B = buoyancy_work(state)
    den = rho_bar ** (1.0 / 3.0) * m0 ** (2.0 / 3.0) * gu * gth
    c1 = abs(B) / den if den > 0 else 0.0
    g_rho = cell_gradient(rho, grid)
    grad_rho = math.sqrt(float(np.sum(g_rho * g_rho)) * V)
    if prev is None:
        ut = tht = rt = float("nan")
    else:
        dt = state.t - prev.t
        if not dt > 0:
            raise DomainError("previous state must be strictly earlier")
        rf = mac_operators(grid).face_density(rho)
        du = (state.u.dofs() - prev.u.dofs()) / dt
        dth = (state.theta.values - prev.theta.values) / dt
        ut = math.sqrt(float(np.sum(rf * du * du)) * V)
        tht = math.sqrt(float(np.sum(rho * dth * dth)) * V)
        rt = _lp_cells((rho - prev.rho.values) / dt, 1.5, V)
    return LedgerRow(
        t=float(state.t),
        E=energy(state),
        D=D,
        B=B,
        grad_u_l2=gu,
        grad_theta_l2=gth,
        grad_u_linf=gradient_norm(state.u, math.inf),
        grad_mu_lq=grad_mu_lq(state.rho, law, q),
        sq_rho_ut_l2=ut,
        sq_rho_thetat_l2=tht,
        grad_rho_l2=grad_rho,
        rho_t_l32=rt,
        mass_l1=math.fsum((np.abs(rho) * V).ravel()),
        rho_min=float(rho.min()),
        rho_max=float(rho.max()),
        c1_ratio=c1,
        u_h2=sobolev_norm(state.u, 2, 2.0),
        theta_h2=sobolev_norm(state.theta, 2, 2.0),
    )


def _column(rows, name) -> np.ndarray:
    return np.array([getattr(r, name) for r in rows], dtype=float)


def energy_identity_residual(rows) -> np.ndarray:
    """``r_n = (E_{n+1} - E_n)/dt + (D_n + D_{n+1}) - (B_n + B_{n+1})``.

    Uses the trapezoid (midpoint-average) value of dissipation and buoyancy
    work over each output interval.
    """
    if len(rows) < 2:
        raise DegenerateInputError("need at least two rows")
    t = _column(rows, "t")
    E, D, B = (_column(rows, k) for k in "EDB")
    return np.diff(E) / np.diff(t) + (D[1:] + D[:-1]) - (B[1:] + B[:-1])


def fit_decay_rate(rows, window) -> float:
    """Least-squares slope of ``-log E`` over rows with ``t1 <= t <= t2``."""
    return fit_decay_rate_arrays(_column(rows, "t"), _column(rows, "E"), window)


def fit_decay_rate_arrays(t, E, window) -> float:
    t1, t2 = window
    if not t2 > t1:
        raise DomainError("window must satisfy t2 > t1")
    t = np.asarray(t, float)
    E = np.asarray(E, float)
    sel = (t >= t1 - 1e-12) & (t <= t2 + 1e-12)
    if sel.sum() < 2:
        raise DegenerateInputError("fewer than two rows inside the fit window")
    if np.any(E[sel] <= 0):
        raise DegenerateInputError("energy must be positive on the fit window")
    return float(np.polyfit(t[sel], -np.log(E[sel]), 1)[0])


def monotone_energy_verdict(rows, params: RateParams | None = None, rel_slack: float = REL_SLACK) -> Verdict:
    """``E`` non-increasing between consecutive rows up to a relative slack.

    ``margin`` is the smallest ``(E_n (1 + slack) - E_{n+1}) / E_n`` seen.
    """
    if len(rows) < 2:
        return Verdict("monotone_energy", True, math.inf, None)
    E = _column(rows, "E")
    t = _column(rows, "t")
    margin = math.inf
    first = None
    for n in range(len(E) - 1):
        scale = max(abs(E[n]), 1e-300)
        m = (E[n] * (1.0 + rel_slack) - E[n + 1]) / scale
        margin = min(margin, m)
        if m < 0 and first is None:
            first = float(t[n + 1])
    return Verdict("monotone_energy", first is None, margin, first)


def decay_verdict(rows, params: RateParams, t_end: float, factor: float = 0.9) -> tuple[Verdict, float]:
    """Fitted rate over ``[zeta(T), T]`` against ``factor * sigma``.

    For ``T <= 1`` that window is a single point, so the whole run is fitted.
    """
    t1 = RateParams.zeta(t_end)
    if t1 >= t_end:
        t1 = 0.0
    rate = fit_decay_rate(rows, (t1, t_end))
    margin = rate - factor * params.sigma
    return Verdict("decay_rate", margin >= 0, margin, None if margin >= 0 else t_end), rate


def _trapezoid_running(t, f) -> np.ndarray:
    out = np.zeros_like(t)
    if len(t) > 1:
        out[1:] = np.cumsum(0.5 * (f[1:] + f[:-1]) * np.diff(t))
    return out


def gronwall_mu_verdict(rows, params: RateParams | None = None, abs_slack: float = ABS_SLACK) -> Verdict:
    """``||grad mu(t)||_q <= ||grad mu(0)||_q exp(int_0^t ||grad u||_inf) + slack``."""
    t = _column(rows, "t")
    g = _column(rows, "grad_mu_lq")
    integral = _trapezoid_running(t, _column(rows, "grad_u_linf"))
    bound = g[0] * np.exp(integral) + abs_slack
    gap = bound - g
    bad = np.nonzero(gap < 0)[0]
    first = float(t[bad[0]]) if bad.size else None
    return Verdict("gronwall_grad_mu", first is None, float(gap.min()), first)


def _cap_verdict(name, t, values, cap, abs_slack) -> Verdict:
    if cap == math.inf:
        return Verdict(name, True, math.inf, None)
    gap = cap + abs_slack - values
    bad = np.nonzero(gap < 0)[0]
    return Verdict(name, not bad.size, float(gap.min()), float(t[bad[0]]) if bad.size else None)


@dataclass(frozen=True)
class BootstrapResult:
    conditions: tuple[Verdict, Verdict]
    conclusions: tuple[Verdict, Verdict]

    def all(self) -> list[Verdict]:
        return [*self.conditions, *self.conclusions]


def bootstrap_monitor(rows, params: RateParams, grad_mu0: float, q: float | None = None, abs_slack: float = ABS_SLACK) -> BootstrapResult:
    """Assumed bounds (factors 4 and 2) and improved bounds (factors 2 and 1).

    The first family caps ``sup ||grad mu||_q`` by a multiple of its initial
    value; the second caps ``int_0^t ||grad u||_2^4`` by a multiple of
    ``m0^(1/3)``. A vanishing initial ``grad mu`` gives infinite margin when
    the field stays zero.
    """
    t = _column(rows, "t")
    g = _column(rows, "grad_mu_lq")
    gu4 = _trapezoid_running(t, _column(rows, "grad_u_l2") ** 4)
    m13 = params.m0 ** (1.0 / 3.0)

    def mu_cap(k):
        if grad_mu0 == 0.0 and np.all(g <= abs_slack):
            return math.inf
        return k * grad_mu0

    conditions = (
        _cap_verdict("bootstrap_grad_mu_4x", t, g, mu_cap(4.0), abs_slack),
        _cap_verdict("bootstrap_grad_u4_2x", t, gu4, 2.0 * m13, abs_slack),
    )
    conclusions = (
        _cap_verdict("bootstrap_grad_mu_2x", t, g, mu_cap(2.0), abs_slack),
        _cap_verdict("bootstrap_grad_u4_1x", t, gu4, m13, abs_slack),
    )
    return BootstrapResult(conditions, conclusions)


def weighted_series(rows, params: RateParams, t_end: float | None = None) -> dict:
    """Time-weighted sups and integrals of the tracked norms.

    Keys: ``sup_t1_grad`` and ``sup_t2_grad`` (``t^i (||grad u||^2 + ||grad theta||^2)``),
    ``sup_exp_E`` with ``argsup_exp_E``, ``sup_exp_ut`` (over ``t >= zeta(T)``),
    ``int_exp_grad`` (trapezoid), and ``tail_bounded`` which is true when the
    last third of the running sup of ``e^{sigma t} E`` does not grow.
    """
    t = _column(rows, "t")
    if t_end is None:
        t_end = float(t[-1]) if len(t) else 0.0
    g2 = _column(rows, "grad_u_l2") ** 2 + _column(rows, "grad_theta_l2") ** 2
    w = np.exp(params.sigma * t)
    eE = w * _column(rows, "E")
    ut = np.nan_to_num(_column(rows, "sq_rho_ut_l2") ** 2 + _column(rows, "sq_rho_thetat_l2") ** 2)
    late = t >= RateParams.zeta(t_end) - 1e-12
    out = {
        "sup_t1_grad": float(np.max(t * g2, initial=0.0)),
        "sup_t2_grad": float(np.max(t * t * g2, initial=0.0)),
        "sup_exp_E": float(np.max(eE, initial=0.0)),
        "argsup_exp_E": float(t[np.argmax(eE)]) if len(t) else 0.0,
        "sup_exp_ut": float(np.max((w * ut)[late], initial=0.0)),
        "int_exp_grad": float(_trapezoid_running(t, w * g2)[-1]) if len(t) else 0.0,
    }
    running = np.maximum.accumulate(eE) if len(t) else eE
    tail = running[len(running) * 2 // 3:]
    out["tail_bounded"] = bool(np.all(np.isfinite(running)) and (tail.size < 2 or tail[-1] <= tail[0] * (1 + REL_SLACK)))
    return out
