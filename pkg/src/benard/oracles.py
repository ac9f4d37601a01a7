"""Analytic oracles for the solver components.

Each function runs one self-contained check against a closed-form answer
and returns its measurements; the pass/fail decision uses the thresholds
given as keyword arguments.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import manufactured
from .grid import ScalarField, VectorField, build_grid, gradient, mac_operators
from .inequalities import random_probe_suite, refinement_spread
from .ledger import energy, fit_decay_rate_arrays
from .stepper import FluidState, StepConfig, projection, step
from .stokes import StokesProblem, pressure_probe, regularity_probe, solve_stokes
from .transport import ViscosityLaw, advect_density, max_outflow_number
from .initial import gaussian_blob, rotation_2d, temperature_modes


@dataclass
class OracleResult:
    name: str
    passed: bool
    values: dict = field(default_factory=dict)
    runtime: float = 0.0


def heat_decay(n: int = 64, dt: float = 1e-3, t_end: float = 0.5, window=(0.05, 0.5), kappa: float = 1.0, tol: float = 0.02) -> OracleResult:
    """Frozen ``u = 0``, ``rho = 1``, first Dirichlet mode: energy rate ``2 kappa lambda_1``."""
    t0 = time.perf_counter()
    g = build_grid((n, n))
    zero = ScalarField(g, np.zeros(g.cells))
    s = FluidState(0.0, ScalarField(g, np.ones(g.cells)), VectorField.zeros(g), temperature_modes(g, 1.0, 1), zero)
    cfg = StepConfig(dt_max=dt, buoyancy=False, frozen_velocity=True)
    law = ViscosityLaw()
    steps = round(t_end / dt)
    ts, Es = [0.0], [energy(s)]
    for k in range(steps):
        s, _ = step(s, law, kappa, cfg, dt)
        ts.append((k + 1) * dt)
        Es.append(energy(s))
    rate = fit_decay_rate_arrays(ts, Es, window)
    expected = 2.0 * kappa * 2.0 * math.pi**2
    rel = abs(rate - expected) / expected
    return OracleResult(
        "heat_decay", rel <= tol, {"rate": rate, "expected": expected, "rel_error": rel}, time.perf_counter() - t0
    )


def rotation_transport(
    n: int = 64,
    cfl: float = 0.5,
    revolutions: float = 1.0,
    sigma: float = 0.05,
    center=(0.7, 0.5),
    scheme: str = "upwind",
    drift_tol: float = 1e-12,
    bound_tol: float = 1e-10,
) -> OracleResult:
    """Gaussian blob carried by a tapered solid-body rotation.

    After whole revolutions the exact solution is the initial blob, which
    gives the shape error; conservation and the max principle are checked
    after every step.
    """
    t0 = time.perf_counter()
    g = build_grid((n, n))
    omega = 2.0 * math.pi
    u = rotation_2d(g, omega)
    rho0 = gaussian_blob(g, center, sigma)
    speed = max(float(np.abs(c).max()) for c in u.components)
    t_total = revolutions * 2.0 * math.pi / omega
    steps = math.ceil(t_total / (cfl * g.min_spacing / speed))
    dt = t_total / steps
    V = g.cell_volume
    m0 = math.fsum((rho0.values * V).ravel())
    lo, hi = float(rho0.values.min()), float(rho0.values.max())
    rho = rho0
    drift = 0.0
    rmin, rmax = lo, hi
    for _ in range(steps):
        rho = advect_density(rho, u, dt, scheme)
        m = math.fsum((rho.values * V).ravel())
        drift = max(drift, abs(m - m0) / m0)
        rmin = min(rmin, float(rho.values.min()))
        rmax = max(rmax, float(rho.values.max()))
    bounded = rmin >= lo - bound_tol and rmax <= hi + bound_tol
    shape = float(np.sum(np.abs(rho.values - rho0.values)) / np.sum(np.abs(rho0.values)))
    div = float(np.abs(mac_operators(g).divergence @ u.dofs()).max())
    vals = {
        "steps": steps,
        "dt": dt,
        "courant": max_outflow_number(u, dt),
        "mass_drift": drift,
        "rho_min": rmin,
        "rho_max": rmax,
        "initial_min": lo,
        "initial_max": hi,
        "shape_error_l1": shape,
        "max_div": div,
    }
    return OracleResult("rotation_transport", drift <= drift_tol and bounded, vals, time.perf_counter() - t0)


def _velocity_error(sol, exact: VectorField) -> float:
    d = sol.u.dofs() - exact.dofs()
    return math.sqrt(float(d @ d) * exact.grid.cell_volume)


def manufactured_stokes(kind: str = "constant", grids=(16, 32, 64), q: float = 4.0, r: float | None = None, tol: float = 1e-10, min_order: float = 1.9, stability: float = 0.1) -> OracleResult:
    """Convergence order and regularity-ratio stability on the manufactured family."""
    t0 = time.perf_counter()
    errors, ratios, ratios_r, p_ratios, pmu_ratios, iters, energy_gaps = [], [], [], [], [], [], []
    for n in grids:
        g = build_grid((n, n))
        prob = StokesProblem(manufactured.sample_viscosity(g, kind), manufactured.sample_forcing(g, kind))
        sol = solve_stokes(prob, tol=tol)
        errors.append(_velocity_error(sol, manufactured.sample_velocity(g)))
        ratios.append(regularity_probe(prob, sol, q))
        if r is not None:
            ratios_r.append(regularity_probe(prob, sol, q, r))
        p_ratios.append(pressure_probe(prob, sol, q, scale_by_viscosity=False))
        pmu_ratios.append(pressure_probe(prob, sol, q, scale_by_viscosity=True))
        iters.append(sol.iterations)
        K = mac_operators(g).viscous(prob.mu.values)
        x = sol.u.dofs()
        work = float(prob.forcing.dofs() @ x) * g.cell_volume
        energy_gaps.append(abs(work - float(x @ (K @ x)) * g.cell_volume) / max(abs(work), 1e-300))
    orders = [
        math.log(errors[i] / errors[i + 1]) / math.log(grids[i + 1] / grids[i]) for i in range(len(grids) - 1)
    ]
    spread = abs(ratios[-1] / ratios[-2] - 1.0) if len(ratios) > 1 else 0.0
    vals = {
        "grids": tuple(grids),
        "errors": errors,
        "orders": orders,
        "ratios": ratios,
        "ratios_r": ratios_r,
        "pressure_ratios": p_ratios,
        "pressure_over_mu_ratios": pmu_ratios,
        "ratio_spread": spread,
        "iterations": iters,
        "energy_gap": max(energy_gaps),
    }
    ok = min(orders) >= min_order and spread <= stability
    return OracleResult(f"stokes_{kind}", ok, vals, time.perf_counter() - t0)


def inequality_probes(grids=(32, 64), count: int = 100, seed: int = 0, stability: float = 0.05) -> OracleResult:
    """Poincaré bound and GN-ratio stability on seeded random Dirichlet fields."""
    t0 = time.perf_counter()
    suites = [random_probe_suite(build_grid((n, n)), count, seed) for n in grids]
    d = build_grid((grids[-1], grids[-1])).diameter
    poinc = max(float(s["poincare"].max()) for s in suites)
    p2 = max(float(np.abs(s[2.0] - 1.0).max()) for s in suites)
    s4 = refinement_spread(suites[-2][4.0], suites[-1][4.0])
    s6 = refinement_spread(suites[-2][6.0], suites[-1][6.0])
    vals = {
        "max_poincare": poinc,
        "diameter": d,
        "max_gn2_deviation": p2,
        "gn4_spread": s4,
        "gn6_spread": s6,
        "max_gn4": float(suites[-1][4.0].max()),
        "max_gn6": float(suites[-1][6.0].max()),
    }
    ok = poinc <= d and p2 <= 1e-12 and s4 <= stability and s6 <= stability
    return OracleResult("inequality_probes", ok, vals, time.perf_counter() - t0)


def hodge_projection(n: int = 32, tol: float = 1e-9) -> OracleResult:
    """A discrete gradient of a Neumann potential projects to zero; a curl is left alone."""
    t0 = time.perf_counter()
    g = build_grid((n, n))
    x, y = g.cell_centers()
    psi = ScalarField(g, np.cos(np.pi * x) * np.cos(np.pi * y))
    ustar = gradient(psi)
    rho = ScalarField(g, np.ones(g.cells))
    u, _, _, _ = projection(ustar, rho, 1.0, tol)
    resid = math.sqrt(float(u.dofs() @ u.dofs()) * g.cell_volume)
    w = manufactured.sample_velocity(g)
    w2, phi, _, _ = projection(w, rho, 1.0, tol)
    change = float(np.abs(w2.dofs() - w.dofs()).max())
    vals = {"gradient_residual": resid, "solenoidal_change": change, "phi_spread": float(np.ptp(phi.values))}
    return OracleResult("hodge_projection", resid <= 10 * tol and change <= 10 * tol, vals, time.perf_counter() - t0)


def run_all(n: int = 64, count: int = 100, seed: int = 0) -> list[OracleResult]:
    return [
        heat_decay(n),
        rotation_transport(n),
        manufactured_stokes("constant"),
        manufactured_stokes("variable"),
        inequality_probes((n // 2, n), count, seed),
        hodge_projection(max(n // 2, 8)),
    ]
