"""
Scenario orchestration: build initial data from a config, run, judge, write.

Scenarios

- ``decay``: one coupled run with the full ledger and every verdict,
- ``vacuum-smoke``: same run with a zero background density, stability only,
- ``threshold-sweep``: fixed-height blobs over ``sweep_radii``,
- ``stokes-probe``: manufactured steady problems and regularity ratios,
- ``oracles``: the analytic checks of :mod:`benard.oracles`.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import oracles
from .config import SimConfig, render_config
from .grid import ScalarField, VectorField, gradient_norm, mac_operators
from .initial import (
    density_blob,
    localized_velocity,
    temperature_from_vertical,
    temperature_modes,
    velocity_modes,
)
from .io import atomic_write, table_csv, write_outputs
from .ledger import (
    LedgerRow,
    RateParams,
    Verdict,
    bootstrap_monitor,
    decay_verdict,
    gronwall_mu_verdict,
    ledger_row,
    monotone_energy_verdict,
    sigma_and_threshold,
    weighted_series,
)
from .stepper import FluidState, controlled_step, stable_dt, step, write_checkpoint
from .transport import mass_moments


def initial_state(cfg: SimConfig) -> FluidState:
    grid = cfg.grid()
    center = cfg.center()
    rho = density_blob(grid, center, cfg.m0_radius, cfg.rho_bar, cfg.rho_background, cfg.blob_width)
    if cfg.rho_background == 0.0:
        # cut the tanh tail so the far field is true vacuum, not 1e-9
        vals = rho.values.copy()
        vals[vals < 1e-6 * cfg.rho_bar] = 0.0
        rho = ScalarField(grid, vals)
    if cfg.u_init == "modes":
        u = velocity_modes(grid, cfg.u_amplitude, cfg.u_modes)
    elif cfg.u_init == "localized":
        u = localized_velocity(grid, center, cfg.localize_factor * cfg.m0_radius, cfg.u_amplitude)
    else:
        u = VectorField.zeros(grid)
    if cfg.theta_init == "modes":
        theta = temperature_modes(grid, cfg.theta_amplitude, cfg.theta_modes)
    elif cfg.theta_init == "vertical":
        theta = temperature_from_vertical(u, cfg.theta_amplitude)
    else:
        theta = ScalarField(grid, np.zeros(grid.cells), "dirichlet_zero")
    return FluidState(0.0, rho, u, theta, ScalarField(grid, np.zeros(grid.cells)))


@dataclass
class RunResult:
    rows: list[LedgerRow]
    m0: float
    rho_bar: float
    initial_min: float
    initial_max: float
    max_mass_drift: float = 0.0
    rho_low: float = math.inf
    rho_high: float = -math.inf
    max_div_residual: float = 0.0
    max_poincare_u: float = 0.0
    steps: int = 0
    runtime: float = 0.0
    final: FluidState | None = None


def _velocity_poincare(u: VectorField) -> float:
    g = gradient_norm(u, 2.0)
    if g == 0.0:
        return 0.0
    x = u.dofs()
    return math.sqrt(float(x @ x) * u.grid.cell_volume) / g


def run_simulation(cfg: SimConfig, out_dir: str | None = None) -> RunResult:
    """Time loop with outputs at exact multiples of ``output_interval``.

    Conservation, the max principle and the projection residual are tracked
    after every step, the ledger at every output time.
    """
    t0 = time.perf_counter()
    state = initial_state(cfg)
    law = cfg.law()
    scfg = cfg.step_config()
    V = state.grid.cell_volume
    mom = mass_moments(state.rho)
    rho_bar = mom.rho_max
    res = RunResult([], mom.m0, rho_bar, mom.rho_min, mom.rho_max, rho_low=mom.rho_min, rho_high=mom.rho_max)

    def record(s, prev):
        res.rows.append(ledger_row(s, prev, law, cfg.kappa, cfg.q, rho_bar, mom.m0, cfg.mu_average))
        res.max_poincare_u = max(res.max_poincare_u, _velocity_poincare(s.u))

    record(state, None)
    n_out = max(1, round(cfg.t_end / cfg.output_interval))
    n_ckpt = round(cfg.checkpoint_interval / cfg.output_interval) if cfg.checkpoint_interval > 0 else 0
    if n_ckpt and out_dir:
        os.makedirs(os.path.join(out_dir, "checkpoints"), exist_ok=True)
    advance = controlled_step if cfg.step_doubling else step
    for k in range(1, n_out + 1):
        t_target = cfg.t_end if k == n_out else k * cfg.output_interval
        while True:
            remaining = t_target - state.t
            if remaining <= 1e-12 * max(1.0, t_target):
                break
            dt = min(stable_dt(state, scfg), remaining)
            prev = state
            state, rep = advance(state, law, cfg.kappa, scfg, dt)
            res.steps += 1
            res.max_div_residual = max(res.max_div_residual, rep.div_residual)
            m = math.fsum((state.rho.values * V).ravel())
            if mom.m0 > 0:
                res.max_mass_drift = max(res.max_mass_drift, abs(m - mom.m0) / mom.m0)
            res.rho_low = min(res.rho_low, float(state.rho.values.min()))
            res.rho_high = max(res.rho_high, float(state.rho.values.max()))
        state = FluidState(t_target, state.rho, state.u, state.theta, state.P)
        record(state, prev)
        if n_ckpt and out_dir and k % n_ckpt == 0:
            write_checkpoint(os.path.join(out_dir, "checkpoints", f"t{k * cfg.output_interval:012.6f}.bin"), state)
    res.final = state
    res.runtime = time.perf_counter() - t0
    return res


def rate_params(cfg: SimConfig, res: RunResult) -> RateParams:
    """sigma and threshold; ``C1`` defaults to the sup of the run's c1 ratio."""
    c1 = cfg.C1
    if c1 is None:
        c1 = max((r.c1_ratio for r in res.rows), default=0.0)
    return sigma_and_threshold(cfg.law().mu_min, cfg.kappa, res.rho_bar, cfg.grid().diameter, c1 if c1 > 0 else math.inf, res.m0)


def transport_verdicts(cfg: SimConfig, res: RunResult) -> list[Verdict]:
    tol_bound = 1e-10 if cfg.transport == "upwind" else 1e-6
    low_gap = res.rho_low - (res.initial_min - tol_bound)
    high_gap = res.initial_max + tol_bound - res.rho_high
    return [
        Verdict("mass_conservation", res.max_mass_drift <= 1e-12, 1e-12 - res.max_mass_drift, None),
        Verdict("max_principle", low_gap >= 0 and high_gap >= 0, min(low_gap, high_gap), None),
        Verdict("divergence", res.max_div_residual <= cfg.proj_tol, cfg.proj_tol - res.max_div_residual, None),
    ]


def decay_verdicts(cfg: SimConfig, res: RunResult) -> tuple[list[Verdict], dict]:
    params = rate_params(cfg, res)
    rows = res.rows
    mono = monotone_energy_verdict(rows, params, cfg.rel_slack)
    decay, rate = decay_verdict(rows, params, cfg.t_end, cfg.decay_factor)
    gron = gronwall_mu_verdict(rows, params, cfg.abs_slack)
    boot = bootstrap_monitor(rows, params, rows[0].grad_mu_lq, cfg.q, cfg.abs_slack)
    ws = weighted_series(rows, params, cfg.t_end)
    d = params.diameter
    verdicts = [
        mono,
        decay,
        gron,
        *boot.all(),
        Verdict("mass_below_threshold", params.m0 < params.threshold, params.threshold - params.m0, None),
        Verdict("weighted_energy_bounded", ws["tail_bounded"], ws["sup_exp_E"], None),
        Verdict("poincare_velocity", res.max_poincare_u <= d, d - res.max_poincare_u, None),
        *transport_verdicts(cfg, res),
    ]
    summary = {
        "scenario": cfg.scenario,
        "m0": res.m0,
        "rho_bar": res.rho_bar,
        "sigma": params.sigma,
        "C1": params.C1,
        "threshold_m0": params.threshold,
        "fitted_rate": rate,
        "sup_c1_ratio": max(r.c1_ratio for r in rows),
        "max_poincare_u": res.max_poincare_u,
        "steps": res.steps,
        "runtime_s": res.runtime,
        **{k: (float(v) if not isinstance(v, bool) else v) for k, v in ws.items()},
    }
    return verdicts, summary


@dataclass
class ScenarioOutcome:
    verdicts: list[Verdict]
    summary: dict = field(default_factory=dict)
    rows: list[LedgerRow] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 0 if all(v.holds for v in self.verdicts) else 1


def _decay(cfg: SimConfig, out_dir: str | None) -> ScenarioOutcome:
    res = run_simulation(cfg, out_dir)
    verdicts, summary = decay_verdicts(cfg, res)
    return ScenarioOutcome(verdicts, summary, res.rows)


def _vacuum(cfg: SimConfig, out_dir: str | None) -> ScenarioOutcome:
    res = run_simulation(cfg, out_dir)
    finite = all(all(math.isfinite(v) for v in (r.E, r.D, r.B)) for r in res.rows)
    verdicts = [Verdict("finite_ledger", finite, 0.0, None), *transport_verdicts(cfg, res)]
    summary = {"scenario": cfg.scenario, "m0": res.m0, "rho_min0": res.initial_min, "steps": res.steps, "runtime_s": res.runtime}
    return ScenarioOutcome(verdicts, summary, res.rows)


def worker_count() -> int:
    env = os.environ.get("BENARD_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sup_coupling(rows) -> float:
    """``sup |B| / (||grad u|| ||grad theta||)`` over the rows (zero denominators skipped)."""
    best = 0.0
    for r in rows:
        den = r.grad_u_l2 * r.grad_theta_l2
        if den > 0:
            best = max(best, abs(r.B) / den)
    return best


def sweep(cfg: SimConfig, key: str, values, out_dir: str | None = None) -> tuple[list[dict], list[Verdict]]:
    """Independent runs with ``key`` set to each value, dispatched over threads.

    Each run writes into ``out_dir/<key>=<value>``. For ``key = m0_radius`` a
    scaling verdict is added: ``sup |B|/(||grad u|| ||grad theta||) / m0^(2/3)``
    must vary by less than a factor 2.
    """
    from .config import _PARSERS

    parse = _PARSERS[key]

    def one(value):
        sub = cfg.with_values(**{key: parse(str(value)) if isinstance(value, str) else value})
        sub_dir = os.path.join(out_dir, f"{key}={value}") if out_dir else None
        res = run_simulation(sub, sub_dir)
        params = rate_params(sub, res)
        row = {
            key: value,
            "m0": res.m0,
            "sup_c1_ratio": max(r.c1_ratio for r in res.rows),
            "sup_coupling": sup_coupling(res.rows),
            "runtime_s": res.runtime,
        }
        row["coupling_over_m0_23"] = row["sup_coupling"] / res.m0 ** (2.0 / 3.0) if res.m0 > 0 else math.nan
        if sub_dir:
            write_outputs(res.rows, transport_verdicts(sub, res), sub_dir, row, render_config(sub))
        return row

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        table = list(pool.map(one, values))
    verdicts = [Verdict("sweep_finite", all(math.isfinite(r["sup_c1_ratio"]) for r in table), 0.0, None)]
    if key == "m0_radius" and len(table) > 1:
        scaled = np.array([r["coupling_over_m0_23"] for r in table])
        spread = float(scaled.max() / scaled.min()) if scaled.min() > 0 else math.inf
        verdicts.append(Verdict("c1_scaling", spread < 2.0, 2.0 - spread, None))
    if out_dir:
        header = list(table[0].keys())
        atomic_write(os.path.join(out_dir, "sweep.csv"), table_csv(header, [[r[h] for h in header] for r in table]))
    return table, verdicts


def _threshold_sweep(cfg: SimConfig, out_dir: str | None) -> ScenarioOutcome:
    table, verdicts = sweep(cfg, "m0_radius", list(cfg.sweep_radii), out_dir)
    m0s = [r["m0"] for r in table]
    summary = {"scenario": cfg.scenario, "m0_range": max(m0s) / min(m0s), "runs": len(table)}
    return ScenarioOutcome(verdicts, summary)


def stokes_probe_table(cfg: SimConfig) -> tuple[list[list], list[Verdict]]:
    rows, verdicts = [], []
    for kind in ("constant", "variable"):
        res = oracles.manufactured_stokes(kind, cfg.stokes_grids, cfg.q, cfg.r)
        v = res.values
        for i, n in enumerate(v["grids"]):
            rows.append(
                [
                    kind,
                    n,
                    v["errors"][i],
                    v["orders"][i - 1] if i > 0 else math.nan,
                    v["iterations"][i],
                    v["ratios"][i],
                    v["ratios_r"][i],
                    v["pressure_ratios"][i],
                    v["pressure_over_mu_ratios"][i],
                ]
            )
        verdicts.append(Verdict(f"stokes_order_{kind}", min(v["orders"]) >= 1.9, min(v["orders"]) - 1.9, None))
        verdicts.append(Verdict(f"regularity_stable_{kind}", v["ratio_spread"] <= 0.1, 0.1 - v["ratio_spread"], None))
        verdicts.append(Verdict(f"energy_consistency_{kind}", v["energy_gap"] <= 1e-8, 1e-8 - v["energy_gap"], None))
    return rows, verdicts


STOKES_HEADER = ["kind", "n", "l2_error", "order", "iterations", "h2_ratio", "w2r_ratio", "p_ratio", "p_over_mu_ratio"]


def _stokes_probe(cfg: SimConfig, out_dir: str | None) -> ScenarioOutcome:
    rows, verdicts = stokes_probe_table(cfg)
    if out_dir:
        atomic_write(os.path.join(out_dir, "probe.csv"), table_csv(STOKES_HEADER, rows))
    return ScenarioOutcome(verdicts, {"scenario": cfg.scenario})


def _oracles(cfg: SimConfig, out_dir: str | None) -> ScenarioOutcome:
    results = oracles.run_all(cfg.nx, cfg.probe_count, cfg.seed)
    verdicts = [Verdict(f"oracle_{r.name}", r.passed, 0.0, None) for r in results]
    summary: dict = {"scenario": cfg.scenario}
    for r in results:
        for k, v in r.values.items():
            if isinstance(v, (int, float)):
                summary[f"{r.name}.{k}"] = float(v)
        summary[f"{r.name}.runtime_s"] = r.runtime
    return ScenarioOutcome(verdicts, summary)


_RUNNERS = {
    "decay": _decay,
    "vacuum-smoke": _vacuum,
    "threshold-sweep": _threshold_sweep,
    "stokes-probe": _stokes_probe,
    "oracles": _oracles,
}


def run_scenario(cfg: SimConfig, out_dir: str | None = None) -> ScenarioOutcome:
    """Run ``cfg.scenario`` and write ledger, verdicts, summary and resolved config."""
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    outcome = _RUNNERS[cfg.scenario](cfg, out_dir)
    write_outputs(outcome.rows, outcome.verdicts, out_dir, outcome.summary, render_config(cfg))
    return outcome
