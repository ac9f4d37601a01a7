"""Acceptance suite: one test per criterion, each at its stated tolerance.

Every test records a pass/fail line that is printed in the pytest terminal
summary under "acceptance criteria".
"""
import math
import os
import time

import numpy as np
import pytest

from benard.config import load_config
from benard.ledger import energy_identity_residual
from benard.oracles import heat_decay, inequality_probes, manufactured_stokes, rotation_transport
from benard.scenarios import run_scenario, run_simulation

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")


def config(name, **overrides):
    return load_config(os.path.join(CONFIGS, name), {k: str(v) for k, v in overrides.items()})


@pytest.fixture(scope="module")
def decay_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("decay")
    t0 = time.perf_counter()
    outcome = run_scenario(config("decay.cfg"), str(out))
    return outcome, out, time.perf_counter() - t0


def _verdicts(outcome):
    return {v.name: v for v in outcome.verdicts}


def test_criterion_01_conservation_and_max_principle(report):
    res = rotation_transport(64, cfl=0.5, revolutions=1.0)
    v = res.values
    excess = max(v["initial_min"] - v["rho_min"], v["rho_max"] - v["initial_max"], 0.0)
    ok = v["mass_drift"] <= 1e-12 and excess <= 1e-10 and res.runtime < 30
    report(1, ok, f"mass drift {v['mass_drift']:.2e}, bound excess {excess:.2e}, {res.runtime:.1f} s")
    assert ok


def test_criterion_02_heat_decay(report):
    res = heat_decay(64)
    v = res.values
    expected = 4 * math.pi**2
    ok = abs(v["rate"] - expected) <= 0.02 * expected and res.runtime < 30
    report(2, ok, f"rate {v['rate']:.4f} vs 4 pi^2 = {expected:.4f} (rel {v['rel_error']:.2e}), {res.runtime:.1f} s")
    assert ok


def test_criterion_03_manufactured_stokes(report):
    t0 = time.perf_counter()
    results = [manufactured_stokes(kind, (16, 32, 64)) for kind in ("constant", "variable")]
    runtime = time.perf_counter() - t0
    ok = runtime < 120
    parts = []
    for r in results:
        orders, spread = r.values["orders"], r.values["ratio_spread"]
        ok = ok and min(orders) >= 1.9 and spread <= 0.1
        parts.append(f"{r.name}: orders {', '.join(f'{o:.3f}' for o in orders)}, probe spread {spread:.3%}")
    report(3, ok, "; ".join(parts) + f", {runtime:.1f} s")
    assert ok


def test_criterion_04_energy_identity_first_order(report):
    t0 = time.perf_counter()
    rms = []
    for dt in (5e-4, 2.5e-4):
        cfg = config("decay.cfg", nx=32, ny=32, t_end=0.05, dt_max=dt, output_interval=dt)
        r = energy_identity_residual(run_simulation(cfg).rows)
        rms.append(float(np.sqrt(np.mean(r**2))))
    runtime = time.perf_counter() - t0
    ratio = rms[0] / rms[1]
    ok = ratio >= 1.8 and runtime < 120
    report(4, ok, f"RMS residual {rms[0]:.4e} -> {rms[1]:.4e}, ratio {ratio:.3f}, {runtime:.1f} s")
    assert ok


def test_criterion_05_monotone_energy_and_decay(decay_run, report):
    outcome, _, runtime = decay_run
    v = _verdicts(outcome)
    s = outcome.summary
    cfg = config("decay.cfg")
    rho_bar = s["rho_bar"]
    d = math.sqrt(2.0)
    sigma = min(cfg.mu_a, cfg.kappa) / (2 * rho_bar * d * d)
    ok = (
        v["monotone_energy"].holds
        and v["mass_below_threshold"].holds
        and s["fitted_rate"] >= 0.9 * sigma
        and s["sigma"] == pytest.approx(sigma, rel=1e-15)
        and runtime < 300
    )
    report(
        5,
        ok,
        f"m0 {s['m0']:.4f} < threshold {s['threshold_m0']:.4f}, E monotone (margin {v['monotone_energy'].margin:.2e}), "
        f"rate {s['fitted_rate']:.4f} >= 0.9 sigma = {0.9 * sigma:.4f}, {runtime:.1f} s",
    )
    assert ok


def test_criterion_06_gronwall(decay_run, report):
    g = _verdicts(decay_run[0])["gronwall_grad_mu"]
    report(6, g.holds, f"margin {g.margin:.4e}")
    assert g.holds


def test_criterion_07_bootstrap(decay_run, report):
    v = _verdicts(decay_run[0])
    names = ("bootstrap_grad_mu_4x", "bootstrap_grad_u4_2x", "bootstrap_grad_mu_2x", "bootstrap_grad_u4_1x")
    ok = all(v[n].holds for n in names)
    report(7, ok, ", ".join(f"{n[10:]} margin {v[n].margin:.3e}" for n in names))
    assert ok


def test_criterion_08_functional_inequalities(report):
    res = inequality_probes((32, 64), 100, 0)
    v = res.values
    ok = (
        v["max_poincare"] <= v["diameter"]
        and v["max_gn2_deviation"] <= 1e-12
        and v["gn4_spread"] <= 0.05
        and v["gn6_spread"] <= 0.05
        and res.runtime < 60
    )
    report(
        8,
        ok,
        f"max Poincare {v['max_poincare']:.4f} <= d, |GN2 - 1| {v['max_gn2_deviation']:.1e}, "
        f"GN4/GN6 spread {v['gn4_spread']:.2%}/{v['gn6_spread']:.2%}, {res.runtime:.1f} s",
    )
    assert ok


def test_criterion_09_threshold_sweep(tmp_path, report):
    t0 = time.perf_counter()
    outcome = run_scenario(config("threshold_sweep.cfg"), str(tmp_path))
    runtime = time.perf_counter() - t0
    v = _verdicts(outcome)
    rows = np.genfromtxt(tmp_path / "sweep.csv", delimiter=",", names=True)
    m0_range = float(rows["m0"].max() / rows["m0"].min())
    scaled = rows["coupling_over_m0_23"]
    spread = float(scaled.max() / scaled.min())
    bounded = bool(np.all(np.isfinite(rows["sup_c1_ratio"])))
    ok = bounded and v["c1_scaling"].holds and spread < 2 and m0_range >= 16 and runtime < 600
    report(
        9,
        ok,
        f"m0 range {m0_range:.1f}x, sup c1 ratio in [{rows['sup_c1_ratio'].min():.4f}, {rows['sup_c1_ratio'].max():.4f}], "
        f"coupling/m0^(2/3) spread {spread:.3f}, {runtime:.1f} s",
    )
    assert ok


def test_criterion_10_determinism(decay_run, tmp_path, report):
    _, first_dir, _ = decay_run
    run_scenario(config("decay.cfg"), str(tmp_path))
    a = (first_dir / "ledger.csv").read_bytes()
    b = (tmp_path / "ledger.csv").read_bytes()
    ok = a == b
    report(10, ok, f"ledger {len(a)} bytes, identical: {ok}")
    assert ok
