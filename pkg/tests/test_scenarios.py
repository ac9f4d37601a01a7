import os

import numpy as np
import pytest

from benard.config import load_config, parse_config
from benard.io import read_ledger_csv
from benard.scenarios import (
    STOKES_HEADER,
    initial_state,
    run_scenario,
    run_simulation,
    stokes_probe_table,
    sup_coupling,
    sweep,
    worker_count,
)
from benard.stepper import read_checkpoint

BASE = "scenario = decay\nt_end = 0.1\nnx = 16\nny = 16\noutput_interval = 0.025\n"


def test_outputs_at_exact_multiples(tmp_path):
    cfg = parse_config(BASE + "checkpoint_interval = 0.05\n")
    res = run_simulation(cfg, str(tmp_path))
    assert [r.t for r in res.rows] == pytest.approx([0.0, 0.025, 0.05, 0.075, 0.1], abs=1e-15)
    ckpts = sorted(os.listdir(tmp_path / "checkpoints"))
    assert len(ckpts) == 2
    last = read_checkpoint(str(tmp_path / "checkpoints" / ckpts[-1]))
    assert last.t == 0.1
    np.testing.assert_array_equal(last.rho.values, res.final.rho.values)


def test_run_scenario_files(tmp_path):
    outcome = run_scenario(parse_config(BASE), str(tmp_path))
    assert {"ledger.csv", "verdicts.txt", "summary.txt", "resolved_config.txt"} <= set(os.listdir(tmp_path))
    lines = (tmp_path / "verdicts.txt").read_text().splitlines()
    assert len(lines) == len(outcome.verdicts)
    assert len(read_ledger_csv(str(tmp_path / "ledger.csv"))) == 5
    assert outcome.exit_code == (0 if all(v.holds for v in outcome.verdicts) else 1)


def test_vacuum_initial_state_has_true_vacuum():
    s = initial_state(parse_config(BASE + "rho_background = 0\n"))
    assert s.rho.values.min() == 0.0 and s.rho.values.max() <= 1.0


def test_c1_sup_stable_under_refinement():
    # same scenario and time steps on both grids; only h changes
    here = os.path.join(os.path.dirname(__file__), os.pardir, "configs", "decay.cfg")
    sups = []
    for n in (32, 64):
        cfg = load_config(here, {"nx": str(n), "ny": str(n), "t_end": "0.2"})
        sups.append(max(r.c1_ratio for r in run_simulation(cfg).rows))
    assert abs(sups[1] - sups[0]) <= 0.25 * sups[1]


def test_sweep_writes_table(tmp_path, monkeypatch):
    monkeypatch.setenv("BENARD_THREADS", "2")
    assert worker_count() == 2
    cfg = parse_config(BASE + "t_end = 0.02\noutput_interval = 0.01\n")
    table, verdicts = sweep(cfg, "m0_radius", ["0.1", "0.2"], str(tmp_path))
    assert [r["m0_radius"] for r in table] == ["0.1", "0.2"]
    assert table[0]["m0"] < table[1]["m0"]
    assert (tmp_path / "sweep.csv").read_text().splitlines()[0].startswith("m0_radius,m0,")
    assert os.path.isdir(tmp_path / "m0_radius=0.1")
    assert {v.name for v in verdicts} == {"sweep_finite", "c1_scaling"}


def test_sup_coupling_skips_zero_denominators():
    from benard.ledger import LedgerRow

    base = dict.fromkeys(LedgerRow.columns(), 0.0)
    cols = [(1.0, 0.0, 1.0), (2.0, 1.0, 4.0), (0.5, 1.0, 0.25)]
    rows = [LedgerRow(**dict(base, B=b, grad_u_l2=gu, grad_theta_l2=gt)) for b, gu, gt in cols]
    assert sup_coupling(rows) == 2.0


def test_stokes_probe_table():
    cfg = parse_config("scenario = stokes-probe\nt_end = 1\nnx = 8\nny = 8\nstokes_grids = 8,16\n")
    rows, verdicts = stokes_probe_table(cfg)
    assert len(rows) == 4 and all(len(r) == len(STOKES_HEADER) for r in rows)
    assert np.isnan(rows[0][3]) and rows[1][3] > 1.5
    assert {v.name for v in verdicts} >= {"stokes_order_constant", "regularity_stable_variable"}


def test_unknown_sweep_key():
    with pytest.raises(KeyError):
        sweep(parse_config(BASE), "not_a_key", [1])
