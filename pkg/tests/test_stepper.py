import math
import os

import numpy as np
import pytest

from benard.grid import ScalarField, VectorField, build_grid, divergence, gradient, mac_operators
from benard.initial import density_blob, temperature_modes, velocity_modes
from benard.ledger import energy
from benard.oracles import heat_decay, hodge_projection
from benard.stepper import (
    FluidState,
    StepConfig,
    controlled_step,
    projection,
    read_checkpoint,
    stable_dt,
    step,
    write_checkpoint,
)
from benard.transport import ViscosityLaw


def _state(g, rho=1.0, u=None, theta=None):
    rho_f = rho if isinstance(rho, ScalarField) else ScalarField(g, rho * np.ones(g.cells))
    u = u if u is not None else VectorField.zeros(g)
    theta = theta if theta is not None else ScalarField(g, np.zeros(g.cells), "dirichlet_zero")
    return FluidState(0.0, rho_f, u, theta, ScalarField(g, np.zeros(g.cells)))


def test_stable_dt_without_motion_is_dt_max():
    g = build_grid((4, 4))
    assert stable_dt(_state(g), StepConfig(dt_max=0.3)) == 0.3


def test_stable_dt_formula():
    g = build_grid((4, 4))
    comps = [np.zeros(g.face_shape(a)) for a in range(2)]
    comps[0][2, 1] = -1.0
    s = _state(g, u=VectorField(g, tuple(comps), boundary="none"))
    assert stable_dt(s, StepConfig(cfl=0.5, dt_max=1.0)) == 0.125
    assert stable_dt(s, StepConfig(cfl=0.5, dt_max=0.1)) == 0.1


def test_zero_state_is_a_fixed_point():
    g = build_grid((12, 12))
    s = _state(g)
    for _ in range(3):
        s, rep = step(s, ViscosityLaw(), 1.0, StepConfig(), 0.05)
    assert np.all(s.u.dofs() == 0)
    assert np.all(s.theta.values == 0) and np.all(s.P.values == 0)
    assert np.all(s.rho.values == 1.0)
    assert rep.ut_l2 == 0.0 and rep.thetat_l2 == 0.0


def test_heat_decay_oracle():
    res = heat_decay()
    assert res.passed
    assert res.values["rel_error"] <= 0.02


def test_projection_keeps_solenoidal_field():
    g = build_grid((16, 16))
    u = velocity_modes(g, 1.0, (1, 2))
    out, phi, _, res = projection(u, ScalarField(g, np.ones(g.cells)), 0.1)
    np.testing.assert_allclose(out.dofs(), u.dofs(), atol=1e-12)
    assert np.ptp(phi.values) < 1e-10 and res < 1e-12


def test_projection_removes_neumann_gradient():
    res = hodge_projection(32)
    assert res.passed
    assert res.values["gradient_residual"] <= 1e-8


def test_projection_with_vacuum_patch():
    g = build_grid((24, 24))
    vals = np.ones(g.cells)
    vals[6:14, 8:18] = 0.0
    rho = ScalarField(g, vals)
    x, y = g.cell_centers()
    ustar = VectorField(g, gradient(ScalarField(g, np.cos(np.pi * x) * y**2)).components)
    ustar = VectorField.from_dofs(g, ustar.dofs() + velocity_modes(g, 1.0, 1).dofs())
    u, _, _, res = projection(ustar, rho, 0.01, 1e-9)
    assert res <= 1e-9
    assert np.abs(divergence(u).values).max() < 1e-7


def test_vacuum_step_stays_finite():
    g = build_grid((24, 24))
    vals = np.ones(g.cells)
    vals[6:14, 8:18] = 0.0
    rho = ScalarField(g, vals)
    s = _state(g, rho, velocity_modes(g, 0.5, 1), temperature_modes(g, 1.0, 1))
    cfg = StepConfig()
    for _ in range(5):
        s, rep = step(s, ViscosityLaw(), 1.0, cfg)
        assert rep.div_residual <= cfg.proj_tol
    assert np.all(np.isfinite(s.u.dofs())) and np.all(np.isfinite(s.theta.values))
    assert s.rho.values.min() >= -1e-10 and s.rho.values.max() <= 1.0 + 1e-10


def test_step_preserves_boundaries_and_divergence():
    g = build_grid((16, 16))
    rho = density_blob(g, (0.5, 0.5), 0.2, 1.0, 0.1)
    s = _state(g, rho, velocity_modes(g, 1.0, 1), temperature_modes(g, 1.0, (1, 2)))
    s, rep = step(s, ViscosityLaw(), 1.0, StepConfig())
    for a, c in enumerate(s.u.components):
        assert np.all(np.take(c, 0, axis=a) == 0) and np.all(np.take(c, -1, axis=a) == 0)
    assert s.theta.boundary == "dirichlet_zero"
    assert np.abs(mac_operators(g).divergence @ s.u.dofs()).max() < 1e-7
    assert abs(s.P.values.mean()) < 1e-12


def test_kinetic_energy_decreases_without_buoyancy():
    g = build_grid((16, 16))
    s = _state(g, 1.0, velocity_modes(g, 1.0, (1, 2)))
    cfg = StepConfig(buoyancy=False)
    E = [energy(s)]
    for _ in range(8):
        s, _ = step(s, ViscosityLaw(a=0.05, b=0.0), 1.0, cfg)
        E.append(energy(s))
    assert all(b <= a for a, b in zip(E, E[1:]))


def test_three_dimensional_step():
    g = build_grid((8, 8, 8))
    s = _state(g, density_blob(g, (0.5, 0.5, 0.5), 0.25, 1.0, 0.1), velocity_modes(g, 0.5, 1), temperature_modes(g, 1.0, 1))
    s, rep = step(s, ViscosityLaw(), 1.0, StepConfig())
    assert rep.div_residual <= 1e-9
    assert np.abs(s.u.components[2]).max() > 0


def test_step_doubling_halves_dt_for_buoyant_start():
    g = build_grid((16, 16))
    s = _state(g, 1.0, None, temperature_modes(g, 200.0, 1))
    cfg = StepConfig(dt_max=0.2, dt_tol=1e-4)
    assert stable_dt(s, cfg) == 0.2
    out, rep = controlled_step(s, ViscosityLaw(), 1.0, cfg)
    assert rep.dt_used < 0.2
    assert rep.step_error <= 10 * cfg.dt_tol
    assert out.t == pytest.approx(rep.dt_used, abs=1e-15)


def test_checkpoint_round_trip(tmp_path):
    g = build_grid((6, 5), (1.0, 0.8))
    rng = np.random.default_rng(7)
    ops = mac_operators(g)
    s = FluidState(
        0.125,
        ScalarField(g, rng.random(g.cells)),
        VectorField.from_dofs(g, rng.standard_normal(ops.n_dofs)),
        ScalarField(g, rng.standard_normal(g.cells), "dirichlet_zero"),
        ScalarField(g, rng.standard_normal(g.cells)),
    )
    path = tmp_path / "c.bin"
    write_checkpoint(str(path), s)
    faces = sum(math.prod(g.face_shape(a)) for a in range(2))
    assert os.path.getsize(path) == 8 * (1 + 2 + 2 + 1) + 8 * (3 * 30 + faces)
    r = read_checkpoint(str(path))
    assert r.t == s.t and r.grid.cells == g.cells and r.grid.lengths == g.lengths
    for a, b in ((r.rho, s.rho), (r.theta, s.theta), (r.P, s.P)):
        np.testing.assert_array_equal(a.values, b.values)
    for a, b in zip(r.u.components, s.u.components):
        np.testing.assert_array_equal(a, b)
    assert not [p for p in os.listdir(tmp_path) if p.startswith(".ckpt-")]
