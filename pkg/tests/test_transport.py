import math

import numpy as np
import pytest

from benard.errors import DomainError, PositivityError, StabilityError, ViscosityBoundError
from benard.grid import ScalarField, VectorField, build_grid
from benard.initial import density_blob, gaussian_blob, rotation_2d, velocity_modes
from benard.oracles import rotation_transport
from benard.transport import (
    ViscosityLaw,
    advect_density,
    grad_mu_lq,
    mass_moments,
    max_outflow_number,
    viscosity_field,
)


@pytest.fixture
def grid():
    return build_grid((32, 32))


def test_constant_density_is_unchanged(grid):
    u = velocity_modes(grid, 1.0, 2)
    rho = ScalarField(grid, 0.7 * np.ones(grid.cells))
    out = advect_density(rho, u, 0.5 / max_outflow_number(u, 1.0))
    np.testing.assert_allclose(out.values, 0.7, rtol=0, atol=1e-15)


def test_zero_velocity_leaves_density(grid):
    rho = gaussian_blob(grid, (0.5, 0.5), 0.1)
    out = advect_density(rho, VectorField.zeros(grid), 0.1)
    np.testing.assert_array_equal(out.values, rho.values)


def test_courant_limit_raises(grid):
    u = velocity_modes(grid, 1.0, 1)
    dt = 2.0 / max_outflow_number(u, 1.0)
    with pytest.raises(StabilityError):
        advect_density(gaussian_blob(grid, (0.5, 0.5), 0.1), u, dt)


def test_rotation_oracle_conserves_and_stays_bounded():
    res = rotation_transport(64, cfl=0.5)
    assert res.passed
    assert res.values["mass_drift"] <= 1e-12
    assert res.values["max_div"] < 1e-12


def test_muscl_less_diffusive_than_upwind():
    up = rotation_transport(32, scheme="upwind", sigma=0.08)
    mu = rotation_transport(32, scheme="muscl", sigma=0.08, bound_tol=1e-6)
    assert mu.values["shape_error_l1"] < up.values["shape_error_l1"]
    assert mu.values["mass_drift"] <= 1e-12


def test_affine_law_values():
    law = ViscosityLaw(a=1.0, b=1.0, rho_max=1.0)
    assert law.mu_min == 1.0 and law.mu_max == 2.0
    g = build_grid((4, 4))
    assert np.all(viscosity_field(ScalarField(g, np.zeros(g.cells)), law).values == 1.0)
    np.testing.assert_allclose(viscosity_field(ScalarField(g, 0.3 * np.ones(g.cells)), law).values, 1.3)


def test_tabulated_law_is_monotone_and_c1():
    law = ViscosityLaw(kind="tabulated", table=(1.0, 1.2, 2.0, 2.1), rho_max=1.0)
    r = np.linspace(0, 1, 401)
    assert np.all(np.diff(law(r)) >= -1e-14)
    d = law.derivative(r)
    assert np.all(np.isfinite(d)) and np.max(np.abs(np.diff(d))) < 0.5


def test_tabulated_law_violating_bounds_is_rejected():
    with pytest.raises(ViscosityBoundError):
        ViscosityLaw(kind="tabulated", table=(1.0, 0.5, 2.0), rho_max=1.0, mu_min=0.8, mu_max=2.0)
    with pytest.raises(ViscosityBoundError):
        ViscosityLaw(a=0.0, b=1.0)


def test_viscosity_field_catches_misdeclared_range():
    law = ViscosityLaw(a=1.0, b=1.0, rho_max=1.0)
    g = build_grid((4, 4))
    with pytest.raises(ViscosityBoundError):
        viscosity_field(ScalarField(g, 3.0 * np.ones(g.cells)), law)


def test_grad_mu_constant_density(grid):
    law = ViscosityLaw(a=1.0, b=2.0)
    assert grad_mu_lq(ScalarField(grid, 0.5 * np.ones(grid.cells)), law, 4.0) == 0.0


def test_grad_mu_linear_density(grid):
    law = ViscosityLaw(a=1e-3, b=1.0, rho_max=1.0)
    x, _ = grid.cell_centers()
    assert grad_mu_lq(ScalarField(grid, x), law, 4.0) == pytest.approx(1.0, rel=1e-10)


@pytest.mark.parametrize("q", [3.0, 2.0])
def test_grad_mu_requires_q_above_three(grid, q):
    with pytest.raises(DomainError):
        grad_mu_lq(ScalarField(grid, np.ones(grid.cells)), ViscosityLaw(), q)


def test_mass_moments_of_unit_density():
    g = build_grid((8, 8))
    m = mass_moments(ScalarField(g, np.ones(g.cells)))
    assert m.m0 == pytest.approx(1.0, abs=1e-15)
    assert all(v == pytest.approx(1.0, abs=1e-14) for v in m.lp_norms.values())
    assert m.rho_min == m.rho_max == 1.0


def test_mass_moments_of_sharp_blob():
    # sharp edge: the mollified ball is close to an indicator of area pi R^2
    g = build_grid((256, 256))
    R = 0.2
    rho = density_blob(g, (0.5, 0.5), R, 1.0, 0.0, width=R / 50)
    area = math.pi * R**2
    m = mass_moments(rho)
    # the one-cell transition layer costs about h / R of the mass
    assert m.m0 == pytest.approx(area, rel=1e-2)
    assert m.lp_norms[1.5] == pytest.approx(area ** (2 / 3), rel=1e-2)


def test_mass_moments_flag_negative_density():
    g = build_grid((4, 4))
    vals = np.ones(g.cells)
    vals[0, 0] = -1e-6
    with pytest.raises(PositivityError):
        mass_moments(ScalarField(g, vals))


def test_moments_preserved_along_transport(grid):
    u = rotation_2d(grid, 2 * math.pi)
    rho = density_blob(grid, (0.6, 0.5), 0.15, 1.0, 0.1)
    m0 = mass_moments(rho)
    for _ in range(20):
        rho = advect_density(rho, u, 0.5 * grid.min_spacing / 2.2)
    m1 = mass_moments(rho)
    assert m1.m0 == pytest.approx(m0.m0, rel=1e-12)
    assert m1.lp_norms[3.0] <= m0.lp_norms[3.0] + 1e-12
    assert m1.lp_norms[math.inf] <= m0.lp_norms[math.inf] + 1e-12
