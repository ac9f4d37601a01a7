import numpy as np
import pytest
import sympy as sp

from benard import manufactured
from benard.errors import DegenerateInputError, DomainError, StructuralError, ViscosityBoundError
from benard.grid import ScalarField, VectorField, build_grid, divergence, gradient
from benard.oracles import manufactured_stokes
from benard.stokes import StokesProblem, regularity_probe, solve_stokes


@pytest.mark.parametrize("kind", ["constant", "variable"])
def test_forcing_matches_symbolic_operator(kind):
    x, y = sp.symbols("x y")
    u1 = sp.sin(sp.pi * x) ** 2 * sp.sin(2 * sp.pi * y)
    u2 = -sp.sin(2 * sp.pi * x) * sp.sin(sp.pi * y) ** 2
    P = sp.cos(sp.pi * x) * sp.cos(sp.pi * y)
    mu = sp.Integer(1) if kind == "constant" else 1 + sp.sin(sp.pi * x) * sp.sin(sp.pi * y) / 2
    grad = [[sp.diff(u1, x), sp.diff(u1, y)], [sp.diff(u2, x), sp.diff(u2, y)]]
    S = [[mu * (grad[i][j] + grad[j][i]) for j in range(2)] for i in range(2)]
    f = [
        -(sp.diff(S[0][0], x) + sp.diff(S[0][1], y)) + sp.diff(P, x),
        -(sp.diff(S[1][0], x) + sp.diff(S[1][1], y)) + sp.diff(P, y),
    ]
    fn = sp.lambdify((x, y), f, "numpy")
    pts = np.random.default_rng(0).random((2, 50))
    exact = np.array(fn(*pts))
    mine = np.array(manufactured.forcing(pts[0], pts[1], kind))
    np.testing.assert_allclose(mine, exact, atol=1e-10)
    assert sp.simplify(sp.diff(u1, x) + sp.diff(u2, y)) == 0


def _problem(g, kind="constant", forcing=None):
    f = forcing if forcing is not None else manufactured.sample_forcing(g, kind)
    return StokesProblem(manufactured.sample_viscosity(g, kind), f)


def test_zero_forcing_gives_zero_solution():
    g = build_grid((16, 16))
    zero = VectorField.zeros(g)
    sol = solve_stokes(_problem(g, forcing=zero))
    assert np.all(sol.u.dofs() == 0) and np.all(sol.P.values == 0)
    with pytest.raises(DegenerateInputError):
        regularity_probe(_problem(g, forcing=zero), sol, 4.0)


@pytest.mark.parametrize("kind", ["constant", "variable"])
def test_manufactured_convergence(kind):
    res = manufactured_stokes(kind, (16, 32, 64))
    assert min(res.values["orders"]) >= 1.9
    assert res.values["ratio_spread"] <= 0.1
    assert res.values["energy_gap"] < 1e-9


def test_solution_residuals_and_mean_zero_pressure():
    g = build_grid((32, 32))
    sol = solve_stokes(_problem(g, "variable"), tol=1e-10)
    assert sol.div_residual <= 1e-10 and sol.momentum_residual <= 1e-10
    assert abs(sol.P.values.mean()) < 1e-13


def test_gradient_forcing_goes_into_pressure():
    # constant viscosity and a pure gradient force: u = 0, P = psi
    g = build_grid((24, 24))
    x, y = g.cell_centers()
    psi = np.cos(np.pi * x) * np.cos(2 * np.pi * y)
    F = gradient(ScalarField(g, psi))
    F = VectorField(g, F.components, boundary="none")
    sol = solve_stokes(StokesProblem(ScalarField(g, np.ones(g.cells)), F), tol=1e-11)
    assert np.abs(sol.u.dofs()).max() < 1e-9
    np.testing.assert_allclose(sol.P.values, psi - psi.mean(), atol=1e-8)


def test_viscous_image_of_solenoidal_field_has_zero_pressure():
    # F = K u_h with u_h discretely divergence free: the exact discrete
    # solution is (u_h, 0), so P vanishes to solver tolerance
    from benard.grid import mac_operators
    from benard.initial import velocity_modes

    g = build_grid((24, 24))
    u_h = velocity_modes(g, 1.0, (1, 2))
    ops = mac_operators(g)
    assert np.abs(ops.divergence @ u_h.dofs()).max() < 1e-12
    F = VectorField.from_dofs(g, ops.viscous(np.ones(g.cells)) @ u_h.dofs())
    sol = solve_stokes(StokesProblem(ScalarField(g, np.ones(g.cells)), F), tol=1e-11)
    assert np.abs(sol.P.values).max() < 1e-9
    np.testing.assert_allclose(sol.u.dofs(), u_h.dofs(), atol=1e-10)


def test_regularity_ratio_reduces_for_constant_viscosity():
    from benard.grid import lp_norm, sobolev_norm

    g = build_grid((32, 32))
    prob = _problem(g)
    sol = solve_stokes(prob)
    expect = sobolev_norm(sol.u, 2, 2.0) / lp_norm(prob.forcing, 2.0)
    assert regularity_probe(prob, sol, 4.0) == pytest.approx(expect, rel=1e-14)
    with pytest.raises(DomainError):
        regularity_probe(prob, sol, 3.0)


def test_problem_validation():
    g, h = build_grid((8, 8)), build_grid((16, 16))
    with pytest.raises(StructuralError):
        StokesProblem(ScalarField(g, np.ones(g.cells)), VectorField.zeros(h))
    with pytest.raises(ViscosityBoundError):
        StokesProblem(ScalarField(g, np.ones(g.cells)), VectorField.zeros(g), mu_min=2.0)


def test_inner_cg_agrees_with_direct():
    g = build_grid((16, 16))
    a = solve_stokes(_problem(g, "variable"), inner="direct")
    b = solve_stokes(_problem(g, "variable"), inner="cg")
    np.testing.assert_allclose(a.u.dofs(), b.u.dofs(), atol=1e-8)
