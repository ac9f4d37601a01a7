"""
Time stepping of the coupled density / momentum / temperature system

    rho_t + u . grad rho = 0
    rho u_t + rho u . grad u - div(2 mu(rho) D(u)) + grad P = rho theta e_3
    rho theta_t + rho u . grad theta - kappa lap theta = rho u . e_3
    div u = 0

One step is first order in time and split as

1. upwind transport of rho,
2. momentum predictor: explicit central advection and buoyancy, implicit
   variable-viscosity block with the previous pressure gradient,
3. variable-density projection onto discretely divergence-free fields,
4. temperature: explicit central advection and source, implicit diffusion.

The density in the momentum and temperature mass terms is the one at the
start of the step.
"""
from __future__ import annotations

import math
import os
import struct
import tempfile
import threading
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .errors import SolverError, StabilityError
from .grid import (
    Grid,
    ScalarField,
    VectorField,
    _pad_dirichlet,
    _slice,
    cell_average,
    mac_operators,
)
from .linalg import SpdSolver, auto_method
from .transport import ViscosityLaw, advect_density, viscosity_field


@dataclass(frozen=True)
class StepConfig:
    cfl: float = 0.5
    dt_max: float = 1e-2
    u_floor: float = 1e-12
    proj_tol: float = 1e-9
    eps_rho: float = 1e-6
    rho_bar: float = 1.0
    buoyancy: bool = True
    frozen_velocity: bool = False
    transport: str = "upwind"
    mu_average: str = "arithmetic"
    solver: str = "auto"
    step_doubling: bool = False
    dt_tol: float = 1e-3
    dt_min: float = 1e-8


@dataclass(frozen=True, eq=False)
class FluidState:
    t: float
    rho: ScalarField
    u: VectorField
    theta: ScalarField
    P: ScalarField

    @property
    def grid(self) -> Grid:
        return self.rho.grid


@dataclass(frozen=True)
class StepReport:
    dt_used: float
    projection_iterations: int
    div_residual: float
    ut_l2: float
    thetat_l2: float
    step_error: float | None = None


def max_speed(u: VectorField) -> float:
    return max(float(np.abs(c).max()) for c in u.components)


def stable_dt(state: FluidState, config: StepConfig) -> float:
    """``min(dt_max, cfl * h / max(|u|, u_floor))``; diffusion is implicit."""
    speed = max(max_speed(state.u), config.u_floor)
    return min(config.dt_max, config.cfl * state.grid.min_spacing / speed)


def effective_density(rho: np.ndarray, config: StepConfig) -> np.ndarray:
    """Vacuum floor ``max(rho, eps_rho * rho_bar)``; only used where rho divides or weights a solve."""
    return np.maximum(rho, config.eps_rho * config.rho_bar)


# ---------------------------------------------------------------------------
# Explicit terms
# ---------------------------------------------------------------------------


def momentum_advection(u: VectorField) -> np.ndarray:
    """Central ``(u . grad) u`` on interior faces, in dof ordering."""
    grid = u.grid
    d = grid.dim
    comps = u.components
    out = []
    for i in range(d):
        Ui = comps[i]
        inner = _slice(i, 1, -1, d)
        acc = np.zeros(grid.interior_face_shape(i))
        for j in range(d):
            if j == i:
                dU = (Ui[_slice(i, 2, None, d)] - Ui[_slice(i, None, -2, d)]) / (2 * grid.spacing[i])
                vel = Ui[inner]
            else:
                P = _pad_dirichlet(Ui, j)
                dU = ((P[_slice(j, 2, None, d)] - P[_slice(j, None, -2, d)]) / (2 * grid.spacing[j]))[inner]
                Uj = comps[j]
                at_cells = 0.5 * (Uj[_slice(j, None, -1, d)] + Uj[_slice(j, 1, None, d)])
                vel = 0.5 * (at_cells[_slice(i, None, -1, d)] + at_cells[_slice(i, 1, None, d)])
            acc += vel * dU
        out.append(acc.ravel())
    return np.concatenate(out)


def scalar_advection(u: VectorField, theta: np.ndarray) -> np.ndarray:
    """Central ``u . grad theta`` at cell centres for a Dirichlet-zero scalar."""
    grid = u.grid
    ubar = cell_average(u)
    acc = np.zeros(grid.cells)
    for a in range(grid.dim):
        P = _pad_dirichlet(theta, a)
        acc += ubar[a] * (P[_slice(a, 2, None, grid.dim)] - P[_slice(a, None, -2, grid.dim)]) / (2 * grid.spacing[a])
    return acc


def buoyancy_force(rho: np.ndarray, theta: np.ndarray, grid: Grid) -> np.ndarray:
    """``rho theta e_3`` averaged onto vertical interior faces, dof ordering."""
    ops = mac_operators(grid)
    f = ops.cells_to_faces @ (rho * theta).ravel()
    out = np.zeros(ops.n_dofs)
    v = grid.vertical
    sl = slice(ops.dof_offsets[v], ops.dof_offsets[v + 1])
    out[sl] = f[sl]
    return out


def _solver_for(A, config: StepConfig, dim: int = 2, rtol=1e-12) -> SpdSolver:
    method = config.solver if config.solver != "auto" else auto_method(A.shape[0], dim)
    return SpdSolver(A, method, rtol=rtol)


_thermal_cache = threading.local()


def _thermal_solver(rho_c: np.ndarray, dt: float, kappa: float, grid: Grid, config: StepConfig) -> SpdSolver:
    """Reuse the last temperature factorisation while rho, dt and kappa are unchanged."""
    key = (grid, dt, kappa, config.solver)
    hit = getattr(_thermal_cache, "entry", None)
    if hit is not None and hit[0] == key and np.array_equal(hit[1], rho_c):
        return hit[2]
    ops = mac_operators(grid)
    At = (sp.diags(rho_c / dt) - kappa * ops.dirichlet_laplacian).tocsr()
    solver = _solver_for(At, config, grid.dim)
    _thermal_cache.entry = (key, rho_c.copy(), solver)
    return solver


def _l2_cells(v: np.ndarray, V: float) -> float:
    return math.sqrt(float(np.dot(v, v)) * V)


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def projection(
    u_star: VectorField,
    rho: ScalarField,
    dt: float,
    tol: float = 1e-9,
    config: StepConfig | None = None,
):
    """Project ``u_star`` onto discretely divergence-free fields.

    Solves ``div(grad phi / rho_eff) = div u_star / dt`` with zero normal flux
    at the walls and returns ``(u, phi, iterations, div_residual)`` where
    ``u = u_star - dt grad phi / rho_eff`` and ``phi`` has zero mean.
    """
    config = config or StepConfig()
    grid = u_star.grid
    ops = mac_operators(grid)
    B = ops.divergence
    beta = 1.0 / ops.face_density(effective_density(rho.values, config))
    x = u_star.dofs()
    L = (B @ sp.diags(beta) @ B.T).tocsr()
    # pin one cell: rows of L sum to zero and rhs has zero mean
    solver = _solver_for(L[1:, 1:], config, grid.dim)
    phi = np.zeros(ops.n_cells)
    u_new = x
    div_res = _l2_cells(B @ u_new, grid.cell_volume)
    # a vacuum floor makes the coefficient contrast large; a few refinement
    # sweeps with the same factorisation recover the lost digits
    for _ in range(4):
        if div_res <= 0.01 * tol:
            break
        rhs = -(B @ u_new) / dt
        corr = np.zeros(ops.n_cells)
        corr[1:] = solver.solve(rhs[1:])
        phi += corr
        u_new = u_new + dt * beta * (B.T @ corr)
        div_res = _l2_cells(B @ u_new, grid.cell_volume)
    phi -= phi.mean()
    if div_res > tol:
        raise SolverError(f"projection left div residual {div_res:.3e} > {tol:.1e}", residual=div_res, stage="projection")
    return (
        VectorField.from_dofs(grid, u_new),
        ScalarField(grid, phi.reshape(grid.cells)),
        solver.last_iterations,
        div_res,
    )


# ---------------------------------------------------------------------------
# Step
# ---------------------------------------------------------------------------


def step(
    state: FluidState,
    law: ViscosityLaw,
    kappa: float,
    config: StepConfig,
    dt: float | None = None,
) -> tuple[FluidState, StepReport]:
    """Advance one step; returns the new state and its report.

    Sub-solver failures are re-raised with the failing stage recorded on the
    exception (``stage`` attribute).
    """
    if dt is None:
        dt = stable_dt(state, config)
    grid = state.grid
    ops = mac_operators(grid)
    V = grid.cell_volume
    rho0 = state.rho.values
    rho_eff_f = ops.face_density(effective_density(rho0, config))

    new_rho = state.rho
    if not config.frozen_velocity or max_speed(state.u) > 0:
        new_rho = advect_density(state.rho, state.u, dt, config.transport)

    u_old = state.u.dofs()
    if config.frozen_velocity:
        u_new_field, P_new, proj_iters = state.u, state.P, 0
        div_res = _l2_cells(ops.divergence @ u_old, V)
    else:
        mu = viscosity_field(state.rho, law)
        K = ops.viscous(mu.values, config.mu_average)
        A = (sp.diags(rho_eff_f / dt) + K).tocsr()
        rhs = rho_eff_f * (u_old / dt - momentum_advection(state.u))
        rhs += ops.divergence.T @ state.P.values.ravel()
        if config.buoyancy:
            rhs += buoyancy_force(rho0, state.theta.values, grid)
        try:
            u_star = _solver_for(A, config, grid.dim).solve(rhs, x0=u_old)
        except SolverError as exc:
            exc.stage = "momentum"
            raise
        try:
            u_new_field, phi, proj_iters, div_res = projection(
                VectorField.from_dofs(grid, u_star), state.rho, dt, config.proj_tol, config
            )
        except SolverError as exc:
            exc.stage = "projection"
            raise
        P = state.P.values + phi.values
        P_new = ScalarField(grid, P - P.mean())

    theta = state.theta.values
    rc = rho0.ravel()
    rhs_t = rc * (theta.ravel() / dt - scalar_advection(u_new_field, theta).ravel())
    if config.buoyancy:
        rhs_t += rc * cell_average(u_new_field)[grid.vertical].ravel()
    try:
        th = _thermal_solver(rc, dt, kappa, grid, config).solve(rhs_t, x0=theta.ravel())
    except SolverError as exc:
        exc.stage = "temperature"
        raise
    new_theta = ScalarField(grid, th.reshape(grid.cells), "dirichlet_zero")

    rho_new_f = ops.face_density(new_rho.values)
    du = (u_new_field.dofs() - u_old) / dt
    dth = (th - theta.ravel()) / dt
    report = StepReport(
        dt_used=dt,
        projection_iterations=proj_iters,
        div_residual=div_res,
        ut_l2=math.sqrt(float(np.sum(rho_new_f * du * du)) * V),
        thetat_l2=math.sqrt(float(np.sum(new_rho.values.ravel() * dth * dth)) * V),
    )
    new_state = FluidState(state.t + dt, new_rho, u_new_field, new_theta, P_new)
    return new_state, report


def step_error(coarse: FluidState, fine: FluidState) -> float:
    """Relative L^2 gap between a full step and two half steps."""
    V = coarse.grid.cell_volume
    du = coarse.u.dofs() - fine.u.dofs()
    dth = coarse.theta.values - fine.theta.values
    num = math.sqrt(float(du @ du) * V) + math.sqrt(float(np.sum(dth * dth)) * V)
    scale = math.sqrt(float(fine.u.dofs() @ fine.u.dofs()) * V) + math.sqrt(
        float(np.sum(fine.theta.values**2)) * V
    )
    return num / max(scale, 1e-300)


def controlled_step(
    state: FluidState,
    law: ViscosityLaw,
    kappa: float,
    config: StepConfig,
    dt: float | None = None,
) -> tuple[FluidState, StepReport]:
    """Step-doubling control: halve ``dt`` until the doubling error is below ``10 * dt_tol``.

    A trial step that breaks the transport Courant limit also halves ``dt``.

    Returns the two-half-step result, with the accepted error in the report.
    """
    if dt is None:
        dt = stable_dt(state, config)
    while True:
        try:
            coarse, _ = step(state, law, kappa, config, dt)
            half, _ = step(state, law, kappa, config, 0.5 * dt)
            fine, rep = step(half, law, kappa, config, 0.5 * dt)
        except StabilityError:
            # the flow accelerated past the transport limit inside the step
            if 0.5 * dt < config.dt_min:
                raise
            dt *= 0.5
            continue
        err = step_error(coarse, fine)
        if err <= 10.0 * config.dt_tol or 0.5 * dt < config.dt_min:
            du = (fine.u.dofs() - state.u.dofs()) / dt
            dth = (fine.theta.values - state.theta.values) / dt
            V = state.grid.cell_volume
            rf = mac_operators(state.grid).face_density(fine.rho.values)
            rep = replace(
                rep,
                dt_used=dt,
                step_error=err,
                ut_l2=math.sqrt(float(np.sum(rf * du * du)) * V),
                thetat_l2=math.sqrt(float(np.sum(fine.rho.values * dth * dth)) * V),
            )
            return fine, rep
        dt *= 0.5


# ---------------------------------------------------------------------------
# Checkpoints
# ---------------------------------------------------------------------------


def write_checkpoint(path: str, state: FluidState) -> None:
    """Flat little-endian dump: dim, cells, lengths, time, then rho, u_i, theta, P.

    Integers are int64, everything else float64; arrays are C-ordered with
    the x axis slowest. The file is written to a temporary name and renamed.
    """
    g = state.grid
    parts = [struct.pack("<q", g.dim), struct.pack(f"<{g.dim}q", *g.cells)]
    parts.append(struct.pack(f"<{g.dim}d", *g.lengths))
    parts.append(struct.pack("<d", state.t))
    arrays = [state.rho.values, *state.u.components, state.theta.values, state.P.values]
    for a in arrays:
        parts.append(np.ascontiguousarray(a, dtype="<f8").tobytes())
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".ckpt-")
    with os.fdopen(fd, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


def read_checkpoint(path: str) -> FluidState:
    with open(path, "rb") as fh:
        data = fh.read()
    (dim,) = struct.unpack_from("<q", data, 0)
    off = 8
    cells = struct.unpack_from(f"<{dim}q", data, off)
    off += 8 * dim
    lengths = struct.unpack_from(f"<{dim}d", data, off)
    off += 8 * dim
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    grid = Grid(cells, lengths)

    def take(shape):
        nonlocal off
        n = math.prod(shape)
        a = np.frombuffer(data, dtype="<f8", count=n, offset=off).reshape(shape)
        off += 8 * n
        return a.astype(float)

    rho = take(grid.cells)
    comps = tuple(take(grid.face_shape(a)) for a in range(dim))
    theta = take(grid.cells)
    P = take(grid.cells)
    return FluidState(
        t,
        ScalarField(grid, rho),
        VectorField(grid, comps),
        ScalarField(grid, theta, "dirichlet_zero"),
        ScalarField(grid, P),
    )
