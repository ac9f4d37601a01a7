"""
Steady variable-viscosity Stokes solver

    -div(mu (grad u + grad u^T)) + grad P = F,   div u = 0,   u = 0 on the walls,

on the MAC grid, plus the regularity probes built on it.

The solver is a pressure-Schur iteration: conjugate gradients on
``S = B K^{-1} B^T`` (B the discrete divergence, K the viscous block),
preconditioned by the inverse-viscosity scaled pressure mass matrix. Each
outer iteration needs one viscous solve, done by :class:`~benard.linalg.SpdSolver`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError, SolverError, StructuralError, ViscosityBoundError
from .grid import (
    ScalarField,
    VectorField,
    cell_gradient,
    lp_norm,
    mac_operators,
    sobolev_norm,
)
from .linalg import SpdSolver


@dataclass(frozen=True, eq=False)
class StokesProblem:
    """Viscosity at cell centres, forcing on faces, no-slip walls."""

    mu: ScalarField
    forcing: VectorField
    mu_min: float | None = None
    mu_max: float | None = None
    average: str = "arithmetic"

    def __post_init__(self):
        if self.mu.grid != self.forcing.grid:
            raise StructuralError("viscosity and forcing live on different grids")
        m = self.mu.values
        lo = 0.0 if self.mu_min is None else self.mu_min
        if np.any(m <= lo * (1 - 1e-12)) or np.any(m <= 0):
            raise ViscosityBoundError(f"viscosity below its lower bound {lo}")
        if self.mu_max is not None and np.any(m > self.mu_max * (1 + 1e-12)):
            raise ViscosityBoundError(f"viscosity above its upper bound {self.mu_max}")

    @property
    def grid(self):
        return self.mu.grid


@dataclass(frozen=True, eq=False)
class StokesSolution:
    u: VectorField
    P: ScalarField
    iterations: int
    residual: float
    momentum_residual: float
    div_residual: float


def _l2_cells(v: np.ndarray, V: float) -> float:
    return math.sqrt(float(np.dot(v, v)) * V)


def solve_stokes(
    problem: StokesProblem,
    tol: float = 1e-10,
    max_iter: int = 2000,
    inner: str = "direct",
) -> StokesSolution:
    """Solve the steady problem to ``tol`` in the discrete L^2 norm.

    Both the divergence and the momentum residual end below ``tol``; the
    pressure is normalised to zero mean. ``inner`` picks the viscous solve
    (``direct`` or Jacobi ``cg``).
    """
    if not tol > 0:
        raise DomainError("tol must be positive")
    grid = problem.grid
    ops = mac_operators(grid)
    V = grid.cell_volume
    K = ops.viscous(problem.mu.values, problem.average)
    B = ops.divergence
    Kinv = SpdSolver(K, inner, rtol=min(1e-13, tol * 1e-3))
    F = problem.forcing.dofs()
    mu_c = problem.mu.values.ravel()

    def mean_free(v):
        return v - v.mean()

    def schur(p):
        return B @ Kinv.solve(B.T @ p)

    u0 = Kinv.solve(F)
    g = -(B @ u0)
    p = np.zeros(ops.n_cells)
    r = mean_free(g)
    z = mean_free(mu_c * r)
    d = z.copy()
    rz = float(r @ z)
    it = 0
    res = _l2_cells(r, V)
    while res > tol:
        if it >= max_iter:
            raise SolverError(f"Stokes solve stalled after {it} iterations", residual=res)
        Sd = schur(d)
        alpha = rz / float(d @ Sd)
        p += alpha * d
        r = mean_free(r - alpha * Sd)
        z = mean_free(mu_c * r)
        rz_new = float(r @ z)
        d = z + (rz_new / rz) * d
        rz = rz_new
        it += 1
        res = _l2_cells(r, V)

    p = mean_free(p)
    u = Kinv.solve(F + B.T @ p)
    div_res = _l2_cells(B @ u, V)
    mom = K @ u - B.T @ p - F
    mom_res = _l2_cells(mom, V)
    if div_res > tol or mom_res > tol * max(1.0, _l2_cells(F, V)):
        raise SolverError(
            f"Stokes residuals div={div_res:.3e}, momentum={mom_res:.3e} above tol",
            residual=max(div_res, mom_res),
        )
    return StokesSolution(
        u=VectorField.from_dofs(grid, u),
        P=ScalarField(grid, p.reshape(grid.cells)),
        iterations=it,
        residual=max(div_res, mom_res),
        momentum_residual=mom_res,
        div_residual=div_res,
    )


def grad_norm_lq(values: np.ndarray, grid, q: float) -> float:
    """``||grad v||_{L^q}`` of cell data (collocated differences, midpoint rule)."""
    g = cell_gradient(values, grid)
    mag = np.sqrt(np.sum(g * g, axis=0))
    if math.isinf(q):
        return float(mag.max())
    return float(np.sum(mag**q) * grid.cell_volume) ** (1.0 / q)


def _probe_denominator(problem: StokesProblem, q: float, r: float | None) -> float:
    if not q > 3:
        raise DomainError(f"q must exceed 3, got {q}")
    p = 2.0 if r is None else r
    fnorm = lp_norm(problem.forcing, p)
    if fnorm == 0.0:
        raise DegenerateInputError("forcing vanishes: regularity ratio is 0/0")
    if r is None:
        expo = q / (q - 3.0)
    else:
        expo = q * (5.0 * r - 6.0) / (2.0 * r * (q - 3.0))
    gm = grad_norm_lq(problem.mu.values, problem.grid, q)
    return fnorm * (1.0 + gm**expo)


def regularity_probe(problem: StokesProblem, solution: StokesSolution, q: float, r: float | None = None) -> float:
    """``||u||_{H^2} / (||F||_2 (1 + ||grad mu||_q^{q/(q-3)}))``.

    With ``r`` given, the W^{2,r} variant: L^r norms throughout and the
    exponent ``q(5r-6)/(2r(q-3))``.
    """
    den = _probe_denominator(problem, q, r)
    return sobolev_norm(solution.u, 2, 2.0 if r is None else r) / den


def pressure_probe(
    problem: StokesProblem,
    solution: StokesSolution,
    q: float,
    scale_by_viscosity: bool = True,
    r: float | None = None,
) -> float:
    """Same ratio with ``||P/mu||_{H^1}`` (or ``||P||_{H^1}``) as numerator."""
    den = _probe_denominator(problem, q, r)
    P = solution.P.values
    if scale_by_viscosity:
        P = P / problem.mu.values
    return sobolev_norm(ScalarField(problem.grid, P), 1, 2.0 if r is None else r) / den
