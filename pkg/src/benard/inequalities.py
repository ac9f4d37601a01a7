"""Empirical probes of the Poincaré and Gagliardo-Nirenberg inequalities.

Both ratios are homogeneous of degree zero in the field, so they measure
shape only. The probes report ratios; they never claim a value for the
(non-constructive) Gagliardo-Nirenberg constant.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError, DomainError
from .grid import Grid, ScalarField, gradient_norm, lp_norm


@dataclass(frozen=True)
class InequalityProbeResult:
    ratio: float
    bound: float | None
    satisfied: bool
    descriptor: str = ""


def poincare_ratio(f: ScalarField, descriptor: str = "") -> InequalityProbeResult:
    """``||f||_2 / ||grad f||_2`` against the box diameter."""
    if f.boundary != "dirichlet_zero":
        raise DomainError("Poincaré probe needs a Dirichlet-zero field")
    g = gradient_norm(f, 2.0)
    if g == 0.0:
        raise DegenerateInputError("field vanishes: Poincaré ratio is 0/0")
    ratio = lp_norm(f, 2.0) / g
    d = f.grid.diameter
    return InequalityProbeResult(ratio, d, ratio <= d, descriptor or "poincare")


def gn_exponents(p: float) -> tuple[float, float]:
    """Powers of ``||f||_2`` and ``||grad f||_2`` for the 3D interpolation at ``p``."""
    return (6.0 - p) / (2.0 * p), (3.0 * p - 6.0) / (2.0 * p)


def gn_ratio(f: ScalarField, p: float, descriptor: str = "") -> InequalityProbeResult:
    """``||f||_p / (||f||_2^a ||grad f||_2^b)`` with ``a, b`` from :func:`gn_exponents`."""
    if not 2.0 <= p <= 6.0:
        raise DomainError(f"p must lie in [2, 6], got {p}")
    l2 = lp_norm(f, 2.0)
    if l2 == 0.0:
        raise DegenerateInputError("field vanishes: interpolation ratio is 0/0")
    a, b = gn_exponents(p)
    den = l2**a
    if b != 0.0:
        den *= gradient_norm(f, 2.0) ** b
    return InequalityProbeResult(lp_norm(f, p) / den, None, True, descriptor or f"gn_p{p:g}")


def random_sine_field(grid: Grid, rng: np.random.Generator, max_mode: int = 4) -> ScalarField:
    """Random combination of Dirichlet sine products with coefficients decaying like 1/|k|^2."""
    ks = np.arange(1, max_mode + 1)
    shape = (max_mode,) * grid.dim
    coef = rng.standard_normal(shape)
    ksq = sum(np.meshgrid(*([ks**2] * grid.dim), indexing="ij"))
    coef = coef / ksq
    bases = [
        np.sin(np.pi * np.multiply.outer(ks, x) / L)
        for x, L in zip(
            (grid._axis_coords(a, False) for a in range(grid.dim)), grid.lengths
        )
    ]
    vals = coef
    for b in bases:
        # contract the leading mode index with the basis along this axis
        vals = np.tensordot(vals, b, axes=([0], [0]))
    return ScalarField(grid, vals, "dirichlet_zero")


def random_probe_suite(grid: Grid, count: int = 100, seed: int = 0, p_values=(2.0, 4.0, 6.0)) -> dict:
    """Poincaré and GN ratios for ``count`` seeded random fields.

    Returns ``{"poincare": array, p: array, ...}``.
    """
    rng = np.random.default_rng(seed)
    out: dict = {"poincare": np.empty(count)}
    for p in p_values:
        out[p] = np.empty(count)
    for i in range(count):
        f = random_sine_field(grid, rng)
        out["poincare"][i] = poincare_ratio(f).ratio
        for p in p_values:
            out[p][i] = gn_ratio(f, p).ratio
    return out


def refinement_spread(coarse: np.ndarray, fine: np.ndarray) -> float:
    """Largest relative change between matching probe ratios on two grids."""
    return float(np.max(np.abs(fine - coarse) / np.abs(fine)))


def first_eigen_ratio() -> float:
    """``1 / (pi sqrt 2)``, the exact Poincaré ratio of ``sin(pi x) sin(pi y)`` on the unit square."""
    return 1.0 / (math.pi * math.sqrt(2.0))
