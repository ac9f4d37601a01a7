"""Closed-form manufactured Stokes solutions on the unit square.

    u* = (sin^2(pi x) sin(2 pi y), -sin(2 pi x) sin^2(pi y))
    P* = cos(pi x) cos(pi y)

``u*`` is divergence free and vanishes with its tangential part on the
walls of [0,1]^2. The forcing is ``F = -div(mu (grad u* + grad u*^T)) + grad P*``
written out by hand for a constant viscosity and for
``mu = 1 + sin(pi x) sin(pi y) / 2``.
"""
from __future__ import annotations

import numpy as np

from .grid import Grid, ScalarField, VectorField, enforce_no_slip

PI = np.pi


def velocity(x, y):
    u1 = np.sin(PI * x) ** 2 * np.sin(2 * PI * y)
    u2 = -np.sin(2 * PI * x) * np.sin(PI * y) ** 2
    return u1, u2


def pressure(x, y):
    return np.cos(PI * x) * np.cos(PI * y)


def viscosity(x, y, kind: str = "constant"):
    if kind == "constant":
        return np.ones_like(x)
    return 1.0 + 0.5 * np.sin(PI * x) * np.sin(PI * y)


def _viscosity_gradient(x, y, kind):
    if kind == "constant":
        return np.zeros_like(x), np.zeros_like(x)
    return (
        0.5 * PI * np.cos(PI * x) * np.sin(PI * y),
        0.5 * PI * np.sin(PI * x) * np.cos(PI * y),
    )


def forcing(x, y, kind: str = "constant"):
    """Both components of F at the points (x, y)."""
    s2x, s2y = np.sin(2 * PI * x), np.sin(2 * PI * y)
    c2x, c2y = np.cos(2 * PI * x), np.cos(2 * PI * y)
    # strain S = grad u + grad u^T
    u1x = PI * s2x * s2y
    u1y = 2 * PI * np.sin(PI * x) ** 2 * c2y
    u2x = -2 * PI * c2x * np.sin(PI * y) ** 2
    u2y = -PI * s2x * s2y
    s11, s22, s12 = 2 * u1x, 2 * u2y, u1y + u2x
    lap1 = s2y * (4 * PI**2 * c2x - 2 * PI**2)
    lap2 = s2x * (2 * PI**2 - 4 * PI**2 * c2y)
    mu = viscosity(x, y, kind)
    mux, muy = _viscosity_gradient(x, y, kind)
    px = -PI * np.sin(PI * x) * np.cos(PI * y)
    py = -PI * np.cos(PI * x) * np.sin(PI * y)
    f1 = -(mux * s11 + muy * s12) - mu * lap1 + px
    f2 = -(mux * s12 + muy * s22) - mu * lap2 + py
    return f1, f2


def sample_velocity(grid: Grid) -> VectorField:
    comps = []
    for a in range(2):
        x, y = grid.face_centers(a)
        comps.append(velocity(x, y)[a])
    return enforce_no_slip(VectorField(grid, tuple(comps)))


def sample_forcing(grid: Grid, kind: str = "constant") -> VectorField:
    comps = []
    for a in range(2):
        x, y = grid.face_centers(a)
        comps.append(forcing(x, y, kind)[a])
    return VectorField(grid, tuple(comps), boundary="none")


def sample_pressure(grid: Grid) -> ScalarField:
    x, y = grid.cell_centers()
    return ScalarField(grid, pressure(x, y))


def sample_viscosity(grid: Grid, kind: str = "constant") -> ScalarField:
    x, y = grid.cell_centers()
    return ScalarField(grid, viscosity(x, y, kind))
