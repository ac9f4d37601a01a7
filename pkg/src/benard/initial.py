"""Named, parameterised initial-data generators.

Velocities are built as discrete curls of potentials sampled at grid nodes
(2D) or edges (3D), so they are divergence free to rounding and satisfy the
no-slip condition whenever the potential vanishes on the walls.
"""
from __future__ import annotations

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .grid import Grid, ScalarField, VectorField, enforce_no_slip


def curl_2d(grid: Grid, psi: np.ndarray) -> VectorField:
    """``(d_y psi, -d_x psi)`` from nodal stream-function values."""
    hx, hy = grid.spacing
    ux = np.diff(psi, axis=1) / hy
    uy = -np.diff(psi, axis=0) / hx
    return VectorField(grid, (ux, uy))


def curl_3d(grid: Grid, potential: tuple[np.ndarray, np.ndarray, np.ndarray]) -> VectorField:
    """Curl of an edge-sampled vector potential ``(A_x, A_y, A_z)``.

    ``A_k`` sits on nodes along the two axes other than ``k`` and at cell
    centres along ``k``.
    """
    h = grid.spacing
    ax, ay, az = potential
    ux = np.diff(az, axis=1) / h[1] - np.diff(ay, axis=2) / h[2]
    uy = np.diff(ax, axis=2) / h[2] - np.diff(az, axis=0) / h[0]
    uz = np.diff(ay, axis=0) / h[0] - np.diff(ax, axis=1) / h[1]
    return VectorField(grid, (ux, uy, uz))


def _bump(coords, lengths, modes):
    out = np.ones_like(coords[0])
    for x, L, k in zip(coords, lengths, modes):
        out = out * np.sin(k * np.pi * x / L) ** 2
    return out


def velocity_modes(grid: Grid, amplitude: float, modes) -> VectorField:
    """Cellular flow from the potential ``(amplitude/pi) prod sin^2(k pi x / L)``.

    In 3D the potential is put on the x and z edge families, giving a flow
    with a vertical component.
    """
    modes = _expand(modes, grid.dim)
    scale = amplitude / np.pi
    if grid.dim == 2:
        psi = scale * _bump(grid.nodes(), grid.lengths, modes)
        return enforce_no_slip(curl_2d(grid, psi))
    pots = []
    for k in range(3):
        stagger = tuple(a for a in range(3) if a != k)
        if k == 1:
            pots.append(np.zeros(grid.coords(stagger)[0].shape))
        else:
            pots.append(scale * _bump(grid.coords(stagger), grid.lengths, modes))
    return enforce_no_slip(curl_3d(grid, tuple(pots)))


def temperature_modes(grid: Grid, amplitude: float, modes) -> ScalarField:
    """``amplitude * prod sin(k pi x / L)`` at cell centres, Dirichlet-zero."""
    modes = _expand(modes, grid.dim)
    vals = np.full(grid.cells, float(amplitude))
    for x, L, k in zip(grid.cell_centers(), grid.lengths, modes):
        vals = vals * np.sin(k * np.pi * x / L)
    return ScalarField(grid, vals, "dirichlet_zero")


def density_blob(
    grid: Grid,
    center,
    radius: float,
    height: float,
    background: float = 0.0,
    width: float | None = None,
) -> ScalarField:
    """Mollified indicator: ``background`` plus a tanh-edged ball of ``height``.

    ``width`` defaults to ``radius / 4`` so the profile is self-similar when
    the radius changes at fixed height.
    """
    if width is None:
        width = 0.25 * radius
    r = np.sqrt(sum((x - c) ** 2 for x, c in zip(grid.cell_centers(), center)))
    prof = 0.5 * (1.0 - np.tanh((r - radius) / width))
    return ScalarField(grid, background + (height - background) * prof, "none")


def gaussian_blob(grid: Grid, center, sigma: float, height: float = 1.0) -> ScalarField:
    r2 = sum((x - c) ** 2 for x, c in zip(grid.cell_centers(), center))
    return ScalarField(grid, height * np.exp(-0.5 * r2 / sigma**2), "none")


def rotation_2d(grid: Grid, omega: float, r_rigid: float = 0.35, r_still: float = 0.45) -> VectorField:
    """Counter-clockwise solid-body rotation about the box centre.

    Rigid for ``r < r_rigid``, smoothly brought to rest by ``r_still`` so the
    walls see no flow.
    """
    xc, yc = (0.5 * L for L in grid.lengths)
    rr = np.linspace(0.0, max(grid.lengths), 20001)
    t = np.clip((rr - r_rigid) / (r_still - r_rigid), 0.0, 1.0)
    taper = 1.0 - t * t * (3.0 - 2.0 * t)
    phi = cumulative_trapezoid(rr * taper, rr, initial=0.0)
    x, y = grid.nodes()
    r = np.sqrt((x - xc) ** 2 + (y - yc) ** 2)
    inner = 0.5 * r * r
    psi = -omega * np.where(r <= r_rigid, inner, np.interp(r, rr, phi))
    return enforce_no_slip(curl_2d(grid, psi))


def _compact_bump(coords, center, radius):
    r2 = sum((x - c) ** 2 for x, c in zip(coords, center)) / radius**2
    return np.where(r2 < 1.0, (1.0 - np.minimum(r2, 1.0)) ** 3, 0.0)


def localized_velocity(grid: Grid, center, radius: float, amplitude: float) -> VectorField:
    """Vortex confined to a ball: curl of ``amplitude * radius * (1 - r^2/radius^2)_+^3``.

    The potential scales with ``radius`` so that velocities stay O(amplitude)
    whatever the size of the ball.
    """
    scale = amplitude * radius
    if grid.dim == 2:
        psi = scale * _compact_bump(grid.nodes(), center, radius)
        return enforce_no_slip(curl_2d(grid, psi))
    pots = []
    for k in range(3):
        stagger = tuple(a for a in range(3) if a != k)
        if k == 1:
            pots.append(np.zeros(grid.coords(stagger)[0].shape))
        else:
            pots.append(scale * _compact_bump(grid.coords(stagger), center, radius))
    return enforce_no_slip(curl_3d(grid, tuple(pots)))


def temperature_from_vertical(u: VectorField, amplitude: float = 1.0) -> ScalarField:
    """Temperature equal to the cell-averaged vertical velocity times ``amplitude``.

    Makes the buoyancy work ``int rho u_3 theta`` as large as the fields allow.
    """
    grid = u.grid
    v = u.components[grid.vertical]
    w = 0.5 * (np.take(v, range(1, v.shape[-1]), axis=-1) + np.take(v, range(v.shape[-1] - 1), axis=-1))
    return ScalarField(grid, amplitude * w, "dirichlet_zero")


def _expand(modes, dim):
    if np.isscalar(modes):
        return (int(modes),) * dim
    modes = tuple(int(m) for m in modes)
    if len(modes) == 1:
        return modes * dim
    if len(modes) != dim:
        raise ValueError(f"expected {dim} mode numbers, got {len(modes)}")
    return modes
