"""
Staggered (MAC) grids on a rectangular box, field containers and the
discrete operators every other module is built on.

Layout
------
Scalars (density, temperature, pressure, viscosity samples) live at cell
centres, array shape ``grid.cells``. Velocity component ``i`` lives on the
faces normal to axis ``i``: its array has one extra sample along axis ``i``.
Off-diagonal velocity-gradient samples ``d_j u_i`` live on the edges of the
(i, j) plane (cell corners in 2D), with shape ``cells + e_i + e_j``.

Walls carry homogeneous Dirichlet data. Tangential velocity and Dirichlet
scalars are extended by odd reflection (ghost = -interior), so the wall sits
half a cell from the first unknown. With that convention every quadratic
form used by the solvers is reproduced exactly by the quadratures below,
where samples on a wall carry half weight per wall direction.

Arrays use ``indexing='ij'``: axis 0 is x, the last axis is vertical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import (
    ConfigurationError,
    DomainError,
    StructuralError,
    ViscosityBoundError,
)

SCALAR_BOUNDARIES = ("dirichlet_zero", "dirichlet_value", "none")
_AXIS_KEYS = ("x", "y", "z")


@dataclass(frozen=True)
class Grid:
    """Uniform box grid. ``spacing`` and ``diameter`` are derived."""

    cells: tuple[int, ...]
    lengths: tuple[float, ...]
    spacing: tuple[float, ...] = field(init=False)
    diameter: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "cells", tuple(int(n) for n in self.cells))
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        object.__setattr__(
            self, "spacing", tuple(L / n for L, n in zip(self.lengths, self.cells))
        )
        object.__setattr__(
            self, "diameter", math.sqrt(math.fsum(L * L for L in self.lengths))
        )

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def vertical(self) -> int:
        """Axis playing the role of the unit vector e_3."""
        return self.dim - 1

    @property
    def cell_volume(self) -> float:
        return math.prod(self.spacing)

    @property
    def min_spacing(self) -> float:
        return min(self.spacing)

    def face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.cells)
        shape[axis] += 1
        return tuple(shape)

    def interior_face_shape(self, axis: int) -> tuple[int, ...]:
        shape = list(self.cells)
        shape[axis] -= 1
        return tuple(shape)

    def edge_shape(self, i: int, j: int) -> tuple[int, ...]:
        shape = list(self.cells)
        shape[i] += 1
        shape[j] += 1
        return tuple(shape)

    def _axis_coords(self, axis: int, staggered: bool) -> np.ndarray:
        n, h = self.cells[axis], self.spacing[axis]
        if staggered:
            return np.arange(n + 1) * h
        return (np.arange(n) + 0.5) * h

    def coords(self, staggered_axes: Sequence[int] = ()) -> list[np.ndarray]:
        """Meshgrid of sample coordinates, staggered along ``staggered_axes``."""
        axes = [
            self._axis_coords(a, a in staggered_axes) for a in range(self.dim)
        ]
        return np.meshgrid(*axes, indexing="ij")

    def cell_centers(self) -> list[np.ndarray]:
        return self.coords()

    def face_centers(self, axis: int) -> list[np.ndarray]:
        return self.coords((axis,))

    def nodes(self) -> list[np.ndarray]:
        return self.coords(tuple(range(self.dim)))


def build_grid(cells: Sequence[int], lengths: Sequence[float] | None = None) -> Grid:
    """Validate grid settings and build a :class:`Grid`.

    Raises :class:`ConfigurationError` naming the offending key
    (``nx``/``ny``/``nz`` or ``lx``/``ly``/``lz``).
    """
    cells = tuple(cells)
    if len(cells) not in (2, 3):
        raise ConfigurationError(f"dim must be 2 or 3, got {len(cells)}", key="dim")
    if lengths is None:
        lengths = (1.0,) * len(cells)
    lengths = tuple(lengths)
    if len(lengths) != len(cells):
        raise ConfigurationError("lengths and cells differ in dimension", key="dim")
    for axis, n in enumerate(cells):
        key = "n" + _AXIS_KEYS[axis]
        if int(n) != n or n <= 0:
            raise ConfigurationError(f"{key} must be a positive integer, got {n}", key=key)
        if n < 4:
            raise ConfigurationError(f"{key} must be at least 4, got {n}", key=key)
    for axis, L in enumerate(lengths):
        key = "l" + _AXIS_KEYS[axis]
        if not (float(L) > 0.0 and math.isfinite(float(L))):
            raise ConfigurationError(f"{key} must be positive, got {L}", key=key)
    return Grid(cells, lengths)


def grid_from_settings(settings: Mapping) -> Grid:
    dim = int(settings.get("dim", 2))
    cells = [settings.get("n" + k) for k in _AXIS_KEYS[:dim]]
    for k, n in zip(_AXIS_KEYS, cells):
        if n is None:
            raise ConfigurationError(f"missing key: n{k}", key="n" + k)
    lengths = [settings.get("l" + k, 1.0) for k in _AXIS_KEYS[:dim]]
    return build_grid([int(n) for n in cells], [float(L) for L in lengths])


# ---------------------------------------------------------------------------
# Fields
# ---------------------------------------------------------------------------


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class ScalarField:
    """Cell-centred scalar with its boundary kind.

    ``boundary`` is one of ``dirichlet_zero``, ``dirichlet_value`` (wall value
    ``boundary_value``) or ``none`` (density and viscosity carry no wall data).
    """

    grid: Grid
    values: np.ndarray
    boundary: str = "none"
    boundary_value: float = 0.0

    def __post_init__(self):
        values = _frozen(self.values)
        if values.shape != self.grid.cells:
            raise StructuralError(
                f"scalar shape {values.shape} does not match grid {self.grid.cells}"
            )
        if self.boundary not in SCALAR_BOUNDARIES:
            raise StructuralError(f"unknown boundary kind {self.boundary!r}")
        object.__setattr__(self, "values", values)

    def with_values(self, values) -> "ScalarField":
        return ScalarField(self.grid, values, self.boundary, self.boundary_value)

    def __mul__(self, c: float) -> "ScalarField":
        return self.with_values(self.values * c)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class VectorField:
    """Face-centred vector field; component ``i`` has one extra sample along ``i``."""

    grid: Grid
    components: tuple[np.ndarray, ...]
    boundary: str = "no_slip"

    def __post_init__(self):
        comps = tuple(_frozen(c) for c in self.components)
        if len(comps) != self.grid.dim:
            raise StructuralError(
                f"expected {self.grid.dim} components, got {len(comps)}"
            )
        for axis, c in enumerate(comps):
            if c.shape != self.grid.face_shape(axis):
                raise StructuralError(
                    f"component {axis} has shape {c.shape}, "
                    f"expected {self.grid.face_shape(axis)}"
                )
        object.__setattr__(self, "components", comps)

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, tuple(np.zeros(grid.face_shape(a)) for a in range(grid.dim)))

    def __mul__(self, c: float) -> "VectorField":
        return VectorField(self.grid, tuple(u * c for u in self.components), self.boundary)

    __rmul__ = __mul__

    def dofs(self) -> np.ndarray:
        """Interior-face values of all components, concatenated."""
        return np.concatenate(
            [
                c[_slice(a, 1, -1, self.grid.dim)].ravel()
                for a, c in enumerate(self.components)
            ]
        )

    @classmethod
    def from_dofs(cls, grid: Grid, x: np.ndarray) -> "VectorField":
        comps, start = [], 0
        for a in range(grid.dim):
            shape = grid.interior_face_shape(a)
            size = math.prod(shape)
            c = np.zeros(grid.face_shape(a))
            c[_slice(a, 1, -1, grid.dim)] = x[start : start + size].reshape(shape)
            comps.append(c)
            start += size
        return cls(grid, tuple(comps))


def enforce_no_slip(u: VectorField) -> VectorField:
    """Zero every wall-normal boundary sample."""
    comps = []
    for a, c in enumerate(u.components):
        c = np.array(c)
        c[_slice(a, 0, 1, c.ndim)] = 0.0
        c[_slice(a, -1, None, c.ndim)] = 0.0
        comps.append(c)
    return VectorField(u.grid, tuple(comps), "no_slip")


def _slice(axis: int, start, stop, ndim: int) -> tuple:
    s = [slice(None)] * ndim
    s[axis] = slice(start, stop)
    return tuple(s)


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise StructuralError("fields live on different grids")
    return g


# ---------------------------------------------------------------------------
# Quadrature weights and norms
# ---------------------------------------------------------------------------


def _trapezoid_axis(n_samples: int) -> np.ndarray:
    w = np.ones(n_samples)
    w[0] = w[-1] = 0.5
    return w


def staggered_weights(grid: Grid, axes: Sequence[int]) -> np.ndarray:
    """Quadrature weights for samples staggered along ``axes``.

    Cell volume everywhere, halved once per wall the sample sits on.
    """
    w = np.full(grid.coords(tuple(axes))[0].shape, grid.cell_volume)
    for a in axes:
        shape = [1] * grid.dim
        shape[a] = grid.cells[a] + 1
        w = w * _trapezoid_axis(grid.cells[a] + 1).reshape(shape)
    return w


def cell_average(u: VectorField) -> np.ndarray:
    """Face samples averaged to cell centres, shape ``(dim, *cells)``."""
    out = []
    for a, c in enumerate(u.components):
        out.append(
            0.5 * (c[_slice(a, 1, None, c.ndim)] + c[_slice(a, None, -1, c.ndim)])
        )
    return np.stack(out)


def lp_norm(f, p: float) -> float:
    """Midpoint-rule L^p norm of a scalar or vector field.

    Vector fields are averaged to cell centres first and the pointwise
    Euclidean magnitude is integrated.
    """
    if not p >= 1:
        raise DomainError(f"p must be >= 1 or inf, got {p}")
    if isinstance(f, VectorField):
        vals = np.sqrt(np.sum(cell_average(f) ** 2, axis=0))
        grid = f.grid
    else:
        vals = np.abs(f.values)
        grid = f.grid
    return _lp(vals, p, grid.cell_volume)


def _lp(vals: np.ndarray, p: float, weight) -> float:
    vals = np.abs(vals)
    if math.isinf(p):
        return float(vals.max()) if vals.size else 0.0
    if p == 1:
        return float(np.sum(vals * weight))
    if p == 2:
        return math.sqrt(float(np.sum(vals * vals * weight)))
    return float(np.sum(vals**p * weight)) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Differential operators on fields
# ---------------------------------------------------------------------------


def _pad_dirichlet(values: np.ndarray, axis: int, wall_value: float = 0.0) -> np.ndarray:
    lo = 2.0 * wall_value - values[_slice(axis, 0, 1, values.ndim)]
    hi = 2.0 * wall_value - values[_slice(axis, -1, None, values.ndim)]
    return np.concatenate([lo, values, hi], axis=axis)


def gradient(f: ScalarField) -> VectorField:
    """Face-centred gradient of a cell-centred scalar.

    Dirichlet scalars use the reflected ghost value at walls; scalars without
    boundary data get a zero normal derivative on wall faces.
    """
    grid = f.grid
    comps = []
    for a in range(grid.dim):
        h = grid.spacing[a]
        if f.boundary == "none":
            g = np.zeros(grid.face_shape(a))
            g[_slice(a, 1, -1, grid.dim)] = np.diff(f.values, axis=a) / h
        else:
            wall = f.boundary_value if f.boundary == "dirichlet_value" else 0.0
            g = np.diff(_pad_dirichlet(f.values, a, wall), axis=a) / h
        comps.append(g)
    return VectorField(grid, tuple(comps), boundary="none")


def divergence(u: VectorField) -> ScalarField:
    grid = u.grid
    out = np.zeros(grid.cells)
    for a, c in enumerate(u.components):
        out += np.diff(c, axis=a) / grid.spacing[a]
    return ScalarField(grid, out, "none")


def laplacian(f: ScalarField) -> ScalarField:
    """Five-point (seven-point in 3D) Laplacian, ``divergence(gradient(f))``."""
    return divergence(gradient(f))


def cell_gradient(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Collocated gradient at cell centres, shape ``(dim, *cells)``.

    Central differences inside, second-order one-sided at walls.
    """
    g = np.gradient(values, *grid.spacing, edge_order=2)
    if grid.dim == 1:
        g = [g]
    return np.stack(g)


def velocity_gradient(u: VectorField) -> dict[tuple[int, int], np.ndarray]:
    """All samples of ``d_j u_i`` keyed by ``(i, j)``.

    Diagonal entries live at cell centres, off-diagonal ones on edges.
    """
    grid = u.grid
    out = {}
    for i, c in enumerate(u.components):
        for j in range(grid.dim):
            if i == j:
                out[(i, j)] = np.diff(c, axis=i) / grid.spacing[i]
            else:
                out[(i, j)] = np.diff(_pad_dirichlet(c, j), axis=j) / grid.spacing[j]
    return out


def _gradient_weights(grid: Grid, i: int, j: int) -> np.ndarray:
    if i == j:
        return np.full(grid.cells, grid.cell_volume)
    return staggered_weights(grid, (i, j))


def gradient_norm(f, p: float = 2.0) -> float:
    """``||grad f||_{L^p}`` with the staggered quadrature.

    For ``p = 2`` this is exactly the square root of the energy of the
    discrete Laplacian / vector Laplacian. For other ``p`` the component
    integrals ``sum_ij int |d_j f_i|^p`` are combined, which is the entrywise
    ``L^p`` norm of the gradient matrix.
    """
    if not p >= 1:
        raise DomainError(f"p must be >= 1 or inf, got {p}")
    grid = f.grid
    if isinstance(f, VectorField):
        pieces = [
            (g, _gradient_weights(grid, i, j))
            for (i, j), g in velocity_gradient(f).items()
        ]
    else:
        gf = gradient(f)
        pieces = [
            (g, staggered_weights(grid, (a,))) for a, g in enumerate(gf.components)
        ]
    if math.isinf(p):
        return max(float(np.abs(g).max()) for g, _ in pieces)
    total = math.fsum(float(np.sum(np.abs(g) ** p * w)) for g, w in pieces)
    return total ** (1.0 / p)


def edge_viscosity(mu: np.ndarray, grid: Grid, i: int, j: int, average: str = "arithmetic"):
    """Cell viscosity averaged onto (i, j) edges (4 cells inside, 2 on walls, 1 in corners)."""
    if average == "harmonic":
        return 1.0 / _average_to_nodes(1.0 / mu, (i, j))
    if average != "arithmetic":
        raise DomainError(f"unknown viscosity average {average!r}")
    return _average_to_nodes(mu, (i, j))


def _average_to_nodes(values: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    out = values
    for a in axes:
        lo = out[_slice(a, 0, 1, out.ndim)]
        hi = out[_slice(a, -1, None, out.ndim)]
        mid = 0.5 * (out[_slice(a, 1, None, out.ndim)] + out[_slice(a, None, -1, out.ndim)])
        out = np.concatenate([lo, mid, hi], axis=a)
    return out


def deformation_dissipation(
    u: VectorField, mu: ScalarField, average: str = "arithmetic"
) -> float:
    """``int 2 mu |D(u)|^2 dx`` with ``D(u)`` the symmetric velocity gradient.

    Diagonal strain is integrated at cell centres, shear strain on edges with
    the viscosity averaged there. Equal to the energy of the discrete viscous
    operator used by the Stokes solver.
    """
    grid = _check_same_grid(u, mu)
    m = mu.values
    if np.any(m <= 0):
        raise ViscosityBoundError("viscosity must be positive everywhere")
    grads = velocity_gradient(u)
    V = grid.cell_volume
    total = []
    for i in range(grid.dim):
        total.append(float(np.sum(2.0 * m * grads[(i, i)] ** 2)) * V)
    for i in range(grid.dim):
        for j in range(i + 1, grid.dim):
            shear = grads[(i, j)] + grads[(j, i)]
            w = staggered_weights(grid, (i, j))
            total.append(float(np.sum(edge_viscosity(m, grid, i, j, average) * shear**2 * w)))
    return math.fsum(total)


# ---------------------------------------------------------------------------
# Sparse operators (solver side)
# ---------------------------------------------------------------------------


def _along(op: sp.spmatrix, shape: Sequence[int], axis: int):
    """Kronecker-lift a 1D operator to act along ``axis`` of a C-ordered array."""
    before = math.prod(shape[:axis])
    after = math.prod(shape[axis + 1 :])
    M = sp.kron(sp.kron(sp.identity(before, format="csr"), op), sp.identity(after, format="csr"))
    new_shape = list(shape)
    new_shape[axis] = op.shape[0]
    return M.tocsr(), tuple(new_shape)


def _diff_faces_to_cells(n: int, h: float) -> sp.csr_matrix:
    """(n x n+1): cell value = (face[k+1] - face[k]) / h."""
    return sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, n + 1), format="csr") / h


def _embed_interior(n: int) -> sp.csr_matrix:
    """(n+1 x n-1): place interior face values into the full face array."""
    return sp.eye(n + 1, n - 1, k=-1, format="csr")


def _grad_dirichlet(n: int, h: float) -> sp.csr_matrix:
    """(n+1 x n): face gradient of cell data with odd reflection at both walls."""
    G = sp.lil_matrix((n + 1, n))
    G[0, 0] = 2.0
    for k in range(1, n):
        G[k, k - 1] = -1.0
        G[k, k] = 1.0
    G[n, n - 1] = -2.0
    return (G.tocsr() / h)


def _avg_cells_to_nodes(n: int) -> sp.csr_matrix:
    A = sp.lil_matrix((n + 1, n))
    A[0, 0] = 1.0
    for k in range(1, n):
        A[k, k - 1] = 0.5
        A[k, k] = 0.5
    A[n, n - 1] = 1.0
    return A.tocsr()


def _avg_cells_to_interior_faces(n: int) -> sp.csr_matrix:
    return sp.diags([0.5 * np.ones(n - 1), 0.5 * np.ones(n - 1)], [0, 1], shape=(n - 1, n), format="csr")


class MacOperators:
    """Sparse matrices of one grid, acting on flattened arrays.

    Velocity vectors are in the interior-face ordering of
    :meth:`VectorField.dofs`. Built lazily and cached per grid.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        d = grid.dim
        self.dof_shapes = [grid.interior_face_shape(a) for a in range(d)]
        sizes = [math.prod(s) for s in self.dof_shapes]
        self.dof_offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
        self.n_dofs = int(self.dof_offsets[-1])
        self.n_cells = math.prod(grid.cells)

    def _component_block(self, comp: int, M: sp.spmatrix) -> sp.csr_matrix:
        """Place a matrix acting on component ``comp`` into full dof columns."""
        blocks = []
        for a in range(self.grid.dim):
            if a == comp:
                blocks.append(M)
            else:
                blocks.append(sp.csr_matrix((M.shape[0], len(self._dof_range(a)))))
        return sp.hstack(blocks, format="csr")

    def _dof_range(self, a: int) -> range:
        return range(self.dof_offsets[a], self.dof_offsets[a + 1])

    @cached_property
    def divergence(self) -> sp.csr_matrix:
        """(cells x dofs) discrete divergence; minus its transpose is the gradient."""
        g = self.grid
        blocks = []
        for a in range(g.dim):
            M, _ = _along(
                _diff_faces_to_cells(g.cells[a], g.spacing[a])[:, 1:-1],
                self.dof_shapes[a],
                a,
            )
            blocks.append(M)
        return sp.hstack(blocks, format="csr")

    @cached_property
    def strain_diagonal(self) -> list[sp.csr_matrix]:
        """``d_i u_i`` at cell centres, one (cells x dofs) matrix per axis."""
        g = self.grid
        out = []
        for a in range(g.dim):
            M, _ = _along(
                _diff_faces_to_cells(g.cells[a], g.spacing[a])[:, 1:-1],
                self.dof_shapes[a],
                a,
            )
            out.append(self._component_block(a, M))
        return out

    def _partial(self, i: int, j: int) -> sp.csr_matrix:
        """``d_j u_i`` on (i, j) edges, i != j, as a (edges x dofs) matrix."""
        g = self.grid
        M, shape = _along(_embed_interior(g.cells[i]), self.dof_shapes[i], i)
        D, _ = _along(_grad_dirichlet(g.cells[j], g.spacing[j]), shape, j)
        return self._component_block(i, D @ M)

    @cached_property
    def strain_shear(self) -> dict[tuple[int, int], sp.csr_matrix]:
        """``d_j u_i + d_i u_j`` on (i, j) edges for i < j."""
        g = self.grid
        return {
            (i, j): (self._partial(i, j) + self._partial(j, i)).tocsr()
            for i in range(g.dim)
            for j in range(i + 1, g.dim)
        }

    def viscous(self, mu: np.ndarray, average: str = "arithmetic") -> sp.csr_matrix:
        """Pointwise matrix of ``-div(2 mu D(u))`` on interior faces.

        ``u @ viscous(mu) @ u * cell_volume`` equals
        :func:`deformation_dissipation`.
        """
        g = self.grid
        V = g.cell_volume
        K = sp.csr_matrix((self.n_dofs, self.n_dofs))
        mu_c = 2.0 * mu.ravel()
        for S in self.strain_diagonal:
            K = K + S.T @ sp.diags(mu_c) @ S
        for (i, j), S in self.strain_shear.items():
            w = (edge_viscosity(mu, g, i, j, average) * staggered_weights(g, (i, j))).ravel() / V
            K = K + S.T @ sp.diags(w) @ S
        return K.tocsr()

    @cached_property
    def dirichlet_laplacian(self) -> sp.csr_matrix:
        """(cells x cells) Laplacian of a Dirichlet-zero scalar."""
        g = self.grid
        L = sp.csr_matrix((self.n_cells, self.n_cells))
        for a in range(g.dim):
            G, shape = _along(_grad_dirichlet(g.cells[a], g.spacing[a]), g.cells, a)
            D, _ = _along(_diff_faces_to_cells(g.cells[a], g.spacing[a]), shape, a)
            L = L + D @ G
        return L.tocsr()

    @cached_property
    def cells_to_faces(self) -> sp.csr_matrix:
        """(dofs x cells) two-point average of cell data onto interior faces."""
        g = self.grid
        blocks = []
        for a in range(g.dim):
            M, _ = _along(_avg_cells_to_interior_faces(g.cells[a]), g.cells, a)
            blocks.append(M)
        return sp.vstack(blocks, format="csr")

    def face_density(self, rho: np.ndarray) -> np.ndarray:
        return self.cells_to_faces @ rho.ravel()


@lru_cache(maxsize=16)
def mac_operators(grid: Grid) -> MacOperators:
    return MacOperators(grid)


# ---------------------------------------------------------------------------
# Higher-order norms (probe level)
# ---------------------------------------------------------------------------


def _as_cell_components(f) -> np.ndarray:
    if isinstance(f, VectorField):
        return cell_average(f)
    return f.values[None]


def sobolev_norm(f, order: int, p: float = 2.0) -> float:
    """``||f||_{W^{order,p}}`` as the sum of the L^p norms of the derivatives.

    Computed on cell-centred samples (vector fields averaged from faces) with
    central differences inside and one-sided second-order differences at the
    walls. ``order`` is 1 or 2; ``order=2, p=2`` is the H^2 probe norm.
    """
    if order not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {order}")
    grid = f.grid
    comps = _as_cell_components(f)
    V = grid.cell_volume
    total = _lp(np.sqrt(np.sum(comps**2, axis=0)), p, V)
    first = np.concatenate([cell_gradient(c, grid) for c in comps])
    total += _lp(np.sqrt(np.sum(first**2, axis=0)), p, V)
    if order == 2:
        second = np.concatenate([cell_gradient(g, grid) for g in first])
        total += _lp(np.sqrt(np.sum(second**2, axis=0)), p, V)
    return total
