"""
Density transport and viscosity evaluation.

The density is advanced with a flux-form finite-volume update on the MAC
faces. For a discretely divergence-free velocity the flux form is the
transport equation itself, total mass is conserved up to rounding (wall
fluxes vanish), and the first-order upwind flux is a convex combination of
neighbouring values, so no new extrema appear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigurationError, DomainError, PositivityError, StabilityError, ViscosityBoundError
from .grid import ScalarField, VectorField, _slice, _check_same_grid, cell_gradient

BOUND_TOL = 1e-12
POSITIVITY_TOL = 1e-10


@dataclass(frozen=True)
class ViscosityLaw:
    """``rho -> mu(rho)`` on ``[0, rho_max]`` with declared bounds.

    ``kind='affine'``: ``mu = a + b rho``. ``kind='tabulated'``: monotone
    cubic (PCHIP, C^1) through ``table`` sampled at evenly spaced densities
    on ``[0, rho_max]``. Undeclared bounds are taken from the law itself.
    """

    kind: str = "affine"
    a: float = 1.0
    b: float = 0.0
    table: tuple[float, ...] = ()
    rho_max: float = 1.0
    mu_min: float | None = None
    mu_max: float | None = None
    _spline: object = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in ("affine", "tabulated"):
            raise ConfigurationError(f"unknown viscosity law {self.kind!r}", key="mu_law")
        if not self.rho_max > 0:
            raise ConfigurationError("rho_max must be positive", key="rho_bar")
        if self.kind == "tabulated":
            if len(self.table) < 2:
                raise ConfigurationError("tabulated law needs at least two values", key="mu_table")
            nodes = np.linspace(0.0, self.rho_max, len(self.table))
            object.__setattr__(self, "_spline", PchipInterpolator(nodes, np.asarray(self.table, float)))
        samples = self._raw(np.linspace(0.0, self.rho_max, 1025))
        if self.mu_min is None:
            object.__setattr__(self, "mu_min", float(samples.min()))
        if self.mu_max is None:
            object.__setattr__(self, "mu_max", float(samples.max()))
        if not self.mu_min > 0:
            raise ViscosityBoundError(f"mu_min must be positive, got {self.mu_min}")
        if self.mu_max < self.mu_min:
            raise ViscosityBoundError("mu_max below mu_min")
        tol = BOUND_TOL * self.mu_max
        if samples.min() < self.mu_min - tol or samples.max() > self.mu_max + tol:
            raise ViscosityBoundError(
                f"law leaves declared bounds [{self.mu_min}, {self.mu_max}]: "
                f"sampled range [{samples.min()}, {samples.max()}]"
            )

    def _raw(self, rho):
        if self.kind == "affine":
            return self.a + self.b * np.asarray(rho, float)
        return self._spline(np.clip(rho, 0.0, self.rho_max))

    def __call__(self, rho):
        return self._raw(rho)

    def derivative(self, rho):
        if self.kind == "affine":
            return np.full_like(np.asarray(rho, float), self.b)
        return self._spline.derivative()(np.clip(rho, 0.0, self.rho_max))


@dataclass(frozen=True)
class MassMoments:
    m0: float
    lp_norms: dict
    rho_min: float
    rho_max: float


def max_outflow_number(u: VectorField, dt: float) -> float:
    """Largest ``dt * sum(outflow speed / h)`` over cells; upwind is monotone iff <= 1."""
    grid = u.grid
    total = np.zeros(grid.cells)
    for a, c in enumerate(u.components):
        hi = c[_slice(a, 1, None, c.ndim)]
        lo = c[_slice(a, None, -1, c.ndim)]
        total += (np.maximum(hi, 0.0) - np.minimum(lo, 0.0)) / grid.spacing[a]
    return float(total.max()) * dt


def _minmod(a, b):
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def _face_values(rho: np.ndarray, vel: np.ndarray, axis: int, scheme: str) -> np.ndarray:
    """Upwinded density on interior faces along ``axis``."""
    nd = rho.ndim
    left = rho[_slice(axis, None, -1, nd)]
    right = rho[_slice(axis, 1, None, nd)]
    if scheme == "upwind":
        return np.where(vel >= 0, left, right)
    pad = np.concatenate(
        [rho[_slice(axis, 0, 1, nd)], rho, rho[_slice(axis, -1, None, nd)]], axis=axis
    )
    dif = np.diff(pad, axis=axis)
    slope = _minmod(dif[_slice(axis, None, -1, nd)], dif[_slice(axis, 1, None, nd)])
    left_rec = left + 0.5 * slope[_slice(axis, None, -1, nd)]
    right_rec = right - 0.5 * slope[_slice(axis, 1, None, nd)]
    return np.where(vel >= 0, left_rec, right_rec)


def advect_density(rho: ScalarField, u: VectorField, dt: float, scheme: str = "upwind") -> ScalarField:
    """One forward-Euler step of ``rho_t + div(rho u) = 0``.

    ``scheme`` is ``upwind`` (monotone) or ``muscl`` (minmod-limited,
    second order in space). Raises :class:`StabilityError` when ``dt``
    breaks the upwind positivity limit.
    """
    grid = _check_same_grid(rho, u)
    if scheme not in ("upwind", "muscl"):
        raise DomainError(f"unknown transport scheme {scheme!r}")
    courant = max_outflow_number(u, dt)
    if courant > 1.0 + 1e-12:
        raise StabilityError(f"advective Courant number {courant:.4f} exceeds 1")
    r = rho.values
    new = r.copy()
    for a, c in enumerate(u.components):
        vel = c[_slice(a, 1, -1, c.ndim)]
        flux = np.zeros(grid.face_shape(a))
        flux[_slice(a, 1, -1, c.ndim)] = vel * _face_values(r, vel, a, scheme)
        new -= dt * np.diff(flux, axis=a) / grid.spacing[a]
    return rho.with_values(new)


def viscosity_field(rho: ScalarField, law: ViscosityLaw, tol: float = 1e-10) -> ScalarField:
    """Pointwise ``mu(rho)``; raises if any sample leaves ``[mu_min, mu_max]``."""
    if np.any(rho.values < -POSITIVITY_TOL):
        raise PositivityError("negative density passed to the viscosity law")
    mu = law(rho.values)
    if mu.min() < law.mu_min - tol or mu.max() > law.mu_max + tol:
        raise ViscosityBoundError(
            f"viscosity range [{mu.min()}, {mu.max()}] outside [{law.mu_min}, {law.mu_max}]"
        )
    return ScalarField(rho.grid, mu, "none")


def grad_mu_lq(rho: ScalarField, law: ViscosityLaw, q: float) -> float:
    """``||grad mu(rho)||_{L^q}``, defined for q > 3 only."""
    if not q > 3:
        raise DomainError(f"q must exceed 3 (standing hypothesis q > 3), got {q}")
    grid = rho.grid
    g = cell_gradient(law(rho.values), grid)
    mag = np.sqrt(np.sum(g * g, axis=0))
    if math.isinf(q):
        return float(mag.max())
    return float(np.sum(mag**q) * grid.cell_volume) ** (1.0 / q)


def mass_moments(rho: ScalarField, tol: float = POSITIVITY_TOL) -> MassMoments:
    r = rho.values
    if r.min() < -tol:
        raise PositivityError(f"density reaches {r.min():.3e} < -{tol}")
    V = rho.grid.cell_volume
    a = np.abs(r)
    norms = {
        1.0: math.fsum((a * V).ravel()),
        1.5: float(np.sum(a**1.5) * V) ** (2.0 / 3.0),
        3.0: float(np.sum(a**3) * V) ** (1.0 / 3.0),
        math.inf: float(a.max()),
    }
    return MassMoments(m0=norms[1.0], lp_norms=norms, rho_min=float(r.min()), rho_max=float(r.max()))
