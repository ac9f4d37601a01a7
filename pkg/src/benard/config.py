"""Flat ``key = value`` configuration files.

Lines are ``key = value``; ``#`` starts a comment. Lists are comma
separated. Every key has a default except ``scenario``, ``t_end``, ``nx``
and ``ny``. Giving ``nz`` switches to three dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace

from .errors import ConfigurationError, HypothesisViolation
from .grid import Grid, build_grid
from .stepper import StepConfig
from .transport import ViscosityLaw

SCENARIOS = ("decay", "threshold-sweep", "stokes-probe", "oracles", "vacuum-smoke")
REQUIRED = ("scenario", "t_end", "nx", "ny")


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text: str):
    return None if text.strip().lower() in ("", "none", "auto") else float(text)


@dataclass(frozen=True)
class SimConfig:
    scenario: str
    t_end: float
    nx: int
    ny: int
    nz: int = 0
    lx: float = 1.0
    ly: float = 1.0
    lz: float = 1.0
    # viscosity law and diffusivity
    mu_law: str = "affine"
    mu_a: float = 1.0
    mu_b: float = 1.0
    mu_table: tuple[float, ...] = ()
    mu_min: float | None = None
    mu_max: float | None = None
    kappa: float = 1.0
    q: float = 4.0
    r: float = 3.5
    # initial data
    rho_bar: float = 1.0
    rho_background: float = 0.05
    blob_center: tuple[float, ...] = ()
    m0_radius: float = 0.15
    blob_width: float | None = None
    u_init: str = "modes"
    u_amplitude: float = 0.4
    u_modes: tuple[int, ...] = (1,)
    theta_init: str = "modes"
    theta_amplitude: float = 1.0
    theta_modes: tuple[int, ...] = (1,)
    localize_factor: float = 1.5
    # time stepping
    cfl: float = 0.5
    dt_max: float = 0.01
    output_interval: float = 0.05
    checkpoint_interval: float = 0.0
    proj_tol: float = 1e-9
    eps_rho: float = 1e-6
    transport: str = "upwind"
    mu_average: str = "arithmetic"
    solver: str = "auto"
    buoyancy: bool = True
    frozen_velocity: bool = False
    step_doubling: bool = False
    dt_tol: float = 1e-3
    # ledger
    C1: float | None = None
    abs_slack: float = 1e-8
    rel_slack: float = 1e-10
    decay_factor: float = 0.9
    # scenario extras
    sweep_radii: tuple[float, ...] = (0.1, 0.126, 0.159, 0.2, 0.252)
    stokes_grids: tuple[int, ...] = (16, 32, 64)
    probe_count: int = 100
    seed: int = 0
    out_dir: str = "out"

    def __post_init__(self):
        validate(self)

    @property
    def dim(self) -> int:
        return 3 if self.nz else 2

    def grid(self) -> Grid:
        if self.dim == 3:
            return build_grid((self.nx, self.ny, self.nz), (self.lx, self.ly, self.lz))
        return build_grid((self.nx, self.ny), (self.lx, self.ly))

    def law(self) -> ViscosityLaw:
        return ViscosityLaw(
            kind=self.mu_law,
            a=self.mu_a,
            b=self.mu_b,
            table=self.mu_table,
            rho_max=max(self.rho_bar, self.rho_background),
            mu_min=self.mu_min,
            mu_max=self.mu_max,
        )

    def step_config(self) -> StepConfig:
        return StepConfig(
            cfl=self.cfl,
            dt_max=self.dt_max,
            proj_tol=self.proj_tol,
            eps_rho=self.eps_rho,
            rho_bar=self.rho_bar,
            buoyancy=self.buoyancy,
            frozen_velocity=self.frozen_velocity,
            transport=self.transport,
            mu_average=self.mu_average,
            solver=self.solver,
            step_doubling=self.step_doubling,
            dt_tol=self.dt_tol,
        )

    def center(self) -> tuple[float, ...]:
        if self.blob_center:
            return self.blob_center
        lengths = (self.lx, self.ly, self.lz)[: self.dim]
        return tuple(0.5 * L for L in lengths)

    def with_values(self, **changes) -> "SimConfig":
        return replace(self, **changes)


_PARSERS = {}
for _f in fields(SimConfig):
    t = str(_f.type)
    if t == "int":
        _PARSERS[_f.name] = int
    elif t == "float":
        _PARSERS[_f.name] = float
    elif t == "bool":
        _PARSERS[_f.name] = _bool
    elif t == "float | None":
        _PARSERS[_f.name] = _opt_float
    elif t == "tuple[float, ...]":
        _PARSERS[_f.name] = _floats
    elif t == "tuple[int, ...]":
        _PARSERS[_f.name] = _ints
    else:
        _PARSERS[_f.name] = str.strip


def validate(cfg: SimConfig) -> None:
    if cfg.scenario not in SCENARIOS:
        raise ConfigurationError(f"unknown scenario {cfg.scenario!r}; expected one of {SCENARIOS}", key="scenario")
    if not cfg.t_end > 0:
        raise ConfigurationError("t_end must be positive", key="t_end")
    if not cfg.q > 3:
        raise HypothesisViolation(f"q = {cfg.q} breaks the standing hypothesis q > 3", key="q")
    upper = min(cfg.q, 6.0)
    if not 3.0 < cfg.r < upper:
        raise HypothesisViolation(f"r = {cfg.r} must lie in (3, min(q, 6)) = (3, {upper:g})", key="r")
    if cfg.rho_background < 0:
        raise ConfigurationError("rho_background must be nonnegative", key="rho_background")
    for key in ("kappa", "rho_bar", "cfl", "dt_max", "output_interval", "m0_radius"):
        if not getattr(cfg, key) > 0:
            raise ConfigurationError(f"{key} must be positive", key=key)
    if cfg.u_init not in ("modes", "localized", "zero"):
        raise ConfigurationError(f"unknown u_init {cfg.u_init!r}", key="u_init")
    if cfg.theta_init not in ("modes", "vertical", "zero"):
        raise ConfigurationError(f"unknown theta_init {cfg.theta_init!r}", key="theta_init")
    if cfg.blob_center and len(cfg.blob_center) != cfg.dim:
        raise ConfigurationError("blob_center needs one coordinate per axis", key="blob_center")
    if cfg.nz < 0:
        raise ConfigurationError("nz must be positive (or omitted for 2D)", key="nz")


def parse_config(text: str, overrides: dict | None = None) -> SimConfig:
    """Parse configuration text; ``overrides`` (raw strings) win over the file."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        raw[key] = value
    raw.update(overrides or {})
    for key in REQUIRED:
        if key not in raw:
            raise ConfigurationError(f"missing key: {key}", key=key)
    values = {}
    for key, value in raw.items():
        if key not in _PARSERS:
            raise ConfigurationError(f"unknown key: {key}", key=key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigurationError(f"bad value for {key}: {value!r} ({exc})", key=key) from None
    return SimConfig(**values)


def load_config(path: str, overrides: dict | None = None) -> SimConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), overrides)


def _format(v) -> str:
    if v is None:
        return "auto"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return ",".join(_format(x) for x in v)
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else str(v)
    return str(v)


def render_config(cfg: SimConfig) -> str:
    """All keys, defaults filled in, in a form :func:`parse_config` reads back."""
    return "".join(f"{f.name} = {_format(getattr(cfg, f.name))}\n" for f in fields(cfg))
