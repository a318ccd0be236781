"""
Solver configuration: a flat key set, read from TOML.

Every key is optional; missing keys take the defaults of :class:`SolverConfig`
(the reference configuration: unit square, 64x64, ``dt = 1/256``, unit
coefficients, vortex + twist + density bump, ``T = 1``). Unknown keys and
ill-typed or out-of-range values raise :class:`ConfigError` naming the key.
"""

from __future__ import annotations

import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace

from .errors import ConfigError
from .fields import Grid

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

# file key -> attribute, where they differ
_ALIASES = {"lambda": "lam"}


@dataclass(frozen=True)
class SolverConfig:
    nx: int = 64
    ny: int = 64
    lx: float = 1.0
    ly: float = 1.0

    mu: float = 1.0
    lam: float = 1.0
    gamma: float = 1.0

    dt: float = 1.0 / 256
    t_final: float = 1.0

    picard_tol: float = 1e-8
    picard_max_iters: int = 50
    picard_mode: str = "per_step"

    transport_scheme: str = "upwind"
    cfl_max: float = 0.5

    saddle_tol: float = 1e-10
    stokes_max_iters: int = 50

    director_tol: float = 1e-10
    renormalize: bool = False

    presets: tuple = ("small_vortex_twist", "density_bump")
    velocity_amplitude: float = 0.02
    twist_amplitude: float = 0.2
    tilt_amplitude: float = 0.1
    rho_min: float = 0.5
    rho_max: float = 2.0
    bump_x: float = 0.35
    bump_y: float = 0.55
    bump_width: float = 0.15
    perturb_eps: float = 0.0

    output_dir: str = "out"
    sample_stride: int = 1

    def __post_init__(self):
        object.__setattr__(self, "presets", tuple(self.presets))
        self.validate()

    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.ny, self.lx, self.ly)

    @property
    def n_steps(self) -> int:
        if self.t_final <= 0:
            return 0
        return int(math.ceil(self.t_final / self.dt - 1e-9))

    def with_(self, **changes) -> "SolverConfig":
        return replace(self, **changes)

    def refined(self, factor=2) -> "SolverConfig":
        """Same problem with ``h`` and ``dt`` divided by ``factor``."""
        return replace(self, nx=self.nx * factor, ny=self.ny * factor, dt=self.dt / factor)

    def to_dict(self) -> dict:
        out = {}
        for k, v in asdict(self).items():
            key = "lambda" if k == "lam" else k
            out[key] = list(v) if isinstance(v, tuple) else v
        return out

    def validate(self):
        from .presets import PRESETS

        def need(cond, key, msg):
            if not cond:
                raise ConfigError(f"{key}: {msg}", key=key)

        for k in ("nx", "ny"):
            need(getattr(self, k) >= 4, k, "must be at least 4")
        for k in ("lx", "ly", "mu", "lam", "gamma", "dt", "picard_tol", "saddle_tol",
                  "director_tol", "bump_width"):
            need(getattr(self, k) > 0, _key(k), "must be positive")
        need(self.t_final >= 0, "t_final", "must be non-negative")
        need(self.picard_max_iters >= 1, "picard_max_iters", "must be at least 1")
        need(self.stokes_max_iters >= 1, "stokes_max_iters", "must be at least 1")
        need(self.picard_mode in ("per_step", "trajectory"), "picard_mode",
             "must be 'per_step' or 'trajectory'")
        need(self.transport_scheme in ("upwind", "semi_lagrangian"), "transport_scheme",
             "must be 'upwind' or 'semi_lagrangian'")
        need(0 < self.cfl_max <= 1, "cfl_max", "must lie in (0, 1]")
        need(0 < self.rho_min <= self.rho_max, "rho_min", "need 0 < rho_min <= rho_max")
        need(self.sample_stride >= 1, "sample_stride", "must be at least 1")
        need(len(self.presets) > 0, "presets", "at least one preset is required")
        for name in self.presets:
            need(name in PRESETS, "presets", f"unknown preset {name!r}")


def _key(attr):
    return "lambda" if attr == "lam" else attr


_TYPES = {f.name: f.type for f in fields(SolverConfig)}


def _coerce(key, attr, value):
    kind = _TYPES[attr]
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{key}: expected an integer, got {value!r}", key=key)
        return value
    if kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{key}: expected a number, got {value!r}", key=key)
        return float(value)
    if kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{key}: expected true/false, got {value!r}", key=key)
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{key}: expected a string, got {value!r}", key=key)
        return value
    # presets
    if isinstance(value, str):
        value = [p for p in value.replace("+", ",").split(",") if p.strip()]
    if not isinstance(value, list) or not all(isinstance(p, str) for p in value):
        raise ConfigError(f"{key}: expected a list of preset names", key=key)
    return tuple(p.strip() for p in value)


def config_from_dict(data: dict) -> SolverConfig:
    kw = {}
    for key, value in data.items():
        attr = _ALIASES.get(key, key)
        if attr not in _TYPES or attr == "lam" and key != "lambda":
            raise ConfigError(f"{key}: unknown configuration key", key=key)
        kw[attr] = _coerce(key, attr, value)
    return SolverConfig(**kw)


def load_config(path) -> SolverConfig:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config: file not found: {path}", key="config") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config: cannot parse {path}: {exc}", key="config") from exc
    return config_from_dict(data)


def dumps_config(cfg: SolverConfig) -> str:
    lines = []
    for key, value in cfg.to_dict().items():
        if isinstance(value, bool):
            text = "true" if value else "false"
        elif isinstance(value, str):
            text = '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
        elif isinstance(value, list):
            text = "[" + ", ".join(f'"{p}"' for p in value) + "]"
        elif isinstance(value, float):
            text = repr(value)
        else:
            text = str(value)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
