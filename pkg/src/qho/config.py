"""JSON run configuration for the command-line front end.

Example::

    {
      "preset": "driven-sho",
      "params": {"omega": 1.0, "F": 0.3},
      "initial": {"mu": 1, "alpha": 0, "beta": 1, "gamma": 0, "delta": 0, "epsilon": 0, "kappa": 0},
      "n": 0,
      "grid": {"x_min": -8, "x_max": 8, "n_x": 512, "t_min": 0.05, "t_max": 1.0, "n_t": 64},
      "tolerances": {"solver": 1e-10, "residual": 1e-6}
    }

Optional keys: ``samples`` (CSV path for ``custom-tabulated``), ``T`` (domain end,
defaults to the largest requested time), ``input`` (initial-data CSV for
``propagate``), ``greens`` (``{"t": [...], "y_min", "y_max", "n_y"}``), ``frame``
and ``frame_c0`` (Arnold-frame initial data for ``observables``).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coefficients import PRESETS, CoefficientSet, make_preset
from .errors import ConfigError
from .superposition import InitialData

MODES = ("solve-fundamental", "eigenstate", "propagate", "greens", "observables", "verify")
MAX_NX = 1 << 16
MAX_NT = 100_000

DEFAULT_GRID = {"x_min": -8.0, "x_max": 8.0, "n_x": 512, "t_min": 0.05, "t_max": 1.0, "n_t": 64}
DEFAULT_TOL = {"solver": 1e-10, "residual": 1e-6}
KNOWN_KEYS = {"preset", "params", "samples", "T", "initial", "n", "grid", "tolerances", "input",
              "greens", "frame", "frame_c0", "mode", "output_dir"}


@dataclass
class Grid:
    x_min: float
    x_max: float
    n_x: int
    t_min: float
    t_max: float
    n_t: int

    def __post_init__(self):
        if self.n_x != int(self.n_x) or self.n_t != int(self.n_t):
            raise ConfigError("n_x and n_t must be integers")
        self.n_x, self.n_t = int(self.n_x), int(self.n_t)
        if not 16 <= self.n_x <= MAX_NX:
            raise ConfigError(f"n_x must lie in [16, {MAX_NX}], got {self.n_x}")
        if not 1 <= self.n_t <= MAX_NT:
            raise ConfigError(f"n_t must lie in [1, {MAX_NT}], got {self.n_t}")
        if not self.x_max > self.x_min:
            raise ConfigError("x_max must exceed x_min")
        if self.t_min < 0 or self.t_max < self.t_min or (self.n_t > 1 and self.t_max == self.t_min):
            raise ConfigError("need 0 <= t_min < t_max")

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_x)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_t)


@dataclass
class RunConfig:
    preset: str
    params: dict
    initial: InitialData
    grid: Grid
    solver_tol: float = 1e-10
    residual_tol: float = 1e-6
    n: int = 0
    T: float | None = None
    samples: str | None = None
    input: str | None = None
    greens_t: list = field(default_factory=list)
    greens_y: tuple = (-4.0, 4.0, 64)
    frame: InitialData = field(default_factory=InitialData)
    frame_c0: int = 1
    base_dir: Path = Path(".")

    @property
    def domain_end(self) -> float:
        if self.T is not None:
            return self.T
        return max([self.grid.t_max, *self.greens_t])

    def coefficients(self) -> CoefficientSet:
        samples = self.samples
        if samples is not None and not Path(samples).is_absolute():
            samples = str(self.base_dir / samples)
        return make_preset(self.preset, self.params, T=self.domain_end, samples=samples)

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "RunConfig":
        if not isinstance(raw, dict):
            raise ConfigError("configuration must be a JSON object")
        unknown = set(raw) - KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {', '.join(sorted(unknown))}")
        if raw.get("mode") is not None and raw["mode"] not in MODES:
            raise ConfigError(f"unknown mode {raw['mode']!r}")
        preset = raw.get("preset")
        if preset not in PRESETS:
            raise ConfigError(f"unknown or missing preset {preset!r}; choose from {', '.join(PRESETS)}")
        try:
            init = InitialData.from_mapping(raw.get("initial", {}))
        except ConfigError as exc:
            if "beta" in str(exc):
                raise ConfigError("initial data violates the superposition requirement "
                                  "beta(0) != 0 (β(0) ≠ 0)") from exc
            raise
        grid_raw = raw.get("grid", {})
        tol = {**DEFAULT_TOL, **raw.get("tolerances", {})}
        for name, given, allowed in (("grid", grid_raw, DEFAULT_GRID), ("tolerances", tol, DEFAULT_TOL)):
            extra = set(given) - set(allowed)
            if extra:
                raise ConfigError(f"unknown {name} key(s): {', '.join(sorted(extra))}")
        try:
            grid = Grid(**{k: float(v) for k, v in {**DEFAULT_GRID, **grid_raw}.items()})
            tol = {k: float(v) for k, v in tol.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"grid and tolerances must be numeric ({exc})") from exc
        if not (tol["solver"] > 0 and tol["residual"] > 0):
            raise ConfigError("tolerances must be positive")
        n = raw.get("n", 0)
        if not isinstance(n, int) or n < 0:
            raise ConfigError("n must be a non-negative integer")
        g = raw.get("greens", {}) or {}
        gt = g.get("t", [])
        gt = [float(v) for v in (gt if isinstance(gt, list) else [gt])]
        frame_c0 = raw.get("frame_c0", 1)
        if frame_c0 not in (0, 1):
            raise ConfigError("frame_c0 must be 0 or 1")
        cfg = cls(
            preset=preset, params=dict(raw.get("params", {})), initial=init, grid=grid,
            solver_tol=float(tol["solver"]), residual_tol=float(tol["residual"]), n=n,
            T=None if raw.get("T") is None else float(raw["T"]), samples=raw.get("samples"),
            input=raw.get("input"), greens_t=gt,
            greens_y=(float(g.get("y_min", -4.0)), float(g.get("y_max", 4.0)), int(g.get("n_y", 64))),
            frame=InitialData.from_mapping(raw.get("frame", {})), frame_c0=frame_c0,
            base_dir=Path(base_dir),
        )
        if cfg.domain_end < max([grid.t_max, *gt]):
            raise ConfigError("T is smaller than the largest requested time")
        cfg.coefficients()  # re-validate preset parameters at load time
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(raw, base_dir=path.parent)
