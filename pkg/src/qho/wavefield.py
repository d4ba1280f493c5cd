"""Sampled wave functions on rectangular (t, x) grids and their CSV/JSON export."""
from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

MIN_NX = 16
FLOAT_FMT = "{:.17g}"


def fmt(v) -> str:
    return FLOAT_FMT.format(float(v))


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map, optionally over a thread pool; results do not depend on ``threads``."""
    items = list(items)
    if threads is None or threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class WaveField:
    """Complex samples ``values[j, i] = psi(x[i], t[j])``."""

    x: np.ndarray
    t: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.t = np.atleast_1d(np.asarray(self.t, dtype=float))
        self.values = np.asarray(self.values, dtype=complex).reshape(len(self.t), len(self.x))
        if self.x.ndim != 1 or len(self.x) < MIN_NX:
            raise ConfigError(f"x grid needs at least {MIN_NX} points")
        if np.any(np.diff(self.x) <= 0):
            raise ConfigError("x grid must be strictly increasing")
        if len(self.t) > 1 and np.any(np.diff(self.t) <= 0):
            raise ConfigError("t grid must be strictly increasing")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def is_uniform(self, axis: str = "x", rtol: float = 1e-9) -> bool:
        g = self.x if axis == "x" else self.t
        if len(g) < 2:
            return True
        d = np.diff(g)
        return bool(np.all(np.abs(d - d[0]) <= rtol * abs(d[0])))

    def slice(self, j: int) -> "WaveField":
        return WaveField(self.x, self.t[j:j + 1], self.values[j:j + 1], dict(self.metadata))

    def norms(self) -> np.ndarray:
        """Discrete L2 norm per time slice (composite Simpson)."""
        from scipy.integrate import simpson
        return simpson(np.abs(self.values) ** 2, x=self.x, axis=1)

    # -- export -------------------------------------------------------------
    def to_csv(self, path) -> Path:
        """Write ``t,x,re_psi,im_psi,abs2`` rows plus a JSON sidecar with grid metadata."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "re_psi", "im_psi", "abs2"])
            for j, tj in enumerate(self.t):
                row_t = fmt(tj)
                for xi, v in zip(self.x, self.values[j]):
                    w.writerow([row_t, fmt(xi), fmt(v.real), fmt(v.imag), fmt(abs(v) ** 2)])
        sidecar = {
            "x_min": float(self.x[0]), "x_max": float(self.x[-1]), "n_x": int(len(self.x)),
            "t": [float(v) for v in self.t], "n_t": int(len(self.t)),
            **self.metadata,
        }
        path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
        return path

    @classmethod
    def from_csv(cls, path) -> "WaveField":
        """Read a field written by :meth:`to_csv`, or a bare ``x,re_psi,im_psi`` table (t = 0)."""
        path = Path(path)
        with open(path, newline="") as fh:
            reader = csv.DictReader(fh)
            cols = set(reader.fieldnames or ())
            if not {"x", "re_psi", "im_psi"} <= cols:
                raise ConfigError(f"{path}: need columns x, re_psi, im_psi")
            try:
                rows = [(float(r.get("t", 0.0) or 0.0), float(r["x"]), float(r["re_psi"]), float(r["im_psi"]))
                        for r in reader]
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc
        if not rows:
            raise ConfigError(f"{path}: no data rows")
        arr = np.asarray(rows)
        ts = np.unique(arr[:, 0])
        xs = arr[arr[:, 0] == ts[0], 1]
        vals = np.empty((len(ts), len(xs)), dtype=complex)
        for j, tj in enumerate(ts):
            sel = arr[arr[:, 0] == tj]
            if len(sel) != len(xs) or np.any(sel[:, 1] != xs):
                raise ConfigError(f"{path}: rows do not form a rectangular grid")
            vals[j] = sel[:, 2] + 1j * sel[:, 3]
        meta = {}
        side = path.with_suffix(".json")
        if side.exists():
            meta = {k: v for k, v in json.loads(side.read_text()).items()
                    if k not in ("x_min", "x_max", "n_x", "t", "n_t")}
        return cls(xs, ts, vals, meta)
