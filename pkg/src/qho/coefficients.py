"""Time-dependent coefficients of the quadratic Hamiltonian.

The Schroedinger equation handled by this package is

    i psi_t = -a psi_xx + b x^2 psi - i c x psi_x - i d psi - f x psi + i g psi_x

with real coefficients a..g depending on time only.  A :class:`CoefficientSet`
bundles the six functions, the derivatives a', c', d', g' used downstream,
and the time domain [0, T].
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import ConfigError, DomainError

logger = logging.getLogger(__name__)

Func = Callable[[np.ndarray], np.ndarray]

NAMES = ("a", "b", "c", "d", "f", "g")
DERIVED = ("a", "c", "d", "g")
PRESETS = ("free", "sho", "driven-sho", "damped", "polynomial", "custom-tabulated")
POLY_DEGREE = 5


def _const(value: float) -> Func:
    value = float(value)
    return lambda t: np.full_like(np.asarray(t, dtype=float), value)


@dataclass(frozen=True)
class CoefficientSet:
    """Coefficient functions a..g on the closed interval [0, T].

    All callables are vectorized over numpy arrays of times.  Instances are
    immutable and may be shared between worker threads.
    """

    a: Func
    b: Func
    c: Func
    d: Func
    f: Func
    g: Func
    da: Func
    dc: Func
    dd: Func
    dg: Func
    T: float
    name: str = "custom"
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ConfigError(f"time domain end T must be positive and finite, got {self.T}")

    def check_time(self, t) -> np.ndarray:
        """Return ``t`` as an array, raising :class:`DomainError` outside [0, T]."""
        t = np.asarray(t, dtype=float)
        # slack of a few ulps so that grids built as linspace(0, T) are accepted
        slack = 8 * np.finfo(float).eps * max(1.0, self.T)
        if np.any(~np.isfinite(t)) or np.any(t < -slack) or np.any(t > self.T + slack):
            raise DomainError(f"time outside domain [0, {self.T}]")
        return np.clip(t, 0.0, self.T)

    def evaluate(self, t) -> dict[str, np.ndarray]:
        """All coefficient values and derivatives at ``t`` (domain checked)."""
        t = self.check_time(t)
        out = {k: getattr(self, k)(t) for k in NAMES}
        out.update({"d" + k: getattr(self, "d" + k)(t) for k in DERIVED})
        return out

    def with_domain(self, T: float) -> "CoefficientSet":
        return CoefficientSet(**{**self.__dict__, "T": float(T)})


def tau_sigma(coeffs: CoefficientSet, t):
    """Drift tau(t) and frequency sigma(t) of the characteristic equation.

    sigma is evaluated in the expanded form
    ``ab - cd + d^2 + d a'/(2a) - d'/2`` which has no d'/d singularity.
    """
    v = coeffs.evaluate(t)
    a, b, c, d = v["a"], v["b"], v["c"], v["d"]
    a_ratio = v["da"] / a
    tau = a_ratio - 2.0 * c + 4.0 * d
    sigma = a * b - c * d + d * d + 0.5 * d * a_ratio - 0.5 * v["dd"]
    return tau, sigma


def sigma_literal(coeffs: CoefficientSet, t):
    """sigma written as ``ab - cd + d^2 + (d/2)(a'/a - d'/d)``; needs d(t) != 0."""
    v = coeffs.evaluate(t)
    a, b, c, d = v["a"], v["b"], v["c"], v["d"]
    return a * b - c * d + d * d + 0.5 * d * (v["da"] / a - v["dd"] / d)


def check_derivatives(coeffs: CoefficientSet, t, rtol: float = 1e-6) -> float:
    """Largest relative mismatch between supplied derivatives and central differences.

    Points must be interior.  Raises ``ValueError`` when the mismatch exceeds ``rtol``.
    """
    t = coeffs.check_time(t)
    worst = 0.0
    for name in DERIVED:
        fn = getattr(coeffs, name)
        h = np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(t))
        h = np.minimum(h, 0.5 * np.minimum(t, coeffs.T - t))
        if np.any(h <= 0):
            raise DomainError("derivative check needs interior points")
        fd = (fn(t + h) - fn(t - h)) / (2 * h)
        exact = getattr(coeffs, "d" + name)(t)
        err = np.max(np.abs(fd - exact) / np.maximum(1.0, np.abs(exact)))
        worst = max(worst, float(err))
    if worst > rtol:
        raise ValueError(f"supplied derivatives inconsistent with coefficients (rel err {worst:.3g})")
    return worst


def _require(params: Mapping[str, float], names) -> dict[str, float]:
    missing = [n for n in names if n not in params]
    if missing:
        raise ConfigError(f"missing parameter(s): {', '.join(missing)}")
    extra = sorted(set(params) - set(names))
    if extra:
        raise ConfigError(f"unknown parameter(s): {', '.join(extra)}")
    return {n: float(params[n]) for n in names}


def _poly(cs) -> tuple[Func, Func]:
    p = np.polynomial.Polynomial(cs)
    dp = p.deriv()
    return (lambda t: p(np.asarray(t, dtype=float))), (lambda t: dp(np.asarray(t, dtype=float)))


def polynomial_set(poly: Mapping[str, list], T: float, name="polynomial", params=None) -> CoefficientSet:
    """Coefficients given as power-series lists ``{"a": [a0, a1, ...], ...}``."""
    funcs = {}
    for k in NAMES:
        fn, dfn = _poly(poly.get(k, [0.0]) or [0.0])
        funcs[k] = fn
        if k in DERIVED:
            funcs["d" + k] = dfn
    cs = CoefficientSet(T=T, name=name, params=dict(params or {}), **funcs)
    tt = np.linspace(0.0, T, 257)
    if np.any(cs.a(tt) == 0.0) or np.any(np.sign(cs.a(tt)) != np.sign(cs.a(tt[0]))):
        raise ConfigError("a(t) must not vanish on the domain")
    return cs


def tabulated_set(samples, T: float | None = None, name="custom-tabulated") -> CoefficientSet:
    """Monotone cubic (PCHIP) interpolation of rows ``(t, a, b, c, d, f, g)``."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 7 or arr.shape[0] < 2:
        raise ConfigError("tabulated samples must be rows of (t, a, b, c, d, f, g)")
    t = arr[:, 0]
    if np.any(np.diff(t) <= 0):
        raise ConfigError("tabulated t values must be strictly increasing")
    if t[0] != 0.0:
        raise ConfigError("tabulated samples must start at t = 0")
    T = float(t[-1]) if T is None else float(T)
    if t[-1] < T:
        raise ConfigError(f"tabulated samples end at t={t[-1]} < T={T}")
    if np.any(arr[:, 1] == 0) or np.any(np.sign(arr[:, 1]) != np.sign(arr[0, 1])):
        raise ConfigError("a(t) must not vanish on the domain")
    funcs = {}
    for j, k in enumerate(NAMES, start=1):
        ip = PchipInterpolator(t, arr[:, j], extrapolate=False)
        funcs[k] = ip
        if k in DERIVED:
            funcs["d" + k] = ip.derivative()
    return CoefficientSet(T=T, name=name, params={}, **funcs)


def read_tabulated_csv(path) -> np.ndarray:
    """Read a CSV with header ``t,a,b,c,d,f,g``."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        cols = ["t", *NAMES]
        if reader.fieldnames is None or [c.strip() for c in reader.fieldnames] != cols:
            raise ConfigError(f"{path}: expected header {','.join(cols)}")
        try:
            rows = [[float(r[c]) for c in cols] for r in reader]
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{path}: non-numeric entry ({exc})") from exc
    return np.asarray(rows, dtype=float)


def make_preset(name: str, params: Mapping[str, float] | None = None, T: float = 1.0,
                samples=None) -> CoefficientSet:
    """Build a named coefficient preset.

    ``free``        a = 1/2, everything else zero.
    ``sho``         a = 1/2, b = omega^2/2.
    ``driven-sho``  sho plus a constant force f = F.
    ``damped``      a = exp(-2 gamma t)/2, b = omega^2 exp(2 gamma t)/2.
    ``polynomial``  power series with parameters ``a0, a1, ..., g5`` (a0 required).
    ``custom-tabulated``  ``samples`` rows (t, a..g) or a CSV path.
    """
    params = dict(params or {})
    zero = _const(0.0)
    base = dict(b=zero, c=zero, d=zero, f=zero, g=zero, da=zero, dc=zero, dd=zero, dg=zero)

    if name == "free":
        _require(params, ())
        return CoefficientSet(a=_const(0.5), T=T, name=name, params={}, **base)
    if name == "sho":
        p = _require(params, ("omega",))
        base["b"] = _const(0.5 * p["omega"] ** 2)
        return CoefficientSet(a=_const(0.5), T=T, name=name, params=p, **base)
    if name == "driven-sho":
        p = _require(params, ("omega", "F"))
        base["b"] = _const(0.5 * p["omega"] ** 2)
        base["f"] = _const(p["F"])
        return CoefficientSet(a=_const(0.5), T=T, name=name, params=p, **base)
    if name == "damped":
        p = _require(params, ("omega", "gamma"))
        w2, gam = p["omega"] ** 2, p["gamma"]
        base["b"] = lambda t: 0.5 * w2 * np.exp(2 * gam * np.asarray(t, dtype=float))
        return CoefficientSet(
            a=lambda t: 0.5 * np.exp(-2 * gam * np.asarray(t, dtype=float)),
            da=lambda t: -gam * np.exp(-2 * gam * np.asarray(t, dtype=float)),
            T=T, name=name, params=p, **{k: v for k, v in base.items() if k != "da"},
        )
    if name == "polynomial":
        allowed = [f"{k}{j}" for k in NAMES for j in range(POLY_DEGREE + 1)]
        extra = sorted(set(params) - set(allowed))
        if extra:
            raise ConfigError(f"unknown parameter(s): {', '.join(extra)}")
        if "a0" not in params:
            raise ConfigError("missing parameter(s): a0")
        poly = {k: [float(params.get(f"{k}{j}", 0.0)) for j in range(POLY_DEGREE + 1)] for k in NAMES}
        return polynomial_set(poly, T, name=name, params={k: float(v) for k, v in params.items()})
    if name == "custom-tabulated":
        if samples is None:
            raise ConfigError("custom-tabulated preset needs samples")
        if isinstance(samples, (str, Path)):
            samples = read_tabulated_csv(samples)
        return tabulated_set(samples, T)
    raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def random_smooth_preset(rng: np.random.Generator, T: float = 1.0, hermitian: bool = False) -> CoefficientSet:
    """Bounded cubic-polynomial coefficients with a(t) > 0 on [0, T].

    With ``hermitian=True`` the gauge d = c/2 is imposed, so lambda(t) = 1.
    """
    def cubic(lo, hi):
        return [rng.uniform(lo, hi)] + [rng.uniform(-0.2, 0.2) / T ** j for j in range(1, 4)]

    a = cubic(0.4, 0.6)
    a[1:] = [x * 0.3 for x in a[1:]]
    poly = {"a": a, "b": cubic(0.2, 0.8), "c": cubic(-0.3, 0.3), "d": cubic(-0.3, 0.3),
            "f": cubic(-0.5, 0.5), "g": cubic(-0.5, 0.5)}
    if hermitian:
        poly["d"] = [0.5 * x for x in poly["c"]]
    params = {f"{k}{j}": v for k, cs in poly.items() for j, v in enumerate(cs)}
    return polynomial_set(poly, T, name="polynomial", params=params)
