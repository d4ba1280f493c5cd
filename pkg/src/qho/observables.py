"""Position expectation values, Ehrenfest's equation and the Arnold transformation."""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.integrate import simpson

from .coefficients import CoefficientSet
from .quantum import to_autonomous
from .superposition import KernelState
from .wavefield import WaveField, fmt


@dataclass
class Trajectory:
    """Per-slice <x>/<1> and <1> of a wave field."""

    t: np.ndarray
    xbar: np.ndarray
    norm: np.ndarray

    def __post_init__(self):
        if np.any(self.norm <= 0):
            raise ValueError("trajectory norm must be positive")


def expectation_x(field: WaveField, decay_tol: float = 1e-10) -> Trajectory:
    """xbar = <psi, x psi> / <psi, psi> per time slice (composite Simpson)."""
    dens = np.abs(field.values) ** 2
    edge = np.maximum(np.abs(field.values[:, 0]), np.abs(field.values[:, -1]))
    if np.any(edge > decay_tol * np.max(np.abs(field.values), axis=1)):
        raise ValueError("wave field does not decay at the x boundaries")
    norm = simpson(dens, x=field.x, axis=1)
    first = simpson(dens * field.x, x=field.x, axis=1)
    return Trajectory(field.t.copy(), first / norm, norm)


def _uniform_derivatives(t, y):
    if len(t) < 5:
        raise ValueError("grid too coarse: need at least 5 time slices")
    dt = np.diff(t)
    if not np.allclose(dt, dt[0], rtol=1e-9, atol=0):
        raise ValueError("Ehrenfest residual needs a uniform t grid")
    h = dt[0]
    d1 = (y[2:] - y[:-2]) / (2 * h)
    d2 = (y[2:] - 2 * y[1:-1] + y[:-2]) / h ** 2
    return d1, d2


def ehrenfest_residual(traj: Trajectory, coeffs: CoefficientSet) -> float:
    """Max residual of the classical driven-oscillator equation for xbar(t).

    xbar'' - (a'/a) xbar' + (4ab - c^2 + c a'/a - c') xbar = 2af - g' + g a'/a - cg
    """
    d1, d2 = _uniform_derivatives(traj.t, traj.xbar)
    v = coeffs.evaluate(traj.t[1:-1])
    a, b, c, f, g = (v[k] for k in ("a", "b", "c", "f", "g"))
    ra = v["da"] / a
    x = traj.xbar[1:-1]
    lhs = d2 - ra * d1 + (4 * a * b - c * c + c * ra - v["dc"]) * x
    rhs = 2 * a * f - v["dg"] + g * ra - c * g
    return float(np.max(np.abs(lhs - rhs)))


def _states_on(traj_t, states: KernelState):
    st = np.atleast_1d(states.t)
    if len(st) != len(traj_t) or not np.allclose(st, traj_t, rtol=0, atol=1e-12):
        raise ValueError("states must be sampled on the trajectory's t grid")
    tau = np.atleast_1d(states.gamma).astype(float)
    dtau = np.diff(tau)
    if not (np.all(dtau > 0) or np.all(dtau < 0)):
        raise ValueError("tau = gamma(t) is not strictly monotone")
    return tau


def arnold_transform(traj: Trajectory, states: KernelState):
    """xi_bar = beta xbar + epsilon and tau = gamma along the trajectory."""
    tau = _states_on(traj.t, states)
    xi_bar = np.atleast_1d(states.beta) * traj.xbar + np.atleast_1d(states.epsilon)
    return xi_bar, tau


def xi_expectation(field: WaveField, states: KernelState) -> np.ndarray:
    """<chi, xi chi> / <chi, chi> computed on the transformed field itself."""
    _states_on(field.t, states)
    xi, _, chi = to_autonomous(field, states)
    out = np.empty(len(field.t))
    for j in range(len(field.t)):
        order = np.argsort(xi[j])
        dens = np.abs(chi[j][order]) ** 2
        out[j] = simpson(dens * xi[j][order], x=xi[j][order]) / simpson(dens, x=xi[j][order])
    return out


def harmonic_normal_form_residual(xi_bar, tau, c0: int) -> float:
    """max |d^2 xi_bar / d tau^2 + 4 c0 xi_bar| with three-point divided differences."""
    xi_bar = np.asarray(xi_bar, dtype=float)
    tau = np.asarray(tau, dtype=float)
    if len(tau) < 5 or len(xi_bar) != len(tau):
        raise ValueError("need at least 5 samples of (xi_bar, tau)")
    h = np.diff(tau)
    if not (np.all(h > 0) or np.all(h < 0)):
        raise ValueError("tau must be strictly monotone")
    h1, h2 = h[:-1], h[1:]
    s1 = (xi_bar[1:-1] - xi_bar[:-2]) / h1
    s2 = (xi_bar[2:] - xi_bar[1:-1]) / h2
    d2 = 2 * (s2 - s1) / (h1 + h2)
    return float(np.max(np.abs(d2 + 4 * c0 * xi_bar[1:-1])))


def write_trajectory_csv(path, traj: Trajectory, xi_bar=None, tau=None) -> Path:
    """CSV with columns ``t,xbar,norm,xi_bar,tau``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = len(traj.t)
    xi_bar = np.full(n, np.nan) if xi_bar is None else xi_bar
    tau = np.full(n, np.nan) if tau is None else tau
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "xbar", "norm", "xi_bar", "tau"])
        for row in zip(traj.t, traj.xbar, traj.norm, xi_bar, tau):
            w.writerow([fmt(v) for v in row])
    return path
