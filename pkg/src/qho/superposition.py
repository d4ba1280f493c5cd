"""Nonlinear superposition for the Riccati-type (c0=0) and Ermakov-type (c0=1) systems.

Both maps take arbitrary initial data (mu, alpha, ..., kappa at t=0) and the
fundamental solution to the state at time t.  The closed formulas contain
ratios like beta0 / (alpha(0) + gamma0) that are 0/0 at caustics of mu0;
here they are evaluated after multiplying through by mu0, using

    p(t) = mu0(t) (alpha(0) + gamma0(t)) = mu1(t)/2 + q mu0(t),
    q    = alpha(0) + d(0) / (2 a(0)),

which is smooth everywhere.  The driving integrals I, J, K of
:mod:`qho.characteristic` remove the remaining 1/mu0 factors.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields

import numpy as np

from .characteristic import CharacteristicSolution, FundamentalSolution, newton_distance, system_residual
from .coefficients import CoefficientSet, tau_sigma
from .errors import ConfigError, DegenerateFocusError

logger = logging.getLogger(__name__)

STATE_KEYS = ("mu", "alpha", "beta", "gamma", "delta", "epsilon", "kappa")


@dataclass(frozen=True)
class InitialData:
    """Values of mu, alpha, beta, gamma, delta, epsilon, kappa at t = 0.

    A negative ``mu`` is replaced by its absolute value (the map is odd in mu);
    ``beta = 0`` and ``mu = 0`` are rejected.
    """

    mu: float = 1.0
    alpha: float = 0.0
    beta: float = 1.0
    gamma: float = 0.0
    delta: float = 0.0
    epsilon: float = 0.0
    kappa: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = float(getattr(self, f.name))
            if not np.isfinite(v):
                raise ConfigError(f"initial {f.name} must be finite")
            object.__setattr__(self, f.name, v)
        if self.beta == 0.0:
            raise ConfigError("initial data requires beta(0) != 0")
        if self.mu == 0.0:
            raise ConfigError("initial data requires mu(0) != 0")
        if self.mu < 0:
            logger.debug("normalizing mu(0)=%g to its absolute value", self.mu)
            object.__setattr__(self, "mu", -self.mu)

    @classmethod
    def from_mapping(cls, m) -> "InitialData":
        unknown = set(m) - set(STATE_KEYS)
        if unknown:
            raise ConfigError(f"unknown initial-data key(s): {', '.join(sorted(unknown))}")
        try:
            values = {k: float(v) for k, v in m.items()}
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"initial data must be numeric ({exc})") from exc
        return cls(**values)

    def as_tuple(self):
        return tuple(getattr(self, k) for k in STATE_KEYS)


@dataclass(frozen=True)
class KernelState:
    """(mu, alpha, beta, gamma, delta, epsilon, kappa) at time(s) ``t``.

    Fields are scalars or equally shaped arrays (a trajectory).
    """

    t: np.ndarray
    mu: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    delta: np.ndarray
    epsilon: np.ndarray
    kappa: np.ndarray
    c0: int

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in STATE_KEYS}

    def __len__(self):
        return np.size(self.t)

    def at(self, i) -> "KernelState":
        return KernelState(t=np.asarray(self.t)[i], c0=self.c0,
                           **{k: np.asarray(getattr(self, k))[i] for k in STATE_KEYS})

    @classmethod
    def initial(cls, init: InitialData, c0: int) -> "KernelState":
        return cls(t=np.asarray(0.0), c0=c0, **{k: np.asarray(v) for k, v in zip(STATE_KEYS, init.as_tuple())})


def _prepare(fund: FundamentalSolution, init: InitialData, t):
    cs = fund.coeffs
    t = cs.check_time(t)
    r = fund.char.raw(t)
    a0 = float(cs.a(np.asarray(0.0)))
    q = init.alpha + float(cs.d(np.asarray(0.0))) / (2 * a0)
    p = 0.5 * r["mu1"] + q * r["mu0"]
    dp = 0.5 * r["dmu1"] + q * r["dmu0"]
    return t, r, q, p, dp, cs.a(t), cs.d(t)


def riccati_map(fund: FundamentalSolution, init: InitialData, t, focus_window: float | None = None) -> KernelState:
    """Solution of the Riccati-type system (c0 = 0) with the given initial data.

    Raises :class:`DegenerateFocusError` within ``focus_window`` (a distance
    in t, default ``1e-7 * max(1, T)``) of a zero of mu(t) = 2 mu(0) p(t).
    """
    t, r, q, p, dp, a, d = _prepare(fund, init, t)
    if focus_window is None:
        focus_window = 1e-7 * max(1.0, fund.char.T)
    bad = np.atleast_1d(newton_distance(p, dp) <= focus_window)
    if np.any(bad):
        tt, pp, dd = (np.atleast_1d(v)[bad][0] for v in (t, p, dp))
        raise DegenerateFocusError(tt - pp / dd)
    mu0, mu1, lam, I, J, K = (r[k] for k in ("mu0", "mu1", "lam", "I", "J", "K"))
    e = init.delta + J
    return KernelState(
        t=t, c0=0,
        mu=2 * init.mu * p,
        alpha=dp / (4 * a * p) - d / (2 * a),
        beta=init.beta * lam / (2 * p),
        gamma=init.gamma - init.beta ** 2 * mu0 / (4 * p),
        delta=lam * (e + 2 * q * I) / (2 * p),
        epsilon=init.epsilon - init.beta * (mu0 * e - mu1 * I) / (2 * p),
        kappa=init.kappa - K - (mu0 * e ** 2 - 2 * e * mu1 * I - 2 * q * mu1 * I ** 2) / (4 * p),
    )


def ermakov_phase(fund: FundamentalSolution, init: InitialData, t):
    """Continuous angle of the vector (2p, beta(0)^2 mu0), starting at 0 for t = 0.

    The angle increases monotonically (a > 0) and crosses multiples of pi
    exactly at caustics, so the branch is fixed by counting caustics before t.
    """
    t, r, q, p, dp, a, d = _prepare(fund, init, t)
    raw = np.arctan2(init.beta ** 2 * r["mu0"], 2 * p)
    k = fund.char.caustics_before(t)
    centre = (k + 0.5) * np.pi
    return raw + 2 * np.pi * np.round((centre - raw) / (2 * np.pi))


def ermakov_map(fund: FundamentalSolution, init: InitialData, t) -> KernelState:
    """Solution of the Ermakov-type system (c0 = 1) with the given initial data.

    mu is the positive root; gamma follows a continuous branch with gamma(0+) = gamma(0).
    """
    cs = fund.coeffs
    if not float(cs.a(np.asarray(0.0))) > 0:
        raise ConfigError("Ermakov-type superposition is defined for a(0) > 0 only")
    t, r, q, p, dp, a, d = _prepare(fund, init, t)
    mu0, dmu0, mu1, lam, I, J, K = (r[k] for k in ("mu0", "dmu0", "mu1", "lam", "I", "J", "K"))
    B = init.beta
    B2, B3, B4 = B ** 2, B ** 3, B ** 4
    s2 = B4 * mu0 ** 2 + 4 * p ** 2
    s = np.sqrt(s2)
    e = init.delta + J
    m = mu0 * e - mu1 * I
    e0 = init.epsilon
    kappa_num = (-e0 * B3 * mu0 * m + p * mu0 * e0 ** 2 * B2 - p * mu0 * e ** 2
                 + 2 * p * e * mu1 * I + I ** 2 * mu1 * (0.5 * B4 * mu0 + 2 * p * q))
    return KernelState(
        t=t, c0=1,
        mu=init.mu * s,
        alpha=(B4 * mu0 * dmu0 + 4 * p * dp) / (4 * a * s2) - d / (2 * a),
        beta=B * lam / s,
        gamma=init.gamma - 0.5 * ermakov_phase(fund, init, t),
        delta=lam * (I * (B4 * mu0 + 4 * p * q) + e0 * B3 * mu0 + 2 * p * e) / s2,
        epsilon=(2 * e0 * p - B * m) / s,
        kappa=init.kappa - K + kappa_num / s2,
    )


def superposition_map(fund: FundamentalSolution, init: InitialData, t, c0: int) -> KernelState:
    if c0 == 0:
        return riccati_map(fund, init, t)
    if c0 == 1:
        return ermakov_map(fund, init, t)
    raise ConfigError(f"c0 must be 0 or 1, got {c0}")


def mu_pinney(char: CharacteristicSolution, init: InitialData, coeffs: CoefficientSet, t,
              derivative: bool = False):
    """Pinney representation of the Ermakov amplitude mu(t) from mu0, mu1.

    With ``derivative=True`` returns ``(mu, mu')``, the derivative following
    from the chain rule on the solver's mu0', mu1'.
    """
    t = coeffs.check_time(t)
    a0 = float(coeffs.a(np.asarray(0.0)))
    d0 = float(coeffs.d(np.asarray(0.0)))
    dmu_init = 2 * init.mu * (2 * a0 * init.alpha + d0)
    mu1_0 = 1.0
    slope = dmu_init / (2 * init.mu) / a0
    r = char.raw(t)
    B4 = init.beta ** 4
    P = r["mu1"] / mu1_0 + slope * r["mu0"]
    mu = init.mu * np.sqrt(B4 * r["mu0"] ** 2 + P ** 2)
    if not derivative:
        return mu
    dP = r["dmu1"] / mu1_0 + slope * r["dmu0"]
    return mu, init.mu ** 2 * (B4 * r["mu0"] * r["dmu0"] + P * dP) / mu


def ermakov_residual(char: CharacteristicSolution, coeffs: CoefficientSet, init: InitialData, grid) -> float:
    """Max residual of mu'' - tau mu' + 4 sigma mu - (2a)^2 (beta(0) mu(0) lambda)^4 / mu^3.

    mu'' is a central difference of mu' along the Pinney trajectory.
    """
    t = np.asarray(grid, dtype=float)
    if np.any(t <= 0) or np.any(t >= char.T):
        raise ValueError("Ermakov residual grid must lie inside (0, T)")
    h = np.cbrt(np.finfo(float).eps) * np.maximum(1.0, np.abs(t))
    h = np.minimum(h, 0.5 * np.minimum(t, char.T - t))
    mu, d1 = mu_pinney(char, init, coeffs, t, derivative=True)
    d2 = (mu_pinney(char, init, coeffs, t + h, derivative=True)[1]
          - mu_pinney(char, init, coeffs, t - h, derivative=True)[1]) / (2 * h)
    tau, sigma = tau_sigma(coeffs, t)
    a = coeffs.a(t)
    source = (2 * a) ** 2 * (init.beta * init.mu * char.lam(t)) ** 4 / mu ** 3
    return float(np.max(np.abs(d2 - tau * d1 + 4 * sigma * mu - source)))


def map_residual(fund: FundamentalSolution, init: InitialData, grid, c0: int) -> float:
    """Residual of a superposition state substituted into the six-equation system."""
    def state(s):
        return superposition_map(fund, init, s, c0).as_dict()

    _, r, _, p, dp, _, _ = _prepare(fund, init, grid)
    if c0 == 0:
        scale = newton_distance(p, dp)
    else:
        # |v| / |v'| for v = (2p, beta0^2 mu0): the width of the dip of mu near a focus
        b2 = init.beta ** 2
        scale = newton_distance(np.hypot(2 * p, b2 * r["mu0"]), np.hypot(2 * dp, b2 * r["dmu0"]))
    return system_residual(state, fund.coeffs, grid, c0, scale=scale)


def continuity_orders(fund: FundamentalSolution, init: InitialData, c0: int,
                      times=(1e-2, 1e-3, 1e-4), floor: float = 1e-12):
    """Observed decay orders of |state(t) - init| as t -> 0, per component.

    Returns ``(diffs, orders)``: ``diffs[k]`` lists the differences at ``times``
    and ``orders[k]`` the log-log slopes between consecutive times.  Components
    that do not move (difference below ``floor`` at the largest time) are left out.
    """
    times = np.asarray(times, dtype=float)
    state = superposition_map(fund, init, times, c0)
    diffs, orders = {}, {}
    for key, v0 in zip(STATE_KEYS, init.as_tuple()):
        d = np.abs(np.asarray(getattr(state, key), dtype=float) - v0)
        if d[0] <= floor:
            continue
        diffs[key] = d
        orders[key] = np.log(d[:-1] / d[1:]) / np.log(times[:-1] / times[1:])
    return diffs, orders
