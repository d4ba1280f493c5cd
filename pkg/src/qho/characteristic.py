"""Standard solutions of the characteristic equation and the Green's-function kernel.

The linear equation ``mu'' - tau(t) mu' + 4 sigma(t) mu = 0`` is integrated
for the two standard solutions

    mu0(0) = 0,  mu0'(0) = 2 a(0);      mu1(0) = 1,  mu1'(0) = 0

together with the gauge factor ``lambda = exp(-int_0^t (c - 2d) ds)`` and three
driving integrals

    I(t) = int_0^t [(f - d g / a) mu0 + g mu0' / (2a)] / lambda ds
    J(t) = int_0^t [(f - d g / a) mu1 + g mu1' / (2a)] / lambda ds
    K(t) = int_0^t I J' ds

from which the kernel functions follow in closed form:

    delta0   = lambda I / mu0
    epsilon0 = J - mu1 I / mu0
    kappa0   = mu1 I^2 / (2 mu0) - K

The last two come from integrating (SysE)/(SysF) by parts with the Wronskian
``mu0' mu1 - mu0 mu1' = 2 a lambda^2``; unlike the 1/mu0' quadratures they
stay finite at turning points of mu0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad, solve_ivp

from .coefficients import CoefficientSet, tau_sigma
from .errors import CausticError, ConfigError, IntegrationError

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10

# state layout of the augmented linear system
_MU0, _DMU0, _MU1, _DMU1, _LOGLAM, _I, _J, _K = range(8)


@dataclass(frozen=True)
class CharacteristicSolution:
    """Dense-output solutions mu0, mu1 (with derivatives) and lambda on [0, T]."""

    coeffs: CoefficientSet
    T: float
    tol: float
    sol: object
    caustics: tuple

    def _eval(self, t):
        t = self.coeffs.check_time(t)
        return self.sol(t)

    def mu0(self, t):
        return self._eval(t)[_MU0]

    def dmu0(self, t):
        return self._eval(t)[_DMU0]

    def mu1(self, t):
        return self._eval(t)[_MU1]

    def dmu1(self, t):
        return self._eval(t)[_DMU1]

    def lam(self, t):
        return np.exp(self._eval(t)[_LOGLAM])

    def raw(self, t) -> dict[str, np.ndarray]:
        """All components at ``t``: mu0, dmu0, mu1, dmu1, lam, I, J, K."""
        y = self._eval(t)
        return {"mu0": y[_MU0], "dmu0": y[_DMU0], "mu1": y[_MU1], "dmu1": y[_DMU1],
                "lam": np.exp(y[_LOGLAM]), "I": y[_I], "J": y[_J], "K": y[_K]}

    def wronskian(self, t):
        y = self._eval(t)
        return y[_DMU0] * y[_MU1] - y[_MU0] * y[_DMU1]

    def caustics_before(self, t):
        """Number of caustics strictly below ``t`` (vectorized)."""
        return np.searchsorted(np.asarray(self.caustics, dtype=float), np.asarray(t, dtype=float), side="left")

    def check_caustic(self, t, window: float | None = None):
        """Raise :class:`CausticError` if any ``t`` is within ``window`` of a caustic."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if window is None:
            window = 1e-7 * max(1.0, self.T)
        if np.any(t <= 0):
            raise CausticError(0.0, "kernel is singular at t = 0 (mu0(0) = 0)")
        for tc in self.caustics:
            hit = np.abs(t - tc) <= window
            if np.any(hit):
                raise CausticError(tc)
        # a zero sitting at the domain end can escape the event detector;
        # one Newton step gives the distance to the nearest zero directly
        y = self._eval(t)
        step = np.abs(y[_MU0]) / np.maximum(np.abs(y[_DMU0]), np.finfo(float).tiny)
        near = step <= window
        if np.any(near):
            i = int(np.argmax(near))
            raise CausticError(t[i] - y[_MU0][i] / y[_DMU0][i])


def solve_characteristic(coeffs: CoefficientSet, T: float | None = None, tol: float = DEFAULT_TOL,
                         method: str = "DOP853") -> CharacteristicSolution:
    """Integrate the characteristic equation and the driving integrals on [0, T].

    Uses an adaptive explicit Runge-Kutta scheme with dense output; zeros of
    mu0 on (0, T] are located by the integrator's event root finder.
    """
    T = coeffs.T if T is None else float(T)
    if T > coeffs.T * (1 + 1e-14):
        raise ConfigError(f"T={T} exceeds the coefficient domain {coeffs.T}")
    if not tol > 0:
        raise ConfigError("solver tolerance must be positive")
    a0 = float(coeffs.a(np.asarray(0.0)))
    if a0 == 0.0:
        raise ConfigError("a(0) = 0: the characteristic initial data mu0'(0) = 2a(0) must be nonzero")

    def rhs(t, y):
        tt = min(max(t, 0.0), coeffs.T)
        a, c, d, f, g = (float(fn(tt)) for fn in (coeffs.a, coeffs.c, coeffs.d, coeffs.f, coeffs.g))
        tau, sigma = tau_sigma(coeffs, tt)
        inv_lam = np.exp(-y[_LOGLAM])
        force = f - d * g / a
        dI = (force * y[_MU0] + g * y[_DMU0] / (2 * a)) * inv_lam
        dJ = (force * y[_MU1] + g * y[_DMU1] / (2 * a)) * inv_lam
        return [
            y[_DMU0], tau * y[_DMU0] - 4 * sigma * y[_MU0],
            y[_DMU1], tau * y[_DMU1] - 4 * sigma * y[_MU1],
            -(c - 2 * d), dI, dJ, y[_I] * dJ,
        ]

    def mu0_event(t, y):
        return y[_MU0]

    y0 = np.array([0.0, 2 * a0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    res = solve_ivp(rhs, (0.0, T), y0, method=method, rtol=tol, atol=tol,
                    dense_output=True, events=mu0_event)
    if res.status != 0:
        t_fail = res.t[-1] if len(res.t) else 0.0
        raise IntegrationError(f"characteristic integration failed at t={t_fail:.12g}: {res.message}")
    # mu0(0) = 0 itself registers as a crossing; keep genuine zeros only
    raw = sorted(float(t) for t in res.t_events[0] if t > 1e-9 * T)
    caustics = []
    for tc in raw:
        if not caustics or tc - caustics[-1] > 1e-9 * T:
            caustics.append(tc)
    if caustics:
        logger.info("caustics of mu0 on (0, %g]: %s", T, ", ".join(f"{c:.10g}" for c in caustics))
    return CharacteristicSolution(coeffs=coeffs, T=T, tol=tol, sol=res.sol, caustics=tuple(caustics))


@dataclass(frozen=True)
class FundamentalSolution:
    """The kernel functions alpha0 .. kappa0 of the Green's function.

    Every accessor raises :class:`CausticError` at zeros of mu0 (including t = 0).
    """

    char: CharacteristicSolution
    coeffs: CoefficientSet

    def _parts(self, t):
        self.char.check_caustic(t)
        return self.char.raw(t)

    def alpha0(self, t):
        r = self._parts(t)
        a, d = self.coeffs.a(t), self.coeffs.d(t)
        return r["dmu0"] / (4 * a * r["mu0"]) - d / (2 * a)

    def beta0(self, t):
        r = self._parts(t)
        return -r["lam"] / r["mu0"]

    def gamma0(self, t):
        r = self._parts(t)
        return r["mu1"] / (2 * r["mu0"]) + self.d0_over_2a0

    def delta0(self, t):
        r = self._parts(t)
        return r["lam"] * r["I"] / r["mu0"]

    def epsilon0(self, t):
        r = self._parts(t)
        return r["J"] - r["mu1"] * r["I"] / r["mu0"]

    def kappa0(self, t):
        r = self._parts(t)
        return r["mu1"] * r["I"] ** 2 / (2 * r["mu0"]) - r["K"]

    @property
    def d0_over_2a0(self) -> float:
        return float(self.coeffs.d(np.asarray(0.0)) / (2 * self.coeffs.a(np.asarray(0.0))))

    def all(self, t) -> dict[str, np.ndarray]:
        """alpha0..kappa0 together, plus mu0 and lambda."""
        r = self._parts(t)
        a, d = self.coeffs.a(t), self.coeffs.d(t)
        mu0, mu1, lam, I = r["mu0"], r["mu1"], r["lam"], r["I"]
        return {
            "alpha0": r["dmu0"] / (4 * a * mu0) - d / (2 * a),
            "beta0": -lam / mu0,
            "gamma0": mu1 / (2 * mu0) + self.d0_over_2a0,
            "delta0": lam * I / mu0,
            "epsilon0": r["J"] - mu1 * I / mu0,
            "kappa0": mu1 * I ** 2 / (2 * mu0) - r["K"],
            "mu0": mu0,
            "lam": lam,
        }

    # (E0)/(F0) quadrature forms, valid while mu0' has no zero on [0, t]
    def epsilon0_quadrature(self, t: float) -> float:
        """epsilon0 from the closed quadrature with 1/mu0' factors (cross-check only)."""
        cs, ch = self.coeffs, self.char
        self._check_no_turning_point(t)

        def force(s):
            return cs.f(s) - cs.d(s) * cs.g(s) / cs.a(s)

        def first(s):
            if s == 0.0:
                return 0.0
            _, sigma = tau_sigma(cs, s)
            return float(cs.a(s) * sigma * ch.lam(s) * ch.mu0(s) * self.delta0(s) / ch.dmu0(s) ** 2)

        def second(s):
            return float(cs.a(s) * ch.lam(s) * force(s) / ch.dmu0(s))

        q1 = quad(first, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        q2 = quad(second, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return float(-2 * cs.a(t) * ch.lam(t) * self.delta0(t) / ch.dmu0(t) + 8 * q1 + 2 * q2)

    def kappa0_quadrature(self, t: float) -> float:
        """kappa0 from the closed quadrature with 1/mu0' factors (cross-check only)."""
        cs, ch = self.coeffs, self.char
        self._check_no_turning_point(t)

        def md(s):
            return 0.0 if s == 0.0 else float(ch.mu0(s) * self.delta0(s))

        def first(s):
            _, sigma = tau_sigma(cs, s)
            return float(cs.a(s) * sigma * md(s) ** 2 / ch.dmu0(s) ** 2)

        def second(s):
            force = cs.f(s) - cs.d(s) * cs.g(s) / cs.a(s)
            return float(cs.a(s) * md(s) * force / ch.dmu0(s))

        q1 = quad(first, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        q2 = quad(second, 0.0, t, epsabs=1e-13, epsrel=1e-12, limit=200)[0]
        return float(cs.a(t) * ch.mu0(t) * self.delta0(t) ** 2 / ch.dmu0(t) - 4 * q1 - 2 * q2)

    def _check_no_turning_point(self, t):
        s = np.linspace(0.0, t, 401)
        dm = self.char.dmu0(s)
        if np.any(np.sign(dm) != np.sign(dm[0])):
            raise ValueError(f"mu0' changes sign on [0, {t}]; quadrature forms are singular")


def fundamental_solution(char: CharacteristicSolution, coeffs: CoefficientSet | None = None) -> FundamentalSolution:
    return FundamentalSolution(char=char, coeffs=coeffs if coeffs is not None else char.coeffs)


def _fd_step(t, scale=None):
    """Central-difference step: cbrt(eps) times the local length scale.

    The scale is |t| (bounded below) unless a smaller ``scale`` is supplied,
    e.g. the distance to a pole of the differentiated function.
    """
    length = np.maximum(np.abs(t), 1e-3)
    if scale is not None:
        length = np.minimum(length, scale)
    return np.cbrt(np.finfo(float).eps) * length


def newton_distance(value, slope):
    """|value / slope|: first-order distance to the nearest zero."""
    return np.abs(value) / np.maximum(np.abs(slope), np.finfo(float).tiny)


def system_residual(state_fn, coeffs: CoefficientSet, grid, c0: int, scale=None) -> float:
    """Max residual of the six-equation Riccati/Ermakov system along ``state_fn``.

    ``state_fn(t)`` must return a mapping with keys alpha, beta, gamma, delta,
    epsilon, kappa (arrays).  Derivatives are taken by central differences
    whose step shrinks with the optional per-point length ``scale``.
    """
    t = np.asarray(grid, dtype=float)
    h = _fd_step(t, scale)
    plus, minus, mid = state_fn(t + h), state_fn(t - h), state_fn(t)
    d = {k: (plus[k] - minus[k]) / (2 * h) for k in ("alpha", "beta", "gamma", "delta", "epsilon", "kappa")}
    v = coeffs.evaluate(t)
    a, b, c, f, g = v["a"], v["b"], v["c"], v["f"], v["g"]
    al, be, ga, de, ep = (mid[k] for k in ("alpha", "beta", "gamma", "delta", "epsilon"))
    res = [
        d["alpha"] + b + 2 * c * al + 4 * a * al ** 2 - c0 * a * be ** 4,
        d["beta"] + (c + 4 * a * al) * be,
        d["gamma"] + a * be ** 2,
        d["delta"] + (c + 4 * a * al) * de - f - 2 * g * al - 2 * c0 * a * be ** 3 * ep,
        d["epsilon"] - (g - 2 * a * de) * be,
        d["kappa"] - g * de + a * de ** 2 - c0 * a * be ** 2 * ep ** 2,
    ]
    return float(max(np.max(np.abs(r)) for r in res))


def verify_riccati_residual(fund: FundamentalSolution, coeffs: CoefficientSet, grid) -> float:
    """Residual of the fundamental solution in the Riccati-type system (c0 = 0)."""
    t = np.asarray(grid, dtype=float)
    scale = newton_distance(fund.char.mu0(t), fund.char.dmu0(t))
    h = _fd_step(t, scale)
    fund.char.check_caustic(np.concatenate([t - h, t, t + h]))

    def state(s):
        v = fund.all(s)
        return {"alpha": v["alpha0"], "beta": v["beta0"], "gamma": v["gamma0"],
                "delta": v["delta0"], "epsilon": v["epsilon0"], "kappa": v["kappa0"]}

    return system_residual(state, coeffs, t, c0=0, scale=scale)
