"""Wave functions, the Green's function and the propagation integral.

Exact eigenstates are built from an Ermakov-type state (c0 = 1)::

    psi_n = exp(i(alpha x^2 + delta x + kappa) + i(2n+1) gamma) / sqrt(2^n n! mu sqrt(pi))
            * exp(-xi^2/2) H_n(xi),        xi = beta x + epsilon

and the Green's function from the fundamental solution (c0 = 0)::

    G(x, y, t) = (2 pi i mu0)^(-1/2) exp(i(alpha0 x^2 + beta0 x y + gamma0 y^2
                                           + delta0 x + epsilon0 y + kappa0)).
"""
from __future__ import annotations

import logging
import math

import numpy as np
from scipy.integrate import quad, simpson
from scipy.interpolate import CubicSpline
from scipy.signal import resample

from .characteristic import FundamentalSolution
from .coefficients import CoefficientSet
from .errors import CausticError, ConfigError, DomainError
from .superposition import InitialData, KernelState, ermakov_map, superposition_map
from .wavefield import WaveField, parallel_map

logger = logging.getLogger(__name__)

HERMITE_MAX = 200


def hermite(n: int, x):
    """Physicists' Hermite polynomial H_n(x) by the three-term recurrence."""
    if n < 0 or int(n) != n:
        raise ValueError("Hermite degree must be a non-negative integer")
    if n > HERMITE_MAX:
        raise ValueError(f"Hermite degree {n} exceeds the supported maximum {HERMITE_MAX}")
    x = np.asarray(x, dtype=float)
    h_prev, h = np.ones_like(x), 2 * x
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, int(n)):
            h_prev, h = h, 2 * x * h - 2 * k * h_prev
    if not np.all(np.isfinite(h)):
        raise OverflowError(f"H_{n} overflows at |x| = {np.max(np.abs(x)):.3g}")
    return h if h.ndim else float(h)


def hermite_function(n: int, xi):
    """exp(-xi^2/2) H_n(xi) / sqrt(2^n n! sqrt(pi)), overflow-free.

    The normalized recurrence
    h_{k+1} = sqrt(2/(k+1)) xi h_k - sqrt(k/(k+1)) h_{k-1} keeps every term O(1).
    """
    if n < 0 or n > HERMITE_MAX:
        raise ValueError(f"Hermite degree must lie in [0, {HERMITE_MAX}]")
    xi = np.asarray(xi, dtype=float)
    h_prev = np.pi ** -0.25 * np.exp(-0.5 * xi ** 2)
    if n == 0:
        return h_prev
    h = math.sqrt(2.0) * xi * h_prev
    for k in range(1, n):
        h_prev, h = h, math.sqrt(2.0 / (k + 1)) * xi * h - math.sqrt(k / (k + 1)) * h_prev
    return h


def eigenstate(n: int, state: KernelState, x):
    """psi_n(x, t) for the Ermakov-type state ``state`` (scalar fields)."""
    mu = float(state.mu)
    if not mu > 0:
        raise ValueError(f"eigenstate needs mu > 0, got {mu}")
    x = np.asarray(x, dtype=float)
    xi = state.beta * x + state.epsilon
    phase = state.alpha * x ** 2 + state.delta * x + state.kappa + (2 * n + 1) * state.gamma
    return np.exp(1j * phase) * hermite_function(n, xi) / math.sqrt(mu)


def support_interval(n: int, state: KernelState, tol: float = 1e-13) -> tuple[float, float]:
    """x interval outside which |psi_n| stays below ``tol`` times its peak, for all slices.

    Uses the envelope bound |h_n(xi)| <~ exp(-(|xi| - sqrt(2n+1))^2 / 2).
    """
    reach = math.sqrt(2 * math.log(1 / tol)) + math.sqrt(2 * n + 1) + 1.0
    beta = np.atleast_1d(state.beta)
    eps = np.atleast_1d(state.epsilon)
    ends = np.concatenate([(reach - eps) / beta, (-reach - eps) / beta])
    return float(ends.min()), float(ends.max())


def support_grid(n: int, state: KernelState, spacing: float, tol: float = 1e-13, odd: bool = True) -> np.ndarray:
    """Uniform grid over :func:`support_interval` with at most ``spacing`` between nodes."""
    lo, hi = support_interval(n, state, tol)
    m = max(16, int(math.ceil((hi - lo) / spacing)) + 1)
    if odd:
        m += 1 - m % 2
    return np.linspace(lo, hi, m)


def _sqrt_prefactor(fund: FundamentalSolution, mu0, t):
    """(2 pi i mu0)^(-1/2) continued through caustics (Maslov index) from small t."""
    sign_a = 1.0 if float(fund.coeffs.a(np.asarray(0.0))) > 0 else -1.0
    k = fund.char.caustics_before(t)
    return np.exp(-1j * sign_a * (np.pi / 4 + np.pi * k / 2)) / np.sqrt(2 * np.pi * np.abs(mu0))


def greens(fund: FundamentalSolution, x, y, t: float):
    """Green's function G(x, y, t); ``x`` and ``y`` broadcast against each other."""
    t = float(t)
    fund.char.check_caustic(t)
    v = fund.all(t)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phase = (v["alpha0"] * x ** 2 + v["beta0"] * x * y + v["gamma0"] * y ** 2
             + v["delta0"] * x + v["epsilon0"] * y + v["kappa0"])
    return _sqrt_prefactor(fund, v["mu0"], t) * np.exp(1j * phase)


def greens_asymptotic(coeffs: CoefficientSet, x, y, t: float):
    """Small-t form of G built from a(0), a'(0), c(0), g(0).

    The prefactor is (4 pi i a(0) t)^(-1/2), which is what mu0 ~ 2 a(0) t gives.
    """
    v = coeffs.evaluate(0.0)
    a, da, c, g = (float(v[k]) for k in ("a", "da", "c", "g"))
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phase = ((x - y) ** 2 / (4 * a * t)
             - (da / (8 * a * a) * (x - y) ** 2 + c / (4 * a) * (x ** 2 - y ** 2) - g / (2 * a) * (x - y)))
    return np.exp(1j * phase) / np.sqrt(4j * np.pi * a * t)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.ones(n)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return w * h / 3.0


def _is_uniform(y, rtol: float = 1e-9) -> bool:
    d = np.diff(y)
    return bool(np.all(np.abs(d - d[0]) <= rtol * d[0]))


def _band_limited_refine(y0, v0, n_min: int):
    """Trigonometric interpolation of decaying samples onto a grid refined by an integer factor.

    The samples are treated as one period of a band-limited signal (they
    vanish at both ends), so the refined values are spectrally accurate,
    unlike piecewise-polynomial interpolation whose error spectrum reaches
    the high wavenumbers the kernel probes at small t.  The refined grid
    keeps the original nodes and has an odd number of points.
    """
    m0 = len(y0)
    factor = max(1, math.ceil((n_min - 1) / (m0 - 1)))
    if ((m0 - 1) * factor) % 2:
        factor += 1
    fine = resample(v0, m0 * factor)
    n = (m0 - 1) * factor + 1
    y = y0[0] + (y0[1] - y0[0]) / factor * np.arange(n)
    y[-1] = y0[-1]
    return y, np.asarray(fine[:n], dtype=complex)


def propagate(fund: FundamentalSolution, initial, x_out, t: float, func=None,
              decay_tol: float = 1e-12, points_per_period: int = 8, min_nodes: int = 1025,
              threads: int = 1) -> WaveField:
    """psi(x, t) = int G(x, y, t) psi(y, 0) dy by composite Simpson quadrature.

    ``initial`` is a single-slice :class:`WaveField` (or an ``(y, values)`` pair)
    whose x range is the truncated support.  If ``func`` is given it is used to
    evaluate the initial data at the quadrature nodes; otherwise the samples are
    interpolated with cubic splines.  The node spacing resolves the local
    oscillation of the integrand with at least ``points_per_period`` points.
    """
    if isinstance(initial, WaveField):
        y0, v0 = initial.x, initial.values[0]
    else:
        y0, v0 = (np.asarray(a) for a in initial)
    v0 = np.asarray(v0, dtype=complex)
    peak = np.max(np.abs(v0))
    if max(abs(v0[0]), abs(v0[-1])) > decay_tol * peak:
        raise ValueError("initial data does not decay at the support boundary "
                         f"(|psi| = {max(abs(v0[0]), abs(v0[-1])) / peak:.2e} of peak)")
    t = float(t)
    fund.char.check_caustic(t)
    if fund.char.caustics_before(t) > 0:
        raise CausticError(fund.char.caustics[0], "propagation across a caustic is not supported")
    x_out = np.asarray(x_out, dtype=float)
    v = fund.all(t)
    lo, hi = float(y0[0]), float(y0[-1])

    # local wavenumber of kernel and data in y
    corners = [v["beta0"] * xx + 2 * v["gamma0"] * yy + v["epsilon0"]
               for xx in (x_out.min(), x_out.max()) for yy in (lo, hi)]
    k_kernel = float(np.max(np.abs(corners)))
    big = np.abs(v0) > 1e-8 * peak
    dv = np.gradient(v0, y0)
    k_data = float(np.max(np.abs((dv[big] / v0[big]).imag))) if np.any(big) else 0.0
    n = int(math.ceil((hi - lo) * points_per_period * (k_kernel + k_data) / (2 * math.pi)))
    n = max(n, min_nodes, len(y0))
    if func is None and _is_uniform(y0):
        y, phi = _band_limited_refine(y0, v0, n)
        n = len(y)
    else:
        n += 1 - n % 2
        y = np.linspace(lo, hi, n)
        if func is not None:
            phi = np.asarray(func(y), dtype=complex)
        else:
            phi = CubicSpline(y0, v0.real)(y) + 1j * CubicSpline(y0, v0.imag)(y)
    logger.debug("propagate t=%g: %d quadrature nodes (k_kernel=%.3g, k_data=%.3g)", t, n, k_kernel, k_data)

    inner = np.exp(1j * (v["gamma0"] * y ** 2 + v["epsilon0"] * y)) * phi * _simpson_weights(n, y[1] - y[0])
    outer = _sqrt_prefactor(fund, v["mu0"], t) * np.exp(1j * (v["alpha0"] * x_out ** 2 + v["delta0"] * x_out + v["kappa0"]))
    rows = max(1, (1 << 21) // n)
    chunks = [x_out[i:i + rows] for i in range(0, len(x_out), rows)]

    def block(xs):
        return (np.exp(1j * v["beta0"] * np.multiply.outer(xs, y)) * inner).sum(axis=1)

    values = outer * np.concatenate(parallel_map(block, chunks, threads))
    return WaveField(x_out, [t], values[None, :], {"state": "propagated"})


def _hermite_scalar(n: int, z: float) -> float:
    h_prev, h = 1.0, 2.0 * z
    if n == 0:
        return 1.0
    for k in range(1, n):
        h_prev, h = h, 2.0 * z * h - 2.0 * k * h_prev
    return h


def _gauss_integrand(n, lam, a_scale, x):
    def integrand(y):
        return math.exp(-lam ** 2 * (x - y) ** 2) * _hermite_scalar(n, a_scale * y)
    return integrand


def _gauss_mass(n, lam, a_scale, x) -> float:
    """L1 norm of the Gauss-transform integrand (sets the attainable absolute accuracy)."""
    f = _gauss_integrand(n, lam, a_scale, x)
    half = 10.0 / lam
    return quad(lambda y: abs(f(y)), x - half, x + half, epsrel=1e-6, limit=400, points=[x])[0]


def gauss_hermite_transform(n: int, lam: float, a_scale: float, x: float):
    """Both sides of the Gauss transform of H_n.

    lhs = int exp(-lam^2 (x-y)^2) H_n(a y) dy          (adaptive quadrature)
    rhs = sqrt(pi)/lam^(n+1) (lam^2 - a^2)^(n/2) H_n(lam a x / sqrt(lam^2 - a^2))
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not lam ** 2 > a_scale ** 2:
        raise ValueError("real-branch Gauss transform needs lam^2 > a^2")
    half = 10.0 / lam
    floor = 1e-13 * _gauss_mass(n, lam, a_scale, x)
    lhs = quad(_gauss_integrand(n, lam, a_scale, x), x - half, x + half,
               epsabs=floor, epsrel=1e-12, limit=400, points=[x])[0]
    root = math.sqrt(lam ** 2 - a_scale ** 2)
    rhs = math.sqrt(math.pi) / lam ** (n + 1) * root ** n * hermite(n, lam * a_scale * x / root)
    return lhs, rhs


def gauss_transform_error(n: int, lam: float, a_scale: float, x: float) -> float:
    """Relative disagreement |lhs - rhs| / max(1, |rhs|) of the Gauss transform."""
    lhs, rhs = gauss_hermite_transform(n, lam, a_scale, x)
    return abs(lhs - rhs) / max(1.0, abs(rhs))


# -- residual checks --------------------------------------------------------

def _d_x4(v, h, axis=-1):
    """4th-order central first and second x-derivatives on interior points [2:-2]."""
    v = np.moveaxis(v, axis, -1)
    m2, m1, p1, p2 = v[..., :-4], v[..., 1:-3], v[..., 3:-1], v[..., 4:]
    c = v[..., 2:-2]
    d1 = (m2 - 8 * m1 + 8 * p1 - p2) / (12 * h)
    d2 = (-m2 + 16 * m1 - 30 * c + 16 * p1 - p2) / (12 * h * h)
    return np.moveaxis(d1, -1, axis), np.moveaxis(d2, -1, axis)


def schrodinger_residual(field: WaveField, coeffs: CoefficientSet) -> float:
    """Normalized residual of the quadratic Schroedinger equation on the grid interior.

    |i psi_t + a psi_xx - b x^2 psi + i c x psi_x + i d psi + f x psi - i g psi_x| / max|psi|
    with 4th-order x and 2nd-order t central differences.
    """
    if len(field.x) < 5 or len(field.t) < 5:
        raise ValueError("grid too coarse: need at least 5 points per direction")
    if not (field.is_uniform("x") and field.is_uniform("t")):
        raise ValueError("schrodinger_residual needs uniform x and t grids")
    psi = field.values
    dt = field.t[1] - field.t[0]
    psi_t = (psi[2:, 2:-2] - psi[:-2, 2:-2]) / (2 * dt)
    d1, d2 = _d_x4(psi[1:-1], field.dx)
    x = field.x[2:-2]
    v = coeffs.evaluate(field.t[1:-1])
    a, b, c, d, f, g = (v[k][:, None] for k in ("a", "b", "c", "d", "f", "g"))
    p = psi[1:-1, 2:-2]
    res = 1j * psi_t + a * d2 - b * x ** 2 * p + 1j * c * x * d1 + 1j * d * p + f * x * p - 1j * g * d1
    return float(np.max(np.abs(res)) / np.max(np.abs(psi)))


def to_autonomous(field: WaveField, states: KernelState):
    """chi(xi, tau) = sqrt(mu) exp(-i(alpha x^2 + delta x + kappa)) psi(x, t) at the field's nodes.

    Returns (xi, tau, chi) with ``xi[j, i] = beta_j x_i + epsilon_j`` and ``tau = gamma``.
    """
    if len(states) != len(field.t) or not np.allclose(np.atleast_1d(states.t), field.t, rtol=0, atol=1e-12):
        raise ValueError("states must be sampled on the field's t grid")
    col = {k: np.atleast_1d(getattr(states, k))[:, None] for k in ("mu", "alpha", "beta", "delta", "epsilon", "kappa")}
    x = field.x[None, :]
    if np.any(col["beta"] == 0):
        raise ValueError("beta vanishes: x -> xi is not invertible")
    chi = np.sqrt(col["mu"]) * np.exp(-1j * (col["alpha"] * x ** 2 + col["delta"] * x + col["kappa"])) * field.values
    xi = col["beta"] * x + col["epsilon"]
    return xi, np.atleast_1d(states.gamma).astype(float), chi


def autonomous_residual(field: WaveField, states: KernelState, c0: int) -> float:
    """Residual of -i chi_tau + chi_xixi - c0 xi^2 chi for the transformed field.

    Each slice is resampled onto a common uniform xi grid by cubic splines;
    chi_tau uses second-order differences on the (non-uniform) tau = gamma grid.
    """
    if len(field.t) < 5 or len(field.x) < 5:
        raise ValueError("grid too coarse: need at least 5 points per direction")
    xi, tau, chi = to_autonomous(field, states)
    dtau = np.diff(tau)
    if not (np.all(dtau > 0) or np.all(dtau < 0)):
        raise ValueError("tau = gamma(t) is not strictly monotone on the grid")
    lo = np.max(np.min(xi, axis=1))
    hi = np.min(np.max(xi, axis=1))
    if not hi > lo:
        raise ValueError("xi ranges of the slices do not overlap")
    grid = np.linspace(lo, hi, len(field.x))
    X = np.empty((len(tau), len(grid)), dtype=complex)
    for j in range(len(tau)):
        order = np.argsort(xi[j])
        xs, cs = xi[j][order], chi[j][order]
        X[j] = CubicSpline(xs, cs.real)(grid) + 1j * CubicSpline(xs, cs.imag)(grid)
    if tau[0] > tau[-1]:
        tau, X = tau[::-1], X[::-1]
    chi_tau = np.gradient(X, tau, axis=0)[1:-1, 2:-2]
    _, chi_xx = _d_x4(X[1:-1], grid[1] - grid[0])
    g = grid[2:-2]
    res = -1j * chi_tau + chi_xx - c0 * g ** 2 * X[1:-1, 2:-2]
    return float(np.max(np.abs(res)) / np.max(np.abs(X)))


# -- field builders ---------------------------------------------------------

def eigenstate_field(n: int, fund: FundamentalSolution, init: InitialData, x, t, threads: int = 1) -> WaveField:
    """psi_n on the (t, x) grid; slices are evaluated independently (optionally in parallel)."""
    x = np.asarray(x, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    states = ermakov_map(fund, init, t)
    rows = parallel_map(lambda j: eigenstate(n, states.at(j), x), range(len(t)), threads)
    meta = {"state": f"eigenstate {n}", "preset": fund.coeffs.name, "params": dict(fund.coeffs.params),
            "initial": dict(zip(("mu", "alpha", "beta", "gamma", "delta", "epsilon", "kappa"), init.as_tuple()))}
    return WaveField(x, t, np.vstack(rows), meta)


def propagated_field(fund: FundamentalSolution, initial, x, t, func=None, threads: int = 1, **kw) -> WaveField:
    """Propagate ``initial`` to every time in ``t`` (slices in parallel)."""
    x = np.asarray(x, dtype=float)
    t = np.atleast_1d(np.asarray(t, dtype=float))

    def one(tj):
        if tj == 0.0:
            if func is not None:
                return np.asarray(func(x), dtype=complex)
            y0, v0 = (initial.x, initial.values[0]) if isinstance(initial, WaveField) else initial
            return CubicSpline(y0, np.real(v0))(x) + 1j * CubicSpline(y0, np.imag(v0))(x)
        return propagate(fund, initial, x, tj, func=func, **kw).values[0]

    rows = parallel_map(one, list(t), threads)
    return WaveField(x, t, np.vstack(rows), {"state": "propagated", "preset": fund.coeffs.name,
                                             "params": dict(fund.coeffs.params)})


def state_trajectory(fund: FundamentalSolution, init: InitialData, t, c0: int = 1) -> KernelState:
    return superposition_map(fund, init, np.atleast_1d(np.asarray(t, dtype=float)), c0)
