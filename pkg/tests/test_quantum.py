import math

import numpy as np
import pytest
from scipy.special import eval_hermite, gammaln

from qho.errors import CausticError, ConfigError
from qho.quantum import (autonomous_residual, eigenstate, eigenstate_field, gauss_hermite_transform, greens,
                         greens_asymptotic, hermite, hermite_function, propagate, propagated_field,
                         schrodinger_residual, support_grid, to_autonomous)
from qho.superposition import InitialData, KernelState, ermakov_map, riccati_map
from qho.wavefield import WaveField

from conftest import GENERIC_INIT, build, random_fund


def ho_state(n, x):
    """Normalized oscillator eigenfunction from scipy's Hermite polynomials."""
    log_norm = 0.5 * (n * math.log(2) + gammaln(n + 1) + 0.5 * math.log(math.pi))
    return eval_hermite(n, x) * np.exp(-x * x / 2 - log_norm)


def free_gaussian(x, t, x0=0.0, k=0.0):
    """Exact solution of i psi_t = -psi_xx / 2 from pi^-1/4 exp(-(x-x0)^2/2 + i k x)."""
    s = 1 + 1j * t
    return (np.pi ** -0.25 / np.sqrt(s) * np.exp(-(x - x0 - k * t) ** 2 / (2 * s)
                                                 + 1j * k * (x - x0) - 0.5j * k * k * t + 1j * k * x0))


# -- Hermite -----------------------------------------------------------------------

@pytest.mark.parametrize("n", [0, 1, 2, 5, 12, 20])
def test_hermite_matches_scipy(n):
    x = np.linspace(-4, 4, 33)
    assert np.allclose(hermite(n, x), eval_hermite(n, x), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("n", [0, 3, 10, 30])
def test_hermite_function_matches_log_gamma_normalization(n):
    x = np.linspace(-6, 6, 41)
    assert np.allclose(hermite_function(n, x), ho_state(n, x), rtol=1e-10, atol=1e-14)


def test_hermite_function_normalized_at_high_degree():
    x = np.linspace(-30, 30, 6001)
    for n in (150, 200):
        h = hermite_function(n, x)
        assert np.all(np.isfinite(h))
        assert np.trapezoid(h * h, x) == pytest.approx(1.0, abs=1e-10)


def test_hermite_limits():
    with pytest.raises(ValueError):
        hermite(201, 0.5)
    with pytest.raises(ValueError):
        hermite(-1, 0.5)
    with pytest.raises(OverflowError):
        hermite(200, 1e3)


# -- eigenstates ---------------------------------------------------------------------

@pytest.mark.parametrize("n", range(4))
def test_sho_eigenstates_are_stationary(n):
    fund = build("sho", T=2.0)
    x = np.linspace(-6, 6, 61)
    for t in (0.0, 0.8, 2.0):
        st = ermakov_map(fund, InitialData(), t)
        assert np.allclose(eigenstate(n, st, x), ho_state(n, x) * np.exp(-1j * (n + 0.5) * t), atol=1e-9)


def test_eigenstate_needs_positive_mu():
    st = KernelState(t=0.0, mu=-1.0, alpha=0.0, beta=1.0, gamma=0.0, delta=0.0, epsilon=0.0, kappa=0.0, c0=1)
    with pytest.raises(ValueError):
        eigenstate(0, st, np.zeros(3))


@pytest.mark.parametrize("seed", range(3))
def test_norm_law(seed):
    fund = random_fund(seed)
    t = np.linspace(0.05, 1.0, 8)
    st = ermakov_map(fund, GENERIC_INIT, t)
    x = support_grid(2, st, spacing=0.02)
    field = eigenstate_field(2, fund, GENERIC_INIT, x, t)
    expected = 1 / (GENERIC_INIT.beta * GENERIC_INIT.mu * fund.char.lam(t))
    assert np.max(np.abs(field.norms() - expected)) < 1e-6


def test_unit_norm_in_hermitian_gauge():
    fund = random_fund(4, hermitian=True)
    t = np.linspace(0.05, 1.0, 5)
    x = support_grid(0, ermakov_map(fund, InitialData(), t), spacing=0.02)
    assert np.allclose(eigenstate_field(0, fund, InitialData(), x, t).norms(), 1.0, atol=1e-6)


def test_orthogonality_in_hermitian_gauge():
    fund = random_fund(1, hermitian=True)
    for t in (0.1, 0.5, 1.0):
        st = ermakov_map(fund, GENERIC_INIT, t)
        x = support_grid(6, st, spacing=0.02)
        psi = np.array([eigenstate(n, st, x) for n in range(7)])
        gram = psi.conj() @ psi.T * (x[1] - x[0])
        assert np.max(np.abs(gram - np.diag(np.diag(gram)))) < 1e-6


# -- Green's function --------------------------------------------------------------------

def test_sho_kernel_is_mehler():
    fund = build("sho", T=1.0)
    x, y = np.meshgrid(np.linspace(-2, 2, 7), np.linspace(-2, 2, 5))
    t = 1.0
    mehler = np.exp(1j * ((x * x + y * y) * np.cos(t) - 2 * x * y) / (2 * np.sin(t))) / np.sqrt(2j * np.pi * np.sin(t))
    assert np.allclose(greens(fund, x, y, t), mehler, rtol=1e-9)


@pytest.mark.parametrize("t,n", [(4.0, 0), (4.0, 1), (7.0, 0), (7.0, 2)])
def test_maslov_phase_past_caustics(t, n):
    # the kernel must map eigenstates to exp(-i (n + 1/2) t) times themselves
    fund = build("sho", T=8.0)
    y = np.linspace(-12, 12, 4001)
    x = np.linspace(-2, 2, 9)
    G = greens(fund, x[:, None], y[None, :], t)
    out = np.trapezoid(G * ho_state(n, y)[None, :], y, axis=1)
    assert np.allclose(out, np.exp(-1j * (n + 0.5) * t) * ho_state(n, x), atol=1e-8)


def test_greens_refuses_caustic():
    fund = build("sho", T=np.pi)
    with pytest.raises(CausticError) as info:
        greens(fund, 0.1, 0.2, np.pi)
    assert info.value.t == pytest.approx(np.pi, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_small_time_asymptotics(seed):
    fund = random_fund(seed)
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-2, 2, size=(2, 20))
    for t, tol in ((1e-2, 0.05), (1e-3, 0.005)):
        ratio = greens(fund, x, y, t) / greens_asymptotic(fund.coeffs, x, y, t)
        assert np.max(np.abs(ratio - 1)) < tol


def test_asymptotic_prefactor_matches_free_kernel():
    fund = build("free", T=1.0)
    assert greens(fund, 0.3, -0.2, 0.5) == pytest.approx(greens_asymptotic(fund.coeffs, 0.3, -0.2, 0.5), rel=1e-9)


# -- propagation -----------------------------------------------------------------------------

@pytest.mark.parametrize("preset", ["sho", "driven-sho"])
@pytest.mark.parametrize("n", range(4))
def test_propagation_reproduces_eigenstates(funds, preset, n):
    fund = funds[preset]
    st0 = KernelState.initial(GENERIC_INIT, c0=1)
    y = support_grid(n, st0, spacing=0.02)
    psi0 = WaveField(y, [0.0], eigenstate(n, st0, y)[None, :])
    x = np.linspace(-5, 5, 101)
    got = propagate(fund, psi0, x, 0.7, func=lambda s: eigenstate(n, st0, s)).values[0]
    want = eigenstate(n, ermakov_map(fund, GENERIC_INIT, 0.7), x)
    assert np.max(np.abs(got - want)) < 1e-6


@pytest.mark.parametrize("t", [0.01, 0.3, 1.0])
def test_free_gaussian_from_samples(funds, t):
    y = np.linspace(-12, 12, 961)
    psi0 = WaveField(y, [0.0], free_gaussian(y, 0.0, x0=1.0, k=0.5)[None, :])
    x = np.linspace(-6, 6, 121)
    got = propagate(funds["free"], psi0, x, t).values[0]
    assert np.max(np.abs(got - free_gaussian(x, t, x0=1.0, k=0.5))) < 1e-10


def test_semigroup(funds):
    for name in ("free", "sho"):
        fund = funds[name]
        y = np.linspace(-12, 12, 1201)
        psi0 = WaveField(y, [0.0], free_gaussian(y, 0.0, x0=0.5, k=-0.3)[None, :])
        half = propagate(fund, psi0, np.linspace(-14, 14, 1401), 0.4)
        x = np.linspace(-4, 4, 41)
        twice = propagate(fund, half, x, 0.4).values[0]
        once = propagate(fund, psi0, x, 0.8).values[0]
        assert np.max(np.abs(twice - once)) < 1e-5


def test_small_time_limit_is_identity(funds):
    # psi(t) = psi0 + t psi_t(0) + O(t^2) with psi_t = (i/2) psi0'' for the free preset
    y = np.linspace(-12, 12, 961)
    psi0 = WaveField(y, [0.0], free_gaussian(y, 0.0)[None, :])
    x = np.linspace(-5, 5, 41)
    start = free_gaussian(x, 0.0)
    dpsi = 0.5j * (x * x - 1) * start
    for t in (1e-2, 1e-3):
        got = propagate(funds["free"], psi0, x, t).values[0]
        assert np.max(np.abs(got - start - t * dpsi)) < t * t
    assert np.max(np.abs(got - start)) < 1e-3


def test_propagation_refuses_past_caustic(sho_long):
    y = np.linspace(-10, 10, 401)
    psi0 = WaveField(y, [0.0], free_gaussian(y, 0.0)[None, :])
    with pytest.raises(CausticError):
        propagate(sho_long, psi0, y, 4.0)


def test_propagation_requires_decay(funds):
    y = np.linspace(-3, 3, 101)
    with pytest.raises(ValueError, match="decay"):
        propagate(funds["free"], WaveField(y, [0.0], np.exp(-y * y / 8)[None, :]), y, 0.5)


def test_parallel_propagation_bitwise_identical(funds):
    y = np.linspace(-10, 10, 801)
    psi0 = WaveField(y, [0.0], free_gaussian(y, 0.0, k=1.0)[None, :])
    x = np.linspace(-8, 8, 512)
    t = np.linspace(0.05, 1.0, 9)
    a = propagated_field(funds["damped"], psi0, x, t, threads=1).values
    b = propagated_field(funds["damped"], psi0, x, t, threads=4).values
    assert np.array_equal(a, b)


# -- Gauss transform --------------------------------------------------------------------

def test_gauss_transform_random_triples():
    rng = np.random.default_rng(7)
    for _ in range(20):
        lam = rng.uniform(0.5, 2.0)
        a = rng.uniform(-0.95, 0.95) * lam
        x = rng.uniform(-2, 2)
        for n in range(9):
            lhs, rhs = gauss_hermite_transform(n, lam, a, x)
            assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(rhs))


def test_gauss_transform_degree_zero_is_gaussian_integral():
    lhs, rhs = gauss_hermite_transform(0, 1.3, 0.2, 0.7)
    assert lhs == pytest.approx(math.sqrt(math.pi) / 1.3, rel=1e-13)
    assert rhs == pytest.approx(math.sqrt(math.pi) / 1.3, rel=1e-15)


def test_gauss_transform_domain():
    with pytest.raises(ValueError):
        gauss_hermite_transform(2, 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        gauss_hermite_transform(2, -1.0, 0.1, 0.0)


# -- PDE residuals --------------------------------------------------------------------------

def test_pde_residual_sho_ground_state(funds):
    x = np.linspace(-8, 8, 512)
    t = np.linspace(0.1, 1.0, 128)
    field = eigenstate_field(0, funds["sho"], InitialData(), x, t)
    assert schrodinger_residual(field, funds["sho"].coeffs) < 1e-4


def test_pde_residual_driven_second_state(funds):
    x = np.linspace(-8, 8, 512)
    t = np.linspace(0.05, 1.0, 128)
    field = eigenstate_field(2, funds["driven-sho"], InitialData(), x, t)
    assert schrodinger_residual(field, funds["driven-sho"].coeffs) < 1e-3


def test_pde_residual_free_propagated_gaussian(funds):
    y = np.linspace(-12, 12, 961)
    psi0 = WaveField(y, [0.0], free_gaussian(y, 0.0, k=0.5)[None, :])
    x = np.linspace(-8, 8, 512)
    field = propagated_field(funds["free"], psi0, x, np.linspace(0.05, 1.0, 128))
    assert schrodinger_residual(field, funds["free"].coeffs) < 1e-4


def test_pde_residual_detects_wrong_equation(funds):
    x = np.linspace(-8, 8, 512)
    t = np.linspace(0.1, 1.0, 64)
    field = eigenstate_field(0, funds["sho"], InitialData(), x, t)
    assert schrodinger_residual(field, funds["free"].coeffs) > 0.1


def test_pde_residual_second_order_in_time(random_funds):
    fund = random_funds[0]
    x = np.linspace(-12, 12, 768)
    r = [schrodinger_residual(eigenstate_field(0, fund, InitialData(), x, np.linspace(0.05, 1, m)), fund.coeffs)
         for m in (33, 65)]
    assert math.log2(r[0] / r[1]) > 1.8


def test_pde_residual_grid_too_coarse(funds):
    field = eigenstate_field(0, funds["sho"], InitialData(), np.linspace(-8, 8, 64), [0.1, 0.2, 0.3])
    with pytest.raises(ValueError, match="coarse"):
        schrodinger_residual(field, funds["sho"].coeffs)


# -- autonomous form -------------------------------------------------------------------------

def test_autonomous_residual_sho_ground_state(funds):
    x = np.linspace(-8, 8, 512)
    t = np.linspace(0.05, 1.0, 64)
    states = ermakov_map(funds["sho"], InitialData(), t)
    field = eigenstate_field(0, funds["sho"], InitialData(), x, t)
    assert autonomous_residual(field, states, c0=1) < 1e-3


def test_autonomous_residual_free_riccati_frame(funds):
    x = np.linspace(-10, 10, 512)
    t = np.linspace(0.05, 1.0, 64)
    field = WaveField(x, t, np.array([free_gaussian(x, tj, k=0.3) for tj in t]))
    states = riccati_map(funds["free"], InitialData(alpha=0.3, beta=0.8, epsilon=0.2), t)
    assert autonomous_residual(field, states, c0=0) < 1e-3
    # the same field is not a solution in the oscillator frame
    assert autonomous_residual(field, states, c0=1) > 1e-2


def test_autonomous_slice_at_time_zero(funds):
    x = np.linspace(-6, 6, 64)
    init = GENERIC_INIT
    field = eigenstate_field(1, funds["sho"], init, x, [0.0])
    states = ermakov_map(funds["sho"], init, np.array([0.0]))
    xi, tau, chi = to_autonomous(field, states)
    direct = np.sqrt(init.mu) * np.exp(-1j * (init.alpha * x ** 2 + init.delta * x + init.kappa)) * field.values[0]
    assert np.array_equal(chi[0], direct)
    assert np.allclose(xi[0], init.beta * x + init.epsilon)
    assert tau[0] == init.gamma


def test_autonomous_residual_requires_monotone_tau(sho_long):
    x = np.linspace(-8, 8, 128)
    t = np.linspace(0.1, 1.0, 8)
    st = ermakov_map(sho_long, InitialData(), t)
    frozen = KernelState(**{**st.__dict__, "gamma": np.full(len(t), 0.3)})
    field = eigenstate_field(0, sho_long, InitialData(), x, t)
    with pytest.raises(ValueError, match="monotone"):
        autonomous_residual(field, frozen, c0=1)
