import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qho.errors import ConfigError, DegenerateFocusError
from qho.superposition import (STATE_KEYS, InitialData, continuity_orders, ermakov_map, ermakov_residual,
                               map_residual, mu_pinney, riccati_map)

from conftest import GENERIC_INIT, build, random_fund

GRID = np.linspace(0.05, 0.95, 30)


def literal_riccati(fund, init, t):
    """The Riccati-type superposition exactly as written in terms of the kernels."""
    k = fund.all(t)
    den = init.alpha + k["gamma0"]
    e = init.delta + k["epsilon0"]
    return {
        "mu": 2 * init.mu * k["mu0"] * den,
        "alpha": k["alpha0"] - k["beta0"] ** 2 / (4 * den),
        "beta": -init.beta * k["beta0"] / (2 * den),
        "gamma": init.gamma - init.beta ** 2 / (4 * den),
        "delta": k["delta0"] - k["beta0"] * e / (2 * den),
        "epsilon": init.epsilon - init.beta * e / (2 * den),
        "kappa": init.kappa + k["kappa0"] - e ** 2 / (4 * den),
    }


def literal_ermakov(fund, init, t):
    """The Ermakov-type superposition exactly as written (principal arctan branch)."""
    k = fund.all(t)
    B = init.beta
    den = init.alpha + k["gamma0"]
    Q = B ** 4 + 4 * den ** 2
    e = init.delta + k["epsilon0"]
    return {
        "mu": init.mu * k["mu0"] * np.sqrt(Q),
        "alpha": k["alpha0"] - k["beta0"] ** 2 * den / Q,
        "beta": -B * k["beta0"] / np.sqrt(Q),
        "gamma": init.gamma - 0.5 * np.arctan(B ** 2 / (2 * den)),
        "delta": k["delta0"] - k["beta0"] * (init.epsilon * B ** 3 + 2 * den * e) / Q,
        "epsilon": (2 * init.epsilon * den - B * e) / np.sqrt(Q),
        "kappa": (init.kappa + k["kappa0"] - init.epsilon * B ** 3 * e / Q
                  + den * (init.epsilon ** 2 * B ** 2 - e ** 2) / Q),
    }


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("which", ["riccati", "ermakov"])
def test_matches_literal_formulas(seed, which):
    fund = random_fund(seed)
    ours = (riccati_map if which == "riccati" else ermakov_map)(fund, GENERIC_INIT, GRID)
    ref = (literal_riccati if which == "riccati" else literal_ermakov)(fund, GENERIC_INIT, GRID)
    # the principal arctan branch is valid while alpha(0) + gamma0 > 0
    ok = GENERIC_INIT.alpha + fund.all(GRID)["gamma0"] > 0
    assert ok.sum() > 10
    for key in STATE_KEYS:
        assert np.allclose(getattr(ours, key)[ok], ref[key][ok], rtol=1e-9, atol=1e-9), key


@pytest.mark.parametrize("mapper", [riccati_map, ermakov_map])
def test_initial_data_reproduced(funds, mapper):
    for fund in funds.values():
        st0 = mapper(fund, GENERIC_INIT, 0.0)
        assert np.allclose([float(getattr(st0, k)) for k in STATE_KEYS], GENERIC_INIT.as_tuple(), atol=1e-15)


@pytest.mark.parametrize("c0", [0, 1])
def test_system_residuals_on_presets(funds, random_funds, c0):
    for fund in [*funds.values(), *random_funds]:
        assert map_residual(fund, GENERIC_INIT, GRID, c0) < 1e-6


def test_beta_mu_lambda_identity(random_funds):
    for fund in random_funds:
        for mapper in (riccati_map, ermakov_map):
            st_ = mapper(fund, GENERIC_INIT, GRID)
            lam = fund.char.lam(GRID)
            assert np.allclose(st_.beta * st_.mu, GENERIC_INIT.beta * GENERIC_INIT.mu * lam, rtol=1e-10)


def test_mu_routes_agree_and_solve_ermakov(random_funds, funds):
    for fund in [*funds.values(), *random_funds]:
        direct = ermakov_map(fund, GENERIC_INIT, GRID).mu
        assert np.max(np.abs(direct - mu_pinney(fund.char, GENERIC_INIT, fund.coeffs, GRID))) < 1e-9
        assert ermakov_residual(fund.char, fund.coeffs, GENERIC_INIT, GRID) < 1e-6


def test_ermakov_is_smooth_through_caustic(sho_long):
    pi = np.pi
    eps = 1e-6
    a = ermakov_map(sho_long, GENERIC_INIT, np.array([pi - eps, pi + eps]))
    for key in STATE_KEYS:
        vals = getattr(a, key)
        assert abs(vals[1] - vals[0]) < 1e-4, key
    assert map_residual(sho_long, GENERIC_INIT, np.linspace(2.5, 4.5, 25), 1) < 1e-6


def test_ermakov_phase_monotone_over_several_caustics():
    fund = build("sho", T=12.0)
    t = np.linspace(0.0, 12.0, 600)
    gamma = ermakov_map(fund, GENERIC_INIT, t).gamma
    assert np.all(np.diff(gamma) < 0)
    # standard data on the unit oscillator: gamma = -t/2
    std = ermakov_map(fund, InitialData(), t).gamma
    assert np.allclose(std, -t / 2, atol=1e-8)


def test_riccati_defined_at_caustic_but_not_focus(sho_long):
    st_ = riccati_map(sho_long, GENERIC_INIT, np.pi)
    assert np.isfinite([float(getattr(st_, k)) for k in STATE_KEYS]).all()
    # standard data: p = cos(t)/2 vanishes at pi/2
    with pytest.raises(DegenerateFocusError) as info:
        riccati_map(sho_long, InitialData(), np.pi / 2)
    assert info.value.t == pytest.approx(np.pi / 2)


def test_ermakov_standard_oscillator_states():
    fund = build("sho", T=3.0)
    t = np.linspace(0, 3, 13)
    st_ = ermakov_map(fund, InitialData(epsilon=0.5), t)
    assert np.allclose(st_.mu, 1.0, atol=1e-9)
    assert np.allclose(st_.beta, 1.0, atol=1e-9)
    assert np.allclose(st_.epsilon, 0.5 * np.cos(t), atol=1e-9)
    assert np.allclose(st_.alpha, 0.0, atol=1e-9)


def test_ermakov_needs_positive_a0():
    fund = build("polynomial", {"a0": -0.5, "b0": -0.5})
    with pytest.raises(ConfigError, match="a\\(0\\) > 0"):
        ermakov_map(fund, GENERIC_INIT, 0.5)


@pytest.mark.parametrize("c0", [0, 1])
@pytest.mark.parametrize("seed", range(3))
def test_continuity_orders(seed, c0):
    fund = random_fund(seed)
    diffs, orders = continuity_orders(fund, GENERIC_INIT, c0)
    assert diffs
    for key, o in orders.items():
        assert o[-1] >= 0.99, key
        assert diffs[key][-1] < 1e-3


def test_initial_data_validation():
    with pytest.raises(ConfigError, match="beta\\(0\\) != 0"):
        InitialData(beta=0.0)
    with pytest.raises(ConfigError):
        InitialData(mu=0.0)
    with pytest.raises(ConfigError, match="unknown"):
        InitialData.from_mapping({"zeta": 1})
    with pytest.raises(ConfigError):
        InitialData(alpha=float("nan"))
    assert InitialData(mu=-2.0).mu == 2.0


finite = st.floats(-1.0, 1.0, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(mu=st.floats(0.2, 3.0), alpha=finite, beta=st.floats(0.3, 2.0), gamma=finite,
       delta=finite, epsilon=finite, kappa=finite)
def test_ermakov_residual_for_arbitrary_data(mu, alpha, beta, gamma, delta, epsilon, kappa):
    init = InitialData(mu, alpha, beta, gamma, delta, epsilon, kappa)
    fund = _HYPO_FUND
    # the map divides by (mu(t)/mu(0))^2, which magnifies solver error where mu dips near a focus
    amplification = max(1.0, float(np.max((init.mu / ermakov_map(fund, init, GRID).mu) ** 2)))
    assert map_residual(fund, init, GRID, 1) < 1e-6 * amplification
    assert np.max(np.abs(ermakov_map(fund, init, GRID).mu
                         - mu_pinney(fund.char, init, fund.coeffs, GRID))) < 1e-9 * max(1.0, mu)


_HYPO_FUND = random_fund(11)
