import sys

import numpy as np
import pytest

from qho import InitialData, fundamental_solution, make_preset, random_smooth_preset, solve_characteristic

STANDARD_PRESETS = {
    "free": {},
    "sho": {"omega": 1.0},
    "driven-sho": {"omega": 1.0, "F": 0.3},
    "damped": {"omega": 1.0, "gamma": 0.5},
}
GENERIC_INIT = InitialData(mu=1.3, alpha=0.2, beta=0.8, gamma=0.1, delta=0.3, epsilon=-0.4, kappa=0.05)


def build(name, params=None, T=1.0):
    cs = make_preset(name, params if params is not None else STANDARD_PRESETS[name], T=T)
    return fundamental_solution(solve_characteristic(cs), cs)


def random_fund(seed, T=1.0, hermitian=False):
    cs = random_smooth_preset(np.random.default_rng(seed), T=T, hermitian=hermitian)
    return fundamental_solution(solve_characteristic(cs), cs)


@pytest.fixture(scope="session")
def funds():
    """Fundamental solutions of the named presets on [0, 1]."""
    return {name: build(name) for name in STANDARD_PRESETS}


@pytest.fixture(scope="session")
def random_funds():
    return [random_fund(seed) for seed in range(5)]


@pytest.fixture(scope="session")
def sho_long():
    """sho on [0, 5], crossing the caustic at pi."""
    return build("sho", T=5.0)


_acceptance = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    k = int(name.rsplit("_", 1)[-1])
    if report.when == "call" or report.failed:
        measured = dict(report.user_properties).get("measured", "")
        _acceptance[k] = (report.passed and _acceptance.get(k, (True,))[0], measured)


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    titles = getattr(sys.modules.get("test_acceptance"), "CRITERIA", {})
    terminalreporter.section("acceptance criteria")
    for k in sorted(_acceptance):
        ok, measured = _acceptance[k]
        line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {titles.get(k, '')}"
        terminalreporter.write_line(line + (f" [{measured}]" if measured else ""))
