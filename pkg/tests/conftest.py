import numpy as np
import pytest
import scipy.sparse as sp

from gkbrelax import gen_mixed_poisson_rt0, gen_random_saddle


@pytest.fixture(scope="session")
def random_20x8():
    return gen_random_saddle(20, 8, 1e4, seed=0)


@pytest.fixture(scope="session")
def poisson16():
    return gen_mixed_poisson_rt0(16, seed=0)


@pytest.fixture(scope="session")
def poisson8():
    return gen_mixed_poisson_rt0(8, seed=0)


def random_spd(n, seed, shift=1.0):
    rng = np.random.default_rng(seed)
    L = rng.standard_normal((n, n))
    return L @ L.T + shift * np.eye(n)


def random_sparse(m, n, seed, density=0.3):
    return sp.random(m, n, density=density, format="csr", random_state=np.random.default_rng(seed))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[number])
