import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gkbrelax.errors import CapacityError, SPDError
from gkbrelax.inner import CGInner, ExactInner, cg_solve, exact_solve, make_inner_solver
from gkbrelax.linalg import as_csr, dense_cholesky_solve

from conftest import random_spd


class CountingMatrix:
    """Wraps a matrix and counts products with it."""

    def __init__(self, M):
        self.M = M
        self.shape = M.shape
        self.count = 0

    def __matmul__(self, x):
        self.count += 1
        return self.M @ x


def test_identity_one_iteration():
    x, rep = cg_solve(sp.identity(5, format="csr"), np.arange(1.0, 6.0), 1e-12, 50)
    assert rep.iterations == 1 and rep.converged
    np.testing.assert_allclose(x, np.arange(1.0, 6.0))


def test_three_distinct_eigenvalues():
    M = sp.diags([1.0, 2.0, 2.0, 5.0, 5.0]).tocsr()
    _, rep = cg_solve(M, np.ones(5), 1e-12, 50)
    assert rep.iterations <= 3 and rep.converged


def test_random_spd_against_dense():
    M = random_spd(30, 1)
    b = np.random.default_rng(2).standard_normal(30)
    x, rep = cg_solve(as_csr(M), b, 1e-10, 1000)
    assert rep.achieved_rel_residual <= 1e-10
    ref = dense_cholesky_solve(M, b)
    assert np.linalg.norm(x - ref) <= 1e-8 * np.linalg.norm(ref)


def test_zero_rhs():
    x, rep = cg_solve(sp.identity(3, format="csr"), np.zeros(3), 1e-8, 10)
    assert rep.iterations == 0 and rep.achieved_rel_residual == 0.0 and not np.any(x)


def test_argument_validation():
    I = sp.identity(2, format="csr")
    for tol in (0.0, 1.0, -1e-3):
        with pytest.raises(ValueError):
            cg_solve(I, np.ones(2), tol, 10)
    with pytest.raises(ValueError):
        cg_solve(I, np.ones(2), 1e-8, 0)


def test_indefinite_detected():
    with pytest.raises(SPDError):
        cg_solve(as_csr(np.diag([1.0, -1.0])), np.array([0.0, 1.0]), 1e-8, 10)


def test_maxit_reported_not_converged():
    M = as_csr(random_spd(40, 3, shift=1e-3))
    _, rep = cg_solve(M, np.ones(40), 1e-14, 2)
    assert rep.iterations == 2 and not rep.converged and rep.achieved_rel_residual > 1e-14


def test_matvec_count():
    # one product for the initial residual, one per iteration, one for the final true residual
    M = CountingMatrix(as_csr(random_spd(12, 4)))
    _, rep = cg_solve(M, np.ones(12), 1e-9, 100)
    assert rep.iterations == M.count - 2


def test_exact_solve_examples():
    x, rep = exact_solve(sp.identity(2, format="csr"), [1.0, 2.0])
    np.testing.assert_allclose(x, [1.0, 2.0])
    assert rep.iterations == 0 and rep.converged
    x, _ = exact_solve(as_csr([[4.0, 1.0], [1.0, 3.0]]), [1.0, 2.0])
    np.testing.assert_allclose(x, [1 / 11, 7 / 11], rtol=1e-14)


def test_exact_agrees_with_cg():
    M = as_csr(random_spd(25, 5))
    b = np.random.default_rng(6).standard_normal(25)
    x_cg, _ = cg_solve(M, b, 1e-14, 10000)
    x_ex, _ = exact_solve(M, b)
    assert np.linalg.norm(x_cg - x_ex) <= 1e-10 * np.linalg.norm(x_ex)


def test_exact_capacity():
    with pytest.raises(CapacityError, match="CG"):
        ExactInner(sp.identity(10, format="csr"), cap=4)


def test_make_inner_solver():
    I = sp.identity(3, format="csr")
    assert isinstance(make_inner_solver("cg", I), CGInner)
    assert isinstance(make_inner_solver("exact", I), ExactInner)
    assert make_inner_solver("cg", I).maxit == 30
    with pytest.raises(ValueError):
        make_inner_solver("gmres", I)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_iterations_monotone_in_tolerance(seed):
    M = as_csr(random_spd(20, seed, shift=0.1))
    b = np.random.default_rng(seed + 1).standard_normal(20)
    its = [cg_solve(M, b, tol, 1000)[1].iterations for tol in (1e-12, 1e-8, 1e-4, 1e-2)]
    assert all(a >= b_ for a, b_ in zip(its, its[1:]))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([1e-4, 1e-8, 1e-11]))
def test_converged_implies_tolerance(seed, tol):
    M = as_csr(random_spd(15, seed))
    b = np.random.default_rng(seed + 3).standard_normal(15)
    _, rep = cg_solve(M, b, tol, 1000)
    assert rep.achieved_rel_residual >= 0.0
    if rep.converged:
        assert rep.achieved_rel_residual <= tol
