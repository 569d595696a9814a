import os

import numpy as np
import pytest
import scipy.sparse as sp

from gkbrelax.problems import GENERATORS
from gkbrelax import (ExactInner, GkbOptions, RelaxPolicy, SaddleSystem, dense_solve,
                      gen_mac_stokes_channel, gen_mixed_poisson_rt0, gen_random_saddle, gkb_solve,
                      load_system, save_system)
from gkbrelax.errors import SymmetryError
from gkbrelax.inner import cg_solve
from gkbrelax.mmio import mm_write
from gkbrelax.problems import rt0_interpolate


def block_residual(system, w, p):
    K = system.block_matrix()
    rhs = np.concatenate([system.g, system.r])
    return np.linalg.norm(K @ np.concatenate([w, p]) - rhs) / np.linalg.norm(rhs)


def assert_same_system(a, b):
    assert a.eta == b.eta
    assert (abs(a.M - b.M)).nnz == 0 and (abs(a.A - b.A)).nnz == 0
    np.testing.assert_array_equal(a.g, b.g)
    np.testing.assert_array_equal(a.r, b.r)


def test_round_trip(tmp_path):
    prob = gen_random_saddle(10, 4, 10.0, seed=1)
    save_system(prob.system, str(tmp_path))
    assert_same_system(load_system(str(tmp_path)), prob.system)


def test_missing_file_named(tmp_path):
    save_system(gen_random_saddle(10, 4, seed=1).system, str(tmp_path))
    os.remove(tmp_path / "r.mtx")
    with pytest.raises(FileNotFoundError, match="r.mtx"):
        load_system(str(tmp_path))


def test_asymmetric_M_rejected(tmp_path):
    system = gen_random_saddle(10, 4, 10.0, seed=1).system
    save_system(system, str(tmp_path))
    M = system.M.toarray()
    M[0, 1] *= 1.0 + 1e-3
    mm_write(str(tmp_path / "M.mtx"), sp.csr_matrix(M))
    with pytest.raises(SymmetryError):
        load_system(str(tmp_path))


def test_dimension_mismatch_rejected(tmp_path):
    save_system(gen_random_saddle(10, 4, seed=1).system, str(tmp_path))
    mm_write(str(tmp_path / "r.mtx"), np.ones(3))
    with pytest.raises(ValueError, match="r has length 3"):
        load_system(str(tmp_path))


def test_random_identity_spectrum():
    prob = gen_random_saddle(12, 5, 1.0, seed=4)
    np.testing.assert_allclose(np.linalg.eigvalsh(prob.system.M.toarray()), 1.0, rtol=1e-12)
    _, rep = cg_solve(prob.system.M, np.ones(12), 1e-10, 10)
    assert rep.iterations <= 2


def test_random_full_rank_and_consistent():
    prob = gen_random_saddle(20, 8, 1e4, seed=0)
    assert np.linalg.svd(prob.system.A.toarray(), compute_uv=False)[-1] > 0.0
    w, p = dense_solve(prob.system)
    assert np.linalg.norm(w - prob.u_exact) <= 1e-10 * np.linalg.norm(w)
    assert np.linalg.norm(p - prob.p_exact) <= 1e-10 * np.linalg.norm(p)
    M = prob.system.M.toarray()
    ev = np.linalg.eigvalsh(M)
    assert ev[-1] / ev[0] == pytest.approx(1e4, rel=1e-6)


def test_random_gaussian_mode_and_validation():
    prob = gen_random_saddle(9, 3, 10.0, seed=2, a_mode="gaussian")
    assert prob.system.A.shape == (9, 3)
    with pytest.raises(ValueError):
        gen_random_saddle(3, 3)
    with pytest.raises(ValueError):
        gen_random_saddle(5, 3, 0.5)


def test_poisson_spd_and_patch_test():
    prob = gen_mixed_poisson_rt0(8, seed=0)
    assert np.linalg.eigvalsh(prob.system.M.toarray())[0] > 0.0
    for field in (lambda x, y: (1.0, 0.0), lambda x, y: (0.3, -2.0)):
        sigma = rt0_interpolate(8, field)
        assert np.max(np.abs(prob.system.A.T @ sigma)) <= 1e-12
    assert not np.any(prob.system.g)
    assert np.all(prob.system.r < 0.0)


def test_poisson_deterministic():
    a, b = gen_mixed_poisson_rt0(6, seed=3), gen_mixed_poisson_rt0(6, seed=3)
    assert_same_system(a.system, b.system)
    c = gen_mixed_poisson_rt0(6, seed=4)
    assert not np.array_equal(a.system.r, c.system.r)


def test_mac_full_rank():
    prob = gen_mac_stokes_channel(8, 8, 20.0)
    assert np.linalg.svd(prob.system.A.toarray(), compute_uv=False)[-1] > 0.0


def test_mac_poiseuille_refinement():
    errs = []
    for n in (8, 16, 32):
        prob = gen_mac_stokes_channel(n, n, 1.0)
        w, _ = dense_solve(prob.system)
        d = w - prob.u_exact
        errs.append(np.sqrt(d @ (prob.system.M @ d)))
    assert errs[0] / errs[1] >= 1.7 and errs[1] / errs[2] >= 1.7


def test_mac_plateau_grows_with_length():
    plateaus = []
    for length in (5.0, 10.0, 20.0):
        ny = 8
        prob = gen_mac_stokes_channel(int(4 * (length + 1)), ny, length)
        res = gkb_solve(prob.system, GkbOptions(outer_tol=1e-7, delay=3), RelaxPolicy("constant"),
                        ExactInner(prob.system.M))
        xi = [x for x in res.log.column("lower_bound") if x is not None]
        plateaus.append(next(i for i, x in enumerate(xi) if x < 0.5 * xi[0]))
    assert plateaus[0] < plateaus[1] < plateaus[2]


@pytest.mark.parametrize("name", sorted(GENERATORS))
def test_generated_problems_solvable(name):
    args = {"mac-stokes": (8, 6, 3.0), "mixed-poisson": (6,), "random": (15, 6, 100.0)}[name]
    prob = GENERATORS[name](*args)
    assert isinstance(prob.system, SaddleSystem)
    w, p = dense_solve(prob.system)
    assert block_residual(prob.system, w, p) <= 1e-10
    again = GENERATORS[name](*args)
    assert_same_system(prob.system, again.system)


def test_mac_validation():
    with pytest.raises(ValueError):
        gen_mac_stokes_channel(3, 8, 5.0)
