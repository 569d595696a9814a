"""Inner solvers for the systems M w = rhs that every outer iteration needs.

Both solvers share the call signature ``solver(rhs, tol) -> (x, InnerReport)``
once bound to a matrix, which is what :func:`gkbrelax.gkb.gkb_solve` expects.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapacityError, NumericalBreakdown, SPDError
from .linalg import DENSE_CAP, cholesky_factor, densify, vector


@dataclass(frozen=True)
class InnerReport:
    iterations: int
    achieved_rel_residual: float
    converged: bool


def cg_solve(M, rhs, tol, maxit, x0=None):
    """Unpreconditioned conjugate gradients.

    Stops once the recursively updated residual satisfies
    ``||r|| <= tol * ||rhs||`` or after `maxit` iterations.  The reported
    relative residual is recomputed from ``rhs - M x`` at exit.

    Matrix-vector products: one for the initial residual, one per iteration
    and one for the final true residual.
    """
    rhs = vector(rhs)
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tol must lie in (0, 1), got {tol}")
    if maxit < 1:
        raise ValueError(f"maxit must be >= 1, got {maxit}")
    n = rhs.size
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros(n), InnerReport(0, 0.0, True)

    x = np.zeros(n) if x0 is None else vector(x0).copy()
    r = rhs - M @ x
    p = r.copy()
    rr = float(np.dot(r, r))
    target = (tol * rhs_norm) ** 2
    it = 0
    while rr > target and it < maxit:
        Mp = M @ p
        pMp = float(np.dot(p, Mp))
        if not np.isfinite(pMp):
            raise NumericalBreakdown(f"CG: non-finite curvature at iteration {it}")
        if pMp <= 0.0:
            raise SPDError(f"CG: p^T M p = {pMp:.3e} <= 0 at iteration {it}; M is not SPD")
        step = rr / pMp
        x += step * p
        r -= step * Mp
        rr_new = float(np.dot(r, r))
        p *= rr_new / rr
        p += r
        rr = rr_new
        it += 1
    if not np.all(np.isfinite(x)):
        raise NumericalBreakdown("CG: non-finite iterate")
    achieved = float(np.linalg.norm(rhs - M @ x) / rhs_norm)
    return x, InnerReport(it, achieved, achieved <= tol)


def exact_solve(M, rhs, cap=DENSE_CAP):
    """Direct solve through a dense Cholesky factorization (0 iterations reported)."""
    return ExactInner(M, cap=cap)(rhs)


class CGInner:
    """CG bound to one matrix; fresh zero initial guess on every call."""

    name = "cg"

    def __init__(self, M, maxit=None):
        self.M = M
        self.maxit = maxit if maxit is not None else 10 * M.shape[0]

    def __call__(self, rhs, tol=1e-12):
        return cg_solve(self.M, rhs, tol, self.maxit)


class ExactInner:
    """Direct solver bound to one matrix; the factorization is computed once."""

    name = "exact"

    def __init__(self, M, cap=DENSE_CAP):
        n = M.shape[0]
        if n > cap:
            raise CapacityError(f"exact inner solver: M has size {n} > cap {cap}; use the CG inner solver")
        self.M = M
        self._factor = cholesky_factor(densify(M, cap))

    def __call__(self, rhs, tol=None):
        rhs = vector(rhs)
        x = scipy.linalg.cho_solve(self._factor, rhs)
        nrm = np.linalg.norm(rhs)
        achieved = float(np.linalg.norm(rhs - self.M @ x) / nrm) if nrm > 0 else 0.0
        return x, InnerReport(0, achieved, True)


def make_inner_solver(kind, M, maxit=None, cap=DENSE_CAP):
    if kind == "cg":
        return CGInner(M, maxit)
    if kind == "exact":
        return ExactInner(M, cap)
    raise ValueError(f"unknown inner solver {kind!r}; choose 'cg' or 'exact'")
