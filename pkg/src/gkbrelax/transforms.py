"""Problem transformations: augmented Lagrangian, dense Schur complement, deflation."""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import CapacityError, GkbError
from .gkb import SaddleSystem
from .linalg import DENSE_CAP, cholesky_factor, densify

NNZ_CAP = 50_000_000


def augment(system, eta_new, nnz_cap=NNZ_CAP):
    """Augmented Lagrangian: M + eta A A^T, g + eta A r, with N = (1/eta) I."""
    if not eta_new > 0.0:
        raise ValueError(f"eta_new must be positive, got {eta_new}")
    A = system.A
    AAt = (A @ A.T).tocsr()
    if AAt.nnz + system.M.nnz > nnz_cap:
        raise CapacityError(f"augmented matrix would hold {AAt.nnz + system.M.nnz} nonzeros (> {nnz_cap})")
    M_new = system.M + eta_new * AAt
    M_new = (0.5 * (M_new + M_new.T)).tocsr()
    g_new = system.g + eta_new * (A @ system.r)
    return SaddleSystem(M_new, A.copy(), eta_new, g_new, system.r.copy())


def schur_dense(system, cap=DENSE_CAP):
    """Dense S = A^T M^{-1} A, symmetrized."""
    M = densify(system.M, cap)
    A = densify(system.A, cap)
    X = scipy.linalg.cho_solve(cholesky_factor(M), A)
    S = A.T @ X
    return 0.5 * (S + S.T)


@dataclass
class DeflationBasis:
    """Smallest eigenpairs of eta*S (Euclidean-orthonormal eigenvectors as columns).

    Eigenvalues are those of the pencil S v = lambda N v with N = (1/eta) I.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    eta: float

    @property
    def count(self):
        return self.eigenvalues.size


def deflate_rhs(basis, b):
    """b with its components along the deflated eigendirections removed."""
    if basis.count == 0:
        return np.array(b, dtype=np.float64)
    V = basis.eigenvectors
    return b - V @ (V.T @ b)


def deflate(system, k_defl, b=None, cap=DENSE_CAP):
    """Compute the `k_defl` smallest Schur eigenpairs and the deflated rhs.

    When `b` is not given it is formed exactly as r - A^T M^{-1} g.
    """
    n = system.n
    if not 0 <= k_defl < n:
        raise ValueError(f"k_defl must lie in [0, {n}), got {k_defl}")
    if b is None:
        M = densify(system.M, cap)
        shift = scipy.linalg.cho_solve(cholesky_factor(M), system.g)
        b = system.r - system.A.T @ shift
    if k_defl == 0:
        basis = DeflationBasis(np.zeros(0), np.zeros((n, 0)), system.eta)
        return basis, np.array(b, dtype=np.float64)
    S = schur_dense(system, cap)
    try:
        lam, V = scipy.linalg.eigh(system.eta * S, subset_by_index=[0, k_defl - 1])
    except np.linalg.LinAlgError as exc:
        raise GkbError(f"deflation eigensolver failed: {exc}") from exc
    basis = DeflationBasis(lam, V, system.eta)
    return basis, deflate_rhs(basis, b)


def deflation_correction(basis, b, system, inner_solver=None, tol=1e-12):
    """Coarse-space part of the solution along the deflated directions.

    Returns ``(u_corr, p_corr, report)``; with S p = -b on the dual side,
    p_corr = -eta * sum_i v_i (v_i^T b) / lambda_i and u_corr = -M^{-1} A p_corr.
    """
    from .inner import ExactInner, InnerReport

    if basis.count == 0:
        return np.zeros(system.m), np.zeros(system.n), InnerReport(0, 0.0, True)
    if np.any(basis.eigenvalues <= 0.0):
        raise GkbError("deflation basis has non-positive eigenvalues; A is rank deficient")
    V = basis.eigenvectors
    p_corr = -basis.eta * (V @ ((V.T @ b) / basis.eigenvalues))
    if not np.any(p_corr):
        return np.zeros(system.m), p_corr, InnerReport(0, 0.0, True)
    if inner_solver is None:
        inner_solver = ExactInner(system.M)
    y, report = inner_solver(system.A @ p_corr, tol)
    return -y, p_corr, report
