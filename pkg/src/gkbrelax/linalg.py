"""Sparse and dense linear-algebra primitives.

Sparse matrices are :class:`scipy.sparse.csr_matrix` instances kept in
canonical form (sorted, duplicate-free column indices per row), vectors are
1-D float64 :class:`numpy.ndarray`.  Everything here is a pure function.
"""

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import CapacityError, DimensionError, NumericalBreakdown, SPDError, SymmetryError

DENSE_CAP = 20000


def as_csr(A):
    """Return `A` as a canonical float64 CSR matrix (copying only if needed)."""
    if sp.issparse(A):
        A = sp.csr_matrix(A, dtype=np.float64)
    else:
        A = sp.csr_matrix(np.atleast_2d(np.asarray(A, dtype=np.float64)))
    if not A.has_canonical_format:
        A = A.copy()
        A.sum_duplicates()
    return A


def csr_from_parts(n_rows, n_cols, row_offsets, col_indices, values):
    """Build a CSR matrix from raw arrays, validating the storage invariants."""
    row_offsets = np.asarray(row_offsets, dtype=np.int64)
    col_indices = np.asarray(col_indices, dtype=np.int64)
    values = np.asarray(values, dtype=np.float64)
    if row_offsets.shape != (n_rows + 1,):
        raise DimensionError(f"row_offsets must have length {n_rows + 1}, got {row_offsets.size}")
    if row_offsets[0] != 0 or row_offsets[-1] != values.size or col_indices.size != values.size:
        raise DimensionError("row_offsets must start at 0 and end at len(values) == len(col_indices)")
    if np.any(np.diff(row_offsets) < 0):
        raise DimensionError("row_offsets must be non-decreasing")
    if col_indices.size and (col_indices.min() < 0 or col_indices.max() >= n_cols):
        raise DimensionError(f"column index out of range [0, {n_cols})")
    for i in range(n_rows):
        row = col_indices[row_offsets[i]:row_offsets[i + 1]]
        if np.any(np.diff(row) <= 0):
            raise DimensionError(f"row {i}: column indices must be strictly increasing")
    return sp.csr_matrix((values, col_indices, row_offsets), shape=(n_rows, n_cols))


def vector(x):
    """Coerce `x` to a 1-D float64 array."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {x.shape}")
    return x


def _check_finite(y, what):
    if not np.all(np.isfinite(y)):
        raise NumericalBreakdown(f"non-finite entries produced by {what}")
    return y


def spmv(A, x):
    """y = A x."""
    x = vector(x)
    if A.shape[1] != x.size:
        raise DimensionError(f"spmv: matrix has {A.shape[1]} columns, vector has {x.size} entries")
    return _check_finite(A @ x, "spmv")


def spmv_t(A, x):
    """y = A^T x, without forming the transpose explicitly."""
    x = vector(x)
    if A.shape[0] != x.size:
        raise DimensionError(f"spmv_t: matrix has {A.shape[0]} rows, vector has {x.size} entries")
    return _check_finite(A.T @ x, "spmv_t")


def _same_length(x, y, op):
    if x.size != y.size:
        raise DimensionError(f"{op}: length mismatch {x.size} vs {y.size}")


def dot(x, y):
    x, y = vector(x), vector(y)
    _same_length(x, y, "dot")
    return float(np.dot(x, y))


def axpy(a, x, y):
    """Return a*x + y (new array)."""
    x, y = vector(x), vector(y)
    _same_length(x, y, "axpy")
    return a * x + y


def scale(a, x):
    return a * vector(x)


def sub(x, y):
    x, y = vector(x), vector(y)
    _same_length(x, y, "sub")
    return x - y


def weighted_norm(x, M):
    """sqrt(x^T M x) for a symmetric positive definite `M`."""
    x = vector(x)
    if M.shape[0] != M.shape[1] or M.shape[0] != x.size:
        raise DimensionError(f"weighted_norm: matrix {M.shape} incompatible with vector of length {x.size}")
    q = float(np.dot(x, M @ x))
    if q < 0.0:
        raise SPDError(f"x^T M x = {q:.3e} < 0: M is not positive definite")
    return np.sqrt(q)


def densify(A, cap=DENSE_CAP):
    """Dense copy of `A`, refusing anything with a dimension above `cap`."""
    if max(A.shape) > cap:
        raise CapacityError(f"matrix of shape {A.shape} exceeds the dense cap {cap}")
    return A.toarray() if sp.issparse(A) else np.array(A, dtype=np.float64)


def cholesky_factor(M):
    """Dense Cholesky factorization; raises :class:`SPDError` on a non-positive pivot."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"cholesky needs a square matrix, got shape {M.shape}")
    try:
        return scipy.linalg.cho_factor(M, lower=True, check_finite=True)
    except np.linalg.LinAlgError as exc:
        raise SPDError(f"Cholesky factorization failed: {exc}") from exc


def dense_cholesky_solve(M, b):
    """Solve M x = b for dense SPD `M`."""
    b = np.asarray(b, dtype=np.float64)
    M = densify(M) if sp.issparse(M) else np.asarray(M, dtype=np.float64)
    if M.shape[0] != b.shape[0]:
        raise DimensionError(f"dense_cholesky_solve: matrix {M.shape} vs rhs {b.shape}")
    factor = cholesky_factor(M)
    return scipy.linalg.cho_solve(factor, b)


def check_symmetric(M, rtol=1e-12, name="M"):
    """Raise :class:`SymmetryError` unless max|M - M^T| <= rtol * max|M|."""
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}")
    scale_ = abs(M).max() if M.nnz else 0.0
    asym = abs(M - M.T).max() if M.nnz else 0.0
    if asym > rtol * scale_:
        raise SymmetryError(f"{name} is not symmetric: max|{name} - {name}^T| = {asym:.3e} "
                            f"exceeds {rtol:g} * max|{name}| = {rtol * scale_:.3e}")
