"""Matrix Market reader/writer for real matrices and vectors.

Supported: ``matrix coordinate real {general,symmetric}`` and
``matrix array real {general,symmetric}``.  An array file with a single
column is returned as a 1-D vector, everything else as a CSR matrix.
"""

import numpy as np
import scipy.sparse as sp

from .errors import MatrixMarketError
from .linalg import as_csr

_FORMATS = ("coordinate", "array")
_SYMMETRIES = ("general", "symmetric")


def _data_lines(fh, path):
    """Yield (line_number, stripped_text) for non-comment, non-blank lines."""
    for lineno, raw in enumerate(fh, start=2):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        yield lineno, text


def _parse_header(line, path):
    tokens = line.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"bad header {line.strip()!r}", path, 1)
    obj, fmt, field, symmetry = (t.lower() for t in tokens[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r} (only 'matrix')", path, 1)
    if fmt not in _FORMATS:
        raise MatrixMarketError(f"unsupported format {fmt!r}", path, 1)
    if field != "real":
        raise MatrixMarketError(f"unsupported field {field!r} (only 'real')", path, 1)
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {symmetry!r}", path, 1)
    return fmt, symmetry


def _ints(text, count, path, lineno):
    parts = text.split()
    if len(parts) != count:
        raise MatrixMarketError(f"expected {count} integers, got {text!r}", path, lineno)
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise MatrixMarketError(f"expected integers, got {text!r}", path, lineno) from None


def _real(text, path, lineno):
    try:
        return float(text)
    except ValueError:
        raise MatrixMarketError(f"expected a real value, got {text!r}", path, lineno) from None


def mm_read(path):
    """Read a Matrix Market file into a CSR matrix or a 1-D vector."""
    with open(path) as fh:
        header = fh.readline()
        fmt, symmetry = _parse_header(header, path)
        lines = _data_lines(fh, path)
        try:
            lineno, size_line = next(lines)
        except StopIteration:
            raise MatrixMarketError("missing size line", path) from None

        if fmt == "coordinate":
            n_rows, n_cols, nnz = _ints(size_line, 3, path, lineno)
            if symmetry == "symmetric" and n_rows != n_cols:
                raise MatrixMarketError("symmetric matrix must be square", path, lineno)
            rows = np.empty(nnz, dtype=np.int64)
            cols = np.empty(nnz, dtype=np.int64)
            vals = np.empty(nnz, dtype=np.float64)
            count = 0
            for lineno, text in lines:
                if count == nnz:
                    raise MatrixMarketError(f"more than the declared {nnz} entries", path, lineno)
                parts = text.split()
                if len(parts) != 3:
                    raise MatrixMarketError(f"expected 'row col value', got {text!r}", path, lineno)
                i, j = _ints(" ".join(parts[:2]), 2, path, lineno)
                if not (1 <= i <= n_rows and 1 <= j <= n_cols):
                    raise MatrixMarketError(f"index ({i}, {j}) out of bounds for {n_rows}x{n_cols}", path, lineno)
                if symmetry == "symmetric" and j > i:
                    raise MatrixMarketError(f"upper-triangle entry ({i}, {j}) in symmetric file", path, lineno)
                rows[count], cols[count] = i - 1, j - 1
                vals[count] = _real(parts[2], path, lineno)
                count += 1
            if count != nnz:
                raise MatrixMarketError(f"declared {nnz} entries, found {count}", path)
            if symmetry == "symmetric":
                off = rows != cols
                rows, cols, vals = (np.concatenate([rows, cols[off]]),
                                    np.concatenate([cols, rows[off]]),
                                    np.concatenate([vals, vals[off]]))
            return as_csr(sp.coo_matrix((vals, (rows, cols)), shape=(n_rows, n_cols)))

        n_rows, n_cols = _ints(size_line, 2, path, lineno)
        if symmetry == "symmetric" and n_rows != n_cols:
            raise MatrixMarketError("symmetric matrix must be square", path, lineno)
        values = []
        for lineno, text in lines:
            values.append(_real(text, path, lineno))
        if symmetry == "symmetric":
            expected = n_rows * (n_rows + 1) // 2
        else:
            expected = n_rows * n_cols
        if len(values) != expected:
            raise MatrixMarketError(f"declared {expected} array values, found {len(values)}", path)
        if symmetry == "symmetric":
            dense = np.zeros((n_rows, n_cols))
            it = iter(values)
            for j in range(n_cols):  # column-major lower triangle
                for i in range(j, n_rows):
                    dense[i, j] = dense[j, i] = next(it)
        else:
            dense = np.array(values, dtype=np.float64).reshape((n_cols, n_rows)).T
        if n_cols == 1:
            return dense[:, 0].copy()
        return as_csr(dense)


def mm_write(path, obj, comment=None):
    """Write a sparse matrix (coordinate general) or a 1-D vector (array general).

    Values are printed with 17 significant digits so that reading the file
    back reproduces every double exactly.
    """
    with open(path, "w") as fh:
        if sp.issparse(obj):
            A = as_csr(obj).tocoo()
            fh.write("%%MatrixMarket matrix coordinate real general\n")
            if comment:
                fh.write(f"% {comment}\n")
            fh.write(f"{A.shape[0]} {A.shape[1]} {A.nnz}\n")
            # CSR -> COO preserves row-major order
            for i, j, v in zip(A.row, A.col, A.data):
                fh.write(f"{i + 1} {j + 1} {v:.17g}\n")
            return
        x = np.asarray(obj, dtype=np.float64)
        if x.ndim == 1:
            x = x[:, None]
        if x.ndim != 2:
            raise ValueError(f"cannot write array of shape {x.shape}")
        fh.write("%%MatrixMarket matrix array real general\n")
        if comment:
            fh.write(f"% {comment}\n")
        fh.write(f"{x.shape[0]} {x.shape[1]}\n")
        for v in x.T.ravel():
            fh.write(f"{v:.17g}\n")
