import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from gkbrelax.errors import MatrixMarketError
from gkbrelax.mmio import mm_read, mm_write

from conftest import random_sparse


def write(tmp_path, text, name="x.mtx"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def test_identity_coordinate(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n2 2 1.0\n")
    A = mm_read(path)
    assert A.nnz == 2
    np.testing.assert_array_equal(A.toarray(), np.eye(2))


def test_symmetric_lower_triangle_expanded(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real symmetric\n% comment\n"
                           "2 2 3\n1 1 2\n2 1 1\n2 2 2\n")
    A = mm_read(path)
    assert A.nnz == 4
    np.testing.assert_array_equal(A.toarray(), [[2, 1], [1, 2]])


def test_round_trip_bit_identical(tmp_path):
    A = random_sparse(20, 7, 11)
    path = str(tmp_path / "A.mtx")
    mm_write(path, A)
    B = mm_read(path)
    assert B.shape == A.shape
    np.testing.assert_array_equal(B.indptr, A.indptr)
    np.testing.assert_array_equal(B.indices, A.indices)
    np.testing.assert_array_equal(B.data, A.data)


def test_vector_array_format(tmp_path):
    x = np.random.default_rng(0).standard_normal(9)
    path = str(tmp_path / "x.mtx")
    mm_write(path, x)
    assert open(path).readline().startswith("%%MatrixMarket matrix array real general")
    np.testing.assert_array_equal(mm_read(path), x)


@pytest.mark.parametrize("text, line", [
    ("%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n", 1),
    ("%%MatrixMarket vector coordinate real general\n1 1 1\n1 1 1\n", 1),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
    ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n", 3),
    ("%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n", 3),
])
def test_parse_errors_carry_line(tmp_path, text, line):
    path = write(tmp_path, text)
    with pytest.raises(MatrixMarketError) as info:
        mm_read(path)
    assert info.value.line == line
    assert f"{path}:{line}:" in str(info.value)


def test_too_few_entries(tmp_path):
    path = write(tmp_path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1.0\n")
    with pytest.raises(MatrixMarketError):
        mm_read(path)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 15), st.integers(1, 15), st.integers(0, 2**31 - 1))
def test_round_trip_property(tmp_path_factory, m, n, seed):
    A = random_sparse(m, n, seed, density=0.4)
    A.data = A.data * 10.0 ** np.random.default_rng(seed).uniform(-200, 200, A.nnz)
    path = str(tmp_path_factory.mktemp("mm") / "A.mtx")
    mm_write(path, A)
    B = mm_read(path)
    assert (abs(B - A)).nnz == 0 and B.shape == A.shape
