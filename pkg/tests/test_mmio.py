"""MatrixMarket / vector / mask file format tests."""
import numpy as np
import pytest

from deflamg import ParseError, SparseMatrix
from deflamg.mmio import (
    read_mask,
    read_matrix_market,
    read_vector,
    write_matrix_market,
    write_vector,
)


def test_matrix_roundtrip_bitwise(tmp_path):
    rng = np.random.default_rng(1)
    dense = rng.standard_normal((7, 5)) * (rng.random((7, 5)) < 0.5)
    A = SparseMatrix.from_dense(dense)
    p = tmp_path / "a.mtx"
    write_matrix_market(A, p)
    B = read_matrix_market(p)
    assert np.array_equal(A.row_ptr, B.row_ptr)
    assert np.array_equal(A.col_idx, B.col_idx)
    assert np.array_equal(A.values, B.values)


def test_symmetric_expansion(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text(
        "%%MatrixMarket matrix coordinate real symmetric\n"
        "% tridiagonal, lower triangle stored\n"
        "3 3 5\n"
        "1 1 2.0\n"
        "2 1 -1.0\n"
        "2 2 2.0\n"
        "3 2 -1.0\n"
        "3 3 2.0\n"
    )
    A = read_matrix_market(p)
    expect = np.array([[2.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 2.0]])
    np.testing.assert_array_equal(A.to_dense(), expect)


def test_duplicates_are_summed(tmp_path):
    p = tmp_path / "d.mtx"
    p.write_text(
        "%%MatrixMarket matrix coordinate real general\n2 2 3\n1 1 1.0\n1 1 2.5\n2 2 1.0\n"
    )
    A = read_matrix_market(p)
    assert A.nnz == 2
    assert A.to_dense()[0, 0] == 3.5


def test_integer_field_accepted(tmp_path):
    p = tmp_path / "i.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n2 2 2\n1 1 3\n2 2 4\n")
    A = read_matrix_market(p)
    np.testing.assert_array_equal(A.to_dense(), [[3.0, 0.0], [0.0, 4.0]])


@pytest.mark.parametrize(
    "content,lineno",
    [
        ("%%MatrixMarket matrix array real general\n2 2 1\n1 1 1.0\n", 1),
        ("%%MatrixMarket matrix coordinate complex general\n2 2 1\n1 1 1.0 0.0\n", 1),
        ("%%MatrixMarket matrix coordinate real skew-symmetric\n2 2 1\n2 1 1.0\n", 1),
        ("%%MatrixMarket matrix coordinate real general\n2 2\n", 2),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 oops\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n", 3),
        ("%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 1.0\n1 2 2.0\n", 4),
    ],
)
def test_parse_error_carries_line_number(tmp_path, content, lineno):
    p = tmp_path / "bad.mtx"
    p.write_text(content)
    with pytest.raises(ParseError) as err:
        read_matrix_market(p)
    assert f":{lineno}:" in str(err.value)


def test_truncated_entry_list(tmp_path):
    p = tmp_path / "short.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n3 3 2\n1 1 1.0\n")
    with pytest.raises(ParseError) as err:
        read_matrix_market(p)
    assert "expected 2 entries, found 1" in str(err.value)


def test_missing_file_is_parse_error():
    with pytest.raises(ParseError):
        read_matrix_market("/nonexistent/nowhere.mtx")


def test_vector_roundtrip(tmp_path):
    x = np.array([1.5, -2.25, 1e-17, 3.0])
    p = tmp_path / "v.txt"
    write_vector(x, p)
    np.testing.assert_array_equal(read_vector(p), x)


def test_vector_parse_error_line(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("1.0\n\nnot-a-number\n")
    with pytest.raises(ParseError) as err:
        read_vector(p)
    assert ":3:" in str(err.value)


def test_mask_roundtrip_and_errors(tmp_path):
    p = tmp_path / "m.txt"
    p.write_text("0\n1\n1\n0\n")
    np.testing.assert_array_equal(read_mask(p), [False, True, True, False])
    p.write_text("0\n2\n")
    with pytest.raises(ParseError) as err:
        read_mask(p)
    assert ":2:" in str(err.value)
