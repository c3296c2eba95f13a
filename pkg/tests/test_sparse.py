import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from mohinrec.errors import ShapeError, ValidationError
from mohinrec.sparse import (
    SparseMatrix,
    add_scaled,
    dump_coo,
    entry,
    hadamard,
    load_coo,
    spmm,
    transpose,
)


def dense(rows, cols):
    return hnp.arrays(np.float64, (rows, cols), elements=st.integers(0, 3).map(float))


@st.composite
def chain(draw, k=2):
    dims = draw(st.lists(st.integers(0, 30), min_size=k + 1, max_size=k + 1))
    return [draw(dense(dims[i], dims[i + 1])) for i in range(k)]


@st.composite
def same_shape_pair(draw):
    n, m = draw(st.integers(0, 30)), draw(st.integers(0, 30))
    return draw(dense(n, m)), draw(dense(n, m))


S = SparseMatrix.from_dense


class TestConstruction:
    def test_zeros_are_compacted(self):
        m = SparseMatrix.from_coo([0, 0, 1], [1, 1, 0], [2.0, -2.0, 0.0], (2, 2))
        assert m.nnz == 0

    def test_duplicates_summed_and_sorted(self):
        m = SparseMatrix.from_coo([1, 0, 0], [0, 2, 1], [1.0, 2.0, 3.0], (2, 3))
        assert m.row_offsets.tolist() == [0, 2, 3]
        assert m.col_indices.tolist() == [1, 2, 0]
        assert m.values.tolist() == [3.0, 2.0, 1.0]

    def test_raw_constructor_rejects_unsorted_rows(self):
        with pytest.raises(ValidationError):
            SparseMatrix(1, 3, [0, 2], [2, 1], [1.0, 1.0])

    def test_raw_constructor_rejects_explicit_zero(self):
        with pytest.raises(ValidationError):
            SparseMatrix(1, 3, [0, 1], [2], [0.0])

    def test_arrays_are_read_only(self):
        m = S([[0, 1]])
        with pytest.raises(ValueError):
            m.values[0] = 5

    def test_coordinate_outside_shape(self):
        with pytest.raises(ShapeError):
            SparseMatrix.from_coo([2], [0], [1.0], (2, 2))


class TestSpmm:
    def test_identity(self):
        x = S([[0, 1, 2, 0], [3, 0, 0, 1], [0, 0, 0, 0]])
        assert spmm(SparseMatrix.identity(3), x) == x

    def test_nilpotent(self):
        n = S([[0, 1], [0, 0]])
        assert spmm(n, n) == SparseMatrix.zeros(2, 2)

    def test_shape_error(self):
        with pytest.raises(ShapeError):
            spmm(S(np.ones((2, 3))), S(np.ones((2, 3))))

    def test_toy_social_path(self, toy_hin):
        # u1 -> u2 -> b2 is the single User-User-Item path from u1 to b2
        c = spmm(toy_hin.w_uu, toy_hin.w_ub)
        assert entry(c, 0, 1) == 1.0

    @given(chain(2))
    def test_matches_dense(self, ms):
        a, b = ms
        assert spmm(S(a), S(b)) == S(a @ b)

    @given(chain(3))
    @settings(max_examples=50)
    def test_associative(self, ms):
        a, b, c = (S(m) for m in ms)
        assert spmm(spmm(a, b), c) == spmm(a, spmm(b, c))

    @given(chain(2))
    def test_transpose_of_product(self, ms):
        a, b = (S(m) for m in ms)
        assert transpose(spmm(a, b)) == spmm(transpose(b), transpose(a))


class TestHadamard:
    def test_identity_with_ones(self):
        x = S([[0, 2], [3, 0]])
        assert hadamard(x, S(np.ones((2, 2)))) == x

    def test_zero(self):
        x = S([[0, 2], [3, 0]])
        assert hadamard(x, SparseMatrix.zeros(2, 2)) == SparseMatrix.zeros(2, 2)

    def test_hand_example(self):
        assert hadamard(S([[0, 2], [3, 0]]), S([[0, 5], [0, 7]])) == S([[0, 10], [0, 0]])

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            hadamard(S([[1]]), S([[1, 1]]))

    @given(same_shape_pair())
    def test_matches_dense_commutative_and_sparser(self, pair):
        a, b = (S(m) for m in pair)
        h = hadamard(a, b)
        assert h == S(pair[0] * pair[1])
        assert h == hadamard(b, a)
        assert h.nnz <= min(a.nnz, b.nnz)


class TestAddScaled:
    def test_cancellation(self):
        x = S([[1, 0], [2, 3]])
        assert add_scaled(x, 1, x, -1) == SparseMatrix.zeros(2, 2)

    def test_add_zero(self):
        x = S([[1, 0], [2, 3]])
        assert add_scaled(x, 1, SparseMatrix.zeros(2, 2), 0.5) == x

    def test_hand_example(self):
        assert add_scaled(S([[0, 2]]), 0.5, S([[4, 0]]), 0.25) == S([[1, 1]])

    def test_rejects_non_finite(self):
        with pytest.raises(ValidationError):
            add_scaled(S([[1]]), np.nan, S([[1]]), 1)

    @given(same_shape_pair(), st.sampled_from([0.0, 0.25, 0.5, 1.0, 2.0]),
           st.sampled_from([0.0, 0.5, 1.0, 3.0]))
    def test_matches_dense(self, pair, ca, cb):
        a, b = pair
        assert add_scaled(S(a), ca, S(b), cb) == S(ca * a + cb * b)


class TestTranspose:
    def test_hand_example(self):
        assert transpose(S([[0, 1], [0, 0]])) == S([[0, 0], [1, 0]])

    def test_symmetric_fixed_point(self):
        x = S([[0, 2, 1], [2, 0, 0], [1, 0, 5]])
        assert transpose(x) == x

    @given(dense(7, 4))
    def test_involution_and_dense(self, a):
        x = S(a)
        assert transpose(transpose(x)) == x
        assert transpose(x) == S(a.T)


class TestEntry:
    def test_zero_matrix(self):
        assert entry(SparseMatrix.zeros(1, 1), 0, 0) == 0.0

    def test_stored_value(self):
        assert entry(S([[0, 3]]), 0, 1) == 3.0

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            entry(S([[0, 3]]), 1, 0)


class TestCooDump:
    def test_format_is_row_major(self):
        x = S([[0, 2.5], [1, 0]])
        assert dump_coo(x) == "0\t1\t2.5\n1\t0\t1\n"

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        a = rng.integers(0, 4, size=(6, 5)) * 0.5
        x = S(a)
        assert load_coo(io.StringIO(dump_coo(x)), x.shape) == x
