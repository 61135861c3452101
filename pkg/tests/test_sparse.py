"""Sparse containers and the nonzero partitioner."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sinkwmd.sparse import (
    SparseVector,
    StructuralError,
    column_blocks,
    csr_from_triplets,
    csr_validate,
    nnz_partition,
    partitions_to_arrays,
)


def locate_row_by_scan(row_ptr, offset):
    """Independent oracle: linear scan for the row containing a nonzero."""
    for r in range(len(row_ptr) - 1):
        if row_ptr[r] <= offset < row_ptr[r + 1]:
            return r
    return len(row_ptr) - 1


def assert_partition_invariants(row_ptr, nnz, parts):
    assert len(parts) >= 1
    base = nnz // len(parts)
    expect_begin = 0
    for w, part in enumerate(parts):
        assert part.worker_id == w
        assert part.nnz_begin == expect_begin, "partitions must be contiguous"
        assert part.size in (base, base + 1), "sizes must differ by at most one"
        if part.size > 0:
            assert row_ptr[part.start_row] <= part.nnz_begin < row_ptr[part.start_row + 1]
            assert part.start_row == locate_row_by_scan(row_ptr, part.nnz_begin)
        expect_begin = part.nnz_end
    assert expect_begin == nnz, "union must cover [0, nnz)"


class TestCsrFromTriplets:
    def test_single_entry(self):
        m = csr_from_triplets([(0, 0, 1.0)], 1, 1)
        assert m.row_ptr.tolist() == [0, 1]
        assert m.col_idx.tolist() == [0]
        assert m.values.tolist() == [1.0]

    def test_duplicates_merge(self):
        m = csr_from_triplets([(0, 1, 0.5), (0, 1, 0.5)], 1, 2)
        assert m.nnz == 1
        assert m.col_idx.tolist() == [1]
        assert m.values.tolist() == [1.0]

    def test_rows_sorted(self):
        m = csr_from_triplets([(1, 0, 2.0), (0, 0, 3.0)], 2, 1)
        assert m.row_ptr.tolist() == [0, 1, 2]
        assert m.values.tolist() == [3.0, 2.0]

    def test_zero_sum_dropped(self):
        m = csr_from_triplets([(0, 0, 1.0), (0, 0, -1.0), (1, 0, 2.0)], 2, 1)
        assert m.nnz == 1
        assert m.values.tolist() == [2.0]

    def test_out_of_bounds_named(self):
        with pytest.raises(StructuralError, match=r"\(2, 0, 1.0\)"):
            csr_from_triplets([(2, 0, 1.0)], 2, 1)
        with pytest.raises(StructuralError):
            csr_from_triplets([(0, -1, 1.0)], 2, 2)

    def test_empty(self):
        m = csr_from_triplets([], 3, 4)
        assert m.nnz == 0
        assert m.row_ptr.tolist() == [0, 0, 0, 0]

    @given(
        st.lists(
            st.tuples(st.integers(0, 4), st.integers(0, 4),
                      st.sampled_from([0.5, 1.0, 2.0, -1.0, 3.25])),
            max_size=20,
        ),
        st.randoms(),
    )
    def test_permutation_invariant(self, triplets, rnd):
        a = csr_from_triplets(triplets, 5, 5)
        shuffled = list(triplets)
        rnd.shuffle(shuffled)
        b = csr_from_triplets(shuffled, 5, 5)
        assert np.array_equal(a.row_ptr, b.row_ptr)
        assert np.array_equal(a.col_idx, b.col_idx)
        assert np.array_equal(a.values, b.values)

    @given(
        st.lists(
            st.tuples(st.integers(0, 5), st.integers(0, 5),
                      st.floats(0.1, 10.0, allow_nan=False)),
            max_size=25,
        )
    )
    def test_triplet_round_trip(self, triplets):
        a = csr_from_triplets(triplets, 6, 6)
        b = csr_from_triplets(a.to_triplets(), 6, 6)
        assert np.array_equal(a.row_ptr, b.row_ptr)
        assert np.array_equal(a.col_idx, b.col_idx)
        assert np.array_equal(a.values, b.values)


class TestCsrValidate:
    def test_valid(self):
        m = csr_from_triplets([(0, 0, 1.0), (1, 1, 2.0)], 2, 2)
        assert csr_validate(m) == []

    def test_row_ptr_decreasing(self):
        m = csr_from_triplets([(0, 0, 1.0), (1, 0, 1.0)], 2, 1)
        object.__setattr__(m, "row_ptr", np.array([0, 2, 1]))
        violations = csr_validate(m)
        assert any("row_ptr non-decreasing at row 1" in v for v in violations)

    def test_col_idx_not_increasing(self):
        m = csr_from_triplets([(0, 0, 1.0), (0, 1, 1.0)], 1, 2)
        object.__setattr__(m, "col_idx", np.array([1, 1]))
        violations = csr_validate(m)
        assert any("strictly increasing" in v for v in violations)

    def test_negative_value(self):
        m = csr_from_triplets([(0, 0, 1.0)], 1, 1)
        object.__setattr__(m, "values", np.array([-1.0]))
        assert any("negative" in v for v in csr_validate(m))


class TestSparseVector:
    def test_valid_and_dense(self):
        v = SparseVector(4, [1, 3], [0.5, 0.5])
        assert v.to_dense().tolist() == [0.0, 0.5, 0.0, 0.5]
        assert v.nnz == 2

    @pytest.mark.parametrize(
        "indices,values",
        [([3, 1], [0.5, 0.5]), ([1, 1], [0.5, 0.5]), ([1, 4], [0.5, 0.5]),
         ([1], [0.0]), ([1], [-0.5])],
    )
    def test_invalid(self, indices, values):
        with pytest.raises(StructuralError):
            SparseVector(4, indices, values)


class TestNnzPartition:
    def test_even_split_single_row(self):
        parts = nnz_partition(np.array([0, 4]), 4, 2)
        assert [(p.nnz_begin, p.nnz_end, p.start_row) for p in parts] == [
            (0, 2, 0), (2, 4, 0)
        ]

    def test_split_across_rows(self):
        row_ptr = np.array([0, 1, 3, 6])
        parts = nnz_partition(row_ptr, 6, 3)
        assert [(p.nnz_begin, p.nnz_end, p.start_row) for p in parts] == [
            (0, 2, 0), (2, 4, 1), (4, 6, 2)
        ]
        for p in parts:
            assert p.start_row == locate_row_by_scan(row_ptr, p.nnz_begin)

    def test_more_workers_than_work(self):
        parts = nnz_partition(np.array([0, 3]), 3, 5)
        assert [p.size for p in parts] == [1, 1, 1, 0, 0]
        assert_partition_invariants(np.array([0, 3]), 3, parts)

    def test_zero_workers_rejected(self):
        with pytest.raises(ValueError):
            nnz_partition(np.array([0, 3]), 3, 0)

    @given(
        st.lists(st.integers(0, 5), min_size=1, max_size=25),
        st.integers(1, 30),
    )
    @settings(max_examples=200)
    def test_invariants_random(self, row_counts, p_offset):
        row_ptr = np.concatenate(([0], np.cumsum(row_counts))).astype(np.int64)
        nnz = int(row_ptr[-1])
        p = 1 + p_offset % (nnz + 2)
        parts = nnz_partition(row_ptr, nnz, p)
        assert len(parts) == p
        assert_partition_invariants(row_ptr, nnz, parts)

    def test_partitions_to_arrays(self):
        row_ptr = np.array([0, 1, 3, 6])
        parts = nnz_partition(row_ptr, 6, 3)
        bounds, start_rows = partitions_to_arrays(parts)
        assert bounds.tolist() == [0, 2, 4, 6]
        assert start_rows.tolist() == [0, 1, 2]


class TestColumnBlocks:
    @given(
        st.lists(st.integers(0, 6), min_size=1, max_size=20),
        st.integers(1, 8),
    )
    def test_cover_and_monotone(self, col_counts, p):
        col_ptr = np.concatenate(([0], np.cumsum(col_counts))).astype(np.int64)
        blocks = column_blocks(col_ptr, p)
        assert blocks.size == p + 1
        assert blocks[0] == 0 and blocks[-1] == len(col_counts)
        assert np.all(np.diff(blocks) >= 0)

    def test_balances_nonzeros(self):
        col_ptr = np.array([0, 10, 10, 10, 20], dtype=np.int64)
        blocks = column_blocks(col_ptr, 2)
        # both halves carry 10 of the 20 nonzeros
        assert col_ptr[blocks[1]] == 10


class TestAgainstScipy:
    """scipy.sparse as an independent oracle for the container itself."""

    # dyadic values keep duplicate summation exact in both routes; the
    # association order of inexact duplicate sums is not part of the contract
    @given(
        st.lists(
            st.tuples(st.integers(0, 7), st.integers(0, 5),
                      st.sampled_from([0.5, 1.0, 2.0, -0.5, -1.0, 3.25, -3.25])),
            max_size=40,
        )
    )
    @settings(max_examples=100)
    def test_csr_layout_matches_scipy(self, triplets):
        import scipy.sparse as sp

        ours = csr_from_triplets(triplets, 8, 6)
        if triplets:
            rows, cols, vals = zip(*triplets)
            ref = sp.csr_matrix(
                (np.asarray(vals, float), (rows, cols)), shape=(8, 6)
            )
        else:
            ref = sp.csr_matrix((8, 6), dtype=float)
        ref.sum_duplicates()
        ref.eliminate_zeros()
        ref.sort_indices()
        assert np.array_equal(ours.row_ptr, ref.indptr)
        assert np.array_equal(ours.col_idx, ref.indices)
        assert np.array_equal(ours.values, ref.data)

    def test_csc_matches_scipy(self):
        import scipy.sparse as sp

        rng = np.random.default_rng(99)
        triplets = [
            (int(rng.integers(0, 10)), int(rng.integers(0, 7)), float(v))
            for v in rng.random(30) + 0.1
        ]
        ours = csr_from_triplets(triplets, 10, 7)
        col_ptr, rows, _, vals = ours.csc_index()
        ref = sp.csr_matrix(
            (ours.values, ours.col_idx, ours.row_ptr), shape=(10, 7)
        ).tocsc()
        ref.sort_indices()
        assert np.array_equal(col_ptr, ref.indptr)
        assert np.array_equal(rows, ref.indices)
        assert np.array_equal(vals, ref.data)


class TestCscIndex:
    def test_matches_dense_transpose_walk(self):
        m = csr_from_triplets(
            [(0, 1, 1.0), (1, 0, 2.0), (1, 1, 3.0), (2, 0, 4.0)], 3, 2
        )
        col_ptr, rows, pos, vals = m.csc_index()
        assert col_ptr.tolist() == [0, 2, 4]
        assert rows.tolist() == [1, 2, 0, 1]  # increasing rows per column
        assert np.array_equal(vals, m.values[pos])
        dense = m.to_dense()
        for j in range(m.n_cols):
            seg = slice(col_ptr[j], col_ptr[j + 1])
            assert np.array_equal(dense[rows[seg], j], vals[seg])
