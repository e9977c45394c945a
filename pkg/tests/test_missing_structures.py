import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robustda.data_model import Dataset, Prior
from robustda.errors import StructureError
from robustda.missing_structures import (
    MissingStructure,
    check_h1,
    check_h1_full,
    check_proposition1,
    decompose,
    is_monotone,
    numerical_rank,
    precedes,
    try_monotonize,
)


def staircase(counts):
    """Monotone mask with ``counts[l]`` rows observing columns l..d."""
    d = len(counts)
    rows = [np.arange(d) >= ell for ell, c in enumerate(counts) for _ in range(c)]
    return np.array(rows, dtype=bool)


def generic_data(mask, p=2, seed=0):
    rng = np.random.default_rng(seed)
    n, d = mask.shape
    x = np.column_stack([np.ones(n), rng.standard_normal((n, p - 1))])
    return Dataset(rng.standard_normal((n, d)), mask, x)


class TestMonotone:
    def test_complete_is_monotone(self):
        for n, d in [(1, 1), (4, 3), (10, 6)]:
            assert is_monotone(MissingStructure.complete(n, d))

    def test_staircase(self):
        assert is_monotone(staircase([3, 2, 4]))

    def test_missing_last_column(self):
        mask = np.ones((3, 2), dtype=bool)
        mask[1, 1] = False
        assert not is_monotone(mask)

    def test_pattern_order_matters(self):
        assert not is_monotone(staircase([2, 3])[::-1])

    def test_identity_arrangement(self):
        dec = try_monotonize(staircase([2, 1, 3]))
        assert dec.is_identity
        np.testing.assert_array_equal(dec.n_per_pattern, [2, 1, 3])
        np.testing.assert_array_equal(dec.cumulative, [2, 3, 6])

    def test_anti_diagonal_fails(self):
        mask = np.array([[False, True], [True, False]])
        assert try_monotonize(mask) is None
        # independent exhaustive check over all row and column orders
        for rp in itertools.permutations(range(2)):
            for cp in itertools.permutations(range(2)):
                assert not is_monotone(mask[list(rp)][:, list(cp)])

    def test_row_shuffle_recovered(self):
        rng = np.random.default_rng(5)
        mask = staircase([4, 3, 2])
        perm = rng.permutation(mask.shape[0])
        dec = try_monotonize(mask[perm])
        arranged = mask[perm][dec.row_permutation][:, dec.column_permutation]
        np.testing.assert_array_equal(arranged, mask)

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_scrambled_staircase_recovered(self, seed):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 6))
        counts = rng.integers(0, 3, size=d)  # n <= 11
        counts[0] += 1
        mask = staircase(counts)
        scrambled = mask[rng.permutation(mask.shape[0])][:, rng.permutation(d)]
        dec = try_monotonize(scrambled)
        assert dec is not None
        arranged = scrambled[dec.row_permutation][:, dec.column_permutation]
        assert is_monotone(arranged)
        assert dec.n_per_pattern.sum() == mask.shape[0]
        assert np.all(np.diff(dec.pattern_of_row) >= 0)


class TestDecompose:
    def test_full_data_single_block(self):
        data = generic_data(np.ones((6, 2), dtype=bool))
        dec = decompose(data.mask, data)
        np.testing.assert_array_equal(dec.y_blocks[0], data.y)
        np.testing.assert_array_equal(dec.x_blocks[0], data.x)

    def test_two_pattern_shapes(self):
        data = generic_data(staircase([45, 5]))
        dec = decompose(data.mask, data)
        assert dec.y_blocks[0].shape == (45, 2)
        assert dec.y_blocks[1].shape == (50, 1)
        np.testing.assert_array_equal(dec.y_blocks[1][:, 0], data.y[:, 1])

    def test_cumulative(self):
        data = generic_data(staircase([2, 1]))
        np.testing.assert_array_equal(decompose(data.mask, data).cumulative, [2, 3])

    def test_non_monotone_raises(self):
        mask = np.array([[True, False], [True, True]])
        with pytest.raises(StructureError):
            decompose(mask, generic_data(mask))


class TestConditionH1:
    def test_two_pattern_design_passes(self):
        data = generic_data(staircase([45, 5]))
        report = check_h1(decompose(data.mask, data), data, Prior.jeffreys(2))
        assert report.passed
        (c1, c2) = report.patterns
        # p + d - l + 1 and p + d - m + l - 1 with p = d = m = 2
        assert (c1.rows, c1.rank, c1.rank_required, c1.count_required, c1.df) == (45, 4, 4, 2, 43)
        assert (c2.rows, c2.rank, c2.rank_required, c2.count_required, c2.df) == (50, 3, 3, 3, 47)

    def test_count_boundary_is_strict(self):
        # p=2, d=2, m=2: pattern 1 needs N_1 > 2; N_1 = 2 -> df = 0
        data = generic_data(staircase([2, 8]))
        report = check_h1(decompose(data.mask, data), data, Prior.jeffreys(2))
        assert not report.patterns[0].count_ok
        assert report.patterns[0].df == 0
        data = generic_data(staircase([3, 8]))
        report = check_h1(decompose(data.mask, data), data, Prior.jeffreys(2))
        assert report.patterns[0].count_ok and report.patterns[0].df == 1

    def test_duplicated_predictor(self):
        mask = staircase([10, 5])
        rng = np.random.default_rng(1)
        z = rng.standard_normal(15)
        data = Dataset(rng.standard_normal((15, 2)), mask, np.column_stack([np.ones(15), z, z]))
        report = check_h1(decompose(mask, data), data, Prior.jeffreys(2))
        assert not report.patterns[0].rank_ok and not report.passed

    def test_full_condition(self):
        data = generic_data(np.ones((50, 2), dtype=bool))
        assert check_h1_full(data, Prior.jeffreys(2))
        # n = p + 2d - m - 1 = 3 fails
        assert not check_h1_full(generic_data(np.ones((3, 2), dtype=bool)), Prior.jeffreys(2))
        y = np.column_stack([data.x[:, 1], np.ones(50)])
        assert not check_h1_full(Dataset(y, None, data.x), Prior.jeffreys(2))
        with pytest.raises(StructureError):
            check_h1_full(generic_data(staircase([4, 2])), Prior.jeffreys(2))

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), m=st.integers(-2, 5))
    def test_count_ok_iff_positive_df(self, seed, m):
        rng = np.random.default_rng(seed)
        d = int(rng.integers(1, 4))
        counts = rng.integers(0, 6, size=d)
        counts[0] += 1
        data = generic_data(staircase(counts), p=int(rng.integers(1, 3)), seed=seed % 1000)
        report = check_h1(decompose(data.mask, data), data, Prior(m, np.zeros((d, d))))
        for c in report.patterns:
            assert c.count_ok == (c.df > 0)

    def test_rank_tolerance(self):
        a = np.ones((5, 2))
        a[:, 1] = 2.0 + 1e-14
        assert numerical_rank(a) == 1
        assert numerical_rank(np.eye(3)) == 3
        assert numerical_rank(np.zeros((3, 2))) == 0


class TestPrecedes:
    def test_examples(self):
        k = staircase([2, 1])
        assert precedes(k, np.ones_like(k))
        assert not precedes(k, k)
        a = np.array([[True, False], [True, True]])
        b = np.array([[False, True], [True, True]])
        assert not precedes(a, b) and not precedes(b, a)

    def test_shape_mismatch(self):
        with pytest.raises(StructureError):
            precedes(np.ones((2, 2), bool), np.ones((3, 2), bool))

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_strict_partial_order(self, seed):
        rng = np.random.default_rng(seed)
        k1 = rng.random((4, 3)) < 0.4
        k2 = k1 | (rng.random((4, 3)) < 0.3)
        k3 = k2 | (rng.random((4, 3)) < 0.3)
        assert not precedes(k1, k1)
        if precedes(k1, k2) and precedes(k2, k3):
            assert precedes(k1, k3)
        if precedes(k1, k2):
            assert not precedes(k2, k1)


class TestProposition1:
    def test_monotone_k_is_own_witness(self):
        data = generic_data(staircase([45, 5]))
        res = check_proposition1(data.mask, data, Prior.jeffreys(2))
        assert res.found
        np.testing.assert_array_equal(res.mask, data.mask)

    def test_non_monotone_staircase_witness(self):
        # zero one entry of the last column in a pattern-2 style row
        mask = staircase([20, 5, 5])
        mask[22] = [False, True, False]  # not monotone under any order
        assert try_monotonize(mask) is None
        data = generic_data(mask)
        res = check_proposition1(mask, data, Prior.jeffreys(3))
        assert res.found
        assert np.all(mask[res.mask])  # witness only drops entries
        sub = res.mask[res.kept_rows]
        dec = try_monotonize(sub)
        assert is_monotone(sub[dec.row_permutation][:, dec.column_permutation])
        assert not res.mask[22].any()

    def test_tiny_n_has_no_witness(self):
        mask = np.array([[True, True], [False, True]])
        res = check_proposition1(mask, generic_data(mask), Prior.jeffreys(2))
        assert not res.found
