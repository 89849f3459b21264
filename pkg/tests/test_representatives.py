"""Filter flattening and representative extraction."""

import numpy as np
import pytest

from simprune.errors import ConvergenceError
from simprune.representatives import (build_representative_matrix,
                                      canonical_sign, filter_matrix,
                                      filter_representative)
from simprune.tensor_io import FilterTensor

from conftest import make_layer, oracle_representative


class TestFilterMatrix:

    def test_layout_row_is_spatial_position(self):
        # entry (i, j, ch) must land in row i*h + j, column ch
        w, h, c = 2, 3, 4
        arr = np.arange(w * h * c, dtype=np.float64).reshape(w, h, c)
        mat = filter_matrix(arr)
        assert mat.shape == (6, 4)
        for i in range(w):
            for j in range(h):
                assert np.array_equal(mat[i * h + j], arr[i, j])

    def test_promotes_to_float64(self):
        mat = filter_matrix(np.ones((2, 2, 1), dtype=np.float32))
        assert mat.dtype == np.float64

    def test_rejects_wrong_rank(self):
        with pytest.raises(ValueError):
            filter_matrix(np.ones((2, 2)))


class TestCanonicalSign:

    def test_flips_negative_peak(self):
        v = np.array([0.1, -0.9, 0.3])
        out = canonical_sign(v)
        assert out[1] == pytest.approx(0.9)

    def test_keeps_positive_peak(self):
        v = np.array([0.1, 0.9, -0.3])
        assert np.array_equal(canonical_sign(v), v)

    def test_tie_uses_lowest_index(self):
        v = np.array([-0.5, 0.5])
        out = canonical_sign(v)
        assert out[0] == pytest.approx(0.5)


class TestFilterRepresentative:

    def test_rank_one_filter_recovers_direction(self):
        u = np.array([3.0, 0.0, 4.0]) / 5.0
        v = np.array([1.0, 2.0])
        vec, degenerate = filter_representative(np.outer(u, v))
        assert not degenerate
        np.testing.assert_allclose(vec, u, atol=1e-12)

    def test_matches_svd_oracle(self):
        for seed in range(30):
            rng = np.random.default_rng(seed)
            mat = rng.standard_normal((9, 4))
            vec, degenerate = filter_representative(mat)
            assert not degenerate
            np.testing.assert_allclose(vec, oracle_representative(mat), atol=1e-8)

    def test_unit_norm(self):
        rng = np.random.default_rng(5)
        vec, _ = filter_representative(rng.standard_normal((6, 3)))
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-12)

    def test_scale_invariant(self):
        rng = np.random.default_rng(11)
        mat = rng.standard_normal((9, 4))
        a, _ = filter_representative(mat)
        b, _ = filter_representative(1000.0 * mat)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_sign_flip_of_filter_gives_same_representative(self):
        rng = np.random.default_rng(12)
        mat = rng.standard_normal((9, 4))
        a, _ = filter_representative(mat)
        b, _ = filter_representative(-mat)
        np.testing.assert_allclose(a, b, atol=1e-9)

    def test_zero_filter_degenerate(self):
        vec, degenerate = filter_representative(np.zeros((9, 4)))
        assert degenerate
        assert np.array_equal(vec, np.zeros(9))

    def test_below_threshold_degenerate(self):
        vec, degenerate = filter_representative(np.full((4, 2), 1e-14))
        assert degenerate

    def test_non_finite_rejected(self):
        mat = np.ones((4, 2))
        mat[0, 0] = np.inf
        with pytest.raises(ValueError, match="infinite"):
            filter_representative(mat)

    def test_single_channel(self):
        # c=1: representative is the normalized kernel itself, sign-canonical
        mat = -np.arange(1.0, 5.0).reshape(4, 1)
        vec, _ = filter_representative(mat)
        np.testing.assert_allclose(vec, np.arange(1.0, 5.0) / np.linalg.norm(np.arange(1.0, 5.0)),
                                   atol=1e-12)

    def test_orthogonal_start_recovers(self):
        # constant start vector is orthogonal to the dominant direction here
        u = np.array([1.0, -1.0, 0.0, 0.0]) / np.sqrt(2.0)
        vec, _ = filter_representative(np.outer(u, [2.0, 1.0]))
        np.testing.assert_allclose(np.abs(vec), np.abs(u), atol=1e-10)


class TestBuildRepresentativeMatrix:

    def test_shapes_and_flags(self):
        layer = make_layer("L", 7, 3, 3, 2, seed=0)
        reps = build_representative_matrix(layer)
        assert reps.columns.shape == (9, 7)
        assert reps.d == 9 and reps.n == 7
        assert reps.degenerate.shape == (7,)
        assert not reps.degenerate.any()
        np.testing.assert_allclose(np.linalg.norm(reps.columns, axis=0),
                                   np.ones(7), atol=1e-12)

    def test_matches_per_filter_calls(self):
        layer = make_layer("L", 5, 2, 2, 3, seed=1)
        reps = build_representative_matrix(layer)
        for i in range(5):
            vec, _ = filter_representative(
                filter_matrix(layer.data[i].astype(np.float64)))
            np.testing.assert_allclose(reps.columns[:, i], vec, atol=1e-12)

    def test_degenerate_column_flagged(self):
        arr = np.random.default_rng(2).standard_normal((3, 2, 2, 2)).astype(np.float32)
        arr[1] = 0.0
        reps = build_representative_matrix(FilterTensor("L", arr))
        assert list(reps.degenerate) == [False, True, False]
        assert np.array_equal(reps.columns[:, 1], np.zeros(4))

    def test_convergence_error_names_filter(self):
        # two leading singular values separated by 1e-9 stall the iteration
        rng = np.random.default_rng(3)
        q1, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        q2, _ = np.linalg.qr(rng.standard_normal((4, 4)))
        slow = q1 @ np.diag([1.0, 1.0 - 1e-9, 1e-3, 1e-4]) @ q2.T
        arr = np.zeros((2, 2, 2, 4), dtype=np.float32)
        arr[0] = np.float32(1.0)
        arr[1] = slow.reshape(2, 2, 4).astype(np.float32)
        with pytest.raises(ConvergenceError, match="filter 1"):
            build_representative_matrix(FilterTensor("L", arr))
