import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from subalign.errors import MatrixFormatError, ValidationError
from subalign.signal import (
    AttentionMatrix,
    BlockTimings,
    CtcPosterior,
    FrameTimeMap,
    clip_negatives,
    median_filter_rows,
    normalize_over_tokens,
    parse_matrix,
    prefix_sums,
    read_matrix,
    write_matrix,
)
from subalign.synth import oracle_median_filter


def attn(values, frame_map=None):
    return AttentionMatrix(np.asarray(values, dtype=float), frame_map or FrameTimeMap.uniform())


finite_matrices = arrays(
    np.float64,
    st.tuples(st.integers(1, 6), st.integers(1, 8)),
    elements=st.floats(-100, 100, allow_nan=False),
)


class TestNormalize:
    def test_hand_column(self):
        out = normalize_over_tokens(attn([[1.0], [3.0]]))
        assert np.allclose(out.values, [[-1.0], [1.0]])

    def test_constant_column_zeroed(self):
        out = normalize_over_tokens(attn([[5.0], [5.0], [5.0]]))
        assert np.all(out.values == 0.0)

    def test_single_row_all_zero(self):
        out = normalize_over_tokens(attn([[1.0, 2.0, 3.0]]))
        assert np.all(out.values == 0.0)

    @given(finite_matrices)
    def test_columns_standardized(self, values):
        out = normalize_over_tokens(attn(values)).values
        std = np.asarray(values).std(axis=0)
        for c in range(values.shape[1]):
            if std[c] >= 1e-9:
                assert abs(out[:, c].mean()) < 1e-9
                assert abs(out[:, c].std() - 1.0) < 1e-6
            else:
                assert np.all(out[:, c] == 0.0)

    @given(finite_matrices)
    def test_column_order_preserved(self, values):
        # near-constant columns fall below the std floor and are zeroed;
        # elsewhere the affine rescale never inverts a pair, though rounding
        # may collapse close values into ties
        out = normalize_over_tokens(attn(values)).values
        for c in range(values.shape[1]):
            if values[:, c].std() < 1e-9:
                assert np.all(out[:, c] == 0.0)
                continue
            order = np.argsort(values[:, c], kind="stable")
            assert np.all(np.diff(out[order, c]) >= 0)


class TestMedianFilter:
    def test_constant_row_unchanged(self):
        a = attn(np.full((2, 10), 3.5))
        assert np.array_equal(median_filter_rows(a).values, a.values)

    def test_lone_spike_removed(self):
        a = attn([[0, 0, 9, 0, 0, 0, 0]])
        assert np.all(median_filter_rows(a, 7).values == 0.0)

    def test_short_row_matches_oracle(self):
        vals = np.array([[1.0, 5.0, 2.0]])
        out = median_filter_rows(attn(vals), 7).values
        assert np.array_equal(out, oracle_median_filter(vals, 7))

    @given(finite_matrices, st.sampled_from([3, 5, 7]))
    @settings(max_examples=40)
    def test_matches_oracle(self, values, width):
        out = median_filter_rows(attn(values), width).values
        assert np.allclose(out, oracle_median_filter(values, width))

    @given(finite_matrices)
    @settings(max_examples=40)
    def test_stays_within_row_range(self, values):
        out = median_filter_rows(attn(values), 7).values
        for i in range(values.shape[0]):
            assert out[i].min() >= values[i].min() - 1e-12
            assert out[i].max() <= values[i].max() + 1e-12

    def test_even_width_rejected(self):
        with pytest.raises(ValidationError, match="odd"):
            median_filter_rows(attn([[1.0, 2.0]]), 4)


class TestClipNegatives:
    def test_example(self):
        out = clip_negatives(attn([[-3.0, 0.5]]))
        assert np.array_equal(out.values, [[-0.01, 0.5]])

    def test_non_negative_unchanged(self):
        a = attn([[0.0, 1.0], [2.0, 0.3]])
        assert np.array_equal(clip_negatives(a).values, a.values)

    def test_tiny_negative_clipped(self):
        out = clip_negatives(attn([[-1e-9]]))
        assert out.values[0, 0] == -0.01

    def test_range_bounded(self):
        vals = np.random.default_rng(0).normal(size=(4, 5))
        out = clip_negatives(attn(vals), eps=0.01).values
        assert out.min() >= -0.01
        assert out.max() <= max(vals.max(), 0.0)


class TestPrefixSums:
    def test_small_example(self):
        sat = prefix_sums(attn([[1.0, 2.0], [3.0, 4.0]]))
        assert sat.rect_sum(0, 2, 0, 2) == 10.0

    def test_empty_rectangle(self):
        sat = prefix_sums(attn([[1.0, 2.0], [3.0, 4.0]]))
        assert sat.rect_sum(1, 1, 0, 2) == 0.0
        assert sat.rect_sum(0, 2, 2, 2) == 0.0

    def test_random_matrix_vs_naive(self):
        rng = np.random.default_rng(7)
        vals = rng.normal(size=(50, 80))
        sat = prefix_sums(attn(vals))
        for r0, r1, c0, c1 in rng.integers(0, [50, 51, 80, 81], size=(200, 4)):
            r0, r1 = sorted((int(r0), int(r1)))
            c0, c1 = sorted((int(c0), int(c1)))
            naive = sum(
                vals[i][j] for i in range(r0, r1) for j in range(c0, c1)
            )
            got = sat.rect_sum(r0, r1, c0, c1)
            assert got == pytest.approx(naive, rel=1e-9, abs=1e-9)

    @given(finite_matrices)
    @settings(max_examples=40)
    def test_full_sum_matches(self, values):
        sat = prefix_sums(attn(values))
        n, m = values.shape
        assert sat.rect_sum(0, n, 0, m) == pytest.approx(float(values.sum()), rel=1e-9, abs=1e-9)


class TestFrameTimeMap:
    def test_uniform_rounding_half_away(self):
        fm = FrameTimeMap.uniform(33.3)
        assert fm.boundary_ms(0) == 0
        assert fm.boundary_ms(1) == 33
        assert fm.boundary_ms(3) == 100  # 99.9 -> 100

    def test_explicit(self):
        fm = FrameTimeMap.explicit([40.0, 95.5, 200.0])
        assert fm.boundary_ms(0) == 0
        assert fm.boundary_ms(2) == 96
        assert fm.boundary_ms(3) == 200

    def test_explicit_must_increase(self):
        with pytest.raises(ValidationError):
            FrameTimeMap.explicit([10.0, 10.0])

    def test_rejects_non_positive_frame(self):
        with pytest.raises(ValidationError):
            FrameTimeMap.uniform(0)


class TestBlockTimings:
    def test_contiguity_enforced(self):
        with pytest.raises(ValidationError, match="contiguous"):
            BlockTimings(((0, 2), (3, 4)), FrameTimeMap.uniform(), 4)

    def test_must_start_at_zero(self):
        with pytest.raises(ValidationError, match="start at frame 0"):
            BlockTimings(((1, 2),), FrameTimeMap.uniform(), 4)

    def test_ms_intervals(self):
        t = BlockTimings(((0, 2), (2, 5)), FrameTimeMap.uniform(40), 5)
        assert t.ms_intervals() == [(0, 80), (80, 200)]


class TestMatrixFormat:
    def test_attention_uniform(self):
        m = parse_matrix("2 3 40\n1\t2\t3\n4\t5\t6\n")
        assert isinstance(m, AttentionMatrix)
        assert m.values.shape == (2, 3)
        assert m.frame_map.frame_ms == 40.0

    def test_attention_frame_times(self):
        m = parse_matrix("2 3 frame_times\n40\t80\t120\n1\t2\t3\n4\t5\t6\n")
        assert m.frame_map.end_ms == (40.0, 80.0, 120.0)

    def test_row_dimension_mismatch(self):
        with pytest.raises(MatrixFormatError, match="expected 3 values"):
            parse_matrix("2 3 40\n1\t2\n4\t5\t6\n")

    def test_missing_rows(self):
        with pytest.raises(MatrixFormatError, match="found 1"):
            parse_matrix("2 3 40\n1\t2\t3\n")

    def test_non_finite_rejected(self):
        with pytest.raises(MatrixFormatError, match="non-finite"):
            parse_matrix("1 2 40\ninf\t0\n")

    def test_malformed_header(self):
        with pytest.raises(MatrixFormatError):
            parse_matrix("banana\n")

    def test_posterior_header(self):
        rows = "\t".join(str(np.log(1 / 3)) for _ in range(3))
        m = parse_matrix(f"2 3 0 40\n{rows}\n{rows}\n")
        assert isinstance(m, CtcPosterior)
        assert m.blank_index == 0
        assert m.n_frames == 2

    def test_round_trip(self, tmp_path):
        a = attn(np.random.default_rng(3).normal(size=(4, 6)))
        path = tmp_path / "m.tsv"
        write_matrix(path, a)
        back = read_matrix(path)
        assert isinstance(back, AttentionMatrix)
        assert np.allclose(back.values, a.values)
        assert back.frame_map == a.frame_map

    def test_posterior_round_trip(self, tmp_path):
        probs = np.full((3, 4), 0.25)
        p = CtcPosterior(np.log(probs), 1, FrameTimeMap.explicit([40, 80, 130]))
        path = tmp_path / "p.tsv"
        write_matrix(path, p)
        back = read_matrix(path)
        assert isinstance(back, CtcPosterior)
        assert back.blank_index == 1
        assert np.allclose(back.logprobs, p.logprobs)


class TestContainers:
    def test_posterior_rows_must_sum_to_one(self):
        bad = np.log(np.full((2, 3), 0.5))
        with pytest.raises(ValidationError, match="sum to 1"):
            CtcPosterior(bad, 0, FrameTimeMap.uniform())

    def test_attention_rejects_nan(self):
        with pytest.raises(ValidationError):
            attn([[np.nan]])

    def test_frame_map_length_checked(self):
        with pytest.raises(ValidationError, match="frame map"):
            attn([[1.0, 2.0]], FrameTimeMap.explicit([40.0]))
