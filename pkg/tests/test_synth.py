import numpy as np
import pytest

from subalign.align import dtw_align, sbaam_align
from subalign.core import tokens_from_tagged_text
from subalign.errors import ProviderError, ValidationError
from subalign.signal import AttentionMatrix, FrameTimeMap
from subalign.synth import (
    SyntheticAlignment,
    gen_block_diag,
    gen_peaky_posterior,
    mock_frame_provider,
    oracle_dtw,
    oracle_sbaam,
    random_spec,
    save_fixture,
)


def attn(values):
    return AttentionMatrix(np.asarray(values, dtype=float), FrameTimeMap.uniform())


class TestGenBlockDiag:
    def test_noiseless_exact_matrix(self):
        spec = SyntheticAlignment(4, 6, (1, 3), (3, 6), 0.0, 0)
        a, tokens = gen_block_diag(spec)
        expect = np.zeros((4, 6))
        expect[:2, :3] = 1.0
        expect[2:, 3:] = 1.0
        assert np.array_equal(a.values, expect)
        assert tokens.boundary_indices == (1, 3)

    def test_deterministic(self):
        spec = random_spec(3, 30, 0.1, seed=9)
        a1, _ = gen_block_diag(spec)
        a2, _ = gen_block_diag(spec)
        assert np.array_equal(a1.values, a2.values)

    def test_noiseless_sbaam_recovers_ends(self):
        # the cut column itself counts toward neither rectangle in full, so a
        # noiseless fixture may come out one frame early; the last end is exact
        spec = SyntheticAlignment(4, 6, (1, 3), (3, 6), 0.0, 0)
        a, tokens = gen_block_diag(spec)
        ends = tuple(e for _, e in sbaam_align(a, tokens).intervals)
        assert all(abs(e - true) <= 1 for e, true in zip(ends, spec.true_ends))
        assert ends[-1] == 6

    def test_infeasible_spec(self):
        with pytest.raises(ValidationError):
            SyntheticAlignment(4, 2, (1, 3), (1, 2, 3), 0.0, 0)
        with pytest.raises(ValidationError):
            random_spec(3, 2, 0.0, seed=0)

    def test_ends_must_fit(self):
        with pytest.raises(ValidationError, match="exceeds"):
            SyntheticAlignment(4, 5, (1, 3), (3, 6), 0.0, 0)


class TestGenPeakyPosterior:
    VOCAB = {"a": 1, "<eob>": 2}

    def test_matches_hand_viterbi(self):
        from subalign.align import ctc_forced_align

        t = tokens_from_tagged_text("a <eob>")
        p = gen_peaky_posterior(t, [0, 1], self.VOCAB, n_frames=3)
        assert ctc_forced_align(p, t, self.VOCAB).intervals == ((0, 2),)

    def test_blank_dominates_off_frames(self):
        t = tokens_from_tagged_text("a <eob>")
        p = gen_peaky_posterior(t, [0, 1], self.VOCAB, n_frames=3)
        assert np.argmax(p.logprobs[2]) == 0
        assert np.exp(p.logprobs[2, 0]) == pytest.approx(0.9)

    def test_rows_sum_to_one(self):
        t = tokens_from_tagged_text("a <eob>")
        p = gen_peaky_posterior(t, [0, 2], self.VOCAB, n_frames=5)
        assert np.allclose(np.exp(p.logprobs).sum(axis=1), 1.0, atol=1e-9)

    def test_frame_collision_rejected(self):
        t = tokens_from_tagged_text("a <eob>")
        with pytest.raises(ValidationError, match="increasing"):
            gen_peaky_posterior(t, [1, 1], self.VOCAB, n_frames=3)


class TestOracleDtw:
    def test_identity_diagonal(self):
        t = tokens_from_tagged_text("a <eob> b <eob>")
        timings = oracle_dtw(attn(np.eye(4)), t, preprocess=False)
        assert tuple(e for _, e in timings.intervals) == (2, 4)

    def test_single_boundary_trivial(self):
        t = tokens_from_tagged_text("x <eob>")
        a = attn(np.random.default_rng(0).normal(size=(2, 5)))
        assert oracle_dtw(a, t, preprocess=False).intervals == dtw_align(
            a, t, preprocess=False
        ).intervals

    def test_size_cap(self):
        t = tokens_from_tagged_text("x <eob>")
        with pytest.raises(ValidationError, match="capped"):
            oracle_dtw(attn(np.ones((2, 9))), t)

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_production_on_random(self, seed):
        rng = np.random.default_rng(seed)
        spec = random_spec(2, 8, 0.6, seed, tokens_per_block=3)
        a, tokens = gen_block_diag(spec)
        assert oracle_dtw(a, tokens).intervals == dtw_align(a, tokens).intervals


class TestOracleSbaam:
    def test_noiseless_near_true_ends(self):
        spec = SyntheticAlignment(4, 6, (1, 3), (3, 6), 0.0, 0)
        a, tokens = gen_block_diag(spec)
        ends = tuple(e for _, e in oracle_sbaam(a, tokens).intervals)
        assert all(abs(e - true) <= 1 for e, true in zip(ends, spec.true_ends))
        assert ends[-1] == 6

    def test_single_block_same_argmax(self):
        t = tokens_from_tagged_text("x y <eob>")
        a = attn(np.random.default_rng(2).normal(size=(3, 12)))
        assert oracle_sbaam(a, t).intervals == sbaam_align(a, t).intervals

    @pytest.mark.parametrize("seed", range(30))
    def test_matches_production_on_random(self, seed):
        spec = random_spec(3, 25, 0.7, seed, tokens_per_block=4)
        a, tokens = gen_block_diag(spec)
        assert oracle_sbaam(a, tokens).intervals == sbaam_align(a, tokens).intervals
        assert (
            oracle_sbaam(a, tokens, skip_eob_row=True).intervals
            == sbaam_align(a, tokens, skip_eob_row=True).intervals
        )


class TestMockFrameProvider:
    def test_exact_vectors_score_one(self):
        vecs = {"a": np.array([1.0, 0.0])}
        frames = np.tile(vecs["a"], (5, 1))
        provider = mock_frame_provider(frames, 40.0, vecs)
        audio = provider.audio_embed("x.wav", 0, 200, "de")
        assert np.allclose(audio, [1.0, 0.0])

    def test_empty_slice_error(self):
        provider = mock_frame_provider(np.ones((5, 2)), 40.0, {})
        with pytest.raises(ProviderError, match="overlap"):
            provider.audio_embed("x.wav", 300, 400, "de")

    def test_unknown_text_error(self):
        provider = mock_frame_provider(np.ones((5, 2)), 40.0, {})
        with pytest.raises(ProviderError, match="stored"):
            provider.text_embed("nope", "de")


class TestFixtureFiles:
    def test_save_fixture_round_trips(self, tmp_path):
        from subalign.signal import read_matrix

        spec = random_spec(2, 10, 0.05, seed=4)
        save_fixture(tmp_path, spec)
        matrix = read_matrix(tmp_path / "attention.tsv")
        a, _ = gen_block_diag(spec)
        assert np.allclose(matrix.values, a.values)
        import json

        meta = json.loads((tmp_path / "spec.json").read_text())
        assert meta["seed"] == 4 and meta["n_frames"] == 10
