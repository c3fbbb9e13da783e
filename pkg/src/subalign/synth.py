"""Synthetic fixtures and brute-force oracles for the aligners.

The generators build deterministic block-diagonal attention matrices and
peaky CTC posteriors from a seed; the oracles re-derive alignments through
exhaustive enumeration or direct summation so the production aligners can be
checked against an independent code path.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass

import numpy as np

from .core import EOB, TaggedTokens
from .errors import ProviderError, ValidationError
from .signal import (
    AttentionMatrix,
    BlockTimings,
    CtcPosterior,
    FrameTimeMap,
    clip_negatives,
    median_filter_rows,
    normalize_over_tokens,
    write_matrix,
)

ORACLE_DTW_MAX_TOKENS = 6
ORACLE_DTW_MAX_FRAMES = 8


@dataclass(frozen=True)
class SyntheticAlignment:
    """Recipe for one block-diagonal attention fixture."""

    n_tokens: int
    n_frames: int
    boundaries: tuple[int, ...]
    true_ends: tuple[int, ...]
    noise_std: float
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "boundaries", tuple(self.boundaries))
        object.__setattr__(self, "true_ends", tuple(self.true_ends))
        B, ends = self.boundaries, self.true_ends
        if not B or B[-1] != self.n_tokens - 1:
            raise ValidationError("last token must be a block boundary")
        if B[0] < 1 or any(b2 - b1 < 2 for b1, b2 in zip(B, B[1:])):
            raise ValidationError("every block needs at least one word token")
        if len(ends) != len(B):
            raise ValidationError(f"{len(B)} blocks but {len(ends)} true ends")
        prev = 0
        for e in ends:
            if e <= prev:
                raise ValidationError("true ends must give every block at least one frame")
            prev = e
        if ends[-1] > self.n_frames:
            raise ValidationError(f"last end {ends[-1]} exceeds {self.n_frames} frames")
        if self.noise_std < 0:
            raise ValidationError("noise std must be non-negative")

    def tokens(self) -> TaggedTokens:
        toks = [
            EOB if i in set(self.boundaries) else f"w{i}"
            for i in range(self.n_tokens)
        ]
        return TaggedTokens(tuple(toks))


def random_spec(
    n_blocks: int,
    n_frames: int,
    noise_std: float,
    seed: int,
    tokens_per_block: int = 4,
) -> SyntheticAlignment:
    """Seeded random recipe: fixed tokens per block, random block-end frames
    (the last block always ends at the final frame)."""
    if n_blocks < 1 or tokens_per_block < 2:
        raise ValidationError("need at least one block and two tokens per block")
    if n_frames < n_blocks:
        raise ValidationError(f"{n_frames} frames cannot hold {n_blocks} blocks")
    rng = np.random.default_rng(seed)
    boundaries = tuple(tokens_per_block * (i + 1) - 1 for i in range(n_blocks))
    cuts = sorted(
        int(c) for c in rng.choice(np.arange(1, n_frames), size=n_blocks - 1, replace=False)
    )
    return SyntheticAlignment(
        n_tokens=n_blocks * tokens_per_block,
        n_frames=n_frames,
        boundaries=boundaries,
        true_ends=tuple(cuts + [n_frames]),
        noise_std=noise_std,
        seed=seed,
    )


def gen_block_diag(spec: SyntheticAlignment) -> tuple[AttentionMatrix, TaggedTokens]:
    """Block-diagonal attention: 1.0 on each block's token rows over its true
    frame span, 0 elsewhere, plus seeded Gaussian noise."""
    tokens = spec.tokens()
    A = np.zeros((spec.n_tokens, spec.n_frames))
    row = 0
    frame = 0
    for b, end in zip(spec.boundaries, spec.true_ends):
        A[row : b + 1, frame:end] = 1.0
        row = b + 1
        frame = end
    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        A = A + rng.normal(0.0, spec.noise_std, size=A.shape)
    return AttentionMatrix(A, FrameTimeMap.uniform()), tokens


def save_fixture(dirpath, spec: SyntheticAlignment) -> None:
    """Write attention.tsv, tokens.txt, and spec.json for a recipe."""
    A, tokens = gen_block_diag(spec)
    os.makedirs(dirpath, exist_ok=True)
    write_matrix(os.path.join(dirpath, "attention.tsv"), A)
    with open(os.path.join(dirpath, "tokens.txt"), "w", encoding="utf-8") as fh:
        fh.write(tokens.to_text() + "\n")
    with open(os.path.join(dirpath, "spec.json"), "w", encoding="utf-8") as fh:
        json.dump(asdict(spec), fh, sort_keys=True, indent=2)
        fh.write("\n")


def gen_peaky_posterior(
    tokens: TaggedTokens,
    emission_frames,
    vocab_map,
    n_frames: int,
    blank_index: int = 0,
    frame_map: FrameTimeMap | None = None,
) -> CtcPosterior:
    """Posterior with probability 0.9 on each token's label at its emission
    frame (rest uniform) and 0.9 on blank everywhere else."""
    emission_frames = list(emission_frames)
    if len(emission_frames) != len(tokens):
        raise ValidationError(
            f"{len(tokens)} tokens but {len(emission_frames)} emission frames"
        )
    if any(b <= a for a, b in zip(emission_frames, emission_frames[1:])):
        raise ValidationError("emission frames must be strictly increasing (no collisions)")
    if emission_frames and (emission_frames[0] < 0 or emission_frames[-1] >= n_frames):
        raise ValidationError("emission frames outside the frame range")
    V = max(max(vocab_map.values()), blank_index) + 1
    if V < 2:
        raise ValidationError("vocabulary needs at least blank plus one label")
    probs = np.full((n_frames, V), 0.1 / (V - 1))
    probs[:, blank_index] = 0.9
    for tok, frame in zip(tokens.tokens, emission_frames):
        probs[frame, :] = 0.1 / (V - 1)
        probs[frame, vocab_map[tok]] = 0.9
    return CtcPosterior(
        np.log(probs), blank_index, frame_map or FrameTimeMap.uniform()
    )


def _enumerate_best_path(cost: np.ndarray, end: tuple[int, int]) -> list[tuple[int, int]]:
    """Minimum-total-cost monotonic path (0,0) -> end by exhaustive DFS.

    Move preference (diagonal, token-advance, frame-advance) decides ties:
    the first minimal path found in preference order wins. Returned cells run
    from ``end`` down to (0, 0).
    """
    best_cost = [None]
    best_path = [None]
    cells: list[tuple[int, int]] = []

    def dfs(n: int, l: int, acc: float):
        # no branch pruning: costs may be negative, so any prefix can still win
        acc += cost[n, l]
        cells.append((n, l))
        if (n, l) == (0, 0):
            if best_cost[0] is None or acc < best_cost[0] - 1e-12:
                best_cost[0] = acc
                best_path[0] = list(cells)
        else:
            if n > 0 and l > 0:
                dfs(n - 1, l - 1, acc)
            if n > 0:
                dfs(n - 1, l, acc)
            if l > 0:
                dfs(n, l - 1, acc)
        cells.pop()

    dfs(end[0], end[1], 0.0)
    return best_path[0]


def oracle_dtw(
    A: AttentionMatrix,
    tokens: TaggedTokens,
    median_width: int = 7,
    preprocess: bool = True,
) -> BlockTimings:
    """Exhaustive-enumeration reference for the DTW aligner.

    Instead of the accumulated-cost matrix, every unforced stretch of the
    backtracked path is found by enumerating all monotonic paths to its fixed
    upper endpoint and keeping the cheapest; forced diagonal moves and frame
    recording at boundary rows behave exactly like the production
    backtracker. Capped to small matrices.
    """
    if A.n_tokens > ORACLE_DTW_MAX_TOKENS or A.n_frames > ORACLE_DTW_MAX_FRAMES:
        raise ValidationError(
            f"oracle capped at {ORACLE_DTW_MAX_TOKENS}x{ORACLE_DTW_MAX_FRAMES}, "
            f"got {A.n_tokens}x{A.n_frames}"
        )
    if A.n_tokens != len(tokens):
        raise ValidationError("token count does not match attention rows")
    if preprocess:
        A = median_filter_rows(normalize_over_tokens(A), median_width)
    cost = -A.values
    boundary = set(tokens.boundary_indices)
    recorded = []
    n, l = A.n_tokens - 1, A.n_frames - 1
    while True:
        recorded.append(l)
        n, l = n - 1, max(l - 1, 0)
        below = [b for b in boundary if b <= n]
        if not below:
            break
        b = max(below)
        path = _enumerate_best_path(cost, (n, l))
        # walking backward, the first cell on row b is where the forward
        # path leaves it
        n, l = next((rn, cl) for rn, cl in path if rn == b)
    ends = [r + 1 for r in reversed(recorded)]
    ends[-1] = min(ends[-1], A.n_frames)
    # the clamp at frame 0 can duplicate early ends; spread them so every
    # block keeps at least one frame, exactly like the production aligner
    spread = []
    prev = 0
    for e in ends:
        prev = max(e, prev + 1)
        spread.append(prev)
    ends = spread
    intervals = []
    prev = 0
    for e in ends:
        intervals.append((prev, e))
        prev = e
    return BlockTimings(tuple(intervals), A.frame_map, A.n_frames)


def oracle_sbaam(
    A: AttentionMatrix,
    tokens: TaggedTokens,
    eps: float = 0.01,
    preprocess: bool = True,
    skip_eob_row: bool = False,
) -> BlockTimings:
    """Direct-summation reference for the area-maximization aligner.

    Same greedy block loop, but every rectangle sum is taken directly over
    the matrix slice instead of a summed-area table.
    """
    if A.n_tokens != len(tokens):
        raise ValidationError("token count does not match attention rows")
    if preprocess:
        A = clip_negatives(normalize_over_tokens(A), eps)
    vals = A.values
    B = tokens.boundary_indices
    N, L, K = A.n_tokens, A.n_frames, len(B)
    n = l = 0
    ends = []
    for ib in range(K):
        best_j = None
        best_score = None
        for j in range(l + 1, L - (K - 1 - ib) + 1):
            score = float(np.sum(vals[n : B[ib], l:j])) + float(
                np.sum(vals[B[ib] + 1 : N, j + 1 : L])
            )
            if best_score is None or score > best_score + 1e-12:
                best_score = score
                best_j = j
        ends.append(best_j)
        l = best_j
        n = B[ib] + 1 if skip_eob_row else B[ib]
    intervals = []
    prev = 0
    for e in ends:
        intervals.append((prev, e))
        prev = e
    return BlockTimings(tuple(intervals), A.frame_map, A.n_frames)


def oracle_median_filter(values: np.ndarray, width: int) -> np.ndarray:
    """Naive windowed median with mirror padding, one window at a time."""
    values = np.asarray(values, dtype=np.float64)
    n, m = values.shape
    half = width // 2
    out = np.empty_like(values)

    def mirror(idx: int) -> int:
        # reflect without repeating the edge element, as many times as needed
        period = 2 * (m - 1) if m > 1 else 1
        idx = abs(idx) % period
        return idx if idx < m else period - idx

    for i in range(n):
        for j in range(m):
            window = [values[i, mirror(j + k)] for k in range(-half, half + 1)]
            out[i, j] = float(np.median(window))
    return out


class MockFrameProvider:
    """Deterministic provider built from per-frame oracle vectors.

    The audio embedding of a slice is the mean of the frame vectors it
    overlaps; text embeddings are served from a fixed text-to-vector table.
    """

    def __init__(self, frame_vectors: np.ndarray, frame_ms: float, text_vectors):
        self.frame_vectors = np.asarray(frame_vectors, dtype=np.float64)
        if self.frame_vectors.ndim != 2:
            raise ValidationError("frame vectors must be a 2-D array")
        self.frame_ms = float(frame_ms)
        self.text_vectors = dict(text_vectors)

    def text_embed(self, text: str, lang: str) -> np.ndarray:
        if text not in self.text_vectors:
            raise ProviderError(f"no stored vector for block text {text!r}")
        return np.asarray(self.text_vectors[text], dtype=np.float64)

    def audio_embed(self, audio_ref: str, start_ms: int, end_ms: int, lang: str) -> np.ndarray:
        n = self.frame_vectors.shape[0]
        rows = [
            i
            for i in range(n)
            if i * self.frame_ms < end_ms and (i + 1) * self.frame_ms > start_ms
        ]
        if not rows:
            raise ProviderError(f"no frames overlap [{start_ms}, {end_ms}) ms")
        return self.frame_vectors[rows].mean(axis=0)


def mock_frame_provider(frame_vectors, frame_ms: float, text_vectors) -> MockFrameProvider:
    """Build a :class:`MockFrameProvider`."""
    return MockFrameProvider(frame_vectors, frame_ms, text_vectors)
