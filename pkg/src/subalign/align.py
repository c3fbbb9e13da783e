"""Transcript-free block-timestamp estimators.

Three methods are provided:

- attention-based DTW: minimum-cost monotonic path over negated attention,
  with forced diagonal moves at block-boundary token rows;
- SBAAM: greedy per-block frame split maximizing attention rectangle areas;
- CTC forced alignment of the tagged subtitle text against target-CTC
  posteriors (blank-interleaved Viterbi).

All three return contiguous half-open frame intervals, one per block.
"""

from __future__ import annotations

from typing import Mapping

import numpy as np

from ._backend import ctc_viterbi_fill, dtw_accumulate
from .core import SubtitleDocument, TaggedTokens, assemble_document
from .errors import AlignmentError, InfeasibleAlignmentError
from .signal import (
    AttentionMatrix,
    BlockTimings,
    CtcPosterior,
    clip_negatives,
    median_filter_rows,
    normalize_over_tokens,
    prefix_sums,
)


def _check_attention_inputs(A: AttentionMatrix, tokens: TaggedTokens) -> None:
    if A.n_tokens != len(tokens):
        raise AlignmentError(
            f"attention has {A.n_tokens} rows but there are {len(tokens)} tokens"
        )
    if A.n_frames < tokens.n_blocks:
        raise AlignmentError(
            f"{A.n_frames} frames cannot cover {tokens.n_blocks} blocks"
        )


def _ends_to_timings(ends, A: AttentionMatrix) -> BlockTimings:
    intervals = []
    prev = 0
    for e in ends:
        intervals.append((prev, e))
        prev = e
    return BlockTimings(tuple(intervals), A.frame_map, A.n_frames)


def _spread_ends(ends) -> list[int]:
    """Make block ends strictly increasing.

    The backtracker can record frame 0 for several blocks when the path
    reaches the first frame early (the forced diagonal move clamps there);
    bumping each end past its predecessor keeps every block non-empty.
    """
    out = []
    prev = 0
    for e in ends:
        prev = max(e, prev + 1)
        out.append(prev)
    return out


def dtw_backtrack(cost_accum: np.ndarray, boundary_rows) -> list[int]:
    """Backtrack the accumulated-cost matrix from the last cell to (0, 0).

    At a boundary row the move is forced diagonal and the current frame is
    recorded as the block's last frame; elsewhere the move is the argmin of
    the accumulated cost over the three predecessors, ties broken diagonal
    first, then token-advance, then frame-advance. Returns the recorded
    frames in block order.
    """
    D = cost_accum
    boundary = set(boundary_rows)
    n, l = D.shape[0] - 1, D.shape[1] - 1
    recorded: list[int] = []
    while (n, l) != (0, 0):
        if n in boundary:
            recorded.append(l)
            n, l = n - 1, max(l - 1, 0)
            continue
        # preference order encodes the tie-break
        candidates = []
        if n > 0 and l > 0:
            candidates.append((D[n - 1, l - 1], 0, n - 1, l - 1))
        if n > 0:
            candidates.append((D[n - 1, l], 1, n - 1, l))
        if l > 0:
            candidates.append((D[n, l - 1], 2, n, l - 1))
        _, _, n, l = min(candidates)
    return list(reversed(recorded))


def dtw_align(
    A: AttentionMatrix,
    tokens: TaggedTokens,
    median_width: int = 7,
    preprocess: bool = True,
) -> BlockTimings:
    """Attention-based DTW block timing.

    Normalizes the attention per frame column, median-filters each token row,
    accumulates DTW costs over the negated matrix, and backtracks with forced
    diagonal moves at ``<eob>`` rows. The recorded frame of each boundary row
    becomes the block's inclusive last frame (exclusive end + 1); the final
    end is clamped to the frame count.
    """
    _check_attention_inputs(A, tokens)
    if preprocess:
        A = median_filter_rows(normalize_over_tokens(A), median_width)
    D = dtw_accumulate(-A.values)
    recorded = dtw_backtrack(D, tokens.boundary_indices)
    ends = [r + 1 for r in recorded]
    ends[-1] = min(ends[-1], A.n_frames)
    ends = _spread_ends(ends)
    return _ends_to_timings(ends, A)


def sbaam_align(
    A: AttentionMatrix,
    tokens: TaggedTokens,
    eps: float = 0.01,
    preprocess: bool = True,
    skip_eob_row: bool = False,
    extend_last: bool = False,
) -> BlockTimings:
    """Speech block attention area maximization.

    For each block in order, picks the frame split ``j`` maximizing the sum
    of the attention over (current block rows x frames up to ``j``) plus
    (remaining rows x frames after ``j``); frame ``j`` itself belongs to
    neither area. Candidates leave at least one frame for the current block
    and for every future block. Ties pick the smallest ``j``. Rectangle sums
    come from a summed-area table.
    """
    _check_attention_inputs(A, tokens)
    if preprocess:
        A = clip_negatives(normalize_over_tokens(A), eps)
    B = tokens.boundary_indices
    N, L, K = A.n_tokens, A.n_frames, len(B)
    sat = prefix_sums(A)
    table = sat.table
    n = 0
    l = 0
    ends: list[int] = []
    for ib in range(K):
        lo, hi = l + 1, L - (K - 1 - ib)
        js = np.arange(lo, hi + 1)
        b = B[ib]
        # block area over columns [l, j) for all candidates at once
        first = (table[b, js] - table[n, js]) - (table[b, l] - table[n, l])
        # remaining-text area over columns [j+1, L); empty when j+1 >= L
        jp = np.minimum(js + 1, L)
        second = (table[N, L] - table[b + 1, L]) - (table[N, jp] - table[b + 1, jp])
        j = int(js[int(np.argmax(first + second))])
        ends.append(j)
        l = j
        n = b + 1 if skip_eob_row else b
    if extend_last:
        ends[-1] = L
    return _ends_to_timings(ends, A)


def expand_labels(labels) -> tuple[np.ndarray, np.ndarray]:
    """Blank-interleave a label sequence for the CTC topology.

    Returns the expanded state labels (blank encoded as -1) and the mask of
    states reachable by the advance-by-2 move (non-blank states whose label
    differs from the previous non-blank one).
    """
    labels = list(labels)
    S = 2 * len(labels) + 1
    ext = np.full(S, -1, dtype=np.int64)
    ext[1::2] = labels
    allow_skip = np.zeros(S, dtype=np.uint8)
    for s in range(3, S, 2):
        if ext[s] != ext[s - 2]:
            allow_skip[s] = 1
    return ext, allow_skip


def ctc_forced_align(
    P: CtcPosterior,
    tokens: TaggedTokens,
    vocab_map: Mapping[str, int],
) -> BlockTimings:
    """Viterbi forced alignment of the tagged tokens against CTC posteriors.

    Every token (markers included) must map to a non-blank label id. The
    first frame in which the best path occupies an ``<eob>`` label state
    marks that block; intervals are contiguous with the final end clamped to
    the frame count. On equal scores the path prefers staying in its current
    state.
    """
    labels = []
    for tok in tokens.tokens:
        if tok not in vocab_map:
            raise AlignmentError(f"token {tok!r} not in vocabulary map")
        lab = vocab_map[tok]
        if lab == P.blank_index:
            raise AlignmentError(f"token {tok!r} maps to the blank label")
        if not (0 <= lab < P.vocab_size):
            raise AlignmentError(f"token {tok!r} maps to label {lab} outside the vocabulary")
        labels.append(lab)
    L, U = P.n_frames, len(labels)
    min_frames = U + sum(a == b for a, b in zip(labels, labels[1:]))
    if L < min_frames:
        raise InfeasibleAlignmentError(
            f"{U} labels need at least {min_frames} frames, posterior has {L}"
        )
    ext, allow_skip = expand_labels(labels)
    emit_ids = np.where(ext < 0, P.blank_index, ext)
    emit = np.ascontiguousarray(P.logprobs[:, emit_ids])
    final, back = ctc_viterbi_fill(emit, allow_skip)
    S = ext.shape[0]
    # the path must end in the last label or the trailing blank; ties stay
    # in the label state
    end_state = S - 2 if final[S - 2] >= final[S - 1] else S - 1
    if np.isneginf(final[end_state]):
        raise InfeasibleAlignmentError("no feasible CTC path")
    states = np.empty(L, dtype=np.int64)
    s = end_state
    for t in range(L - 1, -1, -1):
        states[t] = s
        s -= back[t, s]
    eob_states = {2 * u + 1 for u, tok in enumerate(tokens.tokens) if u in set(tokens.boundary_indices)}
    entry_frame = {}
    prev_state = None
    for t in range(L):
        st = int(states[t])
        if st in eob_states and st != prev_state:
            entry_frame[st] = t
        prev_state = st
    ends = []
    for u in tokens.boundary_indices:
        st = 2 * u + 1
        if st not in entry_frame:
            raise InfeasibleAlignmentError(f"boundary state for token {u} never entered")
        ends.append(entry_frame[st] + 1)
    ends[-1] = min(ends[-1], L)
    intervals = []
    prev = 0
    for e in ends:
        intervals.append((prev, e))
        prev = e
    return BlockTimings(tuple(intervals), P.frame_map, L)


METHODS = ("dtw", "sbaam", "ctcseg")


def align(
    method: str,
    tokens: TaggedTokens,
    attention: AttentionMatrix | None = None,
    posterior: CtcPosterior | None = None,
    vocab_map: Mapping[str, int] | None = None,
    **kwargs,
) -> SubtitleDocument:
    """Dispatch to the selected aligner and assemble a subtitle document."""
    if method == "dtw":
        if attention is None:
            raise AlignmentError("dtw requires an attention matrix")
        timings = dtw_align(attention, tokens, **kwargs)
    elif method == "sbaam":
        if attention is None:
            raise AlignmentError("sbaam requires an attention matrix")
        timings = sbaam_align(attention, tokens, **kwargs)
    elif method == "ctcseg":
        if posterior is None or vocab_map is None:
            raise AlignmentError("ctcseg requires a posterior and a vocabulary map")
        timings = ctc_forced_align(posterior, tokens, vocab_map, **kwargs)
    else:
        raise AlignmentError(f"unknown method {method!r} (expected one of {METHODS})")
    return assemble_document(tokens, timings)
