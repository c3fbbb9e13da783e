"""Pure-NumPy fallbacks for the compiled DP kernels.

Same contracts as ``_kernels``; used when the extension is unavailable or
when SUBALIGN_PURE is set.
"""

import numpy as np

BACKEND = "pure"


def dtw_accumulate(cost: np.ndarray) -> np.ndarray:
    """Accumulated-cost matrix for the three classic DTW moves."""
    n, m = cost.shape
    D = np.empty((n, m), dtype=np.float64)
    D[0, :] = np.cumsum(cost[0, :])
    for i in range(1, n):
        row = D[i]
        prev = D[i - 1]
        row[0] = cost[i, 0] + prev[0]
        # row[j] depends on row[j-1]; only the column scan is sequential
        for j in range(1, m):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if row[j - 1] < best:
                best = row[j - 1]
            row[j] = cost[i, j] + best
    return D


def ctc_viterbi_fill(emit: np.ndarray, allow_skip: np.ndarray):
    """Viterbi fill over a blank-interleaved CTC state chain.

    Ties prefer staying, then advance-by-1, then advance-by-2 (argmax over
    the stacked candidates returns the first maximum).
    """
    T, S = emit.shape
    prev = np.full(S, -np.inf)
    prev[0] = emit[0, 0]
    if S > 1:
        prev[1] = emit[0, 1]
    back = np.zeros((T, S), dtype=np.int8)
    skip_mask = allow_skip.astype(bool)
    for t in range(1, T):
        shifted1 = np.full(S, -np.inf)
        shifted1[1:] = prev[:-1]
        shifted2 = np.full(S, -np.inf)
        shifted2[2:] = prev[:-2]
        shifted2[~skip_mask] = -np.inf
        cands = np.stack([prev, shifted1, shifted2])
        moves = np.argmax(cands, axis=0).astype(np.int8)
        best = cands[moves, np.arange(S)]
        cur = np.where(np.isneginf(best), -np.inf, best + emit[t])
        back[t] = moves
        prev = cur
    return prev.copy(), back
