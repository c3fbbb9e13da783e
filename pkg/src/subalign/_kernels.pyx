# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled dynamic-programming kernels (DTW accumulation, CTC Viterbi)."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double NEG_INF = -np.inf

BACKEND = "cython"


def dtw_accumulate(cnp.ndarray[double, ndim=2] cost):
    """Accumulated-cost matrix for the three classic DTW moves.

    D[i, j] = cost[i, j] + min(D[i-1, j], D[i, j-1], D[i-1, j-1]) with
    out-of-range neighbors treated as +inf.
    """
    cdef Py_ssize_t n = cost.shape[0]
    cdef Py_ssize_t m = cost.shape[1]
    cdef cnp.ndarray[double, ndim=2] D = np.empty((n, m), dtype=np.float64)
    cdef double[:, ::1] d = D
    cdef double[:, ::1] c = np.ascontiguousarray(cost)
    cdef Py_ssize_t i, j
    cdef double best, alt

    d[0, 0] = c[0, 0]
    for j in range(1, m):
        d[0, j] = c[0, j] + d[0, j - 1]
    for i in range(1, n):
        d[i, 0] = c[i, 0] + d[i - 1, 0]
        for j in range(1, m):
            best = d[i - 1, j - 1]
            alt = d[i - 1, j]
            if alt < best:
                best = alt
            alt = d[i, j - 1]
            if alt < best:
                best = alt
            d[i, j] = c[i, j] + best
    return D


def ctc_viterbi_fill(cnp.ndarray[double, ndim=2] emit,
                     cnp.ndarray[cnp.uint8_t, ndim=1] allow_skip):
    """Viterbi fill over a blank-interleaved CTC state chain.

    ``emit`` is T x S (per-frame log-probability of each expanded state);
    ``allow_skip`` marks states reachable by the advance-by-2 move. Ties
    prefer staying, then advance-by-1, then advance-by-2. Returns the final
    score row and per-frame backpointers (0=stay, 1=advance-1, 2=advance-2).
    """
    cdef Py_ssize_t T = emit.shape[0]
    cdef Py_ssize_t S = emit.shape[1]
    cdef cnp.ndarray[double, ndim=1] prev = np.full(S, NEG_INF, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] cur = np.full(S, NEG_INF, dtype=np.float64)
    cdef cnp.ndarray[cnp.int8_t, ndim=2] back = np.zeros((T, S), dtype=np.int8)
    cdef double[::1] p = prev
    cdef double[::1] q = cur
    cdef double[::1] tmp
    cdef double[:, ::1] e = np.ascontiguousarray(emit)
    cdef cnp.int8_t[:, ::1] b = back
    cdef cnp.uint8_t[::1] skip = allow_skip
    cdef Py_ssize_t t, s
    cdef double best
    cdef cnp.int8_t move

    p[0] = e[0, 0]
    if S > 1:
        p[1] = e[0, 1]
    for t in range(1, T):
        for s in range(S):
            best = p[s]
            move = 0
            if s >= 1 and p[s - 1] > best:
                best = p[s - 1]
                move = 1
            if s >= 2 and skip[s] and p[s - 2] > best:
                best = p[s - 2]
                move = 2
            if best == NEG_INF:
                q[s] = NEG_INF
            else:
                q[s] = best + e[t, s]
            b[t, s] = move
        tmp = p
        p = q
        q = tmp
    return np.asarray(p).copy(), back
