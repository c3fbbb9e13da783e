import numpy as np
import pytest

import subalign._pykernels as pyk
from subalign._backend import backend_name

compiled = pytest.importorskip("subalign._kernels")


class TestBackendParity:
    @pytest.mark.parametrize("seed", range(10))
    def test_dtw_accumulate(self, seed):
        cost = np.random.default_rng(seed).normal(size=(17, 33))
        assert np.allclose(pyk.dtw_accumulate(cost), compiled.dtw_accumulate(cost))

    @pytest.mark.parametrize("seed", range(10))
    def test_ctc_viterbi_fill(self, seed):
        rng = np.random.default_rng(seed)
        S = 2 * int(rng.integers(2, 9)) + 1
        emit = rng.normal(size=(25, S))
        allow_skip = np.zeros(S, dtype=np.uint8)
        allow_skip[3::2] = rng.integers(0, 2, size=len(allow_skip[3::2]))
        f_py, b_py = pyk.ctc_viterbi_fill(emit, allow_skip)
        f_c, b_c = compiled.ctc_viterbi_fill(emit, allow_skip)
        assert np.allclose(f_py, f_c)
        # backpointers must agree wherever the state is reachable
        reachable = ~np.isneginf(f_py)
        assert np.array_equal(b_py[-1][reachable], b_c[-1][reachable])

    def test_single_state_chain(self):
        emit = np.array([[0.5], [0.2]])
        skip = np.zeros(1, dtype=np.uint8)
        f_py, _ = pyk.ctc_viterbi_fill(emit, skip)
        f_c, _ = compiled.ctc_viterbi_fill(emit, skip)
        assert np.allclose(f_py, f_c)

    def test_active_backend_reported(self):
        assert backend_name() in ("cython", "pure")
