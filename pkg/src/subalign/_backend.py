"""Kernel backend selection: compiled extension if importable, else pure NumPy.

Set SUBALIGN_PURE=1 to force the fallback (used by the benchmark and the
backend-equivalence tests).
"""

import os

if os.environ.get("SUBALIGN_PURE"):
    from . import _pykernels as kernels
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        from . import _pykernels as kernels  # type: ignore[no-redef]

dtw_accumulate = kernels.dtw_accumulate
ctc_viterbi_fill = kernels.ctc_viterbi_fill


def backend_name() -> str:
    """Which kernel implementation is active ("cython" or "pure")."""
    return kernels.BACKEND
