"""Transcript-free subtitle timestamp alignment and timing-quality evaluation.

Given a cross-attention matrix or a target-CTC posterior exported from an
upstream model, plus the tagged subtitle text (``<eol>``/``<eob>`` markers),
this package assigns per-block timestamps (attention DTW, attention area
maximization, or CTC forced alignment) and evaluates subtitle timing quality
(embedding-similarity scoring, CPL/CPS conformity, shift statistics, Cohen's
kappa).
"""

from ._backend import backend_name
from .align import align, ctc_forced_align, dtw_align, sbaam_align
from .core import (
    EOB,
    EOL,
    SubtitleDocument,
    TaggedTokens,
    TimedBlock,
    Timestamp,
    assemble_document,
    parse_srt,
    tokens_from_tagged_text,
    write_srt,
)
from .errors import SubalignError
from .metrics import (
    cohen_kappa,
    conformity,
    file_provider,
    remote_provider,
    shift_stats,
    subsonar_score,
)
from .signal import (
    AttentionMatrix,
    BlockTimings,
    CtcPosterior,
    FrameTimeMap,
    clip_negatives,
    median_filter_rows,
    normalize_over_tokens,
    prefix_sums,
    read_matrix,
    write_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "align", "ctc_forced_align", "dtw_align", "sbaam_align",
    "SubtitleDocument", "TaggedTokens", "TimedBlock", "Timestamp",
    "EOB", "EOL",
    "parse_srt", "write_srt", "tokens_from_tagged_text", "assemble_document",
    "AttentionMatrix", "CtcPosterior", "FrameTimeMap", "BlockTimings",
    "normalize_over_tokens", "median_filter_rows", "clip_negatives",
    "prefix_sums", "read_matrix", "write_matrix",
    "subsonar_score", "conformity", "shift_stats", "cohen_kappa",
    "file_provider", "remote_provider",
    "SubalignError", "backend_name",
]
