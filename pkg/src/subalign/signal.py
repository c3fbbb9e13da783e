"""Matrix containers, the matrix text format, and shared preprocessing kernels.

Holds the attention and CTC-posterior inputs consumed by the aligners, the
frame-to-millisecond mapping, and the numeric preprocessing they share:
per-frame standard normalization over the token axis, row-wise median
filtering, negative clipping, and 2-D prefix sums for O(1) rectangle sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import MatrixFormatError, ValidationError

DEFAULT_FRAME_MS = 40.0
STD_FLOOR = 1e-9


def _round_half_away(x: float) -> int:
    # inputs are non-negative; round half up
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class FrameTimeMap:
    """Maps frame indices to milliseconds.

    Either uniform (every frame lasts ``frame_ms``) or explicit (a strictly
    increasing list of per-frame end times, for upstream encoders whose frames
    are non-uniform in time).
    """

    frame_ms: float | None = None
    end_ms: tuple[float, ...] | None = None

    def __post_init__(self):
        if (self.frame_ms is None) == (self.end_ms is None):
            raise ValidationError("exactly one of frame_ms / end_ms must be given")
        if self.frame_ms is not None and self.frame_ms <= 0:
            raise ValidationError(f"frame_ms must be positive, got {self.frame_ms}")
        if self.end_ms is not None:
            ends = tuple(float(e) for e in self.end_ms)
            object.__setattr__(self, "end_ms", ends)
            if not ends:
                raise ValidationError("explicit frame map is empty")
            if ends[0] < 0 or any(b <= a for a, b in zip(ends, ends[1:])):
                raise ValidationError("explicit end times must be non-negative and strictly increasing")

    @classmethod
    def uniform(cls, frame_ms: float = DEFAULT_FRAME_MS) -> "FrameTimeMap":
        return cls(frame_ms=float(frame_ms))

    @classmethod
    def explicit(cls, end_ms: Sequence[float]) -> "FrameTimeMap":
        return cls(end_ms=tuple(end_ms))

    @property
    def is_uniform(self) -> bool:
        return self.frame_ms is not None

    def n_frames(self) -> int | None:
        """Frame count pinned by an explicit map, None for uniform maps."""
        return None if self.end_ms is None else len(self.end_ms)

    def boundary_ms(self, k: int) -> int:
        """Time of the boundary before frame ``k`` (so frame i spans
        [boundary(i), boundary(i+1))), rounded half away from zero."""
        if k < 0:
            raise ValidationError(f"negative frame boundary {k}")
        if self.frame_ms is not None:
            return _round_half_away(k * self.frame_ms)
        if k == 0:
            return 0
        if k > len(self.end_ms):
            raise ValidationError(f"frame boundary {k} beyond explicit map of {len(self.end_ms)}")
        return _round_half_away(self.end_ms[k - 1])


@dataclass(frozen=True)
class AttentionMatrix:
    """Cross-attention scores: rows are target tokens, columns encoder frames."""

    values: np.ndarray
    frame_map: FrameTimeMap

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2 or vals.shape[0] < 1 or vals.shape[1] < 1:
            raise ValidationError(f"attention matrix must be 2-D and non-empty, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValidationError("attention matrix contains non-finite values")
        mapped = self.frame_map.n_frames()
        if mapped is not None and mapped != vals.shape[1]:
            raise ValidationError(
                f"frame map covers {mapped} frames but matrix has {vals.shape[1]}"
            )
        vals.setflags(write=False)

    @property
    def n_tokens(self) -> int:
        return self.values.shape[0]

    @property
    def n_frames(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray) -> "AttentionMatrix":
        return AttentionMatrix(values, self.frame_map)


@dataclass(frozen=True)
class CtcPosterior:
    """Per-frame log-probabilities over a label vocabulary including blank."""

    logprobs: np.ndarray
    blank_index: int
    frame_map: FrameTimeMap

    def __post_init__(self):
        lp = np.asarray(self.logprobs, dtype=np.float64)
        object.__setattr__(self, "logprobs", lp)
        if lp.ndim != 2 or lp.shape[0] < 1 or lp.shape[1] < 1:
            raise ValidationError(f"posterior must be 2-D and non-empty, got shape {lp.shape}")
        if not (0 <= self.blank_index < lp.shape[1]):
            raise ValidationError(f"blank index {self.blank_index} outside vocabulary of {lp.shape[1]}")
        sums = np.exp(lp).sum(axis=1)
        bad = np.nonzero(np.abs(sums - 1.0) > 1e-3)[0]
        if bad.size:
            raise ValidationError(
                f"posterior row {bad[0]} does not sum to 1 (got {sums[bad[0]]:.6f})"
            )
        mapped = self.frame_map.n_frames()
        if mapped is not None and mapped != lp.shape[0]:
            raise ValidationError(f"frame map covers {mapped} frames but posterior has {lp.shape[0]}")
        lp.setflags(write=False)

    @property
    def n_frames(self) -> int:
        return self.logprobs.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.logprobs.shape[1]


@dataclass(frozen=True)
class BlockTimings:
    """Contiguous half-open per-block frame intervals plus their ms mapping."""

    intervals: tuple[tuple[int, int], ...]
    frame_map: FrameTimeMap
    n_frames: int

    def __post_init__(self):
        ivals = tuple((int(s), int(e)) for s, e in self.intervals)
        object.__setattr__(self, "intervals", ivals)
        if not ivals:
            raise ValidationError("no intervals")
        if ivals[0][0] != 0:
            raise ValidationError(f"first interval must start at frame 0, got {ivals[0][0]}")
        for s, e in ivals:
            if not (0 <= s < e <= self.n_frames):
                raise ValidationError(f"invalid frame interval [{s}, {e}) with {self.n_frames} frames")
        for (_, e0), (s1, _) in zip(ivals, ivals[1:]):
            if s1 != e0:
                raise ValidationError(f"intervals not contiguous: [...,{e0}) then [{s1},...)")

    def __len__(self) -> int:
        return len(self.intervals)

    def ms_intervals(self) -> list[tuple[int, int]]:
        return [
            (self.frame_map.boundary_ms(s), self.frame_map.boundary_ms(e))
            for s, e in self.intervals
        ]


class SummedAreaTable:
    """2-D prefix sums supporting O(1) half-open rectangle sums."""

    def __init__(self, values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        n, m = values.shape
        table = np.zeros((n + 1, m + 1))
        np.cumsum(values, axis=0, out=table[1:, 1:])
        np.cumsum(table[1:, 1:], axis=1, out=table[1:, 1:])
        self._table = table

    def rect_sum(self, r0: int, r1: int, c0: int, c1: int) -> float:
        """Sum over rows [r0, r1) and columns [c0, c1); empty ranges give 0."""
        if r0 >= r1 or c0 >= c1:
            return 0.0
        t = self._table
        return float(t[r1, c1] - t[r0, c1] - t[r1, c0] + t[r0, c0])

    @property
    def table(self) -> np.ndarray:
        return self._table


def normalize_over_tokens(A: AttentionMatrix) -> AttentionMatrix:
    """Standard normalization over the token axis, per frame column.

    Each column is centered and scaled by its population standard deviation;
    near-constant columns (std below the floor) become all zeros.
    """
    vals = A.values
    mean = vals.mean(axis=0)
    std = vals.std(axis=0)
    degenerate = std < STD_FLOOR
    out = (vals - mean) / np.where(degenerate, 1.0, std)
    out[:, degenerate] = 0.0
    return A.with_values(out)


def median_filter_rows(A: AttentionMatrix, width: int = 7) -> AttentionMatrix:
    """Sliding-window median along the frame axis, independently per row.

    Edges use mirror padding (the edge element is not repeated). Width must
    be odd; the output shape is unchanged.
    """
    if width < 1 or width % 2 == 0:
        raise ValidationError(f"median filter width must be odd and positive, got {width}")
    if width == 1:
        return A
    half = width // 2
    padded = np.pad(A.values, ((0, 0), (half, half)), mode="reflect")
    out = np.median(sliding_window_view(padded, width, axis=1), axis=2)
    return A.with_values(out)


def clip_negatives(A: AttentionMatrix, eps: float = 0.01) -> AttentionMatrix:
    """Replace every strictly negative value with ``-eps``."""
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    return A.with_values(np.where(A.values < 0, -eps, A.values))


def prefix_sums(A: AttentionMatrix) -> SummedAreaTable:
    """Summed-area table for the attention values."""
    return SummedAreaTable(A.values)


def _parse_frame_map(fields: list[str], lines: list[str], pos: int, n_frames: int):
    """Parse the trailing frame-map field of a header; returns (map, next_pos)."""
    if fields[-1] == "frame_times":
        if pos >= len(lines):
            raise MatrixFormatError("missing frame_times line")
        try:
            ends = [float(v) for v in lines[pos].split("\t")]
        except ValueError as e:
            raise MatrixFormatError(f"bad frame time: {e}") from None
        if len(ends) != n_frames:
            raise MatrixFormatError(f"expected {n_frames} frame end-times, got {len(ends)}")
        try:
            return FrameTimeMap.explicit(ends), pos + 1
        except ValidationError as e:
            raise MatrixFormatError(str(e)) from e
    try:
        frame_ms = float(fields[-1])
    except ValueError:
        raise MatrixFormatError(f"bad frame duration {fields[-1]!r}") from None
    if frame_ms <= 0:
        raise MatrixFormatError(f"frame duration must be positive, got {frame_ms}")
    return FrameTimeMap.uniform(frame_ms), pos


def _parse_rows(lines: list[str], pos: int, n_rows: int, n_cols: int) -> np.ndarray:
    rows = []
    for r in range(n_rows):
        if pos + r >= len(lines):
            raise MatrixFormatError(f"expected {n_rows} data rows, found {r}")
        cells = lines[pos + r].split("\t")
        if len(cells) != n_cols:
            raise MatrixFormatError(f"row {r}: expected {n_cols} values, got {len(cells)}")
        try:
            rows.append([float(c) for c in cells])
        except ValueError as e:
            raise MatrixFormatError(f"row {r}: {e}") from None
    if pos + n_rows < len(lines) and any(l.strip() for l in lines[pos + n_rows:]):
        raise MatrixFormatError(f"trailing data after {n_rows} rows")
    vals = np.array(rows, dtype=np.float64)
    if not np.all(np.isfinite(vals)):
        raise MatrixFormatError("matrix contains non-finite values")
    return vals


def parse_matrix(text: str) -> AttentionMatrix | CtcPosterior:
    """Parse the matrix text format.

    Header ``N L FRAME_MS`` (or ``N L frame_times``) introduces an attention
    matrix; header ``L V BLANK_INDEX FRAME_MS`` (or the ``frame_times``
    variant) a CTC posterior. Data rows are tab-separated decimals.
    """
    lines = text.split("\n")
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MatrixFormatError("empty matrix file")
    fields = lines[0].split()
    if len(fields) == 3:
        try:
            n, l = int(fields[0]), int(fields[1])
        except ValueError:
            raise MatrixFormatError(f"bad header {lines[0]!r}") from None
        frame_map, pos = _parse_frame_map(fields, lines, 1, l)
        vals = _parse_rows(lines, pos, n, l)
        try:
            return AttentionMatrix(vals, frame_map)
        except ValidationError as e:
            raise MatrixFormatError(str(e)) from e
    if len(fields) == 4:
        try:
            l, v, blank = int(fields[0]), int(fields[1]), int(fields[2])
        except ValueError:
            raise MatrixFormatError(f"bad header {lines[0]!r}") from None
        frame_map, pos = _parse_frame_map(fields, lines, 1, l)
        vals = _parse_rows(lines, pos, l, v)
        try:
            return CtcPosterior(vals, blank, frame_map)
        except ValidationError as e:
            raise MatrixFormatError(str(e)) from e
    raise MatrixFormatError(f"header must have 3 or 4 fields, got {len(fields)}")


def read_matrix(path) -> AttentionMatrix | CtcPosterior:
    """Read a matrix file (see :func:`parse_matrix` for the format)."""
    with open(path, encoding="utf-8") as fh:
        return parse_matrix(fh.read())


def _format_map(frame_map: FrameTimeMap) -> tuple[str, str | None]:
    if frame_map.is_uniform:
        return f"{frame_map.frame_ms:g}", None
    return "frame_times", "\t".join(f"{e:.12g}" for e in frame_map.end_ms)


def _format_rows(vals: np.ndarray) -> str:
    return "\n".join("\t".join(f"{x:.12g}" for x in row) for row in vals)


def write_matrix(path, matrix: AttentionMatrix | CtcPosterior) -> None:
    """Write a matrix in the text format read by :func:`read_matrix`."""
    tail, extra = _format_map(matrix.frame_map)
    if isinstance(matrix, AttentionMatrix):
        header = f"{matrix.n_tokens} {matrix.n_frames} {tail}"
        vals = matrix.values
    else:
        header = f"{matrix.n_frames} {matrix.vocab_size} {matrix.blank_index} {tail}"
        vals = matrix.logprobs
    parts = [header]
    if extra is not None:
        parts.append(extra)
    parts.append(_format_rows(vals))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
