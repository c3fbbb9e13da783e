"""Subtitle data model, SRT serialization, and tagged-text conversion.

The central objects are :class:`SubtitleDocument` (an ordered list of timed
blocks) and :class:`TaggedTokens` (a subtitle token stream carrying ``<eol>``
and ``<eob>`` markers, from which the block-boundary index list is derived).
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Sequence

from .errors import SrtParseError, TaggedTextError, ValidationError

if TYPE_CHECKING:
    from .signal import BlockTimings

EOL = "<eol>"
EOB = "<eob>"

# SRT cannot represent times at or beyond 100 hours
MAX_SRT_MS = 100 * 3600 * 1000 - 1

_TIMING_RE = re.compile(
    r"^(\d{2}):(\d{2}):(\d{2}),(\d{3}) --> (\d{2}):(\d{2}):(\d{2}),(\d{3})$"
)


@dataclass(frozen=True, order=True)
class Timestamp:
    """A non-negative instant in integer milliseconds."""

    ms: int

    def __post_init__(self):
        if not isinstance(self.ms, int) or self.ms < 0:
            raise ValidationError(f"timestamp must be a non-negative int, got {self.ms!r}")
        if self.ms > MAX_SRT_MS:
            raise ValidationError(f"timestamp {self.ms} ms exceeds the SRT range")

    def to_srt(self) -> str:
        h, rem = divmod(self.ms, 3600 * 1000)
        m, rem = divmod(rem, 60 * 1000)
        s, ms = divmod(rem, 1000)
        return f"{h:02d}:{m:02d}:{s:02d},{ms:03d}"


@dataclass(frozen=True)
class TimedBlock:
    """One subtitle block: 1-based index, time interval, one or more lines."""

    index: int
    start: Timestamp
    end: Timestamp
    lines: tuple[str, ...]

    def __post_init__(self):
        if self.index < 1:
            raise ValidationError(f"block index must be >= 1, got {self.index}")
        if self.start.ms >= self.end.ms:
            raise ValidationError(
                f"block {self.index}: start {self.start.ms} ms is not before end {self.end.ms} ms"
            )
        object.__setattr__(self, "lines", tuple(self.lines))
        if not self.lines:
            raise ValidationError(f"block {self.index}: no text lines")
        for line in self.lines:
            if not line:
                raise ValidationError(f"block {self.index}: empty line")
            if "\n" in line or "\r" in line:
                raise ValidationError(f"block {self.index}: line contains a newline")
            if EOL in line or EOB in line:
                raise ValidationError(f"block {self.index}: line contains a literal marker")

    @property
    def text(self) -> str:
        """Block text with lines joined by a single space."""
        return " ".join(self.lines)

    @property
    def duration_ms(self) -> int:
        return self.end.ms - self.start.ms


@dataclass(frozen=True)
class SubtitleDocument:
    """Time-ordered, non-overlapping subtitle blocks."""

    blocks: tuple[TimedBlock, ...]

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(self.blocks))
        for prev, cur in zip(self.blocks, self.blocks[1:]):
            if prev.end.ms > cur.start.ms:
                raise ValidationError(
                    f"blocks {prev.index} and {cur.index} overlap "
                    f"({prev.end.ms} ms > {cur.start.ms} ms)"
                )
            if prev.index >= cur.index:
                raise ValidationError(
                    f"block indices not strictly increasing: {prev.index} then {cur.index}"
                )

    def __len__(self) -> int:
        return len(self.blocks)

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True)
class TaggedTokens:
    """Token sequence over word tokens plus ``<eol>``/``<eob>`` markers.

    ``boundary_indices`` lists the positions of the ``<eob>`` tokens, one per
    block; the last token is always ``<eob>``.
    """

    tokens: tuple[str, ...]
    boundary_indices: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        toks = self.tokens
        if not toks:
            raise TaggedTextError("empty token sequence")
        if toks[-1] != EOB:
            raise TaggedTextError("last token must be <eob>")
        if toks[0] in (EOL, EOB):
            raise TaggedTextError("token sequence starts with a marker")
        for i, (a, b) in enumerate(zip(toks, toks[1:])):
            if a in (EOL, EOB) and b in (EOL, EOB):
                raise TaggedTextError(f"consecutive markers at positions {i} and {i + 1}")
        object.__setattr__(
            self, "boundary_indices", tuple(i for i, t in enumerate(toks) if t == EOB)
        )

    @property
    def n_blocks(self) -> int:
        return len(self.boundary_indices)

    def __len__(self) -> int:
        return len(self.tokens)

    def block_lines(self) -> list[list[str]]:
        """Per block, the word tokens split into lines at ``<eol>``."""
        out: list[list[str]] = []
        lines: list[str] = []
        words: list[str] = []
        for tok in self.tokens:
            if tok == EOL:
                lines.append(" ".join(words))
                words = []
            elif tok == EOB:
                lines.append(" ".join(words))
                words = []
                out.append(lines)
                lines = []
            else:
                words.append(tok)
        return out

    def to_text(self) -> str:
        """Whitespace-joined token stream, markers included."""
        return " ".join(self.tokens)


def _parse_timestamp_ms(hh: str, mm: str, ss: str, mmm: str) -> int:
    return ((int(hh) * 60 + int(mm)) * 60 + int(ss)) * 1000 + int(mmm)


def parse_srt(text: str) -> SubtitleDocument:
    """Parse SRT text into a :class:`SubtitleDocument`.

    Blocks are separated by blank lines; the timing line must match
    ``HH:MM:SS,mmm --> HH:MM:SS,mmm``. Errors name the offending block and
    line number.
    """
    lines = text.replace("\r\n", "\n").replace("\r", "\n").split("\n")
    blocks: list[TimedBlock] = []
    i = 0
    n_block = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        n_block += 1
        start_line = i + 1  # 1-based for diagnostics
        try:
            index = int(lines[i].strip())
        except ValueError:
            raise SrtParseError(
                f"expected a numeric block index, got {lines[i]!r}",
                block=n_block, line=start_line,
            ) from None
        i += 1
        if i >= len(lines):
            raise SrtParseError("missing timing line", block=n_block, line=start_line)
        m = _TIMING_RE.match(lines[i].strip())
        if not m:
            raise SrtParseError(
                f"malformed timing line {lines[i]!r}", block=n_block, line=i + 1
            )
        start_ms = _parse_timestamp_ms(*m.groups()[:4])
        end_ms = _parse_timestamp_ms(*m.groups()[4:])
        if start_ms >= end_ms:
            raise SrtParseError(
                f"start {start_ms} ms is not before end {end_ms} ms",
                block=n_block, line=i + 1,
            )
        i += 1
        text_lines: list[str] = []
        while i < len(lines) and lines[i].strip():
            text_lines.append(lines[i])
            i += 1
        if not text_lines:
            raise SrtParseError("block has no text", block=n_block, line=start_line)
        try:
            block = TimedBlock(
                index=index,
                start=Timestamp(start_ms),
                end=Timestamp(end_ms),
                lines=tuple(text_lines),
            )
        except ValidationError as e:
            raise SrtParseError(str(e), block=n_block, line=start_line) from e
        blocks.append(block)
    if not blocks:
        raise SrtParseError("no subtitle blocks found")
    try:
        return SubtitleDocument(tuple(blocks))
    except ValidationError as e:
        raise SrtParseError(str(e)) from e


def write_srt(doc: SubtitleDocument) -> str:
    """Serialize to canonical SRT.

    Zero-padded ``HH:MM:SS,mmm`` timestamps, ``\\n`` line endings, one blank
    line between blocks, and a trailing newline.
    """
    parts = []
    for block in doc.blocks:
        body = "\n".join(block.lines)
        parts.append(f"{block.index}\n{block.start.to_srt()} --> {block.end.to_srt()}\n{body}\n")
    return "\n".join(parts)


def tokens_from_tagged_text(text: str) -> TaggedTokens:
    """Tokenize whitespace-separated tagged text into :class:`TaggedTokens`.

    A missing final ``<eob>`` is appended with a warning so that truncated
    hypotheses still form closed blocks.
    """
    toks = text.split()
    if not toks:
        raise TaggedTextError("empty input")
    if toks[-1] != EOB:
        warnings.warn("tagged text does not end with <eob>; appending one", stacklevel=2)
        if toks[-1] == EOL:
            toks[-1] = EOB
        else:
            toks.append(EOB)
    return TaggedTokens(tuple(toks))


def assemble_document(tokens: TaggedTokens, timings: "BlockTimings") -> SubtitleDocument:
    """Join tagged text with per-block timings into a document.

    Block ``i`` takes its lines from the tokens between boundaries (split at
    ``<eol>``) and its interval from ``timings`` in milliseconds.
    """
    ms_intervals = timings.ms_intervals()
    block_lines = tokens.block_lines()
    if len(ms_intervals) != len(block_lines):
        raise ValidationError(
            f"{len(block_lines)} blocks but {len(ms_intervals)} timing intervals"
        )
    blocks = []
    for i, (lines, (start_ms, end_ms)) in enumerate(zip(block_lines, ms_intervals)):
        blocks.append(
            TimedBlock(
                index=i + 1,
                start=Timestamp(start_ms),
                end=Timestamp(end_ms),
                lines=tuple(lines),
            )
        )
    return SubtitleDocument(tuple(blocks))


def read_tagged_file(path, per_line: bool = False) -> list[TaggedTokens]:
    """Read a tagged-text file as one utterance, or one per line."""
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    if per_line:
        return [tokens_from_tagged_text(line) for line in content.splitlines() if line.strip()]
    return [tokens_from_tagged_text(content)]
