"""Exception hierarchy shared across the toolkit."""


class SubalignError(Exception):
    """Base class for all toolkit errors."""


class SrtParseError(SubalignError):
    """Malformed SRT input (carries block index and line number when known)."""

    def __init__(self, message, block=None, line=None):
        loc = []
        if block is not None:
            loc.append(f"block {block}")
        if line is not None:
            loc.append(f"line {line}")
        if loc:
            message = f"{', '.join(loc)}: {message}"
        super().__init__(message)
        self.block = block
        self.line = line


class TaggedTextError(SubalignError):
    """Invalid tagged token stream (empty blocks, consecutive markers, ...)."""


class MatrixFormatError(SubalignError):
    """Malformed matrix file or inconsistent dimensions."""


class ValidationError(SubalignError):
    """A value violates a documented invariant."""


class AlignmentError(SubalignError):
    """Alignment inputs are inconsistent (shape/token mismatches)."""


class InfeasibleAlignmentError(AlignmentError):
    """No monotonic CTC alignment exists for the given label/frame lengths."""


class ProviderError(SubalignError):
    """An embedding provider failed to produce a vector."""
