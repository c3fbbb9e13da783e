"""Timing and subtitle quality evaluation.

Covers the embedding-similarity timing score (mean per-block cosine between
text and audio-slice embeddings), CPL/CPS conformity, timestamp shift
statistics against a reference, and Cohen's kappa for annotator agreement.
Embedding backends are abstracted behind a small provider interface so the
toolkit never touches waveforms or model weights itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np
import requests

from .core import SubtitleDocument
from .errors import ProviderError, ValidationError

CPL_LIMIT = 42
CPS_LIMIT = 21.0
PERCEPTION_THRESHOLD_MS = 120


class EmbeddingProvider(Protocol):
    """Maps text and timed audio slices into one shared vector space."""

    def text_embed(self, text: str, lang: str) -> np.ndarray: ...

    def audio_embed(self, audio_ref: str, start_ms: int, end_ms: int, lang: str) -> np.ndarray: ...


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero-norm vectors give 0."""
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def subsonar_score(
    doc: SubtitleDocument,
    audio_ref: str,
    lang: str,
    provider: EmbeddingProvider,
) -> float:
    """Mean cosine similarity between each block's text embedding and the
    embedding of the audio slice its timestamps select; in [-1, 1]."""
    if not len(doc):
        raise ValidationError("empty document")
    scores = block_scores(doc, audio_ref, lang, provider)
    return float(np.mean(scores))


def block_scores(
    doc: SubtitleDocument,
    audio_ref: str,
    lang: str,
    provider: EmbeddingProvider,
) -> list[float]:
    """Per-block cosine similarities (see :func:`subsonar_score`)."""
    out = []
    for i, block in enumerate(doc):
        try:
            t = np.asarray(provider.text_embed(block.text, lang), dtype=np.float64)
            a = np.asarray(
                provider.audio_embed(audio_ref, block.start.ms, block.end.ms, lang),
                dtype=np.float64,
            )
        except ProviderError as e:
            raise ProviderError(f"block {i + 1}: {e}") from e
        out.append(cosine(t, a))
    return out


@dataclass(frozen=True)
class ConformityReport:
    """Share of blocks respecting the per-line and per-second limits."""

    cpl_conform_pct: float
    cps_conform_pct: float
    cpl_flags: tuple[bool, ...]
    cps_flags: tuple[bool, ...]


def conformity(
    doc: SubtitleDocument,
    cpl_limit: int = CPL_LIMIT,
    cps_limit: float = CPS_LIMIT,
) -> ConformityReport:
    """CPL/CPS conformity percentages.

    A block conforms to CPL iff every line has at most ``cpl_limit``
    characters (Unicode scalar values, spaces and punctuation included) and
    to CPS iff its joined text's character count per second of display time
    is at most ``cps_limit``.
    """
    if not len(doc):
        raise ValidationError("empty document")
    cpl_flags = []
    cps_flags = []
    for block in doc:
        cpl_flags.append(all(len(line) <= cpl_limit for line in block.lines))
        cps = len(block.text) / (block.duration_ms / 1000.0)
        cps_flags.append(cps <= cps_limit)
    n = len(doc)
    return ConformityReport(
        cpl_conform_pct=100.0 * sum(cpl_flags) / n,
        cps_conform_pct=100.0 * sum(cps_flags) / n,
        cpl_flags=tuple(cpl_flags),
        cps_flags=tuple(cps_flags),
    )


@dataclass(frozen=True)
class ShiftReport:
    """Timestamp differences between a hypothesis and its reference.

    Shifts are signed (reference minus hypothesis, in ms); a timestamp
    counts as edited iff its absolute shift exceeds the threshold. Mean and
    population std are over the absolute shifts of edited timestamps only,
    and absent when nothing was edited.
    """

    start_shifts_ms: tuple[int, ...]
    end_shifts_ms: tuple[int, ...]
    edited_start_pct: float
    edited_end_pct: float
    edited_avg_pct: float
    mean_abs_shift_ms: float | None
    std_abs_shift_ms: float | None
    threshold_ms: int


def shift_stats(
    hyp: SubtitleDocument,
    ref: SubtitleDocument,
    threshold_ms: int = 0,
) -> ShiftReport:
    """Per-timestamp shift statistics between block-aligned documents."""
    if threshold_ms < 0:
        raise ValidationError(f"threshold must be non-negative, got {threshold_ms}")
    if len(hyp) != len(ref):
        raise ValidationError(
            f"hypothesis has {len(hyp)} blocks, reference has {len(ref)}"
        )
    starts = tuple(r.start.ms - h.start.ms for h, r in zip(hyp, ref))
    ends = tuple(r.end.ms - h.end.ms for h, r in zip(hyp, ref))
    edited_starts = [abs(s) for s in starts if abs(s) > threshold_ms]
    edited_ends = [abs(e) for e in ends if abs(e) > threshold_ms]
    n = len(hyp)
    start_pct = 100.0 * len(edited_starts) / n
    end_pct = 100.0 * len(edited_ends) / n
    edited = edited_starts + edited_ends
    mean = float(np.mean(edited)) if edited else None
    std = float(np.std(edited)) if edited else None
    return ShiftReport(
        start_shifts_ms=starts,
        end_shifts_ms=ends,
        edited_start_pct=start_pct,
        edited_end_pct=end_pct,
        edited_avg_pct=(start_pct + end_pct) / 2.0,
        mean_abs_shift_ms=mean,
        std_abs_shift_ms=std,
        threshold_ms=threshold_ms,
    )


def cohen_kappa(a: Sequence[bool], b: Sequence[bool]) -> float:
    """Chance-corrected agreement between two binary annotators.

    Returns 1.0 when both marginals are degenerate and the annotators agree
    everywhere; degenerate marginals with imperfect agreement are undefined.
    """
    if len(a) != len(b):
        raise ValidationError(f"length mismatch: {len(a)} vs {len(b)}")
    if not a:
        raise ValidationError("empty label lists")
    a = [bool(x) for x in a]
    b = [bool(x) for x in b]
    n = len(a)
    po = sum(x == y for x, y in zip(a, b)) / n
    pa = sum(a) / n
    pb = sum(b) / n
    pe = pa * pb + (1 - pa) * (1 - pb)
    if math.isclose(pe, 1.0):
        if math.isclose(po, 1.0):
            return 1.0
        raise ValidationError("kappa undefined: degenerate marginals with disagreement")
    return (po - pe) / (1 - pe)


class FileProvider:
    """Embedding provider backed by a JSON-lines lookup file.

    Each line holds ``{"kind": "text"|"audio", "key": ..., "vector": [...]}``;
    text keys are the exact block text, audio keys ``"ref:start_ms:end_ms"``.
    """

    def __init__(self, path):
        self._text: dict[str, np.ndarray] = {}
        self._audio: dict[str, np.ndarray] = {}
        dim = None
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    kind = obj["kind"]
                    key = obj["key"]
                    vec = np.asarray(obj["vector"], dtype=np.float64)
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                    raise ProviderError(f"{path}:{lineno}: malformed entry ({e})") from e
                if vec.ndim != 1 or not np.all(np.isfinite(vec)):
                    raise ProviderError(f"{path}:{lineno}: vector must be 1-D and finite")
                if dim is None:
                    dim = vec.shape[0]
                elif vec.shape[0] != dim:
                    raise ProviderError(
                        f"{path}:{lineno}: dimension {vec.shape[0]} != {dim}"
                    )
                if kind == "text":
                    self._text[key] = vec
                elif kind == "audio":
                    self._audio[key] = vec
                else:
                    raise ProviderError(f"{path}:{lineno}: unknown kind {kind!r}")

    def text_embed(self, text: str, lang: str) -> np.ndarray:
        if text not in self._text:
            raise ProviderError(f"no text embedding for {text!r}")
        return self._text[text]

    def audio_embed(self, audio_ref: str, start_ms: int, end_ms: int, lang: str) -> np.ndarray:
        key = f"{audio_ref}:{start_ms}:{end_ms}"
        if key not in self._audio:
            raise ProviderError(f"no audio embedding for {key!r}")
        return self._audio[key]


def file_provider(path) -> FileProvider:
    """Load a :class:`FileProvider` from a JSON-lines file."""
    return FileProvider(path)


class RemoteProvider:
    """Embedding provider client for an HTTP embedding service.

    POSTs one JSON object per embedding to ``<base_url>/embed`` and expects
    ``{"vector": [...]}`` back; transport failures are retried up to twice.
    """

    MAX_RETRIES = 2

    def __init__(self, base_url: str, timeout_s: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def _request(self, payload: dict) -> np.ndarray:
        url = f"{self.base_url}/embed"
        last_exc = None
        for _ in range(self.MAX_RETRIES + 1):
            try:
                resp = requests.post(url, json=payload, timeout=self.timeout_s)
            except requests.RequestException as e:
                last_exc = e
                continue
            if not resp.ok:
                raise ProviderError(
                    f"{url} returned {resp.status_code} for {payload.get('kind')} request"
                )
            try:
                vec = np.asarray(resp.json()["vector"], dtype=np.float64)
            except (ValueError, KeyError, TypeError) as e:
                raise ProviderError(f"{url}: malformed response ({e})") from e
            if vec.ndim != 1:
                raise ProviderError(f"{url}: vector must be 1-D")
            return vec
        raise ProviderError(f"{url}: transport failure after retries ({last_exc})")

    def text_embed(self, text: str, lang: str) -> np.ndarray:
        return self._request({"kind": "text", "lang": lang, "text": text})

    def audio_embed(self, audio_ref: str, start_ms: int, end_ms: int, lang: str) -> np.ndarray:
        return self._request(
            {
                "kind": "audio",
                "lang": lang,
                "audio_path": audio_ref,
                "start_ms": start_ms,
                "end_ms": end_ms,
            }
        )


def remote_provider(base_url: str, timeout_s: float = 30.0) -> RemoteProvider:
    """Client for a remote embedding service (see :class:`RemoteProvider`)."""
    return RemoteProvider(base_url, timeout_s)
