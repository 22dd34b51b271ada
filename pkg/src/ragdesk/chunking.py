"""Chunking: split parsed text at logical boundaries into embeddable chunks.

Boundary priority is heading, then blank-line paragraph, then sentence.
Adjacent units are merged greedily up to the size limit; a single unit that
cannot be divided any further is hard-split into overlapping windows. Chunk
spans are character offsets into the parsed text and their union always
covers it, so no bytes are dropped.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .sources import SourceKind


@dataclass(frozen=True)
class ChunkPolicy:
    max_chunk_chars: int = 2000
    overlap_chars: int = 200

    def __post_init__(self) -> None:
        if self.max_chunk_chars <= 0:
            raise ValueError("max_chunk_chars must be positive")
        if not 0 <= self.overlap_chars < self.max_chunk_chars:
            raise ValueError("overlap_chars must be in [0, max_chunk_chars)")


@dataclass
class Chunk:
    """The retrieval unit: one embeddable fragment of a source document.

    span is (start_offset, end_offset) in characters for text documents and
    (start_line, end_line) for code chunks.
    """

    chunk_id: str
    doc_id: str
    source: SourceKind
    text: str
    span: tuple[int, int]
    metadata: dict[str, str] = field(default_factory=dict)
    embedding: Optional[np.ndarray] = None


def make_chunk_id(doc_id: str, ordinal: int, text: str) -> str:
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]
    return f"{doc_id}#{ordinal:04d}#{digest}"


_HEADING_RE = re.compile(r"^#{1,6}\s", re.MULTILINE)
_PARAGRAPH_SEP_RE = re.compile(r"\n(?:[ \t]*\n)+")
_SENTENCE_END_RE = re.compile(r"[.!?]+[)\"']*\s+")


def _heading_sections(text: str) -> list[tuple[int, int]]:
    starts = [m.start() for m in _HEADING_RE.finditer(text)]
    if not starts or starts[0] != 0:
        starts = [0] + starts
    bounds = starts + [len(text)]
    return [(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1) if bounds[i] < bounds[i + 1]]


def _paragraph_units(text: str, start: int, end: int) -> list[tuple[int, int]]:
    # Each paragraph keeps its trailing blank lines so units tile the section.
    units = []
    pos = start
    for sep in _PARAGRAPH_SEP_RE.finditer(text, start, end):
        units.append((pos, sep.end()))
        pos = sep.end()
    if pos < end:
        units.append((pos, end))
    return units


def _sentence_units(text: str, start: int, end: int) -> list[tuple[int, int]]:
    units = []
    pos = start
    for m in _SENTENCE_END_RE.finditer(text, start, end):
        units.append((pos, m.end()))
        pos = m.end()
    if pos < end:
        units.append((pos, end))
    return units


def _hard_windows(start: int, end: int, policy: ChunkPolicy) -> list[tuple[int, int]]:
    step = policy.max_chunk_chars - policy.overlap_chars
    windows = []
    pos = start
    while True:
        stop = pos + policy.max_chunk_chars
        if stop >= end:
            windows.append((pos, end))
            break
        windows.append((pos, stop))
        pos += step
    return windows


def chunk_text(
    text: str,
    policy: ChunkPolicy = ChunkPolicy(),
    *,
    doc_id: str = "",
    source: SourceKind = SourceKind.DOCUMENT_LIBRARY,
    metadata: Optional[dict[str, str]] = None,
) -> list[Chunk]:
    """Split text into chunks no longer than policy.max_chunk_chars.

    Deterministic: identical input always yields the identical chunk list,
    ids included. Empty or whitespace-only text yields no chunks.
    """
    if not text or not text.strip():
        return []
    limit = policy.max_chunk_chars

    # (start, end, atomic) — atomic units are hard-split windows that must
    # not be merged with their neighbours (they already overlap them).
    units: list[tuple[int, int, bool]] = []
    for sec_start, sec_end in _heading_sections(text):
        for p_start, p_end in _paragraph_units(text, sec_start, sec_end):
            if p_end - p_start <= limit:
                units.append((p_start, p_end, False))
                continue
            for s_start, s_end in _sentence_units(text, p_start, p_end):
                if s_end - s_start <= limit:
                    units.append((s_start, s_end, False))
                else:
                    units.extend((w_start, w_end, True) for w_start, w_end in _hard_windows(s_start, s_end, policy))

    spans: list[tuple[int, int]] = []
    cur: Optional[tuple[int, int]] = None
    for u_start, u_end, atomic in units:
        if atomic:
            if cur is not None:
                spans.append(cur)
                cur = None
            spans.append((u_start, u_end))
        elif cur is None:
            cur = (u_start, u_end)
        elif u_end - cur[0] <= limit:
            cur = (cur[0], u_end)
        else:
            spans.append(cur)
            cur = (u_start, u_end)
    if cur is not None:
        spans.append(cur)

    meta = dict(metadata or {})
    chunks = []
    for i, (start, end) in enumerate(spans):
        body = text[start:end]
        chunks.append(
            Chunk(
                chunk_id=make_chunk_id(doc_id, i, body),
                doc_id=doc_id,
                source=source,
                text=body,
                span=(start, end),
                metadata=dict(meta),
            )
        )
    return chunks
