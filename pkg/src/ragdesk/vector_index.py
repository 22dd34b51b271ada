"""Per-source vector indexes with exact top-k cosine search.

One persistent index per source kind, each with its own metadata field
schema. Search is an exact linear scan (the corpora are desk-scale), sorted
by descending cosine similarity with ties broken by ascending chunk_id.

Persistence is one file per index: a JSON header line, then one JSON Lines
record per chunk with the vector as base64 little-endian float32. Writes go
to a temp file and are renamed into place.
"""

from __future__ import annotations

import base64
import json
import logging
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .chunking import Chunk
from .errors import (
    CorruptIndexError,
    IndexExistsError,
    IndexNotFoundError,
    IndexValidationError,
    IndexVersionError,
)
from .sources import SourceKind

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
DEFAULT_K = 10

# Metadata fields each source's chunks must carry.
DEFAULT_FIELD_SCHEMAS: dict[SourceKind, tuple[str, ...]] = {
    SourceKind.DOCUMENT_LIBRARY: ("title", "uri"),
    SourceKind.WORK_TRACKER: ("item_id", "title", "state"),
    SourceKind.CODE_REPOSITORY: ("file", "object_names"),
    SourceKind.WEBSITE: ("title", "uri"),
}


@dataclass(frozen=True)
class IndexDescriptor:
    name: str
    dim: int
    field_schema: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.dim <= 0:
            raise IndexValidationError(f"index {self.name!r}: dim must be positive, got {self.dim}")


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


def _encode_vector(vec: np.ndarray) -> str:
    return base64.b64encode(np.asarray(vec, dtype="<f4").tobytes()).decode("ascii")


def _decode_vector(data: str, dim: int) -> np.ndarray:
    raw = base64.b64decode(data.encode("ascii"), validate=True)
    vec = np.frombuffer(raw, dtype="<f4")
    if vec.shape != (dim,):
        raise ValueError(f"vector has {vec.shape[0]} components, expected {dim}")
    return vec.copy()


class VectorIndex:
    """In-memory index keyed by chunk_id, with snapshot-style persistence."""

    def __init__(self, descriptor: IndexDescriptor):
        self.descriptor = descriptor
        self._records: dict[str, Chunk] = {}
        self._lock = threading.RLock()
        self._scan_cache: Optional[tuple[list[str], np.ndarray, np.ndarray]] = None

    def __len__(self) -> int:
        return len(self._records)

    def doc_count(self, doc_id: str) -> int:
        with self._lock:
            return sum(1 for c in self._records.values() if c.doc_id == doc_id)

    def upsert(self, chunks: list[Chunk]) -> int:
        """Write chunks keyed by chunk_id; re-upserting the same id replaces."""
        desc = self.descriptor
        with self._lock:
            for chunk in chunks:
                if chunk.embedding is None:
                    raise IndexValidationError(f"chunk {chunk.chunk_id!r} has no embedding")
                vec = np.asarray(chunk.embedding, dtype=np.float32)
                if vec.shape != (desc.dim,):
                    raise IndexValidationError(
                        f"chunk {chunk.chunk_id!r}: embedding dim {vec.shape} does not match index dim {desc.dim}"
                    )
                if not np.all(np.isfinite(vec)):
                    raise IndexValidationError(f"chunk {chunk.chunk_id!r}: embedding has non-finite components")
                if not np.any(vec):
                    raise IndexValidationError(f"chunk {chunk.chunk_id!r}: zero-norm embedding cannot be indexed")
                missing = [f for f in desc.field_schema if f not in chunk.metadata]
                if missing:
                    raise IndexValidationError(f"chunk {chunk.chunk_id!r}: missing schema fields {missing}")
            for chunk in chunks:
                self._records[chunk.chunk_id] = chunk
            self._scan_cache = None
            return len({c.chunk_id for c in chunks})

    def delete_by_doc(self, doc_id: str) -> int:
        with self._lock:
            victims = [cid for cid, c in self._records.items() if c.doc_id == doc_id]
            for cid in victims:
                del self._records[cid]
            if victims:
                self._scan_cache = None
            return len(victims)

    def _snapshot(self) -> tuple[list[str], np.ndarray, np.ndarray]:
        with self._lock:
            if self._scan_cache is None:
                ids = sorted(self._records)
                if ids:
                    matrix = np.stack([np.asarray(self._records[i].embedding, dtype=np.float64) for i in ids])
                    norms = np.linalg.norm(matrix, axis=1)
                else:
                    matrix = np.zeros((0, self.descriptor.dim), dtype=np.float64)
                    norms = np.zeros(0, dtype=np.float64)
                self._scan_cache = (ids, matrix, norms)
            return self._scan_cache

    def search(
        self,
        query_vector: np.ndarray,
        k: int = DEFAULT_K,
        metadata_filter: Optional[dict[str, str]] = None,
    ) -> list[ScoredChunk]:
        """Exact top-k cosine scan, descending score, ties by ascending chunk_id."""
        if k < 1:
            raise ValueError("k must be >= 1")
        query = np.asarray(query_vector, dtype=np.float64)
        if query.shape != (self.descriptor.dim,):
            raise IndexValidationError(
                f"query dim {query.shape} does not match index dim {self.descriptor.dim}"
            )
        qnorm = float(np.linalg.norm(query))
        if qnorm == 0.0:
            logger.warning("index %s: zero query vector, returning no results", self.descriptor.name)
            return []
        ids, matrix, norms = self._snapshot()
        if not ids:
            return []
        scores = (matrix @ query) / (norms * qnorm)
        order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
        results = []
        for i in order:
            chunk = self._records[ids[i]]
            if metadata_filter and any(chunk.metadata.get(f) != v for f, v in metadata_filter.items()):
                continue
            results.append(ScoredChunk(chunk=chunk, score=float(scores[i])))
            if len(results) == k:
                break
        return results

    # -- persistence -------------------------------------------------------

    def persist(self, path: Path) -> None:
        with self._lock:
            ids = sorted(self._records)
            tmp = path.with_suffix(path.suffix + ".tmp")
            with tmp.open("w", encoding="utf-8") as fh:
                header = {
                    "format_version": FORMAT_VERSION,
                    "name": self.descriptor.name,
                    "dim": self.descriptor.dim,
                    "field_schema": list(self.descriptor.field_schema),
                    "count": len(ids),
                }
                fh.write(json.dumps(header, ensure_ascii=False) + "\n")
                for cid in ids:
                    chunk = self._records[cid]
                    record = {
                        "chunk_id": chunk.chunk_id,
                        "doc_id": chunk.doc_id,
                        "source": chunk.source.value,
                        "text": chunk.text,
                        "span": list(chunk.span),
                        "metadata": chunk.metadata,
                        "vector": _encode_vector(chunk.embedding),
                    }
                    fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            tmp.replace(path)

    @classmethod
    def load(cls, path: Path) -> "VectorIndex":
        """Load a persisted index; any inconsistency rejects the whole file."""
        if not path.is_file():
            raise IndexNotFoundError(f"no index file at {path}")
        data = path.read_text(encoding="utf-8")
        if not data:
            raise CorruptIndexError(f"{path}: empty file")
        if not data.endswith("\n"):
            raise CorruptIndexError(f"{path}: truncated at offset {len(data)} (missing final newline)")
        lines = data.splitlines()
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise CorruptIndexError(f"{path}: unparseable header line: {exc}") from exc
        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise IndexVersionError(f"{path}: format_version {version!r}, this build reads {FORMAT_VERSION}")
        try:
            descriptor = IndexDescriptor(
                name=header["name"], dim=int(header["dim"]), field_schema=tuple(header["field_schema"])
            )
            expected = int(header["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptIndexError(f"{path}: malformed header: {exc}") from exc

        index = cls(descriptor)
        records: dict[str, Chunk] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            try:
                rec = json.loads(line)
                chunk = Chunk(
                    chunk_id=rec["chunk_id"],
                    doc_id=rec["doc_id"],
                    source=SourceKind(rec["source"]),
                    text=rec["text"],
                    span=tuple(rec["span"]),
                    metadata=dict(rec["metadata"]),
                    embedding=_decode_vector(rec["vector"], descriptor.dim),
                )
            except Exception as exc:
                raise CorruptIndexError(f"{path}: bad record at line {lineno}: {exc}") from exc
            records[chunk.chunk_id] = chunk
        if len(records) != expected:
            raise CorruptIndexError(
                f"{path}: header declares {expected} chunks but file holds {len(records)}"
            )
        index._records = records
        return index


class IndexStore:
    """All indexes for one deployment, one file per index under data_dir.

    One writer at a time is assumed (the refresh job); readers in other
    processes pick up rewritten files because get() reloads whenever the
    on-disk fingerprint no longer matches the one recorded at load time.
    """

    def __init__(self, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._indexes: dict[str, VectorIndex] = {}
        self._fingerprints: dict[str, tuple[int, int]] = {}
        self._lock = threading.RLock()

    def path_for(self, name: str) -> Path:
        return self.data_dir / f"{name}.idx"

    def _disk_fingerprint(self, name: str) -> tuple[int, int]:
        stat = self.path_for(name).stat()
        return (stat.st_mtime_ns, stat.st_size)

    def create(self, descriptor: IndexDescriptor) -> VectorIndex:
        with self._lock:
            if descriptor.name in self._indexes or self.path_for(descriptor.name).exists():
                raise IndexExistsError(f"index {descriptor.name!r} already exists")
            index = VectorIndex(descriptor)
            index.persist(self.path_for(descriptor.name))
            self._indexes[descriptor.name] = index
            self._fingerprints[descriptor.name] = self._disk_fingerprint(descriptor.name)
            return index

    def get(self, name: str) -> VectorIndex:
        with self._lock:
            if name in self._indexes:
                try:
                    unchanged = self._fingerprints.get(name) == self._disk_fingerprint(name)
                except OSError:
                    unchanged = True  # file vanished; keep serving the snapshot
                if unchanged:
                    return self._indexes[name]
            self._indexes[name] = VectorIndex.load(self.path_for(name))
            self._fingerprints[name] = self._disk_fingerprint(name)
            return self._indexes[name]

    def ensure(self, descriptor: IndexDescriptor) -> VectorIndex:
        """Open the named index, creating it if this is the first run."""
        try:
            return self.get(descriptor.name)
        except IndexNotFoundError:
            return self.create(descriptor)

    def persist(self, name: str) -> None:
        with self._lock:
            self._indexes[name].persist(self.path_for(name))
            self._fingerprints[name] = self._disk_fingerprint(name)

    def names(self) -> list[str]:
        with self._lock:
            on_disk = {p.stem for p in self.data_dir.glob("*.idx")}
            return sorted(on_disk | set(self._indexes))

    def counts(self) -> dict[str, int]:
        return {name: len(self.get(name)) for name in self.names()}
