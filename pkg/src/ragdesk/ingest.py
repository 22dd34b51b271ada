"""Ingestion refresh: synchronize per-source indexes with source content.

Each pass fetches every configured source, detects changes by a
(last_modified, content hash) pair kept in a per-source manifest, and
re-parses, re-chunks, re-embeds and upserts only what changed. Deleted
documents lose their chunks. The pass is idempotent: running it twice over
unchanged sources writes nothing the second time.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from .chunking import Chunk, ChunkPolicy, chunk_text, make_chunk_id
from .code_objects import (
    DEFAULT_SCANNER_RULES,
    ScannerRules,
    extract_code_objects,
    render_description,
)
from .code_objects import describe_code_file as _describe
from .embeddings import Embedder, is_empty_embedding
from .errors import (
    DocumentDecodeError,
    GatewayError,
    RefreshInFlightError,
    SourceUnavailableError,
    UnsupportedFormatError,
)
from .llm_gateway import LlmGateway
from .parsing import extract_title, parse_document
from .sources import RawDocument, SourceKind, SourceSpec, fetch_source
from .vector_index import DEFAULT_FIELD_SCHEMAS, IndexDescriptor, IndexStore

logger = logging.getLogger(__name__)

DEFAULT_REFRESH_INTERVAL_S = 3600


@dataclass
class SourceReport:
    source: str
    fetched: int = 0
    changed: int = 0
    upserted: int = 0
    deleted: int = 0
    failed: bool = False
    error: str = ""


@dataclass
class RefreshReport:
    started_at: datetime
    dry_run: bool = False
    sources: list[SourceReport] = field(default_factory=list)

    @property
    def fetched(self) -> int:
        return sum(s.fetched for s in self.sources)

    @property
    def changed(self) -> int:
        return sum(s.changed for s in self.sources)

    @property
    def upserted(self) -> int:
        return sum(s.upserted for s in self.sources)

    @property
    def deleted(self) -> int:
        return sum(s.deleted for s in self.sources)

    def to_dict(self) -> dict:
        return {
            "started_at": self.started_at.isoformat(),
            "dry_run": self.dry_run,
            "fetched": self.fetched,
            "changed": self.changed,
            "upserted": self.upserted,
            "deleted": self.deleted,
            "sources": [
                {
                    "source": s.source,
                    "fetched": s.fetched,
                    "changed": s.changed,
                    "upserted": s.upserted,
                    "deleted": s.deleted,
                    "failed": s.failed,
                    "error": s.error,
                }
                for s in self.sources
            ],
        }


def _fingerprint(doc: RawDocument) -> dict[str, str]:
    return {
        "uri": doc.uri,
        "last_modified": doc.last_modified.isoformat(),
        "content_hash": hashlib.sha256(doc.content).hexdigest(),
    }


class Ingestor:
    """Runs refresh passes over all configured sources.

    At most one pass is in flight at a time; a second trigger while one is
    running raises RefreshInFlightError so callers can coalesce.
    """

    def __init__(
        self,
        sources: list[SourceSpec],
        index_store: IndexStore,
        embedder: Embedder,
        gateway: Optional[LlmGateway] = None,
        policy: ChunkPolicy = ChunkPolicy(),
        scanner_rules: ScannerRules = DEFAULT_SCANNER_RULES,
        clock: Callable[[], datetime] = lambda: datetime.now(timezone.utc),
    ):
        self.sources = list(sources)
        self.index_store = index_store
        self.embedder = embedder
        self.gateway = gateway
        self.policy = policy
        self.scanner_rules = scanner_rules
        self.clock = clock
        self._run_lock = threading.Lock()
        self._job_id: str = ""
        for spec in self.sources:
            index_store.ensure(
                IndexDescriptor(
                    name=spec.kind.value,
                    dim=embedder.dim,
                    field_schema=DEFAULT_FIELD_SCHEMAS[spec.kind],
                )
            )

    # -- manifests ----------------------------------------------------------

    def _manifest_path(self, spec: SourceSpec) -> Path:
        return self.index_store.data_dir / f"{spec.kind.value}.manifest.json"

    def _load_manifest(self, spec: SourceSpec) -> dict[str, dict[str, str]]:
        path = self._manifest_path(spec)
        if not path.is_file():
            return {}
        return json.loads(path.read_text(encoding="utf-8"))

    def _save_manifest(self, spec: SourceSpec, manifest: dict[str, dict[str, str]]) -> None:
        path = self._manifest_path(spec)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(manifest, ensure_ascii=False, sort_keys=True, indent=1), encoding="utf-8")
        tmp.replace(path)

    # -- chunk builders ------------------------------------------------------

    def build_chunks(self, doc: RawDocument) -> list[Chunk]:
        """Parse one document into fully-populated, not-yet-embedded chunks."""
        if doc.source is SourceKind.CODE_REPOSITORY:
            return self._build_code_chunks(doc)
        text = parse_document(doc)
        metadata = {"title": extract_title(doc, text), "uri": doc.uri}
        if doc.source is SourceKind.WORK_TRACKER:
            metadata["item_id"] = Path(doc.uri).stem
            metadata["state"] = _tracker_state(text)
        return chunk_text(text, self.policy, doc_id=doc.doc_id, source=doc.source, metadata=metadata)

    def _build_code_chunks(self, doc: RawDocument) -> list[Chunk]:
        objects = extract_code_objects(doc, self.scanner_rules)
        chunks = []
        for i, obj in enumerate(objects):
            chunks.append(
                Chunk(
                    chunk_id=make_chunk_id(doc.doc_id, i, obj.body),
                    doc_id=doc.doc_id,
                    source=doc.source,
                    text=obj.body,
                    span=obj.span,
                    metadata={"file": doc.uri, "object_names": obj.name, "uri": doc.uri},
                )
            )
        if objects and self.gateway is not None:
            try:
                description = _describe(doc, objects, self.gateway)
            except GatewayError as exc:
                logger.error("%s: description skipped, code chunks still indexed: %s", doc.doc_id, exc)
            else:
                names = description.key_procedures or [o.name for o in objects]
                body = render_description(description, doc.uri)
                chunks.append(
                    Chunk(
                        chunk_id=make_chunk_id(doc.doc_id, len(objects), body),
                        doc_id=doc.doc_id,
                        source=doc.source,
                        text=body,
                        span=(1, max(o.span[1] for o in objects)),
                        metadata={"file": doc.uri, "object_names": ",".join(names), "uri": doc.uri},
                    )
                )
        return chunks

    # -- refresh -------------------------------------------------------------

    def refresh(
        self,
        only_source: Optional[str] = None,
        dry_run: bool = False,
        full: bool = False,
    ) -> RefreshReport:
        if not self._run_lock.acquire(blocking=False):
            raise RefreshInFlightError(self._job_id)
        self._job_id = uuid.uuid4().hex
        try:
            report = RefreshReport(started_at=self.clock(), dry_run=dry_run)
            for spec in self.sources:
                if only_source is not None and spec.name != only_source:
                    continue
                report.sources.append(self._refresh_source(spec, dry_run=dry_run, full=full))
            return report
        finally:
            self._job_id = ""
            self._run_lock.release()

    @property
    def job_id(self) -> str:
        return self._job_id

    def _refresh_source(self, spec: SourceSpec, dry_run: bool, full: bool) -> SourceReport:
        sr = SourceReport(source=spec.name)
        try:
            docs = fetch_source(spec)
        except SourceUnavailableError as exc:
            logger.error("refresh: %s", exc)
            sr.failed = True
            sr.error = str(exc)
            return sr

        sr.fetched = len(docs)
        index = self.index_store.get(spec.kind.value)
        manifest = self._load_manifest(spec)
        seen: dict[str, dict[str, str]] = {}
        changed_docs: list[RawDocument] = []
        for doc in docs:
            fp = _fingerprint(doc)
            seen[doc.doc_id] = fp
            if full or manifest.get(doc.doc_id) != fp:
                changed_docs.append(doc)
        deleted_ids = [doc_id for doc_id in manifest if doc_id not in seen]
        sr.changed = len(changed_docs)

        for doc in changed_docs:
            try:
                chunks = self.build_chunks(doc)
            except (UnsupportedFormatError, DocumentDecodeError) as exc:
                logger.warning("refresh: skipping %s: %s", doc.doc_id, exc)
                seen.pop(doc.doc_id, None)
                sr.changed -= 1
                continue
            embedded = self._embed(chunks)
            if dry_run:
                sr.deleted += index.doc_count(doc.doc_id)
                sr.upserted += len(embedded)
                continue
            sr.deleted += index.delete_by_doc(doc.doc_id)
            sr.upserted += index.upsert(embedded)

        for doc_id in deleted_ids:
            if dry_run:
                sr.deleted += index.doc_count(doc_id)
            else:
                sr.deleted += index.delete_by_doc(doc_id)

        if not dry_run:
            self.index_store.persist(spec.kind.value)
            self._save_manifest(spec, seen)
        return sr

    def _embed(self, chunks: list[Chunk]) -> list[Chunk]:
        vectors = self.embedder.embed_batch([c.text for c in chunks])
        kept = []
        for chunk, vec in zip(chunks, vectors):
            if is_empty_embedding(vec):
                logger.warning("skipping chunk %s: empty embedding", chunk.chunk_id)
                continue
            chunk.embedding = vec
            kept.append(chunk)
        return kept


def _tracker_state(text: str) -> str:
    """Pull a 'State: X' line out of a work item body, if the fixture carries one."""
    for line in text.splitlines()[:20]:
        if line.lower().startswith("state:"):
            return line.split(":", 1)[1].strip()
    return "(unknown)"
