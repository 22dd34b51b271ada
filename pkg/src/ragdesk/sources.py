"""Source connectors: fetch raw documents from configured roots.

Connectors are filesystem adapters (one directory per source) implementing a
common contract, so remote systems can be swapped in later without touching
the rest of the ingestion path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .errors import SourceUnavailableError

logger = logging.getLogger(__name__)


class SourceKind(str, Enum):
    DOCUMENT_LIBRARY = "document_library"
    WORK_TRACKER = "work_tracker"
    CODE_REPOSITORY = "code_repository"
    WEBSITE = "website"


# Extension -> media type for everything the parser understands.
MEDIA_TYPES = {
    ".txt": "text/plain",
    ".md": "text/markdown",
    ".markdown": "text/markdown",
    ".html": "text/html",
    ".htm": "text/html",
    ".py": "text/x-python",
    ".js": "text/x-javascript",
    ".ts": "text/x-typescript",
    ".sql": "text/x-sql",
    ".rpg": "text/x-rpg",
    ".rpgle": "text/x-rpg",
    ".sqlrpgle": "text/x-rpg",
    ".clp": "text/x-cl",
    ".cl": "text/x-cl",
}

DEFAULT_ALLOWLISTS: dict[SourceKind, tuple[str, ...]] = {
    SourceKind.DOCUMENT_LIBRARY: (".md", ".txt"),
    SourceKind.WORK_TRACKER: (".md", ".txt"),
    SourceKind.CODE_REPOSITORY: (".py", ".js", ".ts", ".sql", ".rpg", ".rpgle", ".sqlrpgle", ".clp", ".cl"),
    SourceKind.WEBSITE: (".html", ".htm"),
}


@dataclass(frozen=True)
class SourceSpec:
    """One configured source: a kind plus a filesystem root standing in for it."""

    name: str
    kind: SourceKind
    root: Path
    allowlist: tuple[str, ...] = ()
    refresh_interval_s: int = 3600

    def effective_allowlist(self) -> tuple[str, ...]:
        return self.allowlist or DEFAULT_ALLOWLISTS[self.kind]


@dataclass
class RawDocument:
    """A document as fetched from its source, before parsing."""

    doc_id: str
    source: SourceKind
    uri: str
    content: bytes
    media_type: str
    last_modified: datetime
    metadata: dict[str, str] = field(default_factory=dict)


def media_type_for(path: Path) -> str:
    return MEDIA_TYPES.get(path.suffix.lower(), "application/octet-stream")


def fetch_source(spec: SourceSpec) -> list[RawDocument]:
    """Return every allowlisted document under the source root.

    doc_ids are the posix-style paths relative to the root, so they stay
    stable across refreshes as long as the file does not move. Individual
    unreadable files are skipped with a warning; an unreadable root aborts
    the whole source.
    """
    root = spec.root
    if not root.is_dir():
        raise SourceUnavailableError(f"source {spec.name!r}: root {root} is not a readable directory")

    allow = {ext.lower() for ext in spec.effective_allowlist()}
    docs: list[RawDocument] = []
    try:
        paths = sorted(p for p in root.rglob("*") if p.is_file())
    except OSError as exc:
        raise SourceUnavailableError(f"source {spec.name!r}: cannot walk {root}: {exc}") from exc

    for path in paths:
        if path.suffix.lower() not in allow:
            continue
        rel = path.relative_to(root).as_posix()
        try:
            content = path.read_bytes()
            mtime = path.stat().st_mtime
        except OSError as exc:
            logger.warning("source %s: skipping unreadable file %s: %s", spec.name, rel, exc)
            continue
        docs.append(
            RawDocument(
                doc_id=rel,
                source=spec.kind,
                uri=rel,
                content=content,
                media_type=media_type_for(path),
                last_modified=datetime.fromtimestamp(mtime, tz=timezone.utc),
                metadata={"title": path.stem},
            )
        )
    return docs
