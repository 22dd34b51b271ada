"""Rolling per-user conversation history and the durable interaction log.

History is in memory; the append-only JSON Lines interaction log is the only
persistence, and history is reconstructed from it at startup by replaying
the last hour. The history window is anchored at query time with a strict
cutoff: a message is visible iff now - timestamp < window seconds.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterator, Optional

from .errors import DuplicateInteractionError

logger = logging.getLogger(__name__)

SESSION_WINDOW_S = 3600


class Role(str, Enum):
    USER = "user"
    ASSISTANT = "assistant"


@dataclass(frozen=True)
class SessionMessage:
    user_id: str
    timestamp: datetime
    role: Role
    text: str


@dataclass(frozen=True)
class InteractionRecord:
    """One logged query/response with every monitoring breakdown dimension."""

    interaction_id: str
    timestamp: datetime
    user_id: str
    department: str
    job_title: str
    query_text: str
    question_type: str
    response_text: str
    latency_seconds: float
    error_flag: bool

    def __post_init__(self) -> None:
        if self.latency_seconds < 0:
            raise ValueError("latency_seconds must be >= 0")

    def to_json(self) -> str:
        return json.dumps(
            {
                "interaction_id": self.interaction_id,
                "timestamp": self.timestamp.isoformat(),
                "user_id": self.user_id,
                "department": self.department,
                "job_title": self.job_title,
                "query_text": self.query_text,
                "question_type": self.question_type,
                "response_text": self.response_text,
                "latency_seconds": self.latency_seconds,
                "error_flag": self.error_flag,
            },
            ensure_ascii=False,
        )

    @classmethod
    def from_json(cls, line: str) -> "InteractionRecord":
        data = json.loads(line)
        return cls(
            interaction_id=data["interaction_id"],
            timestamp=datetime.fromisoformat(data["timestamp"]),
            user_id=data["user_id"],
            department=data["department"],
            job_title=data["job_title"],
            query_text=data["query_text"],
            question_type=data["question_type"],
            response_text=data["response_text"],
            latency_seconds=float(data["latency_seconds"]),
            error_flag=bool(data["error_flag"]),
        )


class InteractionLog:
    """Append-only JSON Lines log; records are immutable once written."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seen_ids: set[str] = set()
        for record in self.records():
            self._seen_ids.add(record.interaction_id)

    def write(self, record: InteractionRecord) -> None:
        line = record.to_json() + "\n"
        with self._lock:
            if record.interaction_id in self._seen_ids:
                raise DuplicateInteractionError(
                    f"interaction {record.interaction_id!r} is already logged; records are immutable"
                )
            # One write call per line so a crash never leaves a partial record
            # followed by more data.
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
            self._seen_ids.add(record.interaction_id)

    def records(self) -> Iterator[InteractionRecord]:
        if not self.path.is_file():
            return
        with self.path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    yield InteractionRecord.from_json(line)
                except (json.JSONDecodeError, KeyError, ValueError) as exc:
                    logger.warning("%s: skipping bad record at line %d: %s", self.path, lineno, exc)

    def tail(self, n: int) -> list[str]:
        if not self.path.is_file():
            return []
        lines = self.path.read_text(encoding="utf-8").splitlines()
        return lines[-n:]

    def line_count(self) -> int:
        if not self.path.is_file():
            return 0
        return sum(1 for line in self.path.open("r", encoding="utf-8") if line.strip())


class SessionStore:
    """Per-user message history with a rolling visibility window.

    Messages are kept for the process lifetime (desk-scale traffic); the
    window is applied on read so history(user, t) is exact for any t.
    """

    def __init__(self, log: Optional[InteractionLog] = None, window_s: int = SESSION_WINDOW_S):
        self.window_s = window_s
        self._log = log
        self._messages: dict[str, list[SessionMessage]] = {}
        self._lock = threading.Lock()

    def replay(self, now: datetime) -> int:
        """Rebuild in-memory history from log records inside the window."""
        if self._log is None:
            return 0
        restored = 0
        for record in self._log.records():
            if (now - record.timestamp).total_seconds() < self.window_s:
                self._add(record.user_id, record.timestamp, Role.USER, record.query_text)
                self._add(record.user_id, record.timestamp, Role.ASSISTANT, record.response_text)
                restored += 1
        return restored

    def _add(self, user_id: str, timestamp: datetime, role: Role, text: str) -> None:
        self._messages.setdefault(user_id, []).append(
            SessionMessage(user_id=user_id, timestamp=timestamp, role=role, text=text)
        )

    def history(self, user_id: str, now: datetime) -> list[SessionMessage]:
        """Messages m with now - m.timestamp < window_s (strict), ascending."""
        with self._lock:
            messages = self._messages.get(user_id, [])
            visible = [m for m in messages if (now - m.timestamp).total_seconds() < self.window_s]
        return sorted(visible, key=lambda m: m.timestamp)

    def append(
        self,
        user_id: str,
        query_text: str,
        response_text: str,
        now: datetime,
        record: Optional[InteractionRecord] = None,
    ) -> None:
        """Add the query/response pair; the in-memory session updates even if
        the durable log write fails (availability over durability), with the
        failure surfaced to the caller."""
        with self._lock:
            self._add(user_id, now, Role.USER, query_text)
            self._add(user_id, now, Role.ASSISTANT, response_text)
        if record is not None and self._log is not None:
            self._log.write(record)

    def log_interaction(self, record: InteractionRecord) -> None:
        if self._log is None:
            raise ValueError("session store has no interaction log attached")
        self._log.write(record)


def utc_now() -> datetime:
    return datetime.now(timezone.utc)
