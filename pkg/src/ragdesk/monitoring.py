"""Usage indicators and descriptive breakdowns over the interaction log.

Everything is recomputed from the append-only log on demand (desk-scale
volumes; correctness over throughput), with a small cache invalidated
whenever the log grows. Sessionization for the engagement indicator reuses
the same 3600 s gap that bounds conversation history, so "messages per
session" means the same thing everywhere.
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from datetime import date, datetime
from enum import Enum
from pathlib import Path
from typing import Optional

from .session_store import InteractionRecord

logger = logging.getLogger(__name__)

SESSION_GAP_S = 3600
DEFAULT_LEAD_THRESHOLD = 46
DEFAULT_OCCASIONAL_THRESHOLD = 20


class Dimension(str, Enum):
    DEPARTMENT = "department"
    JOB_TITLE = "job_title"
    USER = "user"
    QUESTION_TYPE = "question_type"


_DIMENSION_FIELD = {
    Dimension.DEPARTMENT: "department",
    Dimension.JOB_TITLE: "job_title",
    Dimension.USER: "user_id",
    Dimension.QUESTION_TYPE: "question_type",
}

UNKNOWN_KEY = "(unknown)"


class AdopterClass(str, Enum):
    LEAD = "lead"
    OCCASIONAL = "occasional"
    INACTIVE = "inactive"


@dataclass
class DailyEngagement:
    day: date
    avg_messages_per_session: float


@dataclass
class UsageMetrics:
    start: datetime
    end: datetime
    message_count: int
    unique_users: int
    avg_response_time_s: Optional[float]
    daily_engagement: list[DailyEngagement]
    skipped_records: int = 0

    def to_dict(self) -> dict:
        body = {
            "range": {"start": self.start.isoformat(), "end": self.end.isoformat()},
            "message_count": self.message_count,
            "unique_users": self.unique_users,
        }
        if self.avg_response_time_s is not None:
            body["avg_response_time_s"] = self.avg_response_time_s
        body["daily_engagement"] = [
            {"date": e.day.isoformat(), "avg_messages_per_session": e.avg_messages_per_session}
            for e in self.daily_engagement
        ]
        body["skipped_records"] = self.skipped_records
        return body


@dataclass
class Breakdown:
    dimension: Dimension
    rows: list[tuple[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension.value,
            "rows": [{"key": k, "count": c} for k, c in self.rows],
        }


@dataclass
class AdopterRow:
    user_id: str
    query_count: int
    adopter_class: AdopterClass
    rising: bool = False

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "query_count": self.query_count,
            "class": self.adopter_class.value,
            "rising": self.rising,
        }


def _in_range(record: InteractionRecord, start: datetime, end: datetime) -> bool:
    return start <= record.timestamp <= end


def compute_metrics(
    records: list[InteractionRecord],
    start: datetime,
    end: datetime,
    skipped_records: int = 0,
    session_gap_s: int = SESSION_GAP_S,
) -> UsageMetrics:
    """Usage indicators over [start, end] inclusive.

    Sessions for daily engagement are maximal per-user runs of messages on
    one UTC calendar day whose consecutive gaps are < session_gap_s; days
    with no traffic are omitted.
    """
    selected = sorted((r for r in records if _in_range(r, start, end)), key=lambda r: r.timestamp)
    message_count = len(selected)
    unique_users = len({r.user_id for r in selected})
    avg_latency = sum(r.latency_seconds for r in selected) / message_count if message_count else None

    by_day_user: dict[tuple[date, str], list[datetime]] = {}
    for r in selected:
        by_day_user.setdefault((r.timestamp.date(), r.user_id), []).append(r.timestamp)

    day_messages: dict[date, int] = {}
    day_sessions: dict[date, int] = {}
    for (day, _user), stamps in by_day_user.items():
        sessions = 1
        for prev, cur in zip(stamps, stamps[1:]):
            if (cur - prev).total_seconds() >= session_gap_s:
                sessions += 1
        day_messages[day] = day_messages.get(day, 0) + len(stamps)
        day_sessions[day] = day_sessions.get(day, 0) + sessions

    engagement = [
        DailyEngagement(day=d, avg_messages_per_session=day_messages[d] / day_sessions[d])
        for d in sorted(day_messages)
    ]
    return UsageMetrics(
        start=start,
        end=end,
        message_count=message_count,
        unique_users=unique_users,
        avg_response_time_s=avg_latency,
        daily_engagement=engagement,
        skipped_records=skipped_records,
    )


def compute_breakdown(
    records: list[InteractionRecord],
    start: datetime,
    end: datetime,
    dimension: Dimension,
) -> Breakdown:
    """Group-by count over one breakdown dimension, descending count then key."""
    fieldname = _DIMENSION_FIELD[dimension]
    counts: dict[str, int] = {}
    for r in records:
        if not _in_range(r, start, end):
            continue
        key = getattr(r, fieldname) or UNKNOWN_KEY
        counts[key] = counts.get(key, 0) + 1
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Breakdown(dimension=dimension, rows=rows)


def classify_adopters(
    records: list[InteractionRecord],
    start: datetime,
    end: datetime,
    lead_threshold: int = DEFAULT_LEAD_THRESHOLD,
    occasional_threshold: int = DEFAULT_OCCASIONAL_THRESHOLD,
) -> list[AdopterRow]:
    """Adoption bands per user over the range.

    lead_threshold and up is a lead adopter; anything from 1 below the lead
    band is occasional, flagged "rising" once it reaches occasional_threshold;
    users known to the log but silent in the range are inactive. Thresholds
    describe one observed deployment, so both are configurable.
    """
    registry = {r.user_id for r in records}
    counts: dict[str, int] = {}
    for r in records:
        if _in_range(r, start, end):
            counts[r.user_id] = counts.get(r.user_id, 0) + 1

    rows = []
    for user_id in registry:
        count = counts.get(user_id, 0)
        if count == 0:
            rows.append(AdopterRow(user_id=user_id, query_count=0, adopter_class=AdopterClass.INACTIVE))
        elif count >= lead_threshold:
            rows.append(AdopterRow(user_id=user_id, query_count=count, adopter_class=AdopterClass.LEAD))
        else:
            rows.append(
                AdopterRow(
                    user_id=user_id,
                    query_count=count,
                    adopter_class=AdopterClass.OCCASIONAL,
                    rising=count >= occasional_threshold,
                )
            )
    rows.sort(key=lambda row: (-row.query_count, row.user_id))
    return rows


class MonitoringService:
    """Read-side facade over the interaction log file with a size-keyed cache."""

    def __init__(
        self,
        log_path: Path,
        lead_threshold: int = DEFAULT_LEAD_THRESHOLD,
        occasional_threshold: int = DEFAULT_OCCASIONAL_THRESHOLD,
    ):
        self.log_path = Path(log_path)
        self.lead_threshold = lead_threshold
        self.occasional_threshold = occasional_threshold
        self._lock = threading.Lock()
        self._cache_key: Optional[int] = None
        self._cache: tuple[list[InteractionRecord], int] = ([], 0)

    def _load(self) -> tuple[list[InteractionRecord], int]:
        size = self.log_path.stat().st_size if self.log_path.is_file() else 0
        with self._lock:
            if size == self._cache_key:
                return self._cache
            records: list[InteractionRecord] = []
            skipped = 0
            if self.log_path.is_file():
                with self.log_path.open("r", encoding="utf-8") as fh:
                    for lineno, line in enumerate(fh, start=1):
                        if not line.strip():
                            continue
                        try:
                            records.append(InteractionRecord.from_json(line))
                        except (json.JSONDecodeError, KeyError, ValueError, TypeError) as exc:
                            skipped += 1
                            logger.warning("%s: corrupt record at line %d: %s", self.log_path, lineno, exc)
            self._cache_key = size
            self._cache = (records, skipped)
            return self._cache

    def usage(self, start: datetime, end: datetime) -> UsageMetrics:
        records, skipped = self._load()
        return compute_metrics(records, start, end, skipped_records=skipped)

    def breakdown(self, start: datetime, end: datetime, dimension: Dimension) -> Breakdown:
        records, _ = self._load()
        return compute_breakdown(records, start, end, dimension)

    def adopters(self, start: datetime, end: datetime) -> list[AdopterRow]:
        records, _ = self._load()
        return classify_adopters(
            records, start, end, lead_threshold=self.lead_threshold, occasional_threshold=self.occasional_threshold
        )
