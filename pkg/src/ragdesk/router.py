"""Query routing: split a query into sub-sentence tasks and route each one.

Splitting is rule-based and deterministic; only the per-task route decision
goes to the LLM, with the reply matched case-insensitively against the four
route names and anything else falling back to the no-retrieval route. The
assistant must always answer, so routing never raises on gateway failure.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from enum import Enum

from .errors import EmptyQueryError, GatewayError
from .llm_gateway import CompletionRequest, LlmGateway, Purpose
from .prompts import PromptLibrary
from .session_store import SessionMessage
from .sources import SourceKind

logger = logging.getLogger(__name__)

DEFAULT_MAX_TASKS = 4
MIN_SEGMENT_CONTENT_WORDS = 3
HISTORY_DIGEST_TURNS = 6
HISTORY_DIGEST_CHARS = 200
ROUTING_MAX_CHARS = 100


class Route(str, Enum):
    QUESTION = "question"
    ADO_QUERY = "ado_query"
    RPG_QUERY = "rpg_query"
    GENERAL_RESPONSE = "general_response"


# Which indexes each route retrieves from; the no-retrieval route has none.
ROUTE_SOURCES: dict[Route, tuple[SourceKind, ...]] = {
    Route.QUESTION: (SourceKind.DOCUMENT_LIBRARY, SourceKind.WEBSITE),
    Route.ADO_QUERY: (SourceKind.WORK_TRACKER,),
    Route.RPG_QUERY: (SourceKind.CODE_REPOSITORY,),
    Route.GENERAL_RESPONSE: (),
}

ROUTE_DEFINITIONS = "\n".join(
    [
        "question: answered from the company document library and website",
        "ado_query: work items, builds and the development environment tracker",
        "rpg_query: source code files, functions, methods and procedures",
        "general_response: small talk or anything answerable without retrieval",
    ]
)


@dataclass(frozen=True)
class Task:
    task_id: int
    text: str
    route: Route


_CONTENT_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
_SENTENCE_SPLIT_RE = re.compile(r"(?<=[.!?])\s+")
# Top-level coordinating connectives that start a new intent.
_CONNECTIVE_RE = re.compile(r"\band (?:then|also)\b|(?<=;)\s*also\b", re.IGNORECASE)


def content_words(text: str) -> list[str]:
    return [t.lower() for t in _CONTENT_WORD_RE.findall(text)]


def split_query(query_text: str, max_tasks: int = DEFAULT_MAX_TASKS) -> list[str]:
    """Segment a query at sentence terminators and coordinating connectives.

    Segments with fewer than three content words merge into their left
    neighbour, and anything beyond max_tasks merges into the last segment,
    so no content word of the query is ever dropped.
    """
    if not query_text.strip():
        raise EmptyQueryError("query is empty")

    pieces: list[str] = []
    for sentence in _SENTENCE_SPLIT_RE.split(query_text):
        pos = 0
        for m in _CONNECTIVE_RE.finditer(sentence):
            if m.start() > pos:
                pieces.append(sentence[pos : m.start()])
            pos = m.start()
        pieces.append(sentence[pos:])

    segments: list[str] = []
    for piece in pieces:
        piece = piece.strip()
        if not piece:
            continue
        if segments and len(content_words(piece)) < MIN_SEGMENT_CONTENT_WORDS:
            segments[-1] = f"{segments[-1]} {piece}"
        else:
            segments.append(piece)
    if len(segments) > 1 and len(content_words(segments[0])) < MIN_SEGMENT_CONTENT_WORDS:
        segments[0] = f"{segments[0]} {segments[1]}"
        del segments[1]
    if len(segments) > max_tasks:
        segments[max_tasks - 1] = " ".join(segments[max_tasks - 1 :])
        del segments[max_tasks:]
    return segments


def history_digest(
    messages: list[SessionMessage],
    turns: int = HISTORY_DIGEST_TURNS,
    char_limit: int = HISTORY_DIGEST_CHARS,
) -> str:
    """Bounded summary of the recent session for inclusion in prompts."""
    recent = messages[-turns:]
    if not recent:
        return "(no prior conversation)"
    lines = []
    for m in recent:
        text = m.text if len(m.text) <= char_limit else m.text[:char_limit] + "..."
        lines.append(f"{m.role.value.capitalize()}: {text}")
    return "\n".join(lines)


class Router:
    """Stateless task planner; safe to share across concurrent queries."""

    def __init__(self, gateway: LlmGateway, prompts: PromptLibrary, max_tasks: int = DEFAULT_MAX_TASKS):
        self.gateway = gateway
        self.prompts = prompts
        self.max_tasks = max_tasks
        self.fallback_count = 0

    def route_task(self, sub_sentence: str, digest: str) -> Route:
        prompt = self.prompts.render(
            "routing",
            sub_sentence=sub_sentence,
            history_digest=digest,
            route_definitions=ROUTE_DEFINITIONS,
        )
        try:
            reply = self.gateway.complete(
                CompletionRequest(purpose=Purpose.ROUTING, prompt=prompt, max_output_chars=ROUTING_MAX_CHARS)
            ).text
        except GatewayError as exc:
            logger.warning("routing call failed, falling back to general_response: %s", exc)
            self.fallback_count += 1
            return Route.GENERAL_RESPONSE

        lowered = reply.lower()
        mentioned = [route for route in Route if route.value in lowered]
        if len(mentioned) == 1:
            return mentioned[0]
        logger.warning("unroutable reply %r, falling back to general_response", reply)
        self.fallback_count += 1
        return Route.GENERAL_RESPONSE

    def plan(self, query_text: str, history: list[SessionMessage]) -> list[Task]:
        digest = history_digest(history)
        segments = split_query(query_text, self.max_tasks)
        return [Task(task_id=i, text=seg, route=self.route_task(seg, digest)) for i, seg in enumerate(segments)]
