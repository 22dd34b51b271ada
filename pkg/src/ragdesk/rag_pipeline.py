"""The query pipeline: retrieve, augment, generate per task, then fuse.

Each routed task runs its own retrieval instance against the route's
indexes, context is reformatted (XML, or a JSON list for the code route),
an augmentation call extracts generation parameters, and a generation call
produces the task answer with chunk citations. Multiple task answers are
fused by one LLM call whose prompt carries only the generated texts, never
retrieved chunk text; a single task bypasses fusion entirely.

Every stage degrades instead of failing: missing indexes, gateway errors
and unparseable replies all produce an answer, flagged and logged.
"""

from __future__ import annotations

import json
import logging
import re
import uuid
from dataclasses import dataclass, field
from datetime import datetime
from typing import Callable, Optional
from xml.sax.saxutils import escape, quoteattr

from .embeddings import Embedder, is_empty_embedding
from .errors import EmptyQueryError, GatewayError, IndexNotFoundError, PipelineError
from .llm_gateway import CompletionRequest, LlmGateway, Purpose
from .prompts import PromptLibrary
from .router import ROUTE_SOURCES, Route, Router, Task, history_digest
from .session_store import InteractionRecord, SessionStore, utc_now
from .vector_index import DEFAULT_K, IndexStore, ScoredChunk

logger = logging.getLogger(__name__)

AUGMENT_MAX_CHARS = 600
GENERATION_MAX_CHARS = 4000
FUSION_MAX_CHARS = 8000

GENERATION_ERROR_TEXT = "Sorry, this part of the request could not be answered right now."

_CITATION_RE = re.compile(r"\[chunk:([^\[\]]+)\]")
_CORRELATION_NAMESPACE = uuid.UUID("8b1e63c4-52aa-4a6e-9e1d-2a4a54474b41")

_GENERATION_TEMPLATE = {
    Route.QUESTION: "question",
    Route.ADO_QUERY: "ado",
    Route.RPG_QUERY: "rpg",
    Route.GENERAL_RESPONSE: "general",
}


@dataclass(frozen=True)
class UserIdentity:
    user_id: str
    department: str = ""
    job_title: str = ""


@dataclass
class RetrievedContext:
    task_id: int
    scored_chunks: list[ScoredChunk]
    serialized: str
    degraded: Optional[str] = None


@dataclass(frozen=True)
class SourceRef:
    doc_id: str
    uri: str
    span: tuple[int, int]

    def to_dict(self) -> dict:
        return {"doc_id": self.doc_id, "uri": self.uri, "span": list(self.span)}


@dataclass
class TaskAnswer:
    task_id: int
    text: str
    sources: list[SourceRef] = field(default_factory=list)


@dataclass
class AssistantResponse:
    text: str
    sources: list[SourceRef]
    task_count: int
    timing: dict[str, float] = field(default_factory=dict)
    correlation_id: str = ""
    error: bool = False


def format_context(route: Route, scored_chunks: list[ScoredChunk]) -> str:
    """Serialize retrieved chunks canonically, in score order.

    XML for the document routes: <context> with one <chunk> per result whose
    attributes are chunk_id plus the metadata keys, sorted by attribute name.
    JSON array for the code route with the fixed field order
    chunk_id, file, object_names, span, text. No retrieval -> empty string.
    """
    if route is Route.GENERAL_RESPONSE:
        return ""
    if route is Route.RPG_QUERY:
        return json.dumps(
            [
                {
                    "chunk_id": sc.chunk.chunk_id,
                    "file": sc.chunk.metadata.get("file", ""),
                    "object_names": sc.chunk.metadata.get("object_names", ""),
                    "span": list(sc.chunk.span),
                    "text": sc.chunk.text,
                }
                for sc in scored_chunks
            ],
            ensure_ascii=False,
            separators=(",", ":"),
        )
    if not scored_chunks:
        return "<context/>"
    parts = ["<context>"]
    for sc in scored_chunks:
        attrs = {"chunk_id": sc.chunk.chunk_id, **sc.chunk.metadata}
        attr_text = " ".join(f"{k}={quoteattr(str(v))}" for k, v in sorted(attrs.items()))
        parts.append(f"<chunk {attr_text}>{escape(sc.chunk.text)}</chunk>")
    parts.append("</context>")
    return "".join(parts)


def _parse_augment_reply(reply: str) -> Optional[dict[str, str]]:
    params: dict[str, str] = {}
    for line in reply.splitlines():
        for label in ("FOCUS", "ENTITIES", "FORMAT"):
            if line.startswith(f"{label}:"):
                params[label.lower()] = line.split(":", 1)[1].strip()
    return params if "focus" in params else None


class RagPipeline:
    def __init__(
        self,
        index_store: IndexStore,
        embedder: Embedder,
        gateway: LlmGateway,
        router: Router,
        prompts: PromptLibrary,
        session_store: SessionStore,
        k: int = DEFAULT_K,
        clock: Callable[[], datetime] = utc_now,
    ):
        self.index_store = index_store
        self.embedder = embedder
        self.gateway = gateway
        self.router = router
        self.prompts = prompts
        self.session_store = session_store
        self.k = k
        self.clock = clock
        self.error_count = 0

    # -- stages --------------------------------------------------------------

    def retrieve(self, task: Task) -> RetrievedContext:
        """Top-k retrieval from the task's route indexes, merged by score."""
        if task.route is Route.GENERAL_RESPONSE:
            return RetrievedContext(task_id=task.task_id, scored_chunks=[], serialized="")
        degraded = None
        vector = self.embedder.embed_text(task.text)
        merged: list[ScoredChunk] = []
        if is_empty_embedding(vector):
            degraded = "empty-query-embedding"
        else:
            for kind in ROUTE_SOURCES[task.route]:
                try:
                    index = self.index_store.get(kind.value)
                except IndexNotFoundError:
                    degraded = f"missing-index:{kind.value}"
                    logger.warning("retrieval degraded for task %d: no %s index", task.task_id, kind.value)
                    continue
                merged.extend(index.search(vector, self.k))
            merged.sort(key=lambda sc: (-sc.score, sc.chunk.chunk_id))
            merged = merged[: self.k]
        return RetrievedContext(
            task_id=task.task_id,
            scored_chunks=merged,
            serialized=format_context(task.route, merged),
            degraded=degraded,
        )

    def augment(self, task: Task, context: RetrievedContext, digest: str) -> str:
        """Extract generation parameters and fill the route's prompt template."""
        params = None
        try:
            reply = self.gateway.complete(
                CompletionRequest(
                    purpose=Purpose.AUGMENTATION,
                    prompt=self.prompts.render("augment", task_text=task.text, history_digest=digest),
                    max_output_chars=AUGMENT_MAX_CHARS,
                )
            ).text
            params = _parse_augment_reply(reply)
        except GatewayError as exc:
            logger.warning("augmentation failed for task %d, using raw task text: %s", task.task_id, exc)
        if params is None:
            params = {"focus": task.text, "entities": "", "format": ""}
        return self.prompts.render(
            _GENERATION_TEMPLATE[task.route],
            task_text=task.text,
            focus=params.get("focus", task.text),
            entities=params.get("entities", ""),
            format=params.get("format", ""),
            context=context.serialized,
            history_digest=digest,
        )

    def generate(self, task: Task, context: RetrievedContext, instructions: str) -> TaskAnswer:
        """One generation call; citation markers resolve against this task's
        retrieved chunks only, and markers that match nothing are dropped."""
        try:
            reply = self.gateway.complete(
                CompletionRequest(
                    purpose=Purpose.GENERATION, prompt=instructions, max_output_chars=GENERATION_MAX_CHARS
                )
            ).text
        except GatewayError as exc:
            logger.error("generation failed for task %d: %s", task.task_id, exc)
            self.error_count += 1
            return TaskAnswer(task_id=task.task_id, text=GENERATION_ERROR_TEXT, sources=[])

        by_id = {sc.chunk.chunk_id: sc.chunk for sc in context.scored_chunks}
        sources: list[SourceRef] = []
        seen: set[tuple[str, tuple[int, int]]] = set()
        for marker in _CITATION_RE.findall(reply):
            chunk = by_id.get(marker)
            if chunk is None:
                logger.warning("task %d cited unknown chunk %r; citation dropped", task.task_id, marker)
                continue
            ref = SourceRef(
                doc_id=chunk.doc_id,
                uri=chunk.metadata.get("uri", chunk.metadata.get("file", "")),
                span=tuple(chunk.span),
            )
            key = (ref.doc_id, ref.span)
            if key not in seen:
                seen.add(key)
                sources.append(ref)
        return TaskAnswer(task_id=task.task_id, text=reply, sources=sources)

    def fuse(self, task_answers: list[TaskAnswer]) -> AssistantResponse:
        """Combine task answers; the fusion prompt sees generated texts only."""
        if not task_answers:
            raise ValueError("fuse needs at least one task answer")
        sources: list[SourceRef] = []
        seen: set[tuple[str, tuple[int, int]]] = set()
        for answer in task_answers:
            for ref in answer.sources:
                key = (ref.doc_id, ref.span)
                if key not in seen:
                    seen.add(key)
                    sources.append(ref)

        if len(task_answers) == 1:
            text = task_answers[0].text
        else:
            joined = "\n\n".join(f"[Task {a.task_id + 1}]\n{a.text}" for a in task_answers)
            try:
                text = self.gateway.complete(
                    CompletionRequest(
                        purpose=Purpose.FUSION,
                        prompt=self.prompts.render("fusion", answers=joined),
                        max_output_chars=FUSION_MAX_CHARS,
                    )
                ).text
            except GatewayError as exc:
                logger.error("fusion failed, concatenating task answers: %s", exc)
                text = joined
        return AssistantResponse(text=text, sources=sources, task_count=len(task_answers))

    # -- orchestration ---------------------------------------------------------

    def answer(self, identity: UserIdentity, query_text: str) -> AssistantResponse:
        """End to end: history -> plan -> per-task RAG -> fuse -> log.

        Stage failures degrade; anything unhandled is logged as an errored
        interaction and re-raised as PipelineError with the correlation id.
        """
        now = self.clock()
        correlation_id = str(
            uuid.uuid5(_CORRELATION_NAMESPACE, f"{identity.user_id}|{query_text}|{now.isoformat()}")
        )
        timing: dict[str, float] = {}
        try:
            history = self.session_store.history(identity.user_id, now)
            digest = history_digest(history)

            t = self.clock()
            tasks = self.router.plan(query_text, history)
            timing["route_s"] = (self.clock() - t).total_seconds()

            answers = []
            t = self.clock()
            for task in tasks:
                context = self.retrieve(task)
                instructions = self.augment(task, context, digest)
                answers.append(self.generate(task, context, instructions))
            timing["tasks_s"] = (self.clock() - t).total_seconds()

            t = self.clock()
            response = self.fuse(answers)
            timing["fuse_s"] = (self.clock() - t).total_seconds()

            timing["total_s"] = (self.clock() - now).total_seconds()
            response.timing = timing
            response.correlation_id = correlation_id

            # The correlation id is deterministic for identical requests, so
            # the log key must be its own unique id.
            record = InteractionRecord(
                interaction_id=uuid.uuid4().hex,
                timestamp=now,
                user_id=identity.user_id,
                department=identity.department,
                job_title=identity.job_title,
                query_text=query_text,
                question_type=tasks[0].route.value,
                response_text=response.text,
                latency_seconds=timing["total_s"],
                error_flag=False,
            )
            self.session_store.append(identity.user_id, query_text, response.text, now, record)
            return response
        except EmptyQueryError:
            raise
        except Exception as exc:
            logger.exception("pipeline failure (correlation_id=%s)", correlation_id)
            try:
                self.session_store.log_interaction(
                    InteractionRecord(
                        interaction_id=uuid.uuid4().hex,
                        timestamp=now,
                        user_id=identity.user_id,
                        department=identity.department,
                        job_title=identity.job_title,
                        query_text=query_text,
                        question_type=Route.GENERAL_RESPONSE.value,
                        response_text=f"internal error: {exc}",
                        latency_seconds=max((self.clock() - now).total_seconds(), 0.0),
                        error_flag=True,
                    )
                )
            except Exception:
                logger.exception("could not log errored interaction %s", correlation_id)
            raise PipelineError(correlation_id, exc) from exc
