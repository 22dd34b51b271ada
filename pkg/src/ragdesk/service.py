"""HTTP service tying all components together — the only process boundary.

Responses that must match the CLI byte-for-byte are serialized through one
canonical JSON writer instead of the framework default. Identity comes from
request body fields in dev mode; the interaction log is written for every
chat, including failed ones.
"""

from __future__ import annotations

import contextlib
import json
import logging
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .config import ServiceConfig
from .embeddings import HashedBagEmbedder, RemoteEmbedder
from .errors import EmptyQueryError, PipelineError, RagDeskError, RefreshInFlightError
from .ingest import Ingestor
from .llm_gateway import LlmGateway, RemoteProvider, StubProvider, load_stub_script
from .monitoring import Dimension, MonitoringService
from .prompts import PromptLibrary
from .rag_pipeline import RagPipeline, UserIdentity
from .router import Router
from .session_store import InteractionLog, SessionStore, utc_now
from .vector_index import IndexStore

logger = logging.getLogger(__name__)


def canonical_json(payload: object) -> str:
    """The one serialization used by both the HTTP API and the CLI."""
    return json.dumps(payload, ensure_ascii=False, separators=(",", ":"))


def _json_response(payload: object, status_code: int = 200) -> Response:
    return Response(content=canonical_json(payload), status_code=status_code, media_type="application/json")


class ChatRequest(BaseModel):
    user_id: str
    text: str
    department: str = ""
    job_title: str = ""


class ServiceState:
    """Every long-lived component, wired once from config."""

    def __init__(self, config: ServiceConfig, clock: Callable[[], datetime] = utc_now):
        self.config = config
        self.clock = clock

        if config.embedder.provider == "remote":
            api_key = os.environ.get(config.embedder.api_key_env, "") if config.embedder.api_key_env else ""
            self.embedder = RemoteEmbedder(config.embedder.endpoint, dim=config.embedder.dim, api_key=api_key)
        else:
            self.embedder = HashedBagEmbedder(dim=config.embedder.dim)

        if config.llm.provider == "stub":
            provider = StubProvider(load_stub_script(config.llm.script_path))
        else:
            provider = RemoteProvider(timeout_s=config.llm.timeout_s)
        self.gateway = LlmGateway(provider)

        self.index_store = IndexStore(config.data_dir)
        self.prompts = PromptLibrary.load(config.prompt_dir)
        self.interaction_log = InteractionLog(config.interaction_log_path())
        self.session_store = SessionStore(self.interaction_log, window_s=config.session_window_s)
        self.session_store.replay(self.clock())
        self.router = Router(self.gateway, self.prompts)
        self.pipeline = RagPipeline(
            index_store=self.index_store,
            embedder=self.embedder,
            gateway=self.gateway,
            router=self.router,
            prompts=self.prompts,
            session_store=self.session_store,
            k=config.k,
            clock=clock,
        )
        self.ingestor = Ingestor(
            sources=config.sources,
            index_store=self.index_store,
            embedder=self.embedder,
            gateway=self.gateway,
            clock=clock,
        )
        self.monitoring = MonitoringService(
            config.interaction_log_path(),
            lead_threshold=config.adopters.lead,
            occasional_threshold=config.adopters.occasional,
        )
        self.last_refresh: Optional[dict] = None
        self._stop = threading.Event()
        self._scheduler: Optional[threading.Thread] = None

    # -- background refresh ---------------------------------------------------

    def run_refresh(self, **kwargs) -> dict:
        report = self.ingestor.refresh(**kwargs).to_dict()
        if not kwargs.get("dry_run"):
            self.last_refresh = report
        return report

    def _scheduler_loop(self) -> None:
        interval = self.config.refresh_interval_s
        while not self._stop.wait(interval):
            try:
                self.run_refresh()
            except RefreshInFlightError:
                logger.info("scheduled refresh coalesced: one already running")
            except Exception:
                logger.exception("scheduled refresh failed")

    def start_scheduler(self) -> None:
        if self._scheduler is None:
            self._scheduler = threading.Thread(target=self._scheduler_loop, name="refresh-scheduler", daemon=True)
            self._scheduler.start()

    def stop_scheduler(self) -> None:
        self._stop.set()


def _parse_range(from_: Optional[str], to: Optional[str]) -> tuple[datetime, datetime]:
    def parse(value: Optional[str], fallback: datetime) -> datetime:
        if not value:
            return fallback
        try:
            stamp = datetime.fromisoformat(value.replace("Z", "+00:00"))
        except ValueError as exc:
            raise ValueError(f"bad datetime {value!r}: {exc}") from exc
        return stamp if stamp.tzinfo else stamp.replace(tzinfo=timezone.utc)

    start = parse(from_, datetime(1970, 1, 1, tzinfo=timezone.utc))
    end = parse(to, datetime(9999, 12, 31, tzinfo=timezone.utc))
    return start, end


def create_app(state: ServiceState, with_scheduler: bool = True) -> FastAPI:
    @contextlib.asynccontextmanager
    async def lifespan(_app: FastAPI):
        if with_scheduler:
            state.start_scheduler()
        yield
        state.stop_scheduler()

    app = FastAPI(title="ragdesk", lifespan=lifespan)
    app.state.service = state

    @app.exception_handler(RequestValidationError)
    async def malformed_body(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": "malformed request body"})

    @app.post("/chat")
    def chat(body: ChatRequest) -> Response:
        if not body.text.strip():
            return _json_response({"detail": "text must be non-empty"}, status_code=422)
        identity = UserIdentity(user_id=body.user_id, department=body.department, job_title=body.job_title)
        try:
            answer = state.pipeline.answer(identity, body.text)
        except EmptyQueryError:
            return _json_response({"detail": "text must be non-empty"}, status_code=422)
        except PipelineError as exc:
            return _json_response(
                {"detail": "internal error", "correlation_id": exc.correlation_id}, status_code=500
            )
        return _json_response(
            {
                "response_text": answer.text,
                "sources": [s.to_dict() for s in answer.sources],
                "task_count": answer.task_count,
                "latency_s": answer.timing.get("total_s", 0.0),
                "correlation_id": answer.correlation_id,
            }
        )

    @app.post("/ingest/refresh")
    def ingest_refresh() -> Response:
        try:
            report = state.run_refresh()
        except RefreshInFlightError as exc:
            return _json_response({"detail": "refresh already running", "in_flight_job_id": exc.job_id}, 409)
        return _json_response(report)

    @app.get("/health")
    def health() -> Response:
        return _json_response(
            {
                "status": "ok",
                "index_counts": state.index_store.counts(),
                "last_refresh": (state.last_refresh or {}).get("started_at"),
            }
        )

    @app.get("/metrics/usage")
    def metrics_usage(request: Request) -> Response:
        try:
            start, end = _parse_range(request.query_params.get("from"), request.query_params.get("to"))
        except ValueError as exc:
            return _json_response({"detail": str(exc)}, status_code=400)
        return _json_response(state.monitoring.usage(start, end).to_dict())

    @app.get("/metrics/breakdown")
    def metrics_breakdown(request: Request) -> Response:
        raw_dimension = request.query_params.get("dimension", "")
        try:
            dimension = Dimension(raw_dimension)
        except ValueError:
            valid = ", ".join(d.value for d in Dimension)
            return _json_response({"detail": f"dimension must be one of: {valid}"}, status_code=400)
        try:
            start, end = _parse_range(request.query_params.get("from"), request.query_params.get("to"))
        except ValueError as exc:
            return _json_response({"detail": str(exc)}, status_code=400)
        return _json_response(state.monitoring.breakdown(start, end, dimension).to_dict())

    @app.get("/metrics/adopters")
    def metrics_adopters(request: Request) -> Response:
        try:
            start, end = _parse_range(request.query_params.get("from"), request.query_params.get("to"))
        except ValueError as exc:
            return _json_response({"detail": str(exc)}, status_code=400)
        rows = state.monitoring.adopters(start, end)
        return _json_response({"rows": [r.to_dict() for r in rows]})

    ui_dir = state.config.ui_dir
    if ui_dir is not None and ui_dir.is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
