"""Single chokepoint for LLM completions.

Every completion in the system flows through LlmGateway, tagged with the
pipeline call site that issued it. The stub provider answers from an ordered
script and is the test-time workhorse; the remote provider speaks a minimal
JSON protocol with retry/timeout policy. The gateway captures every
(request, result) pair in call order for tests and record keeping.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Optional, Protocol

import httpx

from .errors import GatewayTimeoutError, ProviderError, ScriptedMissError

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_S = 60.0
MAX_RETRIES = 2
BACKOFF_BASE_S = 0.25

ENDPOINT_ENV = "LLM_ENDPOINT"
API_KEY_ENV = "LLM_API_KEY"


class Purpose(str, Enum):
    ROUTING = "routing"
    CODE_DESCRIPTION = "code_description"
    AUGMENTATION = "augmentation"
    GENERATION = "generation"
    FUSION = "fusion"


@dataclass(frozen=True)
class CompletionRequest:
    purpose: Purpose
    prompt: str
    max_output_chars: int = 4000
    temperature_hint: float = 0.0

    def __post_init__(self) -> None:
        if self.max_output_chars <= 0:
            raise ValueError("max_output_chars must be positive")
        if self.temperature_hint < 0:
            raise ValueError("temperature_hint must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    latency_ms: int
    provider: str


@dataclass(frozen=True)
class ScriptEntry:
    purpose: Purpose
    match_substring: str
    reply: str


def load_stub_script(path: Path) -> list[ScriptEntry]:
    """Read a stub script file: a JSON array of {purpose, match_substring, reply}."""
    entries = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ValueError(f"{path}: stub script must be a JSON array")
    return [
        ScriptEntry(
            purpose=Purpose(e["purpose"]),
            match_substring=e["match_substring"],
            reply=e["reply"],
        )
        for e in entries
    ]


class CompletionProvider(Protocol):
    name: str

    def complete(self, request: CompletionRequest) -> str: ...


class StubProvider:
    """Deterministic scripted provider: first matching entry wins.

    An unmatched request is an error by design — test scripts must be
    exhaustive, silence would hide a missing scenario.
    """

    name = "stub"

    def __init__(self, script: list[ScriptEntry]):
        self._script = tuple(script)

    def complete(self, request: CompletionRequest) -> str:
        for entry in self._script:
            if entry.purpose == request.purpose and entry.match_substring in request.prompt:
                return entry.reply
        raise ScriptedMissError(request.purpose.value, request.prompt[:80])


class RemoteProvider:
    """JSON-over-HTTP provider: POST {prompt, max_output_chars} -> {text}.

    Retries up to MAX_RETRIES times with exponential backoff, but only on
    timeouts and 5xx responses; 4xx means the request itself is wrong.
    """

    name = "remote"

    def __init__(
        self,
        endpoint: Optional[str] = None,
        api_key: Optional[str] = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
        transport: Optional[httpx.BaseTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.endpoint = endpoint or os.environ.get(ENDPOINT_ENV, "")
        if not self.endpoint:
            raise ValueError(f"remote provider needs an endpoint ({ENDPOINT_ENV} unset)")
        api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self._headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = httpx.Client(timeout=timeout_s, transport=transport)
        self._sleep = sleep

    def complete(self, request: CompletionRequest) -> str:
        last_error: Exception = ProviderError(0, "no attempt made")
        for attempt in range(MAX_RETRIES + 1):
            if attempt:
                self._sleep(BACKOFF_BASE_S * (2 ** (attempt - 1)))
            try:
                response = self._client.post(
                    self.endpoint,
                    json={"prompt": request.prompt, "max_output_chars": request.max_output_chars},
                    headers=self._headers,
                )
            except httpx.TimeoutException as exc:
                last_error = GatewayTimeoutError(f"no reply within deadline: {exc}")
                continue
            if response.status_code >= 500:
                last_error = ProviderError(response.status_code, response.text[:200])
                continue
            if response.status_code >= 300:
                raise ProviderError(response.status_code, response.text[:200])
            return response.json()["text"]
        raise last_error


def truncate_reply(text: str, max_output_chars: int) -> str:
    """Cut an over-long reply at the last whitespace before the limit."""
    if len(text) <= max_output_chars:
        return text
    head = text[:max_output_chars]
    cut = max((head.rfind(ws) for ws in (" ", "\n", "\t")), default=-1)
    return head[:cut] if cut > 0 else head


class LlmGateway:
    """Applies truncation and capture around whichever provider is configured."""

    def __init__(self, provider: CompletionProvider, capture: bool = True):
        self.provider = provider
        self._capture_enabled = capture
        self._log: list[tuple[CompletionRequest, CompletionResult]] = []
        self._lock = threading.Lock()

    def complete(self, request: CompletionRequest) -> CompletionResult:
        started = time.monotonic()
        text = self.provider.complete(request)
        latency_ms = int((time.monotonic() - started) * 1000)
        result = CompletionResult(
            text=truncate_reply(text, request.max_output_chars),
            latency_ms=latency_ms,
            provider=self.provider.name,
        )
        if self._capture_enabled:
            with self._lock:
                self._log.append((request, result))
        return result

    def capture_log(self) -> list[tuple[CompletionRequest, CompletionResult]]:
        with self._lock:
            return list(self._log)

    def clear_capture(self) -> None:
        with self._lock:
            self._log.clear()
