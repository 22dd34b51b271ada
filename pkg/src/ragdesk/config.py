"""Service configuration: one declarative YAML file drives everything.

Relative paths resolve against the config file's directory so a checked-in
config works from any working directory. Referenced paths are validated at
load time; a missing source root or prompt directory fails fast with a
message naming the path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import yaml

from .errors import ConfigError
from .monitoring import DEFAULT_LEAD_THRESHOLD, DEFAULT_OCCASIONAL_THRESHOLD
from .sources import SourceKind, SourceSpec

DEFAULT_LISTEN = "127.0.0.1:8080"


@dataclass
class EmbedderConfig:
    provider: str = "reference"  # reference | remote
    dim: int = 256
    endpoint: str = ""
    api_key_env: str = ""


@dataclass
class LlmConfig:
    provider: str = "stub"  # stub | remote
    script_path: Optional[Path] = None
    timeout_s: float = 60.0


@dataclass
class AdopterThresholds:
    lead: int = DEFAULT_LEAD_THRESHOLD
    occasional: int = DEFAULT_OCCASIONAL_THRESHOLD


@dataclass
class ServiceConfig:
    data_dir: Path
    sources: list[SourceSpec]
    embedder: EmbedderConfig = field(default_factory=EmbedderConfig)
    llm: LlmConfig = field(default_factory=LlmConfig)
    prompt_dir: Optional[Path] = None
    ui_dir: Optional[Path] = None
    k: int = 10
    session_window_s: int = 3600
    refresh_interval_s: int = 3600
    listen: str = DEFAULT_LISTEN
    adopters: AdopterThresholds = field(default_factory=AdopterThresholds)

    @property
    def host(self) -> str:
        return self.listen.rsplit(":", 1)[0]

    @property
    def port(self) -> int:
        return int(self.listen.rsplit(":", 1)[1])

    def interaction_log_path(self) -> Path:
        return self.data_dir / "interactions.jsonl"


def _resolve(base: Path, value: str) -> Path:
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def load_config(path: Path) -> ServiceConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: invalid YAML{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    base = path.parent

    if "data_dir" not in raw:
        raise ConfigError(f"{path}: missing required key 'data_dir'")
    data_dir = _resolve(base, str(raw["data_dir"]))
    data_dir.mkdir(parents=True, exist_ok=True)

    sources_raw = raw.get("sources")
    if not sources_raw:
        raise ConfigError(f"{path}: at least one source must be configured under 'sources'")
    sources: list[SourceSpec] = []
    kinds_seen: set[SourceKind] = set()
    for i, entry in enumerate(sources_raw):
        try:
            kind = SourceKind(entry["kind"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{path}: sources[{i}]: bad or missing 'kind': {exc}") from exc
        if kind in kinds_seen:
            raise ConfigError(f"{path}: sources[{i}]: duplicate source kind {kind.value!r} (one index per kind)")
        kinds_seen.add(kind)
        if "root" not in entry:
            raise ConfigError(f"{path}: sources[{i}]: missing 'root'")
        root = _resolve(base, str(entry["root"]))
        if not root.is_dir():
            raise ConfigError(f"{path}: sources[{i}]: root does not exist: {root}")
        sources.append(
            SourceSpec(
                name=str(entry.get("name", kind.value)),
                kind=kind,
                root=root,
                allowlist=tuple(entry.get("allowlist", ())),
                refresh_interval_s=int(entry.get("refresh_interval_s", raw.get("refresh_interval_s", 3600))),
            )
        )

    embed_raw = raw.get("embedder", {})
    embedder = EmbedderConfig(
        provider=str(embed_raw.get("provider", "reference")),
        dim=int(embed_raw.get("dim", 256)),
        endpoint=str(embed_raw.get("endpoint", "")),
        api_key_env=str(embed_raw.get("api_key_env", "")),
    )
    if embedder.provider not in ("reference", "remote"):
        raise ConfigError(f"{path}: embedder.provider must be 'reference' or 'remote'")
    if embedder.provider == "remote" and not embedder.endpoint:
        raise ConfigError(f"{path}: embedder.provider 'remote' needs embedder.endpoint")
    if embedder.dim <= 0:
        raise ConfigError(f"{path}: embedder.dim must be positive")

    llm_raw = raw.get("llm", {})
    llm = LlmConfig(
        provider=str(llm_raw.get("provider", "stub")),
        script_path=_resolve(base, str(llm_raw["script_path"])) if "script_path" in llm_raw else None,
        timeout_s=float(llm_raw.get("timeout_s", 60.0)),
    )
    if llm.provider not in ("stub", "remote"):
        raise ConfigError(f"{path}: llm.provider must be 'stub' or 'remote'")
    if llm.provider == "stub":
        if llm.script_path is None:
            raise ConfigError(f"{path}: llm.provider 'stub' needs llm.script_path")
        if not llm.script_path.is_file():
            raise ConfigError(f"{path}: llm.script_path does not exist: {llm.script_path}")

    prompt_dir = _resolve(base, str(raw["prompt_dir"])) if raw.get("prompt_dir") else None
    if prompt_dir is not None and not prompt_dir.is_dir():
        raise ConfigError(f"{path}: prompt_dir does not exist: {prompt_dir}")

    ui_dir = _resolve(base, str(raw["ui_dir"])) if raw.get("ui_dir") else None

    adopters_raw = raw.get("adopters", {})
    adopters = AdopterThresholds(
        lead=int(adopters_raw.get("lead_threshold", DEFAULT_LEAD_THRESHOLD)),
        occasional=int(adopters_raw.get("occasional_threshold", DEFAULT_OCCASIONAL_THRESHOLD)),
    )

    return ServiceConfig(
        data_dir=data_dir,
        sources=sources,
        embedder=embedder,
        llm=llm,
        prompt_dir=prompt_dir,
        ui_dir=ui_dir,
        k=int(raw.get("k", 10)),
        session_window_s=int(raw.get("session_window_s", 3600)),
        refresh_interval_s=int(raw.get("refresh_interval_s", 3600)),
        listen=str(raw.get("listen", DEFAULT_LISTEN)),
        adopters=adopters,
    )
