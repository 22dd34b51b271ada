"""Command line interface: serve, ingest, index tools, log tail, metrics.

Every metric reachable over HTTP prints byte-identically here — both
surfaces go through the same canonical JSON writer.
"""

from __future__ import annotations

import logging
import sys
import time
from pathlib import Path

import click

from .config import ServiceConfig, load_config
from .errors import ConfigError, IndexNotFoundError, RagDeskError
from .monitoring import MonitoringService
from .service import ServiceState, canonical_json, create_app
from .vector_index import VectorIndex

logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s")


def _load(config_path: str) -> ServiceConfig:
    try:
        return load_config(Path(config_path))
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(2)


@click.group()
def main() -> None:
    """Enterprise RAG assistant service."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(), help="Path to the YAML config file.")
def serve(config_path: str) -> None:
    """Run the HTTP service (blocks until interrupted)."""
    import uvicorn

    config = _load(config_path)
    state = ServiceState(config)
    app = create_app(state)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("--source", "source_name", default=None, help="Refresh only the named source.")
@click.option("--once", is_flag=True, help="Run a single refresh pass and exit.")
@click.option("--dry-run", is_flag=True, help="Print the report without writing indexes.")
@click.option("--full", is_flag=True, help="Re-ingest everything, ignoring change detection.")
def ingest(config_path: str, source_name: str | None, once: bool, dry_run: bool, full: bool) -> None:
    """Refresh the vector indexes from the configured sources."""
    config = _load(config_path)
    state = ServiceState(config)
    while True:
        report = state.run_refresh(only_source=source_name, dry_run=dry_run, full=full)
        click.echo(canonical_json(report))
        if once or dry_run:
            break
        time.sleep(config.refresh_interval_s)


@main.group()
def index() -> None:
    """Inspect and probe the vector indexes."""


@index.command()
@click.argument("name")
@click.option("--config", "config_path", required=True, type=click.Path())
def inspect(name: str, config_path: str) -> None:
    """Print the index header and chunk count."""
    config = _load(config_path)
    path = config.data_dir / f"{name}.idx"
    try:
        idx = VectorIndex.load(path)
    except RagDeskError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    header = {
        "name": idx.descriptor.name,
        "dim": idx.descriptor.dim,
        "field_schema": list(idx.descriptor.field_schema),
        "count": len(idx),
    }
    click.echo(canonical_json(header))


@index.command()
@click.argument("name")
@click.option("--text", required=True, help="Query text for an ad-hoc search.")
@click.option("--config", "config_path", required=True, type=click.Path())
@click.option("-k", default=10, show_default=True)
def probe(name: str, text: str, config_path: str, k: int) -> None:
    """Embed the text and print the top-k hits from one index."""
    config = _load(config_path)
    state = ServiceState(config)
    try:
        idx = state.index_store.get(name)
    except IndexNotFoundError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    hits = idx.search(state.embedder.embed_text(text), k=k)
    for hit in hits:
        click.echo(canonical_json({"chunk_id": hit.chunk.chunk_id, "score": round(hit.score, 6),
                                   "metadata": hit.chunk.metadata}))


@main.group()
def log() -> None:
    """Interaction log tools."""


@log.command()
@click.option("-n", "count", default=20, show_default=True)
@click.option("--config", "config_path", required=True, type=click.Path())
def tail(count: int, config_path: str) -> None:
    """Print the last N interaction log lines."""
    config = _load(config_path)
    path = config.interaction_log_path()
    if path.is_file():
        for line in path.read_text(encoding="utf-8").splitlines()[-count:]:
            click.echo(line)


@main.group()
def metrics() -> None:
    """Usage metrics over the interaction log."""


@metrics.command()
@click.option("--from", "from_", default=None, help="Range start (ISO 8601, default: beginning of time).")
@click.option("--to", default=None, help="Range end (ISO 8601, default: end of time).")
@click.option("--config", "config_path", required=True, type=click.Path())
def report(from_: str | None, to: str | None, config_path: str) -> None:
    """Print UsageMetrics JSON for the range, same bytes as GET /metrics/usage."""
    from .service import _parse_range

    config = _load(config_path)
    monitoring = MonitoringService(
        config.interaction_log_path(),
        lead_threshold=config.adopters.lead,
        occasional_threshold=config.adopters.occasional,
    )
    try:
        start, end = _parse_range(from_, to)
    except ValueError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(canonical_json(monitoring.usage(start, end).to_dict()))


if __name__ == "__main__":
    main()
