import os

import pytest

from ragdesk.embeddings import HashedBagEmbedder
from ragdesk.errors import RefreshInFlightError
from ragdesk.ingest import Ingestor
from ragdesk.llm_gateway import LlmGateway, Purpose, ScriptEntry, StubProvider
from ragdesk.sources import SourceKind, SourceSpec
from ragdesk.vector_index import IndexStore

DESC_REPLY = (
    "PURPOSE: fixture code.\nSTRUCTURE: procs.\nKEY_PROCEDURES: \nEXTERNAL_INTERACTIONS: \n"
)


def description_gateway():
    return LlmGateway(StubProvider([ScriptEntry(Purpose.CODE_DESCRIPTION, "", DESC_REPLY)]))


@pytest.fixture
def corpus(tmp_path):
    docs = tmp_path / "docs"
    docs.mkdir()
    (docs / "a.md").write_text("# Alpha\n\nFirst document body text.\n")
    (docs / "b.md").write_text("# Beta\n\nSecond document body text.\n")
    (docs / "c.md").write_text("# Gamma\n\nThird document body text.\n")
    return tmp_path


def make_ingestor(tmp_path, sources=None, gateway=None):
    store = IndexStore(tmp_path / "data")
    sources = sources or [
        SourceSpec(name="docs", kind=SourceKind.DOCUMENT_LIBRARY, root=tmp_path / "docs")
    ]
    return Ingestor(sources=sources, index_store=store, embedder=HashedBagEmbedder(dim=64), gateway=gateway), store


def test_first_refresh_ingests_everything(corpus):
    ingestor, store = make_ingestor(corpus)
    report = ingestor.refresh()
    assert report.fetched == 3
    assert report.changed == 3
    assert report.upserted == len(store.get("document_library"))
    assert report.deleted == 0


def test_second_refresh_is_a_noop(corpus):
    ingestor, _ = make_ingestor(corpus)
    ingestor.refresh()
    report = ingestor.refresh()
    assert report.fetched == 3
    assert report.changed == 0
    assert report.upserted == 0
    assert report.deleted == 0


def test_refresh_is_idempotent_on_index_state(corpus):
    ingestor, store = make_ingestor(corpus)
    ingestor.refresh()
    ids_before = sorted(c for c in store.get("document_library")._records)
    ingestor.refresh()
    ids_after = sorted(c for c in store.get("document_library")._records)
    assert ids_before == ids_after


def test_modifying_one_doc_touches_only_its_chunks(corpus):
    ingestor, store = make_ingestor(corpus)
    ingestor.refresh()
    index = store.get("document_library")
    before = {cid: c.doc_id for cid, c in index._records.items()}

    target = corpus / "docs" / "b.md"
    target.write_text("# Beta\n\nCompletely rewritten body for the second document.\n")
    os.utime(target, (target.stat().st_atime, target.stat().st_mtime + 10))

    report = ingestor.refresh()
    assert report.changed == 1
    after = {cid: c.doc_id for cid, c in index._records.items()}

    unchanged_before = {cid for cid, doc in before.items() if doc != "b.md"}
    unchanged_after = {cid for cid, doc in after.items() if doc != "b.md"}
    assert unchanged_before == unchanged_after
    assert {cid for cid, doc in after.items() if doc == "b.md"}.isdisjoint(
        {cid for cid, doc in before.items() if doc == "b.md"}
    )


def test_content_change_without_mtime_change_is_detected(corpus):
    # Timestamps alone are unreliable; the fingerprint pairs them with a hash.
    ingestor, _ = make_ingestor(corpus)
    ingestor.refresh()
    target = corpus / "docs" / "a.md"
    stat = target.stat()
    target.write_text("# Alpha\n\nTampered without touching the clock.\n")
    os.utime(target, (stat.st_atime, stat.st_mtime))
    report = ingestor.refresh()
    assert report.changed == 1


def test_deleted_doc_chunks_removed(corpus):
    ingestor, store = make_ingestor(corpus)
    ingestor.refresh()
    index = store.get("document_library")
    doomed = index.doc_count("c.md")
    assert doomed > 0
    (corpus / "docs" / "c.md").unlink()
    report = ingestor.refresh()
    assert report.deleted == doomed
    assert index.doc_count("c.md") == 0


def test_dry_run_writes_nothing(corpus):
    ingestor, store = make_ingestor(corpus)
    report = ingestor.refresh(dry_run=True)
    assert report.upserted > 0
    assert len(store.get("document_library")) == 0
    # manifest untouched, so a later real run still sees all docs as new
    real = ingestor.refresh()
    assert real.changed == 3


def test_full_reingests_unchanged_docs(corpus):
    ingestor, _ = make_ingestor(corpus)
    ingestor.refresh()
    report = ingestor.refresh(full=True)
    assert report.changed == 3
    assert report.upserted > 0


def test_failed_source_skipped_others_proceed(corpus):
    sources = [
        SourceSpec(name="docs", kind=SourceKind.DOCUMENT_LIBRARY, root=corpus / "docs"),
        SourceSpec(name="ghost", kind=SourceKind.WEBSITE, root=corpus / "missing"),
    ]
    ingestor, store = make_ingestor(corpus, sources=sources)
    report = ingestor.refresh()
    by_name = {s.source: s for s in report.sources}
    assert by_name["ghost"].failed
    assert "missing" in by_name["ghost"].error
    assert not by_name["docs"].failed
    assert len(store.get("document_library")) > 0


def test_code_source_indexes_objects_and_description(tmp_path):
    repo = tmp_path / "repo"
    repo.mkdir()
    (repo / "prog.rpgle").write_text(
        "**free\ndcl-proc ONE;\n  return;\nend-proc;\n\ndcl-proc TWO;\n  return;\nend-proc;\n"
    )
    sources = [SourceSpec(name="repo", kind=SourceKind.CODE_REPOSITORY, root=repo)]
    ingestor, store = make_ingestor(tmp_path, sources=sources, gateway=description_gateway())
    ingestor.refresh()
    index = store.get("code_repository")
    chunks = list(index._records.values())
    object_chunks = [c for c in chunks if not c.text.startswith("Code file ")]
    description_chunks = [c for c in chunks if c.text.startswith("Code file ")]
    assert len(object_chunks) == 2
    assert len(description_chunks) == 1
    assert all(isinstance(c.span[0], int) and c.span[0] >= 1 for c in chunks)


def test_description_failure_still_indexes_code(tmp_path):
    repo = tmp_path / "repo"
    repo.mkdir()
    (repo / "prog.rpgle").write_text("**free\ndcl-proc ONE;\n  return;\nend-proc;\n")
    sources = [SourceSpec(name="repo", kind=SourceKind.CODE_REPOSITORY, root=repo)]
    gateway = LlmGateway(StubProvider([]))  # description request will miss
    ingestor, store = make_ingestor(tmp_path, sources=sources, gateway=gateway)
    report = ingestor.refresh()
    index = store.get("code_repository")
    assert report.upserted == 1
    assert len(index) == 1
    assert not any(c.text.startswith("Code file ") for c in index._records.values())


def test_second_trigger_while_running_is_coalesced(corpus):
    ingestor, _ = make_ingestor(corpus)
    ingestor._run_lock.acquire()
    try:
        with pytest.raises(RefreshInFlightError):
            ingestor.refresh()
    finally:
        ingestor._run_lock.release()
    assert ingestor.refresh().fetched == 3


def test_default_interval_is_one_hour():
    from ragdesk.ingest import DEFAULT_REFRESH_INTERVAL_S

    assert DEFAULT_REFRESH_INTERVAL_S == 3600
    assert SourceSpec.__dataclass_fields__["refresh_interval_s"].default == 3600
