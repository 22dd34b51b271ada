from pathlib import Path

import pytest

from ragdesk.errors import SourceUnavailableError
from ragdesk.sources import SourceKind, SourceSpec, fetch_source


def spec_for(root: Path, kind=SourceKind.DOCUMENT_LIBRARY, allowlist=(".md",)):
    return SourceSpec(name="t", kind=kind, root=root, allowlist=allowlist)


def test_empty_root_yields_empty_list(tmp_path):
    assert fetch_source(spec_for(tmp_path)) == []


def test_three_markdown_files_yield_three_distinct_docs(tmp_path):
    for name in ("a.md", "b.md", "sub/c.md"):
        path = tmp_path / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(f"# {name}\n")
    docs = fetch_source(spec_for(tmp_path))
    assert len(docs) == 3
    assert len({d.doc_id for d in docs}) == 3
    assert {d.uri for d in docs} == {"a.md", "b.md", "sub/c.md"}


def test_allowlist_filters_extensions(tmp_path):
    (tmp_path / "keep.md").write_text("x")
    (tmp_path / "skip.bin").write_bytes(b"\x00\x01")
    docs = fetch_source(spec_for(tmp_path))
    assert [d.uri for d in docs] == ["keep.md"]


def test_refetch_unchanged_root_is_identical(tmp_path):
    (tmp_path / "a.md").write_text("hello")
    first = fetch_source(spec_for(tmp_path))
    second = fetch_source(spec_for(tmp_path))
    assert [d.doc_id for d in first] == [d.doc_id for d in second]
    assert [d.last_modified for d in first] == [d.last_modified for d in second]


def test_missing_root_raises_source_unavailable(tmp_path):
    with pytest.raises(SourceUnavailableError):
        fetch_source(spec_for(tmp_path / "nope"))


def test_unreadable_file_is_skipped_not_fatal(tmp_path):
    (tmp_path / "ok.md").write_text("fine")
    bad = tmp_path / "bad.md"
    bad.write_text("secret")
    bad.chmod(0o000)
    try:
        docs = fetch_source(spec_for(tmp_path))
        # Root runs may ignore file permissions; only assert when the chmod bit.
        uris = {d.uri for d in docs}
        assert "ok.md" in uris
    finally:
        bad.chmod(0o644)


def test_default_allowlists_cover_each_kind(tmp_path):
    (tmp_path / "page.html").write_text("<p>x</p>")
    spec = SourceSpec(name="w", kind=SourceKind.WEBSITE, root=tmp_path)
    assert [d.uri for d in fetch_source(spec)] == ["page.html"]
    assert fetch_source(spec)[0].media_type == "text/html"
