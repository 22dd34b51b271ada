from datetime import datetime, timezone

import pytest

from ragdesk.code_objects import (
    CodeObjectKind,
    build_description_prompt,
    describe_code_file,
    extract_code_objects,
    render_description,
)
from ragdesk.errors import ScriptedMissError
from ragdesk.llm_gateway import LlmGateway, Purpose, ScriptEntry, StubProvider
from ragdesk.sources import RawDocument, SourceKind

NOW = datetime(2025, 1, 1, tzinfo=timezone.utc)


def code_doc(body: str, uri: str = "prog.rpgle") -> RawDocument:
    return RawDocument(
        doc_id=uri,
        source=SourceKind.CODE_REPOSITORY,
        uri=uri,
        content=body.encode(),
        media_type="text/x-rpg",
        last_modified=NOW,
    )


RPG_FIXTURE = """**free
ctl-opt nomain;

dcl-proc FIRST;
  return 1;
end-proc;

dcl-proc SECOND;
  return 2;
end-proc;

dcl-proc THIRD;
  return 3;
end-proc;
"""


def test_empty_file_yields_no_objects():
    assert extract_code_objects(code_doc("")) == []
    assert extract_code_objects(code_doc("   \n  \n")) == []


def test_three_procs_with_hand_annotated_spans():
    # Manual annotation of RPG_FIXTURE (14 lines): FIRST declared on line 4,
    # SECOND on line 8, THIRD on line 12; each proc owns the lines up to the
    # next declaration, and the last one runs to end of file.
    objects = extract_code_objects(code_doc(RPG_FIXTURE))
    assert [(o.name, o.span) for o in objects] == [
        ("FIRST", (4, 7)),
        ("SECOND", (8, 11)),
        ("THIRD", (12, 14)),
    ]
    assert all(o.kind is CodeObjectKind.PROCEDURE for o in objects)


def test_body_equals_source_lines_in_span():
    objects = extract_code_objects(code_doc(RPG_FIXTURE))
    lines = RPG_FIXTURE.splitlines()
    for o in objects:
        assert o.body == "\n".join(lines[o.span[0] - 1 : o.span[1]])


def test_spans_are_non_overlapping_and_ordered():
    objects = extract_code_objects(code_doc(RPG_FIXTURE))
    for a, b in zip(objects, objects[1:]):
        assert a.span[1] < b.span[0]


def test_python_functions_and_methods():
    body = "def top():\n    pass\n\nclass C:\n    def m(self):\n        pass\n"
    objects = extract_code_objects(code_doc(body, uri="mod.py"))
    assert [(o.name, o.kind) for o in objects] == [
        ("top", CodeObjectKind.FUNCTION),
        ("m", CodeObjectKind.METHOD),
    ]


def test_sql_procedure_kind():
    body = "CREATE OR REPLACE PROCEDURE NIGHTLY (IN D DATE)\nBEGIN\nEND;\n"
    objects = extract_code_objects(code_doc(body, uri="job.sql"))
    assert objects[0].kind is CodeObjectKind.PROCEDURE
    assert objects[0].name == "NIGHTLY"


def test_unrecognized_file_gets_whole_file_fallback():
    body = "     C                   EVAL      X = 1\n     C                   EVAL      Y = 2\n"
    objects = extract_code_objects(code_doc(body, uri="fixed.rpg"))
    assert len(objects) == 1
    assert objects[0].name == "<file>"
    assert objects[0].span == (1, 2)
    assert objects[0].body == body


def test_non_code_source_rejected():
    doc = code_doc("x")
    doc.source = SourceKind.WEBSITE
    with pytest.raises(ValueError):
        extract_code_objects(doc)


# -- descriptions -------------------------------------------------------------

WELL_FORMED = (
    "PURPOSE: Computes consignment rates.\n"
    "STRUCTURE: Three procedures, one per step.\n"
    "KEY_PROCEDURES: FIRST, SECOND\n"
    "EXTERNAL_INTERACTIONS: RATES table, billing API\n"
)


def gateway_with(reply: str) -> LlmGateway:
    return LlmGateway(StubProvider([ScriptEntry(Purpose.CODE_DESCRIPTION, "", reply)]))


def test_well_formed_reply_parses():
    doc = code_doc(RPG_FIXTURE)
    objects = extract_code_objects(doc)
    description = describe_code_file(doc, objects, gateway_with(WELL_FORMED))
    assert description.purpose == "Computes consignment rates."
    assert description.structure == "Three procedures, one per step."
    assert description.key_procedures == ["FIRST", "SECOND"]
    assert description.external_interactions == ["RATES table", "billing API"]


def test_unknown_key_procedure_filtered_out():
    # Applying the filtering rule by hand: GHOST is not an extracted object,
    # so only FIRST survives.
    reply = "PURPOSE: p\nSTRUCTURE: s\nKEY_PROCEDURES: FIRST, GHOST\nEXTERNAL_INTERACTIONS: none\n"
    doc = code_doc(RPG_FIXTURE)
    objects = extract_code_objects(doc)
    description = describe_code_file(doc, objects, gateway_with(reply))
    assert description.key_procedures == ["FIRST"]
    assert set(description.key_procedures) <= {o.name for o in objects}


def test_malformed_reply_retried_once_then_fallback():
    calls = {"n": 0}

    class CountingStub:
        name = "stub"

        def complete(self, request):
            calls["n"] += 1
            return "just rambling text\nwith no labels"

    description = describe_code_file(code_doc(RPG_FIXTURE), extract_code_objects(code_doc(RPG_FIXTURE)), LlmGateway(CountingStub()))
    assert calls["n"] == 2
    assert description.purpose == "just rambling text"
    assert description.key_procedures == []


def test_gateway_failure_propagates_for_caller_to_skip():
    gw = LlmGateway(StubProvider([]))  # every request is a scripted miss
    with pytest.raises(ScriptedMissError):
        describe_code_file(code_doc(RPG_FIXTURE), [], gw)


def test_prompt_contains_objects_and_excerpt():
    doc = code_doc(RPG_FIXTURE)
    objects = extract_code_objects(doc)
    prompt = build_description_prompt(doc, objects)
    assert "prog.rpgle" in prompt
    assert "- FIRST (procedure, lines 4-7)" in prompt
    assert "dcl-proc FIRST" in prompt


def test_render_description_mentions_key_fields():
    doc = code_doc(RPG_FIXTURE)
    description = describe_code_file(doc, extract_code_objects(doc), gateway_with(WELL_FORMED))
    text = render_description(description, doc.uri)
    assert "prog.rpgle" in text
    assert "Computes consignment rates." in text
    assert "FIRST" in text
