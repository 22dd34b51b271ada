"""Code-object extraction and LLM-generated file descriptions.

The scanner is line-oriented and pattern-based: per file extension, a list
of declaration-start patterns mapped to an object kind. No language grammar
is parsed — the target corpora include legacy languages with no mainstream
parser, and declaration scanning is the honest minimal mechanism. Each
declaration closes the previous object, so spans never overlap.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum

from .llm_gateway import CompletionRequest, LlmGateway, Purpose
from .sources import RawDocument, SourceKind

logger = logging.getLogger(__name__)

FALLBACK_OBJECT_NAME = "<file>"
DESCRIPTION_MAX_CHARS = 2000
FILE_EXCERPT_CHARS = 3000


class CodeObjectKind(str, Enum):
    FUNCTION = "function"
    METHOD = "method"
    PROCEDURE = "procedure"


@dataclass(frozen=True)
class CodeObject:
    name: str
    kind: CodeObjectKind
    span: tuple[int, int]  # 1-based inclusive line range
    body: str


@dataclass
class CodeFileDescription:
    doc_id: str
    purpose: str
    structure: str
    key_procedures: list[str] = field(default_factory=list)
    external_interactions: list[str] = field(default_factory=list)


# Declaration-start patterns per extension; group 1 captures the object name.
ScannerRules = dict[str, list[tuple[re.Pattern, CodeObjectKind]]]

DEFAULT_SCANNER_RULES: ScannerRules = {
    ".py": [
        (re.compile(r"^(?:async\s+)?def\s+(\w+)"), CodeObjectKind.FUNCTION),
        (re.compile(r"^\s+(?:async\s+)?def\s+(\w+)"), CodeObjectKind.METHOD),
    ],
    ".js": [
        (re.compile(r"^\s*(?:export\s+)?(?:async\s+)?function\s+(\w+)"), CodeObjectKind.FUNCTION),
    ],
    ".ts": [
        (re.compile(r"^\s*(?:export\s+)?(?:async\s+)?function\s+(\w+)"), CodeObjectKind.FUNCTION),
    ],
    ".sql": [
        (re.compile(r"^\s*create\s+(?:or\s+replace\s+)?procedure\s+([\w.]+)", re.IGNORECASE), CodeObjectKind.PROCEDURE),
        (re.compile(r"^\s*create\s+(?:or\s+replace\s+)?function\s+([\w.]+)", re.IGNORECASE), CodeObjectKind.FUNCTION),
    ],
    # RPG free-form procedures and fixed-form subroutines.
    ".rpgle": [
        (re.compile(r"^\s*dcl-proc\s+([\w#$@]+)", re.IGNORECASE), CodeObjectKind.PROCEDURE),
        (re.compile(r"^\s*begsr\s+([\w#$@]+)", re.IGNORECASE), CodeObjectKind.PROCEDURE),
        (re.compile(r"^\s*c\s+([\w#$@]+)\s+begsr\b", re.IGNORECASE), CodeObjectKind.PROCEDURE),
    ],
}
DEFAULT_SCANNER_RULES[".rpg"] = DEFAULT_SCANNER_RULES[".rpgle"]
DEFAULT_SCANNER_RULES[".sqlrpgle"] = DEFAULT_SCANNER_RULES[".rpgle"]
DEFAULT_SCANNER_RULES[".clp"] = DEFAULT_SCANNER_RULES[".cl"] = [
    (re.compile(r"^\s*subr\s+subr\(([\w#$@]+)\)", re.IGNORECASE), CodeObjectKind.PROCEDURE),
]


def _extension_of(uri: str) -> str:
    dot = uri.rfind(".")
    return uri[dot:].lower() if dot >= 0 else ""


def extract_code_objects(raw: RawDocument, rules: ScannerRules = DEFAULT_SCANNER_RULES) -> list[CodeObject]:
    """Scan a code file into non-overlapping objects ordered by start line.

    A non-empty file with no recognized declarations yields one fallback
    object named "<file>" spanning the whole file; an empty file yields
    nothing at all.
    """
    if raw.source is not SourceKind.CODE_REPOSITORY:
        raise ValueError(f"{raw.doc_id}: code objects are only extracted from code repository sources")
    text = raw.content.decode("utf-8")
    if not text.strip():
        return []
    lines = text.splitlines()
    patterns = rules.get(_extension_of(raw.uri), [])

    starts: list[tuple[int, str, CodeObjectKind]] = []  # (line index, name, kind)
    for i, line in enumerate(lines):
        for pattern, kind in patterns:
            m = pattern.match(line)
            if m:
                starts.append((i, m.group(1), kind))
                break

    if not starts:
        return [
            CodeObject(
                name=FALLBACK_OBJECT_NAME,
                kind=CodeObjectKind.PROCEDURE,
                span=(1, len(lines)),
                body=text,
            )
        ]

    objects = []
    for n, (start, name, kind) in enumerate(starts):
        end = starts[n + 1][0] - 1 if n + 1 < len(starts) else len(lines) - 1
        objects.append(
            CodeObject(
                name=name,
                kind=kind,
                span=(start + 1, end + 1),
                body="\n".join(lines[start : end + 1]),
            )
        )
    return objects


_SECTION_RE = re.compile(
    r"^(PURPOSE|STRUCTURE|KEY_PROCEDURES|EXTERNAL_INTERACTIONS):", re.MULTILINE
)


def build_description_prompt(raw: RawDocument, objects: list[CodeObject]) -> str:
    listing = "\n".join(f"- {o.name} ({o.kind.value}, lines {o.span[0]}-{o.span[1]})" for o in objects)
    excerpt = raw.content.decode("utf-8", errors="replace")[:FILE_EXCERPT_CHARS]
    return (
        f"Describe the code file {raw.uri}.\n\n"
        f"Objects found in the file:\n{listing or '- (none)'}\n\n"
        "Reply with exactly these labeled sections:\n"
        "PURPOSE: what the file is for overall\n"
        "STRUCTURE: how it is organised\n"
        "KEY_PROCEDURES: comma-separated names of the most important objects\n"
        "EXTERNAL_INTERACTIONS: comma-separated external systems, files or tables touched\n\n"
        f"File excerpt:\n{excerpt}\n"
    )


def _parse_description_reply(reply: str, doc_id: str, object_names: set[str]) -> CodeFileDescription:
    matches = list(_SECTION_RE.finditer(reply))
    if not any(m.group(1) == "PURPOSE" for m in matches):
        raise ValueError("reply has no PURPOSE section")
    sections: dict[str, str] = {}
    for n, m in enumerate(matches):
        end = matches[n + 1].start() if n + 1 < len(matches) else len(reply)
        sections[m.group(1)] = reply[m.end() : end].strip()

    listed = re.split(r"[,\n]+", sections.get("KEY_PROCEDURES", ""))
    key_procedures = []
    for name in (item.strip().lstrip("-").strip() for item in listed):
        if not name:
            continue
        if name in object_names:
            key_procedures.append(name)
        else:
            logger.warning("%s: dropping key procedure %r not among extracted objects", doc_id, name)
    interactions = [s.strip() for s in re.split(r"[,\n]+", sections.get("EXTERNAL_INTERACTIONS", "")) if s.strip()]
    return CodeFileDescription(
        doc_id=doc_id,
        purpose=sections["PURPOSE"],
        structure=sections.get("STRUCTURE", ""),
        key_procedures=key_procedures,
        external_interactions=interactions,
    )


def describe_code_file(
    raw: RawDocument,
    objects: list[CodeObject],
    gateway: LlmGateway,
) -> CodeFileDescription:
    """Ask the gateway for a structured description of one code file.

    A malformed reply is retried once, then the first line of the reply
    becomes the purpose. Gateway failures propagate so the caller can skip
    the description while still indexing the code chunks.
    """
    request = CompletionRequest(
        purpose=Purpose.CODE_DESCRIPTION,
        prompt=build_description_prompt(raw, objects),
        max_output_chars=DESCRIPTION_MAX_CHARS,
    )
    names = {o.name for o in objects}
    reply = gateway.complete(request).text
    for attempt in range(2):
        try:
            return _parse_description_reply(reply, raw.doc_id, names)
        except ValueError:
            if attempt == 0:
                logger.warning("%s: malformed description reply, retrying once", raw.doc_id)
                reply = gateway.complete(request).text
    first_line = reply.strip().splitlines()[0] if reply.strip() else ""
    return CodeFileDescription(doc_id=raw.doc_id, purpose=first_line, structure="")


def render_description(description: CodeFileDescription, uri: str) -> str:
    """Flatten a description into the text that gets embedded and indexed."""
    parts = [f"Code file {uri}: {description.purpose}"]
    if description.structure:
        parts.append(f"Structure: {description.structure}")
    if description.key_procedures:
        parts.append("Key procedures: " + ", ".join(description.key_procedures))
    if description.external_interactions:
        parts.append("External interactions: " + ", ".join(description.external_interactions))
    return "\n".join(parts)
