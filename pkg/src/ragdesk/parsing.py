"""Document parsing: turn raw bytes into plain text.

Markdown and plain text pass through as decoded text, HTML is stripped to
text with block structure preserved as line breaks, and code files come out
verbatim (the description transformation happens later, at ingest time).
"""

from __future__ import annotations

import re
from html.parser import HTMLParser

from .errors import DocumentDecodeError, UnsupportedFormatError
from .sources import RawDocument

# Tags that delimit visual blocks; entering or leaving one becomes a newline.
_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "table", "tr", "td", "th",
    "h1", "h2", "h3", "h4", "h5", "h6", "section", "article", "header",
    "footer", "blockquote", "pre", "nav", "main", "hr",
}
_SKIP_TAGS = {"script", "style"}


class _HtmlTextExtractor(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self.title: str = ""
        self._in_title = False
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_TAGS:
            self._skip_depth += 1
        elif tag == "title":
            self._in_title = True
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_endtag(self, tag):
        if tag in _SKIP_TAGS and self._skip_depth:
            self._skip_depth -= 1
        elif tag == "title":
            self._in_title = False
        elif tag in _BLOCK_TAGS:
            self.parts.append("\n")

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title += data
            return
        self.parts.append(data)


def strip_html(html: str) -> tuple[str, str]:
    """Return (text, title) with block tags turned into line breaks."""
    extractor = _HtmlTextExtractor()
    extractor.feed(html)
    extractor.close()
    text = "".join(extractor.parts)
    # Collapse runs of blank lines introduced by nested block tags.
    text = re.sub(r"[ \t]+\n", "\n", text)
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip(), extractor.title.strip()


def _decode(raw: RawDocument) -> str:
    try:
        return raw.content.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DocumentDecodeError(f"{raw.doc_id}: not valid UTF-8 ({exc})") from exc


def parse_document(raw: RawDocument) -> str:
    """Extract plain text from a raw document.

    Code files (text/x-*) come back byte-identical as text; HTML is stripped;
    markdown and plain text are just decoded. Anything else is unsupported.
    """
    media = raw.media_type
    if media in ("text/plain", "text/markdown"):
        return _decode(raw)
    if media == "text/html":
        text, _title = strip_html(_decode(raw))
        return text
    if media.startswith("text/x-"):
        return _decode(raw)
    raise UnsupportedFormatError(media, raw.doc_id)


_MD_HEADING_RE = re.compile(r"^#{1,6}\s+(.+?)\s*$", re.MULTILINE)


def extract_title(raw: RawDocument, text: str) -> str:
    """Best-effort display title: HTML <title>, first markdown heading, or file stem."""
    if raw.media_type == "text/html":
        try:
            _, title = strip_html(_decode(raw))
        except DocumentDecodeError:
            title = ""
        if title:
            return title
    if raw.media_type == "text/markdown":
        m = _MD_HEADING_RE.search(text)
        if m:
            return m.group(1)
    return raw.metadata.get("title", raw.doc_id)
