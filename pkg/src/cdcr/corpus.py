"""Document ingest: format analysis and tokenisation.

Spans are character offsets into ``Document.body`` (Python ``str``
indices), half-open ``[start, end)``.
"""

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

from .errors import IngestError, ParseError
from .simfns import normalize_date

FORMATS = ("plain", "markup", "jsonl-record")


@dataclass(frozen=True)
class Document:
    id: str
    doc_type: str = ""
    timestamp: Optional[int] = None
    headline: Optional[str] = None
    body: str = ""
    source_path: str = ""

    def __post_init__(self):
        if not self.id:
            raise IngestError(f"document from {self.source_path or '<input>'} has an empty id")

    def to_dict(self):
        return {"id": self.id, "type": self.doc_type, "date": self.timestamp,
                "headline": self.headline, "body": self.body, "source": self.source_path}

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], d.get("type") or "", d.get("date"), d.get("headline"),
                   d.get("body") or "", d.get("source") or "")


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    kind: str  # word | number | punctuation

    @property
    def span(self):
        return (self.start, self.end)


_TOKEN_RE = re.compile(r"(?P<run>[^\W_]+)|(?P<punct>\S)")


def tokenize(body: str) -> list[Token]:
    """Split ``body`` into word, number and punctuation tokens.

    Maximal alphanumeric runs become one token (``number`` when all
    digits); every other non-space character is a token of its own.
    """
    out = []
    for m in _TOKEN_RE.finditer(body):
        text = m.group()
        if m.lastgroup == "punct":
            kind = "punctuation"
        else:
            kind = "number" if text.isdecimal() else "word"
        out.append(Token(text, m.start(), m.end(), kind))
    return out


# ---------------------------------------------------------------------------
# format analysis

_ENTITIES = {"&amp;": "&", "&lt;": "<", "&gt;": ">", "&quot;": '"', "&apos;": "'"}
_ENTITY_RE = re.compile("|".join(map(re.escape, _ENTITIES)))
_TAG_RE = re.compile(r"<(/?)([A-Za-z][\w:-]*)?[^<>]*>")
_BLOCK_TAGS = {"p", "br", "div", "doc", "text", "headline", "dateline", "li", "ul", "ol",
               "h1", "h2", "h3", "h4", "h5", "h6", "tr", "table", "body", "html", "title"}
_DOC_RE = re.compile(r"<DOC\b([^>]*)>(.*?)</DOC>", re.S | re.I)
_ATTR_RE = re.compile(r'([A-Za-z_][\w-]*)\s*=\s*"([^"]*)"')
_DOC_DATE_RE = re.compile(r"(?<!\d)(\d{8})(?!\d)")


def decode_entities(text: str) -> str:
    return _ENTITY_RE.sub(lambda m: _ENTITIES[m.group()], text)


def strip_markup(text: str) -> str:
    """Remove tags; block-level tags become line breaks, inline ones vanish."""
    def repl(m):
        name = (m.group(2) or "").lower()
        return "\n" if name in _BLOCK_TAGS else ""
    return decode_entities(_TAG_RE.sub(repl, text)).strip()


def _inner(block: str, tag: str) -> Optional[str]:
    m = re.search(rf"<{tag}\b[^>]*>(.*?)</{tag}>", block, re.S | re.I)
    return m.group(1) if m else None


def _parse_date(value) -> Optional[int]:
    if value in (None, ""):
        return None
    s = str(value)
    return normalize_date(s, "yyyy-mm-dd" if "-" in s else "yyyymmdd")


def _doc_from_block(attrs: str, content: str, source: str, fallback_id: str) -> Document:
    attr = dict(_ATTR_RE.findall(attrs))
    doc_id = attr.get("id") or attr.get("ID") or fallback_id
    headline = _inner(content, "HEADLINE")
    text = _inner(content, "TEXT")
    timestamp = None
    m = _DOC_DATE_RE.search(doc_id)
    if m:
        try:
            timestamp = normalize_date(m.group(1), "yyyymmdd")
        except ParseError:
            timestamp = None
    return Document(
        id=doc_id,
        doc_type=attr.get("type", ""),
        timestamp=timestamp,
        headline=strip_markup(headline) if headline is not None else None,
        body=strip_markup(text if text is not None else content),
        source_path=source,
    )


def analyze_format(raw: str, format: str = "plain", doc_id: str = "doc",
                   source: str = "") -> Document:
    """Turn one raw document into a tag-free ``Document``.

    ``markup`` input holding a ``<DOC>`` block takes id, type, headline and
    text from it; other markup is simply stripped. ``jsonl-record`` input
    is a single JSON object with ``id``, ``type``, ``date``, ``headline``
    and ``body`` fields.
    """
    if format == "plain":
        return Document(id=doc_id, body=raw, source_path=source)
    if format == "markup":
        m = _DOC_RE.search(raw)
        if m:
            return _doc_from_block(m.group(1), m.group(2), source, doc_id)
        return Document(id=doc_id, body=strip_markup(raw), source_path=source)
    if format == "jsonl-record":
        where = source or doc_id
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as e:
            raise IngestError(f"record {where}: invalid JSON ({e.msg})") from None
        if not isinstance(rec, dict) or not rec.get("id"):
            raise IngestError(f"record {where}: missing id")
        try:
            ts = _parse_date(rec.get("date"))
        except ParseError as e:
            raise IngestError(f"record {where}: {e}") from None
        return Document(id=str(rec["id"]), doc_type=rec.get("type") or "", timestamp=ts,
                        headline=rec.get("headline"), body=rec.get("body") or "",
                        source_path=source)
    raise IngestError(f"unknown input format {format!r}")


# ---------------------------------------------------------------------------
# corpus readers


@dataclass
class IngestReport:
    documents: int = 0
    replaced_bytes: int = 0
    files: int = 0
    bad_files: list = field(default_factory=list)


def read_text(path, report: Optional[IngestReport] = None) -> str:
    """Decode UTF-8, replacing invalid sequences and counting them."""
    data = Path(path).read_bytes()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        text = data.decode("utf-8", errors="replace")
        n = text.count("\ufffd") - data.count("\ufffd".encode("utf-8"))
        if report is not None:
            report.replaced_bytes += max(n, 0)
            report.bad_files.append(str(path))
    if report is not None:
        report.files += 1
    return text


def detect_format(path) -> str:
    p = Path(path)
    if p.is_dir():
        return "directory"
    if p.suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    return "markup"


def iter_corpus(path, format: str = "auto",
                report: Optional[IngestReport] = None) -> Iterator[Document]:
    """Yield documents from a directory of .txt files, a JSONL file or a markup file."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"corpus {str(path)!r} does not exist")
    fmt = detect_format(path) if format == "auto" else format
    report = report if report is not None else IngestReport()
    if fmt == "directory":
        for f in sorted(path.rglob("*.txt")):
            rel = f.relative_to(path).as_posix()
            report.documents += 1
            yield analyze_format(read_text(f, report), "plain", doc_id=rel, source=str(f))
    elif fmt == "jsonl":
        text = read_text(path, report)
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            report.documents += 1
            yield analyze_format(line, "jsonl-record", source=f"{path}:{lineno}")
    elif fmt == "markup":
        text = read_text(path, report)
        blocks = list(_DOC_RE.finditer(text))
        if not blocks:
            report.documents += 1
            yield analyze_format(text, "markup", doc_id=path.name, source=str(path))
        for i, m in enumerate(blocks):
            report.documents += 1
            yield _doc_from_block(m.group(1), m.group(2), f"{path}#{i}", f"{path.name}#{i}")
    else:
        raise IngestError(f"unknown corpus format {fmt!r}")


def read_corpus(path, format: str = "auto", report: Optional[IngestReport] = None) -> list[Document]:
    docs = list(iter_corpus(path, format, report))
    seen = set()
    for d in docs:
        if d.id in seen:
            raise IngestError(f"duplicate document id {d.id!r} in {os.fspath(path)}")
        seen.add(d.id)
    return docs
