"""Typed mention extraction: gazetteer lookup plus hand-written grammar rules."""

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import Document, Token, tokenize
from .errors import ConfigError, DataError
from .simfns import MONTHS

MAJOR_TYPES = ("person", "organization", "location", "date", "time", "money", "percent")

TITLES = {"mr", "mrs", "ms", "dr", "president", "senator"}
DESIGNATORS = {"inc": "organization", "corp": "organization", "ltd": "organization"}
CURRENCY = set("$£€¥")
_NOT_NAMES = set(MONTHS) | {"monday", "tuesday", "wednesday", "thursday", "friday",
                            "saturday", "sunday"}
_SENTENCE_END = {".", "!", "?"}
MAX_NGRAM = 5


@dataclass(frozen=True, order=True)
class EntityType:
    major: str
    subtype: str = ""

    def __post_init__(self):
        if self.major not in MAJOR_TYPES:
            raise DataError(f"unknown entity type {self.major!r}; expected one of {MAJOR_TYPES}")

    def __str__(self):
        return f"{self.major}/{self.subtype}" if self.subtype else self.major


@dataclass(frozen=True)
class Mention:
    id: str
    doc_id: str
    surface: str
    type: EntityType
    span: tuple
    left_context: tuple = ()
    right_context: tuple = ()
    doc_type: str = ""
    timestamp: Optional[int] = None
    headline: Optional[str] = None
    source: str = "grammar"

    @staticmethod
    def make_id(doc_id, start, end):
        return f"{doc_id}:{start}-{end}"

    def to_dict(self):
        return {
            "id": self.id, "doc": self.doc_id, "surface": self.surface,
            "type": self.type.major, "subtype": self.type.subtype,
            "span": list(self.span), "left": list(self.left_context),
            "right": list(self.right_context), "docType": self.doc_type,
            "date": self.timestamp, "headline": self.headline, "source": self.source,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(d["id"], d["doc"], d["surface"], EntityType(d["type"], d.get("subtype", "")),
                   tuple(d["span"]), tuple(d.get("left", ())), tuple(d.get("right", ())),
                   d.get("docType", ""), d.get("date"), d.get("headline"),
                   d.get("source", "grammar"))


def _key(texts, case_sensitive):
    return tuple(texts) if case_sensitive else tuple(t.lower() for t in texts)


@dataclass
class Gazetteer:
    entries: dict = field(default_factory=dict)
    case_sensitive: bool = False

    def add(self, surface: str, etype: EntityType):
        toks = [t.text for t in tokenize(surface)]
        if not toks:
            raise ConfigError(f"gazetteer entry {surface!r} is empty")
        if len(toks) > MAX_NGRAM:
            raise ConfigError(f"gazetteer entry {surface!r} is longer than {MAX_NGRAM} tokens")
        self.entries[_key(toks, self.case_sensitive)] = etype

    def lookup(self, surface: str) -> Optional[EntityType]:
        return self.entries.get(_key([t.text for t in tokenize(surface)], self.case_sensitive))

    def __len__(self):
        return len(self.entries)

    @classmethod
    def from_mapping(cls, mapping, case_sensitive=False):
        gaz = cls(case_sensitive=case_sensitive)
        for surface, etype in mapping.items():
            if isinstance(etype, str):
                etype = EntityType(etype)
            elif isinstance(etype, tuple):
                etype = EntityType(*etype)
            gaz.add(surface, etype)
        return gaz

    @classmethod
    def load(cls, path, case_sensitive=False):
        """Load ``surface TAB major-type [TAB subtype]`` lines."""
        gaz = cls(case_sensitive=case_sensitive)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) < 2:
                    raise ConfigError(f"{path}:{lineno}: expected surface TAB type [TAB subtype]")
                try:
                    etype = EntityType(parts[1].strip().lower(),
                                       parts[2].strip() if len(parts) > 2 else "")
                except DataError as e:
                    raise ConfigError(f"{path}:{lineno}: {e}") from None
                gaz.add(parts[0].strip(), etype)
        return gaz


@dataclass(frozen=True)
class ExtractConfig:
    context_window: int = 10
    default_type: str = "person"

    def __post_init__(self):
        if self.context_window < 0:
            raise ConfigError("context_window must be >= 0")
        if self.default_type not in MAJOR_TYPES:
            raise ConfigError(f"unknown default type {self.default_type!r}")


@dataclass(frozen=True)
class _Candidate:
    first: int
    last: int  # inclusive token index
    type: EntityType
    source: str


def _gazetteer_candidates(tokens: Sequence[Token], gaz: Gazetteer) -> list[_Candidate]:
    out = []
    if not gaz.entries:
        return out
    i, n = 0, len(tokens)
    while i < n:
        for size in range(min(MAX_NGRAM, n - i), 0, -1):
            key = _key([t.text for t in tokens[i:i + size]], gaz.case_sensitive)
            etype = gaz.entries.get(key)
            if etype is not None:
                out.append(_Candidate(i, i + size - 1, etype, "gazetteer"))
                i += size
                break
        else:
            i += 1
    return out


# ---------------------------------------------------------------------------
# grammar


def _adjacent(tokens, i, j):
    return tokens[i].end == tokens[j].start


def _num(tok, min_len=1, max_len=None, lo=None, hi=None):
    if tok.kind != "number" or len(tok.text) < min_len:
        return False
    if max_len is not None and len(tok.text) > max_len:
        return False
    v = int(tok.text)
    return (lo is None or v >= lo) and (hi is None or v <= hi)


def _contiguous(tokens, i, k):
    return i + k <= len(tokens) and all(_adjacent(tokens, j, j + 1) for j in range(i, i + k - 1))


def _match_date(tokens, i):
    t = tokens[i]
    n = len(tokens)
    if t.kind == "word" and t.text[0].isupper() and t.text.lower() in MONTHS:
        if i + 1 < n and _num(tokens[i + 1], 1, 2, 1, 31):
            if (i + 3 < n and tokens[i + 2].text == "," and _num(tokens[i + 3], 4, 4)):
                return i + 3
            return i + 1
        return None
    # dd/mm/yyyy
    if _contiguous(tokens, i, 5) and _num(t, 1, 2, 1, 31) and tokens[i + 1].text == "/" \
            and _num(tokens[i + 2], 1, 2, 1, 12) and tokens[i + 3].text == "/" \
            and _num(tokens[i + 4], 4, 4):
        return i + 4
    # yyyy-mm-dd
    if _contiguous(tokens, i, 5) and _num(t, 4, 4) and tokens[i + 1].text == "-" \
            and _num(tokens[i + 2], 2, 2, 1, 12) and tokens[i + 3].text == "-" \
            and _num(tokens[i + 4], 2, 2, 1, 31):
        return i + 4
    return None


def _match_time(tokens, i):
    if _contiguous(tokens, i, 3) and _num(tokens[i], 1, 2, 0, 23) and tokens[i + 1].text == ":" \
            and _num(tokens[i + 2], 2, 2, 0, 59):
        if _contiguous(tokens, i, 5) and tokens[i + 3].text == ":" and _num(tokens[i + 4], 2, 2, 0, 59):
            return i + 4
        return i + 2
    return None


def _number_end(tokens, i):
    """Index of the last token of a number like 1,250.75 starting at ``i``."""
    if i >= len(tokens) or tokens[i].kind != "number":
        return None
    j = i
    while _contiguous(tokens, j, 3) and tokens[j + 1].text == "," and _num(tokens[j + 2], 3, 3):
        j += 2
    if _contiguous(tokens, j, 3) and tokens[j + 1].text == "." and tokens[j + 2].kind == "number":
        j += 2
    return j


def _match_money(tokens, i):
    if tokens[i].text in CURRENCY and i + 1 < len(tokens) and _adjacent(tokens, i, i + 1):
        return _number_end(tokens, i + 1)
    return None


def _match_percent(tokens, i):
    j = _number_end(tokens, i)
    if j is not None and j + 1 < len(tokens) and tokens[j + 1].text == "%" \
            and _adjacent(tokens, j, j + 1):
        return j + 1
    return None


def _is_cap(tok):
    return tok.kind == "word" and tok.text[0].isupper()


def _is_initial(tok):
    return tok.kind == "word" and len(tok.text) == 1 and tok.text.isupper()


def _is_title(tok):
    return tok.text.lower() in TITLES


def _sentence_initial(tokens, i):
    if i == 0:
        return True
    prev = tokens[i - 1]
    if prev.text not in _SENTENCE_END:
        return False
    if prev.text == "." and i >= 2 and _adjacent(tokens, i - 2, i - 1) \
            and (_is_initial(tokens[i - 2]) or _is_title(tokens[i - 2])):
        return False
    return True


def _cap_runs(tokens, default_type):
    out = []
    i, n = 0, len(tokens)
    while i < n:
        if not _is_cap(tokens[i]):
            i += 1
            continue
        j = i
        while True:
            if j + 1 < n and _is_cap(tokens[j + 1]):
                j += 1
            elif (j + 2 < n and tokens[j + 1].text == "." and _adjacent(tokens, j, j + 1)
                  and (_is_initial(tokens[j]) or _is_title(tokens[j]))
                  and _is_cap(tokens[j + 2])):
                j += 2
            else:
                break
        first, last = i, j
        i = j + 1
        if _sentence_initial(tokens, first) and not _is_title(tokens[first]):
            first += 1
            if first <= last and tokens[first].text == ".":
                first += 1
        if first > last:
            continue
        words = [t for t in tokens[first:last + 1] if t.kind == "word"]
        if _is_title(tokens[first]):
            if len(words) < 2:
                continue
            major = "person"
        elif words[-1].text.lower() in DESIGNATORS:
            if len(words) < 2:
                continue
            major = DESIGNATORS[words[-1].text.lower()]
        else:
            if len(words) == 1 and words[0].text.lower() in _NOT_NAMES:
                continue
            major = default_type
        out.append(_Candidate(first, last, EntityType(major), "grammar"))
    return out


def _grammar_candidates(tokens: Sequence[Token], default_type: str = "person") -> list[_Candidate]:
    out = []
    for i in range(len(tokens)):
        for major, rule in (("date", _match_date), ("time", _match_time),
                            ("money", _match_money), ("percent", _match_percent)):
            end = rule(tokens, i)
            if end is not None:
                out.append(_Candidate(i, end, EntityType(major), "grammar"))
    out.extend(_cap_runs(tokens, default_type))
    return out


def _resolve(candidates):
    """Greedy non-overlapping selection: gazetteer, then longer, then leftmost."""
    ranked = sorted(candidates, key=lambda c: (c.source != "gazetteer", -(c.last - c.first), c.first))
    taken = []
    used = set()
    for c in ranked:
        idx = range(c.first, c.last + 1)
        if any(k in used for k in idx):
            continue
        used.update(idx)
        taken.append(c)
    taken.sort(key=lambda c: c.first)
    return taken


def _to_mention(doc, tokens, c, window):
    start, end = tokens[c.first].start, tokens[c.last].end
    left = tuple(t.text for t in tokens[max(0, c.first - window):c.first])
    right = tuple(t.text for t in tokens[c.last + 1:c.last + 1 + window])
    return Mention(
        id=Mention.make_id(doc.id, start, end), doc_id=doc.id, surface=doc.body[start:end],
        type=c.type, span=(start, end), left_context=left, right_context=right,
        doc_type=doc.doc_type, timestamp=doc.timestamp, headline=doc.headline, source=c.source,
    )


def extract_mentions(doc: Document, gaz: Optional[Gazetteer] = None,
                     config: ExtractConfig = ExtractConfig()) -> list[Mention]:
    """All typed mentions of ``doc`` in text order, with context windows attached."""
    tokens = tokenize(doc.body)
    if not tokens:
        return []
    cands = _grammar_candidates(tokens, config.default_type)
    if gaz is not None:
        cands = _gazetteer_candidates(tokens, gaz) + cands
    return [_to_mention(doc, tokens, c, config.context_window) for c in _resolve(cands)]


def _standalone_doc(tokens):
    """A document whose body places each token at its own offset."""
    chars = [" "] * (tokens[-1].end if tokens else 0)
    for t in tokens:
        chars[t.start:t.end] = t.text
    return Document(id="-", body="".join(chars))


def gazetteer_lookup(tokens: Sequence[Token], gaz: Gazetteer,
                     doc: Optional[Document] = None, window: int = 10) -> list[Mention]:
    """Left-to-right longest match over token n-grams (n <= 5); matches never overlap."""
    doc = doc or _standalone_doc(tokens)
    return [_to_mention(doc, tokens, c, window) for c in _gazetteer_candidates(tokens, gaz)]


def apply_grammar(tokens: Sequence[Token], default_type: str = "person",
                  doc: Optional[Document] = None, window: int = 10) -> list[Mention]:
    """Rule-based mentions: dates, times, money, percentages and capitalised names.

    The capitalisation heuristic ignores a sentence-initial word unless it
    is a title. Overlaps among grammar mentions are resolved the same way
    as in ``extract_mentions`` (longer span first, then leftmost).
    """
    doc = doc or _standalone_doc(tokens)
    chosen = _resolve(_grammar_candidates(tokens, default_type))
    return [_to_mention(doc, tokens, c, window) for c in chosen]
