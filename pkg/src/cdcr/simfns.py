"""String, numeric, date and categorical similarity functions.

Every ``*_similarity``-style function returns a score in ``[0, 1]``;
``edit_distance`` and ``hamming_distance`` return raw integer distances.
"""

import datetime
import math
import re
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional

from .errors import ConfigError, DomainError, EncodingError, ParseError

_TOKEN_RE = re.compile(r"[^\W_]+")


def default_tokens(s: str) -> list[str]:
    """Lowercased alphanumeric runs of ``s``."""
    return _TOKEN_RE.findall(s.lower())


# ---------------------------------------------------------------------------
# character based


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insertion, deletion and substitution cost."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def edit_similarity(a: str, b: str) -> float:
    if not a and not b:
        return 1.0
    return 1.0 - edit_distance(a, b) / max(len(a), len(b))


def jaro(a: str, b: str) -> float:
    """Jaro similarity.

    Characters count as common when equal and no further apart than half
    the length of the shorter string. ``t`` is half the number of common
    characters that disagree when both common sequences are read in order.
    """
    if a == b:
        return 1.0
    la, lb = len(a), len(b)
    if not la or not lb:
        return 0.0
    window = min(la, lb) // 2
    b_used = [False] * lb
    a_common = []
    for i, ca in enumerate(a):
        hi = i + window + 1
        j = b.find(ca, max(0, i - window), hi)
        while j != -1 and b_used[j]:
            j = b.find(ca, j + 1, hi)
        if j != -1:
            b_used[j] = True
            a_common.append(ca)
    m = len(a_common)
    if not m:
        return 0.0
    b_common = [cb for cb, used in zip(b, b_used) if used]
    half_t = sum(x != y for x, y in zip(a_common, b_common)) / 2.0
    return (m / la + m / lb + (m - half_t) / m) / 3.0


def common_prefix_length(a: str, b: str, limit: int = 4) -> int:
    n = 0
    for ca, cb in zip(a, b):
        if ca != cb or n == limit:
            break
        n += 1
    return n


def jaro_winkler(a: str, b: str, prefix_scale: float = 0.1) -> float:
    if not 0.0 <= prefix_scale <= 0.25:
        raise ConfigError(f"prefix_scale must lie in [0, 0.25], got {prefix_scale}")
    j = jaro(a, b)
    ell = common_prefix_length(a, b)
    return j + ell * prefix_scale * (1.0 - j)


@dataclass(frozen=True)
class QGramConfig:
    q: int = 2
    denominator: str = "maximum"

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 1:
            raise ConfigError(f"q must be a positive integer, got {self.q!r}")
        if self.denominator not in ("minimum", "average", "maximum"):
            raise ConfigError(f"unknown q-gram denominator {self.denominator!r}")


def qgrams(s: str, q: int = 2) -> list[str]:
    """All length-``q`` substrings of ``s`` in order (a multiset)."""
    return [s[i:i + q] for i in range(len(s) - q + 1)]


def qgram_overlap(ga: Counter, gb: Counter, na: int, nb: int,
                  denominator: str = "maximum") -> float:
    """Q-gram score from precomputed gram counters and sizes."""
    if not na and not nb:
        return 1.0
    if not na or not nb:
        return 0.0
    if len(ga) > len(gb):
        ga, gb = gb, ga
    common = 0
    for g, c in ga.items():
        other = gb.get(g)
        if other:
            common += c if c < other else other
    if denominator == "maximum":
        denom = max(na, nb)
    elif denominator == "minimum":
        denom = min(na, nb)
    else:
        denom = (na + nb) / 2.0
    return common / denom


def qgram_similarity(a: str, b: str, cfg: QGramConfig = QGramConfig()) -> float:
    qa, qb = qgrams(a, cfg.q), qgrams(b, cfg.q)
    return qgram_overlap(Counter(qa), Counter(qb), len(qa), len(qb), cfg.denominator)


# ---------------------------------------------------------------------------
# token based


def jaccard(a: str, b: str, tokenizer: Optional[Callable[[str], Iterable[str]]] = None) -> float:
    tok = tokenizer or default_tokens
    sa, sb = set(tok(a)), set(tok(b))
    if not sa and not sb:
        return 1.0
    return len(sa & sb) / len(sa | sb)


class CorpusStats:
    """Document frequencies for tf/idf weighting.

    Immutable once built; unit vectors are memoised per string so that
    repeated comparisons of the same mention only vectorise it once.
    """

    def __init__(self, doc_count: int, doc_freq: Mapping[str, int]):
        for tok, df in doc_freq.items():
            if not 1 <= df <= doc_count:
                raise ConfigError(f"document frequency of {tok!r} is {df}, outside [1, {doc_count}]")
        self.doc_count = doc_count
        self.doc_freq = dict(doc_freq)
        self._vectors: dict[str, dict[str, float]] = {}

    @classmethod
    def from_texts(cls, texts: Iterable[str], tokenizer=default_tokens) -> "CorpusStats":
        df: Counter = Counter()
        n = 0
        for text in texts:
            n += 1
            df.update(set(tokenizer(text)))
        return cls(n, df)

    def idf(self, token: str) -> float:
        return math.log(self.doc_count / self.doc_freq.get(token, 1))

    def weights(self, s: str) -> dict[str, float]:
        """Raw tf * idf weights, zero entries dropped."""
        tf = Counter(default_tokens(s))
        out = {}
        for tok, n in tf.items():
            w = n * self.idf(tok)
            if w:
                out[tok] = w
        return out

    def unit_vector(self, s: str) -> dict[str, float]:
        vec = self._vectors.get(s)
        if vec is None:
            w = self.weights(s)
            norm = math.sqrt(math.fsum(x * x for x in w.values()))
            vec = {t: x / norm for t, x in w.items()} if norm else {}
            self._vectors[s] = vec
        return vec

    def __getstate__(self):
        return {"doc_count": self.doc_count, "doc_freq": self.doc_freq}

    def __setstate__(self, state):
        self.doc_count = state["doc_count"]
        self.doc_freq = state["doc_freq"]
        self._vectors = {}

    def to_dict(self):
        return {"doc_count": self.doc_count, "doc_freq": dict(sorted(self.doc_freq.items()))}

    @classmethod
    def from_dict(cls, d):
        return cls(d["doc_count"], d["doc_freq"])


def tfidf_cosine(a: str, b: str, stats: CorpusStats) -> float:
    if stats.doc_count <= 0:
        raise ConfigError("tf/idf statistics are empty (N = 0)")
    va, vb = stats.unit_vector(a), stats.unit_vector(b)
    if not va or not vb:
        return 0.0
    if va is vb or va == vb:
        return 1.0
    if len(va) > len(vb):
        va, vb = vb, va
    dot = math.fsum([x * vb[t] for t, x in va.items() if t in vb])
    return min(1.0, max(0.0, dot))


# ---------------------------------------------------------------------------
# phonetic

_SOUNDEX_CODES = {}
for _letters, _digit in (("bfpv", "1"), ("cgjkqsxz", "2"), ("dt", "3"),
                         ("l", "4"), ("mn", "5"), ("r", "6")):
    for _c in _letters:
        _SOUNDEX_CODES[_c] = _digit
_SOUNDEX_SKIP = set("aeiouhwy")


def soundex(s: str) -> str:
    """Four-character phonetic code: first letter plus three digits.

    Non-letters are ignored. Vowels and h, w, y after the first letter are
    dropped before coding, so equal codes separated only by those letters
    collapse as well.
    """
    letters = [c for c in s.lower() if "a" <= c <= "z"]
    if not letters:
        raise EncodingError(f"no ASCII letters to encode in {s!r}")
    first = letters[0]
    digits = []
    last = _SOUNDEX_CODES.get(first)
    for c in letters[1:]:
        if c in _SOUNDEX_SKIP:
            continue
        code = _SOUNDEX_CODES[c]
        if code != last:
            digits.append(code)
        last = code
    return first + "".join(digits[:3]).ljust(3, "0")


def phonetic_equal(a: str, b: str) -> float:
    return 1.0 if soundex(a) == soundex(b) else 0.0


# ---------------------------------------------------------------------------
# numeric


def hamming_distance(a: str, b: str) -> int:
    if len(a) != len(b):
        raise DomainError(
            f"hamming distance needs equal lengths, got {len(a)} and {len(b)}; "
            "use relative_distance or edit_distance instead")
    return sum(x != y for x, y in zip(a, b))


def relative_distance(x: float, y: float) -> float:
    """Similarity ``1 - |x - y| / max(x, y)`` for positive numbers."""
    if x <= 0 or y <= 0:
        raise DomainError(f"relative distance is defined for positive values only, got {x}, {y}")
    return 1.0 - abs(x - y) / max(x, y)


# ---------------------------------------------------------------------------
# dates

MONTHS = {
    "january": 1, "february": 2, "march": 3, "april": 4, "may": 5, "june": 6,
    "july": 7, "august": 8, "september": 9, "october": 10, "november": 11,
    "december": 12, "jan": 1, "feb": 2, "mar": 3, "apr": 4, "jun": 6,
    "jul": 7, "aug": 8, "sep": 9, "sept": 9, "oct": 10, "nov": 11, "dec": 12,
}
DATE_FORMATS = ("ddmmyyyy", "mmddyyyy", "yyyy-mm-dd", "yyyymmdd", "monthname")
_SEPARATORS = re.compile(r"[-/:.\s]")
_MONTHNAME_RE = re.compile(r"^\s*([A-Za-z]+)\.?\s+(\d{1,2})(?:st|nd|rd|th)?\s*,?\s*(\d{4})\s*$")


def _to_int(year: int, month: int, day: int, raw: str) -> int:
    try:
        datetime.date(year, month, day)
    except ValueError:
        raise ParseError(f"{raw!r} is not a valid calendar date") from None
    return year * 10000 + month * 100 + day


def normalize_date(s: str, input_format: str) -> int:
    """Parse ``s`` under ``input_format`` into a ``yyyymmdd`` integer.

    Numeric formats accept the separators ``-``, ``/``, ``:`` (and ``.``
    or spaces), which are removed before the fields are read.
    """
    if input_format not in DATE_FORMATS:
        raise ParseError(f"unknown date format {input_format!r}")
    if input_format == "monthname":
        m = _MONTHNAME_RE.match(s)
        if not m or m.group(1).lower() not in MONTHS:
            raise ParseError(f"cannot parse {s!r} as 'MonthName day, year'")
        return _to_int(int(m.group(3)), MONTHS[m.group(1).lower()], int(m.group(2)), s)

    if input_format in ("ddmmyyyy", "mmddyyyy") and re.search(r"[-/:.\s]", s.strip()):
        parts = [p for p in _SEPARATORS.split(s.strip()) if p]
        if len(parts) != 3 or not all(p.isdigit() for p in parts):
            raise ParseError(f"cannot parse {s!r} as {input_format}")
        digits = parts[0].zfill(2) + parts[1].zfill(2) + parts[2]
    else:
        digits = _SEPARATORS.sub("", s)
    if len(digits) != 8 or not digits.isdigit():
        raise ParseError(f"cannot parse {s!r} as {input_format}")
    if input_format == "ddmmyyyy":
        d, mo, y = int(digits[:2]), int(digits[2:4]), int(digits[4:])
    elif input_format == "mmddyyyy":
        mo, d, y = int(digits[:2]), int(digits[2:4]), int(digits[4:])
    else:
        y, mo, d = int(digits[:4]), int(digits[4:6]), int(digits[6:])
    return _to_int(y, mo, d, s)


def _as_date(d: int) -> datetime.date:
    return datetime.date(d // 10000, d // 100 % 100, d % 100)


def date_similarity(d1: int, d2: int) -> float:
    return 1.0 / (1.0 + abs((_as_date(d1) - _as_date(d2)).days))


# ---------------------------------------------------------------------------
# categorical


class PairTable:
    """Symmetric lookup of user-defined scores between two values.

    Used both for category tables and for alias tables.
    """

    reflexive = False

    def __init__(self, scores: Optional[Mapping[tuple, float]] = None):
        self._scores: dict[tuple, float] = {}
        for (x, y), v in (scores or {}).items():
            self.set(x, y, v)

    def set(self, x, y, value):
        value = float(value)
        if not 0.0 <= value <= 1.0:
            raise ConfigError(f"score for ({x!r}, {y!r}) must lie in [0, 1], got {value}")
        if self.reflexive and x == y and value != 1.0:
            raise ConfigError(f"diagonal score for {x!r} must be 1")
        old = self._scores.get((y, x))
        if old is not None and old != value and x != y:
            raise ConfigError(f"conflicting scores for ({x!r}, {y!r}): {old} vs {value}")
        self._scores[(x, y)] = value
        self._scores[(y, x)] = value

    def get(self, x, y):
        if self.reflexive and x == y:
            return 1.0
        return self._scores.get((x, y))

    def __contains__(self, pair):
        return self.get(*pair) is not None

    def __len__(self):
        return len(self._scores)

    @classmethod
    def load(cls, path):
        """Read ``value1 TAB value2 TAB score`` lines ('#' starts a comment)."""
        table = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.startswith("#"):
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise ConfigError(f"{path}:{lineno}: expected 3 tab-separated fields")
                try:
                    score = float(parts[2])
                except ValueError:
                    raise ConfigError(f"{path}:{lineno}: bad score {parts[2]!r}") from None
                table.set(parts[0], parts[1], score)
        return table


class CategoryTable(PairTable):
    reflexive = True


def categorical_similarity(c1, c2, table: Optional[CategoryTable] = None) -> float:
    if c1 == c2:
        return 1.0
    if table is None:
        return 0.0
    v = table.get(c1, c2)
    return 0.0 if v is None else v
