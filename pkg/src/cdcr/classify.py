"""Pair featurisation, similarity scoring and threshold decisions."""

import enum
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Optional

import numpy as np
import yaml

from . import simfns
from .errors import ConfigError, EncodingError, ScoringError

LEVELS = ("entity", "document", "metadata")

_PUNCT_RE = re.compile(r"[^\w\s]|_")
_SPACE_RE = re.compile(r"\s+")


def normalize_surface(s: str) -> str:
    """Lowercase, drop punctuation, collapse whitespace."""
    return _SPACE_RE.sub(" ", _PUNCT_RE.sub(" ", s.lower())).strip()


def _first_soundex(surface):
    for tok in simfns.default_tokens(surface):
        try:
            return simfns.soundex(tok)
        except EncodingError:
            continue
    return None


_CODE_RE = re.compile(r"[a-z]\d{3}")


def _as_code(value):
    # feature values are already codes; raw strings get encoded
    return value if _CODE_RE.fullmatch(value) else simfns.soundex(value)


def _context(m, doc):
    words = [t.lower() for t in (*m.left_context, *m.right_context) if t[:1].isalnum()]
    return " ".join(words)


def _doc_attr(name):
    def get(m, doc):
        if doc is not None:
            value = getattr(doc, name)
        else:
            value = getattr(m, name, None)
        return value if value not in ("", None) else None
    return get


@dataclass(frozen=True)
class Feature:
    name: str
    level: str
    extract: Callable
    function: str


FEATURES = {
    f.name: f for f in (
        Feature("surface", "entity", lambda m, doc: m.surface, "jaro_winkler"),
        Feature("normalized", "entity", lambda m, doc: normalize_surface(m.surface), "qgram"),
        Feature("soundex", "entity", lambda m, doc: _first_soundex(m.surface), "phonetic_equal"),
        Feature("context", "document", _context, "jaccard"),
        Feature("headline", "document", _doc_attr("headline"), "jaccard"),
        Feature("body", "document", lambda m, doc: doc.body if doc is not None and doc.body else None,
                "tfidf_cosine"),
        Feature("doc_type", "metadata", _doc_attr("doc_type"), "categorical"),
        Feature("date", "metadata", _doc_attr("timestamp"), "date_similarity"),
    )
}
DEFAULT_ENABLED = ("surface", "normalized")


@dataclass
class FeatureVector:
    entity_level: dict = field(default_factory=dict)
    document_level: dict = field(default_factory=dict)
    metadata_level: dict = field(default_factory=dict)

    def values(self) -> dict:
        return {**self.entity_level, **self.document_level, **self.metadata_level}

    def to_dict(self):
        return {"entity": self.entity_level, "document": self.document_level,
                "metadata": self.metadata_level}

    @classmethod
    def from_dict(cls, d):
        return cls(dict(d.get("entity", {})), dict(d.get("document", {})), dict(d.get("metadata", {})))


def featurize(m, doc=None, registry: Optional[Mapping[str, Feature]] = None) -> FeatureVector:
    """Compute every feature in ``registry`` for mention ``m``.

    Features whose source is missing (no timestamp, no headline, ...) are
    left out rather than defaulted.
    """
    registry = FEATURES if registry is None else registry
    fv = FeatureVector()
    slots = {"entity": fv.entity_level, "document": fv.document_level, "metadata": fv.metadata_level}
    for feat in registry.values():
        value = feat.extract(m, doc)
        if value is not None:
            slots[feat.level][feat.name] = value
    return fv


# ---------------------------------------------------------------------------
# similarity function registry

STRING_FUNCTIONS = {"jaro_winkler", "jaro", "edit_similarity", "qgram", "jaccard",
                    "tfidf_cosine", "phonetic_equal", "exact"}


def _make_function(name, params, stats, category_table):
    params = dict(params or {})
    if name == "jaro_winkler":
        scale = params.pop("prefix_scale", 0.1)
        simfns.jaro_winkler("", "", scale)  # validates the range
        fn = lambda a, b: simfns.jaro_winkler(a, b, scale)
    elif name == "jaro":
        fn = simfns.jaro
    elif name == "edit_similarity":
        fn = simfns.edit_similarity
    elif name == "qgram":
        cfg = simfns.QGramConfig(params.pop("q", 2), params.pop("denominator", "maximum"))
        grams = {}

        def gram_of(s):
            g = grams.get(s)
            if g is None:
                qs = simfns.qgrams(s, cfg.q)
                g = grams[s] = (Counter(qs), len(qs))
            return g

        def fn(a, b):
            ga, na = gram_of(a)
            gb, nb = gram_of(b)
            return simfns.qgram_overlap(ga, gb, na, nb, cfg.denominator)
    elif name == "jaccard":
        fn = simfns.jaccard
    elif name == "tfidf_cosine":
        if stats is None:
            raise ConfigError("tfidf_cosine needs corpus statistics")
        fn = lambda a, b: simfns.tfidf_cosine(a, b, stats)
    elif name == "phonetic_equal":
        fn = lambda a, b: 1.0 if _as_code(a) == _as_code(b) else 0.0
    elif name == "exact":
        fn = lambda a, b: 1.0 if a == b else 0.0
    elif name == "date_similarity":
        fn = simfns.date_similarity
    elif name == "relative_distance":
        fn = simfns.relative_distance
    elif name == "categorical":
        fn = lambda a, b: simfns.categorical_similarity(a, b, category_table)
    else:
        raise ConfigError(f"unknown similarity function {name!r}")
    if params:
        raise ConfigError(f"unexpected parameters for {name}: {sorted(params)}")
    return fn


FUNCTION_NAMES = ("jaro_winkler", "jaro", "edit_similarity", "qgram", "jaccard", "tfidf_cosine",
                  "phonetic_equal", "exact", "date_similarity", "relative_distance", "categorical")


# ---------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class FeatureSpec:
    function: str
    weight: float = 1.0
    params: dict = field(default_factory=dict)


@dataclass
class ClassifierConfig:
    features: dict = field(default_factory=dict)
    lower: float = 0.5
    upper: float = 0.5
    category_table: Optional[str] = None
    alias_table: Optional[str] = None

    def __post_init__(self):
        if not self.features:
            self.features = {n: FeatureSpec(FEATURES[n].function) for n in DEFAULT_ENABLED}
        validate_thresholds(self.lower, self.upper)
        for name, spec in self.features.items():
            if name not in FEATURES:
                raise ConfigError(f"unknown feature {name!r}")
            if spec.function not in FUNCTION_NAMES:
                raise ConfigError(f"unknown similarity function {spec.function!r} for {name}")
            if not (spec.weight >= 0 and math.isfinite(spec.weight)):
                raise ConfigError(f"weight of {name} must be a finite non-negative number")
        if math.fsum(s.weight for s in self.features.values()) <= 0:
            raise ConfigError("at least one enabled feature needs a positive weight")

    @classmethod
    def from_mapping(cls, d: Mapping, base_dir=None):
        d = dict(d or {})
        feats = {}
        raw = d.get("features") or {}
        if isinstance(raw, (list, tuple)):
            raw = {name: {} for name in raw}
        for name, spec in raw.items():
            spec = dict(spec or {})
            if name not in FEATURES:
                raise ConfigError(f"unknown feature {name!r}")
            feats[name] = FeatureSpec(spec.get("function", FEATURES[name].function),
                                      float(spec.get("weight", 1.0)), dict(spec.get("params") or {}))
        lower, upper = d.get("lower", 0.5), d.get("upper", 0.5)
        if "threshold" in d:
            lower = upper = d["threshold"]

        def resolve(p):
            if p is None or base_dir is None:
                return p
            return str(Path(base_dir) / p)

        unknown = set(d) - {"features", "lower", "upper", "threshold", "category_table", "alias_table"}
        if unknown:
            raise ConfigError(f"unknown classifier settings: {sorted(unknown)}")
        return cls(feats, float(lower), float(upper), resolve(d.get("category_table")),
                   resolve(d.get("alias_table")))

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except (OSError, yaml.YAMLError) as e:
            raise ConfigError(f"cannot read classifier config {path}: {e}") from None
        return cls.from_mapping(data, base_dir=Path(path).parent)

    def to_mapping(self):
        return {
            "features": {n: {"function": s.function, "weight": s.weight, "params": dict(s.params)}
                         for n, s in self.features.items()},
            "lower": self.lower, "upper": self.upper,
            "category_table": self.category_table, "alias_table": self.alias_table,
        }

    def with_thresholds(self, lower=None, upper=None):
        return ClassifierConfig(dict(self.features),
                                self.lower if lower is None else lower,
                                self.upper if upper is None else upper,
                                self.category_table, self.alias_table)


def validate_thresholds(lower, upper):
    if not (0.0 <= lower <= upper <= 1.0):
        raise ConfigError(f"thresholds must satisfy 0 <= lower <= upper <= 1, got {lower}, {upper}")


# ---------------------------------------------------------------------------
# scoring


@dataclass(frozen=True)
class PairScore:
    pair: object
    per_feature: dict
    combined: float


class Scorer:
    """Scores feature-value dictionaries under a classifier config."""

    def __init__(self, config: ClassifierConfig, stats: Optional[simfns.CorpusStats] = None,
                 category_table=None, alias_table=None):
        self.config = config
        if category_table is None and config.category_table:
            category_table = simfns.CategoryTable.load(config.category_table)
        if alias_table is None and config.alias_table:
            alias_table = simfns.PairTable.load(config.alias_table)
        self.names = sorted(config.features)
        self.weights = [config.features[n].weight for n in self.names]
        self.functions = []
        for n in self.names:
            spec = config.features[n]
            fn = _make_function(spec.function, spec.params, stats, category_table)
            if alias_table is not None and spec.function in STRING_FUNCTIONS:
                fn = _with_aliases(fn, alias_table)
            self.functions.append(fn)

    def score(self, va: Mapping, vb: Mapping):
        """Return ``(combined, {feature: score})`` over features present on both sides."""
        per = {}
        num = den = 0.0
        for name, w, fn in zip(self.names, self.weights, self.functions):
            a, b = va.get(name), vb.get(name)
            if a is None or b is None:
                continue
            s = fn(a, b)
            per[name] = s
            num += w * s
            den += w
        if not per or den <= 0:
            raise ScoringError("no enabled feature is present on both mentions")
        return min(1.0, num / den), per

    def score_many(self, va: Mapping, others):
        """Score ``va`` against each of ``others`` at once.

        Returns ``(combined, per_feature)`` arrays; per-feature columns follow
        ``self.names`` and hold NaN where a feature is absent. ``combined`` is
        NaN for pairs with no common feature. Arithmetic matches ``score``
        operation for operation, so both paths agree bit for bit.
        """
        n = len(others)
        num = np.zeros(n)
        den = np.zeros(n)
        feats = np.full((n, len(self.names)), np.nan)
        for k, (name, w, fn) in enumerate(zip(self.names, self.weights, self.functions)):
            a = va.get(name)
            if a is None:
                continue
            col = np.array([np.nan if (b := o.get(name)) is None else fn(a, b) for o in others],
                           dtype=np.float64)
            feats[:, k] = col
            ok = ~np.isnan(col)
            num[ok] += w * col[ok]
            den[ok] += w
        with np.errstate(invalid="ignore", divide="ignore"):
            combined = np.where(den > 0, num / np.where(den > 0, den, 1.0), np.nan)
        return np.minimum(combined, 1.0), feats


def _with_aliases(fn, table):
    def aliased(a, b):
        v = table.get(a, b)
        return fn(a, b) if v is None else v
    return aliased


def score_pair(a: FeatureVector, b: FeatureVector, config: Optional[ClassifierConfig] = None,
               stats=None, pair=None, scorer: Optional[Scorer] = None) -> PairScore:
    scorer = scorer or Scorer(config or ClassifierConfig(), stats)
    combined, per = scorer.score(a.values(), b.values())
    return PairScore(pair, per, combined)


# ---------------------------------------------------------------------------
# decisions


class Verdict(str, enum.Enum):
    NON_COREFERENT = "nonCoreferent"
    POSSIBLE = "possible"
    COREFERENT = "coreferent"

    @property
    def code(self):
        return VERDICT_CODES[self]


VERDICT_CODES = {Verdict.NON_COREFERENT: 0, Verdict.POSSIBLE: 1, Verdict.COREFERENT: 2}
VERDICTS_BY_CODE = {v: k for k, v in VERDICT_CODES.items()}


@dataclass(frozen=True)
class PairDecision:
    pair: object
    verdict: Verdict
    combined: float


def verdict_for(combined: float, lower: float = 0.5, upper: float = 0.5) -> Verdict:
    if combined >= upper:
        return Verdict.COREFERENT
    if combined < lower:
        return Verdict.NON_COREFERENT
    return Verdict.POSSIBLE


def decide(score: PairScore, lower: float = 0.5, upper: float = 0.5) -> PairDecision:
    """Two-threshold decision: ``>= upper`` coreferent, ``< lower`` not, else possible."""
    validate_thresholds(lower, upper)
    return PairDecision(score.pair, verdict_for(score.combined, lower, upper), score.combined)


def decide_codes(combined: np.ndarray, lower: float = 0.5, upper: float = 0.5) -> np.ndarray:
    """Vectorised ``decide``: verdict codes 0 (non), 1 (possible), 2 (coreferent)."""
    validate_thresholds(lower, upper)
    combined = np.asarray(combined, dtype=np.float64)
    out = np.ones(combined.shape, dtype=np.uint8)
    out[combined >= upper] = 2
    out[combined < lower] = 0
    return out


def write_review(path, rows):
    """Write ``pair-id TAB combined TAB verdict TAB feature=score ...`` lines."""
    with open(path, "w", encoding="utf-8") as fh:
        for pair_id, combined, verdict, per in rows:
            feats = " ".join(f"{k}={v:.6f}" for k, v in sorted(per.items()))
            fh.write(f"{pair_id}\t{combined:.6f}\t{Verdict(verdict).value}\t{feats}\n")
