"""Scoring system output against gold clusterings and gold mentions."""

import json
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Optional

from .errors import EvaluationError, ParseError


@dataclass(frozen=True)
class MetricReport:
    precision: float
    recall: float
    f_measure: float
    tp: Optional[int] = None
    fp: Optional[int] = None
    fn: Optional[int] = None

    @classmethod
    def from_pr(cls, p, r, tp=None, fp=None, fn=None):
        return cls(p, r, f_measure(p, r), tp, fp, fn)

    def to_dict(self):
        return asdict(self)

    def format(self, name=""):
        prefix = f"{name}." if name else ""
        lines = [f"{prefix}precision: {self.precision:.6f}",
                 f"{prefix}recall: {self.recall:.6f}",
                 f"{prefix}f_measure: {self.f_measure:.6f}"]
        for k in ("tp", "fp", "fn"):
            v = getattr(self, k)
            if v is not None:
                lines.append(f"{prefix}{k}: {v}")
        return "\n".join(lines)


def f_measure(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


@dataclass
class GoldStandard:
    mention_labels: dict = field(default_factory=dict)  # mention id -> entity id
    gold_mentions: set = field(default_factory=set)  # (doc id, start, end, type)

    def clustering(self) -> dict:
        return dict(self.mention_labels)

    @classmethod
    def load(cls, labels_path=None, mentions_path=None):
        gold = cls()
        if labels_path is not None:
            for lineno, parts in _read_tsv(labels_path, 2):
                mid, eid = parts
                if not eid:
                    raise ParseError(f"{labels_path}:{lineno}: empty entity id")
                if mid in gold.mention_labels:
                    raise ParseError(f"{labels_path}:{lineno}: duplicate mention id {mid!r}")
                gold.mention_labels[mid] = eid
        if mentions_path is not None:
            for lineno, parts in _read_tsv(mentions_path, 4):
                doc, start, end, typ = parts
                try:
                    gold.gold_mentions.add((doc, int(start), int(end), typ))
                except ValueError:
                    raise ParseError(f"{mentions_path}:{lineno}: bad span") from None
        return gold


def _read_tsv(path, width):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != width:
                raise ParseError(f"{path}:{lineno}: expected {width} TAB-separated fields")
            yield lineno, parts


def as_labels(clustering) -> dict:
    """Normalise a clustering to ``{mention id: cluster id}``.

    Accepts a label mapping, an iterable of member collections, or
    objects with ``id`` and ``members`` (``EntityCluster``).
    """
    if isinstance(clustering, Mapping):
        return dict(clustering)
    out = {}
    for i, c in enumerate(clustering):
        cid, members = (c.id, c.members) if hasattr(c, "members") else (i, c)
        for m in members:
            if m in out:
                raise EvaluationError(f"mention {m!r} appears in more than one cluster")
            out[m] = cid
    return out


def _aligned(system, gold):
    sys_l, gold_l = as_labels(system), as_labels(gold)
    if sys_l.keys() != gold_l.keys():
        extra = sorted(sys_l.keys() - gold_l.keys())[:3]
        missing = sorted(gold_l.keys() - sys_l.keys())[:3]
        raise EvaluationError(f"mention sets differ (system only: {extra}, gold only: {missing})")
    return sys_l, gold_l


def _pairs_within(counts: Iterable[int]) -> int:
    return sum(n * (n - 1) // 2 for n in counts)


def link_f(system, gold) -> MetricReport:
    """Pairwise link precision/recall over all within-cluster mention pairs.

    With no system links precision is 1; with no gold links recall is 1.
    """
    sys_l, gold_l = _aligned(system, gold)
    joint = Counter((sys_l[m], gold_l[m]) for m in sys_l)
    common = _pairs_within(joint.values())
    n_sys = _pairs_within(Counter(sys_l.values()).values())
    n_gold = _pairs_within(Counter(gold_l.values()).values())
    p = common / n_sys if n_sys else 1.0
    r = common / n_gold if n_gold else 1.0
    return MetricReport.from_pr(p, r, common, n_sys - common, n_gold - common)


def bcubed(system, gold) -> MetricReport:
    """Per-mention B-cubed precision and recall, averaged with uniform weights."""
    sys_l, gold_l = _aligned(system, gold)
    if not sys_l:
        return MetricReport.from_pr(1.0, 1.0)
    sys_size = Counter(sys_l.values())
    gold_size = Counter(gold_l.values())
    joint = Counter((sys_l[m], gold_l[m]) for m in sys_l)
    # every mention in a (sys, gold) cell shares the same overlap size
    p_sum = sum(n * n / sys_size[s] for (s, g), n in joint.items())
    r_sum = sum(n * n / gold_size[g] for (s, g), n in joint.items())
    n = len(sys_l)
    return MetricReport.from_pr(p_sum / n, r_sum / n)


def identification_prf(system: Iterable[tuple], gold: Iterable[tuple],
                       match_mode: str = "exact-span") -> MetricReport:
    """Mention identification scores over ``(doc id, start, end, type)`` tuples.

    ``exact-span`` needs identical tuples; ``overlap`` pairs each system
    mention with at most one unused gold mention of the same document and
    type whose span intersects it. An empty system output has precision 0
    unless the gold set is empty too.
    """
    system = sorted(set(system))
    gold = sorted(set(gold.gold_mentions if isinstance(gold, GoldStandard) else gold))
    if match_mode == "exact-span":
        correct = len(set(system) & set(gold))
    elif match_mode == "overlap":
        by_key = defaultdict(list)
        for g in gold:
            by_key[(g[0], g[3])].append(g)
        used = set()
        correct = 0
        for doc, start, end, typ in system:
            for g in by_key[(doc, typ)]:
                if g not in used and g[1] < end and start < g[2]:
                    used.add(g)
                    correct += 1
                    break
    else:
        raise ValueError(f"unknown match mode {match_mode!r}")
    if not system and not gold:
        return MetricReport.from_pr(1.0, 1.0, 0, 0, 0)
    p = correct / len(system) if system else 0.0
    r = correct / len(gold) if gold else 0.0
    return MetricReport.from_pr(p, r, correct, len(system) - correct, len(gold) - correct)


def write_report(path, reports: Mapping[str, MetricReport], as_json=False):
    with open(path, "w", encoding="utf-8") as fh:
        if as_json:
            json.dump({k: r.to_dict() for k, r in reports.items()}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        else:
            fh.write("\n".join(r.format(k) for k, r in reports.items()) + "\n")
