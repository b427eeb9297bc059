"""Synthetic corpora with exact gold labels.

Entity names are built from generated syllable words, each word used by
one entity only. Mentions are embedded in lowercase template sentences
so that the capitalisation heuristic recovers exactly the gold spans.
"""

import json
import random
from dataclasses import dataclass
from pathlib import Path

from ..classify import ClassifierConfig, Scorer, normalize_surface
from ..evaluation import GoldStandard
from ..extract import _NOT_NAMES, DESIGNATORS, TITLES

_ONSETS = ("b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z",
           "br", "dr", "gr", "kr", "st", "tr", "sh", "ch")
_VOWELS = ("a", "e", "i", "o", "u", "ai", "ou")
_CODAS = ("", "", "", "n", "r", "l", "s", "m", "x")
_LETTERS = "abcdefghijklmnopqrstuvwxyz"

TEMPLATES = (
    "Reports say that {} met with officials on the issue.",
    "Officials said {} would attend the meeting.",
    "The talks involving {} continued for hours.",
    "Critics of {} raised new concerns this week.",
    "Earlier, the board heard from {} about the plan.",
    "Observers expect {} to respond soon.",
    "The agreement with {} was signed after a long debate.",
    "Sources close to {} declined to comment.",
    "Analysts noted that {} had changed course.",
    "In a statement, {} thanked the volunteers.",
)
ORG_DESIGNATORS = ("Corp", "Inc", "Ltd")
SEPARATION = 0.45  # max default score between two canonical names of one type


@dataclass(frozen=True)
class NoiseModel:
    typo_rate: float = 0.0
    abbreviation_rate: float = 0.0
    reorder_rate: float = 0.0

    def __post_init__(self):
        for name in ("typo_rate", "abbreviation_rate", "reorder_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True)
class SynthEntity:
    id: str
    type: str  # person | organization
    words: tuple  # name words, without designator
    designator: str = ""

    @property
    def name(self):
        return " ".join(self.words + ((self.designator,) if self.designator else ()))


@dataclass
class SynthCorpus:
    records: list  # JSON-ready document records
    gold: GoldStandard
    entities: list
    canonical: dict  # mention id -> canonical name of its entity
    surfaces: dict  # mention id -> surface

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n")
        with open(out / "gold.tsv", "w", encoding="utf-8") as fh:
            for mid, eid in self.gold.mention_labels.items():
                fh.write(f"{mid}\t{eid}\n")
        with open(out / "gold_mentions.tsv", "w", encoding="utf-8") as fh:
            for doc, start, end, typ in sorted(self.gold.gold_mentions):
                fh.write(f"{doc}\t{start}\t{end}\t{typ}\n")
        return out


def _word(rng, used):
    reserved = _NOT_NAMES | TITLES | set(DESIGNATORS)
    while True:
        n = rng.choice((2, 2, 3))
        w = "".join(rng.choice(_ONSETS) + rng.choice(_VOWELS) + rng.choice(_CODAS) for _ in range(n))
        if len(w) >= 4 and w not in used and w not in reserved:
            used.add(w)
            return w.capitalize()


def _entities(rng, n, scorer):
    used = set()
    out = []
    by_type = {"person": [], "organization": []}
    for i in range(n):
        typ = "organization" if rng.random() < 0.3 else "person"
        while True:
            words = (_word(rng, used), _word(rng, used))
            ent = SynthEntity(f"G{i + 1:05d}", typ, words,
                              rng.choice(ORG_DESIGNATORS) if typ == "organization" else "")
            vec = {"surface": ent.name, "normalized": normalize_surface(ent.name)}
            if all(scorer.score(vec, other)[0] < SEPARATION for other in by_type[typ]):
                break
        by_type[typ].append(vec)
        out.append(ent)
    return out


def _typo(rng, word):
    """One random letter edit after the first character; always changes ``word``."""
    while True:
        ops = ["sub", "ins", "swap"] + (["del"] if len(word) > 3 else [])
        op = rng.choice(ops)
        i = rng.randrange(1, len(word))
        if op == "sub":
            new = word[:i] + rng.choice(_LETTERS) + word[i + 1:]
        elif op == "ins":
            new = word[:i] + rng.choice(_LETTERS) + word[i:]
        elif op == "del":
            new = word[:i] + word[i + 1:]
        else:
            if i + 1 >= len(word):
                continue
            new = word[:i] + word[i + 1] + word[i] + word[i + 2:]
        if new != word:
            return new


def _variant(rng, ent: SynthEntity, noise: NoiseModel) -> str:
    words = list(ent.words)
    abbreviated = rng.random() < noise.abbreviation_rate
    if rng.random() < noise.reorder_rate:
        words.reverse()
    if rng.random() < noise.typo_rate:
        k = rng.randrange(len(words))
        words[k] = _typo(rng, words[k])
    if abbreviated:
        if ent.type == "person":
            return f"{words[0][0]}. {words[-1]}"
        return "".join(w[0] for w in words) + " " + ent.designator
    return " ".join(words + ([ent.designator] if ent.designator else []))


def synth_corpus(seed: int, n_docs: int, n_entities: int, noise: NoiseModel = NoiseModel(),
                 mentions_per_doc=(3, 4)) -> SynthCorpus:
    """Documents mentioning synthetic entities, with gold labels and spans."""
    if n_docs < 1 or n_entities < 1:
        raise ValueError("n_docs and n_entities must be positive")
    rng = random.Random(seed)
    scorer = Scorer(ClassifierConfig())
    entities = _entities(rng, n_entities, scorer)
    gold = GoldStandard()
    records, canonical, surfaces = [], {}, {}
    for d in range(n_docs):
        doc_id = f"doc{d + 1:05d}"
        body = ""
        for _ in range(rng.randint(*mentions_per_doc)):
            ent = rng.choice(entities)
            surface = _variant(rng, ent, noise)
            template = rng.choice(TEMPLATES)
            prefix = (body + " " if body else "") + template[:template.index("{}")]
            start, end = len(prefix), len(prefix) + len(surface)
            body = prefix + surface + template[template.index("{}") + 2:]
            mid = f"{doc_id}:{start}-{end}"
            gold.mention_labels[mid] = ent.id
            gold.gold_mentions.add((doc_id, start, end, ent.type))
            canonical[mid] = ent.name
            surfaces[mid] = surface
        records.append({"id": doc_id, "type": "news", "date": f"2020-{d % 12 + 1:02d}-{d % 28 + 1:02d}",
                        "headline": None, "body": body})
    return SynthCorpus(records, gold, entities, canonical, surfaces)
