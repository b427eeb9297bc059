import random

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from cdcr.classify import (FEATURES, ClassifierConfig, FeatureSpec, FeatureVector, PairScore,
                           Scorer, Verdict, decide, decide_codes, featurize, normalize_surface,
                           score_pair, write_review)
from cdcr.corpus import Document
from cdcr.errors import ConfigError, ScoringError
from cdcr.extract import EntityType, Mention, extract_mentions
from cdcr.simfns import CorpusStats


def make_mention(surface, doc=None):
    doc = doc or Document("d", body=f"then {surface} spoke")
    return Mention("d:5-9", doc.id, surface, EntityType("person"), (5, 5 + len(surface)),
                   ("then",), ("spoke",), doc.doc_type, doc.timestamp, doc.headline)


def vec(**entity):
    return FeatureVector(entity_level=dict(entity))


def test_featurize_obama():
    doc = Document("d", body="then Barack Obama spoke")
    (m,) = extract_mentions(doc)
    fv = featurize(m, doc)
    assert fv.entity_level["surface"] == "Barack Obama"
    assert fv.entity_level["soundex"] == "b620"
    assert fv.entity_level["normalized"] == "barack obama"


def test_missing_metadata_is_absent():
    doc = Document("d", body="then Barack Obama spoke")
    (m,) = extract_mentions(doc)
    fv = featurize(m, doc)
    assert "date" not in fv.metadata_level
    assert "doc_type" not in fv.metadata_level
    assert "headline" not in fv.document_level
    dated = Document("d", doc_type="story", timestamp=20200101, body=doc.body)
    (m2,) = extract_mentions(dated)
    assert featurize(m2, dated).metadata_level == {"doc_type": "story", "date": 20200101}


def test_normalize_surface():
    assert normalize_surface("  B.  Obama ") == "b obama"


def test_identical_vectors_score_one():
    cfg = ClassifierConfig({n: FeatureSpec(FEATURES[n].function, w)
                            for n, w in [("surface", 3.0), ("normalized", 0.1), ("soundex", 7)]})
    v = vec(surface="Barack Obama", normalized="barack obama", soundex="b620")
    assert score_pair(v, v, cfg).combined == 1.0


def test_disjoint_vectors_score_zero():
    cfg = ClassifierConfig({"context": FeatureSpec("jaccard"), "soundex": FeatureSpec("phonetic_equal")})
    a = FeatureVector({"soundex": "b620"}, {"context": "red green"})
    b = FeatureVector({"soundex": "k500"}, {"context": "blue"})
    assert score_pair(a, b, cfg).combined == 0.0


def test_weighted_sum_two_features():
    cfg = ClassifierConfig({"surface": FeatureSpec("exact", 0.5), "normalized": FeatureSpec("qgram", 0.5)})
    s = score_pair(vec(surface="x", normalized="susan"), vec(surface="x", normalized="suzan"), cfg)
    assert s.per_feature == {"surface": 1.0, "normalized": 0.5}
    assert s.combined == 0.75


def test_absent_features_are_skipped_and_renormalised():
    cfg = ClassifierConfig({"surface": FeatureSpec("exact", 1.0), "date": FeatureSpec("date_similarity", 3.0)})
    a = FeatureVector({"surface": "x"}, {}, {"date": 20200101})
    b = FeatureVector({"surface": "x"})
    s = score_pair(a, b, cfg)
    assert s.per_feature == {"surface": 1.0} and s.combined == 1.0


def test_all_features_absent_is_a_scoring_error():
    cfg = ClassifierConfig({"date": FeatureSpec("date_similarity")})
    with pytest.raises(ScoringError):
        score_pair(vec(surface="a"), vec(surface="b"), cfg)


def test_default_config():
    cfg = ClassifierConfig()
    assert set(cfg.features) == {"surface", "normalized"}
    assert cfg.features["surface"].function == "jaro_winkler"
    assert (cfg.lower, cfg.upper) == (0.5, 0.5)


def test_default_functions_per_feature():
    want = {"surface": "jaro_winkler", "context": "jaccard", "body": "tfidf_cosine",
            "soundex": "phonetic_equal", "doc_type": "categorical", "date": "date_similarity"}
    assert {n: FEATURES[n].function for n in want} == want


def test_config_validation():
    with pytest.raises(ConfigError):
        ClassifierConfig(lower=0.7, upper=0.5)
    with pytest.raises(ConfigError):
        ClassifierConfig({"nope": FeatureSpec("exact")})
    with pytest.raises(ConfigError):
        ClassifierConfig({"surface": FeatureSpec("nope")})
    with pytest.raises(ConfigError):
        ClassifierConfig({"surface": FeatureSpec("exact", 0.0)})
    with pytest.raises(ConfigError):
        Scorer(ClassifierConfig({"surface": FeatureSpec("qgram", 1, {"bogus": 1})}))
    with pytest.raises(ConfigError):
        Scorer(ClassifierConfig({"body": FeatureSpec("tfidf_cosine")}))


def test_config_file(tmp_path):
    (tmp_path / "cats.tsv").write_text("story\tsport\t0.4\n")
    p = tmp_path / "clf.yaml"
    p.write_text("features:\n"
                 "  surface: {function: jaro_winkler, weight: 2, params: {prefix_scale: 0.2}}\n"
                 "  doc_type: {weight: 1}\n"
                 "threshold: 0.6\n"
                 "category_table: cats.tsv\n")
    cfg = ClassifierConfig.load(p)
    assert cfg.lower == cfg.upper == 0.6
    assert cfg.features["surface"].params == {"prefix_scale": 0.2}
    scorer = Scorer(cfg)
    a = FeatureVector({"surface": "abc"}, {}, {"doc_type": "story"})
    b = FeatureVector({"surface": "abc"}, {}, {"doc_type": "sport"})
    combined, per = scorer.score(a.values(), b.values())
    assert per["doc_type"] == 0.4
    assert combined == pytest.approx((2 * 1.0 + 0.4) / 3)
    p.write_text("features: {surface: {}}\nbogus: 1\n")
    with pytest.raises(ConfigError):
        ClassifierConfig.load(p)
    with pytest.raises(ConfigError):
        ClassifierConfig.load(tmp_path / "missing.yaml")


def test_alias_table_applies_before_functions(tmp_path):
    (tmp_path / "alias.tsv").write_text("Bill Clinton\tWilliam Clinton\t1.0\n")
    cfg = ClassifierConfig({"surface": FeatureSpec("jaro_winkler")}, alias_table=str(tmp_path / "alias.tsv"))
    s = score_pair(vec(surface="William Clinton"), vec(surface="Bill Clinton"), cfg)
    assert s.combined == 1.0


def test_tfidf_feature_with_stats():
    stats = CorpusStats.from_texts(["a b c", "a d", "e f"])
    cfg = ClassifierConfig({"body": FeatureSpec("tfidf_cosine")})
    a = FeatureVector({}, {"body": "a b c"})
    assert score_pair(a, a, cfg, stats).combined == 1.0


def test_decide_examples():
    s = lambda c: PairScore(None, {}, c)
    assert decide(s(0.5)).verdict is Verdict.COREFERENT
    assert decide(s(0.49)).verdict is Verdict.NON_COREFERENT
    assert decide(s(0.6), 0.5, 0.7).verdict is Verdict.POSSIBLE
    assert decide(s(0.7), 0.5, 0.7).verdict is Verdict.COREFERENT
    with pytest.raises(ConfigError):
        decide(s(0.6), 0.7, 0.5)


def test_decide_codes_agrees_with_decide():
    rng = np.random.default_rng(3)
    scores = np.concatenate([rng.random(500), [0.0, 0.3, 0.5, 0.7, 1.0]])
    for lower, upper in [(0.5, 0.5), (0.3, 0.7), (0.0, 1.0), (0.7, 0.7)]:
        codes = decide_codes(scores, lower, upper)
        for c, v in zip(codes, scores):
            assert c == decide(PairScore(None, {}, float(v)), lower, upper).verdict.code


@given(st.lists(st.floats(0, 1), min_size=1, max_size=50), st.floats(0, 1), st.floats(0, 1))
def test_threshold_monotonicity(scores, t1, t2):
    lo, hi = sorted((t1, t2))
    scores = np.array(scores)
    coref_hi = set(np.flatnonzero(decide_codes(scores, lo, hi) == 2))
    coref_lo = set(np.flatnonzero(decide_codes(scores, lo, lo) == 2))
    assert coref_hi <= coref_lo
    non_lo = set(np.flatnonzero(decide_codes(scores, lo, hi) == 0))
    non_hi = set(np.flatnonzero(decide_codes(scores, hi, hi) == 0))
    assert non_lo <= non_hi


NAMES = st.text(alphabet="abcdeABC .", min_size=1, max_size=14)


@given(NAMES, NAMES)
def test_score_symmetry(x, y):
    scorer = Scorer(ClassifierConfig({n: FeatureSpec(FEATURES[n].function)
                                      for n in ("surface", "normalized", "context")}))
    a = {"surface": x, "normalized": normalize_surface(x), "context": x}
    b = {"surface": y, "normalized": normalize_surface(y), "context": y}
    c1, p1 = scorer.score(a, b)
    c2, p2 = scorer.score(b, a)
    assert c1 == c2 and p1 == p2


@given(NAMES, NAMES, st.floats(0.01, 100))
def test_weight_scaling_invariance(x, y, k):
    def cfg(scale):
        return ClassifierConfig({"surface": FeatureSpec("jaro_winkler", 1.0 * scale),
                                 "normalized": FeatureSpec("qgram", 3.0 * scale)})
    a, b = vec(surface=x, normalized=x.lower()), vec(surface=y, normalized=y.lower())
    assert score_pair(a, b, cfg(k)).combined == pytest.approx(score_pair(a, b, cfg(1)).combined, abs=1e-12)


def test_identical_copy_is_coreferent_under_defaults():
    rng = random.Random(2)
    scorer = Scorer(ClassifierConfig())
    for _ in range(200):
        s = "".join(rng.choice("ab. XY") for _ in range(rng.randint(1, 12)))
        v = {"surface": s, "normalized": normalize_surface(s)}
        combined, _ = scorer.score(v, dict(v))
        assert decide(PairScore(None, {}, combined)).verdict is Verdict.COREFERENT


def test_score_many_matches_score_bit_for_bit():
    rng = random.Random(4)
    cfg = ClassifierConfig({"surface": FeatureSpec("jaro_winkler", 0.3),
                            "normalized": FeatureSpec("qgram", 0.7),
                            "date": FeatureSpec("date_similarity", 0.2)})
    scorer = Scorer(cfg)
    vals = []
    for _ in range(60):
        s = "".join(rng.choice("abcd ") for _ in range(rng.randint(1, 10)))
        v = {"surface": s, "normalized": s.strip()}
        if rng.random() < 0.5:
            v["date"] = 20200100 + rng.randint(1, 28)
        vals.append(v)
    for a in vals[:10]:
        combined, feats = scorer.score_many(a, vals)
        for k, b in enumerate(vals):
            want, per = scorer.score(a, b)
            assert combined[k] == want
            for j, name in enumerate(scorer.names):
                assert (np.isnan(feats[k, j]) and name not in per) or feats[k, j] == per[name]


def test_review_export(tmp_path):
    p = tmp_path / "review.tsv"
    write_review(p, [("a|b", 0.55, Verdict.POSSIBLE, {"surface": 0.6, "normalized": 0.5})])
    assert p.read_text() == "a|b\t0.550000\tpossible\tnormalized=0.500000 surface=0.600000\n"
