import pytest

from cdcr.corpus import Document, tokenize
from cdcr.errors import ConfigError, DataError
from cdcr.extract import (EntityType, ExtractConfig, Gazetteer, Mention, apply_grammar,
                          extract_mentions, gazetteer_lookup)

OBAMA = "Obama was born on August 4, 1961, at Gynecological Hospital in Honolulu."


def surfaces(mentions):
    return [(m.surface, m.type.major) for m in mentions]


def test_gazetteer_direct_lookup():
    gaz = Gazetteer.from_mapping({"barack obama": "person"})
    ms = gazetteer_lookup(tokenize("Barack Obama spoke"), gaz)
    assert surfaces(ms) == [("Barack Obama", "person")]


def test_gazetteer_longest_match():
    gaz = Gazetteer.from_mapping({"new york": "location", "new york city": "location"})
    ms = gazetteer_lookup(tokenize("New York City"), gaz)
    assert surfaces(ms) == [("New York City", "location")]


def test_empty_gazetteer():
    assert gazetteer_lookup(tokenize("Barack Obama spoke"), Gazetteer()) == []


def test_gazetteer_file(tmp_path):
    p = tmp_path / "g.tsv"
    p.write_text("# name\ttype\nHonolulu\tlocation\tcity\nAcme\torganization\n")
    gaz = Gazetteer.load(p)
    assert gaz.lookup("honolulu") == EntityType("location", "city")
    p.write_text("Acme\tplanet\n")
    with pytest.raises(ConfigError):
        Gazetteer.load(p)


def test_entity_type_validation():
    with pytest.raises(DataError):
        EntityType("planet")


@pytest.mark.parametrize("text,want", [
    ("August 4, 1961", [("August 4, 1961", "date")]),
    ("It rose 45% today", [("45%", "percent")]),
    ("Senator Obama arrived", [("Senator Obama", "person")]),
    ("it cost $1,250.50 in total", [("$1,250.50", "money")]),
    ("we met at 14:30 sharp", [("14:30", "time")]),
    ("due on 2020-01-31 now", [("2020-01-31", "date")]),
    ("then B. Obama spoke", [("B. Obama", "person")]),
    ("then Acme Corp said", [("Acme Corp", "organization")]),
])
def test_grammar_rules(text, want):
    assert surfaces(apply_grammar(tokenize(text))) == want


def test_obama_sentence_with_gazetteer():
    gaz = Gazetteer.from_mapping({"obama": "person", "honolulu": "location",
                                  "gynecological hospital": "organization"})
    ms = extract_mentions(Document("d", body=OBAMA), gaz)
    assert surfaces(ms) == [("Obama", "person"), ("August 4, 1961", "date"),
                            ("Gynecological Hospital", "organization"), ("Honolulu", "location")]
    for m in ms:
        assert OBAMA[m.span[0]:m.span[1]] == m.surface


def test_metonymy_sentence():
    gaz = Gazetteer.from_mapping({"world cup": "organization"})
    ms = extract_mentions(Document("d", body="The World Cup took place in England"), gaz)
    assert surfaces(ms)[0] == ("World Cup", "organization")
    assert ("England", "person") in surfaces(ms)


def test_empty_body():
    assert extract_mentions(Document("d", body="")) == []


def test_context_window_at_document_start():
    ms = extract_mentions(Document("d", body="We met Anna Berg near the old mill gate today"),
                          config=ExtractConfig(context_window=3))
    (m,) = ms
    assert m.left_context == ("We", "met")
    assert m.right_context == ("near", "the", "old")


def test_mention_ids_and_roundtrip():
    doc = Document("doc7", doc_type="story", timestamp=20200101, body="Then Anna Berg left.")
    (m,) = extract_mentions(doc)
    assert m.id == "doc7:5-14"
    assert Mention.from_dict(m.to_dict()) == m
    assert m.doc_type == "story" and m.timestamp == 20200101


def test_sentence_initial_word_is_skipped():
    ms = extract_mentions(Document("d", body="Yesterday Anna Berg left. Nobody cared."))
    assert surfaces(ms) == [("Anna Berg", "person")]


def test_lone_month_is_not_a_name():
    assert extract_mentions(Document("d", body="it happened in March and later")) == []


def test_config_validation():
    with pytest.raises(ConfigError):
        ExtractConfig(context_window=-1)
    with pytest.raises(ConfigError):
        ExtractConfig(default_type="planet")
