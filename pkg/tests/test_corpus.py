import json

import pytest

from cdcr.corpus import (Document, IngestReport, analyze_format, read_corpus, strip_markup,
                         tokenize)
from cdcr.errors import IngestError


def test_markup_is_stripped():
    assert analyze_format("<b>Obama</b> spoke", "markup").body == "Obama spoke"
    assert strip_markup("a &amp; b &lt;c&gt; &quot;d&quot; &apos;e&apos;") == "a & b <c> \"d\" 'e'"


def test_plain_is_identity():
    assert analyze_format("abc", "plain").body == "abc"


def test_jsonl_record_fields():
    d = analyze_format(json.dumps({"id": "d1", "type": "story", "body": "x"}), "jsonl-record")
    assert (d.id, d.doc_type, d.body, d.timestamp) == ("d1", "story", "x", None)
    d = analyze_format('{"id": "d2", "date": "2020-01-31", "headline": "H", "body": ""}',
                       "jsonl-record")
    assert d.timestamp == 20200131 and d.headline == "H"


@pytest.mark.parametrize("raw", ['{"body": "x"}', "{not json", '{"id": ""}'])
def test_bad_jsonl_record_names_the_record(raw):
    with pytest.raises(IngestError, match="rec7"):
        analyze_format(raw, "jsonl-record", source="rec7")


def test_doc_block_markup():
    raw = ('<DOC id="APW19980304.0001" type="story"><HEADLINE>Big <i>news</i></HEADLINE>'
           "<TEXT><P>Obama spoke.</P></TEXT></DOC>")
    d = analyze_format(raw, "markup")
    assert d.id == "APW19980304.0001"
    assert d.doc_type == "story"
    assert d.timestamp == 19980304
    assert d.headline == "Big news"
    assert d.body == "Obama spoke."
    assert "<" not in d.body


def test_tokenize_examples():
    toks = tokenize("August 4, 1961")
    assert [(t.text, t.kind) for t in toks] == [("August", "word"), ("4", "number"),
                                                 (",", "punctuation"), ("1961", "number")]
    assert tokenize("") == []
    assert [(t.text, t.kind) for t in tokenize("U.S.")] == [
        ("U", "word"), (".", "punctuation"), ("S", "word"), (".", "punctuation")]


@pytest.mark.parametrize("body", ["Obama was born on August 4, 1961, at Gynecological Hospital.",
                                  "  spaced\tout\n text  ", "ünïcode wörds ß dash", ""])
def test_tokenize_is_lossless(body):
    toks = tokenize(body)
    pos = 0
    rebuilt = []
    for t in toks:
        assert t.start >= pos
        rebuilt.append(body[pos:t.start])
        assert body[t.start:t.end] == t.text
        assert not body[pos:t.start].strip()
        rebuilt.append(t.text)
        pos = t.end
    rebuilt.append(body[pos:])
    assert "".join(rebuilt) == body


def test_empty_id_rejected():
    with pytest.raises(IngestError):
        Document(id="")


def test_read_directory_and_invalid_utf8(tmp_path):
    (tmp_path / "sub").mkdir()
    (tmp_path / "a.txt").write_text("Alpha text")
    (tmp_path / "sub" / "b.txt").write_bytes(b"bad \xff byte")
    report = IngestReport()
    docs = read_corpus(tmp_path, report=report)
    assert [d.id for d in docs] == ["a.txt", "sub/b.txt"]
    assert docs[1].body == "bad � byte"
    assert report.replaced_bytes == 1
    assert report.files == 2


def test_read_jsonl_and_duplicates(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text('{"id": "a", "body": "x"}\n\n{"id": "b", "body": "y"}\n')
    assert [d.id for d in read_corpus(p)] == ["a", "b"]
    p.write_text('{"id": "a", "body": "x"}\n{"id": "a", "body": "y"}\n')
    with pytest.raises(IngestError, match="duplicate"):
        read_corpus(p)


def test_read_markup_file_with_several_docs(tmp_path):
    p = tmp_path / "c.sgml"
    p.write_text('<DOC id="x1"><TEXT>One</TEXT></DOC>\n<DOC id="x2"><TEXT>Two</TEXT></DOC>')
    assert [(d.id, d.body) for d in read_corpus(p)] == [("x1", "One"), ("x2", "Two")]


def test_missing_corpus():
    with pytest.raises(IngestError):
        read_corpus("/no/such/path")
