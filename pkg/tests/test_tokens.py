import pytest
from hypothesis import given, strategies as st

from gazner.corpus import Document
from gazner.tokens import Tokenizer, load_lemma_exceptions, normalize, split_sentences, tokenize


def spans(tokens):
    return [(t.text, t.start, t.end) for t in tokens]


def test_sanofi_wins():
    toks = tokenize(Document("d", "Sanofi wins."))
    # hand-counted: S0..5, space 6, w7..10, '.' 11
    assert spans(toks) == [("Sanofi", 0, 6), ("wins", 7, 11), (".", 11, 12)]
    assert [t.is_punct for t in toks] == [False, False, True]


def test_whitespace_only():
    assert tokenize("   \n\t ") == []


def test_j_and_j():
    assert spans(tokenize("J & J")) == [("J", 0, 1), ("&", 2, 3), ("J", 4, 5)]


def test_trailing_punct_and_abbreviations():
    toks = tokenize("Bayer GmbH, Sanofi Ltd. and U.S. sales.")
    assert [t.text for t in toks] == ["Bayer", "GmbH", ",", "Sanofi", "Ltd.", "and", "U.S.", "sales", "."]


def test_stop_words_flagged_not_removed():
    toks = tokenize("Sanofi and the board")
    assert [t.text for t in toks] == ["Sanofi", "and", "the", "board"]
    assert [t.is_stop for t in toks] == [False, True, True, False]
    custom = tokenize("Sanofi and the board", stop_words={"board"})
    assert [t.is_stop for t in custom] == [False, False, False, True]


@pytest.mark.parametrize(
    "surface, expected",
    [("Ltd.", "ltd"), ("Pharmaceuticals", "pharmaceutical"), ("Sanofi", "sanofi"),
     ("Companies", "company"), ("Sanofi's", "sanofi"), ("Novartis", "novartis"), ("news", "news")],
)
def test_normalize(surface, expected):
    assert normalize(surface) == expected


def test_lemma_table_fixture(tmp_path):
    p = tmp_path / "lemmas.tsv"
    p.write_text("Biologics\tbiologic-drug\n")
    table = load_lemma_exceptions(p)
    assert normalize("Biologics", table) == "biologic-drug"
    assert Tokenizer(lemma_exceptions=table)("Biologics")[0].norm == "biologic-drug"
    bad = tmp_path / "bad.tsv"
    bad.write_text("onlyone\n")
    with pytest.raises(ValueError, match="bad.tsv:1"):
        load_lemma_exceptions(bad)


text_strategy = st.lists(
    st.sampled_from(list("abcXYZ .,&!?'()-\n\t") + ["Ltd.", "U.S.", "é", "ß", "J"]), max_size=40
).map("".join)


@given(text_strategy)
def test_offset_fidelity_and_order(text):
    toks = tokenize(text)
    for t in toks:
        assert 0 <= t.start < t.end <= len(text)
        assert text[t.start : t.end] == t.text
    for a, b in zip(toks, toks[1:]):
        assert a.end <= b.start
    # skipped characters are whitespace only
    covered = set()
    for t in toks:
        covered.update(range(t.start, t.end))
    assert all(text[i].isspace() for i in range(len(text)) if i not in covered)
    assert tokenize(text) == toks


def test_offset_fidelity_on_fixture(article_doc, synthetic):
    docs = [article_doc.text] + [d["text"] for d in synthetic["docs"]]
    for text in docs:
        for t in tokenize(text):
            assert text[t.start : t.end] == t.text


def test_sentence_split():
    text = "Sanofi wins. Gilead loses."
    assert split_sentences(text) == [(0, 12), (13, 26)]


def test_sentence_split_respects_abbreviations():
    text = "Sanofi Pharmaceuticals Ltd. Spain reported gains. Shares rose!"
    assert [text[s:e] for s, e in split_sentences(text)] == [
        "Sanofi Pharmaceuticals Ltd. Spain reported gains.",
        "Shares rose!",
    ]


def test_sentence_split_needs_capital_or_digit():
    assert len(split_sentences("It fell. then rose.")) == 1
    assert len(split_sentences("It fell. 2020 was bad.")) == 2
