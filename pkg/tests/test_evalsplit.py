import re

import pytest
from hypothesis import given, strategies as st

from gazner.annotate import EntitySpan, LabeledDataset, build_labeled_dataset, core_name
from gazner.corpus import Corpus, Document, load_corpus, load_gazetteer, load_non_entity_list
from gazner.evalsplit import (
    SplitError,
    SplitResult,
    entity_disjoint_split,
    portion_size,
    random_split,
    round_half_up,
    score,
)
from oracles import prf


@pytest.fixture(scope="module")
def synth_inputs(synthetic):
    corpus = load_corpus(synthetic["corpus"])
    nel = load_non_entity_list(synthetic["non_entity"])
    ph_org = load_gazetteer(synthetic["ph_org"], "PH_ORG")
    drug = load_gazetteer(synthetic["drug"], "DRUG")
    ds = build_labeled_dataset(corpus, [ph_org, drug], nel)
    return corpus, ds, ph_org, nel


def test_round_half_up():
    assert [round_half_up(x) for x in (0.5, 1.5, 2.5, 14.9, 15.0)] == [1, 2, 3, 15, 15]
    assert portion_size(50, 0.3) == 15
    assert portion_size(5, 0.5) == 3
    assert portion_size(2, 0.01) == 1
    assert portion_size(2, 0.99) == 1


def test_random_split_properties():
    corpus = Corpus(tuple(Document(f"d{i}", "x") for i in range(10)))
    a = random_split(corpus, 0.3, seed=1)
    assert len(a.test_ids) == 3 and len(a.train_ids) == 7
    assert set(a.train_ids) | set(a.test_ids) == set(corpus.ids)
    assert a == random_split(corpus, 0.3, seed=1)
    assert list(a.test_ids) == sorted(a.test_ids, key=corpus.ids.index)


@pytest.mark.parametrize("ratio", [0.0, 1.0, -0.1, 1.5])
def test_bad_ratio(ratio):
    corpus = Corpus((Document("a", "x"), Document("b", "y")))
    with pytest.raises(SplitError):
        random_split(corpus, ratio)


def _reverse(text, records):
    for r in sorted(records, key=lambda r: r.start, reverse=True):
        assert text[r.start : r.end] == r.new
        text = text[: r.start] + r.old + text[r.end :]
    return text


def test_entity_disjoint_guarantee(synth_inputs):
    corpus, ds, ph_org, nel = synth_inputs
    out = entity_disjoint_split(corpus, ds, ph_org, 0.3, seed=11, nel=nel)
    split = out.split
    assert len(split.test_ids) == 15
    assert len(split.train_ids) == 35
    assert set(split.train_ids).isdisjoint(split.test_ids)
    # brute force: core names of every training PH_ORG span, recomputed from scratch
    test_keys = {k.casefold() for k in split.test_entities}
    for doc_id in split.train_ids:
        for s in out.dataset[doc_id]:
            if s.label == "PH_ORG":
                assert core_name(s.surface, nel).casefold() not in test_keys, (doc_id, s)
    # no test-entity name survives anywhere in training text either
    names = [core_name(e, nel) for e in ph_org.entries]
    test_names = [n for n in names if n.casefold() in test_keys]
    assert test_names
    for doc_id in split.train_ids:
        text = out.corpus[doc_id].text
        for n in test_names:
            assert not re.search(rf"(?<!\w){re.escape(n)}(?!\w)", text), (doc_id, n)


def test_rewritten_documents_are_faithful(synth_inputs):
    corpus, ds, ph_org, nel = synth_inputs
    out = entity_disjoint_split(corpus, ds, ph_org, 0.3, seed=11, nel=nel)
    assert out.split.replaced
    out.dataset.validate(out.corpus)
    by_doc = {}
    for r in out.split.replaced:
        by_doc.setdefault(r.doc_id, []).append(r)
    for doc_id in corpus.ids:
        assert _reverse(out.corpus[doc_id].text, by_doc.get(doc_id, [])) == corpus[doc_id].text
    # offsets of spans after a rewrite shift by the accumulated length delta
    for doc_id, recs in by_doc.items():
        old_spans, new_spans = ds[doc_id], out.dataset[doc_id]
        assert len(old_spans) == len(new_spans)
        for old, new in zip(old_spans, new_spans):
            delta = sum(len(r.new) - len(r.old) for r in recs if r.end <= new.start)
            assert new.start == old.start + delta
    # test documents are untouched
    for doc_id in out.split.test_ids:
        assert out.corpus[doc_id] == corpus[doc_id]
        assert out.dataset[doc_id] == ds[doc_id]


def test_split_deterministic(synth_inputs):
    corpus, ds, ph_org, nel = synth_inputs
    runs = [entity_disjoint_split(corpus, ds, ph_org, 0.3, seed=5, nel=nel) for _ in range(3)]
    assert runs[0].split == runs[1].split == runs[2].split
    assert runs[0].dataset == runs[2].dataset
    other = entity_disjoint_split(corpus, ds, ph_org, 0.3, seed=6, nel=nel)
    assert other.split.test_ids != runs[0].split.test_ids


def test_split_result_roundtrip(tmp_path, synth_inputs):
    corpus, ds, ph_org, nel = synth_inputs
    split = entity_disjoint_split(corpus, ds, ph_org, 0.3, seed=3, nel=nel).split
    split.write(tmp_path / "s.json")
    assert SplitResult.read(tmp_path / "s.json") == split


def test_split_needs_two_entities(ph_org, nel):
    corpus = Corpus((Document("a", "Sanofi rose."), Document("b", "Sanofi fell.")))
    ds = build_labeled_dataset(corpus, [ph_org], nel)
    with pytest.raises(SplitError, match="2 distinct"):
        entity_disjoint_split(corpus, ds, ph_org, 0.5, nel=nel)


def test_replacement_shift_small(ph_org, nel):
    docs = (
        Document("a", "Sanofi and Regeneron rose."),
        Document("b", "Regeneron fell."),
        Document("c", "Gilead held."),
        Document("d", "Sanofi fell."),
    )
    corpus = Corpus(docs)
    ds = build_labeled_dataset(corpus, [ph_org], nel)
    for seed in range(10):
        out = entity_disjoint_split(corpus, ds, ph_org, 0.25, seed=seed, nel=nel)
        out.dataset.validate(out.corpus)
        assert len(out.split.test_ids) == 1


# --- scoring

def _ds(rows):
    return LabeledDataset({d: [EntitySpan(s, e, "x" * (e - s), lab) for s, e, lab in spans] for d, spans in rows.items()})


GOLD = _ds({"d1": [(0, 6, "PH_ORG"), (10, 18, "DRUG")], "d2": [(0, 9, "PH_ORG"), (20, 26, "PH_ORG")]})
PRED = _ds({"d1": [(0, 6, "PH_ORG"), (10, 18, "DRUG")], "d2": [(0, 9, "PH_ORG"), (30, 34, "PH_ORG")]})


def test_metric_oracle():
    rep = score(GOLD, PRED)
    assert (rep.micro.precision, rep.micro.recall, rep.micro.f1) == (0.75, 0.75, 0.75)
    assert rep.per_label["PH_ORG"].tp == 2 and rep.per_label["PH_ORG"].fp == 1
    assert rep.per_label["DRUG"].f1 == 1.0
    assert score(GOLD, GOLD).micro.f1 == 1.0
    empty = _ds({"d1": [], "d2": []})
    z = score(GOLD, empty).micro
    assert (z.precision, z.recall, z.f1) == (0.0, 0.0, 0.0)
    assert score(empty, empty).micro.f1 == 0.0


def test_label_mismatch_is_not_a_hit():
    rep = score(_ds({"d": [(0, 6, "PH_ORG")]}), _ds({"d": [(0, 6, "DRUG")]}))
    assert rep.micro.tp == 0 and rep.micro.fp == 1 and rep.micro.fn == 1


def test_id_mismatch():
    with pytest.raises(ValueError, match="document ids"):
        score(GOLD, _ds({"d1": []}))


def test_report_rendering():
    rep = score(GOLD, PRED)
    js = rep.to_json()
    assert js["micro"] == {"precision": 0.75, "recall": 0.75, "f1": 0.75, "tp": 3, "fp": 1, "fn": 1}
    table = rep.to_table().splitlines()
    assert table[0].split() == ["Label", "Precision", "Recall", "F1", "TP", "FP", "FN"]
    assert table[-1].split()[:4] == ["micro", "0.750", "0.750", "0.750"]


_rows = st.lists(st.tuples(st.integers(0, 30), st.integers(1, 4), st.sampled_from(["A", "B"])), max_size=6)


@given(_rows, _rows)
def test_score_matches_oracle(g, p):
    def clean(rows):
        out, taken = [], set()
        for s, n, lab in sorted(rows):
            if not taken & set(range(s, s + n)):
                taken |= set(range(s, s + n))
                out.append((s, s + n, lab))
        return out

    gold, pred = clean(g), clean(p)
    rep = score(_ds({"d": gold}), _ds({"d": pred}))
    tp = len(set(gold) & set(pred))
    exp = prf(tp, len(pred) - tp, len(gold) - tp)
    assert (rep.micro.precision, rep.micro.recall, rep.micro.f1) == pytest.approx(exp)
    assert 0.0 <= rep.micro.f1 <= 1.0
