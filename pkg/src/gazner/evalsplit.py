"""Train/test splitting (random and entity-disjoint) and span-level scoring."""

from __future__ import annotations

import json
import math
import random
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

from .annotate import EntitySpan, GazetteerIndex, LabeledDataset, check_spans
from .corpus import Corpus, Document, Gazetteer, NonEntityList
from .tokens import Tokenizer, default_tokenizer


class SplitError(ValueError):
    pass


def round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def portion_size(n: int, ratio: float) -> int:
    """Number of test documents: ratio * n rounded half-up, kept within [1, n - 1]."""
    return min(max(round_half_up(ratio * n), 1), n - 1)


@dataclass(frozen=True)
class Replacement:
    doc_id: str
    old: str
    new: str
    start: int  # offsets in the rewritten text
    end: int


@dataclass(frozen=True)
class SplitResult:
    train_ids: tuple[str, ...]
    test_ids: tuple[str, ...]
    replaced: tuple[Replacement, ...] = ()
    seed: int = 0
    test_entities: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "seed": self.seed,
            "train_ids": list(self.train_ids),
            "test_ids": list(self.test_ids),
            "test_entities": list(self.test_entities),
            "replaced": [
                {"doc_id": r.doc_id, "old": r.old, "new": r.new, "start": r.start, "end": r.end}
                for r in self.replaced
            ],
        }

    def write(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), ensure_ascii=False, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def read(cls, path: str | Path) -> "SplitResult":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            tuple(obj["train_ids"]),
            tuple(obj["test_ids"]),
            tuple(Replacement(**r) for r in obj.get("replaced", [])),
            int(obj.get("seed", 0)),
            tuple(obj.get("test_entities", [])),
        )


def _check_args(corpus: Corpus, ratio: float) -> None:
    if not 0.0 < ratio < 1.0:
        raise SplitError(f"ratio must be strictly between 0 and 1, got {ratio}")
    if len(corpus) < 2:
        raise SplitError(f"cannot split a corpus of {len(corpus)} document(s)")


def _ordered(corpus: Corpus, ids) -> tuple[str, ...]:
    ids = set(ids)
    return tuple(d.id for d in corpus if d.id in ids)


def random_split(corpus: Corpus, ratio: float = 0.3, seed: int = 0) -> SplitResult:
    """Seeded split ignoring entity distribution; ids keep corpus order."""
    _check_args(corpus, ratio)
    ids = corpus.ids
    rng = random.Random(seed)
    test = rng.sample(ids, portion_size(len(ids), ratio))
    return SplitResult(
        train_ids=_ordered(corpus, set(ids) - set(test)),
        test_ids=_ordered(corpus, test),
        seed=seed,
    )


class EntityResolver:
    """Maps span surfaces to gazetteer core-name keys."""

    def __init__(self, gaz: Gazetteer, nel: NonEntityList, threshold: float = 0.9, tokenizer: Tokenizer | None = None):
        self.index = GazetteerIndex(gaz, nel, tokenizer or default_tokenizer())
        self.nel = nel
        self.threshold = threshold
        self._cache: dict[str, str] = {}
        self.display: dict[str, str] = {}
        for e in self.index.entries:
            if e.core_key:
                self.display.setdefault(e.core_key, e.core)

    def key(self, surface: str) -> str:
        if surface not in self._cache:
            entry = self.index.best_entry(surface, self.nel, self.threshold)
            if entry is not None:
                self._cache[surface] = entry.core_key
            else:
                # unlisted surface: its own core is the entity
                toks = self.index.tokenizer(surface)
                self._cache[surface] = " ".join(t.norm for t in toks)
                self.display.setdefault(self._cache[surface], surface)
        return self._cache[surface]


class DisjointSplit(NamedTuple):
    split: SplitResult
    dataset: LabeledDataset
    corpus: Corpus


def _rewrite(doc: Document, spans: Sequence[EntitySpan], new_surfaces: dict[int, str]):
    """Replace span surfaces (by span index), shifting every later offset."""
    parts = []
    out_spans = []
    replaced = []
    pos = 0
    delta = 0
    for i, s in enumerate(spans):
        new = new_surfaces.get(i)
        parts.append(doc.text[pos : s.start])
        pos = s.end
        start = s.start + delta
        if new is None:
            parts.append(s.surface)
            out_spans.append(s.shifted(delta))
            continue
        parts.append(new)
        end = start + len(new)
        out_spans.append(EntitySpan(start, end, new, s.label, s.score, s.source))
        replaced.append(Replacement(doc.id, s.surface, new, start, end))
        delta += len(new) - len(s.surface)
    parts.append(doc.text[pos:])
    return Document(doc.id, "".join(parts), doc.source), out_spans, replaced


def entity_disjoint_split(
    corpus: Corpus,
    ds: LabeledDataset,
    gaz: Gazetteer,
    ratio: float = 0.3,
    seed: int = 0,
    nel: NonEntityList | None = None,
    threshold: float = 0.9,
) -> DisjointSplit:
    """Split so that no entity of the test portion occurs in training.

    Steps, all driven by one ``random.Random(seed)``:

    1. sample ``ratio`` of the entities (core-name keys) present in ``ds``;
    2. documents mentioning a sampled entity become test candidates;  while
       there are too few, further entities are drawn in the same random order,
       then entity-free documents fill any remaining gap;
    3. candidates are trimmed to exactly ``portion_size(N, ratio)`` documents;
    4. in the trimmed-off documents every test-entity mention is rewritten to
       a random training entity, shifting later offsets.
    """
    _check_args(corpus, ratio)
    nel = nel or NonEntityList()
    resolver = EntityResolver(gaz, nel, threshold)
    rng = random.Random(seed)

    mentions: dict[str, set[str]] = defaultdict(set)  # entity -> doc ids
    for doc_id, span in ds.all_spans():
        if span.label == gaz.label:
            mentions[resolver.key(span.surface)].add(doc_id)
    entities = sorted(mentions)
    if len(entities) < 2:
        raise SplitError(f"need at least 2 distinct {gaz.label} entities to split, found {len(entities)}")

    target = portion_size(len(corpus), ratio)
    order = rng.sample(entities, len(entities))
    k = min(max(round_half_up(ratio * len(entities)), 1), len(entities) - 1)
    test_entities = set(order[:k])
    candidates = set().union(*(mentions[e] for e in test_entities))
    for e in order[k:]:
        if len(candidates) >= target or len(test_entities) == len(entities) - 1:
            break
        test_entities.add(e)
        candidates |= mentions[e]
    if len(candidates) < target:
        with_entities = set().union(*mentions.values())
        free = [d for d in corpus.ids if d not in with_entities]
        candidates |= set(rng.sample(free, min(len(free), target - len(candidates))))
    if len(candidates) < target:
        raise SplitError(
            f"only {len(candidates)} documents can host unseen entities; {target} test documents required"
        )
    ordered_candidates = list(_ordered(corpus, candidates))
    test_ids = set(rng.sample(ordered_candidates, target))

    train_entities = sorted(set(entities) - test_entities)
    if not train_entities:
        raise SplitError("no training entities left to use as replacements")

    new_docs = []
    new_ann = {}
    replaced: list[Replacement] = []
    for doc in corpus:
        spans = ds.get(doc.id)
        if doc.id in test_ids:
            new_ann[doc.id] = spans
            continue
        swaps = {}
        for i, s in enumerate(spans):
            if s.label != gaz.label:
                continue
            old_key = resolver.key(s.surface)
            if old_key not in test_entities:
                continue
            choices = [e for e in train_entities if e != old_key]
            if not choices:
                raise SplitError(f"document {doc.id}: no replacement available for {s.surface!r}")
            swaps[i] = resolver.display[rng.choice(choices)]
        if not swaps:
            new_ann[doc.id] = spans
            continue
        new_doc, new_spans, recs = _rewrite(doc, spans, swaps)
        check_spans(new_spans, new_doc.text, doc.id)
        new_docs.append(new_doc)
        new_ann[doc.id] = new_spans
        replaced.extend(recs)

    split = SplitResult(
        train_ids=_ordered(corpus, set(corpus.ids) - test_ids),
        test_ids=_ordered(corpus, test_ids),
        replaced=tuple(replaced),
        seed=seed,
        test_entities=tuple(sorted(test_entities)),
    )
    ann = {doc_id: new_ann[doc_id] for doc_id in ds if doc_id in new_ann}
    return DisjointSplit(split, LabeledDataset(ann), corpus.replace(new_docs))


# --------------------------------------------------------------------------
# scoring

@dataclass(frozen=True)
class LabelScore:
    precision: float
    recall: float
    f1: float
    tp: int
    fp: int
    fn: int

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "LabelScore":
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f1, tp, fp, fn)


@dataclass(frozen=True)
class EvalReport:
    per_label: dict[str, LabelScore]
    micro: LabelScore
    documents: int = 0

    def to_json(self) -> dict:
        def row(s: LabelScore):
            return {
                "precision": round(s.precision, 6),
                "recall": round(s.recall, 6),
                "f1": round(s.f1, 6),
                "tp": s.tp,
                "fp": s.fp,
                "fn": s.fn,
            }

        return {
            "documents": self.documents,
            "per_label": {k: row(v) for k, v in sorted(self.per_label.items())},
            "micro": row(self.micro),
        }

    def to_table(self) -> str:
        header = f"{'Label':<12} {'Precision':>9} {'Recall':>9} {'F1':>9} {'TP':>6} {'FP':>6} {'FN':>6}"
        lines = [header, "-" * len(header)]
        rows = sorted(self.per_label.items()) + [("micro", self.micro)]
        for name, s in rows:
            lines.append(
                f"{name:<12} {s.precision:>9.3f} {s.recall:>9.3f} {s.f1:>9.3f} {s.tp:>6d} {s.fp:>6d} {s.fn:>6d}"
            )
        return "\n".join(lines) + "\n"


def score(gold: LabeledDataset, predicted: LabeledDataset, mode: str = "exact_span") -> EvalReport:
    """Exact-span scoring: a prediction counts only if start, end and label all match."""
    if mode != "exact_span":
        raise ValueError(f"unsupported scoring mode {mode!r}")
    if set(gold) != set(predicted):
        missing = sorted(set(gold) - set(predicted))[:3]
        extra = sorted(set(predicted) - set(gold))[:3]
        raise ValueError(f"document ids differ between gold and predictions (missing {missing}, unexpected {extra})")
    tp: dict[str, int] = defaultdict(int)
    fp: dict[str, int] = defaultdict(int)
    fn: dict[str, int] = defaultdict(int)
    for doc_id in gold:
        g = {s.key for s in gold[doc_id]}
        p = {s.key for s in predicted[doc_id]}
        for _, _, label in g & p:
            tp[label] += 1
        for _, _, label in p - g:
            fp[label] += 1
        for _, _, label in g - p:
            fn[label] += 1
    labels = sorted(set(tp) | set(fp) | set(fn))
    per_label = {lab: LabelScore.from_counts(tp[lab], fp[lab], fn[lab]) for lab in labels}
    micro = LabelScore.from_counts(sum(tp.values()), sum(fp.values()), sum(fn.values()))
    return EvalReport(per_label, micro, len(gold))
