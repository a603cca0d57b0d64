"""Gazetteer-driven labeling of documents (the MD dataset).

Pipeline per document and gazetteer:

1. every eligible token is compared against the core-name tokens of all
   gazetteer entries; hits at or above the threshold seed a span,
2. seeds grow over neighbouring tokens that match the remaining tokens of
   the entry, non-entity words included,
3. overlapping growth is unioned and same-label spans separated only by
   connector tokens ("J & J") are concatenated.

Labels are combined across gazetteers with list-order precedence.
"""

from __future__ import annotations

import json
import logging
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .corpus import Corpus, Document, Gazetteer, NonEntityList
from .similarity import bigram_vector, levenshtein_similarity, cosine_similarity, levenshtein_upper_bound
from .tokens import Token, Tokenizer, default_tokenizer, is_punct

log = logging.getLogger(__name__)

DEFAULT_CONNECTORS = frozenset({"&", "+", "/"})
_EDGE_PUNCT = frozenset(".,;:!?")
_JOINERS = frozenset({"and", "of"})


class DatasetError(ValueError):
    """Malformed or inconsistent labeled dataset."""


@dataclass(frozen=True, order=True)
class EntitySpan:
    start: int
    end: int
    surface: str = field(compare=False)
    label: str = ""
    score: float = field(default=1.0, compare=False)
    source: str = field(default="gazetteer", compare=False)

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise DatasetError(f"invalid span range {self.start}:{self.end}")
        if len(self.surface) != self.end - self.start:
            raise DatasetError(f"surface {self.surface!r} does not fit range {self.start}:{self.end}")

    def overlaps(self, other: "EntitySpan") -> bool:
        return self.start < other.end and other.start < self.end

    @property
    def key(self) -> tuple[int, int, str]:
        return (self.start, self.end, self.label)

    def shifted(self, delta: int) -> "EntitySpan":
        return EntitySpan(self.start + delta, self.end + delta, self.surface, self.label, self.score, self.source)

    def to_json(self) -> dict:
        return {
            "start": self.start,
            "end": self.end,
            "surface": self.surface,
            "label": self.label,
            "score": round(self.score, 6),
            "source": self.source,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "EntitySpan":
        try:
            return cls(
                int(obj["start"]),
                int(obj["end"]),
                str(obj["surface"]),
                str(obj["label"]),
                float(obj.get("score", 1.0)),
                str(obj.get("source", "gazetteer")),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DatasetError(f"bad span object {obj!r}: {exc}") from None


def check_spans(spans: Sequence[EntitySpan], text: str | None = None, doc_id: str = "?") -> None:
    """Raise unless spans are sorted, disjoint and (given text) surface-faithful."""
    for prev, cur in zip(spans, spans[1:]):
        if cur.start < prev.end:
            raise DatasetError(
                f"document {doc_id}: spans {prev.start}:{prev.end} and {cur.start}:{cur.end} overlap or are unsorted"
            )
    if text is not None:
        for s in spans:
            if s.end > len(text) or text[s.start : s.end] != s.surface:
                raise DatasetError(f"document {doc_id}: span {s.start}:{s.end} does not read {s.surface!r}")


class LabeledDataset:
    """Document id to sorted, non-overlapping spans; keeps insertion order."""

    def __init__(self, annotations: dict[str, Iterable[EntitySpan]] | None = None):
        self._ann: dict[str, tuple[EntitySpan, ...]] = {}
        for doc_id, spans in (annotations or {}).items():
            spans = tuple(spans)
            check_spans(spans, doc_id=doc_id)
            self._ann[doc_id] = spans

    def __getitem__(self, doc_id: str) -> tuple[EntitySpan, ...]:
        return self._ann[doc_id]

    def get(self, doc_id: str) -> tuple[EntitySpan, ...]:
        return self._ann.get(doc_id, ())

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._ann

    def __iter__(self) -> Iterator[str]:
        return iter(self._ann)

    def __len__(self) -> int:
        return len(self._ann)

    def __eq__(self, other) -> bool:
        if not isinstance(other, LabeledDataset):
            return NotImplemented
        return self.to_jsonl() == other.to_jsonl()

    def items(self):
        return self._ann.items()

    @property
    def doc_ids(self) -> list[str]:
        return list(self._ann)

    def all_spans(self) -> Iterator[tuple[str, EntitySpan]]:
        for doc_id, spans in self._ann.items():
            for s in spans:
                yield doc_id, s

    def subset(self, ids: Iterable[str]) -> "LabeledDataset":
        wanted = set(ids)
        return LabeledDataset({k: v for k, v in self._ann.items() if k in wanted})

    def label_counts(self) -> dict[str, int]:
        counts = Counter(s.label for _, s in self.all_spans())
        return dict(sorted(counts.items()))

    def validate(self, corpus: Corpus) -> None:
        for doc_id, spans in self._ann.items():
            if doc_id not in corpus:
                raise DatasetError(f"dataset references unknown document {doc_id!r}")
            check_spans(spans, corpus[doc_id].text, doc_id)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"id": doc_id, "spans": [s.to_json() for s in spans]}, ensure_ascii=False)
            for doc_id, spans in self._ann.items()
        ]
        return "".join(line + "\n" for line in lines)


def write_dataset(ds: LabeledDataset, path: str | Path) -> None:
    Path(path).write_text(ds.to_jsonl(), encoding="utf-8", newline="\n")


def read_dataset(path: str | Path) -> LabeledDataset:
    ann = {}
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            where = f"{path}:{lineno}"
            try:
                obj = json.loads(line)
                doc_id = obj["id"]
                spans = sorted(EntitySpan.from_json(s) for s in obj["spans"])
            except (json.JSONDecodeError, KeyError, TypeError, DatasetError) as exc:
                raise DatasetError(f"{where}: {exc}") from None
            if doc_id in ann:
                raise DatasetError(f"{where}: duplicate document id {doc_id!r}")
            try:
                check_spans(spans, doc_id=doc_id)
            except DatasetError as exc:
                raise DatasetError(f"{where}: {exc}") from None
            ann[doc_id] = spans
    return LabeledDataset(ann)


@dataclass(frozen=True)
class MatchConfig:
    threshold: float = 0.9
    max_gap_tokens: int = 1
    enable_neighbor_extension: bool = True
    connectors: frozenset[str] = DEFAULT_CONNECTORS
    punctuation_connectors: bool = False
    source: str = "gazetteer"

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.max_gap_tokens < 0:
            raise ValueError("max_gap_tokens must be >= 0")
        object.__setattr__(self, "connectors", frozenset(c.casefold() for c in self.connectors))

    def is_connector(self, token: Token) -> bool:
        if token.text.casefold() in self.connectors:
            return True
        return self.punctuation_connectors and token.is_punct and len(token.text) == 1


# --------------------------------------------------------------------------
# core names

def _nel_mask(words: Sequence[str], nel: NonEntityList) -> list[bool]:
    mask = [False] * len(words)
    i = 0
    while i < len(words):
        n = nel.match_length(words, i)
        if n:
            mask[i : i + n] = [True] * n
            i += n
        else:
            i += 1
    return mask


def _core_tokens(tokens: Sequence[Token], nel: NonEntityList) -> list[Token]:
    mask = _nel_mask([t.text for t in tokens], nel)
    kept = [t for t, drop in zip(tokens, mask) if not drop]
    # drop joiners left dangling by the removal ("Eli Lilly and", "Merck &")
    while kept and (kept[0].is_punct or kept[0].norm in _JOINERS):
        kept.pop(0)
    while kept and (kept[-1].is_punct or kept[-1].norm in _JOINERS):
        kept.pop()
    return kept


def core_name(entry: str, nel: NonEntityList, tokenizer: Tokenizer | None = None) -> str:
    """Entity name with countries, legal forms and domain keywords removed.

    >>> nel = NonEntityList({"Spain"}, {"Ltd"}, {"Pharmaceuticals"})
    >>> core_name("Sanofi Pharmaceuticals Ltd. Spain", nel)
    'Sanofi'
    """
    tokenizer = tokenizer or default_tokenizer()
    return " ".join(t.text for t in _core_tokens(tokenizer(entry), nel))


@dataclass
class _Entry:
    name: str
    norms: tuple[str, ...]
    core: str
    core_key: str
    core_norms: frozenset[str]


class GazetteerIndex:
    """Pre-tokenized gazetteer with candidate prefilters for fuzzy lookup.

    Prefilters are exact: a vocabulary token is skipped only when neither
    measure can reach the threshold (length band for Levenshtein, no shared
    bigram for cosine).
    """

    def __init__(self, gaz: Gazetteer, nel: NonEntityList, tokenizer: Tokenizer | None = None):
        self.gazetteer = gaz
        self.label = gaz.label
        self.tokenizer = tokenizer or default_tokenizer()
        self.entries: list[_Entry] = []
        self.vocab: dict[str, list[int]] = defaultdict(list)
        for name in sorted(gaz.entries):
            toks = self.tokenizer(name)
            core = _core_tokens(toks, nel)
            core_norms = frozenset(
                t.norm for t in core if not t.is_punct and t.text.casefold() not in self.tokenizer.stop_words
            )
            idx = len(self.entries)
            self.entries.append(
                _Entry(
                    name=name,
                    norms=tuple(t.norm for t in toks),
                    core=" ".join(t.text for t in core),
                    core_key=" ".join(t.norm for t in core),
                    core_norms=core_norms,
                )
            )
            for norm in sorted(core_norms):
                self.vocab[norm].append(idx)
        self._by_length: dict[int, list[str]] = defaultdict(list)
        self._by_bigram: dict[str, set[str]] = defaultdict(set)
        for word in sorted(self.vocab):
            self._by_length[len(word)].append(word)
            for gram in bigram_vector(word)[0]:
                self._by_bigram[gram].add(word)
        self._cache: dict[tuple[str, float], tuple[tuple[str, float], ...]] = {}

    def hits(self, norm: str, threshold: float) -> tuple[tuple[str, float], ...]:
        """Vocabulary tokens scoring >= threshold against ``norm``, best first."""
        key = (norm, threshold)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        scores: dict[str, float] = {}
        grams = bigram_vector(norm)[0]
        shared = set()
        for g in grams:
            shared |= self._by_bigram.get(g, set())
        for word in shared:
            cos = cosine_similarity(norm, word).value
            if cos >= threshold:
                scores[word] = cos
        n = len(norm)
        for length, words in self._by_length.items():
            if levenshtein_upper_bound(n, length) < threshold:
                continue
            for word in words:
                lev = levenshtein_similarity(norm, word).value
                if lev >= threshold and lev > scores.get(word, 0.0):
                    scores[word] = lev
        result = tuple(sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])))
        self._cache[key] = result
        return result

    def best_entry(self, text: str, nel: NonEntityList, threshold: float) -> _Entry | None:
        """Entry whose core name best matches the core of ``text``.

        Ties go to the longer entry name, then to the lexicographically first.
        """
        core = _core_tokens(self.tokenizer(text), nel)
        key = " ".join(t.norm for t in core)
        if not key:
            return None
        best = None
        best_rank = None
        for e in self.entries:
            if not e.core_key:
                continue
            if e.core_key == key:
                score = 1.0
            else:
                if levenshtein_upper_bound(len(key), len(e.core_key)) < threshold and not (
                    set(bigram_vector(key)[0]) & set(bigram_vector(e.core_key)[0])
                ):
                    continue
                score = max(
                    levenshtein_similarity(key, e.core_key).value,
                    cosine_similarity(key, e.core_key).value,
                )
            if score < threshold:
                continue
            rank = (-score, -len(e.name), e.name)
            if best_rank is None or rank < best_rank:
                best, best_rank = e, rank
        return best


def _token_matches(tok: Token, entry_norm: str, threshold: float) -> bool:
    if tok.is_punct or is_punct(entry_norm):
        return tok.text == entry_norm
    if tok.norm == entry_norm:
        return True
    return max(
        levenshtein_similarity(tok.norm, entry_norm).value,
        cosine_similarity(tok.norm, entry_norm).value,
    ) >= threshold


def _extend(tokens: Sequence[Token], i: int, norms: Sequence[str], p: int, threshold: float) -> tuple[int, int]:
    """Grow token ``i`` (matched to entry position ``p``) over neighbours that
    match the entry's remaining tokens in order; entry tokens may be skipped."""
    right, q = i, p + 1
    while right + 1 < len(tokens) and q < len(norms):
        r = next((r for r in range(q, len(norms)) if _token_matches(tokens[right + 1], norms[r], threshold)), None)
        if r is None:
            break
        right, q = right + 1, r + 1
    left, q = i, p - 1
    while left - 1 >= 0 and q >= 0:
        r = next((r for r in range(q, -1, -1) if _token_matches(tokens[left - 1], norms[r], threshold)), None)
        if r is None:
            break
        left, q = left - 1, r - 1
    while right > i and (tokens[right].text in _EDGE_PUNCT or tokens[right].is_stop):
        right -= 1
    while left < i and (tokens[left].text in _EDGE_PUNCT or tokens[left].is_stop):
        left += 1
    return left, right


def _make_span(text: str, start: int, end: int, label: str, score: float, source: str) -> EntitySpan:
    return EntitySpan(start, end, text[start:end], label, score, source)


def _union(spans: list[EntitySpan], text: str) -> list[EntitySpan]:
    out: list[EntitySpan] = []
    for s in sorted(spans):
        if out and s.start < out[-1].end and s.label == out[-1].label:
            last = out.pop()
            out.append(
                _make_span(text, last.start, max(last.end, s.end), last.label, max(last.score, s.score), last.source)
            )
        else:
            out.append(s)
    return out


def annotate_document(
    doc: Document,
    tokens: Sequence[Token],
    gaz: Gazetteer,
    nel: NonEntityList,
    cfg: MatchConfig = MatchConfig(),
    index: GazetteerIndex | None = None,
) -> list[EntitySpan]:
    """Spans for one gazetteer label, before connector concatenation."""
    index = index or GazetteerIndex(gaz, nel)
    mask = _nel_mask([t.text for t in tokens], nel)
    raw: list[EntitySpan] = []
    for i, tok in enumerate(tokens):
        if tok.is_punct or tok.is_stop or mask[i]:
            continue
        hits = index.hits(tok.norm, cfg.threshold)
        if not hits:
            continue
        score = hits[0][1]
        left = right = i
        if cfg.enable_neighbor_extension:
            for word, _ in hits:
                for e_idx in index.vocab[word]:
                    norms = index.entries[e_idx].norms
                    for p, n in enumerate(norms):
                        if n != word:
                            continue
                        lo, hi = _extend(tokens, i, norms, p, cfg.threshold)
                        left, right = min(left, lo), max(right, hi)
        raw.append(_make_span(doc.text, tokens[left].start, tokens[right].end, gaz.label, score, cfg.source))
    return _union(raw, doc.text)


def concatenate_consecutive(
    spans: Sequence[EntitySpan],
    tokens: Sequence[Token],
    cfg: MatchConfig = MatchConfig(),
    text: str | None = None,
) -> list[EntitySpan]:
    """Merge same-label spans separated only by up to ``cfg.max_gap_tokens``
    connector tokens.  ``text`` is the document text the surface is re-read from."""
    if not spans:
        return []
    out = [spans[0]]
    for s in spans[1:]:
        last = out[-1]
        gap = [t for t in tokens if t.start >= last.end and t.end <= s.start]
        if (
            s.label == last.label
            and len(gap) <= cfg.max_gap_tokens
            and all(cfg.is_connector(t) for t in gap)
        ):
            surface = text[last.start : s.end] if text is not None else _rebuild(tokens, last.start, s.end)
            out[-1] = EntitySpan(last.start, s.end, surface, last.label, max(last.score, s.score), last.source)
        else:
            out.append(s)
    return out


def _rebuild(tokens: Sequence[Token], start: int, end: int) -> str:
    parts = []
    pos = start
    for t in tokens:
        if t.start >= start and t.end <= end:
            parts.append(" " * (t.start - pos) + t.text)
            pos = t.end
    return "".join(parts)


def merge_with_precedence(primary: Sequence[EntitySpan], secondary: Sequence[EntitySpan]) -> list[EntitySpan]:
    """All primary spans, plus secondary spans that overlap no primary span."""
    kept = list(primary)
    for s in secondary:
        if not any(s.overlaps(p) for p in primary) and not any(s.overlaps(k) for k in kept):
            kept.append(s)
    return sorted(kept)


def _annotate_all(doc: Document, tokenizer: Tokenizer, indexes, nel, cfg) -> list[EntitySpan]:
    tokens = tokenizer(doc.text)
    merged: list[EntitySpan] = []
    for index in indexes:
        spans = annotate_document(doc, tokens, index.gazetteer, nel, cfg, index)
        spans = concatenate_consecutive(spans, tokens, cfg, doc.text)
        merged = merge_with_precedence(merged, spans)
    return merged


def build_labeled_dataset(
    corpus: Corpus,
    gazetteers: Sequence[Gazetteer],
    nel: NonEntityList,
    cfg: MatchConfig = MatchConfig(),
    tokenizer: Tokenizer | None = None,
    workers: int = 1,
) -> LabeledDataset:
    """Annotate every document; earlier gazetteers take precedence on overlap.

    With ``workers > 1`` documents are annotated on a thread pool; results are
    collected in corpus order.
    """
    labels = [g.label for g in gazetteers]
    dupes = sorted({lab for lab in labels if labels.count(lab) > 1})
    if dupes:
        raise ValueError(f"duplicate gazetteer labels: {', '.join(dupes)}")
    tokenizer = tokenizer or default_tokenizer()
    indexes = [GazetteerIndex(g, nel, tokenizer) for g in gazetteers]
    docs = list(corpus)

    def run(doc):
        return _annotate_all(doc, tokenizer, indexes, nel, cfg)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, docs))
    else:
        results = [run(d) for d in docs]
    ds = LabeledDataset({doc.id: spans for doc, spans in zip(docs, results)})
    log.info("annotated %d documents: %s", len(ds), summary(ds)["spans_per_label"])
    return ds


def summary(ds: LabeledDataset) -> dict:
    return {
        "documents": len(ds),
        "documents_with_spans": sum(1 for _, spans in ds.items() if spans),
        "spans": sum(len(spans) for _, spans in ds.items()),
        "spans_per_label": ds.label_counts(),
    }
