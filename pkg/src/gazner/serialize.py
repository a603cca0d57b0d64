"""Training-data serializers: sentence span offsets, BIO, BIOUL and token-tag.

Tagged formats are CoNLL-style: ``token<TAB>tag`` per line, a blank line
between sentences, and a trailing newline.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .annotate import EntitySpan, LabeledDataset
from .corpus import Corpus
from .tokens import Token, Tokenizer, default_tokenizer, split_sentences

BIO = "BIO"
BIOUL = "BIOUL"
TOKEN_TAG = "TOKEN_TAG"
SCHEMES = (BIO, BIOUL, TOKEN_TAG)

_TAG_RE = re.compile(r"([BIOLU])(?:-(\S+))?")


class AlignmentError(ValueError):
    """A span does not coincide with token or sentence boundaries."""


class TagSchemeError(ValueError):
    """A tag sequence violates the grammar of its scheme."""


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple[tuple[str, str], ...]
    scheme: str

    @property
    def words(self) -> list[str]:
        return [w for w, _ in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t for _, t in self.tokens]


@dataclass(frozen=True)
class SpanSentence:
    text: str
    entities: tuple[tuple[int, int, str], ...] = ()

    def to_json(self) -> dict:
        return {"text": self.text, "entities": [list(e) for e in self.entities]}


def _sentences(text: str, tokenizer: Tokenizer) -> list[tuple[int, int, list[Token]]]:
    tokens = tokenizer(text)
    out = []
    k = 0
    for start, end in split_sentences(text, tokens):
        sent = []
        while k < len(tokens) and tokens[k].end <= end:
            sent.append(tokens[k])
            k += 1
        out.append((start, end, sent))
    return out


def _assign(doc_id: str, spans: Sequence[EntitySpan], sentences) -> list[list[EntitySpan]]:
    buckets: list[list[EntitySpan]] = [[] for _ in sentences]
    for span in spans:
        for i, (start, end, _) in enumerate(sentences):
            if start <= span.start < end:
                if span.end > end:
                    raise AlignmentError(
                        f"document {doc_id}: span {span.start}:{span.end} {span.surface!r} crosses a sentence boundary at {end}"
                    )
                buckets[i].append(span)
                break
        else:
            raise AlignmentError(f"document {doc_id}: span {span.start}:{span.end} lies outside every sentence")
    return buckets


def _iter_docs(ds: LabeledDataset, corpus: Corpus, tokenizer: Tokenizer | None):
    tokenizer = tokenizer or default_tokenizer()
    for doc_id, spans in ds.items():
        if doc_id not in corpus:
            raise AlignmentError(f"dataset document {doc_id!r} missing from corpus")
        text = corpus[doc_id].text
        sents = _sentences(text, tokenizer)
        yield doc_id, text, sents, _assign(doc_id, spans, sents)


def to_span_format(ds: LabeledDataset, corpus: Corpus, tokenizer: Tokenizer | None = None) -> list[SpanSentence]:
    """One record per sentence with sentence-local ``(start, end, label)`` offsets."""
    out = []
    for _, text, sents, buckets in _iter_docs(ds, corpus, tokenizer):
        for (start, end, _), spans in zip(sents, buckets):
            ents = tuple((s.start - start, s.end - start, s.label) for s in spans)
            out.append(SpanSentence(text[start:end], ents))
    return out


def _token_range(doc_id: str, span: EntitySpan, tokens: Sequence[Token]) -> tuple[int, int]:
    first = next((i for i, t in enumerate(tokens) if t.start == span.start), None)
    last = next((i for i, t in enumerate(tokens) if t.end == span.end), None)
    if first is None or last is None or last < first:
        raise AlignmentError(
            f"document {doc_id}: span {span.start}:{span.end} {span.surface!r} is not aligned to token boundaries"
        )
    return first, last


def _bioul_tags(doc_id: str, tokens: Sequence[Token], spans: Sequence[EntitySpan]) -> list[str]:
    tags = ["O"] * len(tokens)
    for span in spans:
        first, last = _token_range(doc_id, span, tokens)
        if first == last:
            tags[first] = f"U-{span.label}"
            continue
        tags[first] = f"B-{span.label}"
        for i in range(first + 1, last):
            tags[i] = f"I-{span.label}"
        tags[last] = f"L-{span.label}"
    return tags


def bioul_to_bio(tags: Iterable[str]) -> list[str]:
    """U -> B and L -> I."""
    swap = {"U": "B", "L": "I"}
    return [swap.get(t[0], t[0]) + t[1:] if t != "O" else t for t in tags]


def bioul_to_token_tag(tags: Iterable[str]) -> list[str]:
    return ["O" if t == "O" else "I" + t[1:] for t in tags]


def _tagged(ds: LabeledDataset, corpus: Corpus, scheme: str, tokenizer: Tokenizer | None) -> list[TaggedSentence]:
    out = []
    for doc_id, _, sents, buckets in _iter_docs(ds, corpus, tokenizer):
        for (_, _, tokens), spans in zip(sents, buckets):
            tags = _bioul_tags(doc_id, tokens, spans)
            if scheme == BIO:
                tags = bioul_to_bio(tags)
            elif scheme == TOKEN_TAG:
                tags = bioul_to_token_tag(tags)
            out.append(TaggedSentence(tuple(zip((t.text for t in tokens), tags)), scheme))
    return out


def to_bioul(ds: LabeledDataset, corpus: Corpus, tokenizer: Tokenizer | None = None) -> list[TaggedSentence]:
    return _tagged(ds, corpus, BIOUL, tokenizer)


def to_bio(ds: LabeledDataset, corpus: Corpus, tokenizer: Tokenizer | None = None) -> list[TaggedSentence]:
    return _tagged(ds, corpus, BIO, tokenizer)


def to_token_tag(ds: LabeledDataset, corpus: Corpus, tokenizer: Tokenizer | None = None) -> list[TaggedSentence]:
    return _tagged(ds, corpus, TOKEN_TAG, tokenizer)


def validate_tags(tags: Sequence[str], scheme: str, where: str = "") -> None:
    """Raise :class:`TagSchemeError` at the first tag breaking the scheme grammar."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    allowed = {BIO: "BIO", BIOUL: "BIOUL", TOKEN_TAG: "IO"}[scheme]
    prefix = f"{where}: " if where else ""
    open_label = None  # label of a B/I run still awaiting continuation
    for i, tag in enumerate(tags):
        m = _TAG_RE.fullmatch(tag)
        if not m or (m.group(1) == "O") != (m.group(2) is None):
            raise TagSchemeError(f"{prefix}token {i + 1}: malformed tag {tag!r}")
        kind, label = m.groups()
        if kind not in allowed:
            raise TagSchemeError(f"{prefix}token {i + 1}: tag {tag!r} not allowed in {scheme}")
        if scheme == BIOUL:
            if open_label is not None and not (kind in "IL" and label == open_label):
                raise TagSchemeError(f"{prefix}token {i + 1}: {tag!r} after unterminated B-{open_label} run")
            if open_label is None and kind in "IL":
                raise TagSchemeError(f"{prefix}token {i + 1}: {tag!r} without a preceding B-{label}")
            open_label = label if kind in "BI" else None
        elif scheme == BIO:
            if kind == "I" and open_label != label:
                raise TagSchemeError(f"{prefix}token {i + 1}: {tag!r} does not continue a {label} entity")
            open_label = label if kind in "BI" else None
    if scheme == BIOUL and open_label is not None:
        raise TagSchemeError(f"{prefix}sentence ends inside an unterminated B-{open_label} run")


def format_tagged(sentences: Sequence[TaggedSentence]) -> str:
    blocks = ["".join(f"{w}\t{t}\n" for w, t in s.tokens) for s in sentences if s.tokens]
    return "\n".join(blocks)


def write_tagged(sentences: Sequence[TaggedSentence], path: str | Path) -> None:
    Path(path).write_text(format_tagged(sentences), encoding="utf-8", newline="\n")


def parse_tagged(path: str | Path, scheme: str) -> list[TaggedSentence]:
    """Read a two-column tagged file and check every sentence against ``scheme``."""
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    sentences = []
    current: list[tuple[str, str]] = []
    start_line = 1

    def flush():
        if current:
            validate_tags([t for _, t in current], scheme, f"{path}:{start_line}")
            sentences.append(TaggedSentence(tuple(current), scheme))

    with Path(path).open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush()
                current = []
                start_line = lineno + 1
                continue
            cols = line.split("\t")
            if len(cols) != 2 or not cols[0]:
                raise TagSchemeError(f"{path}:{lineno}: expected 2 tab-separated columns, got {len(cols)}")
            current.append((cols[0], cols[1]))
    flush()
    return sentences


def span_format_json(sentences: Sequence[SpanSentence]) -> str:
    return json.dumps([s.to_json() for s in sentences], ensure_ascii=False, indent=1) + "\n"


def write_span_format(sentences: Sequence[SpanSentence], path: str | Path) -> None:
    Path(path).write_text(span_format_json(sentences), encoding="utf-8", newline="\n")


def read_span_format(path: str | Path) -> list[SpanSentence]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    out = []
    for i, obj in enumerate(data):
        ents = tuple((int(s), int(e), str(lab)) for s, e, lab in obj["entities"])
        for s, e, _ in ents:
            if not 0 <= s < e <= len(obj["text"]):
                raise AlignmentError(f"{path}: record {i}: entity {s}:{e} outside sentence")
        out.append(SpanSentence(obj["text"], ents))
    return out
