"""Loading documents, gazetteers and non-entity lists."""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .tokens import normalize

log = logging.getLogger(__name__)

LABEL_RE = re.compile(r"[A-Z][A-Z0-9_]*")
NEL_SECTIONS = ("countries", "legal_forms", "domain_keywords")


class CorpusError(ValueError):
    """Invalid corpus, gazetteer or non-entity list input."""


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    source: str | None = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise CorpusError("document id must be a non-empty string")
        if not isinstance(self.text, str) or not self.text:
            raise CorpusError(f"document {self.id!r} has empty text")

    def to_json(self) -> dict:
        obj = {"id": self.id, "text": self.text}
        if self.source is not None:
            obj["source"] = self.source
        return obj


@dataclass(frozen=True)
class Corpus:
    documents: tuple[Document, ...] = ()
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        docs = tuple(self.documents)
        index = {}
        for doc in docs:
            if doc.id in index:
                raise CorpusError(f"duplicate document id {doc.id!r}")
            index[doc.id] = doc
        object.__setattr__(self, "documents", docs)
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self._index

    def __getitem__(self, doc_id: str) -> Document:
        try:
            return self._index[doc_id]
        except KeyError:
            raise KeyError(f"unknown document id {doc_id!r}") from None

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def subset(self, ids: Iterable[str]) -> "Corpus":
        wanted = set(ids)
        return Corpus(tuple(d for d in self.documents if d.id in wanted))

    def replace(self, docs: Iterable[Document]) -> "Corpus":
        """Copy with some documents swapped for new versions (same ids)."""
        new = {d.id: d for d in docs}
        return Corpus(tuple(new.get(d.id, d) for d in self.documents))


def _document_from_json(obj, where: str) -> Document:
    if not isinstance(obj, dict):
        raise CorpusError(f"{where}: expected a JSON object")
    for key in ("id", "text"):
        if not isinstance(obj.get(key), str):
            raise CorpusError(f"{where}: missing or non-string field {key!r}")
    source = obj.get("source")
    if source is not None and not isinstance(source, str):
        raise CorpusError(f"{where}: field 'source' must be a string")
    try:
        return Document(obj["id"], obj["text"], source)
    except CorpusError as exc:
        raise CorpusError(f"{where}: {exc}") from None


def load_corpus(path: str | Path, format: str = "jsonl") -> Corpus:
    """Load a corpus from a JSONL file or a directory of ``.txt`` files.

    Plain-text documents take the file stem as id and are ordered
    lexicographically by file name.
    """
    path = Path(path)
    if format == "jsonl":
        docs = []
        seen = set()
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                where = f"{path}:{lineno}"
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{where}: malformed JSON ({exc.msg})") from None
                doc = _document_from_json(obj, where)
                if doc.id in seen:
                    raise CorpusError(f"{where}: duplicate document id {doc.id!r}")
                seen.add(doc.id)
                docs.append(doc)
        return Corpus(tuple(docs))
    if format == "plaintext_dir":
        if not path.is_dir():
            raise CorpusError(f"{path}: not a directory")
        docs = []
        for p in sorted(path.glob("*.txt"), key=lambda p: p.name):
            try:
                docs.append(Document(p.stem, p.read_text(encoding="utf-8"), str(p)))
            except CorpusError as exc:
                raise CorpusError(f"{p}: {exc}") from None
        return Corpus(tuple(docs))
    raise ValueError(f"unknown corpus format {format!r}")


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        for doc in corpus:
            fh.write(json.dumps(doc.to_json(), ensure_ascii=False) + "\n")


@dataclass(frozen=True)
class Gazetteer:
    label: str
    entries: frozenset[str]

    def __post_init__(self):
        if not LABEL_RE.fullmatch(self.label or ""):
            raise CorpusError(f"invalid gazetteer label {self.label!r}")
        entries = frozenset(e.strip() for e in self.entries)
        if not entries or "" in entries:
            raise CorpusError(f"gazetteer {self.label}: zero usable entries")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name.strip() in self.entries


def load_gazetteer(path: str | Path, label: str) -> Gazetteer:
    """One entity name per line; blank lines skipped, names trimmed and deduplicated."""
    with Path(path).open(encoding="utf-8") as fh:
        names = {line.strip() for line in fh if line.strip()}
    if not names:
        raise CorpusError(f"{path}: zero usable entries")
    gaz = Gazetteer(label, frozenset(names))
    log.info("loaded gazetteer %s from %s: %d entries", label, path, len(gaz))
    return gaz


def nel_key(term: str) -> str:
    """Membership key: case-folded, trailing periods dropped, lemmatized."""
    return normalize(term.strip())


@dataclass(frozen=True)
class NonEntityList:
    """Countries, legal forms and domain keywords excluded from entity core names.

    Multi-word terms ("United Kingdom") are matched as token phrases.
    """

    countries: frozenset[str] = frozenset()
    legal_forms: frozenset[str] = frozenset()
    domain_keywords: frozenset[str] = frozenset()
    _phrases: dict = field(default=None, init=False, repr=False, compare=False)
    _max_len: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        phrases: dict[tuple[str, ...], str] = {}
        for section in NEL_SECTIONS:
            folded = frozenset(t.strip().casefold() for t in getattr(self, section) if t.strip())
            object.__setattr__(self, section, folded)
            for term in sorted(folded):
                key = tuple(nel_key(w) for w in term.split())
                phrases.setdefault(key, section)
        object.__setattr__(self, "_phrases", phrases)
        object.__setattr__(self, "_max_len", max((len(k) for k in phrases), default=0))

    def contains(self, term: str) -> bool:
        key = tuple(nel_key(w) for w in term.split())
        return bool(key) and key in self._phrases

    __contains__ = contains

    def section_of(self, term: str) -> str | None:
        return self._phrases.get(tuple(nel_key(w) for w in term.split()))

    def match_length(self, words: Sequence[str], i: int) -> int:
        """Length of the longest listed phrase starting at ``words[i]`` (0 if none)."""
        for n in range(min(self._max_len, len(words) - i), 0, -1):
            if tuple(nel_key(w) for w in words[i : i + n]) in self._phrases:
                return n
        return 0


def load_non_entity_list(path: str | Path) -> NonEntityList:
    """Parse an INI-like file with ``[countries]``, ``[legal_forms]`` and
    ``[domain_keywords]`` sections, one term per line."""
    sections: dict[str, set[str]] = {name: set() for name in NEL_SECTIONS}
    current = None
    seen_any = False
    with Path(path).open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith(("#", ";")):
                continue
            seen_any = True
            if line.startswith("[") and line.endswith("]"):
                name = line[1:-1].strip()
                if name not in sections:
                    raise CorpusError(f"{path}:{lineno}: unknown section [{name}]")
                current = name
                continue
            if current is None:
                raise CorpusError(f"{path}:{lineno}: term outside of any section")
            sections[current].add(line)
    if not seen_any:
        raise CorpusError(f"{path}: empty non-entity list")
    return NonEntityList(**{k: frozenset(v) for k, v in sections.items()})
