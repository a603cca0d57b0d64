"""Offset-preserving tokenizer, token normalization and sentence splitting.

Offsets are code-point indices into the original string.  Normalization is a
view on a token (``Token.norm``); raw text is never modified.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

# Kept as a single token together with their trailing period.
ABBREVIATIONS = frozenset(
    {
        "ltd.", "inc.", "corp.", "co.", "plc.", "llc.", "bv.", "nv.", "ag.",
        "dr.", "mr.", "mrs.", "ms.", "prof.", "jr.", "sr.", "st.", "mt.",
        "no.", "vs.", "etc.", "approx.", "dept.", "est.", "fig.", "jan.",
        "feb.", "mar.", "apr.", "jun.", "jul.", "aug.", "sep.", "sept.",
        "oct.", "nov.", "dec.",
    }
)

SENTENCE_TERMINALS = frozenset(".!?")
_CLOSERS = frozenset("\"')]}’”")
_WS = re.compile(r"\S+")


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int
    norm: str
    is_punct: bool = False
    is_stop: bool = False


def is_punct_char(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


def is_punct(text: str) -> bool:
    return bool(text) and all(is_punct_char(c) for c in text)


# --------------------------------------------------------------------------
# normalization

def _read_lines(text: str) -> list[str]:
    return [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]


@lru_cache(maxsize=1)
def default_stop_words() -> frozenset[str]:
    text = resources.files("gazner.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.casefold() for w in _read_lines(text))


@lru_cache(maxsize=1)
def default_lemma_exceptions() -> Mapping[str, str]:
    text = resources.files("gazner.data").joinpath("lemma_exceptions.tsv").read_text("utf-8")
    return _parse_lemma_table(text, "<default lemma table>")


def _parse_lemma_table(text: str, origin: str) -> dict[str, str]:
    table = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.rstrip("\n").split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ValueError(f"{origin}:{lineno}: expected 'surface<TAB>lemma'")
        table[parts[0].strip().casefold()] = parts[1].strip().casefold()
    return table


def load_stop_words(path: str | Path) -> frozenset[str]:
    """Newline-delimited stop-word file; comments start with ``#``."""
    return frozenset(w.casefold() for w in _read_lines(Path(path).read_text("utf-8")))


def load_lemma_exceptions(path: str | Path) -> dict[str, str]:
    """TSV ``surface<TAB>lemma`` table, merged over the shipped defaults."""
    table = dict(default_lemma_exceptions())
    table.update(_parse_lemma_table(Path(path).read_text("utf-8"), str(path)))
    return table


def _strip_suffix(word: str) -> str:
    if not word.isalpha() or len(word) <= 3:
        return word
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith(("sses", "ches", "shes", "xes", "zes")):
        return word[:-2]
    if word.endswith("s") and not word.endswith(("ss", "us", "is", "os")):
        return word[:-1]
    return word


def normalize(surface: str, exceptions: Mapping[str, str] | None = None) -> str:
    """Case-fold, drop trailing periods and possessives, then lemmatize.

    >>> normalize("Ltd.")
    'ltd'
    >>> normalize("Pharmaceuticals")
    'pharmaceutical'
    """
    word = surface.casefold()
    if not is_punct(word):
        word = word.rstrip(".")
    for poss in ("'s", "’s"):
        if word.endswith(poss) and len(word) > len(poss):
            word = word[: -len(poss)]
    if exceptions is None:
        exceptions = default_lemma_exceptions()
    if word in exceptions:
        return exceptions[word]
    return _strip_suffix(word)


# --------------------------------------------------------------------------
# tokenization

def _keeps_period(core: str) -> bool:
    return (core + ".").casefold() in ABBREVIATIONS or (
        "." in core and all(part.isalpha() and len(part) <= 2 for part in core.split("."))
    )


def _split_chunk(chunk: str, offset: int) -> list[tuple[str, int, int]]:
    pieces = []
    lo, hi = 0, len(chunk)
    while lo < hi and is_punct_char(chunk[lo]):
        pieces.append((chunk[lo], offset + lo, offset + lo + 1))
        lo += 1
    trailing = []
    while hi > lo and is_punct_char(chunk[hi - 1]):
        hi -= 1
        trailing.append(hi)
    trailing.reverse()
    if lo < hi and trailing and chunk[trailing[0]] == "." and _keeps_period(chunk[lo:hi]):
        hi = trailing.pop(0) + 1
    if lo < hi:
        pieces.append((chunk[lo:hi], offset + lo, offset + hi))
    for i in trailing:
        pieces.append((chunk[i], offset + i, offset + i + 1))
    return pieces


class Tokenizer:
    """Whitespace split followed by peeling of leading/trailing punctuation.

    Stop words are flagged, never removed.
    """

    def __init__(
        self,
        stop_words: Iterable[str] | None = None,
        lemma_exceptions: Mapping[str, str] | None = None,
    ):
        self.stop_words = (
            default_stop_words() if stop_words is None else frozenset(w.casefold() for w in stop_words)
        )
        self.lemma_exceptions = (
            default_lemma_exceptions() if lemma_exceptions is None else dict(lemma_exceptions)
        )

    def normalize(self, surface: str) -> str:
        return normalize(surface, self.lemma_exceptions)

    def __call__(self, text: str) -> list[Token]:
        tokens = []
        for m in _WS.finditer(text):
            for piece, start, end in _split_chunk(m.group(), m.start()):
                punct = is_punct(piece)
                tokens.append(
                    Token(
                        text=piece,
                        start=start,
                        end=end,
                        norm=piece if punct else self.normalize(piece),
                        is_punct=punct,
                        is_stop=piece.casefold() in self.stop_words,
                    )
                )
        return tokens

    def words(self, text: str) -> list[str]:
        return [t.text for t in self(text)]


_default_tokenizer: Tokenizer | None = None


def default_tokenizer() -> Tokenizer:
    global _default_tokenizer
    if _default_tokenizer is None:
        _default_tokenizer = Tokenizer()
    return _default_tokenizer


def tokenize(doc, stop_words: Iterable[str] | None = None) -> list[Token]:
    """Tokenize a document (or plain string) with character offsets."""
    text = doc if isinstance(doc, str) else doc.text
    tokenizer = default_tokenizer() if stop_words is None else Tokenizer(stop_words)
    return tokenizer(text)


# --------------------------------------------------------------------------
# sentences

def split_sentences(text: str, tokens: list[Token] | None = None) -> list[tuple[int, int]]:
    """Return ``(start, end)`` character ranges of sentences.

    A sentence ends at a standalone ``.``, ``!`` or ``?`` token (optionally
    followed by closing quotes/brackets) when the next token starts after
    whitespace with an uppercase letter or a digit.  Abbreviations such as
    ``Ltd.`` are single tokens and therefore never end a sentence.
    """
    if tokens is None:
        tokens = default_tokenizer()(text)
    if not tokens:
        return []
    bounds = []
    sent_start = tokens[0].start
    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok.text in SENTENCE_TERMINALS:
            j = i
            while j + 1 < n and tokens[j + 1].text in _CLOSERS and tokens[j + 1].start == tokens[j].end:
                j += 1
            if j + 1 < n:
                nxt = tokens[j + 1]
                if nxt.start > tokens[j].end and (nxt.text[0].isupper() or nxt.text[0].isdigit()):
                    bounds.append((sent_start, tokens[j].end))
                    sent_start = nxt.start
            i = j + 1
            continue
        i += 1
    bounds.append((sent_start, tokens[-1].end))
    return bounds
