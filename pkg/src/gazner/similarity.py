"""String similarity measures for gazetteer matching."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache

LEVENSHTEIN = "levenshtein_norm"
COSINE = "cosine_bigram"
MAX_OF_BOTH = "max_of_both"


@dataclass(frozen=True, order=True)
class SimilarityScore:
    value: float
    measure: str = MAX_OF_BOTH

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"similarity {self.value} outside [0, 1]")

    def __float__(self) -> float:
        return self.value


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert/delete/substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_similarity(a: str, b: str) -> SimilarityScore:
    longest = max(len(a), len(b))
    if longest == 0:
        return SimilarityScore(1.0, LEVENSHTEIN)
    return SimilarityScore(1.0 - edit_distance(a, b) / longest, LEVENSHTEIN)


@lru_cache(maxsize=65536)
def bigram_vector(s: str) -> tuple[Counter, int]:
    """Character bigram counts of ``^s$`` and their squared Euclidean norm.

    The empty string maps to the empty vector.
    """
    if not s:
        return Counter(), 0
    padded = f"^{s}$"
    counts = Counter(padded[i : i + 2] for i in range(len(padded) - 1))
    return counts, sum(v * v for v in counts.values())


def cosine_similarity(a: str, b: str) -> SimilarityScore:
    va, na = bigram_vector(a)
    vb, nb = bigram_vector(b)
    if not na or not nb:
        return SimilarityScore(0.0, COSINE)
    if len(va) > len(vb):
        va, vb = vb, va
    dot = sum(c * vb[g] for g, c in va.items() if g in vb)
    # integer norms keep cos(a, a) exactly 1.0
    return SimilarityScore(min(1.0, dot / math.sqrt(na * nb)), COSINE)


def match_score(candidate: str, entry: str) -> SimilarityScore:
    """Maximum of normalized Levenshtein and bigram cosine similarity.

    Both inputs are expected to be normalized already.
    """
    if candidate == entry:
        return SimilarityScore(1.0, MAX_OF_BOTH)
    lev = levenshtein_similarity(candidate, entry).value
    cos = cosine_similarity(candidate, entry).value
    return SimilarityScore(max(lev, cos), MAX_OF_BOTH)


def levenshtein_upper_bound(len_a: int, len_b: int) -> float:
    """Largest normalized Levenshtein similarity two strings of these lengths can reach."""
    longest = max(len_a, len_b)
    if longest == 0:
        return 1.0
    return 1.0 - abs(len_a - len_b) / longest
