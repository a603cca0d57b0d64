"""Weakly supervised NER dataset construction from gazetteers, with trainer
serializers, entity-disjoint evaluation splits and RDF graph enrichment."""

__version__ = "0.1.0"

from .annotate import (  # noqa: E402
    EntitySpan,
    LabeledDataset,
    MatchConfig,
    annotate_document,
    build_labeled_dataset,
    concatenate_consecutive,
    core_name,
    merge_with_precedence,
)
from .corpus import Corpus, Document, Gazetteer, NonEntityList, load_corpus, load_gazetteer, load_non_entity_list  # noqa: E402
from .evalsplit import entity_disjoint_split, random_split, score  # noqa: E402
from .similarity import cosine_similarity, levenshtein_similarity, match_score  # noqa: E402
from .tokens import Token, normalize, tokenize  # noqa: E402

__all__ = [
    "Corpus",
    "Document",
    "EntitySpan",
    "Gazetteer",
    "LabeledDataset",
    "MatchConfig",
    "NonEntityList",
    "Token",
    "annotate_document",
    "build_labeled_dataset",
    "concatenate_consecutive",
    "core_name",
    "cosine_similarity",
    "entity_disjoint_split",
    "levenshtein_similarity",
    "load_corpus",
    "load_gazetteer",
    "load_non_entity_list",
    "match_score",
    "merge_with_precedence",
    "normalize",
    "random_split",
    "score",
    "tokenize",
]
