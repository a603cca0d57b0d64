"""Command-line interface.

Outputs are written to ``--out`` as ``<stem>.<kind>.<ext>`` where ``<stem>``
is the corpus (or dataset) file name without its extensions.  Settings come
from built-in defaults, then a TOML ``--config`` file, then flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .annotate import (
    DEFAULT_CONNECTORS,
    DatasetError,
    EntitySpan,
    LabeledDataset,
    MatchConfig,
    build_labeled_dataset,
    read_dataset,
    summary,
    write_dataset,
)
from .corpus import Corpus, NonEntityList, load_corpus, load_gazetteer, load_non_entity_list, write_corpus
from .evalsplit import entity_disjoint_split, random_split, score
from .kg import (
    KGError,
    TripleGraph,
    emit_turtle,
    enrich,
    enrichment_percentage,
    enrichment_report,
    fetch_spotlight,
    ingest_spotlight,
    parse_spotlight,
)
from .serialize import (
    to_bio,
    to_bioul,
    to_span_format,
    to_token_tag,
    write_span_format,
    write_tagged,
)
from .tokens import Tokenizer, load_lemma_exceptions, load_stop_words

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

log = logging.getLogger("gazner")

FORMATS = {
    "span": (to_span_format, "json"),
    "bio": (to_bio, "conll"),
    "bioul": (to_bioul, "conll"),
    "token-tag": (to_token_tag, "conll"),
}

DEFAULTS = {
    "threshold": 0.9,
    "seed": 0,
    "out": ".",
    "max_gap_tokens": 1,
    "workers": 1,
    "ratio": 0.3,
    "gazetteers": {},
    "non_entity": None,
    "stop_words": None,
    "lemma_exceptions": None,
}
_PATH_KEYS = ("non_entity", "stop_words", "lemma_exceptions")


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# settings

def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        with p.open("rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError:
        raise UsageError(f"config file not found: {p}") from None
    except tomllib.TOMLDecodeError as exc:
        raise UsageError(f"{p}: {exc}") from None
    unknown = sorted(set(data) - set(DEFAULTS))
    if unknown:
        raise UsageError(f"{p}: unknown config keys: {', '.join(unknown)}")
    base = p.parent
    for key in _PATH_KEYS:
        if data.get(key):
            data[key] = str(base / data[key])
    if "gazetteers" in data:
        data["gazetteers"] = {lab: str(base / gp) for lab, gp in data["gazetteers"].items()}
    return data


def _settings(args) -> dict:
    cfg = dict(DEFAULTS)
    cfg.update(_load_config(getattr(args, "config", None)))
    for key in ("threshold", "seed", "out", "max_gap_tokens", "workers", "ratio", "non_entity", "stop_words", "lemma_exceptions"):
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "gazetteer", None):
        gaz = {}
        for item in args.gazetteer:
            label, sep, path = item.partition("=")
            if not sep or not label or not path:
                raise UsageError(f"--gazetteer expects LABEL=PATH, got {item!r}")
            gaz[label] = path
        cfg["gazetteers"] = gaz
    if not 0.0 < float(cfg["threshold"]) <= 1.0:
        raise UsageError(f"threshold must be in (0, 1], got {cfg['threshold']}")
    return cfg


def _require(*paths) -> None:
    for p in paths:
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"path does not exist: {p}")


def _tokenizer(cfg) -> Tokenizer:
    stop = load_stop_words(cfg["stop_words"]) if cfg["stop_words"] else None
    lemmas = load_lemma_exceptions(cfg["lemma_exceptions"]) if cfg["lemma_exceptions"] else None
    return Tokenizer(stop, lemmas)


def _nel(cfg) -> NonEntityList:
    return load_non_entity_list(cfg["non_entity"]) if cfg["non_entity"] else NonEntityList()


def _gazetteers(cfg):
    return [load_gazetteer(path, label) for label, path in cfg["gazetteers"].items()]


def _stem(path: str | Path) -> str:
    name = Path(path).name
    for suffix in (".jsonl", ".json", ".md", ".corpus"):
        if name.endswith(suffix) and len(name) > len(suffix):
            name = name[: -len(suffix)]
    return name


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, ensure_ascii=False, indent=2) + "\n", encoding="utf-8", newline="\n")


def _load_corpus_arg(args) -> Corpus:
    _require(args.corpus)
    fmt = getattr(args, "corpus_format", None) or ("plaintext_dir" if Path(args.corpus).is_dir() else "jsonl")
    return load_corpus(args.corpus, fmt)


def load_spans(path: str | Path) -> LabeledDataset:
    """MD JSONL, or a single-document analysis export."""
    _require(path)
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        obj = None
    if isinstance(obj, dict) and "entities" in obj and "id" in obj:
        return LabeledDataset({obj["id"]: sorted(EntitySpan.from_json(s) for s in obj["entities"])})
    return read_dataset(path)


# --------------------------------------------------------------------------
# commands

def cmd_annotate(args, cfg) -> int:
    if not cfg["gazetteers"]:
        raise UsageError("at least one --gazetteer LABEL=PATH is required")
    _require(*cfg["gazetteers"].values(), cfg["non_entity"], cfg["stop_words"], cfg["lemma_exceptions"])
    corpus = _load_corpus_arg(args)
    match = MatchConfig(
        threshold=float(cfg["threshold"]),
        max_gap_tokens=int(cfg["max_gap_tokens"]),
        enable_neighbor_extension=not args.no_extension,
        connectors=frozenset(args.connector) if args.connector else DEFAULT_CONNECTORS,
        punctuation_connectors=args.punct_connectors,
    )
    ds = build_labeled_dataset(
        corpus, _gazetteers(cfg), _nel(cfg), match, tokenizer=_tokenizer(cfg), workers=int(cfg["workers"])
    )
    out = _out_dir(cfg)
    stem = _stem(args.corpus)
    write_dataset(ds, out / f"{stem}.md.jsonl")
    info = summary(ds)
    info["threshold"] = match.threshold
    _write_json(out / f"{stem}.summary.json", info)
    if not args.no_plots:
        from .plotting import plot_label_counts

        plot_label_counts(info["spans_per_label"], out / f"{stem}.summary.png")
    print(f"documents: {info['documents']}  spans: {info['spans']}")
    for label, n in info["spans_per_label"].items():
        print(f"  {label:<10} {n}")
    return 0


def cmd_serialize(args, cfg) -> int:
    corpus = _load_corpus_arg(args)
    _require(args.md)
    ds = read_dataset(args.md)
    ds.validate(corpus)
    fn, ext = FORMATS[args.format]
    sentences = fn(ds, corpus, _tokenizer(cfg))
    path = _out_dir(cfg) / f"{_stem(args.md)}.{args.format}.{ext}"
    if args.format == "span":
        write_span_format(sentences, path)
    else:
        write_tagged(sentences, path)
    print(f"wrote {len(sentences)} sentences to {path}")
    return 0


def cmd_split(args, cfg) -> int:
    corpus = _load_corpus_arg(args)
    _require(args.md)
    ds = read_dataset(args.md)
    ds.validate(corpus)
    ratio = float(cfg["ratio"])
    seed = int(cfg["seed"])
    if args.mode == "random":
        split = random_split(corpus, ratio, seed)
        new_ds, new_corpus = ds, corpus
    else:
        if not cfg["gazetteers"]:
            raise UsageError("entity-disjoint mode needs a --gazetteer LABEL=PATH")
        _require(*cfg["gazetteers"].values(), cfg["non_entity"])
        label = args.label or next(iter(cfg["gazetteers"]))
        if label not in cfg["gazetteers"]:
            raise UsageError(f"--label {label} has no gazetteer")
        gaz = load_gazetteer(cfg["gazetteers"][label], label)
        split, new_ds, new_corpus = entity_disjoint_split(
            corpus, ds, gaz, ratio, seed, nel=_nel(cfg), threshold=float(cfg["threshold"])
        )
    out = _out_dir(cfg)
    stem = _stem(args.md)
    split.write(out / f"{stem}.split.json")
    for part, ids in (("train", split.train_ids), ("test", split.test_ids)):
        write_corpus(new_corpus.subset(ids), out / f"{stem}.{part}.corpus.jsonl")
        write_dataset(new_ds.subset(ids), out / f"{stem}.{part}.md.jsonl")
    print(f"train: {len(split.train_ids)}  test: {len(split.test_ids)}  replaced mentions: {len(split.replaced)}")
    return 0


def cmd_evaluate(args, cfg) -> int:
    gold = load_spans(args.gold)
    pred = load_spans(args.predictions)
    report = score(gold, pred)
    out = _out_dir(cfg)
    stem = _stem(args.predictions)
    _write_json(out / f"{stem}.eval.json", report.to_json())
    table = report.to_table()
    (out / f"{stem}.eval.txt").write_text(table, encoding="utf-8", newline="\n")
    if not args.no_plots:
        from .plotting import plot_eval_report

        plot_eval_report(report, out / f"{stem}.eval.png")
    sys.stdout.write(table)
    return 0


def _spotlight_sources(path: Path, doc_ids) -> dict[str, Path]:
    if path.is_dir():
        return {d: path / f"{d}.json" for d in doc_ids if (path / f"{d}.json").exists()}
    return {path.stem: path}


def cmd_enrich(args, cfg) -> int:
    corpus = _load_corpus_arg(args)
    _require(args.md, args.spotlight)
    ds = read_dataset(args.md)
    ds.validate(corpus)
    sources = _spotlight_sources(Path(args.spotlight), list(ds))
    out = _out_dir(cfg)
    stem = _stem(args.md)
    kg_dir = out / f"{stem}.kg"
    kg_dir.mkdir(exist_ok=True)
    per_doc, skipped = [], []
    for doc_id in ds:
        doc = corpus[doc_id]
        if doc_id in sources:
            annotations, base = ingest_spotlight(sources[doc_id])
        elif args.fetch:
            annotations, base = parse_spotlight(fetch_spotlight(doc.text), where=f"spotlight({doc_id})")
        else:
            skipped.append(doc_id)
            continue
        enriched = enrich(base, annotations, ds[doc_id], doc)
        emit_turtle(enriched, kg_dir / f"{doc_id}.ttl")
        if len(base) == 0:
            log.warning("document %s: empty base graph, excluded from enrichment statistics", doc_id)
            skipped.append(doc_id)
            continue
        per_doc.append((doc_id, enrichment_percentage(base, enriched)))
    if not per_doc:
        raise KGError("no document had a non-empty Spotlight graph")
    report = enrichment_report(per_doc, args.bucket_width, skipped)
    _write_json(out / f"{stem}.enrichment.json", report.to_json())
    text = report.to_text()
    (out / f"{stem}.enrichment.txt").write_text(text, encoding="utf-8", newline="\n")
    if not args.no_plots:
        from .plotting import plot_enrichment_histogram

        plot_enrichment_histogram(report, out / f"{stem}.enrichment.png")
    sys.stdout.write(text)
    return 0


def analysis_export(doc, spans, base: TripleGraph | None = None, annotations=()) -> dict:
    graph_base = base if base is not None else TripleGraph()
    enriched = enrich(graph_base, list(annotations), spans, doc)
    stats = {
        "base_triples": len(graph_base),
        "enriched_triples": len(enriched),
        "added_triples": len(enriched) - len(graph_base),
        "enrichment_percentage": enrichment_percentage(graph_base, enriched) if len(graph_base) else None,
    }
    return {
        "tool_version": __version__,
        "id": doc.id,
        "text": doc.text,
        "entities": [s.to_json() for s in spans],
        "graph": stats,
    }


def cmd_export(args, cfg) -> int:
    corpus = _load_corpus_arg(args)
    _require(args.md)
    ds = read_dataset(args.md)
    if args.doc_id not in ds or args.doc_id not in corpus:
        raise DatasetError(f"unknown document id {args.doc_id!r}")
    base, annotations = None, ()
    if args.spotlight:
        _require(args.spotlight)
        annotations, base = ingest_spotlight(args.spotlight)
    export = analysis_export(corpus[args.doc_id], ds[args.doc_id], base, annotations)
    path = _out_dir(cfg) / f"{args.doc_id}.export.json"
    _write_json(path, export)
    print(f"wrote {path}")
    return 0


# --------------------------------------------------------------------------
# parser

def _common() -> argparse.ArgumentParser:
    # SUPPRESS lets the flags appear before or after the subcommand
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", default=argparse.SUPPRESS, help="TOML settings file; flags override it")
    p.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default: 0)")
    p.add_argument("--out", default=argparse.SUPPRESS, help="output directory (default: .)")
    p.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    return p


def _ratio(value: str) -> float:
    r = float(value)
    if not 0.0 < r < 1.0:
        raise argparse.ArgumentTypeError(f"ratio must be strictly between 0 and 1, got {value}")
    return r


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(
        prog="gazner", description=__doc__.split("\n")[0], parents=[common], formatter_class=fmt
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, help_):
        return sub.add_parser(name, help=help_, description=help_, parents=[common], formatter_class=fmt)

    def corpus_args(p):
        p.add_argument("--corpus-format", choices=("jsonl", "plaintext_dir"), default=None,
                       help="corpus layout; guessed from the path when omitted")

    def lexicon_args(p):
        p.add_argument("--gazetteer", action="append", metavar="LABEL=PATH", default=None,
                       help="gazetteer file for a label; repeat for more labels, earlier wins on overlap")
        p.add_argument("--non-entity", dest="non_entity", default=None, help="non-entity list file")
        p.add_argument("--threshold", type=float, default=None, help="similarity threshold (default: 0.9)")

    def tokenizer_args(p):
        p.add_argument("--stop-words", dest="stop_words", default=None, help="stop-word file (default: built-in list)")
        p.add_argument("--lemma-exceptions", dest="lemma_exceptions", default=None, help="TSV surface<TAB>lemma overrides")

    p = add("annotate", "label a corpus with gazetteers -> <stem>.md.jsonl + <stem>.summary.{json,png}")
    p.add_argument("corpus", help="JSONL corpus or directory of .txt files")
    corpus_args(p)
    lexicon_args(p)
    tokenizer_args(p)
    p.add_argument("--max-gap", dest="max_gap_tokens", type=int, default=None,
                   help="connector tokens allowed between concatenated spans (default: 1)")
    p.add_argument("--connector", action="append", default=None,
                   help=f"connector token; repeatable (default: {' '.join(sorted(DEFAULT_CONNECTORS))})")
    p.add_argument("--punct-connectors", action="store_true", help="treat any single punctuation token as a connector")
    p.add_argument("--no-extension", action="store_true", help="disable neighbour-token extension")
    p.add_argument("--workers", type=int, default=None, help="annotation threads (default: 1)")
    p.add_argument("--no-plots", action="store_true", help="skip the figure")
    p.set_defaults(func=cmd_annotate)

    p = add("serialize", "write training data -> <stem>.<format>.{json,conll}")
    p.add_argument("md", help="MD dataset (JSONL)")
    p.add_argument("corpus", help="corpus the dataset was built from")
    corpus_args(p)
    tokenizer_args(p)
    p.add_argument("--format", required=True, choices=sorted(FORMATS), help="output format")
    p.set_defaults(func=cmd_serialize)

    p = add("split", "train/test split -> <stem>.split.json, <stem>.{train,test}.{corpus,md}.jsonl")
    p.add_argument("md")
    p.add_argument("corpus")
    corpus_args(p)
    lexicon_args(p)
    p.add_argument("--mode", choices=("random", "entity-disjoint"), default="random", help="split scenario")
    p.add_argument("--ratio", type=_ratio, default=None, help="test fraction (default: 0.3)")
    p.add_argument("--label", default=None, help="entity label for entity-disjoint mode (default: first gazetteer)")
    p.set_defaults(func=cmd_split)

    p = add("evaluate", "exact-span P/R/F1 -> <stem>.eval.{json,txt,png}")
    p.add_argument("gold", help="gold MD JSONL or analysis export")
    p.add_argument("predictions", help="predicted spans, same format")
    p.add_argument("--no-plots", action="store_true", help="skip the figure")
    p.set_defaults(func=cmd_evaluate)

    p = add("enrich", "add domain types to Spotlight graphs -> <stem>.kg/<id>.ttl, <stem>.enrichment.{json,txt,png}")
    p.add_argument("spotlight", help="Spotlight JSON file, or directory of <doc id>.json files")
    p.add_argument("md")
    p.add_argument("corpus")
    corpus_args(p)
    p.add_argument("--bucket-width", type=float, default=10.0, help="histogram bucket width in percent")
    p.add_argument("--fetch", action="store_true", help="query $GAZNER_SPOTLIGHT_URL for documents without a file")
    p.add_argument("--no-plots", action="store_true", help="skip the figure")
    p.set_defaults(func=cmd_enrich)

    p = add("export", "one document's analysis as JSON -> <doc id>.export.json")
    p.add_argument("md")
    p.add_argument("corpus")
    p.add_argument("doc_id")
    corpus_args(p)
    p.add_argument("--spotlight", default=None, help="Spotlight JSON for graph statistics")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _settings(args)
        return args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"gazner {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, KeyError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"gazner {args.command}: error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
