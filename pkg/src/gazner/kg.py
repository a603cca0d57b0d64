"""Entity-linking graph ingestion, type enrichment and Turtle output."""

from __future__ import annotations

import json
import os
import re
import statistics
import unicodedata
import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence
from urllib import parse, request

from .annotate import EntitySpan
from .corpus import Document

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
SCHEMA = "http://schema.org/"
DBO = "http://dbpedia.org/ontology/"
DBR = "http://dbpedia.org/resource/"
LOCAL = "http://localhost/gazner/entity/"

DEFAULT_NAMESPACES = {
    "dbpedia": DBO,
    "dbr": DBR,
    "dul": "http://www.ontologydesignpatterns.org/ont/dul/DUL.owl#",
    "local": LOCAL,
    "rdf": RDF,
    "rdfs": RDFS,
    "schema": SCHEMA,
    "wikidata": "http://www.wikidata.org/entity/",
}

RDF_TYPE = RDF + "type"
RDFS_LABEL = RDFS + "label"

# label -> type IRIs asserted for recognized spans
DEFAULT_TYPE_MAP = {
    "PH_ORG": (SCHEMA + "MedicalOrganization",),
    "DRUG": (SCHEMA + "Drug", DBO + "Drug"),
}

SPOTLIGHT_ENV = "GAZNER_SPOTLIGHT_URL"

BASE = "base"
ENRICHED = "enriched"

_PREFIX_RE = re.compile(r"[A-Za-z][A-Za-z0-9_\-]*")
_LOCAL_RE = re.compile(r"[A-Za-z0-9_](?:[A-Za-z0-9_\-]*[A-Za-z0-9_])?")


class KGError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class IRI:
    value: str

    def __post_init__(self):
        if ":" not in self.value or any(c in self.value for c in ' <>"{}|^`\\\n'):
            raise KGError(f"not an absolute IRI: {self.value!r}")


@dataclass(frozen=True, order=True)
class BNode:
    id: str


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str
    lang: str | None = None
    datatype: str | None = None


Term = IRI | BNode | Literal


@dataclass(frozen=True)
class Triple:
    subject: IRI | BNode
    predicate: IRI
    object: Term

    def sort_key(self):
        return (_term_key(self.subject), _term_key(self.predicate), _term_key(self.object))


def _term_key(t: Term) -> tuple:
    if isinstance(t, IRI):
        return (0, t.value)
    if isinstance(t, BNode):
        return (1, t.id)
    return (2, t.lexical, t.lang or "", t.datatype or "")


class TripleGraph:
    """Set of triples, each tagged with provenance (``base`` or ``enriched``).

    Equality and length ignore provenance.
    """

    def __init__(self, triples: Iterable[tuple[Triple, str]] = (), namespaces: Mapping[str, str] | None = None):
        self._prov: dict[Triple, str] = {}
        for t, prov in triples:
            self._prov.setdefault(t, prov)
        self.namespaces = dict(DEFAULT_NAMESPACES if namespaces is None else namespaces)

    @classmethod
    def of(cls, triples: Iterable[Triple], provenance: str = BASE, namespaces=None) -> "TripleGraph":
        return cls(((t, provenance) for t in triples), namespaces)

    def __len__(self) -> int:
        return len(self._prov)

    def __iter__(self):
        return iter(sorted(self._prov, key=Triple.sort_key))

    def __contains__(self, t: Triple) -> bool:
        return t in self._prov

    def __eq__(self, other) -> bool:
        if not isinstance(other, TripleGraph):
            return NotImplemented
        return set(self._prov) == set(other._prov)

    def triples(self) -> frozenset[Triple]:
        return frozenset(self._prov)

    def provenance(self, t: Triple) -> str:
        return self._prov[t]

    def issuperset(self, other: "TripleGraph") -> bool:
        return set(self._prov) >= set(other._prov)

    def with_triples(self, triples: Iterable[Triple], provenance: str) -> "TripleGraph":
        g = TripleGraph(self._prov.items(), self.namespaces)
        for t in triples:
            g._prov.setdefault(t, provenance)
        return g

    def count(self, provenance: str) -> int:
        return sum(1 for p in self._prov.values() if p == provenance)


def expand_curie(value: str, namespaces: Mapping[str, str] = DEFAULT_NAMESPACES) -> IRI:
    """Expand ``prefix:local`` (prefix case-insensitive) or accept an absolute IRI."""
    value = value.strip()
    if re.match(r"(?i)https?://", value) or value.startswith("urn:"):
        return IRI(value)
    prefix, sep, local = value.partition(":")
    ns = {k.lower(): v for k, v in namespaces.items()}.get(prefix.lower())
    if not sep or ns is None:
        raise KGError(f"unknown prefix in {value!r}")
    return IRI(ns + local)


@dataclass(frozen=True)
class LinkedAnnotation:
    surface: str
    offset: int
    uri: IRI
    types: tuple[IRI, ...] = ()
    confidence: float = 0.0

    @property
    def end(self) -> int:
        return self.offset + len(self.surface)


def parse_spotlight(obj: dict, namespaces: Mapping[str, str] = DEFAULT_NAMESPACES, where: str = "<spotlight>"):
    if not isinstance(obj, dict) or "Resources" not in obj:
        raise KGError(f"{where}: missing 'Resources'")
    resources = obj["Resources"]
    if not isinstance(resources, list):
        raise KGError(f"{where}: 'Resources' must be an array")
    annotations = []
    triples = []
    for i, res in enumerate(resources):
        try:
            offset = int(str(res["@offset"]))
        except (KeyError, ValueError):
            raise KGError(f"{where}: resource {i}: malformed offset {res.get('@offset')!r}") from None
        if offset < 0:
            raise KGError(f"{where}: resource {i}: malformed offset {offset}")
        try:
            uri = expand_curie(res["@URI"], namespaces)
            surface = str(res["@surfaceForm"])
        except KeyError as exc:
            raise KGError(f"{where}: resource {i}: missing field {exc}") from None
        types = tuple(expand_curie(t, namespaces) for t in str(res.get("@types", "")).split(",") if t.strip())
        try:
            confidence = float(res.get("@similarityScore", 0.0))
        except ValueError:
            raise KGError(f"{where}: resource {i}: malformed similarity score") from None
        annotations.append(LinkedAnnotation(surface, offset, uri, types, confidence))
        triples.extend(Triple(uri, IRI(RDF_TYPE), t) for t in types)
        triples.append(Triple(uri, IRI(RDFS_LABEL), Literal(surface)))
    return annotations, TripleGraph.of(triples, BASE, namespaces)


def ingest_spotlight(path: str | Path, namespaces: Mapping[str, str] = DEFAULT_NAMESPACES):
    """Read a Spotlight ``/annotate`` JSON response into annotations and a base graph."""
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise KGError(f"{path}: malformed JSON ({exc.msg})") from None
    return parse_spotlight(obj, namespaces, str(path))


def fetch_spotlight(text: str, endpoint: str | None = None, confidence: float = 0.5, timeout: float = 30.0) -> dict:
    """Query a Spotlight ``/annotate`` endpoint (URL from ``$GAZNER_SPOTLIGHT_URL``)."""
    endpoint = endpoint or os.environ.get(SPOTLIGHT_ENV)
    if not endpoint:
        raise KGError(f"no Spotlight endpoint configured (set {SPOTLIGHT_ENV})")
    data = parse.urlencode({"text": text, "confidence": confidence}).encode()
    req = request.Request(endpoint, data=data, headers={"Accept": "application/json"})
    with request.urlopen(req, timeout=timeout) as resp:
        return json.loads(resp.read().decode("utf-8"))


def slugify(surface: str) -> str:
    ascii_text = unicodedata.normalize("NFKD", surface).encode("ascii", "ignore").decode()
    slug = re.sub(r"[^a-z0-9]+", "-", ascii_text.lower()).strip("-")
    return slug or "entity-" + hashlib.sha1(surface.encode("utf-8")).hexdigest()[:10]


def _linked(span: EntitySpan, annotations: Sequence[LinkedAnnotation]) -> LinkedAnnotation | None:
    best = None
    best_rank = None
    for a in annotations:
        overlap = min(span.end, a.end) - max(span.start, a.offset)
        if overlap <= 0:
            continue
        rank = (-overlap, -a.confidence, a.uri.value)
        if best_rank is None or rank < best_rank:
            best, best_rank = a, rank
    return best


def enrich(
    base: TripleGraph,
    annotations: Sequence[LinkedAnnotation],
    spans: Sequence[EntitySpan],
    doc: Document | None = None,
    type_map: Mapping[str, Sequence[str]] = DEFAULT_TYPE_MAP,
    local_ns: str | None = None,
) -> TripleGraph:
    """Add domain type triples for recognized spans.

    A span overlapping a linked annotation reuses its IRI; otherwise an IRI is
    minted in the local namespace from a slug of the surface, with a label.
    Spans with labels outside ``type_map`` are ignored.
    """
    local_ns = local_ns or base.namespaces.get("local", LOCAL)
    added = []
    for span in spans:
        types = type_map.get(span.label)
        if not types:
            continue
        surface = doc.text[span.start : span.end] if doc is not None else span.surface
        link = _linked(span, annotations)
        if link is not None:
            subject = link.uri
        else:
            subject = IRI(local_ns + slugify(surface))
            added.append(Triple(subject, IRI(RDFS_LABEL), Literal(surface)))
        added.extend(Triple(subject, IRI(RDF_TYPE), IRI(t)) for t in types)
    return base.with_triples(added, ENRICHED)


def enrichment_percentage(base: TripleGraph, enriched: TripleGraph) -> float:
    """Growth of the graph in percent of the base size."""
    if len(base) == 0:
        raise KGError("empty base graph: enrichment percentage undefined")
    if not enriched.issuperset(base):
        raise KGError("enriched graph does not contain the base graph")
    return 100.0 * (len(enriched) - len(base)) / len(base)


# --------------------------------------------------------------------------
# Turtle

def _escape(s: str) -> str:
    out = []
    for ch in s:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


class _Compactor:
    def __init__(self, namespaces: Mapping[str, str]):
        for prefix in namespaces:
            if not _PREFIX_RE.fullmatch(prefix):
                raise KGError(f"invalid namespace prefix {prefix!r}")
        # longest namespace first so nested namespaces pick the specific prefix
        self.ns = sorted(namespaces.items(), key=lambda kv: (-len(kv[1]), kv[0]))

    def iri(self, value: str) -> str:
        for prefix, ns in self.ns:
            if value.startswith(ns) and _LOCAL_RE.fullmatch(value[len(ns):]):
                return f"{prefix}:{value[len(ns):]}"
        return f"<{value}>"

    def term(self, t: Term) -> str:
        if isinstance(t, IRI):
            return self.iri(t.value)
        if isinstance(t, BNode):
            return f"_:{t.id}"
        lit = f'"{_escape(t.lexical)}"'
        if t.lang:
            return f"{lit}@{t.lang}"
        if t.datatype:
            return f"{lit}^^{self.iri(t.datatype)}"
        return lit


def to_turtle(graph: TripleGraph) -> str:
    comp = _Compactor(graph.namespaces)
    lines = [f"@prefix {p}: <{ns}> ." for p, ns in sorted(graph.namespaces.items())]
    by_subject: dict = {}
    for t in graph:  # sorted
        by_subject.setdefault(t.subject, {}).setdefault(t.predicate, []).append(t.object)
    for subject, preds in by_subject.items():
        lines.append("")
        chunks = []
        for pred, objs in preds.items():
            p = "a" if pred.value == RDF_TYPE else comp.iri(pred.value)
            chunks.append(f"{p} " + " , ".join(comp.term(o) for o in objs))
        body = " ;\n    ".join(chunks)
        lines.append(f"{comp.term(subject)} {body} .")
    return "\n".join(lines) + "\n"


def emit_turtle(graph: TripleGraph, path: str | Path) -> None:
    text = to_turtle(graph)
    try:
        Path(path).write_text(text, encoding="utf-8", newline="\n")
    except OSError as exc:
        raise KGError(f"cannot write {path}: {exc.strerror}") from None


# --------------------------------------------------------------------------
# enrichment distribution

@dataclass(frozen=True)
class EnrichmentReport:
    per_doc: tuple[tuple[str, float], ...]
    bucket_width: float
    histogram: tuple[tuple[float, float, int], ...]
    mean: float
    median: float
    stddev: float
    skipped: tuple[str, ...] = field(default=())

    def to_json(self) -> dict:
        return {
            "per_doc": [{"id": d, "percentage": round(v, 6)} for d, v in self.per_doc],
            "mean": round(self.mean, 6),
            "median": round(self.median, 6),
            "stddev": round(self.stddev, 6),
            "bucket_width": self.bucket_width,
            "histogram": [{"lo": lo, "hi": hi, "count": n} for lo, hi, n in self.histogram],
            "skipped": list(self.skipped),
        }

    def to_text(self) -> str:
        width = max((n for *_, n in self.histogram), default=0)
        lines = [f"{'bucket':>15}  count"]
        for lo, hi, n in self.histogram:
            bar = "#" * n if width <= 50 else "#" * round(50 * n / width)
            lines.append(f"[{lo:6.1f},{hi:6.1f})  {n:5d}  {bar}".rstrip())
        lines.append(f"documents={len(self.per_doc)} mean={self.mean:.2f} median={self.median:.2f} stddev={self.stddev:.2f}")
        return "\n".join(lines) + "\n"


def enrichment_report(
    per_doc: Sequence[tuple[str, float]], bucket_width: float = 10.0, skipped: Sequence[str] = ()
) -> EnrichmentReport:
    """Fixed-width histogram of per-document enrichment plus mean/median/stddev.

    Buckets are half-open ``[k*w, (k+1)*w)`` from 0 to the bucket holding the
    maximum; the standard deviation is the population one.
    """
    if not per_doc:
        raise KGError("no per-document enrichment values")
    if bucket_width <= 0:
        raise ValueError("bucket width must be positive")
    values = [v for _, v in per_doc]
    if any(v < 0 for v in values):
        raise KGError("enrichment percentages must be >= 0")
    n_buckets = int(max(values) // bucket_width) + 1
    counts = [0] * n_buckets
    for v in values:
        counts[int(v // bucket_width)] += 1
    histogram = tuple((k * bucket_width, (k + 1) * bucket_width, c) for k, c in enumerate(counts))
    return EnrichmentReport(
        per_doc=tuple(per_doc),
        bucket_width=bucket_width,
        histogram=histogram,
        mean=statistics.fmean(values),
        median=statistics.median(values),
        stddev=statistics.pstdev(values),
        skipped=tuple(skipped),
    )
