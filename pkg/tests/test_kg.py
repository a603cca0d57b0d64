import json
import math
import random

import pytest
import rdflib
from hypothesis import given, strategies as st

from gazner.annotate import EntitySpan
from gazner.corpus import Document
from gazner.kg import (
    DBO,
    DBR,
    LOCAL,
    RDF_TYPE,
    RDFS_LABEL,
    SCHEMA,
    IRI,
    BNode,
    KGError,
    LinkedAnnotation,
    Literal,
    Triple,
    TripleGraph,
    emit_turtle,
    enrich,
    enrichment_percentage,
    enrichment_report,
    expand_curie,
    ingest_spotlight,
    parse_spotlight,
    slugify,
    to_turtle,
)
from synth import random_kg_case
from turtle_reader import parse_turtle

TYPE = IRI(RDF_TYPE)


def as_reader_set(graph):
    def term(t):
        if isinstance(t, IRI):
            return ("iri", t.value)
        if isinstance(t, BNode):
            return ("bnode", t.id)
        return ("lit", t.lexical, t.lang, t.datatype)

    return {(term(t.subject), term(t.predicate), term(t.object)) for t in graph}


def as_rdflib_set(graph):
    def term(t):
        if isinstance(t, IRI):
            return rdflib.URIRef(t.value)
        if isinstance(t, BNode):
            return rdflib.BNode(t.id)
        return rdflib.Literal(t.lexical, lang=t.lang, datatype=rdflib.URIRef(t.datatype) if t.datatype else None)

    return {(term(t.subject), term(t.predicate), term(t.object)) for t in graph}


def base_of_ten():
    s1, s2 = IRI(DBR + "Sanofi"), IRI(DBR + "Regeneron")
    triples = [
        Triple(s1, TYPE, IRI(SCHEMA + "Organization")),
        Triple(s1, TYPE, IRI(DBO + "Company")),
        Triple(s1, TYPE, IRI(DBO + "Organisation")),
        Triple(s1, IRI(RDFS_LABEL), Literal("Sanofi")),
        Triple(s2, TYPE, IRI(SCHEMA + "Organization")),
        Triple(s2, TYPE, IRI(DBO + "Company")),
        Triple(s2, IRI(RDFS_LABEL), Literal("Regeneron")),
        Triple(IRI(DBR + "France"), TYPE, IRI(SCHEMA + "Place")),
        Triple(IRI(DBR + "France"), IRI(RDFS_LABEL), Literal("France", lang="en")),
        Triple(IRI(DBR + "Europe"), TYPE, IRI(DBO + "Continent")),
    ]
    anns = [
        LinkedAnnotation("Sanofi", 0, s1, confidence=0.99),
        LinkedAnnotation("Regeneron", 11, s2, confidence=0.98),
    ]
    return TripleGraph.of(triples), anns


TEXT = "Sanofi and Regeneron sell Dupixent."
SPANS = [
    EntitySpan(0, 6, "Sanofi", "PH_ORG"),
    EntitySpan(11, 20, "Regeneron", "PH_ORG"),
    EntitySpan(26, 34, "Dupixent", "DRUG"),
]


def test_ten_plus_five_is_fifty_percent():
    base, anns = base_of_ten()
    assert len(base) == 10
    enriched = enrich(base, anns, SPANS, Document("d", TEXT))
    # 2 linked orgs x 1 type + unlinked drug: label + 2 types
    assert len(enriched) - len(base) == 5
    assert enrichment_percentage(base, enriched) == 50.0
    assert f"{enrichment_percentage(base, enriched):.2f}" == "50.00"
    assert enriched.count("enriched") == 5 and enriched.count("base") == 10
    drug = IRI(LOCAL + "dupixent")
    assert Triple(drug, IRI(RDFS_LABEL), Literal("Dupixent")) in enriched
    assert Triple(drug, TYPE, IRI(DBO + "Drug")) in enriched
    assert Triple(IRI(DBR + "Sanofi"), TYPE, IRI(SCHEMA + "MedicalOrganization")) in enriched


def test_empty_base_is_an_error():
    with pytest.raises(KGError, match="empty base"):
        enrichment_percentage(TripleGraph(), TripleGraph())


@pytest.mark.parametrize("seed", range(20))
def test_enrich_idempotent_and_monotone(seed):
    base, anns, spans, doc = random_kg_case(random.Random(seed))
    once = enrich(base, anns, spans, doc)
    assert once.issuperset(base)
    assert enrich(once, anns, spans, doc) == once
    assert all(once.provenance(t) == "base" for t in base)
    # round trip through the independent reader and through rdflib
    ttl = to_turtle(once)
    assert parse_turtle(ttl) == as_reader_set(once)
    g = rdflib.Graph().parse(data=ttl, format="turtle")
    assert {(s, p, o) for s, p, o in g if not isinstance(s, rdflib.BNode) and not isinstance(o, rdflib.BNode)} == {
        t for t in as_rdflib_set(once) if not isinstance(t[0], rdflib.BNode) and not isinstance(t[2], rdflib.BNode)
    }
    assert len(g) == len(once)


def test_turtle_is_deterministic_and_grouped(tmp_path):
    base, anns = base_of_ten()
    enriched = enrich(base, anns, SPANS, Document("d", TEXT))
    ttl = to_turtle(enriched)
    assert ttl == to_turtle(TripleGraph.of(reversed(list(enriched))))
    assert "dbr:Sanofi a dbpedia:Company" in ttl
    assert '"France"@en' in ttl
    emit_turtle(enriched, tmp_path / "g.ttl")
    assert (tmp_path / "g.ttl").read_text() == ttl


_lit = st.text(st.characters(blacklist_categories=("Cs",)), max_size=12)


@given(st.lists(st.tuples(st.integers(0, 3), _lit, st.sampled_from([None, "en", "de-CH"])), min_size=1, max_size=6))
def test_literal_escaping_roundtrip(rows):
    triples = [Triple(IRI(DBR + f"S{i}"), IRI(RDFS_LABEL), Literal(text, lang)) for i, text, lang in rows]
    graph = TripleGraph.of(triples)
    assert parse_turtle(to_turtle(graph)) == as_reader_set(graph)


def test_unusual_iris_fall_back_to_angle_brackets():
    g = TripleGraph.of([Triple(IRI(DBR + "Merck_&_Co."), TYPE, IRI(SCHEMA + "Organization"))])
    ttl = to_turtle(g)
    assert "<http://dbpedia.org/resource/Merck_&_Co.>" in ttl
    assert parse_turtle(ttl) == as_reader_set(g)


def test_invalid_prefix_rejected():
    g = TripleGraph.of([Triple(IRI(DBR + "X"), TYPE, IRI(SCHEMA + "Y"))], namespaces={"bad prefix": DBR})
    with pytest.raises(KGError, match="prefix"):
        to_turtle(g)


def test_spotlight_ingest(tmp_path):
    obj = {
        "@text": "Sanofi in Europe",
        "Resources": [
            {"@URI": "http://dbpedia.org/resource/Sanofi", "@types": "Schema:Organization,DBpedia:Company",
             "@surfaceForm": "Sanofi", "@offset": "0", "@similarityScore": "0.99"},
            {"@URI": "http://dbpedia.org/resource/Europe", "@types": "",
             "@surfaceForm": "Europe", "@offset": "10", "@similarityScore": "0.9"},
        ],
    }
    path = tmp_path / "s.json"
    path.write_text(json.dumps(obj))
    anns, base = ingest_spotlight(path)
    assert [(a.surface, a.offset, a.uri.value) for a in anns] == [
        ("Sanofi", 0, DBR + "Sanofi"),
        ("Europe", 10, DBR + "Europe"),
    ]
    assert anns[0].types == (IRI(SCHEMA + "Organization"), IRI(DBO + "Company"))
    assert len(base) == 4


@pytest.mark.parametrize(
    "obj, msg",
    [
        ({}, "Resources"),
        ({"Resources": [{"@URI": DBR + "X", "@surfaceForm": "X", "@offset": "abc"}]}, "offset"),
        ({"Resources": [{"@URI": DBR + "X", "@surfaceForm": "X", "@offset": "0", "@types": "Foo:Bar"}]}, "prefix"),
    ],
)
def test_spotlight_errors(obj, msg):
    with pytest.raises(KGError, match=msg):
        parse_spotlight(obj)


def test_spotlight_bad_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{")
    with pytest.raises(KGError, match="malformed JSON"):
        ingest_spotlight(path)


def test_expand_curie():
    assert expand_curie("DBpedia:Company") == IRI(DBO + "Company")
    assert expand_curie("schema:Drug") == IRI(SCHEMA + "Drug")
    assert expand_curie("http://example.org/x") == IRI("http://example.org/x")


def test_slugify():
    assert slugify("J & J") == "j-j"
    assert slugify("Sanofi Pasteur") == "sanofi-pasteur"
    assert slugify("Nestlé") == "nestle"
    assert slugify("&&").startswith("entity-")


def test_overlapping_annotation_tiebreak():
    a = LinkedAnnotation("Sanofi", 0, IRI(DBR + "Sanofi"), confidence=0.5)
    b = LinkedAnnotation("Sanofi Pasteur", 0, IRI(DBR + "Sanofi_Pasteur"), confidence=0.9)
    span = EntitySpan(0, 14, "Sanofi Pasteur", "PH_ORG")
    g = enrich(TripleGraph(), [a, b], [span])
    assert list(g) == [Triple(IRI(DBR + "Sanofi_Pasteur"), TYPE, IRI(SCHEMA + "MedicalOrganization"))]


def test_report_hand_fixture():
    # doc1: 10 base + 5 -> 50 ; doc2: 4 base + 1 -> 25 ; doc3: +0 -> 0
    rep = enrichment_report([("doc1", 50.0), ("doc2", 25.0), ("doc3", 0.0)])
    assert rep.mean == 25.0
    assert rep.median == 25.0
    assert rep.stddev == pytest.approx(math.sqrt(1250 / 3), abs=1e-12)
    assert [(lo, hi, n) for lo, hi, n in rep.histogram] == [
        (0.0, 10.0, 1), (10.0, 20.0, 0), (20.0, 30.0, 1), (30.0, 40.0, 0), (40.0, 50.0, 0), (50.0, 60.0, 1),
    ]
    assert "mean=25.00" in rep.to_text()
    assert rep.to_json()["histogram"][5] == {"lo": 50.0, "hi": 60.0, "count": 1}


@given(st.lists(st.floats(0, 300, allow_nan=False), min_size=1, max_size=30))
def test_report_mean_oracle(values):
    rep = enrichment_report([(str(i), v) for i, v in enumerate(values)])
    assert rep.mean == pytest.approx(sum(values) / len(values))
    assert sum(n for *_, n in rep.histogram) == len(values)
    for v in values:
        assert any(lo <= v < hi for lo, hi, _ in rep.histogram)
