import pytest

from ergstore.compiler import compile as compile_query
from ergstore.engine import Store
from ergstore.ingest import MetaCatalog
from ergstore.rdf import IRI, RDF_TYPE, RDFS, Triple
from ergstore.reasoning import extract_tbox
from ergstore.sample import SAMPLE_QUERY, SP, sample_triples
from ergstore.sparql.ast import Alternatives, TriplePattern, UnsupportedFeature
from ergstore.sparql.expand import expand_prefixes, expand_query, reorder_bgp
from ergstore.sparql.parser import parse_sparql
from ergstore.traversal.explain import explain

SAMPLE_PLAN = (
    "g.inject(1).constant(N/A).as('P','F')"
    ".V().has('iri',eq(<http://sampleRDF.org/god>)).as('PTypev')"
    ".inE('http://www.w3.org/1999/02/22-rdf-syntax-ns#type').outV().as('Pv')"
    ".properties('iri').value().as('P')"
    ".optional(__.select('Pv').outE('http://sampleRDF.org/father').as('Fe').inV().as('Fv')"
    ".values('iri').as('F'))"
    ".select('P','F')"
)


@pytest.fixture(scope="module")
def store():
    return Store.from_triples(sample_triples())


def test_sample_plan_golden(store):
    assert store.explain(SAMPLE_QUERY, use_optimizer=False) == SAMPLE_PLAN
    fused = store.explain(SAMPLE_QUERY)
    assert fused == SAMPLE_PLAN.replace(".V().has('iri',", ".indexLookup('iri',")


def test_literal_predicates_become_property_steps(store):
    plan = store.explain(f"PREFIX sp: <{SP}> SELECT ?n WHERE {{ ?x sp:name ?n }}")
    assert f"properties('{SP}name')" in plan
    assert "outE" not in plan


def test_mixed_predicate_tries_both_shapes(store):
    plan = store.explain(f"PREFIX sp: <{SP}> SELECT ?w WHERE {{ ?x sp:lives ?w }}")
    assert "union(" in plan
    assert f"outE('{SP}lives')" in plan and f"properties('{SP}lives')" in plan
    rows = store.query(f"PREFIX sp: <{SP}> SELECT ?w WHERE {{ ?x sp:lives ?w }}").to_tsv().splitlines()[1:]
    assert sorted(rows) == ['"sea"', f"<{SP}sky>"]


def test_filter_becomes_where(store):
    plan = store.explain(f"PREFIX sp: <{SP}> SELECT ?n WHERE {{ ?x sp:age ?a ; sp:name ?n FILTER(?a > 4000) }}")
    assert ".where(__.select('a').is(gt(" in plan


def test_unknown_predicate_compiles_to_empty(store):
    q = expand_prefixes(parse_sparql("SELECT * WHERE { ?s <http://p> ?o }"))
    assert ".not(__.identity())" in explain(compile_query(q, store.meta))
    assert len(store.query(q)) == 0


def test_unsupported_constructs_are_named(store):
    with pytest.raises(UnsupportedFeature):
        store.query("CONSTRUCT { _:b <http://p> ?o } WHERE { ?s <http://p> ?o }")
    with pytest.raises(UnsupportedFeature):
        store.query(f"PREFIX sp: <{SP}> SELECT * WHERE {{ ?x sp:lives+ ?y }}")


def test_bgp_reordering_starts_from_constants():
    store = Store.from_triples(sample_triples())
    q = expand_prefixes(parse_sparql(
        f"PREFIX sp: <{SP}> SELECT * WHERE {{ ?x sp:name ?n . ?x sp:father ?f . ?f a sp:titan }}"))
    reordered = reorder_bgp(q.pattern, store.meta)
    assert reordered.elements[0].o == IRI(SP + "titan")
    assert sorted(map(repr, reordered.elements)) == sorted(map(repr, q.pattern.elements))
    assert reorder_bgp(q.pattern, MetaCatalog()).elements  # no statistics still yields a plan


def test_schema_expansion():
    tbox = extract_tbox([
        Triple(IRI(SP + "god"), IRI(RDFS + "subClassOf"), IRI(SP + "deity")),
        Triple(IRI(SP + "titan"), IRI(RDFS + "subClassOf"), IRI(SP + "deity")),
    ])
    q = expand_prefixes(parse_sparql(f"PREFIX sp: <{SP}> SELECT ?x WHERE {{ ?x a sp:deity }}"))
    (alt,) = expand_query(q, tbox).pattern.elements
    assert isinstance(alt, Alternatives)
    assert {tp.o.value for tp in alt.patterns} == {SP + "deity", SP + "god", SP + "titan"}
    assert all(isinstance(tp, TriplePattern) and tp.p == IRI(RDF_TYPE) for tp in alt.patterns)
    assert expand_query(q, tbox, materialized=True) is q

    store = Store.from_triples(sample_triples() + [
        Triple(IRI(SP + "god"), IRI(RDFS + "subClassOf"), IRI(SP + "deity")),
        Triple(IRI(SP + "titan"), IRI(RDFS + "subClassOf"), IRI(SP + "deity")),
    ])
    assert len(store.query(f"PREFIX sp: <{SP}> SELECT ?x WHERE {{ ?x a sp:deity }}")) == 4
