import pytest

from ergstore.engine import Store
from ergstore.predicates import UNBOUND, Ref
from ergstore.predicates import ValuePredicate as P
from ergstore.rdf import IRI, RDF_TYPE, XSD, Literal
from ergstore.sample import SP, sample_triples
from ergstore.sparql.ast import UnsupportedFeature
from ergstore.traversal import steps as S
from ergstore.traversal.evaluator import QueryTimeout, evaluate
from ergstore.traversal.explain import ExplainSyntaxError, explain, parse_explain
from ergstore.traversal.optimize import optimize
from ergstore.traversal.steps import Traversal, __

from randgen import case


@pytest.fixture(scope="module")
def g():
    return Store.from_triples(sample_triples()).graph


def run(g, t, **kw):
    return [tr.cur for tr in evaluate(g, t, **kw)]


def iri(name):
    return IRI(SP + name)


def test_vertex_scan_and_has(g):
    gods = Traversal().V().has("iri", P("eq", iri("god"))).in_(RDF_TYPE).values("iri")
    assert run(g, gods) == [iri("jupiter"), iri("pluto"), iri("neptune")]
    old = Traversal().V().has(SP + "age", P("gt", Literal("4000", XSD + "integer"))).values("iri")
    assert set(run(g, old)) == {iri("jupiter"), iri("neptune")}


def test_optional_keeps_unmatched(g):
    t = (Traversal().V().has("iri", P("eq", iri("god"))).in_(RDF_TYPE).as_("p")
         .constant(UNBOUND).as_("f").select("p")
         .optional(__.out(SP + "father").as_("f")).select("f"))
    fathers = run(g, t)
    assert len(fathers) == 3
    assert fathers.count(UNBOUND) == 2


def test_repeat_emit_closure(g):
    t = Traversal().V().has("iri", P("eq", iri("hercules"))).emit().repeat(__.out(SP + "father")).values("iri")
    assert run(g, t) == [iri("hercules"), iri("jupiter"), iri("saturn")]


def test_union_dedup_order_range(g):
    t = (Traversal().V().has("iri", P("eq", iri("jupiter")))
         .union(__.out(SP + "brother"), __.out(SP + "brother"), __.out(SP + "father")).values("iri"))
    assert len(run(g, t)) == 5
    assert len(run(g, t.dedup())) == 3
    names = Traversal().V().values(SP + "name").order(S.OrderKey("_")).range(1, 3)
    assert run(g, names) == [Literal("hercules"), Literal("jupiter")]


def test_count_and_math(g):
    assert run(g, Traversal().V().values(SP + "name").count()) == [Literal("6", XSD + "integer")]
    assert run(g, Traversal().inject(1).math("3 / 2 + abs(-2)")) == [Literal("3.5", XSD + "decimal")]


def test_where_with_binding_reference(g):
    # vertices whose age equals a bound value
    t = (Traversal().inject(1).constant(Literal("45", XSD + "integer")).as_("a")
         .V().has(SP + "age", P("eq", Ref("a"))).values("iri"))
    assert run(g, t) == [iri("alcmene")]


def test_timeout():
    g = Store.from_triples(case(3)[0]).graph
    t = Traversal().V().as_("a").V().as_("b").V().as_("c").V().as_("d").V().count()
    with pytest.raises(QueryTimeout):
        run(g, t, timeout=0.2)


def test_optimizer_fuses_index_lookups(g):
    t = Traversal().V().as_("x").has("iri", P("eq", iri("god"))).in_(RDF_TYPE)
    fused = optimize(t)
    assert isinstance(fused.steps[0], S.IndexLookup)
    assert isinstance(optimize(Traversal().V().outE(SP + "father")).steps[0], S.IncidentLookup)
    g.stats.update(full_scans=0, index_lookups=0)
    assert run(g, fused) == run(g, t)
    assert g.stats["full_scans"] == 1  # only the unoptimized run scanned


def test_explain_round_trip_for_compiled_queries():
    for i in range(0, 260, 3):
        triples, text, _ = case(i)
        store = Store.from_triples(triples)
        for opt in (False, True):
            try:
                _, t = store.prepare(text, use_optimizer=opt)
            except UnsupportedFeature:
                continue
            text_form = explain(t)
            assert parse_explain(text_form) == t
            assert explain(parse_explain(text_form)) == text_form


@pytest.mark.parametrize("bad", ["g.V(", "g.frobnicate()", "V().out()", "g.has('k', nope(1))", "g.V().as($)"])
def test_explain_syntax_errors(bad):
    with pytest.raises(ExplainSyntaxError):
        parse_explain(bad)
