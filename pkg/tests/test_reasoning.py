import pytest

from ergstore.engine import Store
from ergstore.ingest import graph_triples
from ergstore.oracle import rdfs_closure
from ergstore.rdf import IRI, RDF_TYPE, Literal, Triple
from ergstore.reasoning import (
    DOMAIN,
    INFERRED,
    INVERSE,
    RANGE,
    SUBCLASS,
    SUBPROPERTY,
    SYMMETRIC,
    TRANSITIVE,
    TBox,
    extract_tbox,
    forward_chain,
)

EX = "http://ex.org/"


def t(s, p, o):
    def term(x):
        if isinstance(x, (IRI, Literal)):
            return x
        return IRI(x if x.startswith("http") else EX + x)
    return Triple(term(s), term(p), term(o))


def a(x, c):
    return t(x, RDF_TYPE, c)


def closure_of(*triples):
    store = Store.from_triples(triples, forward_chaining=True)
    return graph_triples(store.graph) - set(triples)


@pytest.mark.parametrize("facts,derived", [
    ([t("Cat", SUBCLASS, "Animal"), a("tom", "Cat")], {a("tom", "Animal")}),
    ([t("Cat", SUBCLASS, "Pet"), t("Pet", SUBCLASS, "Animal"), a("tom", "Cat")],
     {a("tom", "Pet"), a("tom", "Animal")}),
    ([t("hasMother", SUBPROPERTY, "hasParent"), t("tom", "hasMother", "ann")], {t("tom", "hasParent", "ann")}),
    ([t("name", SUBPROPERTY, "label"), t("tom", "name", Literal("Tom"))], {t("tom", "label", Literal("Tom"))}),
    ([t("owns", DOMAIN, "Owner"), t("tom", "owns", "car")], {a("tom", "Owner")}),
    ([t("age", DOMAIN, "Aged"), t("tom", "age", Literal("3"))], {a("tom", "Aged")}),
    ([t("owns", RANGE, "Thing"), t("tom", "owns", "car")], {a("car", "Thing")}),
    # range never types a literal
    ([t("age", RANGE, "Number"), t("tom", "age", Literal("3"))], set()),
    ([t("parentOf", INVERSE, "childOf"), t("ann", "parentOf", "tom")], {t("tom", "childOf", "ann")}),
    ([t("parentOf", INVERSE, "childOf"), t("tom", "childOf", "ann")], {t("ann", "parentOf", "tom")}),
    ([a("knows", SYMMETRIC), t("tom", "knows", "ann")], {t("ann", "knows", "tom")}),
    ([a("anc", TRANSITIVE), t("x", "anc", "y"), t("y", "anc", "z")], {t("x", "anc", "z")}),
])
def test_each_rule(facts, derived):
    assert closure_of(*facts) == derived


def test_rules_interact():
    facts = [
        a("anc", TRANSITIVE), t("parent", SUBPROPERTY, "anc"), t("anc", DOMAIN, "Person"),
        t("a", "parent", "b"), t("b", "parent", "c"),
    ]
    got = closure_of(*facts)
    assert t("a", "anc", "c") in got
    assert {a(x, "Person") for x in "ab"} <= got
    assert got == rdfs_closure(facts, extract_tbox(facts)) - set(facts)


def test_subclass_cycle_terminates():
    facts = [t("A", SUBCLASS, "B"), t("B", SUBCLASS, "A"), a("x", "A")]
    assert closure_of(*facts) == {a("x", "B")}


def test_inferred_facts_are_marked():
    store = Store.from_triples([t("Cat", SUBCLASS, "Animal"), a("tom", "Cat")], forward_chaining=True)
    flags = [e.properties.get(INFERRED) for e in store.graph.edges.values()]
    assert sum(1 for f in flags if f) == 1
    assert store.materialized


def test_second_run_derives_nothing():
    facts = [a("anc", TRANSITIVE)] + [t(f"v{i}", "anc", f"v{i + 1}") for i in range(6)]
    store = Store.from_triples(facts, forward_chaining=True)
    before = store.graph.counts()
    report = forward_chain(store.graph, store.meta, store.tbox)
    assert report.derived_count == 0
    assert store.graph.counts() == before


def test_tbox_extraction():
    tbox = TBox()
    assert tbox.is_empty()
    assert tbox.add(t("A", SUBCLASS, "B"))
    assert not tbox.add(a("x", "A"))
    assert not tbox.add(t("A", SUBCLASS, Literal("B")))
    tbox.add(t("C", SUBCLASS, "A"))
    tbox.add(t("p", INVERSE, "q"))
    assert tbox.subclasses(EX + "B") == [EX + "A", EX + "C"]
    assert tbox.inverse_of[EX + "q"] == {EX + "p"}
    assert not tbox.is_empty()
