"""TBox extraction and forward chaining over a loaded property graph.

Rules (fixed TBox, semi-naive evaluation):

    R1  x type C,  C subClassOf D        =>  x type D
    R2  x p y,     p subPropertyOf q     =>  x q y
    R3  x p y,     p domain C            =>  x type C
    R4  x p y,     p range C             =>  y type C      (y a resource)
    R5  x p y,     p inverseOf q         =>  y q x         (y a resource)
    R6  x p y,     p symmetric           =>  y p x         (y a resource)
    R7  x p y, y p z, p transitive       =>  x p z
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable

from ergstore.graph import IRI_KEY, META_LABEL, PropertyGraph
from ergstore.ingest import (
    LITERAL,
    REFERENT,
    MetaCatalog,
    literal_scalar,
    property_term,
    resolve_vertex,
    update_predicate_meta,
)
from ergstore.rdf import IRI, OWL, RDF_TYPE, RDFS, Triple

SUBCLASS = RDFS + "subClassOf"
SUBPROPERTY = RDFS + "subPropertyOf"
DOMAIN = RDFS + "domain"
RANGE = RDFS + "range"
INVERSE = OWL + "inverseOf"
SYMMETRIC = OWL + "SymmetricProperty"
TRANSITIVE = OWL + "TransitiveProperty"

INFERRED = "inferred"


@dataclass
class TBox:
    sub_class_of: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))
    sub_property_of: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))
    inverse_of: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))
    symmetric_props: set[str] = field(default_factory=set)
    transitive_props: set[str] = field(default_factory=set)
    rdfs_domain: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))
    rdfs_range: dict[str, set[str]] = field(default_factory=lambda: defaultdict(set))

    def is_empty(self) -> bool:
        return not any((
            self.sub_class_of, self.sub_property_of, self.inverse_of, self.symmetric_props,
            self.transitive_props, self.rdfs_domain, self.rdfs_range,
        ))

    def add(self, t: Triple) -> bool:
        """Record ``t`` if it is a schema axiom; returns whether it was one."""
        p = t.p.value
        if not isinstance(t.s, IRI):
            return False
        s = t.s.value
        if p == RDF_TYPE and isinstance(t.o, IRI):
            if t.o.value == SYMMETRIC:
                self.symmetric_props.add(s)
                return True
            if t.o.value == TRANSITIVE:
                self.transitive_props.add(s)
                return True
            return False
        if not isinstance(t.o, IRI):
            return False
        o = t.o.value
        if p == SUBCLASS:
            self.sub_class_of[s].add(o)
        elif p == SUBPROPERTY:
            self.sub_property_of[s].add(o)
        elif p == DOMAIN:
            self.rdfs_domain[s].add(o)
        elif p == RANGE:
            self.rdfs_range[s].add(o)
        elif p == INVERSE:
            self.inverse_of[s].add(o)
            self.inverse_of[o].add(s)
        else:
            return False
        return True

    # closure helpers used by query expansion
    @staticmethod
    def _descendants(rel: dict[str, set[str]], top: str) -> list[str]:
        children = defaultdict(set)
        for sub, sups in rel.items():
            for sup in sups:
                children[sup].add(sub)
        seen, stack = set(), [top]
        while stack:
            x = stack.pop()
            for c in children.get(x, ()):
                if c not in seen and c != top:
                    seen.add(c)
                    stack.append(c)
        return sorted(seen)

    def subclasses(self, c: str) -> list[str]:
        """Strict (transitive) subclasses of ``c``, sorted."""
        return self._descendants(self.sub_class_of, c)

    def subproperties(self, p: str) -> list[str]:
        return self._descendants(self.sub_property_of, p)


def extract_tbox(triples: Iterable[Triple]) -> TBox:
    tbox = TBox()
    for t in triples:
        tbox.add(t)
    return tbox


@dataclass
class ClosureReport:
    derived_count: int = 0
    rounds: int = 0


def _facts(g: PropertyGraph):
    for e in g.edges.values():
        yield (e.src, e.label, ("v", e.dst))
    for v in g.vertices.values():
        if v.label == META_LABEL:
            continue
        for key, props in v.properties.items():
            if key == IRI_KEY:
                continue
            for prop in props:
                yield (v.id, key, ("l", property_term(prop)))


def forward_chain(g: PropertyGraph, meta: MetaCatalog, tbox: TBox) -> ClosureReport:
    """Materialize the rule closure into ``g``.  Idempotent; derived facts carry ``inferred=True``."""
    report = ClosureReport()
    type_class_vertex: dict[str, int] = {}

    def class_vertex(c: str) -> int:
        vid = type_class_vertex.get(c)
        if vid is None:
            vid = type_class_vertex[c] = resolve_vertex(g, IRI(c))
        return vid

    # out-edge index by (vertex, label) for the transitive join
    out_by = defaultdict(set)
    in_by = defaultdict(set)
    for e in g.edges.values():
        if e.label in tbox.transitive_props:
            out_by[(e.src, e.label)].add(e.dst)
            in_by[(e.dst, e.label)].add(e.src)

    def add(s: int, p: str, o) -> tuple | None:
        kind, val = o
        if kind == "v":
            if g.has_edge(s, val, p):
                return None
            eid = g.add_edge(s, val, p)
            g.set_property(eid, INFERRED, True, edge=True)
            update_predicate_meta(meta, p, REFERENT)
            if p in tbox.transitive_props:
                out_by[(s, p)].add(val)
                in_by[(val, p)].add(s)
        else:
            value, m = literal_scalar(val)
            if g.has_property(s, p, value, meta=m):
                return None
            pid = g.set_property(s, p, value, meta=m)
            g.set_meta_property(pid, INFERRED, True)
            update_predicate_meta(meta, p, LITERAL)
        return (s, p, o)

    delta = list(_facts(g))
    while delta:
        report.rounds += 1
        new = []

        def emit(s, p, o):
            f = add(s, p, o)
            if f is not None:
                new.append(f)

        for s, p, o in delta:
            if p == RDF_TYPE and o[0] == "v":
                c = g.iri_of(o[1])
                for d in sorted(tbox.sub_class_of.get(c, ())):
                    emit(s, RDF_TYPE, ("v", class_vertex(d)))
            for q in sorted(tbox.sub_property_of.get(p, ())):
                emit(s, q, o)
            for c in sorted(tbox.rdfs_domain.get(p, ())):
                emit(s, RDF_TYPE, ("v", class_vertex(c)))
            if o[0] != "v":
                continue
            y = o[1]
            for c in sorted(tbox.rdfs_range.get(p, ())):
                emit(y, RDF_TYPE, ("v", class_vertex(c)))
            for q in sorted(tbox.inverse_of.get(p, ())):
                emit(y, q, ("v", s))
            if p in tbox.symmetric_props:
                emit(y, p, ("v", s))
            if p in tbox.transitive_props:
                for z in sorted(out_by.get((y, p), ())):
                    emit(s, p, ("v", z))
                for w in sorted(in_by.get((s, p), ())):
                    emit(w, p, ("v", y))
        report.derived_count += len(new)
        delta = new
    g.sort_adjacency()
    meta.sync()
    return report
