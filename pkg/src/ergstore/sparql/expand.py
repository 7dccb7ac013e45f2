"""Query preprocessing: prefix expansion, schema-based rewriting, BGP reordering."""

from __future__ import annotations

import dataclasses
from urllib.parse import urljoin

from ergstore.ingest import LITERAL, MetaCatalog
from ergstore.rdf import IRI, RDF_TYPE, BNode, Literal
from ergstore.sparql.ast import (
    BGP,
    Alternatives,
    Bind,
    EAggregate,
    EBinary,
    EExists,
    EFunc,
    EIn,
    ETerm,
    EUnary,
    Filter,
    Join,
    Minus,
    Optional_,
    PAlt,
    PathPattern,
    PInv,
    PLink,
    PName,
    PNeg,
    POpt,
    PPlus,
    PSeq,
    PStar,
    RelIRI,
    SparqlQuery,
    SparqlSyntaxError,
    TriplePattern,
    Union_,
    UnknownPrefix,
    ValuesClause,
    Var,
)


class _Mapper:
    """Rebuilds a query, applying ``term`` to every term and ``bgp`` to every BGP."""

    def term(self, t):
        return t

    def bgp(self, b: BGP) -> BGP:
        return BGP([self.element(e) for e in b.elements])

    def element(self, e):
        if isinstance(e, TriplePattern):
            return TriplePattern(self.term(e.s), self.term(e.p), self.term(e.o))
        if isinstance(e, PathPattern):
            return PathPattern(self.term(e.s), self.path(e.path), self.term(e.o))
        if isinstance(e, Alternatives):
            return Alternatives(tuple(self.element(p) for p in e.patterns))
        if isinstance(e, ValuesClause):
            return ValuesClause(
                e.vars, tuple(tuple(None if v is None else self.term(v) for v in row) for row in e.rows)
            )
        if isinstance(e, Bind):
            return Bind(self.expr(e.expr), e.var)
        raise TypeError(f"unexpected BGP element {e!r}")

    def path(self, p):
        if isinstance(p, PLink):
            return PLink(self.term(p.iri))
        if isinstance(p, PNeg):
            return PNeg(tuple((self.term(i), inv) for i, inv in p.items))
        if isinstance(p, (PInv, PStar, PPlus, POpt)):
            return type(p)(self.path(p.path))
        if isinstance(p, (PSeq, PAlt)):
            return type(p)(self.path(p.left), self.path(p.right))
        raise TypeError(p)

    def pattern(self, p):
        if p is None:
            return None
        if isinstance(p, BGP):
            return self.bgp(p)
        if isinstance(p, (Join, Union_)):
            return type(p)(self.pattern(p.left), self.pattern(p.right))
        if isinstance(p, Optional_):
            return Optional_(self.pattern(p.base), self.pattern(p.opt))
        if isinstance(p, Minus):
            return Minus(self.pattern(p.left), self.pattern(p.right))
        if isinstance(p, Filter):
            return Filter(self.pattern(p.base), self.expr(p.expr))
        raise TypeError(p)

    def expr(self, e):
        if isinstance(e, ETerm):
            return ETerm(self.term(e.term))
        if isinstance(e, EBinary):
            return EBinary(e.op, self.expr(e.left), self.expr(e.right))
        if isinstance(e, EUnary):
            return EUnary(e.op, self.expr(e.operand))
        if isinstance(e, EIn):
            return EIn(self.expr(e.operand), tuple(self.expr(o) for o in e.options), e.negated)
        if isinstance(e, EFunc):
            return EFunc(e.name, tuple(self.expr(a) for a in e.args))
        if isinstance(e, EExists):
            return EExists(self.pattern(e.pattern), e.negated)
        if isinstance(e, EAggregate):
            return EAggregate(e.name, None if e.arg is None else self.expr(e.arg), e.distinct)
        return e

    def query(self, q: SparqlQuery) -> SparqlQuery:
        return dataclasses.replace(
            q,
            pattern=self.pattern(q.pattern),
            projection=None if q.projection is None else [
                (v, None if e is None else self.expr(e)) for v, e in q.projection
            ],
            describe=[d if d == "*" else self.term(d) for d in q.describe],
            template=[self.element(t) for t in q.template],
            having=[self.expr(e) for e in q.having],
            order_by=[(self.expr(e), d) for e, d in q.order_by],
        )


class _PrefixExpander(_Mapper):
    def __init__(self, prefixes: dict, base: str | None):
        self.prefixes = prefixes
        self.base = base

    def term(self, t):
        if isinstance(t, PName):
            ns = self.prefixes.get(t.prefix)
            if ns is None:
                raise UnknownPrefix(t.prefix)
            return self._iri(ns + t.local)
        if isinstance(t, RelIRI):
            return self._iri(urljoin(self.base, t.value) if self.base else t.value)
        return t

    @staticmethod
    def _iri(value: str) -> IRI:
        try:
            return IRI(value)
        except ValueError:
            raise SparqlSyntaxError(f"invalid IRI <{value}>", 1, 1) from None


def expand_prefixes(q: SparqlQuery) -> SparqlQuery:
    """Replace every prefixed name and relative IRI with an absolute IRI."""
    out = _PrefixExpander(q.prefixes, q.base).query(q)
    out.prefixes = {}
    out.base = None
    return out


# -- schema-based rewriting -----------------------------------------------

class _SchemaExpander(_Mapper):
    def __init__(self, tbox):
        self.tbox = tbox

    def element(self, e):
        if isinstance(e, TriplePattern) and isinstance(e.p, IRI):
            alts = [e]
            if e.p.value == RDF_TYPE and isinstance(e.o, IRI):
                alts += [TriplePattern(e.s, e.p, IRI(c)) for c in self.tbox.subclasses(e.o.value)]
            else:
                alts += [TriplePattern(e.s, IRI(p), e.o) for p in self.tbox.subproperties(e.p.value)]
            if len(alts) > 1:
                return Alternatives(tuple(alts))
            return e
        return super().element(e)


def expand_query(q: SparqlQuery, tbox, materialized: bool = False) -> SparqlQuery:
    """Rewrite type and property patterns into unions over subclasses and subproperties.

    A no-op when the store already holds the materialized closure or the TBox
    is empty.  Only WHERE patterns are rewritten; CONSTRUCT templates are not.
    """
    if materialized or tbox is None or tbox.is_empty():
        return q
    ex = _SchemaExpander(tbox)
    return dataclasses.replace(
        q,
        pattern=ex.pattern(q.pattern),
        having=[ex.expr(e) for e in q.having],
        order_by=[(ex.expr(e), d) for e, d in q.order_by],
        projection=None if q.projection is None else [
            (v, None if e is None else ex.expr(e)) for v, e in q.projection
        ],
    )


# -- BGP reordering ---------------------------------------------------------

def _is_const(t) -> bool:
    return isinstance(t, (IRI, Literal, BNode))


def _first(e):
    return e.patterns[0] if isinstance(e, Alternatives) else e


def _predicates(e) -> list:
    if isinstance(e, Alternatives):
        return [p.p for p in e.patterns]
    return [e.p]


def _anchored(e) -> bool:
    if isinstance(e, ValuesClause):
        return True
    if isinstance(e, Alternatives):
        return all(_anchored(p) for p in e.patterns)
    if isinstance(e, TriplePattern):
        if isinstance(e.s, IRI) or isinstance(e.o, IRI):
            return True
        return isinstance(e.p, IRI) and isinstance(e.o, Literal)
    if isinstance(e, PathPattern):
        return isinstance(e.s, IRI) or isinstance(e.o, IRI)
    return False


def _cost(e, meta: MetaCatalog) -> int:
    if isinstance(e, ValuesClause):
        return len(e.rows)
    if isinstance(e, PathPattern):
        return sum(m.triple_count for m in meta.by_predicate.values()) if meta else 0
    total = 0
    for p in _predicates(e):
        if isinstance(p, IRI):
            m = meta.get(p.value) if meta else None
            total += m.triple_count if m else 0
        else:
            total += sum(m.triple_count for m in meta.by_predicate.values()) if meta else 0
    return total


def _node_vars(e) -> set:
    """Subject/object variables; predicate variables do not connect patterns."""
    if isinstance(e, ValuesClause):
        return {v.name for v in e.vars}
    e = _first(e)
    return {t.name for t in (e.s, e.o) if isinstance(t, Var)}


def _visits(e, meta: MetaCatalog) -> set:
    """Variables added to the visited set; those bound only to literals are left out."""
    if isinstance(e, ValuesClause):
        out = set()
        for i, v in enumerate(e.vars):
            if any(row[i] is not None and not isinstance(row[i], Literal) for row in e.rows):
                out.add(v.name)
        return out
    out = _node_vars(e)
    if isinstance(e, (TriplePattern, Alternatives)):
        first = _first(e)
        if isinstance(first.o, Var) and all(
            isinstance(p, IRI) and meta is not None and meta.kind(p.value) == LITERAL for p in _predicates(e)
        ):
            out.discard(first.o.name)
    return out


def _reorder_segment(elems: list, meta: MetaCatalog) -> list:
    remaining = list(range(len(elems)))
    out: list[int] = []
    visited: set = set()
    while remaining:
        anchored = [i for i in remaining if _anchored(elems[i])]
        if anchored:
            start = min(anchored, key=lambda i: (_cost(elems[i], meta), i))
        else:
            connected = [i for i in remaining if _node_vars(elems[i]) & visited]
            start = connected[0] if connected else remaining[0]
        out.append(start)
        remaining.remove(start)
        visited |= _visits(elems[start], meta)
        grew = True
        while grew:
            grew = False
            for i in list(remaining):
                if _node_vars(elems[i]) & visited:
                    out.append(i)
                    remaining.remove(i)
                    visited |= _visits(elems[i], meta)
                    grew = True
                    break
    return [elems[i] for i in out]


def reorder_bgp(bgp: BGP, meta: MetaCatalog | None) -> BGP:
    """Order BGP elements so evaluation starts from an index-backed pattern and stays connected.

    BIND elements stay in place and split the BGP into independently
    reordered segments, since they read variables bound before them.
    """
    out: list = []
    segment: list = []
    for e in bgp.elements:
        if isinstance(e, Bind):
            out += _reorder_segment(segment, meta)
            out.append(e)
            segment = []
        else:
            segment.append(e)
    out += _reorder_segment(segment, meta)
    return BGP(out)


class _Reorderer(_Mapper):
    def __init__(self, meta):
        self.meta = meta

    def bgp(self, b: BGP) -> BGP:
        return reorder_bgp(super().bgp(b), self.meta)


def reorder_query(q: SparqlQuery, meta: MetaCatalog | None) -> SparqlQuery:
    """Apply ``reorder_bgp`` to every BGP in the query, including EXISTS patterns."""
    return _Reorderer(meta).query(q)
