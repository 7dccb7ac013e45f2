"""RDF to property-graph transformation.

Referent (IRI / blank node) objects become edges between resource vertices;
literal objects become multivalued vertex properties whose datatype and
language are kept as meta-properties.  A hidden metadata subgraph records, for
every predicate, whether it was stored as property, edge, or both.
"""

from __future__ import annotations

import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from ergstore.graph import IRI_KEY, KIND_KEY, META_LABEL, PropertyGraph, PropertyInstance, scalar_key
from ergstore.rdf import (
    IRI,
    XSD_STRING,
    BNode,
    Literal,
    Triple,
    literal_value,
)

log = logging.getLogger(__name__)

RESOURCE_LABEL = "resource"
PREDICATE_KEY = "predicate"
BLANK_KIND = "blank"

LITERAL = "literal"
REFERENT = "referent"
MIXED = "mixed"


@dataclass
class PredicateMeta:
    predicate_iri: str
    kind: str
    triple_count: int = 0
    literal_count: int = 0
    referent_count: int = 0

    @property
    def stats(self) -> dict:
        return {
            "triple_count": self.triple_count,
            "literal_count": self.literal_count,
            "referent_count": self.referent_count,
        }


class MetaCatalog:
    """Per-predicate mapping kinds, mirrored into hidden ``ergs:meta`` vertices."""

    def __init__(self, graph: PropertyGraph | None = None):
        self.graph = graph
        self.by_predicate: dict[str, PredicateMeta] = {}
        self._vertex: dict[str, int] = {}

    def __len__(self):
        return len(self.by_predicate)

    def __contains__(self, iri: str) -> bool:
        return iri in self.by_predicate

    def get(self, iri: str) -> PredicateMeta | None:
        return self.by_predicate.get(iri)

    def kind(self, iri: str) -> str | None:
        m = self.by_predicate.get(iri)
        return m.kind if m else None

    def record(self, predicate: str, object_kind: str, n: int = 1) -> None:
        update_predicate_meta(self, predicate, object_kind, n)

    def merge(self, other: "MetaCatalog") -> None:
        for iri in sorted(other.by_predicate):
            m = other.by_predicate[iri]
            if m.literal_count:
                self.record(iri, LITERAL, m.literal_count)
            if m.referent_count:
                self.record(iri, REFERENT, m.referent_count)

    def sync(self) -> None:
        """Write catalog state into the metadata vertices of the backing graph."""
        g = self.graph
        if g is None:
            return
        for iri in sorted(self.by_predicate):
            m = self.by_predicate[iri]
            vid = self._vertex.get(iri)
            if vid is None:
                vid = g.add_vertex(META_LABEL)
                g.set_property(vid, PREDICATE_KEY, iri)
                self._vertex[iri] = vid
            vertex = g.vertices[vid]
            for key, value in (("kind", m.kind), *m.stats.items()):
                props = vertex.properties.get(key)
                if not props:
                    g.set_property(vid, key, value)
                elif props[0].value != value:
                    # single-valued counters are updated in place; keep the value index honest
                    g.prop_index[(key, scalar_key(props[0].value))].discard(vid)
                    props[0].value = value
                    g.prop_index[(key, scalar_key(value))].add(vid)

    @classmethod
    def from_graph(cls, g: PropertyGraph) -> "MetaCatalog":
        cat = cls(g)
        for v in g.vertices.values():
            if v.label != META_LABEL:
                continue
            one = {k: ps[0].value for k, ps in v.properties.items()}
            iri = one[PREDICATE_KEY]
            cat.by_predicate[iri] = PredicateMeta(
                iri, one["kind"], one.get("triple_count", 0), one.get("literal_count", 0), one.get("referent_count", 0)
            )
            cat._vertex[iri] = v.id
        return cat


def update_predicate_meta(meta: MetaCatalog, p: str, object_kind: str, n: int = 1) -> None:
    if object_kind not in (LITERAL, REFERENT):
        raise ValueError(f"object kind must be literal or referent, not {object_kind!r}")
    m = meta.by_predicate.get(p)
    if m is None:
        m = meta.by_predicate[p] = PredicateMeta(p, object_kind)
    elif m.kind != object_kind:
        m.kind = MIXED
    m.triple_count += n
    if object_kind == LITERAL:
        m.literal_count += n
    else:
        m.referent_count += n


# -- term <-> graph -----------------------------------------------------

def node_key(term: IRI | BNode) -> str:
    """Value stored under the ``iri`` key; blank nodes are skolemized per document scope."""
    if isinstance(term, IRI):
        return term.value
    return f"_:{term.scope}:{term.id}"


def resolve_vertex(g: PropertyGraph, term: IRI | BNode, create: bool = True) -> int | None:
    key = node_key(term)
    vid = g.iri_index.get(key)
    if vid is not None or not create:
        return vid
    vid = g.add_vertex(RESOURCE_LABEL)
    g.set_property(vid, IRI_KEY, key, meta={KIND_KEY: BLANK_KIND} if isinstance(term, BNode) else None)
    return vid


def literal_scalar(lit: Literal) -> tuple[object, dict]:
    """Scalar value and meta-properties used to store a literal."""
    value = literal_value(lit)
    meta: dict = {}
    if lit.language is not None:
        meta["language"] = lit.language
    elif lit.datatype != XSD_STRING:
        meta["datatype"] = lit.datatype
    if not isinstance(value, str) and _canonical(value) != lit.lexical:
        meta["lexical"] = lit.lexical
    return value, meta


def _canonical(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    return str(value)


def property_term(prop: PropertyInstance) -> IRI | BNode | Literal:
    """Reconstruct the RDF term represented by a stored property instance."""
    if prop.key == IRI_KEY:
        return vertex_key_term(prop.value, prop.meta.get(KIND_KEY))
    value, meta = prop.value, prop.meta
    lexical = meta.get("lexical")
    if lexical is None:
        lexical = value if isinstance(value, str) else _canonical(value)
    if "language" in meta:
        return Literal(lexical, language=meta["language"])
    return Literal(lexical, meta.get("datatype", XSD_STRING))


def vertex_key_term(key: str, kind=None) -> IRI | BNode:
    if kind == BLANK_KIND or (kind is None and key.startswith("_:")):
        scope, _, bid = key[2:].partition(":")
        return BNode(bid, scope)
    return IRI(key)


def vertex_term(g: PropertyGraph, vid: int) -> IRI | BNode:
    return property_term(g.vertices[vid].properties[IRI_KEY][0])


# -- ingestion ------------------------------------------------------------

def ingest_triple(g: PropertyGraph, meta: MetaCatalog, t: Triple, provenance: dict | None = None) -> bool:
    """Store one triple; returns True when the graph changed."""
    s = resolve_vertex(g, t.s)
    p = t.p.value
    if isinstance(t.o, Literal):
        value, m = literal_scalar(t.o)
        if g.has_property(s, p, value, meta=m):
            return False
        pid = g.set_property(s, p, value, meta=m)
        for k, v in (provenance or {}).items():
            g.set_meta_property(pid, k, v)
        update_predicate_meta(meta, p, LITERAL)
        return True
    o = resolve_vertex(g, t.o)
    if g.has_edge(s, o, p):
        return False
    eid = g.add_edge(s, o, p)
    for k, v in (provenance or {}).items():
        g.set_property(eid, k, v, edge=True)
    update_predicate_meta(meta, p, REFERENT)
    return True


def graph_triples(g: PropertyGraph) -> set[Triple]:
    """Every RDF triple represented by the (non-metadata) graph."""
    out = set()
    terms = {}
    for v in g.vertices.values():
        if v.label == META_LABEL or IRI_KEY not in v.properties:
            continue
        terms[v.id] = subj = vertex_term(g, v.id)
        for key, props in v.properties.items():
            if key == IRI_KEY:
                continue
            for prop in props:
                out.add(Triple(subj, IRI(key), property_term(prop)))
    for e in g.edges.values():
        if e.src in terms and e.dst in terms:
            out.add(Triple(terms[e.src], IRI(e.label), terms[e.dst]))
    return out


@dataclass
class IngestReport:
    triples: int = 0
    vertices: int = 0
    edges: int = 0
    properties: int = 0
    metanodes: int = 0
    derived: int = 0
    rounds: int = 0
    seconds: float = 0.0
    errors: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "errors"}


def _report(g: PropertyGraph, meta: MetaCatalog, triples: int) -> IngestReport:
    c = g.counts()
    return IngestReport(
        triples=triples,
        vertices=c["vertices"],
        edges=c["edges"],
        properties=sum(
            1 for p in g.properties.values()
            if p.owner_is_edge or g.vertices[p.owner].label != META_LABEL
        ),
        metanodes=len(meta),
    )


def load_serial(g: PropertyGraph, meta: MetaCatalog, triples: Iterable[Triple]) -> IngestReport:
    n = 0
    for t in triples:
        ingest_triple(g, meta, t)
        n += 1
    meta.sync()
    return _report(g, meta, n)


def _partition_of(term, k: int) -> int:
    return zlib.crc32(node_key(term).encode("utf-8")) % k


def partition_batch(batch: list[Triple], k: int) -> tuple[list[list[Triple]], list[Triple]]:
    """Split a batch into ``k`` node-disjoint partitions plus inter-partition (residual) edges."""
    if k < 1:
        raise ValueError("k must be >= 1")
    parts: list[list[Triple]] = [[] for _ in range(k)]
    residual: list[Triple] = []
    for t in batch:
        ps = _partition_of(t.s, k)
        if isinstance(t.o, Literal):
            parts[ps].append(t)
        elif _partition_of(t.o, k) == ps:
            parts[ps].append(t)
        else:
            residual.append(t)
    return parts, residual


def _load_partition(g: PropertyGraph, triples: list[Triple]) -> MetaCatalog:
    local = MetaCatalog()
    for t in triples:
        ingest_triple(g, local, t)
    return local


def load_parallel(
    g: PropertyGraph,
    meta: MetaCatalog,
    triples: Iterable[Triple],
    k: int = 1,
    batch_size: int = 50_000,
) -> IngestReport:
    """Two-cycle batched load: node-disjoint partitions concurrently, then residual edges serially."""
    if k < 1:
        raise ValueError("k must be >= 1")
    n = 0
    batch: list[Triple] = []

    def flush(pool):
        parts, residual = partition_batch(batch, k)
        if k == 1:
            locals_ = [_load_partition(g, parts[0])]
        else:
            locals_ = list(pool.map(lambda part: _load_partition(g, part), parts))
        # metadata merged in partition order so the catalog is independent of thread timing
        for local in locals_:
            meta.merge(local)
        for t in residual:
            ingest_triple(g, meta, t)

    with ThreadPoolExecutor(max_workers=k) as pool:
        for t in triples:
            batch.append(t)
            n += 1
            if len(batch) >= batch_size:
                flush(pool)
                batch = []
        if batch:
            flush(pool)
    g.sort_adjacency()
    meta.sync()
    return _report(g, meta, n)
