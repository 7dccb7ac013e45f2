"""Store facade: ingestion, snapshots and the query pipeline.

parse -> expand prefixes -> schema expansion -> BGP reordering -> compile ->
optimize -> evaluate (under a timeout) -> BindingTable.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from ergstore.compiler import TRIPLE_NAMES, compile as compile_query
from ergstore.graph import PropertyGraph, snapshot_load, snapshot_save
from ergstore.ingest import IngestReport, MetaCatalog, load_parallel, load_serial
from ergstore.predicates import UNBOUND
from ergstore.rdf import IRI, RDF_TYPE, Triple, parse_ntriples, read_ntriples
from ergstore.reasoning import (
    DOMAIN,
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
from ergstore.results import BindingTable, make_triple
from ergstore.sparql.ast import SparqlQuery
from ergstore.sparql.expand import expand_prefixes, expand_query, reorder_query
from ergstore.sparql.parser import parse_sparql
from ergstore.traversal import steps as S
from ergstore.traversal.evaluator import evaluate
from ergstore.traversal.optimize import optimize

DEFAULT_TIMEOUT = 600.0


@dataclass
class Config:
    db_path: str | None = None
    parallel_workers: int = 1
    forward_chaining: bool = False
    query_timeout: float = DEFAULT_TIMEOUT
    strict_parse: bool = True
    http_bind: str = "127.0.0.1:8000"

    def __post_init__(self):
        if self.parallel_workers < 1:
            raise ValueError("parallel_workers must be at least 1")
        if not self.query_timeout > 0:
            raise ValueError("query_timeout must be positive")


@dataclass
class Store:
    graph: PropertyGraph = field(default_factory=PropertyGraph)
    meta: MetaCatalog | None = None
    tbox: TBox = field(default_factory=TBox)
    materialized: bool = False

    def __post_init__(self):
        if self.meta is None:
            self.meta = MetaCatalog(self.graph)

    # -- building ---------------------------------------------------------
    @classmethod
    def from_triples(cls, triples: Iterable[Triple], workers: int = 1, forward_chaining: bool = False) -> "Store":
        store = cls()
        store.ingest(triples, workers=workers, forward_chaining=forward_chaining)
        return store

    def ingest(self, triples: Iterable[Triple], workers: int = 1, forward_chaining: bool = False) -> IngestReport:
        started = time.perf_counter()
        triples = list(triples)
        for t in triples:
            self.tbox.add(t)
        if workers == 1:
            report = load_serial(self.graph, self.meta, triples)
        else:
            report = load_parallel(self.graph, self.meta, triples, k=workers)
        if forward_chaining:
            closure = forward_chain(self.graph, self.meta, self.tbox)
            report.derived, report.rounds = closure.derived_count, closure.rounds
            self.materialized = True
            counts = self.graph.counts()
            report.vertices, report.edges = counts["vertices"], counts["edges"]
        report.seconds = time.perf_counter() - started
        return report

    def ingest_files(self, paths: Iterable, workers: int = 1, forward_chaining: bool = False,
                     strict: bool = True) -> IngestReport:
        """Parse every file (positioned errors in strict mode) and load the lot."""
        triples: list[Triple] = []
        errors = []
        for path in paths:
            data = Path(path).read_bytes()
            if strict:
                triples.extend(read_ntriples(data, strict=True, scope=Path(path).name))
                continue
            for _, item in parse_ntriples(data, scope=Path(path).name):
                if isinstance(item, Triple):
                    triples.append(item)
                else:
                    errors.append(f"{path}: {item}")
        report = self.ingest(triples, workers=workers, forward_chaining=forward_chaining)
        report.errors = errors
        return report

    # -- snapshots ------------------------------------------------------------
    def save(self, path) -> None:
        axioms = sorted(t.n3() for t in _tbox_triples(self.tbox))
        metadata = {"materialized": self.materialized, "tbox": axioms}
        snapshot_save(self.graph, path, metadata)

    @classmethod
    def load(cls, path) -> "Store":
        g, metadata = snapshot_load(path)
        tbox = extract_tbox(read_ntriples("\n".join(metadata.get("tbox", []))))
        return cls(g, MetaCatalog.from_graph(g), tbox, bool(metadata.get("materialized", False)))

    # -- querying -----------------------------------------------------------
    def prepare(self, text_or_query, use_optimizer: bool = True) -> tuple[SparqlQuery, S.Traversal]:
        q = text_or_query if isinstance(text_or_query, SparqlQuery) else parse_sparql(text_or_query)
        q = expand_prefixes(q)
        q = expand_query(q, self.tbox, materialized=self.materialized)
        q = reorder_query(q, self.meta)
        t = compile_query(q, self.meta)
        if use_optimizer:
            t = optimize(t)
        return q, t

    def explain(self, text_or_query, use_optimizer: bool = True) -> str:
        from ergstore.traversal.explain import explain

        return explain(self.prepare(text_or_query, use_optimizer)[1])

    def query(self, text_or_query, timeout: float | None = DEFAULT_TIMEOUT, use_optimizer: bool = True,
              seed: int = 0) -> BindingTable:
        """Run a query to completion; raises QueryTimeout if it overruns (no partial results)."""
        q, t = self.prepare(text_or_query, use_optimizer)
        return run_compiled(self.graph, q, t, timeout=timeout, seed=seed)


def run_compiled(g: PropertyGraph, q: SparqlQuery, t: S.Traversal, timeout: float | None = DEFAULT_TIMEOUT,
                 seed: int = 0) -> BindingTable:
    out = evaluate(g, t, seed=seed, timeout=timeout)
    if q.form == "ASK":
        return BindingTable("ASK", boolean=any(tr.cur is True for tr in out))
    if q.form in ("CONSTRUCT", "DESCRIBE"):
        triples = set()
        for tr in out:
            triple = make_triple(*(tr.b.get(n, UNBOUND) for n in TRIPLE_NAMES))
            if triple is not None:
                triples.add(triple)
        return BindingTable(q.form, triples=triples)
    cols = q.select_vars()
    if not cols:
        return BindingTable("SELECT", [], [() for _ in out])
    if len(cols) == 1:
        return BindingTable("SELECT", cols, [(tr.cur,) for tr in out])
    return BindingTable("SELECT", cols, [tuple(tr.cur[c] for c in cols) for tr in out])


def _tbox_triples(tbox: TBox):
    for rel, p in ((tbox.sub_class_of, SUBCLASS), (tbox.sub_property_of, SUBPROPERTY),
                   (tbox.rdfs_domain, DOMAIN), (tbox.rdfs_range, RANGE), (tbox.inverse_of, INVERSE)):
        for s, os_ in rel.items():
            for o in os_:
                yield Triple(IRI(s), IRI(p), IRI(o))
    for s in tbox.symmetric_props:
        yield Triple(IRI(s), IRI(RDF_TYPE), IRI(SYMMETRIC))
    for s in tbox.transitive_props:
        yield Triple(IRI(s), IRI(RDF_TYPE), IRI(TRANSITIVE))
