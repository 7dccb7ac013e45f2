"""Query results and their serializations (TSV, SPARQL JSON, N-Triples)."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field

from ergstore.predicates import UNBOUND
from ergstore.rdf import IRI, BNode, Literal, Triple, XSD_STRING, RDF_LANGSTRING, serialize_ntriples

NA = "N/A"


@dataclass
class BindingTable:
    """Result of one query.

    ``form`` is SELECT, ASK, CONSTRUCT or DESCRIBE.  SELECT fills ``columns``
    and ``rows`` (``UNBOUND`` marks a missing binding), ASK fills ``boolean``
    and graph forms fill ``triples``.
    """

    form: str = "SELECT"
    columns: list[str] = field(default_factory=list)
    rows: list[tuple] = field(default_factory=list)
    boolean: bool | None = None
    triples: set[Triple] | None = None

    def __post_init__(self):
        n = len(self.columns)
        for r in self.rows:
            if len(r) != n:
                raise ValueError(f"row {r!r} does not have {n} entries")

    def __len__(self):
        if self.form == "ASK":
            return 1
        if self.triples is not None:
            return len(self.triples)
        return len(self.rows)

    def bag(self) -> Counter:
        """Order-insensitive view used to compare results."""
        if self.form == "ASK":
            return Counter([self.boolean])
        if self.triples is not None:
            return Counter(self.triples)
        return Counter(self.rows)

    def same_answers(self, other: "BindingTable") -> bool:
        return (
            self.form == other.form
            and list(self.columns) == list(other.columns)
            and self.bag() == other.bag()
        )

    def canonical_rows(self) -> list[tuple]:
        return sorted(self.rows, key=lambda r: tuple(term_text(v) for v in r))

    # -- serializations ------------------------------------------------
    def to_tsv(self) -> str:
        if self.form == "ASK":
            return ("true" if self.boolean else "false") + "\n"
        if self.triples is not None:
            return self.to_ntriples().decode("utf-8")
        lines = ["\t".join("?" + c for c in self.columns)]
        for r in self.rows:
            lines.append("\t".join(NA if v is UNBOUND else term_text(v) for v in r))
        return "\n".join(lines) + "\n"

    def to_json(self) -> dict:
        if self.form == "ASK":
            return {"head": {}, "boolean": bool(self.boolean)}
        if self.triples is not None:
            raise ValueError("graph results are serialized as N-Triples")
        bindings = []
        for r in self.rows:
            b = {}
            for c, v in zip(self.columns, r):
                if v is not UNBOUND:
                    b[c] = term_json(v)
            bindings.append(b)
        return {"head": {"vars": list(self.columns)}, "results": {"bindings": bindings}}

    def to_json_text(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True)

    def to_ntriples(self) -> bytes:
        return serialize_ntriples(sorted(self.triples or (), key=lambda t: t.n3()))

    def render(self, fmt: str = "tsv") -> str:
        if fmt == "json":
            if self.triples is not None:
                return self.to_ntriples().decode("utf-8")
            return self.to_json_text() + "\n"
        return self.to_tsv()


def term_text(v) -> str:
    if v is UNBOUND:
        return ""
    if isinstance(v, BNode):
        return "_:" + _bnode_label(v)
    return v.n3()


def _bnode_label(v: BNode) -> str:
    # the document scope keeps labels from different files apart
    return f"{v.scope}.{v.id}" if v.scope else v.id


def term_json(v) -> dict:
    if isinstance(v, IRI):
        return {"type": "uri", "value": v.value}
    if isinstance(v, BNode):
        return {"type": "bnode", "value": _bnode_label(v)}
    if isinstance(v, Literal):
        out = {"type": "literal", "value": v.lexical}
        if v.language is not None:
            out["xml:lang"] = v.language
        elif v.datatype not in (XSD_STRING, RDF_LANGSTRING):
            out["datatype"] = v.datatype
        return out
    raise TypeError(f"not an RDF term: {v!r}")


def term_from_json(d: dict):
    kind, value = d["type"], d["value"]
    if kind == "uri":
        return IRI(value)
    if kind == "bnode":
        return BNode(value)
    if kind in ("literal", "typed-literal"):
        if "xml:lang" in d:
            return Literal(value, RDF_LANGSTRING, d["xml:lang"])
        return Literal(value, d.get("datatype", XSD_STRING))
    raise ValueError(f"unknown term type {kind!r}")


def table_from_json(doc: dict) -> BindingTable:
    """Inverse of ``BindingTable.to_json`` for SELECT and ASK documents."""
    if "boolean" in doc:
        return BindingTable("ASK", boolean=bool(doc["boolean"]))
    cols = list(doc["head"].get("vars", []))
    rows = [
        tuple(term_from_json(b[c]) if c in b else UNBOUND for c in cols)
        for b in doc["results"]["bindings"]
    ]
    return BindingTable("SELECT", cols, rows)


def make_triple(s, p, o) -> Triple | None:
    """Triple from instantiated template positions, or None when they do not form one."""
    if s is UNBOUND or p is UNBOUND or o is UNBOUND:
        return None
    if not isinstance(s, (IRI, BNode)) or not isinstance(p, IRI) or not isinstance(o, (IRI, BNode, Literal)):
        return None
    return Triple(s, p, o)
