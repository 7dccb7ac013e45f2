"""Syntax tree for the supported SPARQL subset."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from ergstore.rdf import IRI, BNode, Literal


class SparqlError(Exception):
    pass


class SparqlSyntaxError(SparqlError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"syntax error at line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


class UnsupportedFeature(SparqlError):
    def __init__(self, feature: str, detail: str = ""):
        msg = f"unsupported feature: {feature}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)
        self.feature = feature


class UnknownPrefix(SparqlSyntaxError):
    def __init__(self, prefix: str, line: int = 0, column: int = 0):
        super().__init__(f"unknown prefix {prefix!r}", line, column)
        self.prefix = prefix


@dataclass(frozen=True)
class Var:
    name: str

    @property
    def hidden(self) -> bool:
        # parser-generated names (blank nodes, path intermediates) can't be written as ?name
        return self.name.startswith("#")

    def __str__(self):
        return "?" + self.name


@dataclass(frozen=True)
class PName:
    prefix: str
    local: str

    def __str__(self):
        return f"{self.prefix}:{self.local}"


@dataclass(frozen=True)
class RelIRI:
    """IRI reference resolved against BASE during prefix expansion."""

    value: str

    def __str__(self):
        return f"<{self.value}>"


Term = Union[Var, IRI, Literal, BNode, PName, RelIRI]


# -- property paths ----------------------------------------------------

@dataclass(frozen=True)
class PLink:
    iri: IRI | PName | RelIRI


@dataclass(frozen=True)
class PInv:
    path: "Path"


@dataclass(frozen=True)
class PSeq:
    left: "Path"
    right: "Path"


@dataclass(frozen=True)
class PAlt:
    left: "Path"
    right: "Path"


@dataclass(frozen=True)
class PStar:
    path: "Path"


@dataclass(frozen=True)
class PPlus:
    path: "Path"


@dataclass(frozen=True)
class POpt:
    path: "Path"


@dataclass(frozen=True)
class PNeg:
    # (iri, inverse) pairs
    items: tuple


Path = Union[PLink, PInv, PSeq, PAlt, PStar, PPlus, POpt, PNeg]


# -- expressions -------------------------------------------------------

@dataclass(frozen=True)
class EVar:
    name: str


@dataclass(frozen=True)
class ETerm:
    term: object


@dataclass(frozen=True)
class EBinary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class EUnary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class EIn:
    operand: "Expr"
    options: tuple
    negated: bool = False


@dataclass(frozen=True)
class EFunc:
    name: str
    args: tuple


@dataclass(frozen=True)
class EExists:
    pattern: "Pattern"
    negated: bool = False


@dataclass(frozen=True)
class EAggregate:
    name: str
    arg: "Expr | None"  # None is COUNT(*)
    distinct: bool = False


Expr = Union[EVar, ETerm, EBinary, EUnary, EIn, EFunc, EExists, EAggregate]


# -- patterns ----------------------------------------------------------

@dataclass(frozen=True)
class TriplePattern:
    s: Term
    p: Term
    o: Term


@dataclass(frozen=True)
class PathPattern:
    s: Term
    path: Path
    o: Term


@dataclass(frozen=True)
class ValuesClause:
    vars: tuple
    rows: tuple  # tuples of term-or-None (UNDEF)


@dataclass(frozen=True)
class Alternatives:
    """Triple patterns over the same variables whose solutions are merged without duplicates.

    Produced by schema-based query rewriting (one alternative per subclass or
    subproperty).
    """

    patterns: tuple


@dataclass(frozen=True)
class Bind:
    expr: Expr
    var: Var


@dataclass
class BGP:
    elements: list


@dataclass
class Join:
    left: "Pattern"
    right: "Pattern"


@dataclass
class Union_:
    left: "Pattern"
    right: "Pattern"


@dataclass
class Optional_:
    base: "Pattern | None"
    opt: "Pattern"


@dataclass
class Minus:
    left: "Pattern | None"
    right: "Pattern"


@dataclass
class Filter:
    base: "Pattern | None"
    expr: Expr


Pattern = Union[BGP, Join, Union_, Optional_, Minus, Filter]


@dataclass
class SparqlQuery:
    form: str  # SELECT | ASK | DESCRIBE | CONSTRUCT
    pattern: Pattern | None
    prefixes: dict = field(default_factory=dict)
    base: str | None = None
    # SELECT: list of (Var, Expr | None); None means '*'
    projection: list | None = None
    distinct: bool = False
    reduced: bool = False
    describe: list = field(default_factory=list)  # Var | IRI | PName
    template: list = field(default_factory=list)  # TriplePattern
    group_by: list = field(default_factory=list)  # Var
    having: list = field(default_factory=list)
    order_by: list = field(default_factory=list)  # (Expr, descending)
    limit: int | None = None
    offset: int | None = None

    def select_vars(self) -> list[str]:
        """Names of the result columns."""
        if self.form == "SELECT":
            if self.projection is None:
                return [v for v in pattern_vars(self.pattern) if not v.startswith("#")]
            return [v.name for v, _ in self.projection]
        return []


def pattern_vars(p) -> list[str]:
    """In-scope variables of a pattern in first-appearance order."""
    out: list[str] = []

    def add(name):
        if name not in out:
            out.append(name)

    def term(t):
        if isinstance(t, Var):
            add(t.name)

    def walk(n):
        if n is None:
            return
        if isinstance(n, BGP):
            for e in n.elements:
                walk(e)
        elif isinstance(n, (TriplePattern,)):
            term(n.s), term(n.p), term(n.o)
        elif isinstance(n, PathPattern):
            term(n.s), term(n.o)
        elif isinstance(n, Alternatives):
            walk(n.patterns[0])
        elif isinstance(n, ValuesClause):
            for v in n.vars:
                add(v.name)
        elif isinstance(n, Bind):
            add(n.var.name)
        elif isinstance(n, (Join, Union_)):
            walk(n.left), walk(n.right)
        elif isinstance(n, Optional_):
            walk(n.base), walk(n.opt)
        elif isinstance(n, Minus):
            walk(n.left)
        elif isinstance(n, Filter):
            walk(n.base)

    walk(p)
    return out


def expr_vars(e) -> list[str]:
    out: list[str] = []

    def walk(x):
        if isinstance(x, EVar):
            if x.name not in out:
                out.append(x.name)
        elif isinstance(x, EBinary):
            walk(x.left), walk(x.right)
        elif isinstance(x, EUnary):
            walk(x.operand)
        elif isinstance(x, EIn):
            walk(x.operand)
            for o in x.options:
                walk(o)
        elif isinstance(x, EFunc):
            for a in x.args:
                walk(a)
        elif isinstance(x, EAggregate) and x.arg is not None:
            walk(x.arg)

    walk(e)
    return out


def has_aggregate(e) -> bool:
    if isinstance(e, EAggregate):
        return True
    if isinstance(e, EBinary):
        return has_aggregate(e.left) or has_aggregate(e.right)
    if isinstance(e, EUnary):
        return has_aggregate(e.operand)
    if isinstance(e, EIn):
        return has_aggregate(e.operand) or any(has_aggregate(o) for o in e.options)
    if isinstance(e, EFunc):
        return any(has_aggregate(a) for a in e.args)
    return False
