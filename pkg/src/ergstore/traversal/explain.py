"""Text form of traversals.

Grammar (whitespace between tokens is ignored)::

    traversal := "[]" | "g" ("." step)+
    sub       := "__" ("." step)+
    step      := NAME "(" [arg ("," arg)*] ")"
    arg       := QUOTED | NUMBER | "true" | "false" | "null" | "N/A" | "*"
               | IRIREF | LITERAL | BNODE | "$" NAME
               | sub | NAME "(" [arg ("," arg)*] ")"

Quoted strings use single quotes with backslash escapes.  RDF terms use
N-Triples syntax; ``N/A`` is the unbound marker and ``$name`` reads a binding
at test time.  Nested calls denote value predicates (``eq(...)``), order keys
(``by('x',asc)``), group keys (``keys('a','b')``), aggregates
(``agg('out',count,distinct,math('x'))``) and math expressions
(``math('a + b')``).
"""

from __future__ import annotations

import re
from decimal import Decimal

from ergstore.predicates import OPS, UNBOUND, Ref, ValuePredicate
from ergstore.rdf import IRI, BNode, Literal, parse_ntriples
from ergstore.traversal import steps as S
from ergstore.traversal.mathexpr import AGGREGATE_FUNCTIONS, parse_math, render_math


class ExplainSyntaxError(ValueError):
    pass


def _quote(s: str) -> str:
    return "'" + s.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _is_math(x) -> bool:
    from ergstore.traversal import mathexpr as M

    return isinstance(x, (M.MName, M.MConst, M.MBin, M.MUnary, M.MCall))


def format_value(v) -> str:
    if v is UNBOUND:
        return "N/A"
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, Decimal)):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        return _quote(v)
    if isinstance(v, (IRI, BNode, Literal)):
        return v.n3()
    if isinstance(v, Ref):
        return "$" + v.name
    if isinstance(v, ValuePredicate):
        return v.explain()
    if isinstance(v, S.Traversal):
        return "__." + ".".join(_step(s) for s in v.steps) if v.steps else "__.identity()"
    if isinstance(v, S.OrderKey):
        return f"by({format_value(v.key)},{'desc' if v.descending else 'asc'})"
    if isinstance(v, S.Agg):
        parts = [_quote(v.out), v.fn]
        if v.distinct:
            parts.append("distinct")
        parts.append("*" if v.arg is None else format_value(v.arg))
        return "agg(" + ",".join(parts) + ")"
    if isinstance(v, tuple):
        return "keys(" + ",".join(format_value(x) for x in v) + ")"
    if _is_math(v):
        return "math(" + _quote(render_math(v)) + ")"
    raise TypeError(f"cannot format {v!r}")


def _step(st: S.Step) -> str:
    if isinstance(st, S.Math):
        return "math(" + _quote(render_math(st.expr)) + ")"
    return f"{st.name}(" + ",".join(format_value(a) for a in st.args()) + ")"


def explain(t: S.Traversal) -> str:
    """Deterministic one-line rendering of ``t``; the empty traversal is ``[]``."""
    if not t.steps:
        return "[]"
    return "g." + ".".join(_step(s) for s in t.steps)


# -- parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"""\s*(?:
      (?P<quoted>'(?:[^'\\]|\\.)*')
    | (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
    | (?P<literal>"(?:[^"\\]|\\.)*"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>\s]*>)?)
    | (?P<bnode>_:[\w.\-]+)
    | (?P<ref>\$[^\s,()]+)
    | (?P<unbound>N/A)
    | (?P<number>-?[0-9]+(?:\.[0-9]*)?(?:[eE][+-]?[0-9]+)?)
    | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<punct>[().,*\[\]])
    )""",
    re.X,
)


def _tokens(text: str) -> list:
    out, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ExplainSyntaxError(f"unexpected input at offset {pos}: {text[pos:pos + 20]!r}")
        out.append((m.lastgroup, m.group(m.lastgroup), pos))
        pos = m.end()
    out.append(("eof", "", pos))
    return out


def _unquote(q: str) -> str:
    return re.sub(r"\\(.)", r"\1", q[1:-1])


def _term(text: str):
    (_, res), = list(parse_ntriples(f"<x:s> <x:p> {text} ."))
    if not hasattr(res, "o"):
        raise ExplainSyntaxError(f"bad RDF term {text!r}")
    return res.o


class _ExplainParser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        t = self.toks[self.i]
        if t[0] != "eof":
            self.i += 1
        return t

    def expect(self, kind, value=None):
        t = self.take()
        if t[0] != kind or (value is not None and t[1] != value):
            raise ExplainSyntaxError(f"expected {value or kind} at offset {t[2]}, found {t[1]!r}")
        return t

    def top(self) -> S.Traversal:
        if self.peek()[1] == "[":
            self.take()
            self.expect("punct", "]")
            self.expect("eof")
            return S.Traversal()
        t = self.expect("name")
        if t[1] != "g":
            raise ExplainSyntaxError("traversal must start with 'g'")
        trav = self.chain()
        self.expect("eof")
        return trav

    def chain(self) -> S.Traversal:
        out = []
        while self.peek()[:2] == ("punct", "."):
            self.take()
            out.append(self.step())
        if not out:
            raise ExplainSyntaxError("expected at least one step")
        steps = []
        for i, st in enumerate(out):
            if isinstance(st, S.Emit):
                before = i + 1 < len(out) and isinstance(out[i + 1], S.Repeat)
                st = S.Emit("before" if before else "after")
            steps.append(st)
        return S.Traversal(steps)

    def args(self) -> list:
        self.expect("punct", "(")
        out = []
        if self.peek()[1] != ")":
            out.append(self.arg())
            while self.peek()[1] == ",":
                self.take()
                out.append(self.arg())
        self.expect("punct", ")")
        return out

    def step(self) -> S.Step:
        name = self.expect("name")[1]
        if name == "math":
            self.expect("punct", "(")
            expr = parse_math(_unquote(self.expect("quoted")[1]))
            self.expect("punct", ")")
            return S.Math(expr)
        cls = S.STEP_TYPES.get(name)
        if cls is None:
            raise ExplainSyntaxError(f"unknown step {name!r}")
        args = self.args()
        try:
            if cls in (S.As, S.Select, S.Dedup, S.Order):
                return cls(tuple(args))
            if cls in (S.Union, S.And, S.Or):
                return cls(tuple(args))
            if cls is S.Group:
                return S.Group(args[0], tuple(args[1:]))
            if cls is S.Emit:
                return S.Emit()
            return cls(*args)
        except TypeError as e:
            raise ExplainSyntaxError(f"bad arguments for {name}(): {e}") from None

    def arg(self):
        kind, text, pos = self.take()
        if kind == "quoted":
            return _unquote(text)
        if kind == "number":
            if re.fullmatch(r"-?[0-9]+", text):
                return int(text)
            return Decimal(text) if "e" not in text.lower() else float(text)
        if kind in ("iri", "literal", "bnode"):
            return _term(text)
        if kind == "ref":
            return Ref(text[1:])
        if kind == "unbound":
            return UNBOUND
        if kind == "punct" and text == "*":
            return "*"
        if kind != "name":
            raise ExplainSyntaxError(f"unexpected {text!r} at offset {pos}")
        if text == "__":
            return self.chain()
        if text in ("true", "false"):
            return text == "true"
        if text == "null":
            return None
        if text in ("asc", "desc", "distinct") or text in AGGREGATE_FUNCTIONS:
            return ("word", text)
        if text == "math":
            self.expect("punct", "(")
            expr = parse_math(_unquote(self.expect("quoted")[1]))
            self.expect("punct", ")")
            return expr
        args = self.args()
        if text == "by":
            return S.OrderKey(args[0], args[1] == ("word", "desc"))
        if text == "keys":
            return tuple(args)
        if text == "agg":
            out, fn = args[0], args[1][1]
            distinct = len(args) > 3 and args[2] == ("word", "distinct")
            last = args[-1]
            return S.Agg(out, fn, None if last == "*" else last, distinct)
        if text in OPS:
            if text in ("isBound", "isUnbound", "truthy"):
                return ValuePredicate(text)
            if text in ("within", "without"):
                return ValuePredicate(text, tuple(args))
            if text == "regex" and len(args) == 2:
                return ValuePredicate(text, args[0], args[1])
            return ValuePredicate(text, args[0])
        raise ExplainSyntaxError(f"unknown function {text!r} at offset {pos}")


def parse_explain(text: str) -> S.Traversal:
    """Inverse of ``explain``."""
    return _ExplainParser(text).top()
