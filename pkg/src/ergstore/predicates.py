"""Value predicates shared by graph lookups and traversal filters.

Operands and tested values may be RDF terms or raw scalars.  Comparisons are
two-valued: anything incomparable (cross-type, unbound) tests false.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal
from functools import lru_cache

from ergstore.rdf import (
    IRI,
    XSD_BOOLEAN,
    XSD_STRING,
    BNode,
    Literal,
    NUMERIC_TYPES,
    literal_value,
)


class _Unbound:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "UNBOUND"

    def __reduce__(self):
        return (_Unbound, ())


UNBOUND = _Unbound()


class InvalidRegex(ValueError):
    pass


@dataclass(frozen=True)
class Ref:
    """Operand read from the traverser's bindings at test time."""

    name: str


OPS = frozenset({
    "eq", "neq", "lt", "lte", "gt", "gte", "within", "without",
    "startingWith", "endingWith", "containing", "regex",
    "langMatches", "isBound", "isUnbound", "same", "compat", "truthy",
})

_LITERAL_TAGS = frozenset({"num", "bool", "str", "lit"})


def comparable(x):
    """Normalise a term or scalar to a tagged tuple."""
    if x is UNBOUND or x is None:
        return ("unbound",)
    if isinstance(x, IRI):
        return ("iri", x.value)
    if isinstance(x, BNode):
        return ("bnode", x.scope, x.id)
    if isinstance(x, Literal):
        if x.language is not None:
            return ("str", x.lexical, x.language)
        if x.datatype == XSD_STRING:
            return ("str", x.lexical, None)
        if x.datatype in NUMERIC_TYPES or x.datatype == XSD_BOOLEAN:
            v = literal_value(x)
            if isinstance(v, bool):
                return ("bool", v)
            if not isinstance(v, str):
                return ("num", v)
        return ("lit", x.lexical, x.datatype)
    if isinstance(x, bool):
        return ("bool", x)
    if isinstance(x, (int, float, Decimal)):
        return ("num", x)
    if isinstance(x, str):
        return ("str", x, None)
    return ("other", id(x))


def term_identity(x):
    """RDF term identity (sameTerm): literals compare by lexical form, datatype and language."""
    if isinstance(x, Literal):
        return ("L", x.lexical, x.datatype, x.language)
    return comparable(x)


def effective_boolean(x) -> bool:
    """Truth value of a term; anything without one is false."""
    c = comparable(x)
    if c[0] == "bool":
        return c[1]
    if c[0] == "num":
        return c[1] == c[1] and c[1] != 0
    if c[0] == "str":
        return c[1] != ""
    return False


def values_differ(a, b) -> bool:
    """Inequality; two literals of unrelated types are incomparable, hence not different either."""
    if a[0] == b[0]:
        return not values_equal(a, b)
    return not (a[0] in _LITERAL_TAGS and b[0] in _LITERAL_TAGS)


def values_equal(a, b) -> bool:
    if a[0] != b[0]:
        return False
    if a[0] == "num":
        return a[1] == b[1]
    return a == b


def _ordered(a, b):
    if a[0] == "num" and b[0] == "num":
        return a[1], b[1]
    if a[0] == "str" and b[0] == "str" and a[2] is None and b[2] is None:
        return a[1], b[1]
    return None


def _lex(c):
    """Lexical form of a string-like value or None."""
    if c[0] == "str":
        return c[1]
    return None


def lang_matches(tag: str | None, rng: str) -> bool:
    if not tag:
        return False
    rng = rng.lower()
    tag = tag.lower()
    if rng == "*":
        return True
    return tag == rng or tag.startswith(rng + "-")


@lru_cache(maxsize=512)
def _regex(pattern: str, flags: str):
    f = 0
    for ch in flags or "":
        if ch == "i":
            f |= re.I
        elif ch == "s":
            f |= re.S
        elif ch == "m":
            f |= re.M
        elif ch == "x":
            f |= re.X
        else:
            raise InvalidRegex(f"unsupported regex flag {ch!r}")
    try:
        return re.compile(pattern, f)
    except re.error as e:
        raise InvalidRegex(f"invalid regex {pattern!r}: {e}") from None


@dataclass(frozen=True)
class ValuePredicate:
    op: str
    value: object = None
    flags: str = ""

    def __post_init__(self):
        if self.op not in OPS:
            raise ValueError(f"unknown predicate {self.op!r}")
        if self.op in ("within", "without") and not isinstance(self.value, tuple):
            object.__setattr__(self, "value", tuple(self.value))

    def is_ref(self) -> bool:
        return isinstance(self.value, Ref)

    def raw_operand(self):
        v = self.value
        if isinstance(v, Literal):
            return literal_value(v)
        if isinstance(v, IRI):
            return v.value
        return v

    def compile_regex(self):
        if self.op == "regex":
            return _regex(self._operand_text(self.value), self.flags)
        return None

    @staticmethod
    def _operand_text(v) -> str:
        if isinstance(v, Literal):
            return v.lexical
        if isinstance(v, IRI):
            return v.value
        return str(v)

    def test_scalar(self, raw) -> bool:
        return self.test(raw)

    def test(self, x, bindings=None) -> bool:
        op = self.op
        if op == "isBound":
            return x is not UNBOUND
        if op == "isUnbound":
            return x is UNBOUND
        operand = self.value
        if isinstance(operand, Ref):
            operand = (bindings or {}).get(operand.name, UNBOUND)
        if op == "compat":
            # join compatibility: unbound on either side is compatible
            if x is UNBOUND or operand is UNBOUND:
                return True
            return term_identity(x) == term_identity(operand)
        if x is UNBOUND:
            return False
        if op == "same":
            return operand is not UNBOUND and term_identity(x) == term_identity(operand)
        if op == "truthy":
            return effective_boolean(x)
        cx = comparable(x)
        if op == "within":
            return any(values_equal(cx, comparable(v)) for v in operand)
        if op == "without":
            return all(values_differ(cx, comparable(v)) for v in operand)
        if operand is UNBOUND:
            return False
        if op == "langMatches":
            tag = x.language if isinstance(x, Literal) else (x if isinstance(x, str) else None)
            return lang_matches(tag, self._operand_text(operand))
        co = comparable(operand)
        if op == "eq":
            return values_equal(cx, co)
        if op == "neq":
            return values_differ(cx, co)
        if op in ("lt", "lte", "gt", "gte"):
            pair = _ordered(cx, co)
            if pair is None:
                return False
            a, b = pair
            try:
                if op == "lt":
                    return a < b
                if op == "lte":
                    return a <= b
                if op == "gt":
                    return a > b
                return a >= b
            except TypeError:
                return False
        text = _lex(cx)
        if text is None:
            return False
        needle = _lex(co) if co[0] == "str" else None
        if op == "regex":
            return self.compile_regex().search(text) is not None
        if needle is None:
            return False
        if op == "startingWith":
            return text.startswith(needle)
        if op == "endingWith":
            return text.endswith(needle)
        if op == "containing":
            return needle in text
        raise ValueError(op)

    def explain(self) -> str:
        from ergstore.traversal.explain import format_value

        if self.op in ("isBound", "isUnbound", "truthy"):
            return f"{self.op}()"
        if self.op in ("within", "without"):
            return f"{self.op}(" + ",".join(format_value(v) for v in self.value) + ")"
        if self.op == "regex" and self.flags:
            return f"regex({format_value(self.value)},{format_value(self.flags)})"
        return f"{self.op}({format_value(self.value)})"
