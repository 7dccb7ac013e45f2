"""RDF terms, triples and a streaming N-Triples reader/writer."""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from functools import lru_cache
from typing import IO, Iterable, Iterator, Union

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
RDFS = "http://www.w3.org/2000/01/rdf-schema#"
OWL = "http://www.w3.org/2002/07/owl#"
XSD = "http://www.w3.org/2001/XMLSchema#"

RDF_TYPE = RDF + "type"
RDF_LANGSTRING = RDF + "langString"
XSD_STRING = XSD + "string"
XSD_INTEGER = XSD + "integer"
XSD_DECIMAL = XSD + "decimal"
XSD_DOUBLE = XSD + "double"
XSD_BOOLEAN = XSD + "boolean"

INTEGER_TYPES = frozenset(
    XSD + t
    for t in (
        "integer", "int", "long", "short", "byte", "nonNegativeInteger",
        "nonPositiveInteger", "positiveInteger", "negativeInteger",
        "unsignedLong", "unsignedInt", "unsignedShort", "unsignedByte",
    )
)
DECIMAL_TYPES = frozenset({XSD_DECIMAL})
FLOAT_TYPES = frozenset({XSD + "double", XSD + "float"})
NUMERIC_TYPES = INTEGER_TYPES | DECIMAL_TYPES | FLOAT_TYPES


@dataclass(frozen=True, slots=True)
class IRI:
    value: str

    def __post_init__(self):
        if not self.value or any(c.isspace() for c in self.value):
            raise ValueError(f"invalid IRI {self.value!r}")

    @property
    def kind(self) -> str:
        return "Iri"

    def n3(self) -> str:
        return "<" + _escape_iri(self.value) + ">"

    def __str__(self) -> str:
        return self.n3()


@dataclass(frozen=True, slots=True)
class Literal:
    lexical: str
    datatype: str = XSD_STRING
    language: str | None = None

    def __post_init__(self):
        if self.language is not None:
            if not self.language:
                raise ValueError("empty language tag")
            object.__setattr__(self, "language", self.language.lower())
            object.__setattr__(self, "datatype", RDF_LANGSTRING)
        elif self.datatype == RDF_LANGSTRING:
            raise ValueError("rdf:langString literal without a language tag")

    @property
    def kind(self) -> str:
        return "Literal"

    def n3(self) -> str:
        body = '"' + _escape_string(self.lexical) + '"'
        if self.language is not None:
            return f"{body}@{self.language}"
        if self.datatype != XSD_STRING:
            return f"{body}^^<{_escape_iri(self.datatype)}>"
        return body

    def __str__(self) -> str:
        return self.n3()


@dataclass(frozen=True, slots=True)
class BNode:
    """Blank node; identity is (scope, id) so labels from different documents never merge."""

    id: str
    scope: str = ""

    def __post_init__(self):
        if not self.id:
            raise ValueError("empty blank node id")

    @property
    def kind(self) -> str:
        return "Blank"

    def n3(self) -> str:
        return "_:" + self.id

    def __str__(self) -> str:
        return self.n3()


RdfTerm = Union[IRI, Literal, BNode]


@dataclass(frozen=True, slots=True)
class Triple:
    s: IRI | BNode
    p: IRI
    o: RdfTerm

    def __post_init__(self):
        if not isinstance(self.s, (IRI, BNode)):
            raise TypeError("subject must be an IRI or blank node")
        if not isinstance(self.p, IRI):
            raise TypeError("predicate must be an IRI")
        if not isinstance(self.o, (IRI, BNode, Literal)):
            raise TypeError("object must be an RDF term")

    def n3(self) -> str:
        return f"{self.s.n3()} {self.p.n3()} {self.o.n3()} ."


def term_equal(a: RdfTerm, b: RdfTerm) -> bool:
    # dataclass equality already includes blank node scope
    return a == b


# -- literal values -------------------------------------------------------

_INT_RE = re.compile(r"[+-]?[0-9]+\Z")
_DEC_RE = re.compile(r"[+-]?([0-9]+(\.[0-9]*)?|\.[0-9]+)\Z")
_DBL_RE = re.compile(r"[+-]?(([0-9]+(\.[0-9]*)?|\.[0-9]+)([eE][+-]?[0-9]+)?|INF|NaN)\Z")


@lru_cache(maxsize=65536)
def literal_value(lit: Literal):
    """Python value of a literal: int/Decimal/float/bool for valid typed literals, else the lexical str."""
    dt, lex = lit.datatype, lit.lexical
    if dt in INTEGER_TYPES:
        if _INT_RE.match(lex.strip()):
            return int(lex)
    elif dt in DECIMAL_TYPES:
        if _DEC_RE.match(lex.strip()):
            try:
                return Decimal(lex)
            except InvalidOperation:
                pass
    elif dt in FLOAT_TYPES:
        if _DBL_RE.match(lex.strip()):
            return float(lex.replace("INF", "inf"))
    elif dt == XSD_BOOLEAN:
        if lex in ("true", "1"):
            return True
        if lex in ("false", "0"):
            return False
    return lex


def is_numeric_literal(t) -> bool:
    if not isinstance(t, Literal) or t.datatype not in NUMERIC_TYPES:
        return False
    v = literal_value(t)
    return isinstance(v, (int, Decimal, float)) and not isinstance(v, bool)


def format_decimal(d: Decimal) -> str:
    s = format(d, "f")
    if "." not in s:
        s += ".0"
    return s


def numeric_literal(v) -> Literal:
    """Typed literal for a computed number (int -> integer, Decimal -> decimal, float -> double)."""
    if isinstance(v, bool):
        return Literal("true" if v else "false", XSD_BOOLEAN)
    if isinstance(v, int):
        return Literal(str(v), XSD_INTEGER)
    if isinstance(v, Decimal):
        return Literal(format_decimal(v), XSD_DECIMAL)
    if isinstance(v, float):
        return Literal(repr(v), XSD_DOUBLE)
    raise TypeError(f"not a number: {v!r}")


# -- N-Triples ------------------------------------------------------------

class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.message = message
        self.line = line
        self.column = column


_PN_CHARS_BASE = (
    "A-Za-z\u00C0-\u00D6\u00D8-\u00F6\u00F8-\u02FF\u0370-\u037D\u037F-\u1FFF"
    "\u200C-\u200D\u2070-\u218F\u2C00-\u2FEF\u3001-\uD7FF\uF900-\uFDCF\uFDF0-\uFFFD"
    "\U00010000-\U000EFFFF"
)
_PN_CHARS_U = _PN_CHARS_BASE + "_:"
_PN_CHARS = _PN_CHARS_U + "\\-0-9\u00B7\u0300-\u036F\u203F-\u2040"
_UCHAR = r"\\u[0-9A-Fa-f]{4}|\\U[0-9A-Fa-f]{8}"

_IRIREF = re.compile(r"<((?:[^\x00-\x20<>\"{}|^`\\]|" + _UCHAR + r")*)>")
_BNODE = re.compile(
    "_:([" + _PN_CHARS_U + "0-9](?:[" + _PN_CHARS + ".]*[" + _PN_CHARS + "])?)"
)
_STRING = re.compile(r'"((?:[^"\\\n\r]|\\[tbnrf"\'\\]|' + _UCHAR + r')*)"')
_LANGTAG = re.compile(r"@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*)")
_WS = re.compile(r"[ \t]*")
_ESCAPE = re.compile(r"\\(?:u([0-9A-Fa-f]{4})|U([0-9A-Fa-f]{8})|(.))", re.S)
_ECHAR = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}

_doc_counter = itertools.count(1)


def new_scope() -> str:
    return f"d{next(_doc_counter)}"


def _unescape(text: str, iri: bool) -> str:
    if "\\" not in text:
        return text

    def repl(m):
        hexa = m.group(1) or m.group(2)
        if hexa:
            cp = int(hexa, 16)
            if cp > 0x10FFFF or 0xD800 <= cp <= 0xDFFF:
                raise ValueError(f"invalid code point U+{cp:X}")
            return chr(cp)
        if iri:
            raise ValueError("character escapes are not allowed in IRIs")
        return _ECHAR[m.group(3)]

    return _ESCAPE.sub(repl, text)


class _LineParser:
    def __init__(self, text: str, lineno: int, scope: str):
        self.text = text
        self.pos = 0
        self.lineno = lineno
        self.scope = scope

    def error(self, msg: str) -> ParseError:
        return ParseError(msg, self.lineno, self.pos + 1)

    def skip_ws(self):
        self.pos = _WS.match(self.text, self.pos).end()

    def iri(self) -> IRI:
        m = _IRIREF.match(self.text, self.pos)
        if not m:
            raise self.error("expected IRI")
        try:
            value = _unescape(m.group(1), iri=True)
        except ValueError as e:
            raise self.error(str(e)) from None
        if ":" not in value:
            raise self.error(f"relative IRI <{value}> not allowed")
        self.pos = m.end()
        try:
            return IRI(value)
        except ValueError as e:
            raise self.error(str(e)) from None

    def bnode(self) -> BNode:
        m = _BNODE.match(self.text, self.pos)
        if not m:
            raise self.error("malformed blank node label")
        self.pos = m.end()
        return BNode(m.group(1), self.scope)

    def literal(self) -> Literal:
        m = _STRING.match(self.text, self.pos)
        if not m:
            raise self.error("malformed string literal")
        try:
            lexical = _unescape(m.group(1), iri=False)
        except ValueError as e:
            raise self.error(str(e)) from None
        self.pos = m.end()
        if self.text.startswith("^^", self.pos):
            self.pos += 2
            dt = self.iri()
            if dt.value == RDF_LANGSTRING:
                raise self.error("rdf:langString requires a language tag")
            return Literal(lexical, dt.value)
        lm = _LANGTAG.match(self.text, self.pos)
        if lm:
            self.pos = lm.end()
            return Literal(lexical, language=lm.group(1))
        return Literal(lexical)

    def term(self, position: str):
        ch = self.text[self.pos : self.pos + 1]
        if ch == "<":
            return self.iri()
        if ch == "_" and position != "predicate":
            return self.bnode()
        if ch == '"' and position == "object":
            return self.literal()
        if not ch:
            raise self.error(f"unexpected end of line, expected {position}")
        raise self.error(f"unexpected {ch!r} in {position} position")

    def triple(self) -> Triple | None:
        self.skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] == "#":
            return None
        s = self.term("subject")
        self.skip_ws()
        p = self.term("predicate")
        self.skip_ws()
        o = self.term("object")
        self.skip_ws()
        if not self.text.startswith(".", self.pos):
            raise self.error("expected '.'")
        self.pos += 1
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] != "#":
            raise self.error("trailing content after '.'")
        return Triple(s, p, o)


def _lines(source) -> Iterator[bytes | str]:
    if isinstance(source, (bytes, str)):
        yield from source.splitlines()
    else:
        for line in source:
            yield line.rstrip(b"\r\n") if isinstance(line, bytes) else line.rstrip("\r\n")


def parse_ntriples(
    source: bytes | str | IO | Iterable, scope: str | None = None
) -> Iterator[tuple[int, Triple | ParseError]]:
    """Lazily parse N-Triples, yielding ``(line_number, Triple | ParseError)``.

    Blank node labels are scoped to ``scope`` (a fresh one per call by default).
    Comment and blank lines yield nothing.
    """
    scope = new_scope() if scope is None else scope
    for lineno, raw in enumerate(_lines(source), start=1):
        if isinstance(raw, bytes):
            try:
                raw = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                yield lineno, ParseError(f"invalid UTF-8: {e.reason}", lineno, e.start + 1)
                continue
        try:
            t = _LineParser(raw, lineno, scope).triple()
        except ParseError as e:
            yield lineno, e
            continue
        if t is not None:
            yield lineno, t


def read_ntriples(source, strict: bool = True, scope: str | None = None) -> Iterator[Triple]:
    """Triples only; strict mode raises the first ParseError, lenient mode skips bad lines."""
    for _, item in parse_ntriples(source, scope):
        if isinstance(item, ParseError):
            if strict:
                raise item
            continue
        yield item


def _escape_string(s: str) -> str:
    return (
        s.replace("\\", "\\\\")
        .replace('"', '\\"')
        .replace("\n", "\\n")
        .replace("\r", "\\r")
    )


def _escape_iri(s: str) -> str:
    out = []
    for c in s:
        if c in '<>"{}|^`\\' or ord(c) <= 0x20:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return "".join(out)


def serialize_ntriples(triples: Iterable[Triple]) -> bytes:
    return "".join(t.n3() + "\n" for t in triples).encode("utf-8")
