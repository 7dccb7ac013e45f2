"""Expression language of the ``math`` step, plus value ordering and aggregates.

Expressions evaluate over a traverser's bindings to an RDF term, or to
``UNBOUND`` when evaluation fails (type error, unbound operand, division by
zero on exact numbers).  Comparisons and connectives are two-valued.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, InvalidOperation

from ergstore.predicates import UNBOUND, ValuePredicate, effective_boolean, lang_matches, term_identity
from ergstore.rdf import XSD, IRI, BNode, Literal, is_numeric_literal, literal_value, numeric_literal

TRUE = Literal("true", XSD + "boolean")
FALSE = Literal("false", XSD + "boolean")

COMPARISONS = {"=": "eq", "!=": "neq", "<": "lt", "<=": "lte", ">": "gt", ">=": "gte"}
ARITHMETIC = {"+", "-", "*", "/"}
FUNCTIONS = {
    "abs", "ceil", "floor", "round", "rand", "lang", "bound", "regex", "langMatches",
    "strstarts", "strends", "contains", "in", "notin",
}


class MathError(ValueError):
    pass


@dataclass(frozen=True)
class MName:
    name: str


@dataclass(frozen=True)
class MConst:
    value: object


@dataclass(frozen=True)
class MBin:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class MUnary:
    op: str  # "-", "+", "!"
    operand: object


@dataclass(frozen=True)
class MCall:
    fn: str
    args: tuple


def _bool(b: bool) -> Literal:
    return TRUE if b else FALSE


def numeric(x):
    """Python number of a numeric literal, else None."""
    if is_numeric_literal(x):
        return literal_value(x)
    return None


def _promote(a, b):
    if isinstance(a, float) or isinstance(b, float):
        return float(a), float(b)
    if isinstance(a, Decimal) or isinstance(b, Decimal):
        return Decimal(a), Decimal(b)
    return a, b


def arith(op: str, a, b):
    """Apply an arithmetic operator to two Python numbers with XSD-style type promotion."""
    a, b = _promote(a, b)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if isinstance(a, float):
        if b == 0:
            if a == 0 or a != a:
                return math.nan
            return math.copysign(math.inf, a) * math.copysign(1.0, b)
        return a / b
    if b == 0:
        raise MathError("division by zero")
    return Decimal(a) / Decimal(b)


def _round_fn(fn: str, v):
    if fn == "abs":
        return abs(v)
    if isinstance(v, int):
        return v
    if isinstance(v, float):
        if v != v or v in (math.inf, -math.inf):
            return v
        if fn == "ceil":
            return float(math.ceil(v))
        if fn == "floor":
            return float(math.floor(v))
        return float(math.floor(v + 0.5))
    try:
        if fn == "ceil":
            return v.to_integral_value(rounding=ROUND_CEILING)
        if fn == "floor":
            return v.to_integral_value(rounding=ROUND_FLOOR)
        return (v + Decimal("0.5")).to_integral_value(rounding=ROUND_FLOOR)
    except InvalidOperation:
        raise MathError("invalid decimal") from None


def _string_arg(x):
    if isinstance(x, Literal) and isinstance(literal_value(x), str) and (
        x.language is not None or x.datatype == XSD + "string"
    ):
        return x
    return None


def evaluate_math(expr, bindings: dict, current=UNBOUND, rng=None):
    """Evaluate ``expr``; the name ``_`` refers to the traverser's current value."""
    try:
        return _eval(expr, bindings, current, rng)
    except (MathError, ArithmeticError, InvalidOperation, ValueError, TypeError):
        return UNBOUND


def _eval(e, b, cur, rng):
    if isinstance(e, MConst):
        return e.value
    if isinstance(e, MName):
        if e.name == "_":
            v = cur
        else:
            v = b.get(e.name, UNBOUND)
        if not isinstance(v, (IRI, BNode, Literal)) and v is not UNBOUND:
            raise MathError(f"{e.name} is not bound to a value")
        return v
    if isinstance(e, MBin):
        if e.op == "&&":
            return _bool(effective_boolean(_eval(e.left, b, cur, rng)) and effective_boolean(_eval(e.right, b, cur, rng)))
        if e.op == "||":
            return _bool(effective_boolean(_eval(e.left, b, cur, rng)) or effective_boolean(_eval(e.right, b, cur, rng)))
        left = _eval(e.left, b, cur, rng)
        right = _eval(e.right, b, cur, rng)
        if e.op in COMPARISONS:
            return _bool(ValuePredicate(COMPARISONS[e.op], right).test(left))
        x, y = numeric(left), numeric(right)
        if x is None or y is None:
            raise MathError("arithmetic on non-numeric value")
        return numeric_literal(arith(e.op, x, y))
    if isinstance(e, MUnary):
        v = _eval(e.operand, b, cur, rng)
        if e.op == "!":
            return _bool(not effective_boolean(v))
        n = numeric(v)
        if n is None:
            raise MathError("sign applied to non-numeric value")
        return numeric_literal(-n if e.op == "-" else n)
    if isinstance(e, MCall):
        return _call(e, b, cur, rng)
    raise MathError(f"bad expression node {e!r}")


def _call(e: MCall, b, cur, rng):
    fn = e.fn
    if fn == "rand":
        if rng is None:
            raise MathError("no random source")
        return numeric_literal(rng.random())
    if fn == "bound":
        (arg,) = e.args
        return _bool(b.get(arg.name, UNBOUND) is not UNBOUND)
    args = [_eval(a, b, cur, rng) for a in e.args]
    if fn in ("abs", "ceil", "floor", "round"):
        n = numeric(args[0])
        if n is None:
            raise MathError(f"{fn} of non-numeric value")
        out = _round_fn(fn, n)
        lit = numeric_literal(out)
        # keep the argument's datatype (e.g. xsd:int stays xsd:int)
        if isinstance(out, int) and args[0].datatype != lit.datatype:
            return Literal(str(out), args[0].datatype)
        return lit
    if fn == "lang":
        x = args[0]
        if not isinstance(x, Literal):
            raise MathError("lang of non-literal")
        return Literal(x.language or "")
    if fn == "langMatches":
        tag, rng_ = _string_arg(args[0]), _string_arg(args[1])
        if tag is None or rng_ is None:
            raise MathError("langMatches needs string arguments")
        return _bool(lang_matches(tag.lexical, rng_.lexical))
    if fn == "regex":
        flags = ""
        if len(args) == 3:
            f = _string_arg(args[2])
            if f is None:
                raise MathError("regex flags must be a string")
            flags = f.lexical
        pat = _string_arg(args[1])
        if pat is None:
            raise MathError("regex pattern must be a string")
        return _bool(ValuePredicate("regex", pat.lexical, flags).test(args[0]))
    if fn in ("strstarts", "strends", "contains"):
        if _string_arg(args[0]) is None or _string_arg(args[1]) is None:
            raise MathError(f"{fn} needs string arguments")
        op = {"strstarts": "startingWith", "strends": "endingWith", "contains": "containing"}[fn]
        return _bool(ValuePredicate(op, args[1]).test(args[0]))
    if fn in ("in", "notin"):
        x, opts = args[0], args[1:]
        if x is UNBOUND:
            raise MathError("unbound operand")
        if fn == "notin" and any(o is UNBOUND for o in opts):
            # one failed comparison makes the conjunction false
            return FALSE
        return _bool(ValuePredicate("within" if fn == "in" else "without", tuple(opts)).test(x))
    raise MathError(f"unknown function {fn}")


# -- rendering and parsing ------------------------------------------------

_NAME_RE = re.compile(r"[#\w]+\Z")
_PREC = {"||": 1, "&&": 2, "=": 3, "!=": 3, "<": 3, "<=": 3, ">": 3, ">=": 3, "+": 4, "-": 4, "*": 5, "/": 5}


def render_math(e) -> str:
    if isinstance(e, MName):
        return e.name if _NAME_RE.match(e.name) else "`" + e.name.replace("`", "``") + "`"
    if isinstance(e, MConst):
        return e.value.n3()
    if isinstance(e, MBin):
        def wrap(x):
            s = render_math(x)
            return f"({s})" if isinstance(x, MBin) else s
        return f"{wrap(e.left)} {e.op} {wrap(e.right)}"
    if isinstance(e, MUnary):
        s = render_math(e.operand)
        return f"{e.op}({s})" if isinstance(e.operand, MBin) else f"{e.op}{s}"
    if isinstance(e, MCall):
        return f"{e.fn}(" + ", ".join(render_math(a) for a in e.args) + ")"
    raise TypeError(e)


_MTOK = re.compile(
    r"""\s*(?:
      (?P<iri><[^<>"{}|^`\\\x00-\x20]*>)
    | (?P<str>"(?:[^"\\]|\\.)*"(?:@[A-Za-z]+(?:-[A-Za-z0-9]+)*|\^\^<[^<>\s]*>)?)
    | (?P<bnode>_:[\w.\-]+)
    | (?P<qname>`(?:[^`]|``)*`)
    | (?P<op>&&|\|\||!=|<=|>=|[-+*/=<>!(),])
    | (?P<name>[#\w]+)
    )""",
    re.X,
)


def _tokenize_math(text: str) -> list:
    out, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _MTOK.match(text, pos)
        if not m or m.end() == pos:
            raise MathError(f"cannot parse math expression at {pos}: {text[pos:pos + 10]!r}")
        out.append((m.lastgroup, m.group(m.lastgroup)))
        pos = m.end()
    out.append(("eof", ""))
    return out


def parse_math(text: str):
    from ergstore.rdf import parse_ntriples  # term syntax is shared with N-Triples

    toks = _tokenize_math(text)
    i = 0

    def peek():
        return toks[i]

    def take():
        nonlocal i
        t = toks[i]
        i += 1
        return t

    def term_from(text_):
        (_, res), = list(parse_ntriples(f"<x:s> <x:p> {text_} ."))
        if not hasattr(res, "o"):
            raise MathError(f"bad constant {text_!r}")
        return res.o

    def binary(level):
        if level > 5:
            return unary()
        left = binary(level + 1)
        while peek()[0] == "op" and _PREC.get(peek()[1]) == level:
            op = take()[1]
            left = MBin(op, left, binary(level + 1))
        return left

    def unary():
        k, v = peek()
        if k == "op" and v in ("-", "+", "!"):
            take()
            return MUnary(v, unary())
        return primary()

    def primary():
        k, v = take()
        if k == "op" and v == "(":
            e = binary(1)
            if take() != ("op", ")"):
                raise MathError("expected ')'")
            return e
        if k in ("iri", "str", "bnode"):
            return MConst(term_from(v))
        if k == "qname":
            return MName(v[1:-1].replace("``", "`"))
        if k == "name" and re.fullmatch(r"[0-9]+(\.[0-9]+)?", v):
            return MConst(Literal(v, XSD + ("decimal" if "." in v else "integer")))
        if k == "name":
            if peek() == ("op", "("):
                if v not in FUNCTIONS:
                    raise MathError(f"unknown function {v}")
                take()
                args = []
                if peek() != ("op", ")"):
                    args.append(binary(1))
                    while peek() == ("op", ","):
                        take()
                        args.append(binary(1))
                if take() != ("op", ")"):
                    raise MathError("expected ')'")
                return MCall(v, tuple(args))
            return MName(v)
        raise MathError(f"unexpected token {v!r}")

    e = binary(1)
    if peek()[0] != "eof":
        raise MathError(f"trailing input in math expression: {peek()[1]!r}")
    return e


def math_names(e) -> set:
    if isinstance(e, MName):
        return {e.name}
    if isinstance(e, MBin):
        return math_names(e.left) | math_names(e.right)
    if isinstance(e, MUnary):
        return math_names(e.operand)
    if isinstance(e, MCall):
        out = set()
        for a in e.args:
            out |= math_names(a)
        return out
    return set()


# -- ordering -------------------------------------------------------------

def order_key(x):
    """Total order: unbound < blank nodes < IRIs < literals (numbers by value, then the rest lexically)."""
    if x is UNBOUND or x is None:
        return (0,)
    if isinstance(x, BNode):
        return (1, x.scope, x.id)
    if isinstance(x, IRI):
        return (2, x.value)
    if isinstance(x, Literal):
        n = numeric(x)
        if n is not None and n == n:
            return (3, 0, n, x.lexical, x.datatype)
        return (3, 1, x.lexical, x.datatype, x.language or "")
    return (4, repr(x))


# -- aggregates -----------------------------------------------------------

AGGREGATE_FUNCTIONS = ("count", "sum", "min", "max", "avg", "sample")


def aggregate(fn: str, values: list, distinct: bool = False, star: bool = False):
    """Fold a group's values; unbound values are skipped, non-numbers make sum/avg unbound."""
    if not star:
        values = [v for v in values if v is not UNBOUND]
    if distinct:
        seen, uniq = set(), []
        for v in values:
            k = v if star else term_identity(v)
            if k not in seen:
                seen.add(k)
                uniq.append(v)
        values = uniq
    if fn == "count":
        return numeric_literal(len(values))
    if fn in ("sum", "avg"):
        total = 0
        for v in values:
            n = numeric(v)
            if n is None:
                return UNBOUND
            total = arith("+", total, n)
        if fn == "sum":
            return numeric_literal(total)
        if not values:
            return numeric_literal(0)
        return numeric_literal(arith("/", total, len(values)))
    if not values:
        return UNBOUND
    if fn == "min" or fn == "sample":
        return min(values, key=order_key)
    if fn == "max":
        return max(values, key=order_key)
    raise ValueError(f"unknown aggregate {fn}")
