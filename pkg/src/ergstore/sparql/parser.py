"""Recursive-descent parser for the supported SPARQL subset."""

from __future__ import annotations

from ergstore.rdf import RDF_TYPE, XSD, IRI, Literal
from ergstore.sparql.ast import (
    BGP,
    Bind,
    EAggregate,
    EBinary,
    EExists,
    EFunc,
    EIn,
    ETerm,
    EUnary,
    EVar,
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
    UnsupportedFeature,
    ValuesClause,
    Var,
    has_aggregate,
    pattern_vars,
)
from ergstore.sparql.lexer import Token, tokenize, unescape_string

# Prefixes usable without a PREFIX declaration.
DEFAULT_PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
}

AGGREGATES = {"COUNT", "SUM", "MIN", "MAX", "AVG", "SAMPLE"}
# name -> accepted argument count(s)
FUNCTIONS = {
    "BOUND": 1, "REGEX": (2, 3), "LANGMATCHES": 2, "LANG": 1,
    "STRSTARTS": 2, "STRENDS": 2, "CONTAINS": 2,
    "ABS": 1, "ROUND": 1, "CEIL": 1, "FLOOR": 1, "RAND": 0,
}
UNSUPPORTED_FUNCTIONS = {
    "STR", "DATATYPE", "IRI", "URI", "BNODE", "STRDT", "STRLANG", "UUID", "STRUUID",
    "STRLEN", "SUBSTR", "UCASE", "LCASE", "STRBEFORE", "STRAFTER", "ENCODE_FOR_URI",
    "CONCAT", "REPLACE", "NOW", "YEAR", "MONTH", "DAY", "HOURS", "MINUTES", "SECONDS",
    "TIMEZONE", "TZ", "MD5", "SHA1", "SHA256", "SHA384", "SHA512", "COALESCE", "IF",
    "SAMETERM", "ISIRI", "ISURI", "ISBLANK", "ISLITERAL", "ISNUMERIC", "GROUP_CONCAT",
}
UPDATE_KEYWORDS = {"INSERT", "DELETE", "LOAD", "CLEAR", "CREATE", "DROP", "COPY", "MOVE", "ADD", "WITH"}


class Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.fresh = 0
        self.prefixes: dict[str, str] = {}

    # -- token helpers -----------------------------------------------
    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def advance(self) -> Token:
        t = self.tokens[self.i]
        if t.kind != "EOF":
            self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        t = tok or self.tok
        found = "end of input" if t.kind == "EOF" else repr(t.text)
        return SparqlSyntaxError(f"{msg}, found {found}", t.line, t.column)

    def is_kw(self, *words: str) -> bool:
        return self.tok.kind == "NAME" and self.tok.upper in words

    def accept_kw(self, word: str) -> bool:
        if self.is_kw(word):
            self.advance()
            return True
        return False

    def expect_kw(self, word: str) -> Token:
        if not self.is_kw(word):
            raise self.error(f"expected {word}")
        return self.advance()

    def is_op(self, *ops: str) -> bool:
        return self.tok.kind == "OP" and self.tok.text in ops

    def accept_op(self, op: str) -> bool:
        if self.is_op(op):
            self.advance()
            return True
        return False

    def expect_op(self, op: str) -> Token:
        if not self.is_op(op):
            raise self.error(f"expected '{op}'")
        return self.advance()

    def fresh_var(self, hint: str = "b") -> Var:
        self.fresh += 1
        return Var(f"#{hint}{self.fresh}")

    # -- query -------------------------------------------------------
    def parse(self) -> SparqlQuery:
        base = None
        while True:
            if self.accept_kw("BASE"):
                t = self.tok
                if t.kind != "IRIREF":
                    raise self.error("expected IRI after BASE")
                self.advance()
                base = t.text[1:-1]
            elif self.accept_kw("PREFIX"):
                t = self.tok
                if t.kind != "PNAME_NS":
                    raise self.error("expected prefix name after PREFIX")
                self.advance()
                iri = self.tok
                if iri.kind != "IRIREF":
                    raise self.error("expected IRI in PREFIX declaration")
                self.advance()
                self.prefixes[t.text[:-1]] = iri.text[1:-1]
            else:
                break
        t = self.tok
        if t.kind == "NAME" and t.upper in UPDATE_KEYWORDS:
            raise UnsupportedFeature("UPDATE", t.upper)
        if self.accept_kw("SELECT"):
            q = self.select_query()
        elif self.accept_kw("ASK"):
            q = SparqlQuery("ASK", None)
            self.dataset_clause()
            q.pattern = self.where_clause(optional_kw=True)
            self.solution_modifier(q)
        elif self.accept_kw("CONSTRUCT"):
            q = self.construct_query()
        elif self.accept_kw("DESCRIBE"):
            q = self.describe_query()
        else:
            raise self.error("expected SELECT, ASK, CONSTRUCT or DESCRIBE")
        if self.is_kw("VALUES"):
            self.advance()
            vc = self.values_block()
            q.pattern = Join(q.pattern, BGP([vc])) if q.pattern is not None else BGP([vc])
        if self.tok.kind != "EOF":
            raise self.error("unexpected trailing input")
        q.prefixes = {**DEFAULT_PREFIXES, **self.prefixes}
        q.base = base
        self.check(q)
        return q

    def dataset_clause(self):
        if self.is_kw("FROM"):
            raise UnsupportedFeature("FROM", "dataset clauses are not supported")

    def where_clause(self, optional_kw: bool = True):
        if not self.accept_kw("WHERE") and not optional_kw:
            raise self.error("expected WHERE")
        if not self.is_op("{"):
            raise self.error("expected '{'")
        return self.group_graph_pattern()

    def select_query(self) -> SparqlQuery:
        q = SparqlQuery("SELECT", None)
        if self.accept_kw("DISTINCT"):
            q.distinct = True
        elif self.accept_kw("REDUCED"):
            q.reduced = True
        if self.accept_op("*"):
            q.projection = None
        else:
            proj = []
            while True:
                if self.tok.kind == "VAR":
                    proj.append((Var(self.advance().text[1:]), None))
                elif self.is_op("("):
                    self.advance()
                    e = self.expression()
                    self.expect_kw("AS")
                    if self.tok.kind != "VAR":
                        raise self.error("expected variable after AS")
                    proj.append((Var(self.advance().text[1:]), e))
                    self.expect_op(")")
                else:
                    break
            if not proj:
                raise self.error("expected projection variables or '*'")
            names = [v.name for v, _ in proj]
            if len(set(names)) != len(names):
                raise self.error("duplicate projection variable")
            q.projection = proj
        self.dataset_clause()
        q.pattern = self.where_clause()
        self.solution_modifier(q)
        return q

    def construct_query(self) -> SparqlQuery:
        q = SparqlQuery("CONSTRUCT", None)
        if self.is_op("{"):
            self.advance()
            q.template = self.template_triples()
            self.expect_op("}")
            self.dataset_clause()
            q.pattern = self.where_clause()
        else:
            self.dataset_clause()
            self.expect_kw("WHERE")
            self.expect_op("{")
            q.template = self.template_triples()
            self.expect_op("}")
            if not q.template:
                raise self.error("empty CONSTRUCT WHERE template")
            q.pattern = BGP(list(q.template))
        self.solution_modifier(q)
        return q

    def template_triples(self) -> list:
        out = []
        while not self.is_op("}"):
            for el in self.triples_same_subject(allow_paths=False):
                out.append(el)
            if not self.accept_op("."):
                break
        return out

    def describe_query(self) -> SparqlQuery:
        q = SparqlQuery("DESCRIBE", None)
        if self.accept_op("*"):
            q.describe = ["*"]
        else:
            while self.tok.kind in ("VAR", "IRIREF", "PNAME_LN", "PNAME_NS"):
                q.describe.append(self.var_or_iri())
            if not q.describe:
                raise self.error("expected DESCRIBE target")
        self.dataset_clause()
        if self.is_kw("WHERE") or self.is_op("{"):
            q.pattern = self.where_clause()
        self.solution_modifier(q)
        return q

    def solution_modifier(self, q: SparqlQuery):
        if self.is_kw("GROUP"):
            self.advance()
            self.expect_kw("BY")
            while True:
                if self.tok.kind == "VAR":
                    q.group_by.append(Var(self.advance().text[1:]))
                elif self.is_op("("):
                    raise UnsupportedFeature("GROUP BY expression", "only variables may be grouped on")
                else:
                    break
            if not q.group_by:
                raise self.error("expected GROUP BY variable")
        if self.is_kw("HAVING"):
            self.advance()
            while self.is_op("(") or (self.tok.kind == "NAME" and not self.is_kw("ORDER", "LIMIT", "OFFSET", "VALUES")):
                q.having.append(self.constraint())
            if not q.having:
                raise self.error("expected HAVING condition")
        if self.is_kw("ORDER"):
            self.advance()
            self.expect_kw("BY")
            while True:
                if self.is_kw("ASC", "DESC"):
                    desc = self.advance().upper == "DESC"
                    self.expect_op("(")
                    e = self.expression()
                    self.expect_op(")")
                    q.order_by.append((e, desc))
                elif self.tok.kind == "VAR":
                    q.order_by.append((EVar(self.advance().text[1:]), False))
                elif self.is_op("(") or (self.tok.kind == "NAME" and not self.is_kw("LIMIT", "OFFSET", "VALUES")):
                    q.order_by.append((self.constraint(), False))
                else:
                    break
            if not q.order_by:
                raise self.error("expected ORDER BY condition")
        for _ in range(2):
            if self.is_kw("LIMIT") and q.limit is None:
                self.advance()
                q.limit = self.nonneg_int()
            elif self.is_kw("OFFSET") and q.offset is None:
                self.advance()
                q.offset = self.nonneg_int()

    def nonneg_int(self) -> int:
        t = self.tok
        if t.kind != "INTEGER":
            raise self.error("expected non-negative integer")
        self.advance()
        return int(t.text)

    def constraint(self):
        if self.is_op("("):
            self.advance()
            e = self.expression()
            self.expect_op(")")
            return e
        return self.primary()

    # -- graph patterns ----------------------------------------------
    def group_graph_pattern(self):
        self.expect_op("{")
        if self.is_kw("SELECT"):
            raise UnsupportedFeature("subquery")
        cur = None
        bgp: BGP | None = None
        filters = []
        seen_any = False

        def join(a, b):
            return b if a is None else Join(a, b)

        while not self.is_op("}"):
            t = self.tok
            if t.kind == "EOF":
                raise self.error("unterminated group pattern")
            seen_any = True
            if self.accept_kw("OPTIONAL"):
                cur = Optional_(cur, self.group_graph_pattern())
                bgp = None
            elif self.accept_kw("MINUS"):
                cur = Minus(cur, self.group_graph_pattern())
                bgp = None
            elif self.accept_kw("FILTER"):
                filters.append(self.constraint())
            elif self.accept_kw("BIND"):
                self.expect_op("(")
                e = self.expression()
                self.expect_kw("AS")
                if self.tok.kind != "VAR":
                    raise self.error("expected variable after AS")
                v = Var(self.advance().text[1:])
                self.expect_op(")")
                if bgp is None:
                    bgp = BGP([])
                    cur = join(cur, bgp)
                bgp.elements.append(Bind(e, v))
            elif self.accept_kw("VALUES"):
                vc = self.values_block()
                if bgp is None:
                    bgp = BGP([])
                    cur = join(cur, bgp)
                bgp.elements.append(vc)
            elif self.is_kw("GRAPH"):
                raise UnsupportedFeature("GRAPH", "named graphs are not supported")
            elif self.is_kw("SERVICE"):
                raise UnsupportedFeature("SERVICE", "federated queries are not supported")
            elif self.is_op("{"):
                g = self.group_graph_pattern()
                while self.accept_kw("UNION"):
                    g = Union_(g, self.group_graph_pattern())
                cur = join(cur, g)
                bgp = None
            else:
                els = self.triples_same_subject(allow_paths=True)
                if bgp is None:
                    bgp = BGP([])
                    cur = join(cur, bgp)
                bgp.elements.extend(els)
                if not self.accept_op("."):
                    if not self.is_op("}") and not self._starts_non_triples():
                        raise self.error("expected '.' or '}'")
                continue
            self.accept_op(".")
        self.advance()
        if not seen_any:
            # an empty group matches once, binding nothing
            return BGP([])
        for f in filters:
            cur = Filter(cur, f)
        return cur

    def _starts_non_triples(self) -> bool:
        return self.is_op("{") or self.is_kw("OPTIONAL", "MINUS", "FILTER", "BIND", "VALUES", "GRAPH", "SERVICE")

    def values_block(self) -> ValuesClause:
        if self.tok.kind == "VAR":
            vars_ = (Var(self.advance().text[1:]),)
            single = True
        elif self.tok.kind == "NIL":
            self.advance()
            vars_, single = (), False
        else:
            self.expect_op("(")
            vs = []
            while self.tok.kind == "VAR":
                vs.append(Var(self.advance().text[1:]))
            self.expect_op(")")
            vars_, single = tuple(vs), False
        self.expect_op("{")
        rows = []
        while not self.is_op("}"):
            if single:
                rows.append((self.data_value(),))
            else:
                if self.tok.kind == "NIL":
                    self.advance()
                    row = ()
                else:
                    self.expect_op("(")
                    row = []
                    while not self.is_op(")"):
                        row.append(self.data_value())
                    self.advance()
                    row = tuple(row)
                if len(row) != len(vars_):
                    raise self.error("VALUES row length does not match variable list")
                rows.append(row)
        self.advance()
        return ValuesClause(vars_, tuple(rows))

    def data_value(self):
        if self.accept_kw("UNDEF"):
            return None
        t = self.tok
        if t.kind in ("IRIREF", "PNAME_LN", "PNAME_NS"):
            return self.iri()
        if t.kind == "VAR" or t.kind == "BLANK" or t.kind == "ANON":
            raise self.error("expected constant in VALUES")
        return self.literal_term()

    # -- triples ---------------------------------------------------
    def triples_same_subject(self, allow_paths: bool) -> list:
        out: list = []
        t = self.tok
        if t.kind == "OP" and t.text == "[":
            subj = self.blank_property_list(out, allow_paths)
            if self.is_op(".", "}") or self.tok.kind == "EOF":
                return out
        elif t.kind in ("NIL",) or self.is_op("("):
            raise UnsupportedFeature("RDF collections")
        else:
            subj = self.var_or_term()
            if isinstance(subj, Literal):
                raise self.error("literal not allowed as subject", t)
        self.property_list(subj, out, allow_paths)
        return out

    def blank_property_list(self, out: list, allow_paths: bool) -> Var:
        self.expect_op("[")
        v = self.fresh_var("b")
        self.property_list(v, out, allow_paths)
        self.expect_op("]")
        return v

    def property_list(self, subj, out: list, allow_paths: bool):
        while True:
            verb = self.verb(allow_paths)
            while True:
                obj = self.graph_node(out, allow_paths)
                out.append(self.make_pattern(subj, verb, obj))
                if not self.accept_op(","):
                    break
            if not self.is_op(";"):
                return
            while self.accept_op(";"):
                pass
            if self.is_op(".", "}", "]") or self.tok.kind == "EOF" or self._starts_non_triples():
                return

    @staticmethod
    def make_pattern(s, verb, o):
        if isinstance(verb, Var):
            return TriplePattern(s, verb, o)
        if isinstance(verb, PLink):
            return TriplePattern(s, verb.iri, o)
        return PathPattern(s, verb, o)

    def verb(self, allow_paths: bool):
        t = self.tok
        if t.kind == "VAR":
            self.advance()
            return Var(t.text[1:])
        if not allow_paths:
            if t.kind == "NAME" and t.text == "a":
                self.advance()
                return PLink(IRI(RDF_TYPE))
            return PLink(self.iri())
        return self.path()

    def graph_node(self, out: list, allow_paths: bool):
        t = self.tok
        if self.is_op("["):
            return self.blank_property_list(out, allow_paths)
        if t.kind == "NIL" or self.is_op("("):
            raise UnsupportedFeature("RDF collections")
        return self.var_or_term()

    def var_or_term(self):
        t = self.tok
        if t.kind == "VAR":
            self.advance()
            return Var(t.text[1:])
        if t.kind == "BLANK":
            self.advance()
            return Var("#" + t.text)
        if t.kind == "ANON":
            self.advance()
            return self.fresh_var("b")
        if t.kind in ("IRIREF", "PNAME_LN", "PNAME_NS"):
            return self.iri()
        return self.literal_term()

    def var_or_iri(self):
        if self.tok.kind == "VAR":
            return Var(self.advance().text[1:])
        return self.iri()

    def iri(self):
        t = self.tok
        if t.kind == "IRIREF":
            self.advance()
            value = t.text[1:-1]
            return _iri_ref(value)
        if t.kind in ("PNAME_LN", "PNAME_NS"):
            self.advance()
            prefix, _, local = t.text.partition(":")
            if prefix not in self.prefixes and prefix not in DEFAULT_PREFIXES:
                raise UnknownPrefix(prefix, t.line, t.column)
            return PName(prefix, _unescape_local(local))
        raise self.error("expected IRI")

    def literal_term(self):
        t = self.tok
        if t.kind.startswith("STRING"):
            self.advance()
            quote = 3 if t.kind.startswith("STRING_LONG") else 1
            lex = unescape_string(t.text[quote:-quote], t.line, t.column)
            if self.tok.kind == "LANGTAG":
                return Literal(lex, language=self.advance().text[1:])
            if self.accept_op("^^"):
                dt_tok = self.tok
                dt = self.iri()
                return Literal(lex, self.resolve_now(dt, dt_tok))
            return Literal(lex)
        sign = ""
        if self.is_op("+", "-") and self.peek().kind in ("INTEGER", "DECIMAL", "DOUBLE"):
            sign = self.advance().text
            t = self.tok
        if t.kind == "INTEGER":
            self.advance()
            return Literal(sign + t.text, XSD + "integer")
        if t.kind == "DECIMAL":
            self.advance()
            return Literal(sign + t.text, XSD + "decimal")
        if t.kind == "DOUBLE":
            self.advance()
            return Literal(sign + t.text, XSD + "double")
        if t.kind == "NAME" and t.text.lower() in ("true", "false"):
            self.advance()
            return Literal(t.text.lower(), XSD + "boolean")
        raise self.error("expected RDF term")

    def resolve_now(self, iri, tok: Token) -> str:
        """Datatype IRIs are needed as plain strings, so they are expanded during parsing."""
        if isinstance(iri, IRI):
            return iri.value
        if isinstance(iri, PName):
            ns = self.prefixes.get(iri.prefix, DEFAULT_PREFIXES.get(iri.prefix))
            if ns is None:
                raise UnknownPrefix(iri.prefix, tok.line, tok.column)
            return ns + iri.local
        return iri.value

    # -- property paths ------------------------------------------------
    def path(self):
        left = self.path_sequence()
        while self.accept_op("|"):
            left = PAlt(left, self.path_sequence())
        return left

    def path_sequence(self):
        left = self.path_elt_or_inverse()
        while self.accept_op("/"):
            left = PSeq(left, self.path_elt_or_inverse())
        return left

    def path_elt_or_inverse(self):
        if self.accept_op("^"):
            return PInv(self.path_elt())
        return self.path_elt()

    def path_elt(self):
        prim = self.path_primary()
        if self.is_op("*"):
            self.advance()
            return PStar(prim)
        if self.is_op("+"):
            self.advance()
            return PPlus(prim)
        if self.is_op("?"):
            self.advance()
            return POpt(prim)
        return prim

    def path_primary(self):
        t = self.tok
        if t.kind == "NAME" and t.text == "a":
            self.advance()
            return PLink(IRI(RDF_TYPE))
        if self.accept_op("!"):
            return PNeg(tuple(self.negated_set()))
        if self.accept_op("("):
            p = self.path()
            self.expect_op(")")
            return p
        if t.kind == "NIL":
            raise self.error("empty path group")
        return PLink(self.iri())

    def negated_set(self) -> list:
        def one():
            inv = self.accept_op("^")
            if self.tok.kind == "NAME" and self.tok.text == "a":
                self.advance()
                return (IRI(RDF_TYPE), inv)
            return (self.iri(), inv)

        if self.accept_op("("):
            items = []
            if not self.is_op(")"):
                items.append(one())
                while self.accept_op("|"):
                    items.append(one())
            self.expect_op(")")
            return items
        if self.tok.kind == "NIL":
            self.advance()
            return []
        return [one()]

    # -- expressions -------------------------------------------------
    def expression(self):
        left = self.conditional_and()
        while self.accept_op("||"):
            left = EBinary("||", left, self.conditional_and())
        return left

    def conditional_and(self):
        left = self.relational()
        while self.accept_op("&&"):
            left = EBinary("&&", left, self.relational())
        return left

    def relational(self):
        left = self.additive()
        if self.is_op("=", "!=", "<", ">", "<=", ">="):
            op = self.advance().text
            return EBinary(op, left, self.additive())
        if self.is_kw("IN"):
            self.advance()
            return EIn(left, tuple(self.expression_list()), False)
        if self.is_kw("NOT") and self.peek().kind == "NAME" and self.peek().upper == "IN":
            self.advance()
            self.advance()
            return EIn(left, tuple(self.expression_list()), True)
        return left

    def expression_list(self) -> list:
        if self.tok.kind == "NIL":
            self.advance()
            return []
        self.expect_op("(")
        out = [self.expression()]
        while self.accept_op(","):
            out.append(self.expression())
        self.expect_op(")")
        return out

    def additive(self):
        left = self.multiplicative()
        while True:
            if self.is_op("+", "-"):
                op = self.advance().text
                left = EBinary(op, left, self.multiplicative())
            else:
                return left

    def multiplicative(self):
        left = self.unary()
        while self.is_op("*", "/"):
            op = self.advance().text
            left = EBinary(op, left, self.unary())
        return left

    def unary(self):
        if self.accept_op("!"):
            return EUnary("!", self.unary())
        if self.is_op("-"):
            self.advance()
            return EUnary("-", self.unary())
        if self.is_op("+"):
            self.advance()
            return EUnary("+", self.unary())
        return self.primary()

    def primary(self):
        t = self.tok
        if self.is_op("("):
            self.advance()
            e = self.expression()
            self.expect_op(")")
            return e
        if t.kind == "VAR":
            self.advance()
            return EVar(t.text[1:])
        if t.kind in ("IRIREF", "PNAME_LN", "PNAME_NS"):
            iri = self.iri()
            if self.is_op("(") or self.tok.kind == "NIL":
                raise UnsupportedFeature("function call", f"IRI function {iri}")
            return ETerm(iri)
        if t.kind == "NAME":
            name = t.upper
            if name in ("TRUE", "FALSE"):
                return ETerm(self.literal_term())
            if name in ("NOT", "EXISTS"):
                negated = name == "NOT"
                self.advance()
                if negated:
                    self.expect_kw("EXISTS")
                return EExists(self.group_graph_pattern(), negated)
            if name in AGGREGATES:
                return self.aggregate()
            if name in FUNCTIONS:
                return self.function_call()
            if name in UNSUPPORTED_FUNCTIONS:
                raise UnsupportedFeature(name, "function is not supported")
            if self.peek().kind == "NIL" or (self.peek().kind == "OP" and self.peek().text == "("):
                raise UnsupportedFeature(name, "function is not supported")
            raise self.error("unexpected keyword in expression")
        return ETerm(self.literal_term())

    def function_call(self):
        t = self.advance()
        name = t.upper
        if self.tok.kind == "NIL":
            self.advance()
            args = []
        else:
            self.expect_op("(")
            args = [self.expression()]
            while self.accept_op(","):
                args.append(self.expression())
            self.expect_op(")")
        arity = FUNCTIONS[name]
        ok = len(args) in arity if isinstance(arity, tuple) else len(args) == arity
        if not ok:
            raise SparqlSyntaxError(f"wrong number of arguments to {name}", t.line, t.column)
        if name == "BOUND" and not isinstance(args[0], EVar):
            raise SparqlSyntaxError("BOUND takes a variable", t.line, t.column)
        return EFunc(name, tuple(args))

    def aggregate(self):
        t = self.advance()
        name = t.upper
        self.expect_op("(")
        distinct = self.accept_kw("DISTINCT")
        if self.accept_op("*"):
            if name != "COUNT":
                raise SparqlSyntaxError(f"{name}(*) is not allowed", t.line, t.column)
            arg = None
        else:
            arg = self.expression()
            if has_aggregate(arg):
                raise SparqlSyntaxError("nested aggregate", t.line, t.column)
        if self.accept_op(";"):
            raise UnsupportedFeature("aggregate SEPARATOR")
        self.expect_op(")")
        return EAggregate(name, arg, distinct)

    # -- static checks -------------------------------------------------
    def check(self, q: SparqlQuery):
        aggregated = bool(q.group_by) or bool(q.having) or any(
            e is not None and has_aggregate(e) for _, e in (q.projection or [])
        )
        if q.projection is None and q.group_by and q.form == "SELECT":
            raise SparqlSyntaxError("SELECT * not allowed with GROUP BY", 1, 1)
        if aggregated and q.form == "SELECT" and q.projection is not None:
            keys = {v.name for v in q.group_by}
            for v, e in q.projection:
                if e is None and v.name not in keys:
                    raise SparqlSyntaxError(f"variable ?{v.name} is not grouped", 1, 1)
                if e is not None:
                    free = _non_aggregated_vars(e)
                    if free - keys:
                        raise SparqlSyntaxError(f"expression for ?{v.name} uses ungrouped variables", 1, 1)
        if q.projection:
            in_scope = set(pattern_vars(q.pattern))
            seen = set()
            for v, e in q.projection:
                if e is not None and (v.name in in_scope or v.name in seen):
                    raise SparqlSyntaxError(f"variable ?{v.name} is already in scope", 1, 1)
                seen.add(v.name)
        if q.form == "CONSTRUCT":
            for tp in q.template:
                if isinstance(tp, PathPattern):
                    raise SparqlSyntaxError("property paths are not allowed in CONSTRUCT templates", 1, 1)
        if q.form == "DESCRIBE" and q.pattern is None:
            if any(isinstance(d, Var) or d == "*" for d in q.describe):
                raise SparqlSyntaxError("DESCRIBE of a variable needs a WHERE clause", 1, 1)


def _non_aggregated_vars(e) -> set:
    if isinstance(e, EAggregate):
        return set()
    if isinstance(e, EVar):
        return {e.name}
    if isinstance(e, EBinary):
        return _non_aggregated_vars(e.left) | _non_aggregated_vars(e.right)
    if isinstance(e, EUnary):
        return _non_aggregated_vars(e.operand)
    if isinstance(e, EIn):
        out = _non_aggregated_vars(e.operand)
        for o in e.options:
            out |= _non_aggregated_vars(o)
        return out
    if isinstance(e, EFunc):
        out = set()
        for a in e.args:
            out |= _non_aggregated_vars(a)
        return out
    return set()


def _iri_ref(value: str):
    if ":" in value and not value.startswith(("/", "#", "?")) and value.split(":", 1)[0].replace("+", "").replace("-", "").replace(".", "").isalnum():
        try:
            return IRI(value)
        except ValueError:
            pass
    return RelIRI(value)


def _unescape_local(local: str) -> str:
    if "\\" not in local:
        return local
    out = []
    i = 0
    while i < len(local):
        if local[i] == "\\" and i + 1 < len(local):
            out.append(local[i + 1])
            i += 2
        else:
            out.append(local[i])
            i += 1
    return "".join(out)


def parse_sparql(text: str) -> SparqlQuery:
    """Parse query text; prefixes are recorded but not expanded."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as e:
            raise SparqlSyntaxError(f"invalid UTF-8 at byte {e.start}", 1, 1) from None
    return Parser(text).parse()
