"""Reference SPARQL evaluator over a plain set of triples.

This is the differential oracle for the compiled pipeline.  It shares no
evaluation code with the graph, traversal or compiler modules: patterns are
matched by nested loops over triple indexes and the algebra (join, left join,
union, minus, filter) is applied bottom-up, with EXISTS evaluated by
substituting the current solution.

Expression semantics are two-valued like the traversal engine's: a
comparison involving an error or incomparable operands is false, an
arithmetic error yields an error value, and the effective boolean value of an
error is false.
"""

from __future__ import annotations

import math
import re
from collections import defaultdict
from decimal import ROUND_CEILING, ROUND_FLOOR, Decimal, InvalidOperation
from functools import cmp_to_key
from typing import Iterable

from ergstore.predicates import UNBOUND
from ergstore.rdf import (
    IRI,
    NUMERIC_TYPES,
    RDF_TYPE,
    XSD_BOOLEAN,
    XSD_STRING,
    BNode,
    Literal,
    Triple,
    literal_value,
    numeric_literal,
)
from ergstore.results import BindingTable, make_triple
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
    EVar,
    Filter,
    Join,
    Minus,
    Optional_,
    PAlt,
    PathPattern,
    PInv,
    PLink,
    PNeg,
    POpt,
    PPlus,
    PSeq,
    PStar,
    SparqlQuery,
    TriplePattern,
    Union_,
    UnsupportedFeature,
    ValuesClause,
    Var,
    pattern_vars,
)


class _Error:
    def __repr__(self):
        return "ERROR"


ERR = _Error()
_TRUE = Literal("true", XSD_BOOLEAN)
_FALSE = Literal("false", XSD_BOOLEAN)


def _lit(b: bool) -> Literal:
    return _TRUE if b else _FALSE


# -- value classification -------------------------------------------------

def _classify(t):
    """(category, payload...) for comparisons; categories num/bool/str/lit are literals."""
    if isinstance(t, IRI):
        return ("iri", t.value)
    if isinstance(t, BNode):
        return ("bnode", t.scope, t.id)
    if isinstance(t, Literal):
        if t.language is not None:
            return ("str", t.lexical, t.language)
        if t.datatype == XSD_STRING:
            return ("str", t.lexical, None)
        if t.datatype in NUMERIC_TYPES or t.datatype == XSD_BOOLEAN:
            v = literal_value(t)
            if isinstance(v, bool):
                return ("bool", v)
            if not isinstance(v, str):
                return ("num", v)
        return ("lit", t.lexical, t.datatype)
    return ("error",)


_LITERAL_CATEGORIES = {"num", "bool", "str", "lit"}


def _equal(a, b) -> bool:
    if a is ERR or b is ERR:
        return False
    ca, cb = _classify(a), _classify(b)
    if ca[0] != cb[0]:
        return False
    if ca[0] == "num":
        return ca[1] == cb[1]
    return ca == cb


def _not_equal(a, b) -> bool:
    if a is ERR or b is ERR:
        return False
    ca, cb = _classify(a), _classify(b)
    if ca[0] == cb[0]:
        return not _equal(a, b)
    return not (ca[0] in _LITERAL_CATEGORIES and cb[0] in _LITERAL_CATEGORIES)


def _less(a, b, or_equal: bool) -> bool:
    if a is ERR or b is ERR:
        return False
    ca, cb = _classify(a), _classify(b)
    if ca[0] == "num" and cb[0] == "num":
        x, y = ca[1], cb[1]
    elif ca[0] == "str" and cb[0] == "str" and ca[2] is None and cb[2] is None:
        x, y = ca[1], cb[1]
    else:
        return False
    return x <= y if or_equal else x < y


def _compare(op: str, a, b) -> bool:
    if op == "=":
        return _equal(a, b)
    if op == "!=":
        return _not_equal(a, b)
    if op == "<":
        return _less(a, b, False)
    if op == "<=":
        return _less(a, b, True)
    if op == ">":
        return _less(b, a, False)
    if op == ">=":
        return _less(b, a, True)
    raise ValueError(op)


def _ebv(v) -> bool:
    if v is ERR:
        return False
    c = _classify(v)
    if c[0] == "bool":
        return c[1]
    if c[0] == "num":
        return not (c[1] != c[1]) and c[1] != 0
    if c[0] == "str":
        return c[1] != ""
    return False


def _number(v):
    if isinstance(v, Literal) and v.language is None and v.datatype in NUMERIC_TYPES:
        x = literal_value(v)
        if not isinstance(x, (str, bool)):
            return x
    return None


def _as_string(v) -> Literal | None:
    if isinstance(v, Literal) and (v.language is not None or v.datatype == XSD_STRING):
        return v
    return None


def _arith(op: str, x, y):
    if isinstance(x, float) or isinstance(y, float):
        x, y = float(x), float(y)
    elif isinstance(x, Decimal) or isinstance(y, Decimal):
        x, y = Decimal(x), Decimal(y)
    if op == "+":
        return x + y
    if op == "-":
        return x - y
    if op == "*":
        return x * y
    if isinstance(x, float):
        if y == 0:
            if x == 0 or x != x:
                return math.nan
            return math.inf * (1 if (x > 0) == (math.copysign(1.0, y) > 0) else -1)
        return x / y
    if y == 0:
        return ERR
    return Decimal(x) / Decimal(y)


def _lang_match(tag: str, rng: str) -> bool:
    if tag == "":
        return False
    tag, rng = tag.lower(), rng.lower()
    return rng == "*" or tag == rng or tag.startswith(rng + "-")


def _regex_flags(flags: str):
    table = {"i": re.I, "s": re.S, "m": re.M, "x": re.X}
    out = 0
    for ch in flags:
        if ch not in table:
            return None
        out |= table[ch]
    return out


# -- expressions ------------------------------------------------------------

class _Evaluator:
    def __init__(self, oracle: "Oracle", aggregates: dict | None = None):
        self.oracle = oracle
        self.aggregates = aggregates or {}

    def __call__(self, e, mu: dict):
        if isinstance(e, EVar):
            return mu.get(e.name, ERR)
        if isinstance(e, ETerm):
            return e.term
        if isinstance(e, EAggregate):
            return self.aggregates.get(e, ERR)
        if isinstance(e, EBinary):
            if e.op == "&&":
                return _lit(_ebv(self(e.left, mu)) and _ebv(self(e.right, mu)))
            if e.op == "||":
                return _lit(_ebv(self(e.left, mu)) or _ebv(self(e.right, mu)))
            a, b = self(e.left, mu), self(e.right, mu)
            if e.op in ("=", "!=", "<", "<=", ">", ">="):
                return _lit(_compare(e.op, a, b))
            x, y = _number(a), _number(b)
            if x is None or y is None:
                return ERR
            r = _arith(e.op, x, y)
            return ERR if r is ERR else numeric_literal(r)
        if isinstance(e, EUnary):
            v = self(e.operand, mu)
            if e.op == "!":
                return _lit(not _ebv(v))
            n = _number(v)
            if n is None:
                return ERR
            return numeric_literal(-n if e.op == "-" else n)
        if isinstance(e, EIn):
            v = self(e.operand, mu)
            if v is ERR:
                return ERR
            opts = [self(o, mu) for o in e.options]
            if e.negated:
                if any(o is ERR for o in opts):
                    return _FALSE
                return _lit(all(_not_equal(v, o) for o in opts))
            return _lit(any(_equal(v, o) for o in opts))
        if isinstance(e, EExists):
            found = bool(self.oracle.eval_pattern(e.pattern, mu))
            return _lit(found != e.negated)
        if isinstance(e, EFunc):
            return self.call(e, mu)
        raise UnsupportedFeature("expression", type(e).__name__)

    def call(self, e: EFunc, mu: dict):
        name = e.name
        if name == "BOUND":
            return _lit(e.args[0].name in mu)
        if name == "RAND":
            raise UnsupportedFeature("RAND in reference evaluation")
        args = [self(a, mu) for a in e.args]
        if name in ("ABS", "CEIL", "FLOOR", "ROUND"):
            return _rounding(name, args[0])
        if name == "LANG":
            if not isinstance(args[0], Literal):
                return ERR
            return Literal(args[0].language or "")
        if name == "LANGMATCHES":
            a, b = _as_string(args[0]), _as_string(args[1])
            if a is None or b is None:
                return ERR
            return _lit(_lang_match(a.lexical, b.lexical))
        if name == "REGEX":
            pat = _as_string(args[1])
            flags = ""
            if len(args) == 3:
                f = _as_string(args[2])
                if f is None:
                    return ERR
                flags = f.lexical
            if pat is None:
                return ERR
            fl = _regex_flags(flags)
            if fl is None:
                return ERR
            try:
                rx = re.compile(pat.lexical, fl)
            except re.error:
                return ERR
            text = _as_string(args[0]) if args[0] is not ERR else None
            return _lit(text is not None and rx.search(text.lexical) is not None)
        if name in ("STRSTARTS", "STRENDS", "CONTAINS"):
            a, b = _as_string(args[0]), _as_string(args[1])
            if a is None or b is None:
                return ERR
            x, y = a.lexical, b.lexical
            if name == "STRSTARTS":
                return _lit(x.startswith(y))
            if name == "STRENDS":
                return _lit(x.endswith(y))
            return _lit(y in x)
        raise UnsupportedFeature("function", name)


def _rounding(name: str, v):
    n = _number(v)
    if n is None:
        return ERR
    if name == "ABS":
        out = abs(n)
    elif isinstance(n, int):
        out = n
    elif isinstance(n, float):
        if n != n or math.isinf(n):
            out = n
        elif name == "CEIL":
            out = float(math.ceil(n))
        elif name == "FLOOR":
            out = float(math.floor(n))
        else:
            out = float(math.floor(n + 0.5))
    else:
        try:
            if name == "CEIL":
                out = n.to_integral_value(rounding=ROUND_CEILING)
            elif name == "FLOOR":
                out = n.to_integral_value(rounding=ROUND_FLOOR)
            else:
                out = (n + Decimal("0.5")).to_integral_value(rounding=ROUND_FLOOR)
        except InvalidOperation:
            return ERR
    if isinstance(out, int):
        return Literal(str(out), v.datatype)
    return numeric_literal(out)


def sort_key(v):
    """Ordering of ORDER BY, MIN and MAX: unbound, blank nodes, IRIs, then literals."""
    if v is ERR or v is UNBOUND or v is None:
        return (0,)
    if isinstance(v, BNode):
        return (1, v.scope, v.id)
    if isinstance(v, IRI):
        return (2, v.value)
    n = _number(v)
    if n is not None and n == n:
        return (3, 0, n, v.lexical, v.datatype)
    return (3, 1, v.lexical, v.datatype, v.language or "")


# -- rule closure -------------------------------------------------------------

def rdfs_closure(triples: Iterable[Triple], tbox) -> set[Triple]:
    """Apply the seven entailment rules with a fixed schema until nothing new is derived.

    Naive evaluation: every round re-applies every rule to every fact.
    """
    facts = set(triples)
    while True:
        new = set()
        by_p = defaultdict(list)
        for t in facts:
            by_p[t.p.value].append(t)
        for t in facts:
            p = t.p.value
            resource = not isinstance(t.o, Literal)
            if p == RDF_TYPE and isinstance(t.o, IRI):
                for d in tbox.sub_class_of.get(t.o.value, ()):
                    new.add(Triple(t.s, IRI(RDF_TYPE), IRI(d)))
            for q in tbox.sub_property_of.get(p, ()):
                new.add(Triple(t.s, IRI(q), t.o))
            for c in tbox.rdfs_domain.get(p, ()):
                new.add(Triple(t.s, IRI(RDF_TYPE), IRI(c)))
            if not resource:
                continue
            for c in tbox.rdfs_range.get(p, ()):
                new.add(Triple(t.o, IRI(RDF_TYPE), IRI(c)))
            for q in tbox.inverse_of.get(p, ()):
                new.add(Triple(t.o, IRI(q), t.s))
            if p in tbox.symmetric_props:
                new.add(Triple(t.o, t.p, t.s))
            if p in tbox.transitive_props:
                for u in by_p[p]:
                    if u.s == t.o:
                        new.add(Triple(t.s, t.p, u.o))
        new -= facts
        if not new:
            return facts
        facts |= new


# -- pattern evaluation -------------------------------------------------------

def _compatible(a: dict, b: dict) -> bool:
    return all(b[k] == v for k, v in a.items() if k in b)


class Oracle:
    def __init__(self, triples: Iterable[Triple]):
        self.triples = set(triples)
        self.by_s = defaultdict(set)
        self.by_p = defaultdict(set)
        self.by_o = defaultdict(set)
        self.nodes = set()
        self.literal_preds = set()
        for t in self.triples:
            self.by_s[t.s].add(t)
            self.by_p[t.p].add(t)
            self.by_o[t.o].add(t)
            self.nodes.add(t.s)
            if isinstance(t.o, Literal):
                self.literal_preds.add(t.p.value)
            else:
                self.nodes.add(t.o)
        self.expr = _Evaluator(self)

    # -- triple and path matching -----------------------------------------
    def _candidates(self, s, p, o):
        pools = []
        if s is not None:
            pools.append(self.by_s.get(s, set()))
        if p is not None:
            pools.append(self.by_p.get(p, set()))
        if o is not None:
            pools.append(self.by_o.get(o, set()))
        if not pools:
            return self.triples
        return min(pools, key=len)

    def _estimate(self, tp: TriplePattern, bound: set) -> int:
        """Upper bound on matches; a bound variable counts as a single candidate."""
        sizes = []
        for t, index in ((tp.s, self.by_s), (tp.p, self.by_p), (tp.o, self.by_o)):
            if isinstance(t, Var):
                if t.name in bound:
                    sizes.append(1)
            else:
                sizes.append(len(index.get(t, ())))
        return min(sizes, default=len(self.triples))

    def _join_order(self, elements, mu: dict) -> list:
        """Runs of plain triple patterns, most selective first; other elements keep their place.

        Joins commute, so this changes only the cost, never the bag of solutions.
        """
        out, run = [], []
        bound = set(mu)

        def flush():
            while run:
                best = min(run, key=lambda tp: self._estimate(tp, bound))
                run.remove(best)
                out.append(best)
                bound.update(v.name for v in (best.s, best.p, best.o) if isinstance(v, Var))

        for el in elements:
            if isinstance(el, TriplePattern):
                run.append(el)
                continue
            flush()
            out.append(el)
        flush()
        return out

    def match_triple(self, tp: TriplePattern, mu: dict) -> list[dict]:
        def resolve(t):
            if isinstance(t, Var):
                return mu.get(t.name)
            return t

        s, p, o = resolve(tp.s), resolve(tp.p), resolve(tp.o)
        out = []
        for t in self._candidates(s, p, o):
            if (s is not None and t.s != s) or (p is not None and t.p != p) or (o is not None and t.o != o):
                continue
            nu = dict(mu)
            ok = True
            for pos, val in ((tp.s, t.s), (tp.p, t.p), (tp.o, t.o)):
                if isinstance(pos, Var):
                    if nu.setdefault(pos.name, val) != val:
                        ok = False
                        break
            if ok:
                out.append(nu)
        return out

    def _link_pairs(self, iri: IRI) -> list:
        return [(t.s, t.o) for t in self.by_p.get(iri, ())]

    def path_pairs(self, path) -> list:
        """Bag of (start, end) pairs connected by ``path``."""
        if isinstance(path, PLink):
            return self._link_pairs(IRI(path.iri.value))
        if isinstance(path, PInv):
            return [(b, a) for a, b in self.path_pairs(path.path)]
        if isinstance(path, PSeq):
            right = defaultdict(list)
            for a, b in self.path_pairs(path.right):
                right[a].append(b)
            return [(a, c) for a, b in self.path_pairs(path.left) for c in right.get(b, ())]
        if isinstance(path, PAlt):
            return self.path_pairs(path.left) + self.path_pairs(path.right)
        if isinstance(path, PNeg):
            return self._negated_pairs(path, literals=True)
        return sorted(self._closure_pairs(path), key=lambda ab: (sort_key(ab[0]), sort_key(ab[1])))

    def _negated_pairs(self, path: PNeg, literals: bool) -> list:
        fwd = {i.value for i, inv in path.items if not inv}
        bwd = {i.value for i, inv in path.items if inv}
        out = []
        for t in self.triples:
            if isinstance(t.o, Literal) and not literals:
                continue
            if (fwd or not bwd) and t.p.value not in fwd:
                out.append((t.s, t.o))
            if bwd and t.p.value not in bwd:
                out.append((t.o, t.s))
        return out

    def _step_pairs(self, path) -> set:
        """Node-to-node pairs of one repetition, as a set."""
        if isinstance(path, PLink):
            if path.iri.value in self.literal_preds:
                raise UnsupportedFeature("repeated property path", f"<{path.iri.value}> has literal values")
            return set(self._link_pairs(IRI(path.iri.value)))
        if isinstance(path, PInv):
            return {(b, a) for a, b in self._step_pairs(path.path)}
        if isinstance(path, PSeq):
            right = defaultdict(set)
            for a, b in self._step_pairs(path.right):
                right[a].add(b)
            return {(a, c) for a, b in self._step_pairs(path.left) for c in right.get(b, ())}
        if isinstance(path, PAlt):
            return self._step_pairs(path.left) | self._step_pairs(path.right)
        if isinstance(path, PNeg):
            return set(self._negated_pairs(path, literals=False))
        return self._closure_pairs(path)

    def _closure_pairs(self, path) -> set:
        step = defaultdict(set)
        for a, b in self._step_pairs(path.path):
            step[a].add(b)
        if isinstance(path, POpt):
            return {(n, n) for n in self.nodes} | {(a, b) for a, bs in step.items() for b in bs}
        if not isinstance(path, (PStar, PPlus)):
            raise UnsupportedFeature("property path", type(path).__name__)
        out = set()
        for start in self.nodes:
            seen = set()
            frontier = list(step.get(start, ()))
            while frontier:
                x = frontier.pop()
                if x in seen:
                    continue
                seen.add(x)
                frontier.extend(step.get(x, ()))
            if isinstance(path, PStar):
                seen.add(start)
            out |= {(start, x) for x in seen}
        return out

    def match_path(self, pp: PathPattern, mu: dict) -> list[dict]:
        if isinstance(pp.path, PLink):
            return self.match_triple(TriplePattern(pp.s, pp.path.iri, pp.o), mu)
        out = []
        for a, b in self.path_pairs(pp.path):
            nu = dict(mu)
            ok = True
            for pos, val in ((pp.s, a), (pp.o, b)):
                if isinstance(pos, Var):
                    if nu.setdefault(pos.name, val) != val:
                        ok = False
                elif pos != val:
                    ok = False
            if ok:
                out.append(nu)
        return out

    # -- graph patterns -------------------------------------------------------
    def eval_pattern(self, node, mu: dict) -> list[dict]:
        """Solutions of ``node`` that extend ``mu``.

        The left side of a join, optional or minus seeds the right side, so a
        group sees the bindings made before it.
        """
        if node is None:
            return [dict(mu)]
        if isinstance(node, BGP):
            sols = [dict(mu)]
            for el in self._join_order(node.elements, mu):
                sols = [nu for m in sols for nu in self.eval_pattern(el, m)]
            return sols
        if isinstance(node, TriplePattern):
            return self.match_triple(node, mu)
        if isinstance(node, PathPattern):
            return self.match_path(node, mu)
        if isinstance(node, Alternatives):
            out, seen = [], set()
            for p in node.patterns:
                for nu in self.eval_pattern(p, mu):
                    key = frozenset(nu.items())
                    if key not in seen:
                        seen.add(key)
                        out.append(nu)
            return out
        if isinstance(node, ValuesClause):
            out = []
            for row in node.rows:
                nu = dict(mu)
                for var, val in zip(node.vars, row):
                    if val is None:
                        continue
                    if nu.setdefault(var.name, val) != val:
                        break
                else:
                    out.append(nu)
            return out
        if isinstance(node, Bind):
            v = self.expr(node.expr, mu)
            nu = dict(mu)
            if v is not ERR:
                nu[node.var.name] = v
            return [nu]
        if isinstance(node, Join):
            return [nu for m in self.eval_pattern(node.left, mu) for nu in self.eval_pattern(node.right, m)]
        if isinstance(node, Union_):
            return self.eval_pattern(node.left, mu) + self.eval_pattern(node.right, mu)
        if isinstance(node, Optional_):
            out = []
            for m in self.eval_pattern(node.base, mu):
                ext = self.eval_pattern(node.opt, m)
                out.extend(ext if ext else [m])
            return out
        if isinstance(node, Minus):
            left = self.eval_pattern(node.left, mu)
            right = self.eval_pattern(node.right, {})
            return [
                m for m in left
                if not any(set(m) & set(r) and _compatible(m, r) for r in right)
            ]
        if isinstance(node, Filter):
            return [m for m in self.eval_pattern(node.base, mu) if _ebv(self.expr(node.expr, m))]
        raise UnsupportedFeature("pattern", type(node).__name__)


# -- aggregates and solution modifiers ----------------------------------------

def _identity(v):
    if isinstance(v, Literal):
        return ("L", v.lexical, v.datatype, v.language)
    return v


def fold(name: str, values: list, distinct: bool = False):
    """One aggregate over a group's values (ERR entries are skipped)."""
    values = [v for v in values if v is not ERR]
    if distinct:
        seen, uniq = set(), []
        for v in values:
            k = _identity(v)
            if k not in seen:
                seen.add(k)
                uniq.append(v)
        values = uniq
    name = name.upper()
    if name == "COUNT":
        return numeric_literal(len(values))
    if name in ("SUM", "AVG"):
        total = 0
        for v in values:
            n = _number(v)
            if n is None:
                return ERR
            total = _arith("+", total, n)
        if name == "AVG" and values:
            total = _arith("/", total, len(values))
        return numeric_literal(total)
    if not values:
        return ERR
    if name in ("MIN", "SAMPLE"):
        return min(values, key=sort_key)
    if name == "MAX":
        return max(values, key=sort_key)
    raise UnsupportedFeature("aggregate", name)


def _collect_aggregates(e, out: list):
    if isinstance(e, EAggregate):
        if e not in out:
            out.append(e)
    elif isinstance(e, EBinary):
        _collect_aggregates(e.left, out)
        _collect_aggregates(e.right, out)
    elif isinstance(e, EUnary):
        _collect_aggregates(e.operand, out)
    elif isinstance(e, EIn):
        _collect_aggregates(e.operand, out)
        for o in e.options:
            _collect_aggregates(o, out)
    elif isinstance(e, EFunc):
        for a in e.args:
            _collect_aggregates(a, out)


def _group(o: Oracle, q: SparqlQuery, sols: list[dict]):
    """Grouped solutions paired with their aggregate values, or None if the query does not group."""
    aggs: list = []
    for _, e in q.projection or ():
        if e is not None:
            _collect_aggregates(e, aggs)
    for e in q.having:
        _collect_aggregates(e, aggs)
    for e, _ in q.order_by:
        _collect_aggregates(e, aggs)
    if not aggs and not q.group_by:
        return None
    keys = [v.name for v in q.group_by]
    groups: dict = {}
    for m in sols:
        k = tuple(m.get(n, ERR) for n in keys)
        groups.setdefault(k, []).append(m)
    if not keys and not groups:
        groups[()] = []
    out = []
    for k, members in groups.items():
        base = {n: v for n, v in zip(keys, k) if v is not ERR}
        values = {}
        for a in aggs:
            if a.arg is None:
                vals = [frozenset(m.items()) for m in members] if a.distinct else list(members)
                values[a] = numeric_literal(len(set(vals)) if a.distinct else len(vals))
            else:
                values[a] = fold(a.name, [o.expr(a.arg, m) for m in members], a.distinct)
        out.append((base, values))
    return out


def _order(o: Oracle, q: SparqlQuery, rows: list):
    """Sort (solution, aggregates) pairs by the ORDER BY keys."""
    def keyed(pair):
        mu, aggs = pair
        ev = _Evaluator(o, aggs)
        return [sort_key(ev(e, mu)) for e, _ in q.order_by]

    def cmp(a, b):
        for (_, desc), x, y in zip(q.order_by, a[0], b[0]):
            if x != y:
                r = -1 if x < y else 1
                return -r if desc else r
        return 0

    decorated = [(keyed(r), r) for r in rows]
    decorated.sort(key=cmp_to_key(cmp))
    return [r for _, r in decorated]


def solutions(triples: Iterable[Triple], q: SparqlQuery) -> list[dict]:
    """Solution mappings of ``q`` after every modifier, in result order."""
    o = Oracle(triples)
    return _solutions(o, q)


def _solutions(o: Oracle, q: SparqlQuery) -> list[dict]:
    sols = o.eval_pattern(q.pattern, {})
    grouped = _group(o, q, sols)
    rows = [(m, {}) for m in sols] if grouped is None else grouped
    if q.having:
        rows = [
            (mu, aggs) for mu, aggs in rows
            if all(_ebv(_Evaluator(o, aggs)(e, mu)) for e in q.having)
        ]
    if q.form == "SELECT" and q.projection:
        extended = []
        for mu, aggs in rows:
            mu = dict(mu)
            ev = _Evaluator(o, aggs)
            for var, e in q.projection:
                if e is not None:
                    v = ev(e, mu)
                    if v is not ERR:
                        mu[var.name] = v
            extended.append((mu, aggs))
        rows = extended
    if q.order_by:
        rows = _order(o, q, rows)
    out = [mu for mu, _ in rows]
    if q.form == "SELECT":
        cols = q.select_vars()
        out = [{c: mu[c] for c in cols if c in mu} for mu in out]
        if q.distinct or q.reduced:
            seen, uniq = set(), []
            for mu in out:
                k = frozenset(mu.items())
                if k not in seen:
                    seen.add(k)
                    uniq.append(mu)
            out = uniq
    start = q.offset or 0
    end = None if q.limit is None else start + q.limit
    return out[start:end]


def naive_evaluate(triples: Iterable[Triple], q: SparqlQuery, tbox=None) -> BindingTable:
    """Answer ``q`` over ``triples`` (closed under the rules of ``tbox`` when given)."""
    triples = set(triples)
    if tbox is not None:
        triples = rdfs_closure(triples, tbox)
    return evaluate_on(Oracle(triples), q)


def evaluate_on(o: Oracle, q: SparqlQuery) -> BindingTable:
    """Like :func:`naive_evaluate`, reusing an already indexed triple set."""
    sols = _solutions(o, q)
    if q.form == "SELECT":
        cols = q.select_vars()
        return BindingTable("SELECT", cols, [tuple(mu.get(c, UNBOUND) for c in cols) for mu in sols])
    if q.form == "ASK":
        return BindingTable("ASK", boolean=bool(sols))
    if q.form == "CONSTRUCT":
        out = set()
        for mu in sols:
            for tp in q.template:
                t = make_triple(*(mu.get(x.name, UNBOUND) if isinstance(x, Var) else x for x in (tp.s, tp.p, tp.o)))
                if t is not None:
                    out.add(t)
        return BindingTable("CONSTRUCT", triples=out)
    if q.form == "DESCRIBE":
        resources = []
        for d in q.describe:
            if d == "*":
                names = [n for n in pattern_vars(q.pattern) if not n.startswith("#")]
                resources += [mu[n] for mu in sols for n in names if n in mu]
            elif isinstance(d, Var):
                resources += [mu[d.name] for mu in sols if d.name in mu]
            elif sols:
                resources.append(d)
        out = set()
        for r in resources:
            if r in o.nodes:
                out |= o.by_s.get(r, set()) | o.by_o.get(r, set())
        return BindingTable("DESCRIBE", triples=out)
    raise UnsupportedFeature("query form", q.form)
