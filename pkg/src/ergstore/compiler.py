"""Lowering of SPARQL queries to traversals.

Every query variable starts bound to ``UNBOUND`` and is overwritten as
patterns match.  While compiling, each variable is tracked in one of four
states so joins can be emitted without redundant checks:

* ``V``: definitely bound to a resource whose vertex is labelled ``<name>v``
* ``B``: definitely bound (possibly to a literal), no vertex label available
* ``M``: maybe bound (after OPTIONAL, UNION, BIND)
* absent: definitely unbound, so binding needs no compatibility check

Triple patterns are dispatched on the predicate's metadata kind: literal
predicates read vertex properties, referent predicates walk edges, and
mixed or variable predicates union both forms.
"""

from __future__ import annotations

import re

from ergstore.graph import IRI_KEY
from ergstore.ingest import LITERAL, MIXED, REFERENT, MetaCatalog
from ergstore.predicates import UNBOUND, InvalidRegex, Ref, ValuePredicate
from ergstore.rdf import IRI, BNode, Literal
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
from ergstore.traversal import steps as S
from ergstore.traversal.mathexpr import MBin, MCall, MConst, MName, MUnary

# bindings holding instantiated triples for CONSTRUCT and DESCRIBE
TRIPLE_NAMES = ("#sub", "#pred", "#obj")

_COMPARE = {"=": "eq", "!=": "neq", "<": "lt", "<=": "lte", ">": "gt", ">=": "gte"}
_FLIP = {"eq": "eq", "neq": "neq", "lt": "gt", "lte": "gte", "gt": "lt", "gte": "lte"}
_STRING_TESTS = {"STRSTARTS": "startingWith", "STRENDS": "endingWith", "CONTAINS": "containing"}
_MATH_FUNCS = {
    "BOUND": "bound", "REGEX": "regex", "LANGMATCHES": "langMatches", "LANG": "lang",
    "STRSTARTS": "strstarts", "STRENDS": "strends", "CONTAINS": "contains",
    "ABS": "abs", "ROUND": "round", "CEIL": "ceil", "FLOOR": "floor", "RAND": "rand",
}


class CompileError(Exception):
    pass


def _empty() -> list:
    return [S.Not(S.Traversal([S.Identity()]))]


def _local_name(iri: str) -> str:
    m = re.search(r"[^/#:]*$", iri)
    return m.group(0) if m else ""


class CompileContext:
    """Per-query compile state; ``fork`` copies the variable states for a branch."""

    def __init__(self, meta: MetaCatalog | None, names: set[str]):
        self.meta = meta
        self.state: dict[str, str] = {}
        self.dead = False
        self.names = names  # every query variable, to keep labels collision-free
        self._labels: dict[tuple, str] = {}
        self._used: set[str] = set()
        self._fresh = [0]
        self.fresh_names: list[str] = []

    def fork(self) -> "CompileContext":
        c = CompileContext.__new__(CompileContext)
        c.__dict__.update(self.__dict__)
        c.state = dict(self.state)
        c.dead = self.dead
        return c

    def label(self, base: str, key: tuple | None = None) -> str:
        """Internal binding name derived from ``base``, never equal to a query variable."""
        key = key or (base,)
        got = self._labels.get(key)
        if got is not None:
            return got
        name, n = base, 0
        while name in self.names or name in self._used:
            n += 1
            name = f"{base}#{n}"
        self._labels[key] = name
        self._used.add(name)
        return name

    def alias(self, var: str) -> str:
        return self.label(var + "v", ("v", var))

    def fresh(self, prefix: str) -> str:
        self._fresh[0] += 1
        name = f"#{prefix}{self._fresh[0]}"
        while name in self.names:
            self._fresh[0] += 1
            name = f"#{prefix}{self._fresh[0]}"
        self.fresh_names.append(name)
        return name

    def kind(self, iri: str) -> str | None:
        return self.meta.kind(iri) if self.meta is not None else None

    def get(self, name: str) -> str | None:
        return self.state.get(name)

    def set(self, name: str, st: str) -> None:
        self.state[name] = st

    def merge(self, branches: list["CompileContext"]) -> None:
        """Combine the states of alternative branches into this context."""
        live = [b for b in branches if not b.dead]
        if not live:
            self.dead = True
            return
        keys = set()
        for b in live:
            keys |= set(b.state)
        out = {}
        for k in keys:
            sts = [b.state.get(k) for b in live]
            if all(s == "V" for s in sts):
                out[k] = "V"
            elif all(s in ("V", "B") for s in sts):
                out[k] = "B"
            else:
                out[k] = "M"
        self.state = out


def _T(steps) -> S.Traversal:
    return S.Traversal(steps)


def _ref(name: str) -> Ref:
    return Ref(name)


def _const_node(t) -> bool:
    return isinstance(t, (IRI, BNode))


def bind_value(ctx: CompileContext, term) -> list:
    """Check or bind ``term`` against the current value (a term)."""
    if not isinstance(term, Var):
        return [S.Is(ValuePredicate("same", term))]
    n = term.name
    st = ctx.get(n)
    if st is None:
        ctx.set(n, "B")
        return [S.As((n,))]
    if st == "M":
        ctx.set(n, "B")
        return [S.Is(ValuePredicate("compat", _ref(n))), S.As((n,))]
    return [S.Is(ValuePredicate("same", _ref(n)))]


def bind_vertex(ctx: CompileContext, term, value_steps=None) -> list:
    """Check or bind ``term`` against the current value (a vertex)."""
    if isinstance(term, Literal):
        ctx.dead = True
        return _empty()
    if _const_node(term):
        return [S.Has(IRI_KEY, ValuePredicate("eq", term))]
    n = term.name
    st = ctx.get(n)
    if st in ("V", "B"):
        return [S.Has(IRI_KEY, ValuePredicate("same", _ref(n)))]
    value_steps = value_steps or [S.Values(IRI_KEY)]
    out = [S.As((ctx.alias(n),))] + value_steps
    if st == "M":
        out.append(S.Is(ValuePredicate("compat", _ref(n))))
    out.append(S.As((n,)))
    ctx.set(n, "V")
    return out


def vertex_source(ctx: CompileContext, term, index_hint: tuple | None = None) -> tuple[list, bool]:
    """Steps making ``term``'s vertex current.

    Returns ``(steps, deferred)``; when ``deferred`` the variable's value is
    not bound yet (its vertex carries the alias) and ``finish_source`` must be
    applied once the rest of the pattern has been matched.  ``index_hint`` is
    an optional ``(key, predicate)`` restricting an otherwise unanchored scan.
    """
    if isinstance(term, Literal):
        ctx.dead = True
        return _empty(), False
    if _const_node(term):
        return [S.V(), S.Has(IRI_KEY, ValuePredicate("eq", term))], False
    n = term.name
    st = ctx.get(n)
    alias = ctx.alias(n)
    if st == "V":
        return [S.Select((alias,))], False
    if st == "B":
        ctx.set(n, "V")
        return [S.V(), S.Has(IRI_KEY, ValuePredicate("same", _ref(n))), S.As((alias,))], False
    if st == "M":
        bound = _T([S.Select((n,)), S.Is(ValuePredicate("isBound")), S.V(),
                    S.Has(IRI_KEY, ValuePredicate("same", _ref(n)))])
        unbound = _T([S.Select((n,)), S.Is(ValuePredicate("isUnbound")), S.V()])
        return [S.Union((bound, unbound)), S.As((alias,))], True
    scan = [S.V()]
    if index_hint is not None:
        scan.append(S.Has(*index_hint))
    return scan + [S.As((alias,))], True


def finish_source(ctx: CompileContext, term) -> list:
    """Bind a deferred subject from its aliased vertex."""
    n = term.name
    out = [S.Select((ctx.alias(n),)), S.Values(IRI_KEY)] + bind_value(ctx, term)
    ctx.set(n, "V")
    return out


def _navigable(ctx, term, states=("V",)) -> bool:
    if isinstance(term, IRI):
        return True
    return isinstance(term, Var) and ctx.get(term.name) in states


def _needs_early_bind(tp) -> bool:
    return isinstance(tp.s, Var) and tp.s in (tp.p, tp.o)


# -- triple patterns --------------------------------------------------------

def _subject(ctx, tp, index_hint=None) -> tuple[list, bool]:
    steps, deferred = vertex_source(ctx, tp.s, index_hint)
    if deferred and _needs_early_bind(tp):
        steps += finish_source(ctx, tp.s) + [S.Select((ctx.alias(tp.s.name),))]
        deferred = False
    return steps, deferred


def _predicate_check(ctx, p, label_step) -> list:
    """After an edge or property step with no label filter: bind or test the predicate variable."""
    pv = ctx.alias(p.name)
    return [S.As((pv,)), label_step] + bind_value(ctx, p) + [S.Select((pv,))]


def translate_referent_tp(ctx: CompileContext, tp: TriplePattern) -> list:
    """Edge form of a triple pattern: the object is a resource vertex."""
    s, p, o = tp.s, tp.p, tp.o
    if isinstance(s, Literal) or isinstance(o, Literal):
        ctx.dead = True
        return _empty()
    label = p.value if isinstance(p, IRI) else None
    forward = (
        _navigable(ctx, s)
        or not (_navigable(ctx, o) or _navigable(ctx, o, ("B",)))
        or (_navigable(ctx, s, ("B",)) and not _navigable(ctx, o))
    )
    if forward:
        steps, deferred = _subject(ctx, tp)
        steps.append(S.OutE(label))
        if label is None:
            steps += _predicate_check(ctx, p, S.Label())
        elif isinstance(o, Var):
            steps.append(S.As((ctx.label(o.name + "e", ("e", o.name)),)))
        steps.append(S.InV())
        steps += bind_vertex(ctx, o)
        if deferred:
            steps += finish_source(ctx, s)
        return steps
    # reversed: start from the bound object and walk incoming edges
    if isinstance(o, IRI):
        cap = _local_name(label or "")
        alias = ctx.label(f"{s.name}{cap[:1].upper()}{cap[1:]}v", ("c", s.name, label, o.value))
        steps = [S.V(), S.Has(IRI_KEY, ValuePredicate("eq", o)), S.As((alias,))]
    else:
        steps, _ = vertex_source(ctx, o)
    steps.append(S.InE(label))
    if label is None:
        steps += _predicate_check(ctx, p, S.Label())
    steps.append(S.OutV())
    steps += bind_vertex(ctx, s, [S.Properties(IRI_KEY), S.Value()])
    return steps


def translate_literal_tp(ctx: CompileContext, tp: TriplePattern) -> list:
    """Property form of a triple pattern: the object is a stored literal value."""
    s, p, o = tp.s, tp.p, tp.o
    if isinstance(s, Literal) or _const_node(o) or (isinstance(o, Var) and ctx.get(o.name) == "V"):
        ctx.dead = True
        return _empty()
    hint = None
    if isinstance(p, IRI) and isinstance(s, Var) and ctx.get(s.name) is None:
        if isinstance(o, Literal):
            hint = (p.value, ValuePredicate("same", o))
        elif isinstance(o, Var) and ctx.get(o.name) == "B":
            hint = (p.value, ValuePredicate("same", _ref(o.name)))
    steps, deferred = _subject(ctx, tp, hint)
    if isinstance(p, IRI):
        steps.append(S.Properties(p.value))
    else:
        pv = ctx.alias(p.name)
        steps += [S.Properties(), S.As((pv,)), S.Key()] + bind_value(ctx, p) + [S.Select((pv,))]
    steps.append(S.Value())
    steps += bind_value(ctx, o)
    if deferred:
        steps += finish_source(ctx, s)
    return steps


def union_of(ctx: CompileContext, builders: list) -> list:
    """Union of alternative fragments, each compiled from the current state."""
    forks, subs = [], []
    for build in builders:
        c = ctx.fork()
        subs.append(_T(build(c)))
        forks.append(c)
    ctx.merge(forks)
    return [S.Union(tuple(subs))]


def translate_triple_pattern(ctx: CompileContext, tp: TriplePattern) -> list:
    p = tp.p
    if isinstance(p, Var):
        return union_of(ctx, [
            lambda c: translate_referent_tp(c, tp),
            lambda c: translate_literal_tp(c, tp),
        ])
    if not isinstance(p, IRI):
        ctx.dead = True
        return _empty()
    kind = ctx.kind(p.value)
    if kind == LITERAL:
        return translate_literal_tp(ctx, tp)
    if kind == REFERENT:
        return translate_referent_tp(ctx, tp)
    if kind == MIXED:
        return union_of(ctx, [
            lambda c: translate_referent_tp(c, tp),
            lambda c: translate_literal_tp(c, tp),
        ])
    # predicate never seen during ingestion
    ctx.dead = True
    return _empty()


def translate_alternatives(ctx: CompileContext, alt: Alternatives) -> list:
    """Duplicate-free union of rewritten triple patterns, per incoming solution."""
    names = []
    for t in (alt.patterns[0].s, alt.patterns[0].p, alt.patterns[0].o):
        if isinstance(t, Var) and t.name not in names:
            names.append(t.name)
    builders = [lambda c, tp=tp: translate_triple_pattern(c, tp) for tp in alt.patterns]
    return [S.Local(_T(union_of(ctx, builders) + [S.Dedup(tuple(names))]))]


# -- property paths ---------------------------------------------------------

def _closure_step(ctx: CompileContext, path, reverse: bool) -> list:
    """Vertex-to-vertex steps for one application of ``path``."""
    if isinstance(path, PLink):
        iri = path.iri.value
        if ctx.kind(iri) in (LITERAL, MIXED):
            raise UnsupportedFeature("repeated property path", f"<{iri}> has literal values")
        return [S.In(iri) if reverse else S.Out(iri)]
    if isinstance(path, PInv):
        return _closure_step(ctx, path.path, not reverse)
    if isinstance(path, PSeq):
        a, b = (path.right, path.left) if reverse else (path.left, path.right)
        return _closure_step(ctx, a, reverse) + _closure_step(ctx, b, reverse)
    if isinstance(path, PAlt):
        return [S.Union((_T(_closure_step(ctx, path.left, reverse)), _T(_closure_step(ctx, path.right, reverse))))]
    if isinstance(path, PNeg):
        fwd = tuple(IRI(i.value) for i, inv in path.items if inv == reverse)
        bwd = tuple(IRI(i.value) for i, inv in path.items if inv != reverse)
        branches = []
        if fwd or not bwd:
            branches.append(_T([S.OutE(), S.Where(_T([S.Label(), S.Is(ValuePredicate("without", fwd))])), S.InV()]))
        if bwd:
            branches.append(_T([S.InE(), S.Where(_T([S.Label(), S.Is(ValuePredicate("without", bwd))])), S.OutV()]))
        return list(branches[0].steps) if len(branches) == 1 else [S.Union(tuple(branches))]
    return _closure(ctx, path, reverse)


def _closure(ctx: CompileContext, path, reverse: bool) -> list:
    sub = _T(_closure_step(ctx, path.path, reverse))
    if isinstance(path, PStar):
        return [S.Emit("before"), S.Repeat(sub)]
    if isinstance(path, PPlus):
        return [S.Repeat(sub), S.Emit("after")]
    if isinstance(path, POpt):
        return [S.Local(_T([S.Union((_T([S.Identity()]), sub)), S.Dedup(())]))]
    raise UnsupportedFeature("property path", type(path).__name__)


def _translate_closure(ctx: CompileContext, pp: PathPattern) -> list:
    s, o = pp.s, pp.o
    if isinstance(s, Literal):
        ctx.dead = True
        return _empty()
    forward = _navigable(ctx, s) or not (_navigable(ctx, o) or _navigable(ctx, o, ("B",))) or (
        _navigable(ctx, s, ("B",)) and not _navigable(ctx, o)
    )
    if forward:
        tp = TriplePattern(s, None, o)
        steps, deferred = _subject(ctx, tp)
        steps += _closure(ctx, pp.path, False)
        steps += bind_vertex(ctx, o)
        if deferred:
            steps += finish_source(ctx, s)
        return steps
    steps, _ = vertex_source(ctx, o)
    steps += _closure(ctx, pp.path, True)
    steps += bind_vertex(ctx, s, [S.Properties(IRI_KEY), S.Value()])
    return steps


def translate_property_path(ctx: CompileContext, pp: PathPattern) -> list:
    path, s, o = pp.path, pp.s, pp.o
    if isinstance(path, PLink):
        return translate_triple_pattern(ctx, TriplePattern(s, path.iri, o))
    if isinstance(path, PInv):
        return translate_property_path(ctx, PathPattern(o, path.path, s))
    if isinstance(path, PSeq):
        mid = Var(ctx.fresh("p"))
        return (translate_property_path(ctx, PathPattern(s, path.left, mid))
                + translate_property_path(ctx, PathPattern(mid, path.right, o)))
    if isinstance(path, PAlt):
        return union_of(ctx, [
            lambda c: translate_property_path(c, PathPattern(s, path.left, o)),
            lambda c: translate_property_path(c, PathPattern(s, path.right, o)),
        ])
    if isinstance(path, PNeg):
        fwd = tuple(IRI(i.value) for i, inv in path.items if not inv)
        bwd = tuple(IRI(i.value) for i, inv in path.items if inv)

        def negated(c, subj, obj, excluded):
            pvar = Var(c.fresh("n"))
            steps = translate_triple_pattern(c, TriplePattern(subj, pvar, obj))
            test = _T([S.Select((pvar.name,)), S.Is(ValuePredicate("without", excluded))])
            return steps + [S.Where(test)]

        builders = []
        if fwd or not bwd:
            builders.append(lambda c: negated(c, s, o, fwd))
        if bwd:
            builders.append(lambda c: negated(c, o, s, bwd))
        if len(builders) == 1:
            return builders[0](ctx)
        return union_of(ctx, builders)
    return _translate_closure(ctx, pp)


# -- VALUES and BIND --------------------------------------------------------

def translate_values(ctx: CompileContext, vc: ValuesClause) -> list:
    if not vc.rows:
        ctx.dead = True
        return _empty()
    builders = []
    for row in vc.rows:
        def build(c, row=row):
            out = []
            for var, val in zip(vc.vars, row):
                if val is None:
                    continue
                out.append(S.Constant(val))
                out += bind_value(c, var)
            return out or [S.Identity()]
        builders.append(build)
    if len(builders) == 1:
        return builders[0](ctx)
    return union_of(ctx, builders)


def translate_bind(ctx: CompileContext, b: Bind) -> list:
    ctx.set(b.var.name, "M")
    return [S.Math(to_math(b.expr)), S.As((b.var.name,))]


# -- expressions ------------------------------------------------------------

def to_math(e):
    """SPARQL expression to a ``math`` step expression."""
    if isinstance(e, EVar):
        return MName(e.name)
    if isinstance(e, ETerm):
        if not isinstance(e.term, (IRI, Literal)):
            raise UnsupportedFeature("expression term", repr(e.term))
        return MConst(e.term)
    if isinstance(e, EBinary):
        return MBin(e.op, to_math(e.left), to_math(e.right))
    if isinstance(e, EUnary):
        return MUnary(e.op, to_math(e.operand))
    if isinstance(e, EIn):
        return MCall("notin" if e.negated else "in", (to_math(e.operand),) + tuple(to_math(x) for x in e.options))
    if isinstance(e, EFunc):
        fn = _MATH_FUNCS.get(e.name)
        if fn is None:
            raise UnsupportedFeature("function", e.name)
        return MCall(fn, tuple(to_math(a) for a in e.args))
    if isinstance(e, EExists):
        raise UnsupportedFeature("EXISTS inside an expression")
    if isinstance(e, EAggregate):
        raise UnsupportedFeature("aggregate outside SELECT, HAVING or ORDER BY")
    raise UnsupportedFeature("expression", type(e).__name__)


def _simple(e) -> bool:
    return isinstance(e, EVar) or (isinstance(e, ETerm) and isinstance(e.term, (IRI, Literal)))


def _string_const(e) -> Literal | None:
    if isinstance(e, ETerm) and isinstance(e.term, Literal):
        t = e.term
        if t.language is not None or t.datatype.endswith("#string"):
            return t
    return None


def _select_is(name: str, pred: ValuePredicate) -> S.Traversal:
    return _T([S.Select((name,)), S.Is(pred)])


def condition(ctx: CompileContext, e) -> S.Traversal:
    """Sub-traversal that is non-empty exactly when ``e`` holds for the incoming solution."""
    if isinstance(e, EBinary) and e.op in ("&&", "||"):
        parts = (condition(ctx, e.left), condition(ctx, e.right))
        return _T([S.And(parts) if e.op == "&&" else S.Or(parts)])
    if isinstance(e, EUnary) and e.op == "!":
        return _T([S.Not(condition(ctx, e.operand))])
    if isinstance(e, EExists):
        sub = _T(translate_pattern(ctx.fork(), e.pattern))
        return _T([S.Not(sub)]) if e.negated else sub
    if isinstance(e, EBinary) and e.op in _COMPARE and _simple(e.left) and _simple(e.right):
        op = _COMPARE[e.op]
        left, right = e.left, e.right
        if not isinstance(left, EVar):
            if not isinstance(right, EVar):
                return _T([S.Math(to_math(e)), S.Is(ValuePredicate("truthy"))])
            left, right, op = right, left, _FLIP[op]
        operand = _ref(right.name) if isinstance(right, EVar) else right.term
        return _select_is(left.name, ValuePredicate(op, operand))
    if isinstance(e, EIn) and isinstance(e.operand, EVar) and all(
        isinstance(x, ETerm) and isinstance(x.term, (IRI, Literal)) for x in e.options
    ):
        op = "without" if e.negated else "within"
        return _select_is(e.operand.name, ValuePredicate(op, tuple(x.term for x in e.options)))
    if isinstance(e, EFunc):
        args = e.args
        if e.name == "BOUND":
            return _select_is(args[0].name, ValuePredicate("isBound"))
        if e.name in _STRING_TESTS and isinstance(args[0], EVar) and _string_const(args[1]) is not None:
            return _select_is(args[0].name, ValuePredicate(_STRING_TESTS[e.name], _string_const(args[1])))
        if e.name == "REGEX" and isinstance(args[0], EVar) and _string_const(args[1]) is not None and (
            len(args) == 2 or _string_const(args[2]) is not None
        ):
            flags = _string_const(args[2]).lexical if len(args) == 3 else ""
            pred = ValuePredicate("regex", _string_const(args[1]).lexical, flags)
            try:
                pred.compile_regex()
            except InvalidRegex:
                return _T(_empty())
            return _select_is(args[0].name, pred)
        if (e.name == "LANGMATCHES" and isinstance(args[0], EFunc) and args[0].name == "LANG"
                and isinstance(args[0].args[0], EVar) and _string_const(args[1]) is not None):
            return _select_is(args[0].args[0].name, ValuePredicate("langMatches", _string_const(args[1])))
    return _T([S.Math(to_math(e)), S.Is(ValuePredicate("truthy"))])


# -- graph patterns ---------------------------------------------------------

def translate_bgp(ctx: CompileContext, bgp: BGP) -> list:
    out = []
    for el in bgp.elements:
        if isinstance(el, TriplePattern):
            out += translate_triple_pattern(ctx, el)
        elif isinstance(el, PathPattern):
            out += translate_property_path(ctx, el)
        elif isinstance(el, ValuesClause):
            out += translate_values(ctx, el)
        elif isinstance(el, Bind):
            out += translate_bind(ctx, el)
        elif isinstance(el, Alternatives):
            out += translate_alternatives(ctx, el)
        else:
            raise CompileError(f"unexpected BGP element {el!r}")
    return out


def translate_connector_filter_bind(ctx: CompileContext, node) -> list:
    """OPTIONAL, UNION, MINUS, FILTER and joins of sub-patterns."""
    if isinstance(node, Join):
        return translate_pattern(ctx, node.left) + translate_pattern(ctx, node.right)
    if isinstance(node, Union_):
        return union_of(ctx, [
            lambda c: translate_pattern(c, node.left),
            lambda c: translate_pattern(c, node.right),
        ])
    if isinstance(node, Optional_):
        out = translate_pattern(ctx, node.base)
        inner = ctx.fork()
        sub = translate_pattern(inner, node.opt)
        if inner.dead:
            return out
        ctx.merge([ctx.fork(), inner])
        return out + [S.Optional(_T(sub))]
    if isinstance(node, Minus):
        out = translate_pattern(ctx, node.left)
        shared = [v for v in pattern_vars(node.right) if v in set(pattern_vars(node.left))]
        if not shared:
            return out
        right = translate_pattern(ctx.fork(), node.right)
        guard = [v for v in shared if ctx.get(v) not in ("V", "B")]
        if guard:
            checks = tuple(_select_is(v, ValuePredicate("isBound")) for v in guard)
            right = [S.Or(checks)] + right
        return out + [S.Where(_T([S.Not(_T(right))]))]
    if isinstance(node, Filter):
        out = translate_pattern(ctx, node.base)
        return out + [S.Where(condition(ctx, node.expr))]
    raise CompileError(f"unexpected pattern {node!r}")


def translate_pattern(ctx: CompileContext, node) -> list:
    if node is None:
        return []
    if isinstance(node, BGP):
        return translate_bgp(ctx, node)
    return translate_connector_filter_bind(ctx, node)


# -- solution modifiers and result forms ------------------------------------

class _AggregateNames:
    """Replaces aggregate calls by hidden binding names, sharing names between equal calls."""

    def __init__(self, ctx: CompileContext):
        self.ctx = ctx
        self.by_expr: dict = {}

    def __call__(self, e):
        if isinstance(e, EAggregate):
            name = self.by_expr.get(e)
            if name is None:
                name = self.by_expr[e] = self.ctx.fresh("agg")
            return EVar(name)
        if isinstance(e, EBinary):
            return EBinary(e.op, self(e.left), self(e.right))
        if isinstance(e, EUnary):
            return EUnary(e.op, self(e.operand))
        if isinstance(e, EIn):
            return EIn(self(e.operand), tuple(self(x) for x in e.options), e.negated)
        if isinstance(e, EFunc):
            return EFunc(e.name, tuple(self(a) for a in e.args))
        return e


def _is_aggregated(q: SparqlQuery) -> bool:
    from ergstore.sparql.ast import has_aggregate

    exprs = [e for _, e in (q.projection or []) if e is not None] + list(q.having) + [e for e, _ in q.order_by]
    return bool(q.group_by) or any(has_aggregate(e) for e in exprs)


def translate_modifiers(ctx: CompileContext, q: SparqlQuery) -> list:
    """Grouping, HAVING, select expressions, ORDER BY, DISTINCT and LIMIT/OFFSET."""
    out = []
    projection = list(q.projection or [])
    having, order_by = list(q.having), list(q.order_by)
    if _is_aggregated(q):
        names = _AggregateNames(ctx)
        projection = [(v, None if e is None else names(e)) for v, e in projection]
        having = [names(h) for h in having]
        order_by = [(names(e), d) for e, d in order_by]
        keys = tuple(v.name for v in q.group_by)
        aggs = tuple(
            S.Agg(name, e.name.lower(), None if e.arg is None else to_math(e.arg), e.distinct)
            for e, name in names.by_expr.items()
        )
        out.append(S.Group(keys, aggs))
        # variables not grouped on are out of scope after grouping
        hidden_after = [n for n in sorted(ctx.names) if n not in keys]
        if hidden_after:
            out += [S.Constant(UNBOUND), S.As(tuple(hidden_after))]
    for h in having:
        out.append(S.Where(condition(ctx, h)))
    for v, e in projection:
        if e is not None:
            out += [S.Math(to_math(e)), S.As((v.name,))]
    if order_by:
        keys = []
        for e, desc in order_by:
            keys.append(S.OrderKey(e.name if isinstance(e, EVar) else to_math(e), desc))
        out.append(S.Order(tuple(keys)))
    cols = tuple(q.select_vars())
    if (q.distinct or q.reduced) and q.form == "SELECT":
        out.append(S.Dedup(cols))
    lo = q.offset or 0
    if q.limit is not None:
        out.append(S.Range(lo, lo + q.limit))
    elif lo:
        out.append(S.Range(lo, -1))
    return out


def _triple_branch(bindings) -> list:
    out = []
    for term, name in zip(bindings, TRIPLE_NAMES):
        if isinstance(term, Var):
            out += [S.Select((term.name,)), S.As((name,))]
        else:
            out += [S.Constant(term), S.As((name,))]
    return out + [S.Select(TRIPLE_NAMES)]


def _union_or_single(branches: list) -> list:
    if not branches:
        return _empty()
    if len(branches) == 1:
        return list(branches[0].steps)
    return [S.Union(tuple(branches))]


def _describe_branches(ctx: CompileContext, item) -> list:
    branches = []
    c = ctx.fork()
    head = []
    if isinstance(item, Var):
        head = [S.Where(_select_is(item.name, ValuePredicate("isBound")))]
        if c.get(item.name) != "V":
            c.set(item.name, "B")
            src, _ = vertex_source(c, item)
            head += src
    for direction in ("out", "in"):
        d = c.fork()
        p = Var(d.fresh("dp"))
        other = Var(d.fresh("do" if direction == "out" else "ds"))
        if direction == "out":
            tp, triple = TriplePattern(item, p, other), (item, p, other)
        else:
            tp, triple = TriplePattern(other, p, item), (other, p, item)
        steps = head + translate_triple_pattern(d, tp) + _triple_branch(triple)
        branches.append(_T(steps))
    return branches


def translate_result_clause(ctx: CompileContext, q: SparqlQuery) -> list:
    if q.form == "SELECT":
        cols = tuple(q.select_vars())
        return [S.Select(cols)] if cols else []
    if q.form == "ASK":
        return [S.Range(0, 1), S.HasNext()]
    if q.form == "CONSTRUCT":
        in_pattern = set(pattern_vars(q.pattern))
        branches = []
        for tp in q.template:
            for t in (tp.s, tp.p, tp.o):
                if isinstance(t, Var) and t.hidden and t.name not in in_pattern:
                    raise UnsupportedFeature("blank node in CONSTRUCT template")
            branches.append(_T(_triple_branch((tp.s, tp.p, tp.o))))
        return _union_or_single(branches)
    if q.form == "DESCRIBE":
        items = []
        for d in q.describe:
            if d == "*":
                items += [Var(n) for n in pattern_vars(q.pattern) if not n.startswith("#")]
            else:
                items.append(d)
        branches = []
        for item in items:
            branches += _describe_branches(ctx, item)
        return _union_or_single(branches)
    raise UnsupportedFeature("query form", q.form)


# -- entry point ------------------------------------------------------------

def query_variables(q: SparqlQuery) -> list[str]:
    """Every variable mentioned anywhere in ``q``, projected columns first."""
    out: list[str] = list(q.select_vars())
    seen = set(out)

    def walk(x):
        if isinstance(x, (Var, EVar)):
            if x.name not in seen:
                seen.add(x.name)
                out.append(x.name)
        elif isinstance(x, (list, tuple)):
            for y in x:
                walk(y)
        elif hasattr(x, "__dataclass_fields__"):
            for f in x.__dataclass_fields__:
                walk(getattr(x, f))

    walk(q.pattern)
    walk(q.projection or [])
    walk(q.group_by)
    walk(q.having)
    walk(q.order_by)
    walk(q.template)
    walk([d for d in q.describe if d != "*"])
    return out


def _check_names(t: S.Traversal, known: set) -> None:
    bound = set(known)

    def collect(tr):
        for st in tr.steps:
            if isinstance(st, S.As):
                bound.update(st.names)
            elif isinstance(st, S.Group):
                bound.update(st.keys)
                bound.update(a.out for a in st.aggs)
            for sub in st.subs():
                collect(sub)

    def verify(tr):
        for st in tr.steps:
            names = ()
            if isinstance(st, (S.Select, S.Dedup)):
                names = st.names
            elif isinstance(st, (S.Is, S.Has)) and isinstance(st.predicate.value, Ref):
                names = (st.predicate.value.name,)
            for n in names:
                if n not in bound:
                    raise CompileError(f"name {n!r} is read but never bound")
            for sub in st.subs():
                verify(sub)

    collect(t)
    verify(t)


def compile(q: SparqlQuery, meta: MetaCatalog | None) -> S.Traversal:
    """Translate a prefix-expanded (and optionally reordered) query to a traversal.

    The traversal starts by binding every query variable to ``UNBOUND`` and
    ends with the result-form steps; see ``translate_result_clause``.
    """
    names = query_variables(q)
    ctx = CompileContext(meta, set(names))
    body = translate_pattern(ctx, q.pattern)
    tail = translate_modifiers(ctx, q) + translate_result_clause(ctx, q)
    init = names + [n for n in ctx.fresh_names if n not in names and not n.startswith("#agg")]
    head = [S.Inject(1)]
    if init:
        head += [S.Constant(UNBOUND), S.As(tuple(init))]
    t = S.Traversal(head + body + tail)
    _check_names(t, set(init))
    return t
