"""Lazy evaluation of traversals over a ``PropertyGraph``."""

from __future__ import annotations

import random
import time
from itertools import islice
from typing import Iterable, Iterator

from ergstore.graph import IRI_KEY, META_LABEL, Edge, PropertyGraph, PropertyInstance, Vertex, scalar_key
from ergstore.ingest import literal_scalar, node_key, property_term
from ergstore.predicates import UNBOUND, Ref, ValuePredicate, term_identity
from ergstore.rdf import IRI, BNode, Literal, numeric_literal
from ergstore.traversal import steps as S
from ergstore.traversal.mathexpr import aggregate, evaluate_math, order_key


class TraversalError(Exception):
    pass


class TypeMismatch(TraversalError):
    pass


class UnknownName(TraversalError):
    pass


class QueryTimeout(TraversalError):
    pass


class Traverser:
    __slots__ = ("cur", "b")

    def __init__(self, cur, b: dict):
        self.cur = cur
        self.b = b

    def __repr__(self):
        return f"Traverser({self.cur!r}, {self.b!r})"


def identity_of(x):
    """Hashable identity used by dedup, group and repeat's visited set."""
    if isinstance(x, Vertex):
        return ("V", x.id)
    if isinstance(x, Edge):
        return ("E", x.id)
    if isinstance(x, PropertyInstance):
        return ("P", x.id)
    if isinstance(x, tuple):
        return ("T",) + tuple(identity_of(v) for v in x)
    if isinstance(x, dict):
        return ("M",) + tuple((k, identity_of(v)) for k, v in x.items())
    if isinstance(x, (IRI, BNode, Literal)) or x is UNBOUND:
        return term_identity(x)
    return ("X", type(x).__name__, x)


class Context:
    def __init__(self, g: PropertyGraph, seed: int = 0, deadline: float | None = None):
        self.g = g
        self.rng = random.Random(seed)
        self.deadline = deadline
        self._ticks = 0

    def tick(self):
        self._ticks += 1
        if self.deadline is not None and not self._ticks & 1023:
            if time.monotonic() > self.deadline:
                raise QueryTimeout("query exceeded its time limit")


def evaluate(
    g: PropertyGraph,
    t: S.Traversal,
    *,
    seed: int = 0,
    timeout: float | None = None,
    inputs: Iterable[Traverser] | None = None,
) -> Iterator[Traverser]:
    """Lazily run ``t``; ``timeout`` (seconds) bounds wall time from the first pull.

    Without explicit ``inputs`` a traversal starting with ``inject`` begins
    from nothing, and any other traversal from a single empty traverser (so
    ``g.V()`` scans once).
    """
    deadline = None if timeout is None else time.monotonic() + timeout
    ctx = Context(g, seed, deadline)
    if inputs is None:
        starts_with_inject = bool(t.steps) and isinstance(t.steps[0], S.Inject)
        inputs = () if starts_with_inject else (Traverser(UNBOUND, {}),)
    return _run(ctx, t.steps, iter(inputs))


def _run(ctx: Context, steps: tuple, stream: Iterator[Traverser]) -> Iterator[Traverser]:
    i = 0
    n = len(steps)
    while i < n:
        st = steps[i]
        if isinstance(st, S.Emit) and i + 1 < n and isinstance(steps[i + 1], S.Repeat):
            stream = _repeat(ctx, steps[i + 1].sub, "before", stream)
            i += 2
            continue
        if isinstance(st, S.Repeat):
            if i + 1 < n and isinstance(steps[i + 1], S.Emit):
                stream = _repeat(ctx, st.sub, "after", stream)
                i += 2
            else:
                stream = _repeat(ctx, st.sub, None, stream)
                i += 1
            continue
        impl = _IMPL.get(type(st))
        if impl is None:
            raise TraversalError(f"step {st.name}() cannot be evaluated here")
        stream = impl(ctx, st, stream)
        i += 1
    return stream


def _sub(ctx, sub: S.Traversal, t: Traverser) -> Iterator[Traverser]:
    return _run(ctx, sub.steps, iter((t,)))


def _nonempty(ctx, sub, t) -> bool:
    for _ in _sub(ctx, sub, t):
        return True
    return False


def _type_error(step, x):
    return TypeMismatch(f"{step.name}() cannot be applied to {type(x).__name__}")


# -- step implementations -------------------------------------------------

def _inject(ctx, st, stream):
    yield from stream
    yield Traverser(st.value, {})


def _constant(ctx, st, stream):
    for t in stream:
        yield Traverser(st.value, t.b)


def _v(ctx, st, stream):
    g = ctx.g
    for t in stream:
        for v in g.user_vertices():
            ctx.tick()
            yield Traverser(v, t.b)


def _operand(pred: ValuePredicate, b: dict):
    if isinstance(pred.value, Ref):
        return ValuePredicate(pred.op, b.get(pred.value.name, UNBOUND), pred.flags)
    return pred


def _has(ctx, st, stream):
    key, pred = st.key, st.predicate
    fast = key == IRI_KEY and pred.op in ("eq", "same") and isinstance(pred.value, IRI)
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, (Vertex, Edge)):
            raise _type_error(st, x)
        props = x.properties.get(key)
        if not props:
            continue
        if fast:
            target = pred.value.value
            if any(p.value == target for p in props):
                yield t
        elif any(pred.test(property_term(p), t.b) for p in props):
            yield t


def _adjacent_edges(ctx, st, stream, attr):
    edges = ctx.g.edges
    label = st.label
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, Vertex):
            raise _type_error(st, x)
        for eid in getattr(x, attr):
            ctx.tick()
            e = edges[eid]
            if label is None or e.label == label:
                yield Traverser(e, t.b)


def _out_e(ctx, st, stream):
    return _adjacent_edges(ctx, st, stream, "out_edges")


def _in_e(ctx, st, stream):
    return _adjacent_edges(ctx, st, stream, "in_edges")


def _edge_end(ctx, st, stream, attr):
    vertices = ctx.g.vertices
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, Edge):
            raise _type_error(st, x)
        yield Traverser(vertices[getattr(x, attr)], t.b)


def _in_v(ctx, st, stream):
    return _edge_end(ctx, st, stream, "dst")


def _out_v(ctx, st, stream):
    return _edge_end(ctx, st, stream, "src")


def _adjacent(ctx, st, stream, attr, end):
    g = ctx.g
    label = st.label
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, Vertex):
            raise _type_error(st, x)
        for eid in getattr(x, attr):
            ctx.tick()
            e = g.edges[eid]
            if label is None or e.label == label:
                yield Traverser(g.vertices[getattr(e, end)], t.b)


def _out(ctx, st, stream):
    return _adjacent(ctx, st, stream, "out_edges", "dst")


def _in(ctx, st, stream):
    return _adjacent(ctx, st, stream, "in_edges", "src")


def _properties(ctx, st, stream):
    key = st.key
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, (Vertex, Edge)):
            raise _type_error(st, x)
        if key is not None:
            for p in x.properties.get(key, ()):
                yield Traverser(p, t.b)
            continue
        for k, ps in x.properties.items():
            if k == IRI_KEY:
                continue
            for p in ps:
                ctx.tick()
                yield Traverser(p, t.b)


def _key(ctx, st, stream):
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, PropertyInstance):
            raise _type_error(st, x)
        yield Traverser(IRI(x.key), t.b)


def _value(ctx, st, stream):
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, PropertyInstance):
            raise _type_error(st, x)
        yield Traverser(property_term(x), t.b)


def _values(ctx, st, stream):
    key = st.key
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if not isinstance(x, (Vertex, Edge)):
            raise _type_error(st, x)
        for p in x.properties.get(key, ()):
            yield Traverser(property_term(p), t.b)


def _label(ctx, st, stream):
    for t in stream:
        x = t.cur
        if x is UNBOUND:
            continue
        if isinstance(x, Edge):
            yield Traverser(IRI(x.label), t.b)
        elif isinstance(x, Vertex):
            yield Traverser(Literal(x.label), t.b)
        else:
            raise _type_error(st, x)


def _as(ctx, st, stream):
    names = st.names
    for t in stream:
        b = dict(t.b)
        for n in names:
            b[n] = t.cur
        yield Traverser(t.cur, b)


def _select(ctx, st, stream):
    names = st.names
    for t in stream:
        try:
            if len(names) == 1:
                yield Traverser(t.b[names[0]], t.b)
            else:
                yield Traverser({n: t.b[n] for n in names}, t.b)
        except KeyError as e:
            raise UnknownName(f"select of unbound name {e.args[0]!r}") from None


def _where(ctx, st, stream):
    for t in stream:
        if _nonempty(ctx, st.sub, t):
            yield t


def _is(ctx, st, stream):
    pred = st.predicate
    for t in stream:
        if pred.test(t.cur, t.b):
            yield t


def _optional(ctx, st, stream):
    for t in stream:
        any_out = False
        for o in _sub(ctx, st.sub, t):
            any_out = True
            yield o
        if not any_out:
            yield t


def _union(ctx, st, stream):
    for t in stream:
        for sub in st.subs_:
            yield from _sub(ctx, sub, t)


def _and(ctx, st, stream):
    for t in stream:
        if all(_nonempty(ctx, s, t) for s in st.subs_):
            yield t


def _or(ctx, st, stream):
    for t in stream:
        if any(_nonempty(ctx, s, t) for s in st.subs_):
            yield t


def _not(ctx, st, stream):
    for t in stream:
        if not _nonempty(ctx, st.sub, t):
            yield t


def _local(ctx, st, stream):
    for t in stream:
        yield from _sub(ctx, st.sub, t)


def _identity(ctx, st, stream):
    return stream


def _order(ctx, st, stream):
    rows = list(stream)
    for k in reversed(st.keys):
        if isinstance(k.key, str):
            name = k.key
            rows.sort(key=lambda t: order_key(t.cur if name == "_" else t.b.get(name, UNBOUND)), reverse=k.descending)
        else:
            expr = k.key
            keyed = [(order_key(evaluate_math(expr, t.b, t.cur, ctx.rng)), t) for t in rows]
            keyed.sort(key=lambda p: p[0], reverse=k.descending)
            rows = [t for _, t in keyed]
    return iter(rows)


def _range(ctx, st, stream):
    return islice(stream, st.lo, None if st.hi < 0 else max(st.hi, st.lo))


def _dedup(ctx, st, stream):
    seen = set()
    names = st.names
    for t in stream:
        ctx.tick()
        if names:
            k = tuple(identity_of(t.b.get(n, UNBOUND)) for n in names)
        else:
            k = identity_of(t.cur)
        if k not in seen:
            seen.add(k)
            yield t


def _row_identity(b: dict):
    return tuple(sorted(
        (k, identity_of(v)) for k, v in b.items()
        if not k.startswith("#") and (v is UNBOUND or isinstance(v, (IRI, BNode, Literal)))
    ))


def _group(ctx, st, stream):
    groups: dict = {}
    for t in stream:
        ctx.tick()
        k = tuple(identity_of(t.b.get(n, UNBOUND)) for n in st.keys)
        g = groups.get(k)
        if g is None:
            g = groups[k] = ({n: t.b.get(n, UNBOUND) for n in st.keys}, [])
        g[1].append(t.b)
    if not groups and not st.keys:
        groups[()] = ({}, [])
    for keyvals, rows in groups.values():
        b = dict(keyvals)
        for agg in st.aggs:
            if agg.arg is None:
                vals = [_row_identity(r) for r in rows]
                b[agg.out] = aggregate(agg.fn, vals, agg.distinct, star=True)
            else:
                vals = [evaluate_math(agg.arg, r, UNBOUND, ctx.rng) for r in rows]
                b[agg.out] = aggregate(agg.fn, vals, agg.distinct)
        yield Traverser(UNBOUND, b)


def _repeat(ctx, sub, emit, stream):
    for origin in stream:
        visited = set()
        if emit == "before":
            visited.add(identity_of(origin.cur))
            yield origin
        frontier = [origin]
        while frontier:
            nxt = []
            for f in frontier:
                produced = False
                for o in _sub(ctx, sub, f):
                    ctx.tick()
                    produced = True
                    k = identity_of(o.cur)
                    if k in visited:
                        continue
                    visited.add(k)
                    if emit is not None:
                        yield o
                    nxt.append(o)
                if emit is None and not produced:
                    yield f
            frontier = nxt


def _math(ctx, st, stream):
    for t in stream:
        yield Traverser(evaluate_math(st.expr, t.b, t.cur, ctx.rng), t.b)


def _count(ctx, st, stream):
    n = 0
    for _ in stream:
        ctx.tick()
        n += 1
    yield Traverser(numeric_literal(n), {})


def _fold(ctx, st, stream):
    yield Traverser(tuple(t.cur for t in stream), {})


def _unfold(ctx, st, stream):
    for t in stream:
        if isinstance(t.cur, (tuple, list)):
            for x in t.cur:
                yield Traverser(x, t.b)
        else:
            yield t


def _has_next(ctx, st, stream):
    for _ in stream:
        yield Traverser(True, {})
        return
    yield Traverser(False, {})


def index_candidates(g: PropertyGraph, key: str, pred: ValuePredicate) -> list[int]:
    """Vertex ids matching ``key``/``pred``, using the unique IRI index or the value index."""
    op, operand = pred.op, pred.value
    if key == IRI_KEY and op in ("eq", "same") and isinstance(operand, (IRI, BNode)):
        g.stats["index_lookups"] += 1
        vid = g.iri_index.get(node_key(operand))
        if vid is None or g.vertices[vid].label == META_LABEL:
            return []
        return [vid]
    if op in ("eq", "same", "within"):
        g.stats["index_lookups"] += 1
        operands = operand if op == "within" else (operand,)
        cands = set()
        for o in operands:
            if isinstance(o, Literal):
                raw = literal_scalar(o)[0]
            elif isinstance(o, IRI):
                raw = o.value
            elif isinstance(o, BNode):
                raw = node_key(o)
            elif o is UNBOUND:
                continue
            else:
                raw = o
            cands |= g.prop_index.get((key, scalar_key(raw)), set())
        out = []
        for vid in sorted(cands):
            v = g.vertices[vid]
            if v.label == META_LABEL:
                continue
            if any(pred.test(property_term(p)) for p in v.properties.get(key, ())):
                out.append(vid)
        return out
    out = []
    for v in g.user_vertices():
        if any(pred.test(property_term(p)) for p in v.properties.get(key, ())):
            out.append(v.id)
    return out


def _index_lookup(ctx, st, stream):
    g = ctx.g
    for t in stream:
        pred = _operand(st.predicate, t.b)
        for vid in index_candidates(g, st.key, pred):
            ctx.tick()
            yield Traverser(g.vertices[vid], t.b)


def _incident_lookup(ctx, st, stream):
    g = ctx.g
    for t in stream:
        for vid in sorted(g.vertices_by_incident_label(st.label, st.direction)):
            ctx.tick()
            yield Traverser(g.vertices[vid], t.b)


_IMPL = {
    S.Inject: _inject, S.Constant: _constant, S.V: _v, S.Has: _has,
    S.OutE: _out_e, S.InE: _in_e, S.InV: _in_v, S.OutV: _out_v, S.Out: _out, S.In: _in,
    S.Properties: _properties, S.Key: _key, S.Value: _value, S.Values: _values, S.Label: _label,
    S.As: _as, S.Select: _select, S.Where: _where, S.Is: _is, S.Optional: _optional,
    S.Union: _union, S.And: _and, S.Or: _or, S.Not: _not, S.Local: _local, S.Identity: _identity,
    S.Order: _order, S.Range: _range, S.Dedup: _dedup, S.Group: _group, S.Math: _math,
    S.Count: _count, S.Fold: _fold, S.Unfold: _unfold, S.HasNext: _has_next,
    S.IndexLookup: _index_lookup, S.IncidentLookup: _incident_lookup,
}
