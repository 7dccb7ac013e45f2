"""Traversal steps and the ``Traversal`` container.

A traversal is a flat sequence of steps; some steps carry nested
sub-traversals.  Steps are immutable value objects so compiled plans can be
compared, printed and re-parsed.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Optional as Opt

from ergstore.predicates import ValuePredicate


class Step:
    name = ""

    def args(self) -> tuple:
        """Positional arguments as printed by ``explain``."""
        out = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.metadata.get("variadic"):
                out.extend(v)
            elif v is not None or not f.metadata.get("optional"):
                out.append(v)
        return tuple(out)

    def subs(self) -> tuple:
        """Nested sub-traversals."""
        return tuple(a for a in self.args() if isinstance(a, Traversal))


def _variadic():
    from dataclasses import field

    return field(default=(), metadata={"variadic": True})


def _optional():
    from dataclasses import field

    return field(default=None, metadata={"optional": True})


STEP_TYPES: dict[str, type] = {}


def step(name: str):
    def deco(cls):
        cls.name = name
        STEP_TYPES[name] = cls
        return dataclass(frozen=True)(cls)
    return deco


@step("inject")
class Inject(Step):
    value: object


@step("constant")
class Constant(Step):
    value: object


@step("V")
class V(Step):
    pass


@step("has")
class Has(Step):
    key: str
    predicate: ValuePredicate


@step("outE")
class OutE(Step):
    label: Opt[str] = _optional()


@step("inE")
class InE(Step):
    label: Opt[str] = _optional()


@step("inV")
class InV(Step):
    pass


@step("outV")
class OutV(Step):
    pass


@step("out")
class Out(Step):
    label: Opt[str] = _optional()


@step("in")
class In(Step):
    label: Opt[str] = _optional()


@step("properties")
class Properties(Step):
    key: Opt[str] = _optional()


@step("key")
class Key(Step):
    pass


@step("value")
class Value(Step):
    pass


@step("values")
class Values(Step):
    key: str


@step("label")
class Label(Step):
    pass


@step("as")
class As(Step):
    names: tuple = _variadic()


@step("select")
class Select(Step):
    names: tuple = _variadic()


@step("where")
class Where(Step):
    sub: "Traversal"


@step("is")
class Is(Step):
    predicate: ValuePredicate


@step("optional")
class Optional(Step):
    sub: "Traversal"


@step("union")
class Union(Step):
    subs_: tuple = _variadic()

    def subs(self):
        return self.subs_


@step("and")
class And(Step):
    subs_: tuple = _variadic()

    def subs(self):
        return self.subs_


@step("or")
class Or(Step):
    subs_: tuple = _variadic()

    def subs(self):
        return self.subs_


@step("not")
class Not(Step):
    sub: "Traversal"


@step("local")
class Local(Step):
    sub: "Traversal"


@step("identity")
class Identity(Step):
    pass


@dataclass(frozen=True)
class OrderKey:
    key: object  # binding name or math expression
    descending: bool = False


@step("order")
class Order(Step):
    keys: tuple = _variadic()


@step("range")
class Range(Step):
    lo: int
    hi: int = -1


@step("dedup")
class Dedup(Step):
    names: tuple = _variadic()


@dataclass(frozen=True)
class Agg:
    out: str
    fn: str
    arg: object = None  # math expression, or None for count(*)
    distinct: bool = False


@step("group")
class Group(Step):
    keys: tuple
    aggs: tuple = _variadic()


@step("repeat")
class Repeat(Step):
    sub: "Traversal"


@step("emit")
class Emit(Step):
    # "before" when written ahead of repeat (zero or more), "after" when behind it
    position: str = "after"

    def args(self):
        return ()


@step("math")
class Math(Step):
    expr: object


@step("count")
class Count(Step):
    pass


@step("fold")
class Fold(Step):
    pass


@step("unfold")
class Unfold(Step):
    pass


@step("hasNext")
class HasNext(Step):
    pass


@step("indexLookup")
class IndexLookup(Step):
    """Vertices whose ``key`` property matches ``predicate``, served from an index."""

    key: str
    predicate: ValuePredicate


@step("incidentLookup")
class IncidentLookup(Step):
    """Vertices with at least one ``direction`` edge labelled ``label``."""

    label: str
    direction: str


class Traversal:
    """Immutable step sequence with a fluent builder interface."""

    __slots__ = ("steps",)

    def __init__(self, steps=()):
        self.steps = tuple(steps)

    def __eq__(self, other):
        return isinstance(other, Traversal) and self.steps == other.steps

    def __hash__(self):
        return hash(self.steps)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def __add__(self, other: "Traversal") -> "Traversal":
        return Traversal(self.steps + tuple(other.steps))

    def __repr__(self):
        from ergstore.traversal.explain import explain

        return f"Traversal({explain(self)})"

    def then(self, *steps: Step) -> "Traversal":
        return Traversal(self.steps + steps)

    # fluent builders -------------------------------------------------
    def inject(self, value=1): return self.then(Inject(value))
    def constant(self, value): return self.then(Constant(value))
    def V(self): return self.then(V())
    def has(self, key, predicate): return self.then(Has(key, predicate))
    def outE(self, label=None): return self.then(OutE(label))
    def inE(self, label=None): return self.then(InE(label))
    def inV(self): return self.then(InV())
    def outV(self): return self.then(OutV())
    def out(self, label=None): return self.then(Out(label))
    def in_(self, label=None): return self.then(In(label))
    def properties(self, key=None): return self.then(Properties(key))
    def key(self): return self.then(Key())
    def value(self): return self.then(Value())
    def values(self, key): return self.then(Values(key))
    def label(self): return self.then(Label())
    def as_(self, *names): return self.then(As(tuple(names)))
    def select(self, *names): return self.then(Select(tuple(names)))
    def where(self, sub): return self.then(Where(sub))
    def is_(self, predicate): return self.then(Is(predicate))
    def optional(self, sub): return self.then(Optional(sub))
    def union(self, *subs): return self.then(Union(tuple(subs)))
    def and_(self, *subs): return self.then(And(tuple(subs)))
    def or_(self, *subs): return self.then(Or(tuple(subs)))
    def not_(self, sub): return self.then(Not(sub))
    def local(self, sub): return self.then(Local(sub))
    def identity(self): return self.then(Identity())
    def order(self, *keys): return self.then(Order(tuple(keys)))
    def range(self, lo, hi=-1): return self.then(Range(lo, hi))
    def limit(self, n): return self.then(Range(0, n))
    def dedup(self, *names): return self.then(Dedup(tuple(names)))
    def group(self, keys, *aggs): return self.then(Group(tuple(keys), tuple(aggs)))
    def repeat(self, sub): return self.then(Repeat(sub))

    def emit(self):
        # position follows from placement relative to repeat
        before = not self.steps or not isinstance(self.steps[-1], Repeat)
        return self.then(Emit("before" if before else "after"))

    def math(self, expr):
        if isinstance(expr, str):
            from ergstore.traversal.mathexpr import parse_math

            expr = parse_math(expr)
        return self.then(Math(expr))

    def count(self): return self.then(Count())
    def fold(self): return self.then(Fold())
    def unfold(self): return self.then(Unfold())
    def hasNext(self): return self.then(HasNext())


# anonymous traversal start, as in ``__.out('p')``
class _Anon:
    def __getattr__(self, name):
        return getattr(Traversal(), name)


__ = _Anon()
