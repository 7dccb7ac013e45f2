"""Random graphs and query templates for differential testing.

Queries stay inside the well-designed fragment: variables bound inside an
OPTIONAL are not reused by later required patterns, nested groups do not
filter on outer variables, and MINUS only shares variables that both sides
always bind.
"""

from __future__ import annotations

import random

from ergstore.rdf import IRI, OWL, RDF_TYPE, RDFS, XSD, BNode, Literal, Triple

EX = "http://ex.org/"
PREFIX = f"PREFIX ex: <{EX}>\nPREFIX xsd: <{XSD}>\nPREFIX rdf: <http://www.w3.org/1999/02/22-rdf-syntax-ns#>\n"

NODES = [IRI(f"{EX}n{i}") for i in range(10)] + [BNode("b0", "g"), BNode("b1", "g")]
CLASSES = [IRI(f"{EX}C{i}") for i in range(3)]
REF_PREDS = ["p0", "p1", "p2"]
LIT_PREDS = ["q0", "q1"]
MIXED = "m0"

LITERALS = (
    [Literal(str(i), XSD + "integer") for i in range(6)]
    + [
        Literal("2", XSD + "int"),
        Literal("1.5", XSD + "decimal"),
        Literal("2.0", XSD + "decimal"),
        Literal("-3.25", XSD + "decimal"),
        Literal("1.0E1", XSD + "double"),
        Literal("true", XSD + "boolean"),
        Literal("false", XSD + "boolean"),
        Literal("abc"),
        Literal("ab"),
        Literal("b"),
        Literal(""),
        Literal("ab", language="en"),
        Literal("ab", language="en-us"),
        Literal("x", language="fr"),
        Literal("zz", EX + "custom"),
        Literal("oops", XSD + "integer"),
    ]
)
NUMERIC_LITERALS = LITERALS[:11]
STRING_LITERALS = [lit for lit in LITERALS if lit.datatype == XSD + "string" or lit.language]


def random_graph(rng: random.Random, max_triples: int = 200) -> list[Triple]:
    n = rng.randint(15, max_triples)
    out = set()
    while len(out) < n:
        s = rng.choice(NODES)
        r = rng.random()
        if r < 0.45:
            out.add(Triple(s, IRI(EX + rng.choice(REF_PREDS)), rng.choice(NODES)))
        elif r < 0.55:
            out.add(Triple(s, IRI(RDF_TYPE), rng.choice(CLASSES)))
        elif r < 0.85:
            p = rng.choice(LIT_PREDS)
            pool = NUMERIC_LITERALS if p == "q0" and rng.random() < 0.7 else LITERALS
            out.add(Triple(s, IRI(EX + p), rng.choice(pool)))
        else:
            o = rng.choice(NODES) if rng.random() < 0.5 else rng.choice(LITERALS)
            out.add(Triple(s, IRI(EX + MIXED), o))
    return sorted(out, key=lambda t: t.n3())


# -- term rendering ------------------------------------------------------------

def n3(t) -> str:
    if isinstance(t, BNode):
        raise ValueError("blank nodes are not query constants")
    return t.n3()


def node(rng) -> str:
    return n3(rng.choice(NODES[:10]))


def lit(rng, pool=LITERALS) -> str:
    return n3(rng.choice(pool))


def any_pred(rng) -> str:
    return "ex:" + rng.choice(REF_PREDS + LIT_PREDS + [MIXED])


def ref_pred(rng) -> str:
    return "ex:" + rng.choice(REF_PREDS)


# -- filter expressions ----------------------------------------------------------

REGEX_FLAGS = ["", ', "i"']


def comparison(rng, var: str) -> str:
    op = rng.choice(["=", "!=", "<", "<=", ">", ">="])
    return f"{var} {op} {lit(rng)}"


def expression(rng, vars_: list[str], depth: int = 0) -> str:
    v = rng.choice(vars_)
    w = rng.choice(vars_)
    choices = [
        lambda: comparison(rng, v),
        lambda: f"{v} {rng.choice(['=', '!=', '<', '>='])} {w}",
        lambda: f"({v} + {lit(rng, NUMERIC_LITERALS)}) > {lit(rng, NUMERIC_LITERALS)}",
        lambda: f"({v} * 2) <= ({w} - 1)",
        lambda: f"({v} / {lit(rng, NUMERIC_LITERALS)}) < 2",
        lambda: f"-{v} < 0",
        lambda: f"BOUND({v})",
        lambda: f"!BOUND({v})",
        lambda: f'REGEX({v}, "{rng.choice(["^a", "b$", "B", "a.c", "[ab]+"])}"{rng.choice(REGEX_FLAGS)})',
        lambda: f'LANGMATCHES(LANG({v}), "{rng.choice(["en", "*", "fr", ""])}")',
        lambda: f'LANG({v}) = "{rng.choice(["", "en", "en-us"])}"',
        lambda: f'{rng.choice(["STRSTARTS", "STRENDS", "CONTAINS"])}({v}, "{rng.choice(["a", "b", "ab", ""])}")',
        lambda: f"{v} IN ({lit(rng)}, {lit(rng)}, {node(rng)})",
        lambda: f"{v} NOT IN ({lit(rng)}, {w})",
        lambda: f"{rng.choice(['ABS', 'CEIL', 'FLOOR', 'ROUND'])}({v}) = {lit(rng, NUMERIC_LITERALS)}",
        lambda: f"{v} = {node(rng)}",
        lambda: f"{v}",
    ]
    if depth < 1 and rng.random() < 0.35:
        op = rng.choice(["&&", "||"])
        return f"({expression(rng, vars_, depth + 1)}) {op} ({expression(rng, vars_, depth + 1)})"
    if depth < 1 and rng.random() < 0.1:
        return f"!({expression(rng, vars_, depth + 1)})"
    return rng.choice(choices)()


# -- query templates -----------------------------------------------------------
# Each returns query text; templates are chosen round-robin by case number.

def t_single_tp(rng):
    s = rng.choice(["?s", node(rng)])
    p = rng.choice(["?p", any_pred(rng), "rdf:type"])
    o = rng.choice(["?o", node(rng), lit(rng), n3(rng.choice(CLASSES))])
    if s != "?s" and p != "?p" and o != "?o":
        s = "?s"
    return f"SELECT * WHERE {{ {s} {p} {o} }}"


def t_chain(rng):
    return f"SELECT ?a ?b ?c WHERE {{ ?a {ref_pred(rng)} ?b . ?b {rng.choice([ref_pred(rng), any_pred(rng)])} ?c }}"


def t_star(rng):
    return f"SELECT * WHERE {{ ?a {any_pred(rng)} ?x . ?a {any_pred(rng)} ?y . ?a rdf:type {n3(rng.choice(CLASSES))} }}"


def t_literal_join(rng):
    return f"SELECT ?a ?b ?x WHERE {{ ?a ex:{rng.choice(LIT_PREDS + [MIXED])} ?x . ?b ex:{rng.choice(LIT_PREDS + [MIXED])} ?x }}"


def t_var_predicate(rng):
    c = node(rng)
    return rng.choice([
        f"SELECT ?p ?o WHERE {{ {c} ?p ?o }}",
        f"SELECT ?s ?p WHERE {{ ?s ?p {c} }}",
        "SELECT ?s ?p ?o WHERE { ?s ?p ?o . ?o ?p ?z }",
        "SELECT ?s ?p ?x WHERE { ?s ?p ?x . ?s ex:q0 ?x }",
        f"SELECT ?p WHERE {{ ?s ?p {lit(rng)} }}",
    ])


def t_optional(rng):
    inner = rng.choice([
        f"?a {any_pred(rng)} ?c",
        f"?a {ref_pred(rng)} ?c . ?c {any_pred(rng)} ?d",
        f"?a {any_pred(rng)} ?c FILTER({expression(rng, ['?c', '?b'])})",
        f"?b {any_pred(rng)} ?c OPTIONAL {{ ?c {any_pred(rng)} ?d }}",
    ])
    return f"SELECT * WHERE {{ ?a {any_pred(rng)} ?b OPTIONAL {{ {inner} }} }}"


def t_optional_filter_outside(rng):
    return (f"SELECT ?a ?b ?c WHERE {{ ?a {ref_pred(rng)} ?b OPTIONAL {{ ?b {any_pred(rng)} ?c }} "
            f"FILTER({expression(rng, ['?a', '?b', '?c'])}) }}")


def t_union(rng):
    left = f"?a {any_pred(rng)} ?b"
    right = rng.choice([
        f"?a {any_pred(rng)} ?b",
        f"?a {any_pred(rng)} ?c",
        f"?c {any_pred(rng)} ?a . ?c rdf:type ?t",
    ])
    extra = rng.choice(["", f" ?a {any_pred(rng)} ?z ."])
    return f"SELECT * WHERE {{{extra} {{ {left} }} UNION {{ {right} }} }}"


def t_filter(rng):
    return f"SELECT ?a ?x ?y WHERE {{ ?a {any_pred(rng)} ?x . ?a {any_pred(rng)} ?y FILTER({expression(rng, ['?x', '?y'])}) }}"


def t_exists(rng):
    neg = rng.choice(["", "NOT "])
    return f"SELECT ?a ?b WHERE {{ ?a {any_pred(rng)} ?b FILTER {neg}EXISTS {{ ?b {any_pred(rng)} ?c }} }}"


def t_minus(rng):
    p1, p2 = any_pred(rng), any_pred(rng)
    right = rng.choice([
        f"?a {p2} ?c",
        f"?a {p2} ?b",
        f"?z {p2} ?w",
        f"?a rdf:type {n3(rng.choice(CLASSES))}",
    ])
    return f"SELECT * WHERE {{ ?a {p1} ?b MINUS {{ {right} }} }}"


def t_bind(rng):
    e = rng.choice(["?x + 1", "?x * ?x", "ABS(?x)", "?x > 2", "LANG(?x)", "?x / 0", "ROUND(?x)"])
    tail = rng.choice(["", f" FILTER(?y {rng.choice(['>', '=', '!='])} {lit(rng, NUMERIC_LITERALS)})"])
    return f"SELECT ?a ?x ?y WHERE {{ ?a {rng.choice(['ex:q0', 'ex:m0', 'ex:q1'])} ?x BIND({e} AS ?y){tail} }}"


def t_values(rng):
    vals = " ".join(f"({node(rng)} {rng.choice([lit(rng), 'UNDEF'])})" for _ in range(rng.randint(1, 4)))
    inline = f"VALUES (?a ?x) {{ {vals} }}"
    body = f"?a {any_pred(rng)} ?x"
    if rng.random() < 0.5:
        return f"SELECT * WHERE {{ {inline} {body} }}"
    return f"SELECT * WHERE {{ {body} }} {inline}"


def t_values_single(rng):
    vals = " ".join(node(rng) for _ in range(rng.randint(0, 3)))
    return f"SELECT ?a ?b WHERE {{ VALUES ?a {{ {vals} }} ?a {any_pred(rng)} ?b }}"


def _path(rng, depth=0) -> str:
    base = rng.choice([ref_pred(rng), ref_pred(rng), "ex:m0", "rdf:type"])
    if depth >= 2:
        return base
    r = rng.random()
    if r < 0.15:
        return f"{_path(rng, depth + 1)}/{_path(rng, depth + 1)}"
    if r < 0.3:
        return f"({_path(rng, depth + 1)}|{_path(rng, depth + 1)})"
    if r < 0.4:
        inner = _path(rng, depth + 1)
        return f"^({inner})" if inner.startswith("^") else f"^{inner}"
    if r < 0.55:
        return f"({_closure_inner(rng)}){rng.choice(['*', '+', '?'])}"
    if r < 0.65:
        items = "|".join(rng.sample([ref_pred(rng), "ex:q0", "^" + ref_pred(rng), "rdf:type"], rng.randint(1, 2)))
        return f"!({items})"
    return base


def _closure_inner(rng) -> str:
    r = rng.random()
    if r < 0.6:
        return ref_pred(rng)
    if r < 0.75:
        return f"{ref_pred(rng)}/{ref_pred(rng)}"
    if r < 0.85:
        return f"{ref_pred(rng)}|^{ref_pred(rng)}"
    if r < 0.93:
        return "ex:m0"
    return f"!({ref_pred(rng)})"


def t_path(rng):
    s = rng.choice(["?s", "?s", node(rng)])
    o = rng.choice(["?o", "?o", node(rng)])
    if s != "?s" and o != "?o":
        o = "?o"
    return f"SELECT * WHERE {{ {s} {_path(rng)} {o} }}"


def t_closure(rng):
    s = rng.choice(["?s", node(rng)])
    o = rng.choice(["?o", node(rng)]) if s == "?s" else "?o"
    op = rng.choice(["*", "+", "?"])
    extra = rng.choice(["", f" ?o {any_pred(rng)} ?v ."])
    return f"SELECT * WHERE {{ {s} ({_closure_inner(rng)}){op} {o} .{extra} }}"


def t_distinct_order(rng):
    cols = rng.sample(["?a", "?b"], rng.randint(1, 2))
    keys = " ".join(rng.choice(["{}", "DESC({})", "ASC({})"]).format(c) for c in rng.sample(cols, len(cols)))
    d = rng.choice(["", "DISTINCT ", "REDUCED "])
    return f"SELECT {d}{' '.join(cols)} WHERE {{ ?a {any_pred(rng)} ?b }} ORDER BY {keys}"


def t_limit(rng):
    cols = rng.sample(["?a", "?b"], rng.randint(1, 2))
    order = ""
    if rng.random() < 0.6:
        order = " ORDER BY " + " ".join(rng.choice(["{}", "DESC({})"]).format(c) for c in cols)
    lim = f" LIMIT {rng.randint(0, 6)}" if rng.random() < 0.8 else ""
    off = f" OFFSET {rng.randint(1, 4)}" if rng.random() < 0.5 or not lim else ""
    d = rng.choice(["", "DISTINCT "])
    return f"SELECT {d}{' '.join(cols)} WHERE {{ ?a {any_pred(rng)} ?b }}{order}{lim}{off}"


def t_aggregate(rng):
    agg = rng.choice(["COUNT(?x)", "COUNT(*)", "COUNT(DISTINCT ?x)", "SUM(?x)", "MIN(?x)", "MAX(?x)",
                      "AVG(?x)", "SAMPLE(?x)", "SUM(DISTINCT ?x)"])
    pred = rng.choice(["ex:q0", "ex:q1", "ex:m0", ref_pred(rng)])
    having = rng.choice(["", f" HAVING ({agg} {rng.choice(['>', '>=', '='])} {lit(rng, NUMERIC_LITERALS)})"])
    if rng.random() < 0.25:
        return f"SELECT ({agg} AS ?g) WHERE {{ ?a {pred} ?x }}"
    return f"SELECT ?a ({agg} AS ?g) WHERE {{ ?a {pred} ?x }} GROUP BY ?a{having}"


def t_group_expression(rng):
    return rng.choice([
        "SELECT ?a (COUNT(?x) + 1 AS ?g) WHERE { ?a ex:q0 ?x } GROUP BY ?a",
        "SELECT ?a (SUM(?x) / COUNT(?x) AS ?g) WHERE { ?a ex:q0 ?x } GROUP BY ?a",
        "SELECT ?t (COUNT(?a) AS ?n) WHERE { ?a rdf:type ?t } GROUP BY ?t ORDER BY DESC(?n) ?t",
        f"SELECT ?a ?b (COUNT(*) AS ?n) WHERE {{ ?a {ref_pred(rng)} ?b OPTIONAL {{ ?b ex:q0 ?x }} }} GROUP BY ?a ?b",
        "SELECT ?x (COUNT(?a) AS ?n) WHERE { ?a ex:q1 ?x } GROUP BY ?x HAVING (COUNT(?a) > 1)",
    ])


def t_select_expression(rng):
    e = rng.choice(["?x + ?x", "?x > 1", "CEIL(?x)", "FLOOR(?x) * 2", "LANG(?x)", "!(?x = 1)", "?x IN (1, 2)"])
    return f"SELECT ?a (({e}) AS ?e) WHERE {{ ?a {rng.choice(['ex:q0', 'ex:q1', 'ex:m0'])} ?x }}"


def t_ask(rng):
    return f"ASK {{ ?a {any_pred(rng)} {rng.choice(['?b', lit(rng), node(rng)])} }}"


def t_construct(rng):
    return (f"CONSTRUCT {{ ?b ex:rev ?a . ?a ex:copy ?x }} WHERE {{ ?a {any_pred(rng)} ?b . "
            f"OPTIONAL {{ ?a ex:q0 ?x }} }}")


def t_describe(rng):
    return rng.choice([
        f"DESCRIBE {node(rng)}",
        f"DESCRIBE ?a WHERE {{ ?a rdf:type {n3(rng.choice(CLASSES))} }}",
        f"DESCRIBE ?x WHERE {{ {node(rng)} {any_pred(rng)} ?x }}",
    ])


def t_nested_group(rng):
    return (f"SELECT * WHERE {{ ?a {ref_pred(rng)} ?b {{ ?b {any_pred(rng)} ?c }} UNION "
            f"{{ ?b {any_pred(rng)} ?d OPTIONAL {{ ?d {any_pred(rng)} ?e }} }} }}")


def t_optional_union(rng):
    return (f"SELECT ?a ?b ?c WHERE {{ ?a {any_pred(rng)} ?b OPTIONAL {{ {{ ?b {ref_pred(rng)} ?c }} "
            f"UNION {{ ?b {any_pred(rng)} ?c }} }} }}")


TEMPLATES = [
    t_single_tp, t_chain, t_star, t_literal_join, t_var_predicate, t_optional, t_optional_filter_outside,
    t_union, t_filter, t_exists, t_minus, t_bind, t_values, t_values_single, t_path, t_closure,
    t_distinct_order, t_limit, t_aggregate, t_group_expression, t_select_expression, t_ask, t_construct,
    t_describe, t_nested_group, t_optional_union,
]


def case(i: int):
    """(triples, query text, template name) for differential case ``i``."""
    rng = random.Random(1000 + i)
    triples = random_graph(rng)
    template = TEMPLATES[i % len(TEMPLATES)]
    return triples, PREFIX + template(rng), template.__name__


# -- schemas for the reasoning checks --------------------------------------------

SCHEMA_CLASSES = [IRI(f"{EX}K{i}") for i in range(5)]
SCHEMA_PROPS = [IRI(f"{EX}r{i}") for i in range(5)]
SCHEMA_LIT_PROPS = [IRI(f"{EX}d{i}") for i in range(2)]


def _axiom(s, rel, o) -> Triple:
    return Triple(s, IRI(rel), o)


def random_hierarchy(rng: random.Random) -> list[Triple]:
    """subClassOf / subPropertyOf axioms forming a DAG (edges point to lower indexes)."""
    out = []
    for seq, rel in ((SCHEMA_CLASSES, RDFS + "subClassOf"), (SCHEMA_PROPS, RDFS + "subPropertyOf")):
        for i in range(1, len(seq)):
            for j in rng.sample(range(i), k=rng.randint(0, min(2, i))):
                out.append(_axiom(seq[i], rel, seq[j]))
    if rng.random() < 0.5:
        out.append(_axiom(SCHEMA_LIT_PROPS[1], RDFS + "subPropertyOf", SCHEMA_LIT_PROPS[0]))
    return out


def random_tbox(rng: random.Random) -> list[Triple]:
    """A hierarchy plus domain, range, inverse, symmetric and transitive axioms; cycles allowed."""
    out = random_hierarchy(rng)
    if rng.random() < 0.2:
        out.append(_axiom(SCHEMA_CLASSES[0], RDFS + "subClassOf", SCHEMA_CLASSES[-1]))
    props = SCHEMA_PROPS + SCHEMA_LIT_PROPS
    for _ in range(rng.randint(0, 3)):
        out.append(_axiom(rng.choice(props), RDFS + "domain", rng.choice(SCHEMA_CLASSES)))
    for _ in range(rng.randint(0, 2)):
        out.append(_axiom(rng.choice(SCHEMA_PROPS), RDFS + "range", rng.choice(SCHEMA_CLASSES)))
    if rng.random() < 0.5:
        a, b = rng.sample(SCHEMA_PROPS, 2)
        out.append(_axiom(a, OWL + "inverseOf", b))
    for kind in ("SymmetricProperty", "TransitiveProperty"):
        if rng.random() < 0.5:
            out.append(_axiom(rng.choice(SCHEMA_PROPS), RDF_TYPE, IRI(OWL + kind)))
    return out


def random_abox(rng: random.Random, n: int) -> list[Triple]:
    out = set()
    while len(out) < n:
        s = rng.choice(NODES)
        r = rng.random()
        if r < 0.5:
            out.add(Triple(s, rng.choice(SCHEMA_PROPS), rng.choice(NODES)))
        elif r < 0.75:
            out.add(Triple(s, IRI(RDF_TYPE), rng.choice(SCHEMA_CLASSES)))
        else:
            out.add(Triple(s, rng.choice(SCHEMA_LIT_PROPS), rng.choice(LITERALS)))
    return sorted(out, key=lambda t: t.n3())


def reasoning_case(i: int, max_triples: int = 100) -> list[Triple]:
    """ABox + TBox with at most ``max_triples`` triples in total."""
    rng = random.Random(5000 + i)
    tbox = random_tbox(rng)
    return tbox + random_abox(rng, rng.randint(5, max_triples - len(tbox)))


def expansion_query(rng: random.Random) -> str:
    """A DISTINCT query over hierarchy terms; the answer is a set, so union duplicates do not count."""
    c = f"<{rng.choice(SCHEMA_CLASSES).value}>"
    p = f"<{rng.choice(SCHEMA_PROPS).value}>"
    d = f"<{rng.choice(SCHEMA_LIT_PROPS).value}>"
    return rng.choice([
        f"SELECT DISTINCT ?x WHERE {{ ?x a {c} }}",
        f"SELECT DISTINCT ?x ?y WHERE {{ ?x {p} ?y }}",
        f"SELECT DISTINCT ?x ?v WHERE {{ ?x {d} ?v }}",
        f"SELECT DISTINCT ?x ?y WHERE {{ ?x a {c} . ?x {p} ?y }}",
        f"SELECT DISTINCT ?x WHERE {{ ?x {p} ?y . ?y a {c} }}",
        f"SELECT DISTINCT ?x ?y WHERE {{ ?x a {c} OPTIONAL {{ ?x {p} ?y }} }}",
        f"SELECT DISTINCT ?x WHERE {{ {{ ?x a {c} }} UNION {{ ?x {d} ?v }} }}",
        f"SELECT DISTINCT ?x WHERE {{ ?x a {c} FILTER NOT EXISTS {{ ?x {p} ?y }} }}",
        f"ASK {{ ?x a {c} . ?x {p} ?y }}",
    ])
