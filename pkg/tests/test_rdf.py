from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ergstore.rdf import (
    IRI,
    RDF_LANGSTRING,
    XSD,
    BNode,
    Literal,
    ParseError,
    Triple,
    is_numeric_literal,
    literal_value,
    numeric_literal,
    parse_ntriples,
    read_ntriples,
    serialize_ntriples,
)

text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=20)
iris = st.text(st.characters(blacklist_categories=("Cs", "Zs", "Cc", "Zl", "Zp")), min_size=1, max_size=15).map(
    lambda s: IRI("http://x.org/" + s)
)
bnodes = st.from_regex(r"[A-Za-z][A-Za-z0-9_]{0,6}", fullmatch=True).map(lambda s: BNode(s, "doc"))
literals = st.one_of(
    text.map(Literal),
    st.tuples(text, st.sampled_from(["en", "en-us", "fr"])).map(lambda t: Literal(t[0], language=t[1])),
    st.tuples(text, st.sampled_from([XSD + "integer", XSD + "decimal", "http://x.org/dt"])).map(
        lambda t: Literal(t[0], t[1])
    ),
)
triples = st.builds(Triple, st.one_of(iris, bnodes), iris, st.one_of(iris, bnodes, literals))


@settings(max_examples=300)
@given(st.lists(triples, max_size=10))
def test_ntriples_round_trip(ts):
    data = serialize_ntriples(ts)
    back = list(read_ntriples(data, scope="doc"))
    assert back == ts


def test_parse_basic_line():
    data = b'<http://a> <http://b> "x\\ty"@EN .\n# comment\n\n_:n1 <http://b> <http://c> .'
    out = list(read_ntriples(data, scope="s"))
    assert out[0].o == Literal("x\ty", language="en")
    assert out[0].o.datatype == RDF_LANGSTRING
    assert out[1].s == BNode("n1", "s")


def test_unicode_escapes():
    (t,) = read_ntriples(r'<http://aA> <http://b> "\U0001F600" .')
    assert t.s == IRI("http://aA")
    assert t.o.lexical == "\U0001F600"


def test_bnode_scopes_keep_documents_apart():
    a = next(read_ntriples("_:x <http://p> <http://o> ."))
    b = next(read_ntriples("_:x <http://p> <http://o> ."))
    assert a.s != b.s


@pytest.mark.parametrize("line,column", [
    ('<http://a> <http://b> "unterminated .', 23),
    ("<http://a> <http://b> .", 23),
    ('"lit" <http://b> <http://c> .', 1),
    ("<http://a> _:b <http://c> .", 12),
    ("<http://a> <http://b> <http://c>", 33),
    ("<http://a> <http://b> <http://c> . junk", 36),
])
def test_errors_are_positioned(line, column):
    with pytest.raises(ParseError) as info:
        list(read_ntriples(line))
    assert info.value.line == 1
    assert info.value.column == column


def test_lenient_mode_reports_and_continues():
    data = b"<http://a> <http://b> <http://c> .\nnot a triple\n\xff\xfe\n<http://d> <http://b> <http://c> ."
    items = list(parse_ntriples(data))
    assert [n for n, x in items if isinstance(x, ParseError)] == [2, 3]
    assert len(list(read_ntriples(data, strict=False))) == 2


def test_literal_values():
    assert literal_value(Literal("042", XSD + "integer")) == 42
    assert literal_value(Literal("1.50", XSD + "decimal")) == Decimal("1.50")
    assert literal_value(Literal("1e1", XSD + "double")) == 10.0
    assert literal_value(Literal("true", XSD + "boolean")) is True
    assert literal_value(Literal("oops", XSD + "integer")) == "oops"
    assert is_numeric_literal(Literal("3", XSD + "int"))
    assert not is_numeric_literal(Literal("x", XSD + "int"))
    assert numeric_literal(Decimal("2")) == Literal("2.0", XSD + "decimal")
    assert numeric_literal(7) == Literal("7", XSD + "integer")


def test_term_validation():
    with pytest.raises(ValueError):
        IRI("has space")
    with pytest.raises(ValueError):
        Literal("x", RDF_LANGSTRING)
    with pytest.raises(TypeError):
        Triple(Literal("x"), IRI("http://p"), IRI("http://o"))
