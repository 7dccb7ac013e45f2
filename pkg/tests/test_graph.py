import struct

import pytest

from ergstore.engine import Store
from ergstore.graph import (
    FORMAT_VERSION,
    MAGIC,
    BadMagic,
    GraphError,
    PropertyGraph,
    SnapshotIOError,
    UnknownVertex,
    VersionMismatch,
    snapshot_load,
    snapshot_save,
)
from ergstore.ingest import graph_triples
from ergstore.predicates import ValuePredicate
from ergstore.sample import sample_triples


@pytest.fixture
def small():
    g = PropertyGraph()
    a, b = g.add_vertex("v"), g.add_vertex("v")
    g.set_property(a, "iri", "http://a")
    g.set_property(b, "iri", "http://b")
    g.set_property(a, "age", 30, meta={"datatype": "int"})
    e = g.add_edge(a, b, "knows")
    return g, a, b, e


def test_property_set_semantics(small):
    g, a, _, _ = small
    first = g.set_property(a, "name", "x")
    assert g.set_property(a, "name", "x") == first
    # a different datatype meta makes a distinct value
    assert g.set_property(a, "name", "x", meta={"datatype": "other"}) != first
    assert len(g.get_properties(a, "name")) == 2
    assert g.has_property(a, "name", "x")


def test_edges_and_neighbors(small):
    g, a, b, e = small
    assert g.neighbors(a, "out") == [(e, b)]
    assert g.neighbors(b, "in", "knows") == [(e, a)]
    assert g.neighbors(b, "out") == []
    assert g.add_edge(a, b, "knows", dedup=True) == e
    assert g.add_edge(a, b, "knows") != e
    with pytest.raises(UnknownVertex):
        g.add_edge(a, 99, "knows")
    with pytest.raises(ValueError):
        g.neighbors(a, "sideways")


def test_indexes_and_counters(small):
    g, a, b, _ = small
    assert g.vertex_by_iri("http://b") == b
    assert g.vertex_by_iri("http://nope") is None
    assert g.vertices_by_property("age", ValuePredicate("eq", 30)) == {a}
    assert g.vertices_by_incident_label("knows", "in") == {b}
    assert g.stats["full_scans"] == 0
    assert g.vertices_by_property("age", ValuePredicate("gt", 10)) == {a}
    assert g.stats["full_scans"] == 1


def test_duplicate_iri_rejected(small):
    g, a, b, _ = small
    with pytest.raises(GraphError):
        g.set_property(b, "iri", "http://a")


def test_snapshot_round_trip(tmp_path):
    store = Store.from_triples(sample_triples())
    path = tmp_path / "s.ergs"
    snapshot_save(store.graph, path, {"note": "x"})
    g, meta = snapshot_load(path)
    assert meta == {"note": "x"}
    assert g.structure() == store.graph.structure()
    assert graph_triples(g) == graph_triples(store.graph)
    # indexes are rebuilt, and new ids continue after the loaded ones
    assert g.vertex_by_iri("http://sampleRDF.org/pluto") == store.graph.vertex_by_iri("http://sampleRDF.org/pluto")
    assert g.add_vertex("v") == max(store.graph.vertices) + 1


def test_snapshot_errors(tmp_path):
    bad = tmp_path / "bad"
    bad.write_bytes(b"nonsense")
    with pytest.raises(BadMagic):
        snapshot_load(bad)
    old = tmp_path / "old"
    old.write_bytes(MAGIC + struct.pack(">H", FORMAT_VERSION + 1))
    with pytest.raises(VersionMismatch):
        snapshot_load(old)
    with pytest.raises(SnapshotIOError):
        snapshot_load(tmp_path / "missing")

    good = tmp_path / "good"
    snapshot_save(PropertyGraph(), good)
    good.write_bytes(good.read_bytes()[:-1])
    with pytest.raises(SnapshotIOError):
        snapshot_load(good)
