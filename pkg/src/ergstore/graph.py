"""In-memory property graph with IRI, property-value and incident-label indexes.

Vertices, edges and property instances live in id-addressed dicts (insertion
ordered, ids monotone), so every iteration order is deterministic.  Snapshot
files are written with :func:`snapshot_save` and read with
:func:`snapshot_load`; the byte layout is described in the README.
"""

from __future__ import annotations

import itertools
import json
import struct
import threading
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterator

from ergstore.predicates import ValuePredicate

IRI_KEY = "iri"
KIND_KEY = "kind"  # meta-property on the iri property marking skolemized blank nodes
META_LABEL = "ergs:meta"
RESERVED_KEYS = frozenset({IRI_KEY})
# meta keys that distinguish otherwise equal values (other meta, e.g. provenance, does not)
IDENTITY_META = frozenset({"datatype", "language", "lexical", KIND_KEY})

MAGIC = b"ERGS1"
FORMAT_VERSION = 1


class GraphError(Exception):
    pass


class UnknownVertex(GraphError, KeyError):
    pass


class UnknownElement(GraphError, KeyError):
    pass


class UnknownProperty(GraphError, KeyError):
    pass


class BadMagic(GraphError):
    pass


class VersionMismatch(GraphError):
    pass


class SnapshotIOError(GraphError, OSError):
    pass


def scalar_key(value):
    """Hash key that keeps bool/str/number apart while numerically equal numbers collide."""
    if isinstance(value, bool):
        return ("b", value)
    if isinstance(value, (int, Decimal, float)):
        return ("n", value)
    return ("s", value)


def _identity(is_edge, elem, key, value, meta):
    return (
        is_edge, elem, key, scalar_key(value), type(value).__name__,
        tuple(sorted((k, v) for k, v in meta.items() if k in IDENTITY_META)),
    )


def _check_scalar(value):
    if not isinstance(value, (str, int, float, Decimal, bool)):
        raise TypeError(f"property values must be scalars, got {type(value).__name__}")


@dataclass(eq=False)
class PropertyInstance:
    id: int
    owner: int
    owner_is_edge: bool
    key: str
    value: object
    meta: dict = field(default_factory=dict)

    def __repr__(self):
        return f"p[{self.id}]{self.key}={self.value!r}"


@dataclass(eq=False)
class Vertex:
    id: int
    label: str
    properties: dict = field(default_factory=dict)  # key -> list[PropertyInstance]
    out_edges: list = field(default_factory=list)
    in_edges: list = field(default_factory=list)

    def __repr__(self):
        return f"v[{self.id}]"


@dataclass(eq=False)
class Edge:
    id: int
    src: int
    dst: int
    label: str
    properties: dict = field(default_factory=dict)

    def __repr__(self):
        return f"e[{self.id}][{self.src}-{self.label}->{self.dst}]"


class IdAllocator:
    """Thread-safe monotone id source."""

    def __init__(self, start: int = 0):
        self._it = itertools.count(start)
        self._lock = threading.Lock()

    def next(self) -> int:
        with self._lock:
            return next(self._it)

    def peek_reset(self, start: int):
        with self._lock:
            self._it = itertools.count(start)


class PropertyGraph:
    def __init__(self):
        self.vertices: dict[int, Vertex] = {}
        self.edges: dict[int, Edge] = {}
        self.properties: dict[int, PropertyInstance] = {}
        self.iri_index: dict[str, int] = {}
        self.prop_index: dict[tuple, set[int]] = defaultdict(set)
        self.incident_label_index: dict[tuple[str, str], set[int]] = defaultdict(set)
        # (element_is_edge, element_id, key, identity) -> property id, for set semantics
        self._prop_identity: dict[tuple, int] = {}
        self._edge_identity: dict[tuple[int, int, str], int] = {}
        self._vertex_ids = IdAllocator()
        self._edge_ids = IdAllocator()
        self._prop_ids = IdAllocator()
        self._lock = threading.RLock()
        self.stats = {"full_scans": 0, "index_lookups": 0}

    # -- mutation ---------------------------------------------------------

    def add_vertex(self, label: str) -> int:
        if not label:
            raise ValueError("vertex label must be non-empty")
        vid = self._vertex_ids.next()
        with self._lock:
            self.vertices[vid] = Vertex(vid, label)
        return vid

    def add_edge(self, src: int, dst: int, label: str, dedup: bool = False) -> int:
        """Add a directed edge.  With ``dedup`` an existing (src, dst, label) edge is returned instead."""
        if not label:
            raise ValueError("edge label must be non-empty")
        with self._lock:
            if src not in self.vertices:
                raise UnknownVertex(src)
            if dst not in self.vertices:
                raise UnknownVertex(dst)
            if dedup:
                existing = self._edge_identity.get((src, dst, label))
                if existing is not None:
                    return existing
            eid = self._edge_ids.next()
            edge = Edge(eid, src, dst, label)
            self.edges[eid] = edge
            self._edge_identity.setdefault((src, dst, label), eid)
            self.vertices[src].out_edges.append(eid)
            self.vertices[dst].in_edges.append(eid)
            self.incident_label_index[(label, "out")].add(src)
            self.incident_label_index[(label, "in")].add(dst)
        return eid

    def has_edge(self, src: int, dst: int, label: str) -> bool:
        return (src, dst, label) in self._edge_identity

    def _element(self, elem: int, is_edge: bool):
        table = self.edges if is_edge else self.vertices
        try:
            return table[elem]
        except KeyError:
            raise UnknownElement(elem) from None

    def set_property(self, elem: int, key: str, value, *, edge: bool = False, meta: dict | None = None) -> int:
        """Attach ``key=value`` to a vertex (or edge with ``edge=True``).

        Set semantics: an instance with the same key, value and initial
        meta-properties is reused and its id returned.
        """
        if not key:
            raise ValueError("property key must be non-empty")
        _check_scalar(value)
        meta = dict(meta or {})
        for v in meta.values():
            _check_scalar(v)
        identity = _identity(edge, elem, key, value, meta)
        with self._lock:
            element = self._element(elem, edge)
            found = self._prop_identity.get(identity)
            if found is not None:
                return found
            pid = self._prop_ids.next()
            prop = PropertyInstance(pid, elem, edge, key, value, meta)
            self.properties[pid] = prop
            self._prop_identity[identity] = pid
            element.properties.setdefault(key, []).append(prop)
            if not edge:
                if key == IRI_KEY:
                    if value in self.iri_index and self.iri_index[value] != elem:
                        raise GraphError(f"duplicate iri {value!r}")
                    self.iri_index[value] = elem
                self.prop_index[(key, scalar_key(value))].add(elem)
        return pid

    def has_property(self, elem: int, key: str, value, *, edge: bool = False, meta: dict | None = None) -> bool:
        return _identity(edge, elem, key, value, meta or {}) in self._prop_identity

    def set_meta_property(self, prop: int, key: str, value) -> None:
        _check_scalar(value)
        try:
            self.properties[prop].meta[key] = value
        except KeyError:
            raise UnknownProperty(prop) from None

    # -- reads ------------------------------------------------------------

    def is_meta(self, vid: int) -> bool:
        return self.vertices[vid].label == META_LABEL

    def get_properties(self, elem: int, key: str | None = None, *, edge: bool = False) -> list[PropertyInstance]:
        element = self._element(elem, edge)
        if key is not None:
            return list(element.properties.get(key, ()))
        return [p for ps in element.properties.values() for p in ps]

    def iri_of(self, vid: int) -> str | None:
        props = self.vertices[vid].properties.get(IRI_KEY)
        return props[0].value if props else None

    def vertex_by_iri(self, iri: str) -> int | None:
        vid = self.iri_index.get(iri)
        if vid is None or self.vertices[vid].label == META_LABEL:
            return None
        self.stats["index_lookups"] += 1
        return vid

    def user_vertices(self) -> Iterator[Vertex]:
        self.stats["full_scans"] += 1
        return (v for v in self.vertices.values() if v.label != META_LABEL)

    def vertices_by_property(self, key: str, match: ValuePredicate) -> set[int]:
        if match.op == "eq" and not match.is_ref():
            self.stats["index_lookups"] += 1
            cands = self.prop_index.get((key, scalar_key(match.raw_operand())), set())
            return {v for v in cands if not self.is_meta(v) and any(match.test_scalar(p.value) for p in self.vertices[v].properties.get(key, ()))}
        if match.op == "within" and not match.is_ref():
            out = set()
            for x in match.value:
                out |= self.vertices_by_property(key, ValuePredicate("eq", x))
            return out
        match.compile_regex()
        hits = set()
        for v in self.user_vertices():
            if any(match.test_scalar(p.value) for p in v.properties.get(key, ())):
                hits.add(v.id)
        return hits

    def vertices_by_incident_label(self, label: str, direction: str) -> set[int]:
        if direction not in ("in", "out"):
            raise ValueError(f"direction must be 'in' or 'out', not {direction!r}")
        self.stats["index_lookups"] += 1
        return {v for v in self.incident_label_index.get((label, direction), ()) if not self.is_meta(v)}

    def neighbors(self, v: int, direction: str, label: str | None = None) -> list[tuple[int, int]]:
        try:
            vertex = self.vertices[v]
        except KeyError:
            raise UnknownVertex(v) from None
        if direction == "out":
            eids, end = vertex.out_edges, "dst"
        elif direction == "in":
            eids, end = vertex.in_edges, "src"
        else:
            raise ValueError(f"direction must be 'in' or 'out', not {direction!r}")
        out = []
        for eid in sorted(eids):
            e = self.edges[eid]
            if label is None or e.label == label:
                out.append((eid, getattr(e, end)))
        return out

    def counts(self) -> dict:
        user = sum(1 for v in self.vertices.values() if v.label != META_LABEL)
        return {
            "vertices": user,
            "meta_vertices": len(self.vertices) - user,
            "edges": len(self.edges),
            "properties": len(self.properties),
        }

    # -- index maintenance ------------------------------------------------

    def rebuild_indexes(self) -> None:
        self.iri_index.clear()
        self.prop_index.clear()
        self.incident_label_index.clear()
        self._prop_identity.clear()
        self._edge_identity.clear()
        for v in self.vertices.values():
            v.out_edges.clear()
            v.in_edges.clear()
            v.properties.clear()
        for e in self.edges.values():
            e.properties.clear()
        for e in sorted(self.edges.values(), key=lambda e: e.id):
            self.vertices[e.src].out_edges.append(e.id)
            self.vertices[e.dst].in_edges.append(e.id)
            self.incident_label_index[(e.label, "out")].add(e.src)
            self.incident_label_index[(e.label, "in")].add(e.dst)
            self._edge_identity.setdefault((e.src, e.dst, e.label), e.id)
        for p in sorted(self.properties.values(), key=lambda p: p.id):
            element = self.edges[p.owner] if p.owner_is_edge else self.vertices[p.owner]
            element.properties.setdefault(p.key, []).append(p)
            self._prop_identity.setdefault(_identity(p.owner_is_edge, p.owner, p.key, p.value, p.meta), p.id)
            if not p.owner_is_edge:
                if p.key == IRI_KEY:
                    self.iri_index[p.value] = p.owner
                self.prop_index[(p.key, scalar_key(p.value))].add(p.owner)
        self._vertex_ids.peek_reset(max(self.vertices, default=-1) + 1)
        self._edge_ids.peek_reset(max(self.edges, default=-1) + 1)
        self._prop_ids.peek_reset(max(self.properties, default=-1) + 1)

    def sort_adjacency(self) -> None:
        """Put vertices, edges and adjacency lists in id order (parallel loads allocate ids out of order)."""
        self.vertices = dict(sorted(self.vertices.items()))
        self.edges = dict(sorted(self.edges.items()))
        for v in self.vertices.values():
            v.out_edges.sort()
            v.in_edges.sort()

    def structure(self):
        """Canonical, id-free-of-order description used for equality checks."""
        vs = sorted((v.id, v.label) for v in self.vertices.values())
        es = sorted((e.id, e.src, e.dst, e.label) for e in self.edges.values())
        ps = sorted(
            (p.id, p.owner, p.owner_is_edge, p.key, scalar_key(p.value), type(p.value).__name__, tuple(sorted((k, scalar_key(x)) for k, x in p.meta.items())))
            for p in self.properties.values()
        )
        return vs, es, ps


# -- snapshot ------------------------------------------------------------

def _encode_scalar(v):
    if isinstance(v, bool):
        return ["b", v]
    if isinstance(v, int):
        return ["i", str(v)]
    if isinstance(v, Decimal):
        return ["d", str(v)]
    if isinstance(v, float):
        return ["f", repr(v)]
    return ["s", v]


def _decode_scalar(x):
    tag, v = x
    if tag == "b":
        return bool(v)
    if tag == "i":
        return int(v)
    if tag == "d":
        return Decimal(v)
    if tag == "f":
        return float(v)
    if tag == "s":
        return v
    raise ValueError(f"bad scalar tag {tag!r}")


def _section(name: bytes, payload) -> bytes:
    body = json.dumps(payload, separators=(",", ":"), ensure_ascii=False).encode("utf-8")
    return struct.pack(">4sQ", name, len(body)) + body


def snapshot_save(graph: PropertyGraph, path, metadata: dict | None = None) -> None:
    vertices = [[v.id, v.label] for v in graph.vertices.values()]
    edges = [[e.id, e.src, e.dst, e.label] for e in graph.edges.values()]
    props = [
        [p.id, p.owner, int(p.owner_is_edge), p.key, _encode_scalar(p.value), {k: _encode_scalar(x) for k, x in p.meta.items()}]
        for p in graph.properties.values()
    ]
    data = (
        MAGIC
        + struct.pack(">H", FORMAT_VERSION)
        + _section(b"VERT", vertices)
        + _section(b"EDGE", edges)
        + _section(b"PROP", props)
        + _section(b"META", metadata or {})
    )
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(data)
        tmp.replace(path)
    except OSError as e:
        raise SnapshotIOError(str(e)) from e


def snapshot_load(path) -> tuple[PropertyGraph, dict]:
    """Load a snapshot; returns the graph and the free-form metadata section."""
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise SnapshotIOError(str(e)) from e
    if len(data) < len(MAGIC) + 2 or not data.startswith(MAGIC):
        raise BadMagic(f"{path}: not an ERGS1 snapshot")
    (version,) = struct.unpack_from(">H", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"snapshot version {version}, expected {FORMAT_VERSION}")
    pos = len(MAGIC) + 2
    sections = {}
    for expected in (b"VERT", b"EDGE", b"PROP", b"META"):
        if pos + 12 > len(data):
            raise SnapshotIOError(f"{path}: truncated before section {expected.decode()}")
        name, length = struct.unpack_from(">4sQ", data, pos)
        pos += 12
        if name != expected:
            raise BadMagic(f"{path}: expected section {expected.decode()}, found {name!r}")
        if pos + length > len(data):
            raise SnapshotIOError(f"{path}: truncated section {expected.decode()}")
        try:
            sections[expected] = json.loads(data[pos : pos + length].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise SnapshotIOError(f"{path}: corrupt section {expected.decode()}: {e}") from e
        pos += length
    if pos != len(data):
        raise SnapshotIOError(f"{path}: trailing bytes after last section")

    g = PropertyGraph()
    try:
        for vid, label in sections[b"VERT"]:
            g.vertices[vid] = Vertex(vid, label)
        for eid, src, dst, label in sections[b"EDGE"]:
            g.edges[eid] = Edge(eid, src, dst, label)
        for pid, owner, is_edge, key, value, meta in sections[b"PROP"]:
            g.properties[pid] = PropertyInstance(
                pid, owner, bool(is_edge), key, _decode_scalar(value), {k: _decode_scalar(x) for k, x in meta.items()}
            )
        g.rebuild_indexes()
    except (KeyError, TypeError, ValueError) as e:
        raise SnapshotIOError(f"{path}: inconsistent snapshot: {e}") from e
    return g, sections[b"META"]
