from concurrent.futures import ThreadPoolExecutor

import pytest
from fastapi.testclient import TestClient

from ergstore.engine import Store
from ergstore.results import table_from_json
from ergstore.sample import SAMPLE_QUERY, SP, sample_triples
from ergstore.service.app import create_app


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app(Store.from_triples(sample_triples()), timeout=30))


def test_select_json(client):
    r = client.post("/sparql", json={"query": SAMPLE_QUERY})
    assert r.status_code == 200
    assert r.headers["content-type"].startswith("application/sparql-results+json")
    doc = r.json()
    assert doc["head"]["vars"] == ["P", "F"]
    first, second, _ = doc["results"]["bindings"]
    assert first == {"P": {"type": "uri", "value": SP + "jupiter"}, "F": {"type": "uri", "value": SP + "saturn"}}
    assert "F" not in second
    assert len(table_from_json(doc)) == 3


def test_get_and_raw_body_agree(client):
    a = client.get("/sparql", params={"query": SAMPLE_QUERY}).json()
    b = client.post("/sparql", content=SAMPLE_QUERY, headers={"content-type": "application/sparql-query"}).json()
    assert a == b


def test_ask_and_graph_forms(client):
    r = client.get("/sparql", params={"query": f"ASK {{ <{SP}jupiter> ?p ?o }}"})
    assert r.json()["boolean"] is True
    r = client.get("/sparql", params={"query": f"DESCRIBE <{SP}saturn>"})
    assert r.headers["content-type"].startswith("application/n-triples")
    assert len(r.text.splitlines()) == 3


@pytest.mark.parametrize("query,status,kind", [
    ("SELECT * WHERE { ?s ?p }", 400, "syntax"),
    ("SELECT * WHERE { ?s zz:p ?o }", 400, "syntax"),
    ("SELECT * WHERE { GRAPH ?g { ?s ?p ?o } }", 422, "unsupported"),
])
def test_error_statuses(client, query, status, kind):
    r = client.post("/sparql", json={"query": query})
    assert r.status_code == status
    detail = r.json()["detail"]
    assert detail["kind"] == kind
    if kind == "syntax":
        assert detail["line"] == 1 and detail["column"] >= 1


def test_request_validation(client):
    assert client.post("/sparql", json={"query": "ASK {}", "timeout": -1}).status_code == 400
    assert client.post("/sparql", content=b"x", headers={"content-type": "image/png"}).status_code == 415
    assert client.get("/sparql").status_code == 422


def test_timeout_status():
    triples = sample_triples()
    app = create_app(Store.from_triples(triples), timeout=0.05)
    slow = "SELECT * WHERE { ?a ?b ?c . ?d ?e ?f . ?g ?h ?i . ?j ?k ?l }"
    r = TestClient(app).post("/sparql", json={"query": slow})
    assert r.status_code == 504
    assert r.json()["detail"]["kind"] == "timeout"


def test_concurrent_identical_requests(client):
    def ask(_):
        return client.post("/sparql", json={"query": SAMPLE_QUERY}).json()

    with ThreadPoolExecutor(8) as pool:
        answers = list(pool.map(ask, range(32)))
    assert all(a == answers[0] for a in answers)


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["meta_vertices"] == 7
