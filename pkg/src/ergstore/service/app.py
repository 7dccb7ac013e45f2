"""Read-only SPARQL endpoint over a loaded store.

GET /sparql?query=...            query in the URL
POST /sparql                     body application/sparql-query, or JSON {"query": ...}

SELECT and ASK answer with SPARQL results JSON, CONSTRUCT and DESCRIBE with
N-Triples.  Syntax errors map to 400, unsupported features to 422 and
timeouts to 504.
"""

from __future__ import annotations

from typing import Any

from fastapi import FastAPI, HTTPException, Query, Request
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, Field
from starlette.concurrency import run_in_threadpool

from ergstore.engine import DEFAULT_TIMEOUT, Store
from ergstore.rdf import ParseError
from ergstore.sparql.ast import SparqlError, SparqlSyntaxError, UnknownPrefix, UnsupportedFeature
from ergstore.traversal.evaluator import QueryTimeout

SPARQL_JSON = "application/sparql-results+json"
NTRIPLES = "application/n-triples"


class QueryRequest(BaseModel):
    query: str
    timeout: float | None = Field(default=None, gt=0)


class ErrorBody(BaseModel):
    error: str
    kind: str
    line: int | None = None
    column: int | None = None


class SelectHead(BaseModel):
    vars: list[str] = []


class SelectResults(BaseModel):
    bindings: list[dict[str, dict[str, str]]]


class SparqlJson(BaseModel):
    head: SelectHead
    results: SelectResults | None = None
    boolean: bool | None = None


def _error(status: int, kind: str, exc: Exception) -> HTTPException:
    body = ErrorBody(error=str(exc), kind=kind, line=getattr(exc, "line", None), column=getattr(exc, "column", None))
    return HTTPException(status_code=status, detail=body.model_dump())


def run_query(store: Store, text: str, timeout: float) -> Response:
    try:
        table = store.query(text, timeout=timeout)
    except (SparqlSyntaxError, UnknownPrefix, ParseError) as e:
        raise _error(400, "syntax", e)
    except UnsupportedFeature as e:
        raise _error(422, "unsupported", e)
    except QueryTimeout as e:
        raise _error(504, "timeout", e)
    except SparqlError as e:
        raise _error(400, "query", e)
    if table.triples is not None:
        return Response(table.to_ntriples(), media_type=NTRIPLES)
    body = SparqlJson.model_validate(table.to_json())
    return JSONResponse(body.model_dump(exclude_none=True), media_type=SPARQL_JSON)


def create_app(store: Store, timeout: float = DEFAULT_TIMEOUT) -> FastAPI:
    app = FastAPI(title="ergstore SPARQL endpoint")
    app.state.store = store
    app.state.timeout = timeout

    def limit(requested: float | None) -> float:
        return min(requested, timeout) if requested else timeout

    @app.get("/sparql")
    def sparql_get(query: str = Query(..., min_length=1), timeout_s: float | None = Query(None, alias="timeout", gt=0)):
        return run_query(store, query, limit(timeout_s))

    @app.post("/sparql")
    async def sparql_post(request: Request):
        ctype = request.headers.get("content-type", "").split(";")[0].strip()
        raw = await request.body()
        if ctype == "application/json":
            try:
                req = QueryRequest.model_validate_json(raw)
            except ValueError as e:
                raise HTTPException(status_code=400, detail=ErrorBody(error=str(e), kind="request").model_dump())
            text, requested = req.query, req.timeout
        elif ctype in ("application/sparql-query", "text/plain", ""):
            try:
                text = raw.decode("utf-8")
            except UnicodeDecodeError as e:
                raise _error(400, "syntax", e)
            requested = None
        else:
            raise HTTPException(status_code=415, detail=ErrorBody(error=f"unsupported content type {ctype}", kind="request").model_dump())
        # the handler is async, so run the evaluation off the event loop
        return await run_in_threadpool(run_query, store, text, limit(requested))

    @app.get("/health")
    def health() -> dict[str, Any]:
        return {"status": "ok", **store.graph.counts()}

    return app
