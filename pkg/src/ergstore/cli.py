"""Command line: ingest, query, explain, serve, bench.

Exit codes: 0 ok, 2 syntax error, 3 unsupported feature, 4 timeout, 5 I/O.
"""

from __future__ import annotations

import json
import sys
from contextlib import contextmanager
from pathlib import Path

import click

from ergstore.engine import DEFAULT_TIMEOUT, Config, Store
from ergstore.graph import GraphError
from ergstore.rdf import ParseError
from ergstore.results import table_from_json
from ergstore.sparql.ast import SparqlError, SparqlSyntaxError, UnknownPrefix, UnsupportedFeature
from ergstore.traversal.evaluator import QueryTimeout

EXIT_OK, EXIT_SYNTAX, EXIT_UNSUPPORTED, EXIT_TIMEOUT, EXIT_IO = 0, 2, 3, 4, 5
HTTP_EXIT = {400: EXIT_SYNTAX, 422: EXIT_UNSUPPORTED, 504: EXIT_TIMEOUT}


def fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


@contextmanager
def errors_to_exit_codes():
    try:
        yield
    except (SparqlSyntaxError, UnknownPrefix, ParseError) as e:
        fail(EXIT_SYNTAX, str(e))
    except UnsupportedFeature as e:
        fail(EXIT_UNSUPPORTED, str(e))
    except QueryTimeout as e:
        fail(EXIT_TIMEOUT, str(e))
    except SparqlError as e:
        fail(EXIT_SYNTAX, str(e))
    except (OSError, GraphError) as e:
        fail(EXIT_IO, str(e))


def open_store(db: str) -> Store:
    with errors_to_exit_codes():
        return Store.load(db)


def read_query(query: str | None, file: str | None) -> str:
    if (query is None) == (file is None):
        raise click.UsageError("give exactly one of --query or --file")
    if query is not None:
        return query
    with errors_to_exit_codes():
        return Path(file).read_text(encoding="utf-8")


@click.group()
def main():
    """In-memory property-graph store answering SPARQL through compiled traversals."""


@main.command()
@click.argument("files", nargs=-1, type=click.Path())
@click.option("--db", required=True, type=click.Path(), help="Snapshot file to write.")
@click.option("--parallel", "workers", default=1, show_default=True, help="Ingestion workers.")
@click.option("--forward-chaining", is_flag=True, help="Materialize the RDFS/OWL rule closure.")
@click.option("--lenient", is_flag=True, help="Skip malformed lines instead of failing.")
def ingest(files, db, workers, forward_chaining, lenient):
    """Load N-Triples FILES into a snapshot."""
    cfg = Config(db_path=db, parallel_workers=workers, forward_chaining=forward_chaining, strict_parse=not lenient)
    store = Store()
    with errors_to_exit_codes():
        report = store.ingest_files(files, workers=cfg.parallel_workers,
                                    forward_chaining=cfg.forward_chaining, strict=cfg.strict_parse)
        store.save(cfg.db_path)
    for err in report.errors:
        click.echo(f"skipped: {err}", err=True)
    d = report.as_dict()
    click.echo(" ".join(f"{k}={d[k]:.3f}" if k == "seconds" else f"{k}={d[k]}" for k in d))


@main.command()
@click.option("--db", type=click.Path(), help="Snapshot to query locally.")
@click.option("--endpoint", help="Send the query to a running server instead.")
@click.option("--query", "query_text", help="Query text.")
@click.option("--file", "query_file", type=click.Path(), help="File holding the query.")
@click.option("--format", "fmt", type=click.Choice(["tsv", "json"]), default="tsv", show_default=True)
@click.option("--timeout", default=DEFAULT_TIMEOUT, show_default=True, type=float, help="Seconds.")
def query(db, endpoint, query_text, query_file, fmt, timeout):
    """Answer a SPARQL query."""
    text = read_query(query_text, query_file)
    if endpoint:
        click.echo(remote_query(endpoint, text, fmt, timeout), nl=False)
        return
    if not db:
        raise click.UsageError("give --db or --endpoint")
    if timeout <= 0:
        raise click.BadParameter("must be positive", param_hint="--timeout")
    store = open_store(db)
    with errors_to_exit_codes():
        table = store.query(text, timeout=timeout)
    click.echo(table.render(fmt), nl=False)


def remote_query(endpoint: str, text: str, fmt: str, timeout: float) -> str:
    import httpx

    url = endpoint.rstrip("/")
    if not url.endswith("/sparql"):
        url += "/sparql"
    try:
        r = httpx.post(url, json={"query": text, "timeout": timeout}, timeout=timeout + 30)
    except httpx.HTTPError as e:
        fail(EXIT_IO, f"cannot reach {url}: {e}")
    if r.status_code != 200:
        try:
            detail = r.json()["detail"]["error"]
        except (ValueError, KeyError, TypeError):
            detail = r.text
        fail(HTTP_EXIT.get(r.status_code, EXIT_IO), detail)
    if r.headers.get("content-type", "").startswith("application/n-triples"):
        return r.text
    doc = r.json()
    if fmt == "json":
        return json.dumps(doc, ensure_ascii=False, sort_keys=True) + "\n"
    return table_from_json(doc).to_tsv()


@main.command()
@click.option("--db", type=click.Path(), help="Snapshot whose predicate catalog guides compilation.")
@click.option("--query", "query_text", help="Query text.")
@click.option("--file", "query_file", type=click.Path(), help="File holding the query.")
@click.option("--no-optimize", is_flag=True, help="Show the plan before index fusion.")
def explain(db, query_text, query_file, no_optimize):
    """Print the compiled traversal without running it."""
    text = read_query(query_text, query_file)
    store = open_store(db) if db else Store()
    with errors_to_exit_codes():
        click.echo(store.explain(text, use_optimizer=not no_optimize))


@main.command()
@click.option("--db", required=True, type=click.Path())
@click.option("--bind", "bind", default="127.0.0.1:8000", show_default=True, help="host:port")
@click.option("--timeout", default=DEFAULT_TIMEOUT, show_default=True, type=float)
def serve(db, bind, timeout):
    """Serve read-only SPARQL over HTTP."""
    import uvicorn

    from ergstore.service.app import create_app

    cfg = Config(db_path=db, http_bind=bind, query_timeout=timeout)
    host, _, port = cfg.http_bind.rpartition(":")
    store = open_store(db)
    uvicorn.run(create_app(store, cfg.query_timeout), host=host or "127.0.0.1", port=int(port))


@main.command()
@click.option("--db", required=True, type=click.Path())
@click.option("--queries", "queries_dir", required=True, type=click.Path(file_okay=False))
@click.option("--out", type=click.Path(), help="CSV report path.")
@click.option("--timeout", default=DEFAULT_TIMEOUT, show_default=True, type=float)
@click.option("--runs", default=5, show_default=True, help="Warm runs averaged per query.")
def bench(db, queries_dir, out, timeout, runs):
    """Time every .rq file in a directory (cold run, then mean of warm runs)."""
    from ergstore.bench import load_queries, run_bench, to_csv, to_table

    store = open_store(db)
    with errors_to_exit_codes():
        rows = run_bench(store, load_queries(queries_dir), timeout=timeout, runs=runs)
        if out:
            Path(out).write_text(to_csv(rows), encoding="utf-8")
    click.echo(to_table(rows), nl=False)


if __name__ == "__main__":
    main()
