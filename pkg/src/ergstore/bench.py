"""Cold/warm query timing over a directory of ``.rq`` files."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from ergstore.engine import DEFAULT_TIMEOUT, Store
from ergstore.traversal.evaluator import QueryTimeout

TIME_OUT = "Time Out"
WARM_RUNS = 5


@dataclass
class BenchRow:
    query: str
    cold: float | str
    warm: float | str
    output_size: int | str

    def cells(self) -> list[str]:
        def fmt(x):
            return x if isinstance(x, str) else f"{x:.6f}"
        return [self.query, fmt(self.cold), fmt(self.warm), str(self.output_size)]


def load_queries(directory) -> list[tuple[str, str]]:
    return [(p.stem, p.read_text(encoding="utf-8")) for p in sorted(Path(directory).glob("*.rq"))]


def time_query(store: Store, text: str, timeout: float, runs: int = WARM_RUNS,
               timer: Callable[[], float] = time.perf_counter) -> tuple[float | str, float | str, int | str]:
    """(cold seconds, mean warm seconds over ``runs``, result size); a timeout aborts the query."""
    def once():
        t0 = timer()
        table = store.query(text, timeout=timeout)
        return timer() - t0, len(table)

    try:
        cold, size = once()
        warm = [once()[0] for _ in range(runs)]
    except QueryTimeout:
        return TIME_OUT, TIME_OUT, TIME_OUT
    return cold, sum(warm) / len(warm), size


def run_bench(store: Store, queries: list[tuple[str, str]], timeout: float = DEFAULT_TIMEOUT,
              runs: int = WARM_RUNS, timer: Callable[[], float] = time.perf_counter) -> list[BenchRow]:
    rows = []
    for name, text in queries:
        cold, warm, size = time_query(store, text, timeout, runs, timer)
        rows.append(BenchRow(name, cold, warm, size))
    return rows


HEADER = ["query", "cold_s", "warm_s", "output_size"]


def to_csv(rows: list[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    for r in rows:
        w.writerow(r.cells())
    return buf.getvalue()


def to_table(rows: list[BenchRow]) -> str:
    cells = [HEADER] + [r.cells() for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(HEADER))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells) + "\n"
