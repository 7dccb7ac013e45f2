"""Semantics-preserving rewrites that replace vertex scans with index lookups."""

from __future__ import annotations

from dataclasses import replace

from ergstore.traversal import steps as S

_INDEXABLE = ("eq", "same", "within")


def _rewrite_sub(st: S.Step) -> S.Step:
    if isinstance(st, (S.Union, S.And, S.Or)):
        return type(st)(tuple(optimize(s) for s in st.subs_))
    if isinstance(st, (S.Where, S.Optional, S.Not, S.Local, S.Repeat)):
        return replace(st, sub=optimize(st.sub))
    return st


def optimize(t: S.Traversal) -> S.Traversal:
    """Fuse ``V().has(k, eq|same|within)`` into ``indexLookup`` and ``V().outE(l)``-style
    prefixes into ``incidentLookup``; recurse into sub-traversals.

    Vertex scans are produced in id order, as are both lookups, so the output
    order is unchanged.
    """
    steps = [_rewrite_sub(s) for s in t.steps]
    out: list[S.Step] = []
    i = 0
    while i < len(steps):
        st = steps[i]
        if isinstance(st, S.V):
            j = i + 1
            labels = []
            while j < len(steps) and isinstance(steps[j], S.As):
                labels.append(steps[j])
                j += 1
            nxt = steps[j] if j < len(steps) else None
            if isinstance(nxt, S.Has) and nxt.predicate.op in _INDEXABLE:
                out.append(S.IndexLookup(nxt.key, nxt.predicate))
                out.extend(labels)
                i = j + 1
                continue
            if isinstance(nxt, (S.OutE, S.Out)) and nxt.label is not None:
                out.append(S.IncidentLookup(nxt.label, "out"))
                out.extend(labels)
                i = j
                continue
            if isinstance(nxt, (S.InE, S.In)) and nxt.label is not None:
                out.append(S.IncidentLookup(nxt.label, "in"))
                out.extend(labels)
                i = j
                continue
        out.append(st)
        i += 1
    return S.Traversal(out)
