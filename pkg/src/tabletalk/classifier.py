"""Assigns a query graph to the most specific taxonomy class."""

from __future__ import annotations

from dataclasses import dataclass, field

from . import rewriter
from .query_graph import QueryGraph, shape

LABELS = (
    "Path",
    "Subgraph",
    "GraphMultiInstance",
    "GraphCyclic",
    "NestedFlattenable",
    "NestedGeneral",
    "Aggregate",
    "HigherOrder",
)


@dataclass
class QueryClass:
    label: str
    evidence: list[str] = field(default_factory=list)


def classify(qg: QueryGraph) -> QueryClass:
    """Most specific class first; always returns exactly one label.

    Higher-order motifs are checked before the aggregate test because a
    query like `having count(distinct year) = 1` is an ordinary aggregate
    only syntactically: the count stands for an "all the same" reading.
    """
    report = shape(qg)
    motifs = rewriter.detect_motifs(qg)
    higher = [m for m in motifs if m.kind in rewriter.HIGHER_ORDER_KINDS]
    if higher:
        evidence = [f"{m.kind} motif at {m.anchor}" for m in higher]
        evidence.append("meaning rests on a higher-order reading of the aggregate"
                        if any(m.kind == "SameValue" for m in higher)
                        else "meaning rests on a higher-order reading of ALL")
        return QueryClass("HigherOrder", evidence)
    if report.has_aggregate:
        evidence = ["count aggregate or group note present"]
        if report.cyclic:
            evidence.append(
                "join core is cyclic; Aggregate chosen by precedence over GraphCyclic"
            )
        return QueryClass("Aggregate", evidence)
    if report.connectors:
        if set(report.connectors) == {"in"} and not report.correlated:
            return QueryClass(
                "NestedFlattenable",
                ["IN is the only nesting connector and no subquery is correlated"],
            )
        detail = ", ".join(sorted(set(report.connectors)))
        evidence = [f"nesting connectors: {detail}"]
        if report.correlated:
            evidence.append("at least one subquery is correlated")
        return QueryClass("NestedGeneral", evidence)
    if report.cyclic:
        return QueryClass("GraphCyclic", ["join graph contains an undirected cycle"])
    if report.multi_instance:
        dupes = _duplicated_relations(qg)
        return QueryClass(
            "GraphMultiInstance",
            [f"multiple tuple variables over: {', '.join(dupes)}"],
        )
    if report.max_degree <= 2 and _is_simple_path(qg):
        return QueryClass(
            "Path",
            [
                "acyclic, single-instance, at most two joins per relation, "
                "join graph is a simple path"
            ],
        )
    return QueryClass(
        "Subgraph",
        ["acyclic single-instance subgraph of the schema graph"],
    )


def _duplicated_relations(qg: QueryGraph) -> list[str]:
    seen, dupes = set(), []
    for node in qg.nodes:
        if node.relation in seen and node.relation not in dupes:
            dupes.append(node.relation)
        seen.add(node.relation)
    return dupes


def _is_simple_path(qg: QueryGraph) -> bool:
    """Connected, acyclic, and max degree 2 over the local join graph."""
    if not qg.nodes:
        return False
    if len(qg.nodes) == 1:
        return True  # degenerate path of length 0
    adjacency = {n.alias: set() for n in qg.nodes}
    edge_count = 0
    for edge in qg.joins:
        if edge.crosses_nesting:
            continue
        a, b = edge.from_ref[0], edge.to_ref[0]
        if a in adjacency and b in adjacency:
            adjacency[a].add(b)
            adjacency[b].add(a)
            edge_count += 1
    if edge_count != len(qg.nodes) - 1:
        return False
    if any(len(nbrs) > 2 for nbrs in adjacency.values()):
        return False
    start = qg.nodes[0].alias
    seen = {start}
    stack = [start]
    while stack:
        for nxt in adjacency[stack.pop()]:
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return len(seen) == len(qg.nodes)
