"""Graph comparison against a hand-written reference edge list.

The reference ("ground truth") format is one edge per line::

    source-name -> target-name [Kind]

with ``[Kind]`` optional (any kind matches), ``#`` comments, and blank
lines ignored.  Matching happens on entity display names, not ids, so a
reference list survives re-analysis.  Containment edges are structural
and excluded from scoring on the graph side.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from webdeps.graph import DependencyGraph, GraphDelta, RelationshipKind


class GroundTruthError(ValueError):
    """A reference line that does not follow the edge format."""


@dataclass(frozen=True)
class TruthEdge:
    source: str
    target: str
    kind: str | None = None  # None matches any relationship kind

    def render(self) -> str:
        suffix = f" [{self.kind}]" if self.kind else ""
        return f"{self.source} -> {self.target}{suffix}"


_TRUTH_LINE = re.compile(
    r"(?P<source>.+?)\s*->\s*(?P<target>.+?)"
    r"(?:\s*\[(?P<kind>[A-Za-z]+)\])?\s*"
)

_KIND_NAMES = {kind.value for kind in RelationshipKind}


def parse_ground_truth(text: str) -> list[TruthEdge]:
    """Read reference edges; raises GroundTruthError with the line number."""
    edges = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        match = _TRUTH_LINE.fullmatch(line)
        if match is None:
            raise GroundTruthError(
                f"line {number}: expected 'source -> target [Kind]', got "
                f"{line!r}"
            )
        kind = match.group("kind")
        if kind is not None and kind not in _KIND_NAMES:
            raise GroundTruthError(
                f"line {number}: unknown relationship kind {kind!r}"
            )
        edges.append(TruthEdge(match.group("source"), match.group("target"),
                               kind))
    return edges


@dataclass(frozen=True)
class EvalReport:
    """Scored comparison of a graph against reference edges."""

    matched: tuple[TruthEdge, ...]
    missing: tuple[TruthEdge, ...]
    extra: tuple[tuple[str, str, str], ...]  # (source, target, kind)

    @property
    def precision(self) -> float | None:
        denominator = len(self.matched) + len(self.extra)
        return len(self.matched) / denominator if denominator else None

    @property
    def recall(self) -> float | None:
        denominator = len(self.matched) + len(self.missing)
        return len(self.matched) / denominator if denominator else None

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "matched": [edge.render() for edge in self.matched],
            "missing": [edge.render() for edge in self.missing],
            "extra": [f"{s} -> {t} [{k}]" for s, t, k in self.extra],
        }


def evaluate_graph(graph: DependencyGraph,
                   truth: list[TruthEdge]) -> EvalReport:
    """Score the graph's name-level edges against the reference list.

    Graph edges collapse to (source name, target name, kind) triples; a
    reference edge without a kind matches any kind for that name pair.
    """
    names = {entity.id: entity.name for entity in graph.entities}
    triples = set()
    for rel in graph.relationships:
        if rel.kind is RelationshipKind.CONTAINS:
            continue
        source = names.get(rel.source, rel.source)
        target = names.get(rel.target, rel.target)
        triples.add((source, target, rel.kind.value))

    wanted = []
    seen = set()
    for edge in truth:
        key = (edge.source, edge.target, edge.kind)
        if key not in seen:
            seen.add(key)
            wanted.append(edge)

    def matches(edge: TruthEdge, triple: tuple[str, str, str]) -> bool:
        return (edge.source == triple[0] and edge.target == triple[1]
                and edge.kind in (None, triple[2]))

    matched, missing = [], []
    for edge in wanted:
        hit = any(matches(edge, triple) for triple in triples)
        (matched if hit else missing).append(edge)
    extra = tuple(sorted(
        triple for triple in triples
        if not any(matches(edge, triple) for edge in wanted)
    ))
    return EvalReport(matched=tuple(matched), missing=tuple(missing),
                      extra=extra)


def _percent_or_na(value: float | None) -> str:
    return "n/a" if value is None else f"{value * 100:.1f}%"


def render_eval(report: EvalReport) -> str:
    """Human-readable score table."""
    lines = [
        f"precision: {_percent_or_na(report.precision)} "
        f"({len(report.matched)}/"
        f"{len(report.matched) + len(report.extra)})",
        f"recall:    {_percent_or_na(report.recall)} "
        f"({len(report.matched)}/"
        f"{len(report.matched) + len(report.missing)})",
    ]
    for label, rows in (("missing", [e.render() for e in report.missing]),
                        ("extra", [f"{s} -> {t} [{k}]"
                                   for s, t, k in report.extra])):
        for row in rows:
            lines.append(f"  {label}: {row}")
    return "\n".join(lines)


def render_delta(delta: GraphDelta) -> str:
    """Human-readable store-by-store comparison of two graphs."""
    lines = []
    for label, store in (("entities", delta.entities),
                         ("relationships", delta.relationships)):
        lines.append(
            f"{label}: {store.size_a} -> {store.size_b} "
            f"(only in a: {len(store.only_in_a)}, "
            f"only in b: {len(store.only_in_b)}, "
            f"improvement: {store.improvement_percent}%)"
        )
    return "\n".join(lines)


def delta_as_dict(delta: GraphDelta) -> dict:
    return {
        "entities": {
            "size_a": delta.entities.size_a,
            "size_b": delta.entities.size_b,
            "only_in_a": len(delta.entities.only_in_a),
            "only_in_b": len(delta.entities.only_in_b),
            "common": delta.entities.common,
            "improvement_percent": delta.entities.improvement_percent,
        },
        "relationships": {
            "size_a": delta.relationships.size_a,
            "size_b": delta.relationships.size_b,
            "only_in_a": len(delta.relationships.only_in_a),
            "only_in_b": len(delta.relationships.only_in_b),
            "common": delta.relationships.common,
            "improvement_percent": delta.relationships.improvement_percent,
        },
    }
