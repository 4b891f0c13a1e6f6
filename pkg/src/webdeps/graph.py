"""Language-independent dependency model.

Every analyzer feeds one :class:`DependencyGraph`: a store of typed
entities (packages, classes, methods, pages, config files, ...) plus
typed directed relationships between them.  Identities are derived from
content, not insertion order, so two runs over the same tree produce the
same ids and the same serialized bytes.

The graph is built unsealed, then sealed exactly once.  Sealing enforces
endpoint closure: every relationship must point at a stored entity, and
dangling edges are either dropped or re-pointed at ``UnresolvedTarget``
placeholder entities depending on policy.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from xml.etree import ElementTree as ET


class EntityKind(str, Enum):
    PACKAGE = "Package"
    CLASS_UNIT = "ClassUnit"
    METHOD_UNIT = "MethodUnit"
    FIELD_UNIT = "FieldUnit"
    SERVER_PAGE = "ServerPage"
    CONFIG_FILE = "ConfigFile"
    TAG_DEFINITION = "TagDefinition"
    HTML_PAGE = "HtmlPage"
    # Pseudo-entities that keep the edge store closed.
    UNRESOLVED = "UnresolvedTarget"
    WEB_CONTAINER = "WebContainer"


class RelationshipKind(str, Enum):
    CONTAINS = "Contains"
    CALLS = "Calls"
    INSTANTIATES = "Instantiates"
    EXTENDS = "Extends"
    IMPLEMENTS = "Implements"
    ACCESSES_FIELD = "AccessesField"
    INCLUDES = "Includes"
    FORWARDS_TO = "ForwardsTo"
    LINKS_TO = "LinksTo"
    ERROR_PAGE = "ErrorPage"
    LIFECYCLE_CALLBACK = "LifecycleCallback"
    ATTRIBUTE_SETTER = "AttributeSetter"
    EL_ACCESS = "ElAccess"
    JNDI_LOOKUP = "JndiLookup"


class Analyzer(str, Enum):
    """Which pass produced a piece of evidence."""

    OO = "oo"
    TEMPLATES = "templates"
    CONFIG = "config"
    TAGS = "tags"
    CONTAINER = "container"
    EL = "el"


#: Parent-kind constraints checked at insert time.  A missing key means
#: any parent kind (or none) is acceptable.
_PARENT_KINDS: dict[EntityKind, tuple[EntityKind, ...]] = {
    EntityKind.METHOD_UNIT: (EntityKind.CLASS_UNIT,),
    EntityKind.FIELD_UNIT: (EntityKind.CLASS_UNIT,),
    EntityKind.CLASS_UNIT: (
        EntityKind.PACKAGE,
        EntityKind.SERVER_PAGE,  # synthetic page servlets hang off their page
    ),
    EntityKind.TAG_DEFINITION: (EntityKind.CONFIG_FILE,),
}


class GraphError(Exception):
    """Base class for graph construction errors."""


class SealedGraphError(GraphError):
    pass


class DivergentEntityError(GraphError):
    """Same id re-added with different fields."""


class ParentError(GraphError):
    """Parent id missing from the store or of an incompatible kind."""


@dataclass(frozen=True)
class SourceLocation:
    """Project-relative position: forward slashes, 1-based line/column."""

    path: str
    line: int = 1
    column: int = 1

    def __post_init__(self) -> None:
        if "\\" in self.path or ".." in self.path.split("/"):
            raise ValueError(f"bad location path: {self.path!r}")
        if self.line < 1 or self.column < 1:
            raise ValueError("line and column are 1-based")


NOWHERE = SourceLocation("", 1, 1)


@dataclass(frozen=True)
class Provenance:
    analyzer: Analyzer
    location: SourceLocation
    note: str = ""


def stable_id(kind: EntityKind, key: str, path: str = "") -> str:
    """Content-derived entity id, identical across runs.

    ``key`` is usually the qualified name; method keys append "/arity"
    so overloads get distinct ids while sharing a display name.
    """
    material = f"{kind.value}|{key}|{path}"
    return hashlib.sha256(material.encode("utf-8")).hexdigest()[:16]


def method_key(qualified_name: str, arity: int) -> str:
    return f"{qualified_name}/{arity}"


def unresolved_ref(key: str) -> str:
    """Id for a not-(yet-)resolvable edge endpoint.

    Pair it with ``target_hint=key`` on the relationship so seal() can
    label the placeholder entity if the id never resolves.
    """
    return stable_id(EntityKind.UNRESOLVED, key, "")


@dataclass(frozen=True)
class Entity:
    id: str
    kind: EntityKind
    name: str
    parent: str | None = None
    location: SourceLocation = NOWHERE
    synthetic: bool = False


@dataclass(frozen=True)
class Relationship:
    source: str
    target: str
    kind: RelationshipKind
    evidence: Provenance
    # Human-readable name for the target, used only to label an
    # UnresolvedTarget placeholder if the id never resolves.  Not part
    # of equality and never serialized.
    target_hint: str = field(default="", compare=False)

    def key(self) -> tuple:
        loc = self.evidence.location
        return (self.source, self.target, self.kind.value, loc.path, loc.line, loc.column)


@dataclass
class SealReport:
    unresolved: int = 0
    dropped: list[Relationship] = field(default_factory=list)
    placeholder_ids: list[str] = field(default_factory=list)


class DependencyGraph:
    """Entity and relationship store with content-based dedup.

    Single-writer: analyzers add batches in any order; insertion is
    idempotent so the merge result does not depend on scheduling.
    """

    def __init__(self) -> None:
        self._entities: dict[str, Entity] = {}
        self._relationships: dict[tuple, Relationship] = {}
        self._children: dict[str, list[str]] = {}
        self._sealed = False
        self.meta: dict[str, str] = {"project_root_hash": ""}

    # -- construction -------------------------------------------------

    @property
    def sealed(self) -> bool:
        return self._sealed

    def add_entity(self, entity: Entity, analyzer: Analyzer = Analyzer.OO) -> str:
        if self._sealed:
            raise SealedGraphError("graph is sealed")
        existing = self._entities.get(entity.id)
        if existing is not None:
            if existing != entity:
                raise DivergentEntityError(
                    f"id {entity.id} already stored as {existing.name!r} "
                    f"({existing.kind.value}); refusing divergent re-add of "
                    f"{entity.name!r} ({entity.kind.value})"
                )
            return existing.id
        if entity.parent is not None:
            parent = self._entities.get(entity.parent)
            if parent is None:
                raise ParentError(f"parent of {entity.name!r} not in graph")
            allowed = _PARENT_KINDS.get(entity.kind)
            if allowed is not None and parent.kind not in allowed:
                raise ParentError(
                    f"{entity.kind.value} {entity.name!r} cannot live under "
                    f"{parent.kind.value} {parent.name!r}"
                )
        self._entities[entity.id] = entity
        if entity.parent is not None:
            self._children.setdefault(entity.parent, []).append(entity.id)
            self.add_relationship(
                Relationship(
                    source=entity.parent,
                    target=entity.id,
                    kind=RelationshipKind.CONTAINS,
                    evidence=Provenance(analyzer, entity.location, "containment"),
                )
            )
        return entity.id

    def add_relationship(self, rel: Relationship) -> None:
        if self._sealed:
            raise SealedGraphError("graph is sealed")
        self._relationships.setdefault(rel.key(), rel)

    def seal(self, unresolved_policy: str = "placeholder") -> SealReport:
        if self._sealed:
            raise SealedGraphError("graph already sealed")
        if unresolved_policy not in ("placeholder", "drop"):
            raise ValueError(f"unknown unresolved policy {unresolved_policy!r}")
        report = SealReport()
        for key in list(self._relationships):
            rel = self._relationships[key]
            missing = [eid for eid in (rel.source, rel.target) if eid not in self._entities]
            if not missing:
                continue
            report.unresolved += 1
            if unresolved_policy == "drop":
                del self._relationships[key]
                report.dropped.append(rel)
                continue
            for eid in missing:
                hint = rel.target_hint if eid == rel.target else ""
                placeholder = Entity(
                    id=eid,
                    kind=EntityKind.UNRESOLVED,
                    name=hint or f"unresolved:{eid}",
                    synthetic=True,
                )
                self._entities[eid] = placeholder
                report.placeholder_ids.append(eid)
        self._sealed = True
        return report

    # -- queries ------------------------------------------------------

    @property
    def entities(self) -> tuple[Entity, ...]:
        return tuple(sorted(self._entities.values(), key=lambda e: e.id))

    @property
    def relationships(self) -> tuple[Relationship, ...]:
        return tuple(
            sorted(
                self._relationships.values(),
                key=lambda r: (r.source, r.target, r.kind.value,
                               r.evidence.location.path, r.evidence.location.line,
                               r.evidence.location.column),
            )
        )

    def entity(self, entity_id: str) -> Entity | None:
        return self._entities.get(entity_id)

    def has_entity(self, entity_id: str) -> bool:
        return entity_id in self._entities

    def entities_of_kind(self, kind: EntityKind) -> list[Entity]:
        return [e for e in self.entities if e.kind is kind]

    def lookup(self, kind: EntityKind, name: str) -> Entity | None:
        for entity in self._entities.values():
            if entity.kind is kind and entity.name == name:
                return entity
        return None

    def children_of(self, parent_id: str) -> list[Entity]:
        ids = self._children.get(parent_id, [])
        return sorted((self._entities[i] for i in ids), key=lambda e: e.id)

    def relationships_of_kind(self, kind: RelationshipKind) -> list[Relationship]:
        return [r for r in self.relationships if r.kind is kind]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DependencyGraph):
            return NotImplemented
        return (
            self._entities == other._entities
            and self._relationships == other._relationships
            and self.meta == other.meta
        )

    def __repr__(self) -> str:
        state = "sealed" if self._sealed else "open"
        return (
            f"<DependencyGraph {state}: {len(self._entities)} entities, "
            f"{len(self._relationships)} relationships>"
        )


# -- serialization ----------------------------------------------------

TOOL_VERSION = "0.1.0"

_FORMATS = ("json", "dot", "graphml")


def _entity_to_dict(entity: Entity) -> dict:
    return {
        "id": entity.id,
        "kind": entity.kind.value,
        "name": entity.name,
        "parent": entity.parent,
        "path": entity.location.path,
        "line": entity.location.line,
        "column": entity.location.column,
        "synthetic": entity.synthetic,
    }


def _relationship_to_dict(rel: Relationship) -> dict:
    loc = rel.evidence.location
    return {
        "source": rel.source,
        "target": rel.target,
        "kind": rel.kind.value,
        "analyzer": rel.evidence.analyzer.value,
        "path": loc.path,
        "line": loc.line,
        "column": loc.column,
        "note": rel.evidence.note,
    }


def serialize_graph(graph: DependencyGraph, fmt: str = "json") -> bytes:
    """Render a sealed graph deterministically in one of three formats.

    Json is canonical and round-trips via :func:`deserialize_graph`;
    dot and graphml are export-only.
    """
    if not graph.sealed:
        raise SealedGraphError("serialize requires a sealed graph")
    if fmt not in _FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {_FORMATS}")
    if fmt == "json":
        document = {
            "meta": {
                "tool_version": TOOL_VERSION,
                "project_root_hash": graph.meta.get("project_root_hash", ""),
            },
            "entities": [_entity_to_dict(e) for e in graph.entities],
            "relationships": [_relationship_to_dict(r) for r in graph.relationships],
        }
        return (json.dumps(document, indent=2, ensure_ascii=False) + "\n").encode("utf-8")
    if fmt == "dot":
        return _to_dot(graph)
    return _to_graphml(graph)


def _dot_escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def _to_dot(graph: DependencyGraph) -> bytes:
    # Node identifiers are entity names (what humans grep for); the rare
    # cross-kind name collision gets a numeric suffix instead of merging.
    names: dict[str, str] = {}
    taken: set[str] = set()
    for entity in graph.entities:
        label = entity.name
        bump = 2
        while label in taken:
            label = f"{entity.name}#{bump}"
            bump += 1
        taken.add(label)
        names[entity.id] = label
    lines = ["digraph dependencies {", "  rankdir=LR;", "  node [shape=box];"]
    for entity in graph.entities:
        lines.append(
            f'  "{_dot_escape(names[entity.id])}" '
            f'[kind="{entity.kind.value}"];'
        )
    for rel in graph.relationships:
        if rel.kind is RelationshipKind.CONTAINS:
            continue  # containment is reconstructable and clutters renders
        lines.append(
            f'  "{_dot_escape(names[rel.source])}" -> '
            f'"{_dot_escape(names[rel.target])}" [label="{rel.kind.value}"];'
        )
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _to_graphml(graph: DependencyGraph) -> bytes:
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    for key_id, target, attr in (
        ("d_name", "node", "name"),
        ("d_kind", "node", "kind"),
        ("d_synthetic", "node", "synthetic"),
        ("d_ekind", "edge", "kind"),
        ("d_note", "edge", "note"),
    ):
        ET.SubElement(
            root, "key",
            {"id": key_id, "for": target, "attr.name": attr, "attr.type": "string"},
        )
    g = ET.SubElement(root, "graph", {"id": "G", "edgedefault": "directed"})
    for entity in graph.entities:
        node = ET.SubElement(g, "node", {"id": entity.id})
        for key_id, value in (
            ("d_name", entity.name),
            ("d_kind", entity.kind.value),
            ("d_synthetic", "true" if entity.synthetic else "false"),
        ):
            data = ET.SubElement(node, "data", {"key": key_id})
            data.text = value
    for index, rel in enumerate(graph.relationships):
        edge = ET.SubElement(
            g, "edge",
            {"id": f"e{index}", "source": rel.source, "target": rel.target},
        )
        for key_id, value in (("d_ekind", rel.kind.value), ("d_note", rel.evidence.note)):
            data = ET.SubElement(edge, "data", {"key": key_id})
            data.text = value
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"


def deserialize_graph(data: bytes | str) -> DependencyGraph:
    """Rebuild a sealed graph from its canonical Json bytes."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        document = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ValueError(f"not a graph document: {exc}") from None
    if not isinstance(document, dict) or "entities" not in document:
        raise ValueError("not a graph document: missing entity store")
    graph = DependencyGraph()
    graph.meta["project_root_hash"] = document.get("meta", {}).get("project_root_hash", "")
    # Entities are sorted by id, so a parent may appear after its
    # children; replay the raw stores instead of re-running insertion
    # validation that assumes parents-first order.
    for raw in document["entities"]:
        entity = Entity(
            id=raw["id"],
            kind=EntityKind(raw["kind"]),
            name=raw["name"],
            parent=raw.get("parent"),
            location=SourceLocation(raw["path"], raw["line"], raw["column"]),
            synthetic=raw["synthetic"],
        )
        graph._entities[entity.id] = entity
        if entity.parent is not None:
            graph._children.setdefault(entity.parent, []).append(entity.id)
    for raw in document.get("relationships", []):
        rel = Relationship(
            source=raw["source"],
            target=raw["target"],
            kind=RelationshipKind(raw["kind"]),
            evidence=Provenance(
                Analyzer(raw["analyzer"]),
                SourceLocation(raw["path"], raw["line"], raw["column"]),
                raw.get("note", ""),
            ),
        )
        graph._relationships[rel.key()] = rel
    graph._sealed = True
    return graph


# -- diffing ----------------------------------------------------------


@dataclass(frozen=True)
class StoreDelta:
    only_in_a: tuple
    only_in_b: tuple
    common: int
    size_a: int
    size_b: int

    @property
    def improvement_percent(self) -> int:
        """Relative growth of b over a, as an integer percentage.

        When a is empty and b is not, the growth is total: 100%.
        """
        if self.size_a == 0:
            return 100 if self.size_b else 0
        return round((self.size_b - self.size_a) / self.size_a * 100)


@dataclass(frozen=True)
class GraphDelta:
    entities: StoreDelta
    relationships: StoreDelta

    @property
    def empty(self) -> bool:
        return not (
            self.entities.only_in_a
            or self.entities.only_in_b
            or self.relationships.only_in_a
            or self.relationships.only_in_b
        )


def _store_delta(keys_a: set, keys_b: set) -> StoreDelta:
    return StoreDelta(
        only_in_a=tuple(sorted(keys_a - keys_b)),
        only_in_b=tuple(sorted(keys_b - keys_a)),
        common=len(keys_a & keys_b),
        size_a=len(keys_a),
        size_b=len(keys_b),
    )


def diff_graphs(a: DependencyGraph, b: DependencyGraph) -> GraphDelta:
    """Compare two sealed graphs by stable identity."""
    if not (a.sealed and b.sealed):
        raise SealedGraphError("diff requires sealed graphs")
    entity_ids_a = {e.id for e in a.entities}
    entity_ids_b = {e.id for e in b.entities}
    rel_keys_a = {r.key() for r in a.relationships}
    rel_keys_b = {r.key() for r in b.relationships}
    return GraphDelta(
        entities=_store_delta(entity_ids_a, entity_ids_b),
        relationships=_store_delta(rel_keys_a, rel_keys_b),
    )


__all__ = [
    "Analyzer",
    "DependencyGraph",
    "DivergentEntityError",
    "Entity",
    "EntityKind",
    "GraphDelta",
    "GraphError",
    "NOWHERE",
    "ParentError",
    "Provenance",
    "Relationship",
    "RelationshipKind",
    "SealReport",
    "SealedGraphError",
    "SourceLocation",
    "StoreDelta",
    "TOOL_VERSION",
    "deserialize_graph",
    "diff_graphs",
    "method_key",
    "serialize_graph",
    "stable_id",
    "unresolved_ref",
]
