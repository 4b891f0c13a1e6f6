"""Dependency call-graph extraction for multilanguage JEE-style web projects.

Builds one language-independent graph out of object-oriented server sources,
template pages, and deployment descriptors, including the container-service
and string-literal dependencies that single-language analyzers miss.
"""

from webdeps.graph import (
    TOOL_VERSION as __version__,
)
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Entity,
    EntityKind,
    GraphDelta,
    Provenance,
    Relationship,
    RelationshipKind,
    SourceLocation,
    deserialize_graph,
    diff_graphs,
    serialize_graph,
)

__all__ = [
    "Analyzer",
    "DependencyGraph",
    "Entity",
    "EntityKind",
    "GraphDelta",
    "Provenance",
    "Relationship",
    "RelationshipKind",
    "SourceLocation",
    "deserialize_graph",
    "diff_graphs",
    "serialize_graph",
    "__version__",
]
