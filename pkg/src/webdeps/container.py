"""Hidden dependencies created by the runtime container.

A web container invokes code no user source ever calls: servlet entry
points (``init``/``service``), page service methods, and — whenever a page
uses a custom tag — the handler's attribute setters followed by
``doStartTag``/``doEndTag``.  This module materializes those call edges,
plus name-based bean wiring from ``lookup("java:comp/env/ejb/...")``
literals, so the graph shows the complete control flow and not just the
calls visible in source.
"""

from __future__ import annotations

import posixpath
from dataclasses import dataclass

from webdeps.config import TagSpec, UrlMappingTable
from webdeps.diagnostics import DiagnosticSink
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Entity,
    EntityKind,
    Provenance,
    Relationship,
    RelationshipKind,
    SourceLocation,
    method_key,
    stable_id,
    unresolved_ref,
)
from webdeps.oo.extract import Attribution, LookupSite, OoIndex
from webdeps.oo.nodes import ClassDecl
from webdeps.templates import (
    NodeKind,
    TagAttribute,
    TemplatePage,
    capitalize_property,
    page_entity_id,
)

WEB_CONTAINER_NAME = "WebContainer"

#: Base classes whose subclasses the container treats as servlets.
SERVLET_BASES = ("HttpServlet", "GenericServlet")

#: Types whose presence in an extends/implements clause marks a tag handler.
TAG_HANDLER_BASES = ("Tag", "TagSupport", "BodyTagSupport")

#: Container-invoked servlet entry points, in invocation order.  The first
#: two always exist (synthesized when the class does not declare them); the
#: optional ones produce edges only when declared.
SERVLET_CALLBACKS = ("init", "service")
OPTIONAL_SERVLET_CALLBACKS = ("doGet", "doPost")

#: Tag-handler lifecycle methods invoked around every use, in order
#: (attribute setters come first; release() is pool management and gets
#: no edge).
TAG_CALLBACKS = ("doStartTag", "doEndTag")

JNDI_EJB_PREFIX = "java:comp/env/ejb/"


def _simple(name: str) -> str:
    return name.rsplit(".", 1)[-1]


def is_servlet_class(decl: ClassDecl) -> bool:
    if decl.superclass and _simple(decl.superclass) in SERVLET_BASES:
        return True
    return any(_simple(a.name) == "WebServlet" for a in decl.annotations)


def is_tag_handler(decl: ClassDecl) -> bool:
    named = [decl.superclass, *decl.interfaces]
    return any(_simple(name) in TAG_HANDLER_BASES for name in named if name)


def ensure_web_container(graph: DependencyGraph) -> str:
    """The pseudo-entity standing in for the runtime container."""
    container_id = stable_id(EntityKind.WEB_CONTAINER, WEB_CONTAINER_NAME, "")
    graph.add_entity(
        Entity(
            id=container_id,
            kind=EntityKind.WEB_CONTAINER,
            name=WEB_CONTAINER_NAME,
            parent=None,
            synthetic=True,
        ),
        analyzer=Analyzer.CONTAINER,
    )
    return container_id


@dataclass(frozen=True)
class TagUse:
    """One custom-tag occurrence on a page, bound to its tag spec."""

    page_id: str
    page_path: str
    name: str  # prefixed name as written, e.g. "shop:prevForm"
    spec: TagSpec
    attributes: tuple[TagAttribute, ...]
    line: int
    column: int


def find_tag_uses(pages: list[TemplatePage], table: UrlMappingTable,
                  sink: DiagnosticSink) -> list[TagUse]:
    """Match custom-tag nodes against taglib bindings declared on the page.

    A ``taglib`` directive binds its prefix for the rest of the page; tags
    with unbound prefixes or names missing from the bound descriptor only
    produce diagnostics.  Attribute lists are validated against the spec
    (unknown attribute, missing required attribute), which never suppresses
    the use itself.
    """
    uses: list[TagUse] = []
    for page in pages:
        page_dir = posixpath.dirname(page.path)
        bindings: dict[str, object] = {}
        for node in page.nodes:
            if node.kind is NodeKind.DIRECTIVE and node.name == "taglib":
                uri = node.attr("uri") or ""
                prefix = node.attr("prefix") or ""
                if not prefix:
                    continue
                tld = table.bind_taglib(uri, page_dir) if uri else None
                if tld is None:
                    sink.warn(
                        f"taglib uri {uri!r} matches no tag library "
                        f"descriptor",
                        page.path, node.line,
                    )
                    continue
                bindings[prefix] = tld
            elif node.kind is NodeKind.CUSTOM_TAG and not node.closing:
                prefix, _, tag_name = node.name.partition(":")
                tld = bindings.get(prefix)
                if tld is None:
                    sink.warn(f"tag prefix {prefix!r} is not bound by any "
                              f"taglib directive", page.path, node.line)
                    continue
                spec = next(
                    (s for s in tld.specs if s.name == tag_name), None
                )
                if spec is None:
                    sink.warn(
                        f"tag {tag_name!r} is not defined by {tld.path}",
                        page.path, node.line,
                    )
                    continue
                _validate_use(node.attributes, spec, page.path, node.line,
                              node.name, sink)
                uses.append(
                    TagUse(
                        page_id=page_entity_id(page.path),
                        page_path=page.path,
                        name=node.name,
                        spec=spec,
                        attributes=node.attributes,
                        line=node.line,
                        column=node.column,
                    )
                )
    return uses


def _validate_use(attributes: tuple[TagAttribute, ...], spec: TagSpec,
                  path: str, line: int, name: str,
                  sink: DiagnosticSink) -> None:
    provided = {attribute.name for attribute in attributes}
    declared = {attr_spec.name for attr_spec in spec.attributes}
    for extra in sorted(provided - declared):
        sink.warn(f"tag {name} sets undeclared attribute {extra!r}",
                  path, line)
    for attr_spec in spec.attributes:
        if attr_spec.required and attr_spec.name not in provided:
            sink.warn(
                f"tag {name} is missing required attribute "
                f"{attr_spec.name!r}",
                path, line,
            )


def _method_target(graph: DependencyGraph, index: OoIndex, qname: str,
                   name: str, prefer_arity: int) -> str:
    """Entity id of ``qname.name``, synthesizing the method if undeclared.

    Prefers a declared overload of the conventional arity, then the
    smallest declared one; a container-invoked method the class inherits
    rather than declares becomes a synthetic MethodUnit under the class.
    """
    candidates = index.methods_by_name.get((qname, name), [])
    for arity, method_id in candidates:
        if arity == prefer_arity:
            return method_id
    if candidates:
        return min(candidates)[1]
    class_id = index.class_ids[qname]
    owner = graph.entity(class_id)
    method_id = stable_id(
        EntityKind.METHOD_UNIT,
        method_key(f"{qname}.{name}", prefer_arity),
        owner.location.path,
    )
    graph.add_entity(
        Entity(
            id=method_id,
            kind=EntityKind.METHOD_UNIT,
            name=f"{qname}.{name}",
            parent=class_id,
            location=owner.location,
            synthetic=True,
        ),
        analyzer=Analyzer.CONTAINER,
    )
    return method_id


def emit_tag_lifecycle_edges(use: TagUse, graph: DependencyGraph,
                             index: OoIndex, sink: DiagnosticSink) -> None:
    """Setter and lifecycle edges from the using page to the handler.

    One AttributeSetter edge per provided attribute (evidence at the
    attribute value), then LifecycleCallback edges to ``doStartTag`` and
    ``doEndTag`` (evidence at the tag).  A handler class outside the
    analyzed sources yields unresolved placeholders instead.
    """
    handler = use.spec.handler
    handler_id = index.class_ids.get(handler) if handler else None
    if handler_id is None:
        sink.warn(
            f"handler class {handler or '<missing>'} for tag {use.name} is "
            f"not in the analyzed sources",
            use.page_path, use.line,
        )

    def add(target: str, kind: RelationshipKind, line: int, column: int,
            note: str, hint: str = "") -> None:
        graph.add_relationship(
            Relationship(
                source=use.page_id,
                target=target,
                kind=kind,
                evidence=Provenance(
                    analyzer=Analyzer.CONTAINER,
                    location=SourceLocation(use.page_path, line, column),
                    note=note,
                ),
                target_hint=hint,
            )
        )

    base = handler if handler else use.name
    for attribute in use.attributes:
        if not attribute.name.isidentifier():
            continue
        setter = f"set{capitalize_property(attribute.name)}"
        note = f'{use.name} {attribute.name}="{attribute.value}"'
        if handler_id is None:
            key = f"{base}.{setter}"
            add(unresolved_ref(key), RelationshipKind.ATTRIBUTE_SETTER,
                attribute.line, attribute.column, note, hint=key)
        else:
            target = _method_target(graph, index, handler, setter,
                                    prefer_arity=1)
            add(target, RelationshipKind.ATTRIBUTE_SETTER,
                attribute.line, attribute.column, note)
    for callback in TAG_CALLBACKS:
        note = f"{use.name} {callback}"
        if handler_id is None:
            key = f"{base}.{callback}"
            add(unresolved_ref(key), RelationshipKind.LIFECYCLE_CALLBACK,
                use.line, use.column, note, hint=key)
        else:
            target = _method_target(graph, index, handler, callback,
                                    prefer_arity=0)
            add(target, RelationshipKind.LIFECYCLE_CALLBACK,
                use.line, use.column, note)


def emit_servlet_lifecycle_edges(graph: DependencyGraph, index: OoIndex,
                                 sink: DiagnosticSink) -> None:
    """Entry-point edges from the container pseudo-entity.

    Every server page gets one service callback (the page as a whole is
    the entry point); every servlet class gets ``init`` and ``service``
    (synthesized when inherited) plus any declared ``doGet``/``doPost``.
    """
    container_id = ensure_web_container(graph)
    for page in graph.entities_of_kind(EntityKind.SERVER_PAGE):
        graph.add_relationship(
            Relationship(
                source=container_id,
                target=page.id,
                kind=RelationshipKind.LIFECYCLE_CALLBACK,
                evidence=Provenance(
                    analyzer=Analyzer.CONTAINER,
                    location=SourceLocation(page.location.path, 1, 1),
                    note="service",
                ),
            )
        )
    for unit in index.units:
        if unit.synthetic:
            continue  # lowered pages are covered by their page entity
        for decl in unit.classes:
            if not is_servlet_class(decl):
                continue
            qname = unit.qualify(decl.name)
            if qname not in index.class_ids:
                continue
            location = SourceLocation(unit.path, decl.line, 1)
            for callback in SERVLET_CALLBACKS:
                arity = 2 if callback == "service" else 0
                target = _method_target(graph, index, qname, callback,
                                        prefer_arity=arity)
                graph.add_relationship(
                    Relationship(
                        source=container_id,
                        target=target,
                        kind=RelationshipKind.LIFECYCLE_CALLBACK,
                        evidence=Provenance(
                            analyzer=Analyzer.CONTAINER,
                            location=location,
                            note=callback,
                        ),
                    )
                )
            for callback in OPTIONAL_SERVLET_CALLBACKS:
                declared = index.methods_by_name.get((qname, callback))
                if not declared:
                    continue
                target = min(declared)[1]
                graph.add_relationship(
                    Relationship(
                        source=container_id,
                        target=target,
                        kind=RelationshipKind.LIFECYCLE_CALLBACK,
                        evidence=Provenance(
                            analyzer=Analyzer.CONTAINER,
                            location=location,
                            note=callback,
                        ),
                    )
                )


def emit_jndi_edges(sites: list[LookupSite], graph: DependencyGraph,
                    index: OoIndex, table: UrlMappingTable,
                    sink: DiagnosticSink,
                    attributions: dict[str, Attribution] | None = None,
                    ) -> None:
    """Name-lookup edges for enterprise-bean references.

    Each ``lookup("java:comp/env/ejb/<Name>")`` literal links the enclosing
    method (or the page, for lowered units) to the bean class: resolved
    through the descriptor's bean-name table first, then by simple class
    name, else to an unresolved placeholder.
    """
    attributions = attributions or {}
    for site in sites:
        if not site.value.startswith(JNDI_EJB_PREFIX):
            continue
        bean_name = site.value[len(JNDI_EJB_PREFIX):].strip("/")
        if not bean_name:
            continue
        bound = attributions.get(site.path)
        if bound is not None:
            source = bound.source_id
            line, column = bound.translate(site.line, site.column)
        else:
            source = index.method_ids.get(
                (site.owner_class, site.method_name, site.method_arity)
            )
            line, column = site.line, site.column
            if source is None:
                continue
        target, hint = _bean_target(bean_name, index, table, sink,
                                    site.path, line)
        graph.add_relationship(
            Relationship(
                source=source,
                target=target,
                kind=RelationshipKind.JNDI_LOOKUP,
                evidence=Provenance(
                    analyzer=Analyzer.CONTAINER,
                    location=SourceLocation(site.path, line, column),
                    note=f'lookup "{site.value}"',
                ),
                target_hint=hint,
            )
        )


def _bean_target(bean_name: str, index: OoIndex, table: UrlMappingTable,
                 sink: DiagnosticSink, path: str, line: int
                 ) -> tuple[str, str]:
    declared = table.ejb_names.get(bean_name)
    if declared:
        class_id = index.class_ids.get(declared)
        if class_id is not None:
            return class_id, ""
    matches = sorted(
        qname for qname in index.class_ids if _simple(qname) == bean_name
    )
    if matches:
        if len(matches) > 1:
            sink.warn(
                f"bean name {bean_name!r} matches several classes; using "
                f"{matches[0]}",
                path, line,
            )
        return index.class_ids[matches[0]], ""
    key = f"ejb/{bean_name}"
    return unresolved_ref(key), key
