"""Deployment-descriptor and annotation parsing into a URL mapping table.

Three kinds of configuration feed the graph: the web descriptor
(``web.xml``) maps URL patterns to servlet classes or pages, tag library
descriptors (``*.tld``) map custom-tag names to handler classes and declare
their attributes, and servlet annotations contribute URL patterns straight
from source.  Everything merges into a single :class:`UrlMappingTable` that
later passes use to resolve URLs and tag prefixes.

Descriptor files become ConfigFile entities; each TLD ``<tag>`` element
becomes a TagDefinition entity contained by its descriptor.
"""

from __future__ import annotations

import posixpath
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field

from webdeps.diagnostics import DiagnosticSink
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Entity,
    EntityKind,
    SourceLocation,
    stable_id,
)
from webdeps.oo.extract import OoIndex
from webdeps.oo.nodes import CompilationUnit


class XmlError(Exception):
    """A descriptor file is not well-formed XML."""

    def __init__(self, message: str, path: str) -> None:
        super().__init__(message)
        self.path = path


@dataclass(frozen=True)
class TagAttributeSpec:
    name: str
    required: bool = False


@dataclass(frozen=True)
class TagSpec:
    """One custom tag: its name, handler class, and declared attributes."""

    name: str
    handler: str
    attributes: tuple[TagAttributeSpec, ...]
    uri: str
    path: str

    def attribute_named(self, name: str) -> TagAttributeSpec | None:
        for spec in self.attributes:
            if spec.name == name:
                return spec
        return None


@dataclass(frozen=True)
class ServletDef:
    name: str
    class_name: str = ""
    jsp_file: str = ""


@dataclass(frozen=True)
class WebDescriptor:
    path: str
    servlets: tuple[ServletDef, ...]
    mappings: tuple[tuple[str, str], ...]  # (url pattern, servlet name)
    welcome_files: tuple[str, ...]

    def servlet_named(self, name: str) -> ServletDef | None:
        for servlet in self.servlets:
            if servlet.name == name:
                return servlet
        return None


@dataclass(frozen=True)
class TldFile:
    path: str
    uri: str
    specs: tuple[TagSpec, ...]


def _local(tag: object) -> str:
    """Element tag without any XML-namespace prefix."""
    if not isinstance(tag, str):
        return ""
    return tag.rsplit("}", 1)[-1]


def _child_text(element: ET.Element, name: str) -> str:
    for child in element:
        if _local(child.tag) == name:
            return (child.text or "").strip()
    return ""


def _parse_xml(text: str, path: str) -> ET.Element:
    try:
        return ET.fromstring(text)
    except ET.ParseError as exc:
        raise XmlError(f"{path}: {exc}", path) from exc


def _config_entity(graph: DependencyGraph, path: str) -> str:
    entity_id = stable_id(EntityKind.CONFIG_FILE, path, path)
    graph.add_entity(
        Entity(
            id=entity_id,
            kind=EntityKind.CONFIG_FILE,
            name=path,
            parent=None,
            location=SourceLocation(path, 1, 1),
        ),
        analyzer=Analyzer.CONFIG,
    )
    return entity_id


def parse_web_xml(text: str, path: str, graph: DependencyGraph,
                  sink: DiagnosticSink) -> WebDescriptor:
    """Read servlet declarations, URL mappings, and welcome files.

    The ConfigFile entity is created even when the descriptor declares
    nothing.  Raises :class:`XmlError` on malformed XML.
    """
    root = _parse_xml(text, path)
    _config_entity(graph, path)
    servlets: list[ServletDef] = []
    mappings: list[tuple[str, str]] = []
    welcome: list[str] = []
    for element in root.iter():
        kind = _local(element.tag)
        if kind == "servlet":
            name = _child_text(element, "servlet-name")
            if not name:
                sink.warn("servlet element without servlet-name", path)
                continue
            servlets.append(
                ServletDef(
                    name=name,
                    class_name=_child_text(element, "servlet-class"),
                    jsp_file=_child_text(element, "jsp-file"),
                )
            )
        elif kind == "servlet-mapping":
            name = _child_text(element, "servlet-name")
            for child in element:
                if _local(child.tag) == "url-pattern":
                    pattern = (child.text or "").strip()
                    if pattern and name:
                        mappings.append((pattern, name))
        elif kind == "welcome-file":
            value = (element.text or "").strip()
            if value:
                welcome.append(value)
    return WebDescriptor(
        path=path,
        servlets=tuple(servlets),
        mappings=tuple(mappings),
        welcome_files=tuple(welcome),
    )


def parse_tld(text: str, path: str, graph: DependencyGraph,
              sink: DiagnosticSink) -> TldFile:
    """Read a tag library descriptor into TagSpec records and entities."""
    root = _parse_xml(text, path)
    config_id = _config_entity(graph, path)
    uri = ""
    for element in root:
        if _local(element.tag) == "uri":
            uri = (element.text or "").strip()
            break
    specs: list[TagSpec] = []
    for element in root.iter():
        if _local(element.tag) != "tag":
            continue
        name = _child_text(element, "name")
        # Both descriptor generations are accepted: 1.x uses <tagclass>,
        # 2.x uses <tag-class>.
        handler = _child_text(element, "tag-class") or _child_text(
            element, "tagclass"
        )
        if not name:
            sink.warn("tag element without name", path)
            continue
        if not handler:
            sink.warn(f"tag {name!r} has no handler class", path)
        attributes = []
        for child in element:
            if _local(child.tag) != "attribute":
                continue
            attr_name = _child_text(child, "name")
            if not attr_name:
                continue
            required = _child_text(child, "required").lower() == "true"
            attributes.append(TagAttributeSpec(attr_name, required))
        specs.append(
            TagSpec(
                name=name,
                handler=handler,
                attributes=tuple(attributes),
                uri=uri,
                path=path,
            )
        )
        graph.add_entity(
            Entity(
                id=stable_id(EntityKind.TAG_DEFINITION, name, path),
                kind=EntityKind.TAG_DEFINITION,
                name=name,
                parent=config_id,
                location=SourceLocation(path, 1, 1),
            ),
            analyzer=Analyzer.CONFIG,
        )
    return TldFile(path=path, uri=uri, specs=tuple(specs))


def parse_ejb_xml(text: str, path: str, graph: DependencyGraph,
                  sink: DiagnosticSink) -> dict[str, str]:
    """Read bean-name to bean-class pairs from an EJB descriptor."""
    root = _parse_xml(text, path)
    _config_entity(graph, path)
    names: dict[str, str] = {}
    for element in root.iter():
        if _local(element.tag) not in ("session", "entity", "message-driven"):
            continue
        name = _child_text(element, "ejb-name")
        class_name = _child_text(element, "ejb-class")
        if not name or not class_name:
            continue
        if name in names:
            sink.warn(f"duplicate ejb-name {name!r}; first declaration wins",
                      path)
            continue
        names[name] = class_name
    return names


_SERVLET_ANNOTATION = "WebServlet"


def collect_annotations(units: list[CompilationUnit], sink: DiagnosticSink
                        ) -> tuple[tuple[str, str, str], ...]:
    """URL patterns contributed by servlet annotations.

    Returns (pattern, class qualified name, unit path) rows, in source
    order.  Non-literal arguments were already dropped by the parser with
    a diagnostic.
    """
    rows: list[tuple[str, str, str]] = []
    for unit in units:
        for decl in unit.classes:
            qname = unit.qualify(decl.name)
            for annotation in decl.annotations:
                simple = annotation.name.rsplit(".", 1)[-1]
                if simple != _SERVLET_ANNOTATION:
                    continue
                patterns = annotation.arguments.get("value", ())
                patterns += annotation.arguments.get("urlPatterns", ())
                if not patterns:
                    sink.warn(
                        f"servlet annotation on {qname} declares no url "
                        f"patterns",
                        unit.path, annotation.line,
                    )
                for pattern in patterns:
                    rows.append((pattern, qname, unit.path))
    return tuple(rows)


@dataclass
class UrlMappingTable:
    """Merged URL-pattern and tag-name resolution table.

    Lookup precedence: exact pattern, then longest-prefix wildcard
    (``/shop/*``), then extension pattern (``*.do``).
    """

    web_root: str = ""
    routes: dict[str, str] = field(default_factory=dict)
    tags: dict[tuple[str, str], TagSpec] = field(default_factory=dict)
    tld_by_uri: dict[str, TldFile] = field(default_factory=dict)
    tld_by_path: dict[str, TldFile] = field(default_factory=dict)
    ejb_names: dict[str, str] = field(default_factory=dict)

    def lookup(self, url: str) -> str | None:
        if url in self.routes:
            return self.routes[url]
        best_prefix = ""
        best_target = None
        for pattern, target in sorted(self.routes.items()):
            if pattern.endswith("/*"):
                prefix = pattern[:-1]
                if url.startswith(prefix) and len(prefix) > len(best_prefix):
                    best_prefix, best_target = prefix, target
        if best_target is not None:
            return best_target
        extension = posixpath.splitext(url)[1]
        if extension:
            return self.routes.get(f"*{extension}")
        return None

    def bind_taglib(self, uri_or_path: str, page_dir: str = "") -> TldFile | None:
        """Resolve a taglib reference: by declared uri first, then by path."""
        if uri_or_path in self.tld_by_uri:
            return self.tld_by_uri[uri_or_path]
        candidate = uri_or_path.lstrip("/")
        if candidate in self.tld_by_path:
            return self.tld_by_path[candidate]
        if page_dir:
            joined = posixpath.normpath(posixpath.join(page_dir, candidate))
            if joined in self.tld_by_path:
                return self.tld_by_path[joined]
        if self.web_root:
            rooted = posixpath.normpath(posixpath.join(self.web_root, candidate))
            if rooted in self.tld_by_path:
                return self.tld_by_path[rooted]
        return None

    def tag_spec(self, uri: str, tag_name: str) -> TagSpec | None:
        return self.tags.get((uri, tag_name))


def url_for_path(path: str, web_root: str) -> str | None:
    """Web-root-relative URL for a project-relative file path."""
    if web_root:
        relative = posixpath.relpath(path, web_root)
        if relative.startswith(".."):
            return None
        return "/" + relative
    return "/" + path


def build_mapping(
    graph: DependencyGraph,
    index: OoIndex,
    descriptors: list[WebDescriptor],
    tlds: list[TldFile],
    annotations: tuple[tuple[str, str, str], ...],
    ejb_names: dict[str, str],
    web_root: str,
    sink: DiagnosticSink,
) -> UrlMappingTable:
    """Merge descriptor, annotation, and page-path routes into one table.

    Descriptor rows win over annotation rows (with a diagnostic); the first
    descriptor row wins over later duplicates; page paths fill in wherever
    no explicit mapping claimed the URL.
    """
    table = UrlMappingTable(web_root=web_root, ejb_names=dict(ejb_names))

    page_urls: dict[str, str] = {}
    for kind in (EntityKind.SERVER_PAGE, EntityKind.HTML_PAGE):
        for page in graph.entities_of_kind(kind):
            url = url_for_path(page.location.path, web_root)
            if url is not None:
                page_urls[url] = page.id

    for descriptor in descriptors:
        for pattern, servlet_name in descriptor.mappings:
            target = _servlet_target(descriptor, servlet_name, index,
                                     page_urls, sink)
            if target is None:
                continue
            if pattern in table.routes:
                sink.warn(
                    f"duplicate url-pattern {pattern!r}; first mapping wins",
                    descriptor.path,
                )
                continue
            table.routes[pattern] = target

    for pattern, qname, path in annotations:
        class_id = index.class_ids.get(qname)
        if class_id is None:
            continue
        if pattern in table.routes:
            if table.routes[pattern] != class_id:
                sink.warn(
                    f"url-pattern {pattern!r} declared by both descriptor "
                    f"and annotation; descriptor wins",
                    path,
                )
            continue
        table.routes[pattern] = class_id

    for url, page_id in sorted(page_urls.items()):
        table.routes.setdefault(url, page_id)

    for descriptor in descriptors:
        for welcome in descriptor.welcome_files:
            target = table.routes.get("/" + welcome.lstrip("/"))
            if target is not None:
                table.routes.setdefault("/", target)
                break

    for tld in tlds:
        if tld.uri:
            if tld.uri in table.tld_by_uri:
                sink.warn(f"duplicate taglib uri {tld.uri!r}; first wins",
                          tld.path)
            else:
                table.tld_by_uri[tld.uri] = tld
        table.tld_by_path[tld.path] = tld
        for spec in tld.specs:
            table.tags.setdefault((tld.uri, spec.name), spec)

    return table


def _servlet_target(descriptor: WebDescriptor, servlet_name: str,
                    index: OoIndex, page_urls: dict[str, str],
                    sink: DiagnosticSink) -> str | None:
    servlet = descriptor.servlet_named(servlet_name)
    if servlet is None:
        sink.warn(f"servlet-mapping names unknown servlet {servlet_name!r}",
                  descriptor.path)
        return None
    if servlet.jsp_file:
        url = "/" + servlet.jsp_file.lstrip("/")
        page_id = page_urls.get(url)
        if page_id is None:
            sink.warn(
                f"jsp-file {servlet.jsp_file!r} of servlet {servlet_name!r} "
                f"matches no page",
                descriptor.path,
            )
        return page_id
    if servlet.class_name:
        class_id = index.class_ids.get(servlet.class_name)
        if class_id is None:
            sink.warn(
                f"servlet class {servlet.class_name!r} is not in the "
                f"analyzed sources",
                descriptor.path,
            )
        return class_id
    sink.warn(f"servlet {servlet_name!r} declares neither a class nor a "
              f"jsp-file", descriptor.path)
    return None


def find_web_root(paths: list[str]) -> str:
    """Directory containing ``WEB-INF``, else the project root ("")."""
    candidates = []
    for path in paths:
        parts = path.split("/")
        if "WEB-INF" in parts:
            root = "/".join(parts[: parts.index("WEB-INF")])
            candidates.append(root)
    if not candidates:
        return ""
    return min(candidates, key=lambda root: (root.count("/") if root else -1,
                                             root))
