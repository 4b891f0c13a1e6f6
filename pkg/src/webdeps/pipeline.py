"""End-to-end project analysis: discover, parse, link, seal, report.

The passes run in dependency order: source parsing (classes and template
pages), template lowering, configuration loading, entity registration,
container-rule edges, markup-tag edges, expression-language edges, then
sealing and the statistics report.  Baseline mode keeps only the
class-level front end plus configuration entities — the point of
comparison for measuring how much the web-aware passes add.
"""

from __future__ import annotations

import hashlib
import os
import posixpath
from dataclasses import dataclass, field

from webdeps.config import (
    TldFile,
    WebDescriptor,
    XmlError,
    build_mapping,
    collect_annotations,
    find_web_root,
    parse_ejb_xml,
    parse_tld,
    parse_web_xml,
    url_for_path,
)
from webdeps.container import (
    emit_jndi_edges,
    emit_servlet_lifecycle_edges,
    emit_tag_lifecycle_edges,
    find_tag_uses,
)
from webdeps.diagnostics import DiagnosticSink
from webdeps.el import (
    classify_literals,
    collect_oo_literals,
    collect_page_literals,
    emit_el_edges,
    truncated_percent,
)
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Entity,
    EntityKind,
    SealReport,
    SourceLocation,
    stable_id,
)
from webdeps.oo.extract import (
    Attribution,
    collect_lookup_sites,
    collect_string_writes,
    extract_oo_graph,
)
from webdeps.oo.nodes import CompilationUnit
from webdeps.oo.parser import OoSyntaxError, parse_unit
from webdeps.tags import (
    BUILTIN_RULES,
    attribute_hits,
    load_tag_rules,
    resolve_hits,
    scan_markup,
    scan_write_sites,
)
from webdeps.templates import (
    NodeKind,
    TemplateNode,
    TemplatePage,
    UnterminatedConstructError,
    class_name_for,
    lower_page,
    page_entity_id,
    parse_template,
    register_page,
)

MODES = ("full", "baseline")
FORMATS = ("json", "dot", "graphml")
UNRESOLVED_POLICIES = ("placeholder", "drop")


@dataclass(frozen=True)
class AnalysisConfig:
    """Everything one analysis run needs; mirrors the CLI flags."""

    root: str
    mode: str = "full"
    web_root: str | None = None  # auto-detected when None
    unresolved: str = "placeholder"
    tag_rules_path: str | None = None
    fmt: str = "json"
    out: str | None = None
    dump_lowered: str | None = None


@dataclass(frozen=True)
class ProjectFiles:
    """Analyzable files, project-relative with forward slashes."""

    sources: tuple[str, ...] = ()
    templates: tuple[str, ...] = ()
    html: tuple[str, ...] = ()
    web_descriptors: tuple[str, ...] = ()
    tag_descriptors: tuple[str, ...] = ()
    ejb_descriptors: tuple[str, ...] = ()

    @property
    def all(self) -> tuple[str, ...]:
        return tuple(sorted(
            self.sources + self.templates + self.html + self.web_descriptors
            + self.tag_descriptors + self.ejb_descriptors
        ))


@dataclass
class AnalysisResult:
    graph: DependencyGraph
    report: dict
    sink: DiagnosticSink
    seal: SealReport


def discover_files(root: str) -> ProjectFiles:
    """Classify every analyzable file under *root* (hidden dirs skipped)."""
    buckets: dict[str, list[str]] = {
        "sources": [], "templates": [], "html": [],
        "web": [], "tld": [], "ejb": [],
    }
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames[:] = sorted(d for d in dirnames if not d.startswith("."))
        for name in sorted(filenames):
            rel = posixpath.join(
                *os.path.relpath(os.path.join(dirpath, name), root)
                .split(os.sep)
            )
            lower = name.lower()
            if lower.endswith(".java"):
                buckets["sources"].append(rel)
            elif lower.endswith(".jsp"):
                buckets["templates"].append(rel)
            elif lower.endswith((".html", ".htm")):
                buckets["html"].append(rel)
            elif lower == "web.xml":
                buckets["web"].append(rel)
            elif lower.endswith(".tld"):
                buckets["tld"].append(rel)
            elif lower == "ejb-jar.xml":
                buckets["ejb"].append(rel)
    return ProjectFiles(
        sources=tuple(buckets["sources"]),
        templates=tuple(buckets["templates"]),
        html=tuple(buckets["html"]),
        web_descriptors=tuple(buckets["web"]),
        tag_descriptors=tuple(buckets["tld"]),
        ejb_descriptors=tuple(buckets["ejb"]),
    )


def project_root_hash(root: str, files: ProjectFiles) -> str:
    """Content hash of the analyzed tree, for run-to-run comparison."""
    digest = hashlib.sha256()
    for rel in files.all:
        digest.update(rel.encode("utf-8"))
        digest.update(b"\0")
        try:
            with open(os.path.join(root, rel), "rb") as handle:
                digest.update(hashlib.sha256(handle.read()).digest())
        except OSError:
            digest.update(b"unreadable")
        digest.update(b"\0")
    return digest.hexdigest()[:16]


def _read(root: str, rel: str, sink: DiagnosticSink) -> str | None:
    try:
        with open(os.path.join(root, rel), encoding="utf-8",
                  errors="replace") as handle:
            return handle.read()
    except OSError as exc:
        sink.error(f"cannot read file: {exc}", rel)
        return None


def _fallback_page(path: str, text: str) -> TemplatePage:
    """Whole file as one markup node when construct parsing fails."""
    nodes = ()
    if text:
        nodes = (TemplateNode(kind=NodeKind.RAW_MARKUP, text=text,
                              line=1, column=1),)
    return TemplatePage(path=path, text=text, nodes=nodes)


@dataclass
class _Project:
    """Parsed inputs shared by the pipeline stages."""

    pages: list[TemplatePage] = field(default_factory=list)
    page_texts: dict[str, str] = field(default_factory=dict)
    html_texts: dict[str, str] = field(default_factory=dict)
    attributions: dict[str, Attribution] = field(default_factory=dict)
    descriptors: list[WebDescriptor] = field(default_factory=list)
    tlds: list[TldFile] = field(default_factory=list)
    ejb_names: dict[str, str] = field(default_factory=dict)


def analyze(config: AnalysisConfig) -> AnalysisResult:
    """Run the configured analysis over the project tree."""
    if config.mode not in MODES:
        raise ValueError(f"unknown mode {config.mode!r}")
    if not os.path.isdir(config.root):
        raise FileNotFoundError(f"project root {config.root!r} is not a "
                                f"directory")
    sink = DiagnosticSink()
    graph = DependencyGraph()
    files = discover_files(config.root)
    project = _Project()
    full = config.mode == "full"

    units = _parse_sources(config, files, sink)
    if full:
        units += _parse_and_lower_pages(config, files, graph, project, sink)
    index = extract_oo_graph(units, graph, sink, project.attributions)
    _parse_config_files(config, files, graph, project, sink)

    if full:
        annotations = collect_annotations(
            [u for u in units if not u.synthetic], sink
        )
        web_root = (config.web_root if config.web_root is not None
                    else find_web_root(list(files.all)))
        table = build_mapping(graph, index, project.descriptors,
                              project.tlds, annotations, project.ejb_names,
                              web_root, sink)

        uses = find_tag_uses(project.pages, table, sink)
        for use in uses:
            emit_tag_lifecycle_edges(use, graph, index, sink)
        emit_servlet_lifecycle_edges(graph, index, sink)
        lookup_sites = [site for unit in index.units
                        for site in collect_lookup_sites(unit, sink)]
        emit_jndi_edges(lookup_sites, graph, index, table, sink,
                        project.attributions)

        rules = _load_rules(config, sink)
        _emit_tag_edges(project, uses, index, table, graph, sink, rules,
                        web_root)
        for page in project.pages:
            emit_el_edges(page, graph, index, sink)

    seal_report = graph.seal(config.unresolved)
    graph.meta["project_root_hash"] = project_root_hash(config.root, files)
    report = _build_report(config, files, graph, project, index, sink,
                           seal_report)
    return AnalysisResult(graph=graph, report=report, sink=sink,
                          seal=seal_report)


def _parse_sources(config: AnalysisConfig, files: ProjectFiles,
                   sink: DiagnosticSink) -> list[CompilationUnit]:
    units = []
    for rel in files.sources:
        text = _read(config.root, rel, sink)
        if text is None:
            continue
        try:
            units.append(parse_unit(text, rel, sink))
        except OoSyntaxError as exc:
            sink.error(f"cannot parse source file: {exc}", rel, exc.line)
    return units


def _parse_and_lower_pages(config: AnalysisConfig, files: ProjectFiles,
                           graph: DependencyGraph, project: _Project,
                           sink: DiagnosticSink) -> list[CompilationUnit]:
    units = []
    taken: set[str] = set()
    for rel in files.templates:
        text = _read(config.root, rel, sink)
        if text is None:
            continue
        try:
            page = parse_template(text, rel)
        except UnterminatedConstructError as exc:
            sink.error(f"unterminated template construct: {exc}",
                       rel, exc.line)
            page = _fallback_page(rel, text)
        project.pages.append(page)
        project.page_texts[rel] = text
        name = class_name_for(rel, taken)
        taken.add(name)
        lowered = lower_page(page, sink, class_name=name)
        project.attributions[rel] = register_page(graph, lowered)
        units.append(lowered.unit)
        if config.dump_lowered:
            os.makedirs(config.dump_lowered, exist_ok=True)
            dump_path = os.path.join(config.dump_lowered, f"{name}.java")
            with open(dump_path, "w", encoding="utf-8") as handle:
                handle.write(lowered.source)
    for rel in files.html:
        text = _read(config.root, rel, sink)
        if text is None:
            continue
        project.html_texts[rel] = text
        graph.add_entity(
            Entity(
                id=stable_id(EntityKind.HTML_PAGE, rel, rel),
                kind=EntityKind.HTML_PAGE,
                name=rel,
                parent=None,
                location=SourceLocation(rel, 1, 1),
            ),
            analyzer=Analyzer.TEMPLATES,
        )
    return units


def _parse_config_files(config: AnalysisConfig, files: ProjectFiles,
                        graph: DependencyGraph, project: _Project,
                        sink: DiagnosticSink) -> None:
    for rel in files.web_descriptors:
        text = _read(config.root, rel, sink)
        if text is None:
            continue
        try:
            project.descriptors.append(parse_web_xml(text, rel, graph, sink))
        except XmlError as exc:
            sink.error(str(exc), rel)
    for rel in files.tag_descriptors:
        text = _read(config.root, rel, sink)
        if text is None:
            continue
        try:
            project.tlds.append(parse_tld(text, rel, graph, sink))
        except XmlError as exc:
            sink.error(str(exc), rel)
    for rel in files.ejb_descriptors:
        text = _read(config.root, rel, sink)
        if text is None:
            continue
        try:
            names = parse_ejb_xml(text, rel, graph, sink)
        except XmlError as exc:
            sink.error(str(exc), rel)
            continue
        for name, qname in names.items():
            project.ejb_names.setdefault(name, qname)


def _load_rules(config: AnalysisConfig, sink: DiagnosticSink):
    if not config.tag_rules_path:
        return BUILTIN_RULES
    with open(config.tag_rules_path, encoding="utf-8") as handle:
        return BUILTIN_RULES + load_tag_rules(handle.read())


def _url_dir(path: str, web_root: str) -> str:
    url = url_for_path(path, web_root)
    return posixpath.dirname(url).lstrip("/") if url else ""


def _emit_tag_edges(project: _Project, uses, index, table, graph, sink,
                    rules, web_root: str) -> None:
    """Markup-rule edges from page text and from output-stream writes.

    Write-site hits found inside a tag handler's output speak for the
    pages that use the handler, so each such hit is re-attributed to every
    using page; writes in ordinary classes keep the writing method as the
    edge source.
    """
    hits = []
    for page in project.pages:
        page_hits = scan_markup(page.text, page.path, rules)
        hits += attribute_hits(page_hits, page_entity_id(page.path),
                               _url_dir(page.path, web_root))
    for rel, text in sorted(project.html_texts.items()):
        page_hits = scan_markup(text, rel, rules)
        hits += attribute_hits(page_hits,
                               stable_id(EntityKind.HTML_PAGE, rel, rel),
                               _url_dir(rel, web_root))

    handler_pages: dict[str, set[tuple[str, str]]] = {}
    for use in uses:
        handler_pages.setdefault(use.spec.handler, set()).add(
            (use.page_id, _url_dir(use.page_path, web_root))
        )
    for unit in index.units:
        if unit.synthetic:
            continue
        for site in collect_string_writes(unit):
            site_hits = scan_write_sites(site, rules)
            if not site_hits:
                continue
            users = handler_pages.get(site.owner_class)
            if users:
                for page_id, base_dir in sorted(users):
                    hits += attribute_hits(site_hits, page_id, base_dir)
            else:
                method_id = index.method_ids.get(
                    (site.owner_class, site.method_name, site.method_arity)
                )
                if method_id is not None:
                    hits += attribute_hits(site_hits, method_id, "")
    resolve_hits(hits, table, graph, sink)


def _build_report(config: AnalysisConfig, files: ProjectFiles,
                  graph: DependencyGraph, project: _Project, index,
                  sink: DiagnosticSink, seal_report: SealReport) -> dict:
    report: dict = {
        "mode": config.mode,
        "root": config.root,
        "entities": len(graph.entities),
        "relationships": len(graph.relationships),
        "files": {
            "sources": len(files.sources),
            "templates": len(files.templates),
            "html": len(files.html),
            "config": (len(files.web_descriptors)
                       + len(files.tag_descriptors)
                       + len(files.ejb_descriptors)),
        },
        "seal": {
            "policy": config.unresolved,
            "unresolved": seal_report.unresolved,
            "dropped": len(seal_report.dropped),
        },
        "diagnostics": sink.as_dicts(),
    }
    if config.mode != "full":
        return report

    code_bearing = sum(1 for page in project.pages if page.script_bearing)
    total_pages = len(project.pages) + len(project.html_texts)
    report["pages"] = {
        "total": total_pages,
        "code_bearing": code_bearing,
        "multilanguage_percent": truncated_percent(code_bearing,
                                                   total_pages),
    }

    literals = []
    for page in project.pages:
        literals += collect_page_literals(page.path, page.text)
    for rel, text in sorted(project.html_texts.items()):
        literals += collect_page_literals(rel, text)
    literals += collect_oo_literals(index)
    seed = tuple(sorted(project.page_texts) + sorted(project.html_texts))
    stats = classify_literals(literals, graph, seed_paths=seed)
    report["literals"] = {
        "project": {
            "total": stats.project.total,
            "bearing": stats.project.bearing,
            "percent": stats.project.percent,
        },
        "files": {
            path: {"total": s.total, "bearing": s.bearing,
                   "percent": s.percent}
            for path, s in stats.files.items()
        },
        "origins": {
            origin: {"total": s.total, "bearing": s.bearing,
                     "percent": s.percent}
            for origin, s in stats.origins.items()
        },
    }
    return report
