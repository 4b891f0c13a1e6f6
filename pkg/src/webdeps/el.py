"""Expression-language access edges and string-literal statistics.

Pages talk to beans through ``${bean.property}`` / ``#{bean.method()}``
expressions.  This module parses those chains (never raising — anything
outside the dotted-access grammar becomes an :class:`Unparsed` marker),
resolves them against the page's bean bindings using the getter-naming
convention, and emits ElAccess edges.  It also counts the string literals
found in attribute positions and write/lookup arguments and reports how
many of them carry a dependency, for the analysis statistics block.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from collections import defaultdict
from dataclasses import dataclass, field

from webdeps.diagnostics import DiagnosticSink
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Provenance,
    Relationship,
    RelationshipKind,
    SourceLocation,
)
from webdeps.oo.extract import (
    OoIndex,
    collect_lookup_sites,
    collect_string_writes,
)
from webdeps.oo.nodes import ClassDecl, CompilationUnit
from webdeps.tags import mask_comments
from webdeps.templates import (
    NodeKind,
    TemplatePage,
    capitalize_property,
    page_entity_id,
)

# ---------------------------------------------------------------------------
# Expression parsing


@dataclass(frozen=True)
class ElSegment:
    """One step in an access chain: a property or a literal-args call."""

    name: str
    is_call: bool = False
    args: tuple[str, ...] = ()

    def render(self) -> str:
        if self.is_call:
            return f"{self.name}({', '.join(self.args)})"
        return self.name


@dataclass(frozen=True)
class ElExpression:
    """A parsed dotted-access expression, e.g. ``${cart.total()}``."""

    raw: str
    base: str
    segments: tuple[ElSegment, ...] = ()

    def render(self) -> str:
        chain = ".".join([self.base, *(s.render() for s in self.segments)])
        return f"{self.raw[0]}{{{chain}}}"


@dataclass(frozen=True)
class Unparsed:
    """Marker for text outside the supported grammar; parsing never fails."""

    raw: str
    reason: str


_IDENT = re.compile(r"[A-Za-z_]\w*")
_ARG = re.compile(
    r"'[^']*'|\"[^\"]*\"|-?\d+(?:\.\d+)?|true|false|null"
)
_WS = re.compile(r"\s*")


class _Cursor:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0

    def skip_ws(self) -> None:
        self.pos = _WS.match(self.text, self.pos).end()

    def take(self, pattern: re.Pattern) -> str | None:
        self.skip_ws()
        match = pattern.match(self.text, self.pos)
        if match is None:
            return None
        self.pos = match.end()
        return match.group()

    def accept(self, literal: str) -> bool:
        self.skip_ws()
        if self.text.startswith(literal, self.pos):
            self.pos += len(literal)
            return True
        return False

    def done(self) -> bool:
        self.skip_ws()
        return self.pos == len(self.text)


def parse_el(text: str) -> ElExpression | Unparsed:
    """Parse a delimited expression into an access chain; never raises.

    The accepted grammar is a base identifier followed by dot-separated
    property names or method calls whose arguments are literals.  Anything
    richer (operators, indexing, nested calls) comes back as Unparsed.
    """
    match = re.fullmatch(r"([$#])\{(.*)\}", text, re.DOTALL)
    if match is None:
        return Unparsed(text, "missing ${...} or #{...} delimiters")
    cursor = _Cursor(match.group(2))
    base = cursor.take(_IDENT)
    if base is None:
        return Unparsed(text, "empty or non-identifier base")
    segments: list[ElSegment] = []
    while not cursor.done():
        if not cursor.accept("."):
            return Unparsed(text, "expected '.' between segments")
        name = cursor.take(_IDENT)
        if name is None:
            return Unparsed(text, "expected a segment name after '.'")
        if cursor.accept("("):
            args: list[str] = []
            if not cursor.accept(")"):
                while True:
                    arg = cursor.take(_ARG)
                    if arg is None:
                        return Unparsed(text, "call arguments must be "
                                              "literals")
                    args.append(arg)
                    if cursor.accept(")"):
                        break
                    if not cursor.accept(","):
                        return Unparsed(text, "expected ',' or ')' in call")
            segments.append(ElSegment(name, is_call=True, args=tuple(args)))
        else:
            segments.append(ElSegment(name))
    return ElExpression(raw=text, base=base, segments=tuple(segments))


# ---------------------------------------------------------------------------
# Locating expressions and literals on a page


class _LineIndex:
    def __init__(self, text: str) -> None:
        self._starts = [0]
        for i, ch in enumerate(text):
            if ch == "\n":
                self._starts.append(i + 1)

    def locate(self, offset: int) -> tuple[int, int]:
        row = bisect_right(self._starts, offset) - 1
        return row + 1, offset - self._starts[row] + 1


#: Embedded-code regions of a page; their contents are another language and
#: must not be scanned for expressions or attribute literals.  Directives
#: (``<%@ ... %>``) stay visible — they hold attribute positions, not code.
_CODE_SPANS = re.compile(r"<%[^-@].*?(?:%>|\Z)|<%\Z", re.DOTALL)


def _blank(match: re.Match) -> str:
    return "".join(c if c == "\n" else " " for c in match.group())


def mask_page_code(text: str) -> str:
    """Blank out comments and ``<%...%>`` regions, preserving offsets."""
    return _CODE_SPANS.sub(_blank, mask_comments(text))


@dataclass(frozen=True)
class ElSpan:
    text: str
    line: int
    column: int


_EL_SPAN = re.compile(r"[$#]\{[^}]*\}")


def find_el_spans(text: str) -> list[ElSpan]:
    """Every ``${...}``/``#{...}`` occurrence outside comments and code."""
    masked = mask_page_code(text)
    index = _LineIndex(masked)
    spans = []
    for match in _EL_SPAN.finditer(masked):
        line, column = index.locate(match.start())
        spans.append(ElSpan(match.group(), line, column))
    return spans


def bean_scope(page: TemplatePage) -> dict[str, str]:
    """Bean bindings declared on the page: useBean id → class name."""
    scope: dict[str, str] = {}
    for node in page.nodes:
        if node.kind is not NodeKind.USE_BEAN:
            continue
        bean_id = node.attr("id")
        class_name = node.attr("class") or node.attr("type")
        if bean_id and class_name:
            scope.setdefault(bean_id, class_name)
    return scope


# ---------------------------------------------------------------------------
# Resolution


class _MemberTable:
    """Declared members with their types, for chain navigation."""

    def __init__(self, index: OoIndex) -> None:
        self._index = index
        self._decls: dict[str, tuple[ClassDecl, CompilationUnit]] = {}
        for unit in index.units:
            for decl in unit.classes:
                self._decls.setdefault(unit.qualify(decl.name), (decl, unit))

    def has_class(self, qname: str) -> bool:
        return qname in self._decls

    def property_target(self, qname: str, prop: str
                        ) -> tuple[str, str] | None:
        """(entity id, declared type) for a property: getter over field."""
        decl, unit = self._decls[qname]
        getter = f"get{capitalize_property(prop)}"
        for method in decl.methods:
            if method.name == getter and method.arity == 0:
                method_id = self._index.method_ids[(qname, getter, 0)]
                return method_id, self._resolve(unit, method.return_type)
        field_decl = decl.field_named(prop)
        if field_decl is not None:
            field_id = self._index.field_ids[(qname, prop)]
            return field_id, self._resolve(unit, field_decl.type_name)
        return None

    def call_target(self, qname: str, name: str, arity: int
                    ) -> tuple[str, str] | None:
        decl, unit = self._decls[qname]
        for method in decl.methods:
            if method.name == name and method.arity == arity:
                method_id = self._index.method_ids[(qname, name, arity)]
                return method_id, self._resolve(unit, method.return_type)
        return None

    def _resolve(self, unit: CompilationUnit, type_name: str) -> str:
        bare = re.sub(r"<.*>|\[\]", "", type_name or "").strip()
        if not bare:
            return ""
        return self._index.resolve_type(unit, bare) or ""


def resolve_el(expr: ElExpression, scope: dict[str, str],
               graph: DependencyGraph, source: str, index: OoIndex,
               sink: DiagnosticSink, location: SourceLocation,
               members: _MemberTable | None = None) -> None:
    """Emit one access edge per resolvable chain segment.

    The walk follows declared types (getter and field types, method return
    types); it stops with a diagnostic at the first segment that does not
    resolve, and silently when a segment's type leaves the analyzed
    sources.
    """
    members = members or _MemberTable(index)
    qname = scope.get(expr.base)
    if qname is None:
        sink.warn(f"expression base {expr.base!r} is not bound to a bean",
                  location.path, location.line)
        return
    if not members.has_class(qname):
        sink.warn(f"bean {expr.base!r} has type {qname} outside the "
                  f"analyzed sources", location.path, location.line)
        return
    for position, segment in enumerate(expr.segments):
        if segment.is_call:
            found = members.call_target(qname, segment.name,
                                        len(segment.args))
            what = f"method {segment.name}/{len(segment.args)}"
        else:
            found = members.property_target(qname, segment.name)
            what = f"property {segment.name!r}"
        if found is None:
            sink.warn(f"{what} is not declared by {qname}",
                      location.path, location.line)
            return
        target, result_type = found
        graph.add_relationship(
            Relationship(
                source=source,
                target=target,
                kind=RelationshipKind.EL_ACCESS,
                evidence=Provenance(
                    analyzer=Analyzer.EL,
                    location=location,
                    note=expr.render(),
                ),
            )
        )
        if position + 1 == len(expr.segments):
            return
        if not result_type or not members.has_class(result_type):
            return  # chain leaves the analyzed sources
        qname = result_type


def emit_el_edges(page: TemplatePage, graph: DependencyGraph,
                  index: OoIndex, sink: DiagnosticSink,
                  extra_scope: dict[str, str] | None = None) -> None:
    """Scan one page for expressions and emit their access edges."""
    scope = bean_scope(page)
    if extra_scope:
        for name, qname in extra_scope.items():
            scope.setdefault(name, qname)
    spans = find_el_spans(page.text)
    if not spans:
        return
    members = _MemberTable(index)
    source = page_entity_id(page.path)
    for span in spans:
        parsed = parse_el(span.text)
        location = SourceLocation(page.path, span.line, span.column)
        if isinstance(parsed, Unparsed):
            sink.warn(f"expression {span.text!r} is outside the supported "
                      f"grammar: {parsed.reason}",
                      page.path, span.line)
            continue
        resolve_el(parsed, scope, graph, source, index, sink, location,
                   members=members)


# ---------------------------------------------------------------------------
# String-literal statistics


@dataclass(frozen=True)
class StringLiteral:
    """One counted literal: an attribute value or a write/lookup argument."""

    value: str
    path: str
    line: int
    column: int
    origin: str  # "attribute" | "write" | "lookup"


_ANY_ATTR = re.compile(r"[\w:.-]+\s*=\s*(\"(?P<dq>[^\"]*)\"|'(?P<sq>[^']*)')")


def collect_page_literals(path: str, text: str) -> list[StringLiteral]:
    """Quoted attribute values on a page, outside comments and code."""
    masked = mask_page_code(text)
    index = _LineIndex(masked)
    literals = []
    for match in _ANY_ATTR.finditer(masked):
        dq = match.group("dq")
        value = dq if dq is not None else match.group("sq")
        line, column = index.locate(match.end() - len(value) - 1)
        literals.append(StringLiteral(value, path, line, column, "attribute"))
    return literals


def collect_oo_literals(index: OoIndex) -> list[StringLiteral]:
    """String arguments at output-write and name-lookup call sites.

    Lowered units are excluded: their literals came from page text and are
    already counted there.
    """
    literals = []
    for unit in index.units:
        if unit.synthetic:
            continue
        for site in collect_string_writes(unit):
            for fragment in site.fragments:
                if fragment.hole:
                    continue
                literals.append(
                    StringLiteral(fragment.text, site.path, fragment.line,
                                  fragment.column, "write")
                )
        for site in collect_lookup_sites(unit):
            literals.append(
                StringLiteral(site.value, site.path, site.line, site.column,
                              "lookup")
            )
    return literals


def truncated_percent(part: int, whole: int) -> float | None:
    """Proportion as a percentage with one truncated decimal (46.7)."""
    if whole == 0:
        return None
    return (part * 1000 // whole) / 10


@dataclass(frozen=True)
class LiteralStats:
    total: int = 0
    bearing: int = 0

    @property
    def percent(self) -> float | None:
        return truncated_percent(self.bearing, self.total)


@dataclass(frozen=True)
class LiteralClassification:
    """How many counted literals a dependency edge actually cites."""

    files: dict[str, LiteralStats] = field(default_factory=dict)
    origins: dict[str, LiteralStats] = field(default_factory=dict)

    @property
    def project(self) -> LiteralStats:
        return LiteralStats(
            total=sum(s.total for s in self.files.values()),
            bearing=sum(s.bearing for s in self.files.values()),
        )


def classify_literals(literals: list[StringLiteral], graph: DependencyGraph,
                      seed_paths: tuple[str, ...] = ()
                      ) -> LiteralClassification:
    """Mark each literal dependency-bearing iff an edge cites its span.

    Containment edges are structural, not dependencies, and never count.
    ``seed_paths`` lets scanned-but-literal-free files appear as (0, 0).
    """
    cited: dict[tuple[str, int], set[int]] = defaultdict(set)
    for rel in graph.relationships:
        if rel.kind is RelationshipKind.CONTAINS:
            continue
        location = rel.evidence.location
        cited[(location.path, location.line)].add(location.column)
    totals: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    origins: dict[str, list[int]] = defaultdict(lambda: [0, 0])
    for path in seed_paths:
        totals[path]
    for literal in literals:
        columns = cited.get((literal.path, literal.line), ())
        end = literal.column + len(literal.value)
        bearing = any(literal.column <= col <= end for col in columns)
        for bucket in (totals[literal.path], origins[literal.origin]):
            bucket[0] += 1
            bucket[1] += bearing
    return LiteralClassification(
        files={path: LiteralStats(*counts)
               for path, counts in sorted(totals.items())},
        origins={origin: LiteralStats(*counts)
                 for origin, counts in sorted(origins.items())},
    )
