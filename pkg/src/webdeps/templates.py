"""Segmentation and lowering of server template pages.

Template pages interleave markup with embedded code.  This module splits a
page into typed nodes (scriptlets, declarations, printed expressions, bean
actions, custom tags, directives, comments, raw markup) and lowers the
result into a synthetic servlet-style class that the object-oriented
frontend can parse, so dependencies buried in page code surface as ordinary
graph edges.  An origin map ties every generated line back to the template
position it came from.

Lowering rules, in the order they apply to each node:

* scriptlet code is spliced into the ``service`` body verbatim;
* declarations are spliced at class level (fields and helper methods);
* printed expressions join the markup of their source line into a single
  ``out.print(...)`` with the expression inlined between the literals;
* ``useBean``/``getProperty``/``setProperty`` become an instantiation, a
  getter call, and a setter call on the bean variable;
* custom tags become an attribute-setter sequence followed by
  ``doStartTag()``/``doEndTag()`` on a reserved ``_tag_N`` receiver;
* everything else is written to the output stream as string literals,
  one ``out.print`` per markup line, indentation stripped and double
  quotes folded to single quotes;
* a page containing no code at all is written as one verbatim
  ``out.write`` of the whole file, so concatenating its write literals
  reproduces the page byte for byte.
"""

from __future__ import annotations

import json
import re
from bisect import bisect_right
from dataclasses import dataclass, replace
from enum import Enum

from webdeps.diagnostics import DiagnosticSink
from webdeps.graph import (
    Analyzer,
    DependencyGraph,
    Entity,
    EntityKind,
    SourceLocation,
    stable_id,
)
from webdeps.oo.extract import Attribution, tag_receiver_name
from webdeps.oo.nodes import CompilationUnit
from webdeps.oo.parser import OoSyntaxError, parse_unit


class UnterminatedConstructError(Exception):
    """An opening ``<%`` (or a variant) has no matching ``%>``."""

    def __init__(self, message: str, line: int) -> None:
        super().__init__(message)
        self.line = line


class LoweringError(Exception):
    """A page could not be lowered at all (normally degraded instead)."""


class NodeKind(str, Enum):
    SCRIPTLET = "Scriptlet"
    DECLARATION = "Declaration"
    EXPRESSION = "Expression"
    USE_BEAN = "UseBean"
    GET_PROPERTY = "GetProperty"
    SET_PROPERTY = "SetProperty"
    CUSTOM_TAG = "CustomTag"
    DIRECTIVE = "Directive"
    RAW_MARKUP = "RawMarkup"
    COMMENT = "Comment"


#: Node kinds that embed page-author code (drives the multilanguage-page
#: statistic: a page counts as code-bearing when it has at least one).
SCRIPT_KINDS = frozenset(
    (NodeKind.SCRIPTLET, NodeKind.DECLARATION, NodeKind.EXPRESSION)
)

#: Node kinds that contribute statements or members to the lowered class.
#: A page with none of these takes the verbatim single-write path.
_CODE_KINDS = SCRIPT_KINDS | frozenset(
    (
        NodeKind.USE_BEAN,
        NodeKind.GET_PROPERTY,
        NodeKind.SET_PROPERTY,
        NodeKind.CUSTOM_TAG,
    )
)


@dataclass(frozen=True)
class TagAttribute:
    """One ``name="value"`` pair with the position of the value text."""

    name: str
    value: str
    line: int
    column: int


@dataclass(frozen=True)
class TemplateNode:
    kind: NodeKind
    text: str
    body: str
    name: str
    attributes: tuple[TagAttribute, ...]
    line: int
    column: int
    closing: bool = False
    self_closing: bool = False

    def attr(self, name: str) -> str | None:
        for attribute in self.attributes:
            if attribute.name == name:
                return attribute.value
        return None

    def attribute(self, name: str) -> TagAttribute | None:
        for attribute in self.attributes:
            if attribute.name == name:
                return attribute
        return None


@dataclass(frozen=True)
class TemplatePage:
    path: str
    text: str
    nodes: tuple[TemplateNode, ...]

    @property
    def script_bearing(self) -> bool:
        """True when the page embeds code (scriptlet/declaration/expression)."""
        return any(node.kind in SCRIPT_KINDS for node in self.nodes)

    @property
    def code_free(self) -> bool:
        """True when lowering takes the verbatim single-write path."""
        return all(node.kind not in _CODE_KINDS for node in self.nodes)


@dataclass(frozen=True)
class LoweredUnit:
    """A synthetic servlet-style unit plus the map back to page positions."""

    unit: CompilationUnit
    source: str
    origin: dict[int, tuple[int, int]]
    page_path: str
    page_id: str
    class_name: str
    degraded: bool = False


class _LineIndex:
    """Offset -> (1-based line, 1-based column) translation for one text."""

    def __init__(self, text: str) -> None:
        self._starts = [0]
        start = 0
        while True:
            nl = text.find("\n", start)
            if nl < 0:
                break
            start = nl + 1
            self._starts.append(start)

    def locate(self, offset: int) -> tuple[int, int]:
        row = bisect_right(self._starts, offset) - 1
        return row + 1, offset - self._starts[row] + 1


_ATTR = re.compile(r"([\w:.-]+)\s*=\s*(\"([^\"]*)\"|'([^']*)')")

# Attribute soup inside a tag: quoted strings may contain ">".
_ATTR_CHUNK = "(?:\"[^\"]*\"|'[^']*'|[^>\"'])*?"

_CONSTRUCT = re.compile(
    "|".join(
        (
            r"<%--(?P<comment>.*?)--%>",
            r"<%@(?P<directive>.*?)%>",
            r"<%!(?P<declaration>.*?)%>",
            r"<%=(?P<expression>.*?)%>",
            r"<%(?![-@!=])(?P<scriptlet>.*?)%>",
            rf"<jsp:directive\.(?P<xdname>[\w.]+)(?P<xdattrs>{_ATTR_CHUNK})\s*/?>",
            rf"<jsp:(?P<action>useBean|getProperty|setProperty)"
            rf"(?P<aattrs>{_ATTR_CHUNK})\s*/?>",
            rf"<(?!jsp:)(?P<prefix>[A-Za-z_][\w.-]*):(?P<tag>[\w.-]+)"
            rf"(?P<tattrs>{_ATTR_CHUNK})\s*(?P<selfclose>/?)>",
            r"</(?!jsp:)(?P<cprefix>[A-Za-z_][\w.-]*):(?P<ctag>[\w.-]+)\s*>",
        )
    ),
    re.DOTALL,
)

_ACTION_KINDS = {
    "useBean": NodeKind.USE_BEAN,
    "getProperty": NodeKind.GET_PROPERTY,
    "setProperty": NodeKind.SET_PROPERTY,
}

_DIRECTIVE_NAME = re.compile(r"\s*([\w.]+)")


def capitalize_property(name: str) -> str:
    """Bean-property to accessor-suffix capitalization (``url`` -> ``Url``)."""
    return name[:1].upper() + name[1:]


def _parse_attrs(chunk: str, base_offset: int, index: _LineIndex
                 ) -> tuple[TagAttribute, ...]:
    found = []
    for m in _ATTR.finditer(chunk):
        value = m.group(3) if m.group(3) is not None else m.group(4)
        line, column = index.locate(base_offset + m.start(2) + 1)
        found.append(TagAttribute(name=m.group(1), value=value,
                                  line=line, column=column))
    return tuple(found)


def parse_template(text: str, path: str) -> TemplatePage:
    """Segment *text* into template nodes covering the whole file.

    Unrecognized stretches become raw markup; the only failure mode is an
    opening script delimiter that never closes.
    """
    index = _LineIndex(text)
    nodes: list[TemplateNode] = []
    pos = 0
    for m in _CONSTRUCT.finditer(text):
        if m.start() > pos:
            nodes.append(_gap_node(text, pos, m.start(), index))
        nodes.append(_construct_node(m, index))
        pos = m.end()
    if pos < len(text):
        nodes.append(_gap_node(text, pos, len(text), index))
    return TemplatePage(path=path, text=text, nodes=tuple(nodes))


def _gap_node(text: str, start: int, end: int, index: _LineIndex
              ) -> TemplateNode:
    gap = text[start:end]
    opener = gap.find("<%")
    if opener >= 0:
        line, _ = index.locate(start + opener)
        raise UnterminatedConstructError(
            "script delimiter '<%' is never closed", line
        )
    line, column = index.locate(start)
    return TemplateNode(
        kind=NodeKind.RAW_MARKUP, text=gap, body=gap, name="",
        attributes=(), line=line, column=column,
    )


def _construct_node(m: re.Match, index: _LineIndex) -> TemplateNode:
    line, column = index.locate(m.start())
    groups = m.groupdict()

    def node(kind: NodeKind, *, body: str = "", name: str = "",
             attributes: tuple[TagAttribute, ...] = (),
             closing: bool = False, self_closing: bool = False
             ) -> TemplateNode:
        return TemplateNode(
            kind=kind, text=m.group(0), body=body, name=name,
            attributes=attributes, line=line, column=column,
            closing=closing, self_closing=self_closing,
        )

    if groups["comment"] is not None:
        return node(NodeKind.COMMENT, body=groups["comment"])
    if groups["directive"] is not None:
        body = groups["directive"]
        name_match = _DIRECTIVE_NAME.match(body)
        name = name_match.group(1) if name_match else ""
        rest_offset = m.start("directive") + (name_match.end() if name_match else 0)
        attrs = _parse_attrs(body[name_match.end():] if name_match else body,
                             rest_offset, index)
        return node(NodeKind.DIRECTIVE, body=body, name=name, attributes=attrs)
    if groups["declaration"] is not None:
        return node(NodeKind.DECLARATION, body=groups["declaration"])
    if groups["expression"] is not None:
        return node(NodeKind.EXPRESSION, body=groups["expression"])
    if groups["scriptlet"] is not None:
        return node(NodeKind.SCRIPTLET, body=groups["scriptlet"])
    if groups["xdname"] is not None:
        attrs = _parse_attrs(groups["xdattrs"], m.start("xdattrs"), index)
        return node(NodeKind.DIRECTIVE, body=groups["xdattrs"],
                    name=groups["xdname"], attributes=attrs)
    if groups["action"] is not None:
        attrs = _parse_attrs(groups["aattrs"], m.start("aattrs"), index)
        return node(_ACTION_KINDS[groups["action"]], body=groups["aattrs"],
                    name=f"jsp:{groups['action']}", attributes=attrs)
    if groups["prefix"] is not None:
        attrs = _parse_attrs(groups["tattrs"], m.start("tattrs"), index)
        return node(
            NodeKind.CUSTOM_TAG, body=groups["tattrs"],
            name=f"{groups['prefix']}:{groups['tag']}", attributes=attrs,
            self_closing=groups["selfclose"] == "/",
        )
    return node(NodeKind.CUSTOM_TAG,
                name=f"{groups['cprefix']}:{groups['ctag']}", closing=True)


# -- lowering ---------------------------------------------------------------

def class_name_for(path: str, taken: set[str] | frozenset[str] = frozenset()
                   ) -> str:
    """Deterministic class name for a page path (``web/index.jsp`` ->
    ``web_index_jsp``), suffixed on collision."""
    stem = re.sub(r"[^0-9A-Za-z]", "_", path).strip("_") or "page"
    if stem[0].isdigit():
        stem = "_" + stem
    if stem not in taken:
        return stem
    ordinal = 2
    while f"{stem}_{ordinal}" in taken:
        ordinal += 1
    return f"{stem}_{ordinal}"


def page_entity_id(path: str) -> str:
    return stable_id(EntityKind.SERVER_PAGE, path, path)


def _java_str(value: str) -> str:
    return json.dumps(value, ensure_ascii=False)


@dataclass
class _Hole:
    expr: str


class _MarkupBuffer:
    """Markup text and inline expressions grouped by template line.

    Flushing renders one ``out.print`` per buffered line: indentation and
    trailing space are stripped, double quotes become single quotes, and
    expressions are concatenated between the literal pieces.
    """

    def __init__(self) -> None:
        self._lines: list[tuple[int, int, list[str | _Hole]]] = []

    def _entry(self, line: int, column: int) -> list[str | _Hole]:
        if self._lines and self._lines[-1][0] == line:
            return self._lines[-1][2]
        pieces: list[str | _Hole] = []
        self._lines.append((line, column, pieces))
        return pieces

    def add_text(self, text: str, line: int, column: int) -> None:
        for offset, segment in enumerate(text.split("\n")):
            if not segment:
                continue
            seg_line = line + offset
            seg_col = column if offset == 0 else 1
            self._entry(seg_line, seg_col).append(segment)

    def add_hole(self, expr: str, line: int, column: int) -> None:
        self._entry(line, column).append(_Hole(expr))

    def flush(self, emit) -> None:
        for line, column, pieces in self._lines:
            rendered = self._render(pieces)
            if rendered:
                emit(f"out.print({' + '.join(rendered)});", line, column)
        self._lines.clear()

    @staticmethod
    def _render(pieces: list[str | _Hole]) -> list[str]:
        trimmed: list[str | _Hole] = list(pieces)
        if trimmed and isinstance(trimmed[0], str):
            trimmed[0] = trimmed[0].lstrip()
        if trimmed and isinstance(trimmed[-1], str):
            trimmed[-1] = trimmed[-1].rstrip()
        rendered = []
        for piece in trimmed:
            if isinstance(piece, _Hole):
                rendered.append(piece.expr)
            elif piece:
                rendered.append(_java_str(piece.replace('"', "'")))
        return rendered


class _Lowerer:
    def __init__(self, page: TemplatePage, sink: DiagnosticSink) -> None:
        self.page = page
        self.sink = sink
        self.members: list[tuple[str, tuple[int, int]]] = []
        self.statements: list[tuple[str, tuple[int, int]]] = []
        self._buffer = _MarkupBuffer()
        self._tag_count = 0
        self._open_tags: list[tuple[str, str]] = []

    def run(self) -> None:
        if self.page.code_free:
            if self.page.text:
                self.statements.append(
                    (f"out.write({_java_str(self.page.text)});", (1, 1))
                )
            return
        for node in self.page.nodes:
            handler = self._HANDLERS[node.kind]
            handler(self, node)
        self._buffer.flush(self._statement)

    # -- emission helpers ---------------------------------------------

    def _statement(self, text: str, line: int, column: int = 1) -> None:
        self.statements.append((text, (line, column)))

    def _flush(self) -> None:
        self._buffer.flush(self._statement)

    def _splice(self, body: str, node: TemplateNode,
                into: list[tuple[str, tuple[int, int]]]) -> None:
        for offset, raw in enumerate(body.split("\n")):
            stripped = raw.strip()
            if not stripped:
                continue
            indent = len(raw) - len(raw.lstrip())
            if offset == 0:
                position = (node.line, node.column + 2 + indent)
            else:
                position = (node.line + offset, indent + 1)
            into.append((stripped, position))

    # -- node handlers --------------------------------------------------

    def _markup(self, node: TemplateNode) -> None:
        self._buffer.add_text(node.text, node.line, node.column)

    def _silent(self, node: TemplateNode) -> None:
        pass

    def _scriptlet(self, node: TemplateNode) -> None:
        self._flush()
        self._splice(node.body, node, self.statements)

    def _declaration(self, node: TemplateNode) -> None:
        self._splice(node.body, node, self.members)

    def _expression(self, node: TemplateNode) -> None:
        self._buffer.add_hole(node.body.strip(), node.line, node.column)

    def _use_bean(self, node: TemplateNode) -> None:
        self._flush()
        bean = node.attr("id")
        type_name = node.attr("class") or node.attr("type")
        if not bean or not type_name:
            self.sink.warn("bean action without id/class; ignored",
                           self.page.path, node.line)
            return
        self._statement(f"{type_name} {bean} = new {type_name}();",
                        node.line, node.column)

    def _get_property(self, node: TemplateNode) -> None:
        self._flush()
        bean = node.attr("name")
        prop = node.attr("property")
        if not bean or not prop:
            self.sink.warn("property read without name/property; ignored",
                           self.page.path, node.line)
            return
        accessor = f"get{capitalize_property(prop)}"
        self._statement(f"out.print({bean}.{accessor}());",
                        node.line, node.column)

    def _set_property(self, node: TemplateNode) -> None:
        self._flush()
        bean = node.attr("name")
        prop = node.attr("property")
        if not bean or not prop:
            self.sink.warn("property write without name/property; ignored",
                           self.page.path, node.line)
            return
        value = node.attr("value")
        if value is None:
            argument = f"request.getParameter({_java_str(prop)})"
        else:
            argument = _java_str(value)
        self._statement(
            f"{bean}.set{capitalize_property(prop)}({argument});",
            node.line, node.column,
        )

    def _custom_tag(self, node: TemplateNode) -> None:
        self._flush()
        if node.closing:
            receiver = self._pop_tag(node.name)
            if receiver is None:
                self.sink.warn(f"closing tag </{node.name}> was never opened",
                               self.page.path, node.line)
                return
            self._statement(f"{receiver}.doEndTag();", node.line, node.column)
            return
        self._tag_count += 1
        receiver = tag_receiver_name(self._tag_count)
        for attribute in node.attributes:
            if not attribute.name.isidentifier():
                continue
            setter = f"set{capitalize_property(attribute.name)}"
            self._statement(
                f"{receiver}.{setter}({_java_str(attribute.value)});",
                node.line, node.column,
            )
        self._statement(f"{receiver}.doStartTag();", node.line, node.column)
        if node.self_closing:
            self._statement(f"{receiver}.doEndTag();", node.line, node.column)
        else:
            self._open_tags.append((node.name, receiver))

    def _pop_tag(self, name: str) -> str | None:
        for position in range(len(self._open_tags) - 1, -1, -1):
            if self._open_tags[position][0] == name:
                return self._open_tags.pop(position)[1]
        return None

    _HANDLERS = {
        NodeKind.RAW_MARKUP: _markup,
        NodeKind.COMMENT: _silent,
        NodeKind.DIRECTIVE: _silent,
        NodeKind.SCRIPTLET: _scriptlet,
        NodeKind.DECLARATION: _declaration,
        NodeKind.EXPRESSION: _expression,
        NodeKind.USE_BEAN: _use_bean,
        NodeKind.GET_PROPERTY: _get_property,
        NodeKind.SET_PROPERTY: _set_property,
        NodeKind.CUSTOM_TAG: _custom_tag,
    }


def _assemble(class_name: str,
              members: list[tuple[str, tuple[int, int]]],
              statements: list[tuple[str, tuple[int, int]]],
              ) -> tuple[str, dict[int, tuple[int, int]]]:
    lines: list[str] = []
    origin: dict[int, tuple[int, int]] = {}

    def put(text: str, position: tuple[int, int] = (1, 1)) -> None:
        lines.append(text)
        origin[len(lines)] = position

    put(f"public class {class_name} extends HttpJspBase {{")
    for text, position in members:
        put(text, position)
    put("public void service(HttpServletRequest request, "
        "HttpServletResponse response) {")
    put("JspWriter out = pageContext.getOut();")
    for text, position in statements:
        put(text, position)
    put("}")
    put("}")
    return "\n".join(lines) + "\n", origin


def lower_page(page: TemplatePage, sink: DiagnosticSink | None = None,
               class_name: str | None = None) -> LoweredUnit:
    """Lower a parsed page into a synthetic unit with an origin map.

    A page whose embedded code cannot be assembled into a parsable class
    (typically unbalanced braces split across scriptlets) degrades to the
    verbatim single-write form with an error diagnostic instead of failing.
    """
    sink = sink if sink is not None else DiagnosticSink()
    name = class_name or class_name_for(page.path)
    lowerer = _Lowerer(page, sink)
    lowerer.run()
    source, origin = _assemble(name, lowerer.members, lowerer.statements)
    degraded = False
    unit = _parse_lowered(source, page.path, origin, sink)
    if unit is None:
        degraded = True
        fallback = (
            [(f"out.write({_java_str(page.text)});", (1, 1))]
            if page.text else []
        )
        source, origin = _assemble(name, [], fallback)
        unit = _parse_lowered(source, page.path, origin, sink)
        if unit is None:  # pragma: no cover - the fallback always parses
            raise LoweringError(f"cannot lower {page.path}")
    return LoweredUnit(
        unit=replace(unit, synthetic=True),
        source=source,
        origin=origin,
        page_path=page.path,
        page_id=page_entity_id(page.path),
        class_name=name,
        degraded=degraded,
    )


def _parse_lowered(source: str, path: str, origin: dict[int, tuple[int, int]],
                   sink: DiagnosticSink) -> CompilationUnit | None:
    inner = DiagnosticSink()
    try:
        unit = parse_unit(source, path, inner)
    except OoSyntaxError as exc:
        line, _ = origin.get(exc.line, (1, 1))
        sink.error(f"embedded code does not assemble into a class: {exc}",
                   path, line)
        return None
    for item in inner:
        line, _ = origin.get(item.line, (1, 1))
        sink.extend([replace(item, line=line)])
    return unit


def register_page(graph: DependencyGraph, lowered: LoweredUnit) -> Attribution:
    """Add the page entity and return the re-attribution record that makes
    the lowered unit's edges speak in page terms."""
    graph.add_entity(
        Entity(
            id=lowered.page_id,
            kind=EntityKind.SERVER_PAGE,
            name=lowered.page_path,
            parent=None,
            location=SourceLocation(lowered.page_path, 1, 1),
        ),
        analyzer=Analyzer.TEMPLATES,
    )
    return Attribution(source_id=lowered.page_id, origin=dict(lowered.origin))
