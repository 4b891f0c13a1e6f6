"""Turn parsed compilation units into graph entities and edges.

Two phases: :func:`declare_units` stores packages/classes/methods/fields
and builds the project-wide symbol index; :func:`emit_oo_edges` then
resolves calls, object creations, inheritance and field accesses against
that index.  Keeping the phases separate lets other analyzers (container
rules, tag extraction) run against a fully declared entity store.

Units lowered from template pages are handled through an
:class:`Attribution` entry: their dependency edges are re-attributed to
the owning page entity and their evidence locations are mapped back to
template positions, so the final graph speaks in page terms.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

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
from webdeps.oo.nodes import (
    Assign,
    BinOp,
    Call,
    ClassDecl,
    CompilationUnit,
    Expr,
    ExprStmt,
    For,
    If,
    Literal,
    LocalVar,
    MethodDecl,
    Name,
    New,
    Return,
    Stmt,
    Unary,
    While,
)

HOLE_MARKER = "⟨hole⟩"

#: Output-stream receivers recognized by declared type (suffix match on
#: the dotted name), in addition to the conventional variable name "out".
WRITER_TYPES = ("PrintWriter", "JspWriter")

WRITE_METHODS = frozenset({"print", "println", "write"})

#: Receiver names reserved by template lowering for custom-tag call
#: sequences (``_tag_1.doStartTag();`` ...).  Those statements document the
#: lifecycle shape of the lowered page; the actual edges are produced by the
#: container layer with page-level sources, so calls through these receivers
#: are never reported here — resolved or not.
TAG_RECEIVER_PATTERN = re.compile(r"_tag_\d+\Z")


def tag_receiver_name(ordinal: int) -> str:
    """Reserved local-variable name for the *ordinal*-th custom tag use."""
    return f"_tag_{ordinal}"


@dataclass(frozen=True)
class Attribution:
    """Re-attribution record for a synthetic (lowered) unit."""

    source_id: str
    origin: dict  # generated line -> (original line, original column)

    def translate(self, line: int, column: int = 1) -> tuple[int, int]:
        if line in self.origin:
            return self.origin[line]
        return (1, 1)


@dataclass(frozen=True)
class Fragment:
    text: str
    line: int
    column: int
    hole: bool = False


@dataclass(frozen=True)
class StringWriteSite:
    """One output-stream write call carrying at least one string literal."""

    owner_class: str
    method_name: str
    method_arity: int
    path: str
    line: int
    fragments: tuple[Fragment, ...]

    @property
    def text(self) -> str:
        return "".join(f.text for f in self.fragments)

    def position_of(self, offset: int) -> tuple[int, int, bool]:
        """Map an offset in the joined text to (line, column, in_hole)."""
        consumed = 0
        for frag in self.fragments:
            end = consumed + len(frag.text)
            if offset < end:
                return (frag.line, frag.column + (offset - consumed), frag.hole)
            consumed = end
        last = self.fragments[-1]
        return (last.line, last.column + len(last.text), last.hole)


@dataclass(frozen=True)
class LookupSite:
    owner_class: str
    method_name: str
    method_arity: int
    path: str
    line: int
    column: int
    value: str


@dataclass
class OoIndex:
    """Project-wide symbol table built from declared units."""

    units: list[CompilationUnit] = field(default_factory=list)
    class_ids: dict[str, str] = field(default_factory=dict)
    class_decls: dict[str, ClassDecl] = field(default_factory=dict)
    unit_of: dict[str, CompilationUnit] = field(default_factory=dict)
    method_ids: dict[tuple[str, str, int], str] = field(default_factory=dict)
    methods_by_name: dict[tuple[str, str], list[tuple[int, str]]] = field(
        default_factory=dict
    )
    field_ids: dict[tuple[str, str], str] = field(default_factory=dict)
    package_ids: dict[str, str] = field(default_factory=dict)

    def resolve_type(self, unit: CompilationUnit, type_name: str) -> str | None:
        """Resolve a type name as written to a project class, or None."""
        name = type_name.replace("[]", "")
        if not name:
            return None
        if "." in name:
            return name if name in self.class_ids else None
        for imported in unit.imports:
            if imported.endswith(f".{name}"):
                return imported if imported in self.class_ids else None
        if unit.package:
            qualified = f"{unit.package}.{name}"
            if qualified in self.class_ids:
                return qualified
        return name if name in self.class_ids else None

    def qualify_hint(self, unit: CompilationUnit, type_name: str) -> str:
        """Best qualified spelling for an unresolved type reference."""
        name = type_name.replace("[]", "")
        if "." in name:
            return name
        for imported in unit.imports:
            if imported.endswith(f".{name}"):
                return imported
        return name

    def find_method(self, qname: str, name: str, arity: int) -> str | None:
        return self.method_ids.get((qname, name, arity))


def declare_units(
    units: list[CompilationUnit],
    graph: DependencyGraph,
    sink: DiagnosticSink,
    attribution: dict[str, Attribution] | None = None,
) -> OoIndex:
    """Store entities for every unit and build the symbol index."""
    attribution = attribution or {}
    index = OoIndex()
    analyzer = Analyzer.OO
    for unit in units:
        index.units.append(unit)
        bound = attribution.get(unit.path)
        unit_analyzer = Analyzer.TEMPLATES if unit.synthetic else analyzer
        parent_id: str | None = None
        if unit.synthetic and bound is not None:
            parent_id = bound.source_id
        elif unit.package:
            parent_id = stable_id(EntityKind.PACKAGE, unit.package, "")
            graph.add_entity(
                Entity(id=parent_id, kind=EntityKind.PACKAGE, name=unit.package),
                analyzer,
            )
            index.package_ids[unit.package] = parent_id
        for decl in unit.classes:
            qname = unit.qualify(decl.name)
            if qname in index.class_ids:
                sink.warn(f"duplicate class {qname}; keeping first declaration",
                          unit.path, decl.line)
                continue
            class_id = stable_id(EntityKind.CLASS_UNIT, qname, unit.path)
            graph.add_entity(
                Entity(
                    id=class_id,
                    kind=EntityKind.CLASS_UNIT,
                    name=qname,
                    parent=parent_id,
                    location=SourceLocation(unit.path, decl.line, 1),
                    synthetic=unit.synthetic,
                ),
                unit_analyzer,
            )
            index.class_ids[qname] = class_id
            index.class_decls[qname] = decl
            index.unit_of[qname] = unit
            for fdecl in decl.fields:
                field_id = stable_id(
                    EntityKind.FIELD_UNIT, f"{qname}.{fdecl.name}", unit.path
                )
                graph.add_entity(
                    Entity(
                        id=field_id,
                        kind=EntityKind.FIELD_UNIT,
                        name=f"{qname}.{fdecl.name}",
                        parent=class_id,
                        location=SourceLocation(unit.path, max(fdecl.line, 1), 1),
                        synthetic=unit.synthetic,
                    ),
                    unit_analyzer,
                )
                index.field_ids[(qname, fdecl.name)] = field_id
            for mdecl in decl.methods:
                mid = stable_id(
                    EntityKind.METHOD_UNIT,
                    method_key(f"{qname}.{mdecl.name}", mdecl.arity),
                    unit.path,
                )
                graph.add_entity(
                    Entity(
                        id=mid,
                        kind=EntityKind.METHOD_UNIT,
                        name=f"{qname}.{mdecl.name}",
                        parent=class_id,
                        location=SourceLocation(unit.path, max(mdecl.line, 1), 1),
                        synthetic=unit.synthetic,
                    ),
                    unit_analyzer,
                )
                index.method_ids[(qname, mdecl.name, mdecl.arity)] = mid
                index.methods_by_name.setdefault((qname, mdecl.name), []).append(
                    (mdecl.arity, mid)
                )
    return index


# -- statement/expression walking --------------------------------------


def iter_statements(body: tuple[Stmt, ...]):
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from iter_statements(stmt.then_body)
            yield from iter_statements(stmt.else_body)
        elif isinstance(stmt, While):
            yield from iter_statements(stmt.body)
        elif isinstance(stmt, For):
            if stmt.init is not None:
                yield from iter_statements((stmt.init,))
            yield from iter_statements(stmt.update)
            yield from iter_statements(stmt.body)


def statement_exprs(stmt: Stmt) -> list[Expr]:
    if isinstance(stmt, LocalVar):
        return [stmt.init] if stmt.init is not None else []
    if isinstance(stmt, Assign):
        return [stmt.target, stmt.value]
    if isinstance(stmt, ExprStmt):
        return [stmt.expr]
    if isinstance(stmt, Return):
        return [stmt.value] if stmt.value is not None else []
    if isinstance(stmt, If):
        return [stmt.condition]
    if isinstance(stmt, While):
        return [stmt.condition]
    if isinstance(stmt, For):
        return [stmt.condition] if stmt.condition is not None else []
    return []


def iter_exprs(expr: Expr):
    yield expr
    if isinstance(expr, Call):
        if expr.receiver is not None:
            yield from iter_exprs(expr.receiver)
        for arg in expr.args:
            yield from iter_exprs(arg)
    elif isinstance(expr, New):
        for arg in expr.args:
            yield from iter_exprs(arg)
    elif isinstance(expr, BinOp):
        yield from iter_exprs(expr.left)
        yield from iter_exprs(expr.right)
    elif isinstance(expr, Unary):
        yield from iter_exprs(expr.operand)


def _method_env(method: MethodDecl) -> dict[str, str]:
    """Map local names (params + declared vars) to type names as written."""
    env: dict[str, str] = {}
    for param in method.params:
        env[param.name] = param.type_name
    for stmt in iter_statements(method.body):
        if isinstance(stmt, LocalVar):
            env[stmt.name] = stmt.type_name
    return env


def method_contexts(unit: CompilationUnit):
    for decl in unit.classes:
        for method in decl.methods:
            yield decl, method


# -- edge emission -----------------------------------------------------


class _EdgeEmitter:
    def __init__(self, index: OoIndex, graph: DependencyGraph, sink: DiagnosticSink,
                 attribution: dict[str, Attribution], externals: str) -> None:
        self.index = index
        self.graph = graph
        self.sink = sink
        self.attribution = attribution
        self.externals = externals

    def run(self) -> None:
        for unit in self.index.units:
            bound = self.attribution.get(unit.path)
            for decl in unit.classes:
                qname = unit.qualify(decl.name)
                if self.index.unit_of.get(qname) is not unit:
                    continue  # shadowed duplicate
                self._class_header_edges(unit, decl, qname, bound)
                self._field_init_edges(unit, decl, qname, bound)
                for method in decl.methods:
                    self._method_edges(unit, decl, qname, method, bound)

    # helpers ---------------------------------------------------------

    def _loc(self, unit: CompilationUnit, bound: Attribution | None,
             line: int, column: int = 1) -> SourceLocation:
        line = max(line, 1)
        column = max(column, 1)
        if bound is not None:
            line, column = bound.translate(line, column)
        return SourceLocation(unit.path, line, column)

    def _add(self, source: str, target: str, kind: RelationshipKind,
             unit: CompilationUnit, bound: Attribution | None,
             line: int, column: int = 1, note: str = "", hint: str = "") -> None:
        analyzer = Analyzer.TEMPLATES if unit.synthetic else Analyzer.OO
        self.graph.add_relationship(
            Relationship(
                source=source,
                target=target,
                kind=kind,
                evidence=Provenance(analyzer, self._loc(unit, bound, line, column),
                                    note),
                target_hint=hint,
            )
        )

    def _source_for(self, qname: str, method: MethodDecl,
                    bound: Attribution | None) -> str | None:
        if bound is not None:
            return bound.source_id
        return self.index.find_method(qname, method.name, method.arity)

    # per-declaration passes -------------------------------------------

    def _class_header_edges(self, unit: CompilationUnit, decl: ClassDecl,
                            qname: str, bound: Attribution | None) -> None:
        class_id = self.index.class_ids[qname]
        if decl.superclass:
            target = self.index.resolve_type(unit, decl.superclass)
            if target:
                self._add(class_id, self.index.class_ids[target],
                          RelationshipKind.EXTENDS, unit, bound, decl.line,
                          note=decl.superclass)
        for iface in decl.interfaces:
            target = self.index.resolve_type(unit, iface)
            if target:
                self._add(class_id, self.index.class_ids[target],
                          RelationshipKind.IMPLEMENTS, unit, bound, decl.line,
                          note=iface)

    def _field_init_edges(self, unit: CompilationUnit, decl: ClassDecl,
                          qname: str, bound: Attribution | None) -> None:
        """Initializer expressions of fields, attributed to the class."""
        source = bound.source_id if bound is not None else self.index.class_ids[qname]
        env: dict[str, str] = {}
        for fdecl in decl.fields:
            if fdecl.init is None:
                continue
            for expr in iter_exprs(fdecl.init):
                if isinstance(expr, Call):
                    self._call_edge(source, expr, unit, decl, qname, env, bound)
                elif isinstance(expr, New):
                    self._new_edge(source, expr, unit, bound)
                elif isinstance(expr, Name):
                    self._field_edge(source, expr, unit, decl, qname, env, bound)

    def _method_edges(self, unit: CompilationUnit, decl: ClassDecl, qname: str,
                      method: MethodDecl, bound: Attribution | None) -> None:
        source = self._source_for(qname, method, bound)
        if source is None:
            return
        env = _method_env(method)
        for stmt in iter_statements(method.body):
            for root in statement_exprs(stmt):
                for expr in iter_exprs(root):
                    if isinstance(expr, Call):
                        self._call_edge(source, expr, unit, decl, qname, env, bound)
                    elif isinstance(expr, New):
                        self._new_edge(source, expr, unit, bound)
                    elif isinstance(expr, Name):
                        self._field_edge(source, expr, unit, decl, qname, env, bound)

    def _call_edge(self, source: str, call: Call, unit: CompilationUnit,
                   decl: ClassDecl, qname: str, env: dict[str, str],
                   bound: Attribution | None) -> None:
        if (isinstance(call.receiver, Name)
                and TAG_RECEIVER_PATTERN.match(call.receiver.text)):
            return
        recv_qname, hint_base = self._resolve_receiver(call.receiver, unit, decl,
                                                       qname, env)
        if recv_qname is None:
            if self.externals == "placeholder" and hint_base:
                key = f"{hint_base}.{call.name}"
                self._add(source, unresolved_ref(key), RelationshipKind.CALLS,
                          unit, bound, call.line, call.column,
                          note=f"call {call.name}/{call.arity}", hint=key)
            return
        candidates = self.index.methods_by_name.get((recv_qname, call.name), [])
        exact = [mid for arity, mid in candidates if arity == call.arity]
        if exact:
            targets = exact
        elif candidates:
            targets = [mid for _, mid in candidates]
            self.sink.warn(
                f"no {call.name}/{call.arity} overload on {recv_qname}; "
                f"linking every same-name candidate",
                unit.path, call.line,
            )
        else:
            key = f"{recv_qname}.{call.name}"
            self._add(source, unresolved_ref(key), RelationshipKind.CALLS,
                      unit, bound, call.line, call.column,
                      note=f"call {call.name}/{call.arity}", hint=key)
            return
        for target in targets:
            self._add(source, target, RelationshipKind.CALLS, unit, bound,
                      call.line, call.column, note=f"call {call.name}/{call.arity}")

    def _new_edge(self, source: str, expr: New, unit: CompilationUnit,
                  bound: Attribution | None) -> None:
        resolved = self.index.resolve_type(unit, expr.type_name)
        if resolved:
            self._add(source, self.index.class_ids[resolved],
                      RelationshipKind.INSTANTIATES, unit, bound,
                      expr.line, expr.column, note=f"new {expr.type_name}")
            return
        hint = self.index.qualify_hint(unit, expr.type_name)
        self._add(source, unresolved_ref(hint), RelationshipKind.INSTANTIATES,
                  unit, bound, expr.line, expr.column,
                  note=f"new {expr.type_name}", hint=hint)

    def _field_edge(self, source: str, name: Name, unit: CompilationUnit,
                    decl: ClassDecl, qname: str, env: dict[str, str],
                    bound: Attribution | None) -> None:
        target = self._resolve_field(name, unit, decl, qname, env)
        if target is None:
            return
        field_qname, field_id = target
        self._add(source, field_id, RelationshipKind.ACCESSES_FIELD, unit, bound,
                  name.line, name.column, note=field_qname)

    def _resolve_field(self, name: Name, unit: CompilationUnit, decl: ClassDecl,
                       qname: str, env: dict[str, str]):
        parts = name.parts
        if parts[0] == "this" and len(parts) == 2:
            simple = parts[1]
            if decl.field_named(simple) is not None:
                return (f"{qname}.{simple}", self.index.field_ids[(qname, simple)])
            return None
        if len(parts) == 1:
            simple = parts[0]
            if simple == "this" or simple in env:
                return None
            if decl.field_named(simple) is not None:
                return (f"{qname}.{simple}", self.index.field_ids[(qname, simple)])
            return None
        if len(parts) == 2 and parts[0] in env:
            owner = self.index.resolve_type(unit, env[parts[0]])
            if owner is None:
                return None
            owner_decl = self.index.class_decls.get(owner)
            if owner_decl is not None and owner_decl.field_named(parts[1]) is not None:
                return (f"{owner}.{parts[1]}", self.index.field_ids[(owner, parts[1])])
        return None

    def _resolve_receiver(self, receiver: Expr | None, unit: CompilationUnit,
                          decl: ClassDecl, qname: str,
                          env: dict[str, str]) -> tuple[str | None, str]:
        """Return (project class qname or None, hint text for externals)."""
        if receiver is None:
            return qname, qname
        if isinstance(receiver, Name):
            text = receiver.text
            if text == "this":
                return qname, qname
            if "." not in text:
                if text in env:
                    resolved = self.index.resolve_type(unit, env[text])
                    return resolved, self.index.qualify_hint(unit, env[text])
                fdecl = decl.field_named(text)
                if fdecl is not None:
                    resolved = self.index.resolve_type(unit, fdecl.type_name)
                    return resolved, self.index.qualify_hint(unit, fdecl.type_name)
                resolved = self.index.resolve_type(unit, text)
                if resolved:
                    return resolved, resolved
                return None, self.index.qualify_hint(unit, text)
            resolved = self.index.resolve_type(unit, text)
            if resolved:
                return resolved, resolved
            return None, text
        if isinstance(receiver, New):
            resolved = self.index.resolve_type(unit, receiver.type_name)
            return resolved, self.index.qualify_hint(unit, receiver.type_name)
        return None, ""


def emit_oo_edges(
    index: OoIndex,
    graph: DependencyGraph,
    sink: DiagnosticSink,
    attribution: dict[str, Attribution] | None = None,
    externals: str = "ignore",
) -> None:
    _EdgeEmitter(index, graph, sink, attribution or {}, externals).run()


def extract_oo_graph(
    units: list[CompilationUnit],
    graph: DependencyGraph,
    sink: DiagnosticSink | None = None,
    attribution: dict[str, Attribution] | None = None,
    externals: str = "ignore",
) -> OoIndex:
    """Declare entities and emit edges in one step."""
    sink = sink if sink is not None else DiagnosticSink()
    index = declare_units(units, graph, sink, attribution)
    emit_oo_edges(index, graph, sink, attribution, externals)
    return index


# -- literal collection ------------------------------------------------


def _is_write_receiver(receiver: Expr | None, env: dict[str, str]) -> bool:
    if not isinstance(receiver, Name):
        return False
    if receiver.text == "out":
        return True
    if "." in receiver.text:
        return False
    declared = env.get(receiver.text, "")
    return declared.split(".")[-1] in WRITER_TYPES


def _fragments(expr: Expr, call_line: int) -> list[Fragment]:
    if isinstance(expr, Literal) and expr.kind == "string":
        return [Fragment(expr.value, expr.line or call_line, max(expr.column, 1))]
    if isinstance(expr, BinOp) and expr.op == "+":
        return _fragments(expr.left, call_line) + _fragments(expr.right, call_line)
    line = getattr(expr, "line", 0) or call_line
    column = max(getattr(expr, "column", 1), 1)
    return [Fragment(HOLE_MARKER, line, column, hole=True)]


def _join_adjacent(fragments: list[Fragment]) -> tuple[Fragment, ...]:
    joined: list[Fragment] = []
    for frag in fragments:
        if joined and not frag.hole and not joined[-1].hole:
            prev = joined.pop()
            joined.append(Fragment(prev.text + frag.text, prev.line, prev.column))
        else:
            joined.append(frag)
    return tuple(joined)


def collect_string_writes(unit: CompilationUnit) -> list[StringWriteSite]:
    """Every output-stream write call that carries a string literal.

    Adjacent literal fragments are joined; non-literal pieces appear as
    hole markers so downstream scanning can tell static text apart from
    computed text.
    """
    sites: list[StringWriteSite] = []
    for decl, method in method_contexts(unit):
        env = _method_env(method)
        for stmt in iter_statements(method.body):
            for root in statement_exprs(stmt):
                for expr in iter_exprs(root):
                    if not isinstance(expr, Call):
                        continue
                    if expr.name not in WRITE_METHODS or len(expr.args) != 1:
                        continue
                    if not _is_write_receiver(expr.receiver, env):
                        continue
                    fragments = _join_adjacent(_fragments(expr.args[0], expr.line))
                    if not any(not f.hole for f in fragments):
                        continue
                    sites.append(
                        StringWriteSite(
                            owner_class=unit.qualify(decl.name),
                            method_name=method.name,
                            method_arity=method.arity,
                            path=unit.path,
                            line=expr.line,
                            fragments=fragments,
                        )
                    )
    return sites


def collect_lookup_sites(unit: CompilationUnit,
                         sink: DiagnosticSink | None = None) -> list[LookupSite]:
    """Every ``lookup(...)`` call with a single literal string argument."""
    sink = sink if sink is not None else DiagnosticSink()
    sites: list[LookupSite] = []
    for decl, method in method_contexts(unit):
        for stmt in iter_statements(method.body):
            for root in statement_exprs(stmt):
                for expr in iter_exprs(root):
                    if not isinstance(expr, Call) or expr.name != "lookup":
                        continue
                    if len(expr.args) != 1:
                        continue
                    arg = expr.args[0]
                    if isinstance(arg, Literal) and arg.kind == "string":
                        sites.append(
                            LookupSite(
                                owner_class=unit.qualify(decl.name),
                                method_name=method.name,
                                method_arity=method.arity,
                                path=unit.path,
                                line=arg.line or expr.line,
                                column=max(arg.column, 1),
                                value=arg.value,
                            )
                        )
                    else:
                        sink.warn("dynamic lookup argument; dependency unknown",
                                  unit.path, expr.line)
    return sites
