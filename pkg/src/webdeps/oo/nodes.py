"""AST node types for the supported object-oriented source subset.

The subset covers what server pages lower to and what hand-written
servlet/tag-handler/bean classes typically contain: class and interface
declarations, fields, methods, local variables, assignments, calls,
object creation, string concatenation, and the basic control statements.
Anything outside the subset is skipped statement-wise by the parser.
"""

from __future__ import annotations

from dataclasses import dataclass, field


# -- expressions ------------------------------------------------------


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Literal(Expr):
    """A literal token; ``kind`` is one of string/char/number/bool/null.

    ``line``/``column`` point at the first content character (after the
    opening quote, for strings) so literal spans can be matched against
    edge evidence later.
    """

    value: str
    kind: str
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class Name(Expr):
    """A possibly dotted name: ``i``, ``this.action``, ``a.b.c``."""

    text: str
    line: int = 0
    column: int = 0

    @property
    def parts(self) -> list[str]:
        return self.text.split(".")


@dataclass(frozen=True)
class Call(Expr):
    receiver: Expr | None
    name: str
    args: tuple[Expr, ...]
    line: int = 0
    column: int = 0

    @property
    def arity(self) -> int:
        return len(self.args)


@dataclass(frozen=True)
class New(Expr):
    type_name: str
    args: tuple[Expr, ...]
    line: int = 0
    column: int = 0


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr
    line: int = 0


@dataclass(frozen=True)
class Unary(Expr):
    op: str
    operand: Expr
    prefix: bool = True
    line: int = 0


# -- statements -------------------------------------------------------


@dataclass(frozen=True)
class Stmt:
    pass


@dataclass(frozen=True)
class LocalVar(Stmt):
    type_name: str
    name: str
    init: Expr | None
    line: int = 0


@dataclass(frozen=True)
class Assign(Stmt):
    target: Expr
    value: Expr
    op: str = "="
    line: int = 0


@dataclass(frozen=True)
class ExprStmt(Stmt):
    expr: Expr
    line: int = 0


@dataclass(frozen=True)
class Return(Stmt):
    value: Expr | None
    line: int = 0


@dataclass(frozen=True)
class If(Stmt):
    condition: Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...] = ()
    line: int = 0


@dataclass(frozen=True)
class While(Stmt):
    condition: Expr
    body: tuple[Stmt, ...]
    line: int = 0


@dataclass(frozen=True)
class For(Stmt):
    init: Stmt | None
    condition: Expr | None
    update: tuple[Stmt, ...]
    body: tuple[Stmt, ...]
    line: int = 0


# -- declarations -----------------------------------------------------


@dataclass(frozen=True)
class AnnotationUse:
    """An annotation with literal-only arguments.

    ``@WebServlet("/hello")`` parses with the positional literal stored
    under the conventional key ``value``; array arguments keep every
    element (``urlPatterns={"/a", "/b"}`` -> ("/a", "/b")).
    """

    name: str
    arguments: dict[str, tuple[str, ...]] = field(default_factory=dict)
    line: int = 0

    def first(self, key: str = "value") -> str | None:
        values = self.arguments.get(key)
        return values[0] if values else None


@dataclass(frozen=True)
class Param:
    type_name: str
    name: str


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type_name: str
    init: Expr | None = None
    line: int = 0


@dataclass(frozen=True)
class MethodDecl:
    name: str
    params: tuple[Param, ...]
    body: tuple[Stmt, ...]
    return_type: str = "void"
    is_constructor: bool = False
    line: int = 0

    @property
    def arity(self) -> int:
        return len(self.params)


@dataclass(frozen=True)
class ClassDecl:
    name: str
    superclass: str | None = None
    interfaces: tuple[str, ...] = ()
    annotations: tuple[AnnotationUse, ...] = ()
    fields: tuple[FieldDecl, ...] = ()
    methods: tuple[MethodDecl, ...] = ()
    is_interface: bool = False
    is_public: bool = False
    line: int = 0

    def field_named(self, name: str) -> FieldDecl | None:
        for decl in self.fields:
            if decl.name == name:
                return decl
        return None


@dataclass(frozen=True)
class CompilationUnit:
    path: str
    package: str = ""
    imports: tuple[str, ...] = ()
    classes: tuple[ClassDecl, ...] = ()
    synthetic: bool = False

    def qualify(self, simple_name: str) -> str:
        return f"{self.package}.{simple_name}" if self.package else simple_name
