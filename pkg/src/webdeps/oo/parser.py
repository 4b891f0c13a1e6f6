"""Lexer and recursive-descent parser for the supported source subset.

Structure-level problems (no class, broken headers, unbalanced braces)
raise :class:`OoSyntaxError`.  Inside method bodies the parser recovers:
an unsupported or malformed statement is skipped to the next statement
boundary and reported through the diagnostic sink, so one exotic
construct never hides the rest of a unit.
"""

from __future__ import annotations

from typing import NamedTuple

from webdeps.diagnostics import DiagnosticSink
from webdeps.oo.nodes import (
    AnnotationUse,
    Assign,
    BinOp,
    Call,
    ClassDecl,
    CompilationUnit,
    Expr,
    ExprStmt,
    FieldDecl,
    For,
    If,
    Literal,
    LocalVar,
    MethodDecl,
    Name,
    New,
    Param,
    Return,
    Stmt,
    Unary,
    While,
)


class OoSyntaxError(Exception):
    def __init__(self, message: str, line: int = 0) -> None:
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


class _Unsupported(Exception):
    """Internal: statement uses a construct outside the subset."""

    def __init__(self, what: str, line: int) -> None:
        super().__init__(what)
        self.what = what
        self.line = line


class Token(NamedTuple):
    kind: str  # ident | keyword | string | char | number | op | eof
    text: str
    line: int
    column: int


KEYWORDS = frozenset(
    """
    abstract assert boolean break byte case catch char class const continue
    default do double else enum extends final finally float for goto if
    implements import instanceof int interface long native new package
    private protected public return short static strictfp super switch
    synchronized this throw throws transient try void volatile while
    true false null
    """.split()
)

MODIFIERS = frozenset(
    "public private protected static final abstract native synchronized "
    "transient volatile strictfp".split()
)

_TWO_CHAR_OPS = frozenset(
    ["==", "!=", "<=", ">=", "&&", "||", "++", "--", "+=", "-=", "*=", "/=",
     "%=", "->", "::", "<<", ">>"]
)

_ESCAPES = {
    "n": "\n", "t": "\t", "r": "\r", "b": "\b", "f": "\f",
    '"': '"', "'": "'", "\\": "\\", "/": "/", "0": "\0",
}


class Lexer:
    def __init__(self, text: str) -> None:
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1

    def tokens(self) -> list[Token]:
        out = []
        while True:
            tok = self._next_token()
            out.append(tok)
            if tok.kind == "eof":
                return out

    def _advance(self, count: int = 1) -> None:
        for _ in range(count):
            if self.pos >= len(self.text):
                return
            if self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def _peek(self, offset: int = 0) -> str:
        index = self.pos + offset
        return self.text[index] if index < len(self.text) else ""

    def _skip_trivia(self) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in " \t\r\n":
                self._advance()
            elif ch == "/" and self._peek(1) == "/":
                while self.pos < len(self.text) and self.text[self.pos] != "\n":
                    self._advance()
            elif ch == "/" and self._peek(1) == "*":
                start_line = self.line
                self._advance(2)
                while self.pos < len(self.text):
                    if self.text[self.pos] == "*" and self._peek(1) == "/":
                        self._advance(2)
                        break
                    self._advance()
                else:
                    raise OoSyntaxError("unterminated comment", start_line)
            else:
                return

    def _next_token(self) -> Token:
        self._skip_trivia()
        if self.pos >= len(self.text):
            return Token("eof", "", self.line, self.col)
        line, col = self.line, self.col
        ch = self.text[self.pos]
        if ch.isalpha() or ch in "_$":
            start = self.pos
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] in "_$"
            ):
                self._advance()
            word = self.text[start:self.pos]
            kind = "keyword" if word in KEYWORDS else "ident"
            return Token(kind, word, line, col)
        if ch.isdigit() or (ch == "." and self._peek(1).isdigit()):
            start = self.pos
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] in "._xX"
            ):
                self._advance()
            return Token("number", self.text[start:self.pos], line, col)
        if ch == '"':
            return self._string('"', "string", line, col)
        if ch == "'":
            return self._string("'", "char", line, col)
        two = self.text[self.pos:self.pos + 2]
        if two in _TWO_CHAR_OPS:
            self._advance(2)
            return Token("op", two, line, col)
        self._advance()
        return Token("op", ch, line, col)

    def _string(self, quote: str, kind: str, line: int, col: int) -> Token:
        self._advance()  # opening quote
        parts: list[str] = []
        while True:
            if self.pos >= len(self.text) or self.text[self.pos] == "\n":
                raise OoSyntaxError("unterminated string literal", line)
            ch = self.text[self.pos]
            if ch == quote:
                self._advance()
                # Token position points at the first content character.
                return Token(kind, "".join(parts), line, col + 1)
            if ch == "\\":
                esc = self._peek(1)
                if esc == "u":
                    hex_digits = self.text[self.pos + 2:self.pos + 6]
                    try:
                        parts.append(chr(int(hex_digits, 16)))
                    except ValueError:
                        parts.append("u")
                    self._advance(6)
                    continue
                parts.append(_ESCAPES.get(esc, esc))
                self._advance(2)
                continue
            parts.append(ch)
            self._advance()


class Parser:
    def __init__(self, text: str, path: str, sink: DiagnosticSink | None = None) -> None:
        self.path = path
        self.sink = sink if sink is not None else DiagnosticSink()
        self.toks = Lexer(text).tokens()
        self.index = 0

    # -- token helpers --------------------------------------------------

    def _peek(self, offset: int = 0) -> Token:
        index = min(self.index + offset, len(self.toks) - 1)
        return self.toks[index]

    def _next(self) -> Token:
        tok = self.toks[self.index]
        if tok.kind != "eof":
            self.index += 1
        return tok

    def _at(self, text: str) -> bool:
        return self._peek().text == text

    def _accept(self, text: str) -> bool:
        if self._at(text):
            self._next()
            return True
        return False

    def _expect(self, text: str) -> Token:
        tok = self._peek()
        if tok.text != text:
            raise OoSyntaxError(f"expected {text!r}, found {tok.text!r}", tok.line)
        return self._next()

    def _expect_ident(self) -> Token:
        tok = self._peek()
        if tok.kind != "ident":
            raise OoSyntaxError(f"expected identifier, found {tok.text!r}", tok.line)
        return self._next()

    # -- unit structure ---------------------------------------------------

    def parse_unit(self) -> CompilationUnit:
        package = ""
        imports: list[str] = []
        if self._at("package"):
            self._next()
            package = self._dotted_name()
            self._expect(";")
        while self._at("import"):
            self._next()
            if self._at("static"):
                self._next()
            imports.append(self._dotted_name(allow_star=True))
            self._expect(";")
        classes: list[ClassDecl] = []
        while self._peek().kind != "eof":
            if self._at(";"):
                self._next()
                continue
            classes.append(self._type_decl())
        if not classes:
            raise OoSyntaxError("no class or interface declaration found", 1)
        public = [c for c in classes if c.is_public]
        if len(public) > 1:
            self.sink.warn(
                "more than one public type in unit", self.path, public[1].line
            )
        return CompilationUnit(
            path=self.path,
            package=package,
            imports=tuple(imports),
            classes=tuple(classes),
        )

    def _dotted_name(self, allow_star: bool = False) -> str:
        # Only swallow a "." that actually continues the name; this keeps
        # "String... args" intact (the dots belong to the parameter syntax).
        parts = [self._expect_ident().text]
        while self._at(".") and (
            self._peek(1).kind == "ident"
            or (allow_star and self._peek(1).text == "*")
        ):
            self._next()
            if self._at("*"):
                self._next()
                parts.append("*")
                break
            parts.append(self._expect_ident().text)
        return ".".join(parts)

    def _annotations(self) -> list[AnnotationUse]:
        found = []
        while self._at("@"):
            self._next()
            tok = self._expect_ident()
            name = tok.text
            while self._at("."):
                self._next()
                name += "." + self._expect_ident().text
            arguments: dict[str, tuple[str, ...]] = {}
            if self._accept("("):
                arguments = self._annotation_args(tok.line)
                self._expect(")")
            found.append(AnnotationUse(name=name, arguments=arguments, line=tok.line))
        return found

    def _annotation_args(self, line: int) -> dict[str, tuple[str, ...]]:
        args: dict[str, tuple[str, ...]] = {}
        if self._at(")"):
            return args
        while True:
            key = "value"
            if self._peek().kind == "ident" and self._peek(1).text == "=":
                key = self._next().text
                self._next()
            values = self._annotation_value(line)
            if values is not None:
                args[key] = values
            if not self._accept(","):
                return args

    def _annotation_value(self, line: int) -> tuple[str, ...] | None:
        if self._peek().kind in ("string", "number"):
            return (self._next().text,)
        if self._accept("{"):
            values = []
            while not self._at("}"):
                if self._peek().kind in ("string", "number"):
                    values.append(self._next().text)
                else:
                    self._skip_balanced("{", "}", consume_open=False)
                    self.sink.warn("non-literal annotation argument ignored",
                                   self.path, line)
                    return None
                if not self._accept(","):
                    break
            self._expect("}")
            return tuple(values)
        # Constant reference, class literal, nested annotation: not literal.
        depth = 0
        while not (depth == 0 and self._peek().text in (",", ")")):
            tok = self._next()
            if tok.kind == "eof":
                raise OoSyntaxError("unterminated annotation", line)
            if tok.text in "({":
                depth += 1
            elif tok.text in ")}":
                depth -= 1
        self.sink.warn("non-literal annotation argument ignored", self.path, line)
        return None

    def _modifiers(self) -> set[str]:
        seen = set()
        while self._peek().text in MODIFIERS:
            seen.add(self._next().text)
        return seen

    def _type_decl(self) -> ClassDecl:
        annotations = self._annotations()
        mods = self._modifiers()
        tok = self._peek()
        if tok.text not in ("class", "interface"):
            raise OoSyntaxError(
                f"expected class or interface declaration, found {tok.text!r}",
                tok.line,
            )
        is_interface = self._next().text == "interface"
        name_tok = self._expect_ident()
        self._skip_generics()
        superclass = None
        interfaces: list[str] = []
        if self._accept("extends"):
            superclass = self._type_ref()
            while self._accept(","):  # interfaces extend several
                interfaces.append(self._type_ref())
        if self._accept("implements"):
            interfaces.append(self._type_ref())
            while self._accept(","):
                interfaces.append(self._type_ref())
        self._expect("{")
        fields: list[FieldDecl] = []
        methods: list[MethodDecl] = []
        while not self._at("}"):
            if self._peek().kind == "eof":
                raise OoSyntaxError("unterminated type body", name_tok.line)
            self._member(name_tok.text, fields, methods)
        self._expect("}")
        return ClassDecl(
            name=name_tok.text,
            superclass=superclass,
            interfaces=tuple(interfaces),
            annotations=tuple(annotations),
            fields=tuple(fields),
            methods=tuple(methods),
            is_interface=is_interface,
            is_public="public" in mods,
            line=name_tok.line,
        )

    def _member(self, class_name: str,
                fields: list[FieldDecl], methods: list[MethodDecl]) -> None:
        self._annotations()
        self._modifiers()
        tok = self._peek()
        if self._at(";"):
            self._next()
            return
        if tok.text in ("class", "interface", "enum"):
            self.sink.warn("nested type skipped", self.path, tok.line)
            while not self._at("{"):
                if self._next().kind == "eof":
                    raise OoSyntaxError("unterminated nested type", tok.line)
            self._skip_balanced("{", "}")
            return
        if tok.text == "{":  # instance or static initializer block
            self.sink.warn("initializer block skipped", self.path, tok.line)
            self._skip_balanced("{", "}")
            return
        if tok.kind == "ident" and tok.text == class_name and self._peek(1).text == "(":
            name_tok = self._next()
            methods.append(self._method_rest("void", name_tok, constructor=True))
            return
        type_name = self._type_ref()
        name_tok = self._expect_ident()
        if self._at("("):
            methods.append(self._method_rest(type_name, name_tok))
            return
        while True:
            init = None
            if self._accept("="):
                init = self._guarded_init(name_tok.line)
            fields.append(FieldDecl(name=name_tok.text, type_name=type_name,
                                    init=init, line=name_tok.line))
            if self._accept(","):
                name_tok = self._expect_ident()
                continue
            self._expect(";")
            return

    def _guarded_init(self, line: int) -> Expr | None:
        """Parse a field initializer, degrading to None when unsupported."""
        try:
            return self._expression()
        except _Unsupported as exc:
            self.sink.warn(f"unsupported initializer skipped ({exc.what})",
                           self.path, exc.line)
            while self._peek().text not in (";", ",") and self._peek().kind != "eof":
                if self._at("{"):
                    self._skip_balanced("{", "}")
                elif self._at("("):
                    self._skip_balanced("(", ")")
                else:
                    self._next()
            return None

    def _method_rest(self, return_type: str, name_tok: Token,
                     constructor: bool = False) -> MethodDecl:
        self._expect("(")
        params: list[Param] = []
        if not self._at(")"):
            while True:
                if self._at("final"):
                    self._next()
                param_type = self._type_ref()
                if self._accept("."):  # varargs written Type...
                    self._expect(".")
                    self._expect(".")
                param_name = self._expect_ident().text
                params.append(Param(type_name=param_type, name=param_name))
                if not self._accept(","):
                    break
        self._expect(")")
        if self._accept("throws"):
            self._type_ref()
            while self._accept(","):
                self._type_ref()
        body: tuple[Stmt, ...] = ()
        if self._at("{"):
            body = self._block()
        else:
            self._expect(";")  # abstract/interface method
        return MethodDecl(
            name=name_tok.text,
            params=tuple(params),
            body=body,
            return_type=return_type,
            is_constructor=constructor,
            line=name_tok.line,
        )

    def _type_ref(self) -> str:
        if self._peek().text in ("void", "int", "long", "short", "byte", "char",
                                 "boolean", "float", "double"):
            name = self._next().text
        else:
            name = self._dotted_name()
        self._skip_generics()
        while self._peek().text == "[" and self._peek(1).text == "]":
            self._next()
            self._next()
            name += "[]"
        return name

    def _skip_generics(self) -> None:
        if not self._at("<"):
            return
        depth = 0
        while True:
            tok = self._next()
            if tok.kind == "eof":
                raise OoSyntaxError("unterminated type arguments", tok.line)
            if tok.text in ("<", "<<"):
                depth += tok.text.count("<")
            elif tok.text in (">", ">>"):
                depth -= tok.text.count(">")
                if depth <= 0:
                    return

    def _skip_balanced(self, open_: str, close: str, consume_open: bool = True) -> None:
        if consume_open:
            self._expect(open_)
        depth = 1
        while depth:
            tok = self._next()
            if tok.kind == "eof":
                raise OoSyntaxError(f"unbalanced {open_}...{close}", tok.line)
            if tok.text == open_:
                depth += 1
            elif tok.text == close:
                depth -= 1

    # -- statements -------------------------------------------------------

    def _block(self) -> tuple[Stmt, ...]:
        self._expect("{")
        statements: list[Stmt] = []
        while not self._at("}"):
            if self._peek().kind == "eof":
                raise OoSyntaxError("unterminated block", self._peek().line)
            stmt = self._recovering_statement()
            if stmt is not None:
                statements.append(stmt)
        self._expect("}")
        return tuple(statements)

    def _recovering_statement(self) -> Stmt | None:
        start = self.index
        try:
            return self._statement()
        except _Unsupported as exc:
            self.index = start
            self.sink.warn(f"unsupported statement skipped ({exc.what})",
                           self.path, exc.line)
            self._skip_statement()
            return None

    def _skip_statement(self) -> None:
        """Advance past the current statement: to its ``;`` or over its block."""
        while True:
            tok = self._peek()
            if tok.kind == "eof" or tok.text == "}":
                return
            if tok.text == ";":
                self._next()
                return
            if tok.text == "{":
                self._skip_balanced("{", "}")
                return
            if tok.text == "(":
                self._skip_balanced("(", ")")
                continue
            self._next()

    _UNSUPPORTED_STARTERS = frozenset(
        "try throw switch do break continue synchronized assert super".split()
    )

    def _statement(self) -> Stmt | None:
        tok = self._peek()
        if tok.text == ";":
            self._next()
            return None
        if tok.text == "{":
            body = self._block()
            # A bare block is rare in the subset; splice is not needed,
            # wrap it in an if(true)-like container instead of inventing
            # a node kind.
            return If(condition=Literal("true", "bool", tok.line), then_body=body,
                      line=tok.line)
        if tok.text in self._UNSUPPORTED_STARTERS:
            raise _Unsupported(tok.text, tok.line)
        if tok.text == "if":
            return self._if_statement()
        if tok.text == "while":
            return self._while_statement()
        if tok.text == "for":
            return self._for_statement()
        if tok.text == "return":
            self._next()
            value = None if self._at(";") else self._expression()
            self._expect(";")
            return Return(value=value, line=tok.line)
        stmt = self._simple_statement()
        self._expect(";")
        return stmt

    def _statement_or_block(self) -> tuple[Stmt, ...]:
        if self._at("{"):
            return self._block()
        stmt = self._recovering_statement()
        return (stmt,) if stmt is not None else ()

    def _if_statement(self) -> Stmt:
        tok = self._expect("if")
        self._expect("(")
        condition = self._expression()
        self._expect(")")
        then_body = self._statement_or_block()
        else_body: tuple[Stmt, ...] = ()
        if self._accept("else"):
            else_body = self._statement_or_block()
        return If(condition=condition, then_body=then_body, else_body=else_body,
                  line=tok.line)

    def _while_statement(self) -> Stmt:
        tok = self._expect("while")
        self._expect("(")
        condition = self._expression()
        self._expect(")")
        body = self._statement_or_block()
        return While(condition=condition, body=body, line=tok.line)

    def _for_statement(self) -> Stmt:
        tok = self._expect("for")
        self._expect("(")
        init: Stmt | None = None
        if not self._at(";"):
            init = self._simple_statement()
            if isinstance(init, ExprStmt) and self._at(":"):
                raise _Unsupported("enhanced for", tok.line)
        self._expect(";")
        condition = None if self._at(";") else self._expression()
        self._expect(";")
        update: list[Stmt] = []
        if not self._at(")"):
            update.append(self._simple_statement())
            while self._accept(","):
                update.append(self._simple_statement())
        self._expect(")")
        body = self._statement_or_block()
        return For(init=init, condition=condition, update=tuple(update),
                   body=body, line=tok.line)

    def _looks_like_declaration(self) -> bool:
        """Lookahead: ``Type name =``, ``Type name ;`` or ``Type name ,``."""
        start = self.index
        try:
            try:
                self._type_ref()
            except OoSyntaxError:
                return False
            if self._peek().kind != "ident":
                return False
            return self._peek(1).text in ("=", ";", ",", ":")
        finally:
            self.index = start

    def _simple_statement(self) -> Stmt:
        tok = self._peek()
        if tok.text in ("final",):
            self._next()
            tok = self._peek()
        if tok.kind == "keyword" and tok.text in (
            "int", "long", "short", "byte", "char", "boolean", "float", "double"
        ) or (tok.kind == "ident" and self._looks_like_declaration()):
            type_name = self._type_ref()
            name = self._expect_ident().text
            if self._at(":"):
                raise _Unsupported("enhanced for", tok.line)
            init = None
            if self._accept("="):
                init = self._expression()
            if self._at(","):
                raise _Unsupported("multi-variable declaration", tok.line)
            return LocalVar(type_name=type_name, name=name, init=init, line=tok.line)
        expr = self._expression()
        op_tok = self._peek()
        if op_tok.text in ("=", "+=", "-=", "*=", "/=", "%="):
            self._next()
            value = self._expression()
            if not isinstance(expr, Name):
                raise _Unsupported("assignment to non-name target", op_tok.line)
            return Assign(target=expr, value=value, op=op_tok.text, line=tok.line)
        return ExprStmt(expr=expr, line=tok.line)

    # -- expressions --------------------------------------------------------

    def _expression(self) -> Expr:
        expr = self._or_expr()
        if self._at("?"):
            raise _Unsupported("conditional expression", self._peek().line)
        return expr

    def _binary_level(self, operators: tuple[str, ...], parse_next) -> Expr:
        left = parse_next()
        while self._peek().text in operators:
            op_tok = self._next()
            if op_tok.text == "instanceof":
                raise _Unsupported("instanceof", op_tok.line)
            right = parse_next()
            left = BinOp(op=op_tok.text, left=left, right=right, line=op_tok.line)
        return left

    def _or_expr(self) -> Expr:
        return self._binary_level(("||",), self._and_expr)

    def _and_expr(self) -> Expr:
        return self._binary_level(("&&",), self._equality)

    def _equality(self) -> Expr:
        return self._binary_level(("==", "!="), self._relational)

    def _relational(self) -> Expr:
        return self._binary_level(("<", ">", "<=", ">=", "instanceof"),
                                  self._additive)

    def _additive(self) -> Expr:
        return self._binary_level(("+", "-"), self._multiplicative)

    def _multiplicative(self) -> Expr:
        return self._binary_level(("*", "/", "%"), self._unary)

    def _unary(self) -> Expr:
        tok = self._peek()
        if tok.text in ("!", "-", "+", "++", "--", "~"):
            self._next()
            operand = self._unary()
            return Unary(op=tok.text, operand=operand, prefix=True, line=tok.line)
        return self._postfix()

    def _postfix(self) -> Expr:
        expr = self._primary()
        while True:
            tok = self._peek()
            if tok.text == ".":
                self._next()
                name_tok = self._expect_ident()
                if self._at("("):
                    args = self._call_args()
                    expr = Call(receiver=expr, name=name_tok.text, args=args,
                                line=name_tok.line, column=name_tok.column)
                elif isinstance(expr, Name):
                    expr = Name(text=f"{expr.text}.{name_tok.text}",
                                line=expr.line, column=expr.column)
                else:
                    raise _Unsupported("member access on call result", name_tok.line)
                continue
            if tok.text in ("++", "--"):
                self._next()
                expr = Unary(op=tok.text, operand=expr, prefix=False, line=tok.line)
                continue
            if tok.text == "[":
                raise _Unsupported("array indexing", tok.line)
            if tok.text == "(" and isinstance(expr, Name) and "." not in expr.text:
                # Identifier immediately followed by parentheses was already
                # handled in _primary; reaching here means something exotic.
                raise _Unsupported("call syntax", tok.line)
            return expr

    def _call_args(self) -> tuple[Expr, ...]:
        self._expect("(")
        args: list[Expr] = []
        if not self._at(")"):
            args.append(self._expression())
            while self._accept(","):
                args.append(self._expression())
        self._expect(")")
        return tuple(args)

    def _primary(self) -> Expr:
        tok = self._peek()
        if tok.kind == "string":
            self._next()
            return Literal(value=tok.text, kind="string", line=tok.line,
                           column=tok.column)
        if tok.kind == "char":
            self._next()
            return Literal(value=tok.text, kind="char", line=tok.line,
                           column=tok.column)
        if tok.kind == "number":
            self._next()
            return Literal(value=tok.text, kind="number", line=tok.line,
                           column=tok.column)
        if tok.text in ("true", "false"):
            self._next()
            return Literal(value=tok.text, kind="bool", line=tok.line,
                           column=tok.column)
        if tok.text == "null":
            self._next()
            return Literal(value="null", kind="null", line=tok.line,
                           column=tok.column)
        if tok.text == "new":
            self._next()
            type_name = self._dotted_name()
            self._skip_generics()
            if self._at("["):
                raise _Unsupported("array creation", tok.line)
            args = self._call_args()
            if self._at("{"):
                raise _Unsupported("anonymous class body", tok.line)
            return New(type_name=type_name, args=args, line=tok.line,
                       column=tok.column)
        if tok.text == "this":
            self._next()
            if self._at("("):
                raise _Unsupported("constructor delegation", tok.line)
            return Name(text="this", line=tok.line, column=tok.column)
        if tok.text == "(":
            self._next()
            inner = self._expression()
            self._expect(")")
            if isinstance(inner, Name) and self._starts_primary():
                # Cast syntax: (Type) expr.  Types carry no dependency in
                # the subset, so keep only the casted expression.
                return self._unary()
            return inner
        if tok.kind == "ident":
            self._next()
            if self._at("("):
                args = self._call_args()
                return Call(receiver=None, name=tok.text, args=args,
                            line=tok.line, column=tok.column)
            return Name(text=tok.text, line=tok.line, column=tok.column)
        raise _Unsupported(f"expression starting with {tok.text!r}", tok.line)

    def _starts_primary(self) -> bool:
        tok = self._peek()
        return (
            tok.kind in ("ident", "string", "char", "number")
            or tok.text in ("this", "new", "(")
        )


def parse_unit(text: str, path: str, sink: DiagnosticSink | None = None) -> CompilationUnit:
    """Parse one source file into a :class:`CompilationUnit`.

    Raises :class:`OoSyntaxError` when the class/method structure itself
    is malformed; statement-level problems are skipped with diagnostics.
    """
    return Parser(text, path, sink).parse_unit()
