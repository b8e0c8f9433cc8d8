"""Parsing and instrumenting the supported Dafny subset.

Covers declarations over Booleans, integers and arithmetic: lemmas, methods
and (expression-bodied) functions, with requires/ensures clauses, local
variables, assert/assume and if statements.  Shadowing is supported since the
back-translation machinery depends on it.

Instrumentation injects three identity-like ghost functions and wraps
variable occurrences so source names survive the trip through the verifier:

    function _protect<T>(x: T, name: string): T { x }
    function _protectScope<T>(x: T, name: string): bool { true }
    function _protectToProve<T>(x: T, name: string, scope: seq<bool>): T { x }

The underscore prefix keeps them out of the user's namespace.  The same
expression grammar doubles as the parser for tactic arguments, which resolve
identifiers through a NameMap and come out as solver-level terms.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

from .backtranslate import NameMap
from .sexpr import App, BoolLit, IntLit, Symbol, Term, mk_app, mk_symbol

__all__ = [
    "DafnyError", "SourceUnit", "Decl", "Param", "Clause", "Stmt", "SVarDecl",
    "SAssert", "SAssume", "SIf", "Expr", "EVar", "EInt", "EBool", "EString",
    "ECall", "ESeq", "EBin", "EUn", "EIte", "Type",
    "parse_program", "parse_expr_text", "parse_expr", "instrument",
    "strip_source_protections", "print_expr", "visible_variables",
    "GHOST_FUNCTIONS",
]

PROTECT = "_protect"
PROTECT_SCOPE = "_protectScope"
PROTECT_TO_PROVE = "_protectToProve"

GHOST_FUNCTIONS = (
    'function _protect<T>(x: T, name: string): T\n'
    '  { x }\n'
    'function _protectScope<T>(\n'
    '  x: T, name: string): bool { true }\n'
    'function _protectToProve<T>(\n'
    '  x: T, name: string, scope: seq<bool>): T { x }\n'
)


class DafnyError(Exception):
    """Parse or instrumentation error with a 1-based position."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            super().__init__(f"{message} (line {line}, column {column})")
        else:
            super().__init__(message)
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Type:
    name: str  # int | nat | bool | string | seq | type variable
    arg: "Type | None" = None

    def __str__(self) -> str:
        return f"{self.name}<{self.arg}>" if self.arg is not None else self.name


class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class EVar(Expr):
    name: str
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EInt(Expr):
    value: int
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EBool(Expr):
    value: bool
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EString(Expr):
    value: str
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ECall(Expr):
    name: str
    args: tuple[Expr, ...]
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class ESeq(Expr):
    items: tuple[Expr, ...]
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EBin(Expr):
    op: str
    lhs: Expr
    rhs: Expr
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EUn(Expr):
    op: str
    arg: Expr
    span: tuple[int, int] | None = field(default=None, compare=False)


@dataclass(frozen=True)
class EIte(Expr):
    cond: Expr
    then: Expr
    orelse: Expr
    span: tuple[int, int] | None = field(default=None, compare=False)


class Stmt:
    __slots__ = ()


@dataclass(frozen=True)
class SVarDecl(Stmt):
    name: str
    type: Type
    init: Expr


@dataclass(frozen=True)
class SAssert(Stmt):
    expr: Expr
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class SAssume(Stmt):
    expr: Expr


@dataclass(frozen=True)
class SIf(Stmt):
    cond: Expr
    then_body: tuple[Stmt, ...]
    else_body: tuple[Stmt, ...]


@dataclass(frozen=True)
class Param:
    name: str
    type: Type


@dataclass(frozen=True)
class Clause:
    """A requires/ensures clause with its attributes (e.g. `ipm`)."""

    kind: str  # "requires" | "ensures"
    expr: Expr
    attributes: tuple[str, ...] = ()


@dataclass(frozen=True)
class Decl:
    kind: str  # "lemma" | "method" | "function"
    name: str
    params: tuple[Param, ...]
    clauses: tuple[Clause, ...]
    body: tuple[Stmt, ...] | None
    type_params: tuple[str, ...] = ()
    return_type: Type | None = None
    fn_body: Expr | None = None  # expression body of a function


@dataclass(frozen=True)
class SourceUnit:
    declarations: tuple[Decl, ...]
    source: str = field(default="", compare=False)


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_KEYWORDS = {
    "lemma", "method", "function", "requires", "ensures", "var", "assert",
    "assume", "if", "else", "then", "true", "false", "returns",
}

_TWO_CHAR = {"==", "!=", "<=", ">=", "&&", "||", ":="}
_MULTI = {"<==>", "==>"}


@dataclass
class _Tok:
    kind: str  # ident/int/string/op/attr_open/kw
    text: str
    line: int
    column: int
    pos: int


def _lex(text: str) -> list[_Tok]:
    toks: list[_Tok] = []
    i, line, col = 0, 1, 1

    def advance(n: int) -> None:
        nonlocal i, line, col
        for _ in range(n):
            if text[i] == "\n":
                line += 1
                col = 1
            else:
                col += 1
            i += 1

    while i < len(text):
        c = text[i]
        if c in " \t\r\n":
            advance(1)
            continue
        if text.startswith("//", i):
            while i < len(text) and text[i] != "\n":
                advance(1)
            continue
        if text.startswith("/*", i):
            start_line, start_col = line, col
            advance(2)
            while i < len(text) and not text.startswith("*/", i):
                advance(1)
            if i >= len(text):
                raise DafnyError("unterminated block comment", start_line, start_col)
            advance(2)
            continue
        start_line, start_col, start_pos = line, col, i
        if c.isalpha() or c == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] in "_'"):
                j += 1
            word = text[i:j]
            advance(j - i)
            toks.append(_Tok("kw" if word in _KEYWORDS else "ident", word,
                             start_line, start_col, start_pos))
            continue
        if c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(_Tok("int", text[i:j], start_line, start_col, start_pos))
            advance(j - i)
            continue
        if c == '"':
            advance(1)
            chunks = []
            while i < len(text) and text[i] != '"':
                if text[i] == "\\" and i + 1 < len(text):
                    chunks.append(text[i:i + 2])
                    advance(2)
                    continue
                chunks.append(text[i])
                advance(1)
            if i >= len(text):
                raise DafnyError("unterminated string literal", start_line, start_col)
            advance(1)
            toks.append(_Tok("string", "".join(chunks), start_line, start_col, start_pos))
            continue
        if text.startswith("{:", i):
            toks.append(_Tok("attr_open", "{:", start_line, start_col, start_pos))
            advance(2)
            continue
        matched = None
        for op in _MULTI:
            if text.startswith(op, i):
                matched = op
                break
        if matched is None:
            for op in _TWO_CHAR:
                if text.startswith(op, i):
                    matched = op
                    break
        if matched is None and c in "+-*/%<>=!(){}[],;:.":
            matched = c
        if matched is None:
            raise DafnyError(f"unexpected character {c!r}", start_line, start_col)
        toks.append(_Tok("op", matched, start_line, start_col, start_pos))
        advance(len(matched))
    return toks


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _SrcParser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _lex(text)
        self.i = 0

    def _peek(self, ahead: int = 0) -> _Tok | None:
        idx = self.i + ahead
        return self.toks[idx] if idx < len(self.toks) else None

    def _error(self, message: str) -> DafnyError:
        tok = self._peek()
        if tok is None:
            last = self.toks[-1] if self.toks else None
            return DafnyError(message + " at end of input",
                              last.line if last else 1, last.column if last else 1)
        return DafnyError(message, tok.line, tok.column)

    def _next(self) -> _Tok:
        tok = self._peek()
        if tok is None:
            raise self._error("unexpected end of input")
        self.i += 1
        return tok

    def _expect(self, text: str) -> _Tok:
        tok = self._peek()
        if tok is None or tok.text != text:
            raise self._error(f"expected {text!r}" + (f", found {tok.text!r}" if tok else ""))
        return self._next()

    def _accept(self, text: str) -> bool:
        tok = self._peek()
        if tok is not None and tok.text == text:
            self._next()
            return True
        return False

    # -- programs -----------------------------------------------------------

    def parse_program(self) -> SourceUnit:
        decls: list[Decl] = []
        while self._peek() is not None:
            decls.append(self._parse_decl())
        return SourceUnit(tuple(decls), source=self.text)

    def _parse_decl(self) -> Decl:
        tok = self._next()
        if tok.text not in ("lemma", "method", "function"):
            if tok.text in ("class", "while", "datatype", "module", "trait", "loop"):
                raise DafnyError(f"unsupported construct: {tok.text}", tok.line, tok.column)
            raise DafnyError(f"expected a declaration, found {tok.text!r}", tok.line, tok.column)
        kind = tok.text
        name_tok = self._next()
        if name_tok.kind != "ident":
            raise DafnyError(f"expected declaration name, found {name_tok.text!r}",
                             name_tok.line, name_tok.column)
        type_params: list[str] = []
        if self._accept("<"):
            while True:
                tp = self._next()
                type_params.append(tp.text)
                if not self._accept(","):
                    break
            self._expect(">")
        self._expect("(")
        params: list[Param] = []
        seen = set()
        while not self._accept(")"):
            p_tok = self._next()
            if p_tok.kind not in ("ident", "kw"):
                raise DafnyError(f"expected parameter name, found {p_tok.text!r}",
                                 p_tok.line, p_tok.column)
            if p_tok.text in seen:
                raise DafnyError(f"duplicate parameter name {p_tok.text!r}",
                                 p_tok.line, p_tok.column)
            seen.add(p_tok.text)
            self._expect(":")
            params.append(Param(p_tok.text, self._parse_type()))
            if not self._accept(","):
                self._expect(")")
                break
        return_type = None
        if kind == "function" and self._accept(":"):
            return_type = self._parse_type()
        clauses: list[Clause] = []
        while True:
            tok2 = self._peek()
            if tok2 is None or tok2.text not in ("requires", "ensures"):
                break
            self._next()
            attrs = self._parse_attributes()
            expr = self.parse_expr()
            clauses.append(Clause(tok2.text, expr, attrs))
            for a in attrs:
                if a == "ipm" and tok2.text == "requires":
                    raise DafnyError("{:ipm} is supported on ensures clauses and asserts only",
                                     tok2.line, tok2.column)
        body: tuple[Stmt, ...] | None = None
        fn_body: Expr | None = None
        if self._peek() is not None and self._peek().text == "{":
            if kind == "function":
                self._expect("{")
                fn_body = self.parse_expr()
                self._expect("}")
            else:
                body = self._parse_block()
        return Decl(kind, name_tok.text, tuple(params), tuple(clauses), body,
                    tuple(type_params), return_type, fn_body)

    def _parse_type(self) -> Type:
        tok = self._next()
        if tok.kind not in ("ident", "kw"):
            raise DafnyError(f"expected a type, found {tok.text!r}", tok.line, tok.column)
        if self._accept("<"):
            arg = self._parse_type()
            self._expect(">")
            return Type(tok.text, arg)
        return Type(tok.text)

    def _parse_attributes(self) -> tuple[str, ...]:
        attrs: list[str] = []
        while self._peek() is not None and self._peek().kind == "attr_open":
            self._next()
            name_tok = self._next()
            if name_tok.kind not in ("ident", "kw"):
                raise DafnyError(f"expected attribute name, found {name_tok.text!r}",
                                 name_tok.line, name_tok.column)
            attrs.append(name_tok.text)
            self._expect("}")
        return tuple(attrs)

    def _parse_block(self) -> tuple[Stmt, ...]:
        self._expect("{")
        stmts: list[Stmt] = []
        while not self._accept("}"):
            stmts.append(self._parse_stmt())
        return tuple(stmts)

    def _parse_stmt(self) -> Stmt:
        tok = self._peek()
        if tok is None:
            raise self._error("unexpected end of input in statement block")
        if tok.text == "var":
            self._next()
            name_tok = self._next()
            self._expect(":")
            typ = self._parse_type()
            self._expect(":=")
            init = self.parse_expr()
            self._expect(";")
            return SVarDecl(name_tok.text, typ, init)
        if tok.text == "assert":
            self._next()
            attrs = self._parse_attributes()
            expr = self.parse_expr()
            self._expect(";")
            return SAssert(expr, attrs)
        if tok.text == "assume":
            self._next()
            expr = self.parse_expr()
            self._expect(";")
            return SAssume(expr)
        if tok.text == "if":
            self._next()
            cond = self.parse_expr()
            then_body = self._parse_block()
            else_body: tuple[Stmt, ...] = ()
            if self._accept("else"):
                nxt = self._peek()
                if nxt is not None and nxt.text == "if":
                    else_body = (self._parse_stmt(),)
                else:
                    else_body = self._parse_block()
            return SIf(cond, then_body, else_body)
        if tok.text in ("while", "for", "match", "return", "class"):
            raise DafnyError(f"unsupported construct: {tok.text}", tok.line, tok.column)
        raise DafnyError(f"expected a statement, found {tok.text!r}", tok.line, tok.column)

    # -- expressions ----------------------------------------------------------

    _CMP_OPS = ("==", "!=", "<", "<=", ">", ">=")

    def parse_expr(self) -> Expr:
        return self._parse_equiv()

    def _spanned(self, e: Expr, start: _Tok) -> Expr:
        end_pos = self.toks[self.i - 1]
        end = end_pos.pos + len(end_pos.text)
        object.__setattr__(e, "span", (start.pos, end))
        return e

    def _parse_equiv(self) -> Expr:
        start = self._peek()
        lhs = self._parse_implies()
        while self._peek() is not None and self._peek().text == "<==>":
            self._next()
            rhs = self._parse_implies()
            lhs = self._spanned(EBin("<==>", lhs, rhs), start)
        return lhs

    def _parse_implies(self) -> Expr:
        start = self._peek()
        lhs = self._parse_or()
        if self._peek() is not None and self._peek().text == "==>":
            self._next()
            rhs = self._parse_implies()  # right-associative
            return self._spanned(EBin("==>", lhs, rhs), start)
        return lhs

    def _parse_or(self) -> Expr:
        start = self._peek()
        lhs = self._parse_and()
        while self._peek() is not None and self._peek().text == "||":
            self._next()
            lhs = self._spanned(EBin("||", lhs, self._parse_and()), start)
        return lhs

    def _parse_and(self) -> Expr:
        start = self._peek()
        lhs = self._parse_cmp()
        while self._peek() is not None and self._peek().text == "&&":
            self._next()
            lhs = self._spanned(EBin("&&", lhs, self._parse_cmp()), start)
        return lhs

    def _parse_cmp(self) -> Expr:
        start = self._peek()
        lhs = self._parse_add()
        tok = self._peek()
        if tok is not None and tok.text in self._CMP_OPS:
            self._next()
            rhs = self._parse_add()
            nxt = self._peek()
            if nxt is not None and nxt.text in self._CMP_OPS:
                raise DafnyError("comparison operators are non-associative; use parentheses",
                                 nxt.line, nxt.column)
            return self._spanned(EBin(tok.text, lhs, rhs), start)
        return lhs

    def _parse_add(self) -> Expr:
        start = self._peek()
        lhs = self._parse_mul()
        while self._peek() is not None and self._peek().text in ("+", "-"):
            op = self._next().text
            lhs = self._spanned(EBin(op, lhs, self._parse_mul()), start)
        return lhs

    def _parse_mul(self) -> Expr:
        start = self._peek()
        lhs = self._parse_unary()
        while self._peek() is not None and self._peek().text in ("*", "/", "%"):
            op = self._next().text
            lhs = self._spanned(EBin(op, lhs, self._parse_unary()), start)
        return lhs

    def _parse_unary(self) -> Expr:
        tok = self._peek()
        if tok is not None and tok.text in ("-", "!"):
            self._next()
            arg = self._parse_unary()
            return self._spanned(EUn(tok.text, arg), tok)
        return self._parse_primary()

    def _parse_primary(self) -> Expr:
        tok = self._next()
        if tok.kind == "int":
            return self._spanned(EInt(int(tok.text)), tok)
        if tok.kind == "string":
            return self._spanned(EString(tok.text), tok)
        if tok.text == "true":
            return self._spanned(EBool(True), tok)
        if tok.text == "false":
            return self._spanned(EBool(False), tok)
        if tok.text == "if":
            cond = self.parse_expr()
            self._expect("then")
            then = self.parse_expr()
            self._expect("else")
            orelse = self.parse_expr()
            return self._spanned(EIte(cond, then, orelse), tok)
        if tok.text == "(":
            e = self.parse_expr()
            self._expect(")")
            return e
        if tok.text == "[":
            items: list[Expr] = []
            if not self._accept("]"):
                while True:
                    items.append(self.parse_expr())
                    if not self._accept(","):
                        break
                self._expect("]")
            return self._spanned(ESeq(tuple(items)), tok)
        if tok.kind == "ident":
            nxt = self._peek()
            if nxt is not None and nxt.text == "(":
                self._next()
                args: list[Expr] = []
                if not self._accept(")"):
                    while True:
                        args.append(self.parse_expr())
                        if not self._accept(","):
                            break
                    self._expect(")")
                return self._spanned(ECall(tok.text, tuple(args)), tok)
            return self._spanned(EVar(tok.text), tok)
        raise DafnyError(f"expected an expression, found {tok.text!r}", tok.line, tok.column)


def parse_program(text: str) -> SourceUnit:
    """Parse a Dafny-subset program; positions are reported on errors."""
    parser = _SrcParser(text)
    return parser.parse_program()


def parse_expr_text(text: str) -> Expr:
    """Parse a single boolean/arithmetic expression."""
    parser = _SrcParser(text)
    e = parser.parse_expr()
    if parser._peek() is not None:
        raise parser._error("unexpected trailing input")
    return e


# ---------------------------------------------------------------------------
# Expression printing (minimal parentheses, for emitted source)
# ---------------------------------------------------------------------------

_LEVEL = {"<==>": 1, "==>": 2, "||": 3, "&&": 4,
          "==": 5, "!=": 5, "<": 5, "<=": 5, ">": 5, ">=": 5,
          "+": 6, "-": 6, "*": 7, "/": 7, "%": 7}
_UNARY_LEVEL = 8


def print_expr(e: Expr) -> str:
    return _print_expr(e, 0)


def _print_expr(e: Expr, parent_level: int) -> str:
    if isinstance(e, EVar):
        return e.name
    if isinstance(e, EInt):
        return str(e.value)
    if isinstance(e, EBool):
        return "true" if e.value else "false"
    if isinstance(e, EString):
        return f'"{e.value}"'
    if isinstance(e, ECall):
        return f"{e.name}({', '.join(_print_expr(a, 0) for a in e.args)})"
    if isinstance(e, ESeq):
        return f"[{', '.join(_print_expr(a, 0) for a in e.items)}]"
    if isinstance(e, EUn):
        text = f"{e.op}{_print_expr(e.arg, _UNARY_LEVEL)}"
        return f"({text})" if parent_level > _UNARY_LEVEL else text
    if isinstance(e, EIte):
        text = (f"if {_print_expr(e.cond, 0)} then {_print_expr(e.then, 0)} "
                f"else {_print_expr(e.orelse, 0)}")
        return f"({text})"
    if isinstance(e, EBin):
        level = _LEVEL[e.op]
        if e.op == "==>":  # right-associative
            text = f"{_print_expr(e.lhs, level + 1)} {e.op} {_print_expr(e.rhs, level)}"
        elif level == 5:  # comparisons are non-associative
            text = f"{_print_expr(e.lhs, level + 1)} {e.op} {_print_expr(e.rhs, level + 1)}"
        else:
            text = f"{_print_expr(e.lhs, level)} {e.op} {_print_expr(e.rhs, level + 1)}"
        return f"({text})" if parent_level > level else text
    raise TypeError(f"not an expression: {e!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Instrumentation
# ---------------------------------------------------------------------------

def _protect_vars(e: Expr) -> Expr:
    """Wrap every variable occurrence as `_protect(v, "v")`."""
    if isinstance(e, EVar):
        return ECall(PROTECT, (e, EString(e.name)))
    if isinstance(e, EBin):
        return EBin(e.op, _protect_vars(e.lhs), _protect_vars(e.rhs))
    if isinstance(e, EUn):
        return EUn(e.op, _protect_vars(e.arg))
    if isinstance(e, EIte):
        return EIte(_protect_vars(e.cond), _protect_vars(e.then), _protect_vars(e.orelse))
    if isinstance(e, ECall):
        return ECall(e.name, tuple(_protect_vars(a) for a in e.args))
    if isinstance(e, ESeq):
        return ESeq(tuple(_protect_vars(a) for a in e.items))
    return e


def _expr_source(e: Expr, source: str) -> str:
    if e.span is not None and source:
        return " ".join(source[e.span[0]:e.span[1]].split())
    return print_expr(e)


def _to_prove(e: Expr, scope: dict[str, None], source: str) -> Expr:
    scope_calls = tuple(
        ECall(PROTECT_SCOPE, (EVar(n), EString(n))) for n in scope)
    return ECall(PROTECT_TO_PROVE,
                 (_protect_vars(e), EString(_expr_source(e, source)), ESeq(scope_calls)))


def visible_variables(decl: Decl, target: SAssert) -> list[str]:
    """The variable names visible at an assert site, innermost binding
    winning for shadowed names, in first-introduction order.
    """
    scope: dict[str, None] = {p.name: None for p in decl.params}
    found = _collect_scope(decl.body or (), target, scope)
    if not found:
        raise DafnyError("assert statement not found in declaration body")
    return list(found)


def _collect_scope(stmts: tuple[Stmt, ...], target: SAssert,
                   scope: dict[str, None]) -> dict[str, None] | None:
    for s in stmts:
        if s is target:
            return dict(scope)
        if isinstance(s, SVarDecl):
            scope[s.name] = None
        elif isinstance(s, SIf):
            for branch in (s.then_body, s.else_body):
                inner = dict(scope)
                found = _collect_scope(branch, target, inner)
                if found is not None:
                    return found
    return None


def _decl_has_ipm(decl: Decl) -> bool:
    if any("ipm" in c.attributes for c in decl.clauses):
        return True
    return any("ipm" in s.attributes for s in _walk_stmts(decl.body or ())
               if isinstance(s, SAssert))


def _walk_stmts(stmts: tuple[Stmt, ...]):
    for s in stmts:
        yield s
        if isinstance(s, SIf):
            yield from _walk_stmts(s.then_body)
            yield from _walk_stmts(s.else_body)


def instrument(unit: SourceUnit) -> str:
    """Emit the instrumented program: ghost functions plus every declaration,
    with spec clauses protected and `{:ipm}` targets wrapped in
    `_protectToProve` carrying the visible-variable scope list.

    Declarations without any `{:ipm}` marker are emitted unchanged.
    """
    if not any(_decl_has_ipm(d) for d in unit.declarations):
        warnings.warn("no {:ipm} attribute found; nothing will be targeted", stacklevel=2)
    parts = [GHOST_FUNCTIONS]
    for decl in unit.declarations:
        parts.append(_emit_decl(decl, unit.source, _decl_has_ipm(decl)))
    return "\n".join(parts)


def _emit_decl(decl: Decl, source: str, transform: bool) -> str:
    lines: list[str] = []
    tp = f"<{', '.join(decl.type_params)}>" if decl.type_params else ""
    params = ", ".join(f"{p.name} : {p.type}" for p in decl.params)
    ret = f": {decl.return_type}" if decl.return_type is not None else ""
    lines.append(f"{decl.kind} {decl.name}{tp}({params}){ret}")
    for clause in decl.clauses:
        expr = clause.expr
        attrs = "".join(f"{{:{a}}} " for a in clause.attributes)
        if transform:
            if "ipm" in clause.attributes:
                scope = {p.name: None for p in decl.params}
                expr = _to_prove(expr, scope, source)
            else:
                expr = _protect_vars(expr)
        lines.append(f"  {clause.kind} {attrs}{print_expr(expr)}")
    if decl.fn_body is not None:
        lines.append(f"{{ {print_expr(decl.fn_body)} }}")
    elif decl.body is not None:
        lines.append("{")
        lines.extend(_emit_stmts(decl, decl.body, source, transform, 1))
        lines.append("}")
    return "\n".join(lines) + "\n"


def _emit_stmts(decl: Decl, stmts: tuple[Stmt, ...], source: str,
                transform: bool, depth: int) -> list[str]:
    pad = "  " * depth
    out: list[str] = []
    for s in stmts:
        if isinstance(s, SVarDecl):
            out.append(f"{pad}var {s.name} : {s.type} := {print_expr(s.init)};")
        elif isinstance(s, SAssume):
            out.append(f"{pad}assume {print_expr(s.expr)};")
        elif isinstance(s, SAssert):
            attrs = "".join(f"{{:{a}}} " for a in s.attributes)
            expr = s.expr
            if transform and "ipm" in s.attributes:
                scope_names = visible_variables(decl, s)
                expr = _to_prove(expr, {n: None for n in scope_names}, source)
            out.append(f"{pad}assert {attrs}{print_expr(expr)};")
        elif isinstance(s, SIf):
            out.append(f"{pad}if {print_expr(s.cond)} {{")
            out.extend(_emit_stmts(decl, s.then_body, source, transform, depth + 1))
            if s.else_body:
                out.append(f"{pad}}} else {{")
                out.extend(_emit_stmts(decl, s.else_body, source, transform, depth + 1))
            out.append(f"{pad}}}")
        else:  # pragma: no cover
            raise TypeError(f"not a statement: {s!r}")
    return out


def strip_source_protections(unit: SourceUnit) -> SourceUnit:
    """Remove `_protect*` calls from a parsed (instrumented) program and drop
    the ghost function declarations; inverse of `instrument` up to layout.
    """
    decls = []
    for d in unit.declarations:
        if d.name in (PROTECT, PROTECT_SCOPE, PROTECT_TO_PROVE):
            continue
        clauses = tuple(Clause(c.kind, _strip_expr(c.expr), c.attributes) for c in d.clauses)
        body = tuple(_strip_stmt(s) for s in d.body) if d.body is not None else None
        fn_body = _strip_expr(d.fn_body) if d.fn_body is not None else None
        decls.append(Decl(d.kind, d.name, d.params, clauses, body,
                          d.type_params, d.return_type, fn_body))
    return SourceUnit(tuple(decls), source=unit.source)


def _strip_expr(e: Expr) -> Expr:
    if isinstance(e, ECall):
        if e.name == PROTECT and len(e.args) == 2:
            return _strip_expr(e.args[0])
        if e.name == PROTECT_TO_PROVE and len(e.args) == 3:
            return _strip_expr(e.args[0])
        if e.name == PROTECT_SCOPE and len(e.args) == 2:
            return EBool(True)
        return ECall(e.name, tuple(_strip_expr(a) for a in e.args))
    if isinstance(e, EBin):
        return EBin(e.op, _strip_expr(e.lhs), _strip_expr(e.rhs))
    if isinstance(e, EUn):
        return EUn(e.op, _strip_expr(e.arg))
    if isinstance(e, EIte):
        return EIte(_strip_expr(e.cond), _strip_expr(e.then), _strip_expr(e.orelse))
    if isinstance(e, ESeq):
        return ESeq(tuple(_strip_expr(a) for a in e.items))
    return e


def _strip_stmt(s: Stmt) -> Stmt:
    if isinstance(s, SVarDecl):
        return SVarDecl(s.name, s.type, _strip_expr(s.init))
    if isinstance(s, SAssert):
        return SAssert(_strip_expr(s.expr), s.attributes)
    if isinstance(s, SAssume):
        return SAssume(_strip_expr(s.expr))
    if isinstance(s, SIf):
        return SIf(_strip_expr(s.cond), tuple(_strip_stmt(x) for x in s.then_body),
                   tuple(_strip_stmt(x) for x in s.else_body))
    return s


# ---------------------------------------------------------------------------
# Tactic-argument expressions -> solver terms
# ---------------------------------------------------------------------------

_INT, _BOOL = "int", "bool"

_ARITH_OPS = {"+", "-", "*", "/", "%"}
_CMP_INT_OPS = {"<", "<=", ">", ">="}
_LOGIC_OPS = {"&&", "||", "==>", "<==>"}


def _infer_type(e: Expr) -> str | None:
    """int / bool / None (unknown, for bare variables)."""
    if isinstance(e, EInt):
        return _INT
    if isinstance(e, EBool):
        return _BOOL
    if isinstance(e, EVar):
        return None
    if isinstance(e, EUn):
        want = _INT if e.op == "-" else _BOOL
        _require(e.arg, want, f"operand of {e.op!r}")
        return want
    if isinstance(e, EBin):
        if e.op in _ARITH_OPS:
            _require(e.lhs, _INT, f"left operand of {e.op!r}")
            _require(e.rhs, _INT, f"right operand of {e.op!r}")
            return _INT
        if e.op in _CMP_INT_OPS:
            _require(e.lhs, _INT, f"left operand of {e.op!r}")
            _require(e.rhs, _INT, f"right operand of {e.op!r}")
            return _BOOL
        if e.op in _LOGIC_OPS:
            _require(e.lhs, _BOOL, f"left operand of {e.op!r}")
            _require(e.rhs, _BOOL, f"right operand of {e.op!r}")
            return _BOOL
        if e.op in ("==", "!="):
            lt, rt = _infer_type(e.lhs), _infer_type(e.rhs)
            if lt is not None and rt is not None and lt != rt:
                raise DafnyError(f"cannot compare {lt} with {rt}")
            return _BOOL
    if isinstance(e, EIte):
        _require(e.cond, _BOOL, "ite condition")
        lt, rt = _infer_type(e.then), _infer_type(e.orelse)
        if lt is not None and rt is not None and lt != rt:
            raise DafnyError("ite branches have different types")
        return lt if lt is not None else rt
    raise DafnyError("expression is outside the supported tactic fragment")


def _require(e: Expr, want: str, what: str) -> None:
    got = _infer_type(e)
    if got is not None and got != want:
        raise DafnyError(f"{what} must be {want}, found {got}")


def parse_expr(text: str, names: NameMap) -> Term:
    """Parse a tactic-argument expression into a solver-facing term.

    Identifiers resolve through `names` (in-scope entry preferred); operators
    map exactly to the heads the display rewrite translates back, so a parsed
    expression pretty-prints to a fully parenthesized form of itself.
    """
    e = parse_expr_text(text)
    if _infer_type(e) == _INT:
        raise DafnyError("tactic expressions must be boolean-valued")
    return _expr_to_term(e, names)


def _expr_to_term(e: Expr, names: NameMap) -> Term:
    if isinstance(e, EInt):
        return mk_app("LitInt", IntLit(e.value))
    if isinstance(e, EBool):
        return BoolLit(e.value)
    if isinstance(e, EVar):
        smt = names.resolve(e.name)
        if smt is None:
            known = ", ".join(names.known_names()) or "(none)"
            raise DafnyError(f"unknown identifier {e.name!r}; known identifiers: {known}")
        return mk_symbol(smt)
    if isinstance(e, EUn):
        arg = _expr_to_term(e.arg, names)
        if e.op == "-":
            if isinstance(arg, App) and symbol_eq(arg, "LitInt") and isinstance(arg.args[0], IntLit):
                return mk_app("LitInt", IntLit(-arg.args[0].value))
            return mk_app("-", arg)
        return mk_app("not", arg)
    if isinstance(e, EBin):
        lhs, rhs = _expr_to_term(e.lhs, names), _expr_to_term(e.rhs, names)
        op = e.op
        if op == "%":
            return mk_app("Mod", lhs, rhs)
        if op == "*":
            return mk_app("Mul", lhs, rhs)
        if op == "/":
            return mk_app("Div", lhs, rhs)
        if op in ("+", "-", "<", "<=", ">", ">="):
            return mk_app(op, lhs, rhs)
        if op in ("==", "<==>"):
            return mk_app("=", lhs, rhs)
        if op == "!=":
            return mk_app("not", mk_app("=", lhs, rhs))
        if op == "&&":
            return mk_app("and", lhs, rhs)
        if op == "||":
            return mk_app("or", lhs, rhs)
        if op == "==>":
            return mk_app("=>", lhs, rhs)
    if isinstance(e, EIte):
        return mk_app("ite", _expr_to_term(e.cond, names),
                      _expr_to_term(e.then, names), _expr_to_term(e.orelse, names))
    raise DafnyError("expression is outside the supported tactic fragment")


def symbol_eq(t: Term, name: str) -> bool:
    return isinstance(t, App) and isinstance(t.head, Symbol) and t.head.name == name
