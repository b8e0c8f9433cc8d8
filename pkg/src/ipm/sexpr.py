"""SMT-LIB 2 terms, commands, parsing and printing.

This is the lingua franca of the whole pipeline: Boogie-emitted scripts are
parsed into `Command` sequences whose asserted formulas are `Term` trees, and
everything sent back to the solver is printed from the same trees.  The parser
keeps enough structure (quoted symbols, attributes, raw command text) that a
script can be replayed to the solver without semantic drift.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "Term", "Symbol", "QuotedSymbol", "IntLit", "BoolLit", "StringLit",
    "App", "Quantifier", "Let", "Annotated", "Attr",
    "Command", "SetOption", "Declare", "Assert", "Push", "Pop", "CheckSat",
    "Other", "ParseError", "parse_script", "parse_term", "print_term",
    "print_command", "symbol_name", "mk_app", "mk_symbol",
]

# Characters allowed in SMT-LIB simple symbols besides letters and digits.
SYMBOL_PUNCT = set("~!@$%^&*_-+=<>.?/")


class ParseError(Exception):
    """Syntax error with a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.message = message
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Terms
# ---------------------------------------------------------------------------

class Term:
    """Base class for s-expression terms."""

    __slots__ = ()


@dataclass(frozen=True)
class Symbol(Term):
    name: str


@dataclass(frozen=True)
class QuotedSymbol(Term):
    """A `|...|` symbol, re-emitted exactly as read (may contain #, @, $)."""

    name: str


@dataclass(frozen=True)
class IntLit(Term):
    value: int


@dataclass(frozen=True)
class BoolLit(Term):
    value: bool


@dataclass(frozen=True)
class StringLit(Term):
    """An SMT-LIB 2.6 string literal; `""` is the only escape."""

    value: str


@dataclass(frozen=True)
class Attr:
    """An attribute such as `:qid |bpl.796:15|` or `:pattern ((f x))`.

    `value` is None for bare keywords, a Term for plain values, and a tuple of
    Terms for parenthesized value groups (the `:pattern` convention).
    """

    key: str
    value: Term | tuple[Term, ...] | None = None


@dataclass(frozen=True)
class App(Term):
    head: Term
    args: tuple[Term, ...]

    def __post_init__(self):
        if not self.args:
            raise ValueError("App requires at least one argument; use Symbol for atoms")


@dataclass(frozen=True)
class Quantifier(Term):
    kind: str  # "forall" | "exists"
    bindings: tuple[tuple[Term, Term], ...]  # (name symbol, sort term)
    body: Term
    attributes: tuple[Attr, ...] = ()

    def __post_init__(self):
        # `(forall (...) (! body attrs))` and a quantifier carrying the same
        # attributes print identically, so normalize to the carried form.
        body, attributes = self.body, tuple(self.attributes)
        while isinstance(body, Annotated):
            attributes = attributes + body.attributes
            body = body.body
        object.__setattr__(self, "body", body)
        object.__setattr__(self, "attributes", attributes)


@dataclass(frozen=True)
class Let(Term):
    bindings: tuple[tuple[Term, Term], ...]  # (name symbol, bound term)
    body: Term


@dataclass(frozen=True)
class Annotated(Term):
    body: Term
    attributes: tuple[Attr, ...]


def mk_symbol(name: str) -> Symbol | QuotedSymbol:
    """Build a symbol, quoting it when the name needs `|...|` delimiters."""
    if name and all(c.isalnum() or c in SYMBOL_PUNCT for c in name) and not name[0].isdigit():
        return Symbol(name)
    return QuotedSymbol(name)


def mk_app(head: str, *args: Term) -> Term:
    if not args:
        return mk_symbol(head)
    return App(mk_symbol(head), tuple(args))


def symbol_name(t: Term) -> str | None:
    """The identifier carried by a Symbol/QuotedSymbol, else None."""
    if isinstance(t, (Symbol, QuotedSymbol)):
        return t.name
    return None


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Command:
    """One top-level script command.

    `raw` is the exact source slice (canonical print for synthesized
    commands), which is what gets replayed to the solver; `head` is the
    command keyword (`assert`, `set-option`, ...).
    """

    raw: str
    head: str


@dataclass(frozen=True)
class SetOption(Command):
    key: str = ""
    value: str = ""


@dataclass(frozen=True)
class Declare(Command):
    """declare-fun / declare-sort / declare-const / define-fun / define-sort.

    The payload stays raw: the pipeline only replays declarations verbatim.
    """

    name: str = ""


@dataclass(frozen=True)
class Assert(Command):
    term: Term = field(default_factory=lambda: BoolLit(True))


@dataclass(frozen=True)
class Push(Command):
    count: int = 1


@dataclass(frozen=True)
class Pop(Command):
    count: int = 1


@dataclass(frozen=True)
class CheckSat(Command):
    pass


@dataclass(frozen=True)
class Other(Command):
    pass


DECLARE_HEADS = {"declare-fun", "declare-sort", "declare-const", "define-fun", "define-sort"}


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

_LPAREN = "("
_RPAREN = ")"


@dataclass
class _Token:
    kind: str  # "(" | ")" | "symbol" | "quoted" | "string" | "keyword" | "int"
    text: str
    line: int
    column: int
    pos: int  # offset of first character in the source


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.column = 1

    def _error(self, message: str) -> ParseError:
        return ParseError(message, self.line, self.column)

    def _advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.pos < len(self.text):
                if self.text[self.pos] == "\n":
                    self.line += 1
                    self.column = 1
                else:
                    self.column += 1
                self.pos += 1

    def tokens(self) -> list[_Token]:
        out: list[_Token] = []
        text = self.text
        while self.pos < len(text):
            c = text[self.pos]
            if c in " \t\r\n":
                self._advance()
                continue
            if c == ";":  # comment to end of line
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
                continue
            start_line, start_col, start_pos = self.line, self.column, self.pos
            if c == _LPAREN or c == _RPAREN:
                out.append(_Token(c, c, start_line, start_col, start_pos))
                self._advance()
                continue
            if c == "|":
                self._advance()
                begin = self.pos
                while self.pos < len(text) and text[self.pos] != "|":
                    if text[self.pos] == "\\":
                        raise self._error("backslash is not allowed in quoted symbols")
                    self._advance()
                if self.pos >= len(text):
                    raise ParseError("unterminated quoted symbol", start_line, start_col)
                name = text[begin:self.pos]
                self._advance()  # closing |
                out.append(_Token("quoted", name, start_line, start_col, start_pos))
                continue
            if c == '"':
                self._advance()
                chunks: list[str] = []
                while True:
                    if self.pos >= len(text):
                        raise ParseError("unterminated string literal", start_line, start_col)
                    ch = text[self.pos]
                    if ch == '"':
                        if self.pos + 1 < len(text) and text[self.pos + 1] == '"':
                            chunks.append('"')
                            self._advance(2)
                            continue
                        self._advance()
                        break
                    if ch == "\\":
                        raise self._error('string escapes other than "" doubling are not supported')
                    chunks.append(ch)
                    self._advance()
                out.append(_Token("string", "".join(chunks), start_line, start_col, start_pos))
                continue
            if c == ":":
                self._advance()
                begin = self.pos
                while self.pos < len(text) and (text[self.pos].isalnum() or text[self.pos] in SYMBOL_PUNCT):
                    self._advance()
                if begin == self.pos:
                    raise ParseError("empty attribute keyword", start_line, start_col)
                out.append(_Token("keyword", ":" + text[begin:self.pos], start_line, start_col, start_pos))
                continue
            if c.isalnum() or c in SYMBOL_PUNCT:
                begin = self.pos
                while self.pos < len(text) and (text[self.pos].isalnum() or text[self.pos] in SYMBOL_PUNCT):
                    self._advance()
                word = text[begin:self.pos]
                if _is_int_token(word):
                    out.append(_Token("int", word, start_line, start_col, start_pos))
                else:
                    out.append(_Token("symbol", word, start_line, start_col, start_pos))
                continue
            raise self._error(f"unexpected character {c!r}")
        return out


def _is_int_token(word: str) -> bool:
    body = word[1:] if word.startswith("-") and len(word) > 1 else word
    return body.isdigit()


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _Lexer(text).tokens()
        self.index = 0

    def _peek(self) -> _Token | None:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def _next(self, expect: str | None = None) -> _Token:
        tok = self._peek()
        if tok is None:
            last = self.tokens[-1] if self.tokens else None
            line = last.line if last else 1
            col = last.column if last else 1
            raise ParseError("unexpected end of input (unbalanced parentheses?)", line, col)
        if expect is not None and tok.kind != expect:
            raise ParseError(f"expected {expect!r}, found {tok.text!r}", tok.line, tok.column)
        self.index += 1
        return tok

    def at_end(self) -> bool:
        return self.index >= len(self.tokens)

    # -- terms --------------------------------------------------------------

    def parse_term(self) -> Term:
        tok = self._next()
        return self._term_from(tok)

    def _term_from(self, tok: _Token) -> Term:
        if tok.kind == "int":
            return IntLit(int(tok.text))
        if tok.kind == "quoted":
            return QuotedSymbol(tok.text)
        if tok.kind == "string":
            return StringLit(tok.text)
        if tok.kind == "symbol":
            if tok.text == "true":
                return BoolLit(True)
            if tok.text == "false":
                return BoolLit(False)
            return Symbol(tok.text)
        if tok.kind == "keyword":
            raise ParseError(f"attribute keyword {tok.text!r} outside annotation", tok.line, tok.column)
        if tok.kind == _RPAREN:
            raise ParseError("unexpected ')'", tok.line, tok.column)
        # tok.kind == "("
        head_tok = self._next()
        if head_tok.kind == _RPAREN:
            raise ParseError("empty application '()'", head_tok.line, head_tok.column)
        if head_tok.kind == "symbol" and head_tok.text in ("forall", "exists"):
            return self._parse_quantifier(head_tok.text)
        if head_tok.kind == "symbol" and head_tok.text == "let":
            return self._parse_let()
        if head_tok.kind == "symbol" and head_tok.text == "!":
            return self._parse_annotated()
        head = self._term_from(head_tok)
        args: list[Term] = []
        while True:
            tok2 = self._next()
            if tok2.kind == _RPAREN:
                break
            args.append(self._term_from(tok2))
        if not args:
            # `(x)` has no meaning in SMT-LIB terms beyond x itself, but
            # normalizing `(- 5)` to a literal covers Boogie's negatives.
            return head
        if (isinstance(head, Symbol) and head.name == "-" and len(args) == 1
                and isinstance(args[0], IntLit) and args[0].value >= 0):
            return IntLit(-args[0].value)
        return App(head, tuple(args))

    def _parse_binding_name(self) -> Term:
        tok = self._next()
        if tok.kind == "quoted":
            return QuotedSymbol(tok.text)
        if tok.kind == "symbol":
            return Symbol(tok.text)
        raise ParseError(f"expected binding name, found {tok.text!r}", tok.line, tok.column)

    def _parse_quantifier(self, kind: str) -> Term:
        self._next(_LPAREN)
        bindings: list[tuple[Term, Term]] = []
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == _RPAREN:
                self._next()
                break
            self._next(_LPAREN)
            name = self._parse_binding_name()
            sort = self.parse_term()
            self._next(_RPAREN)
            bindings.append((name, sort))
        body = self.parse_term()
        self._next(_RPAREN)
        attributes: tuple[Attr, ...] = ()
        if isinstance(body, Annotated):
            attributes = body.attributes
            body = body.body
        return Quantifier(kind, tuple(bindings), body, attributes)

    def _parse_let(self) -> Term:
        self._next(_LPAREN)
        bindings: list[tuple[Term, Term]] = []
        while True:
            tok = self._peek()
            if tok is not None and tok.kind == _RPAREN:
                self._next()
                break
            self._next(_LPAREN)
            name = self._parse_binding_name()
            value = self.parse_term()
            self._next(_RPAREN)
            bindings.append((name, value))
        body = self.parse_term()
        self._next(_RPAREN)
        return Let(tuple(bindings), body)

    def _parse_annotated(self) -> Term:
        body = self.parse_term()
        attributes: list[Attr] = []
        while True:
            tok = self._next()
            if tok.kind == _RPAREN:
                break
            if tok.kind != "keyword":
                raise ParseError(f"expected attribute keyword, found {tok.text!r}", tok.line, tok.column)
            key = tok.text
            nxt = self._peek()
            if nxt is None:
                raise ParseError("unexpected end of input in annotation", tok.line, tok.column)
            if nxt.kind in ("keyword", _RPAREN):
                attributes.append(Attr(key))
                continue
            if nxt.kind == _LPAREN:
                self._next()
                items: list[Term] = []
                while True:
                    tok2 = self._peek()
                    if tok2 is not None and tok2.kind == _RPAREN:
                        self._next()
                        break
                    items.append(self.parse_term())
                attributes.append(Attr(key, tuple(items)))
            else:
                attributes.append(Attr(key, self.parse_term()))
        if not attributes:
            raise ParseError("annotation without attributes", self.tokens[self.index - 1].line,
                             self.tokens[self.index - 1].column)
        return Annotated(body, tuple(attributes))

    # -- commands -----------------------------------------------------------

    def parse_command(self) -> Command:
        open_tok = self._next()
        if open_tok.kind != _LPAREN:
            raise ParseError(f"expected command '(', found {open_tok.text!r}", open_tok.line, open_tok.column)
        head_tok = self._next()
        if head_tok.kind not in ("symbol", "quoted"):
            raise ParseError(f"expected command name, found {head_tok.text!r}", head_tok.line, head_tok.column)
        head = head_tok.text

        if head == "assert":
            term = self.parse_term()
            end = self._next(_RPAREN)
            return Assert(raw=self._slice(open_tok, end), head=head, term=term)

        # Generic: consume tokens to the matching close paren.
        depth = 1
        parts: list[_Token] = []
        end = open_tok
        while depth > 0:
            tok = self._next()
            end = tok
            if tok.kind == _LPAREN:
                depth += 1
            elif tok.kind == _RPAREN:
                depth -= 1
                if depth == 0:
                    break
            parts.append(tok)
        raw = self._slice(open_tok, end)

        if head == "set-option":
            key = parts[0].text if parts else ""
            value = " ".join(p.text for p in parts[1:])
            return SetOption(raw=raw, head=head, key=key, value=value)
        if head == "push" or head == "pop":
            count = 1
            if parts:
                if parts[0].kind != "int":
                    raise ParseError(f"{head} expects a numeral", parts[0].line, parts[0].column)
                count = int(parts[0].text)
            cls = Push if head == "push" else Pop
            return cls(raw=raw, head=head, count=count)
        if head == "check-sat":
            return CheckSat(raw=raw, head=head)
        if head in DECLARE_HEADS:
            name = parts[0].text if parts else ""
            return Declare(raw=raw, head=head, name=name)
        return Other(raw=raw, head=head)

    def _slice(self, start: _Token, end: _Token) -> str:
        return self.text[start.pos:self._token_end(end)]

    def _token_end(self, tok: _Token) -> int:
        if tok.kind == "quoted":
            return tok.pos + len(tok.text) + 2
        if tok.kind == "string":
            # account for doubled quotes in the source
            return tok.pos + len(tok.text) + 2 + tok.text.count('"')
        return tok.pos + len(tok.text)


def parse_script(text: str) -> list[Command]:
    """Parse a full SMT-LIB script into its command sequence.

    Comments are permitted anywhere; unrecognized commands are preserved as
    `Other` with their exact text so they can be replayed verbatim.
    """
    parser = _Parser(text)
    commands: list[Command] = []
    while not parser.at_end():
        commands.append(parser.parse_command())
    return commands


def parse_term(text: str) -> Term:
    """Parse a single term; trailing input is an error."""
    parser = _Parser(text)
    term = parser.parse_term()
    if not parser.at_end():
        tok = parser._peek()
        assert tok is not None
        raise ParseError(f"unexpected trailing input {tok.text!r}", tok.line, tok.column)
    return term


# ---------------------------------------------------------------------------
# Printer
# ---------------------------------------------------------------------------

def print_term(t: Term) -> str:
    """Canonical single-space s-expression; parse(print(t)) == t."""
    out: list[str] = []
    _print_into(t, out)
    return "".join(out)


def _print_into(t: Term, out: list[str]) -> None:
    if isinstance(t, Symbol):
        out.append(t.name)
    elif isinstance(t, QuotedSymbol):
        out.append("|")
        out.append(t.name)
        out.append("|")
    elif isinstance(t, IntLit):
        if t.value < 0:
            out.append(f"(- {-t.value})")
        else:
            out.append(str(t.value))
    elif isinstance(t, BoolLit):
        out.append("true" if t.value else "false")
    elif isinstance(t, StringLit):
        out.append('"')
        out.append(t.value.replace('"', '""'))
        out.append('"')
    elif isinstance(t, App):
        out.append("(")
        _print_into(t.head, out)
        for a in t.args:
            out.append(" ")
            _print_into(a, out)
        out.append(")")
    elif isinstance(t, Quantifier):
        out.append(f"({t.kind} (")
        for i, (name, sort) in enumerate(t.bindings):
            if i:
                out.append(" ")
            out.append("(")
            _print_into(name, out)
            out.append(" ")
            _print_into(sort, out)
            out.append(")")
        out.append(") ")
        if t.attributes:
            _print_into(Annotated(t.body, t.attributes), out)
        else:
            _print_into(t.body, out)
        out.append(")")
    elif isinstance(t, Let):
        out.append("(let (")
        for i, (name, value) in enumerate(t.bindings):
            if i:
                out.append(" ")
            out.append("(")
            _print_into(name, out)
            out.append(" ")
            _print_into(value, out)
            out.append(")")
        out.append(") ")
        _print_into(t.body, out)
        out.append(")")
    elif isinstance(t, Annotated):
        out.append("(! ")
        _print_into(t.body, out)
        for attr in t.attributes:
            out.append(" ")
            out.append(attr.key)
            if attr.value is None:
                continue
            out.append(" ")
            if isinstance(attr.value, tuple):
                out.append("(")
                for i, item in enumerate(attr.value):
                    if i:
                        out.append(" ")
                    _print_into(item, out)
                out.append(")")
            else:
                _print_into(attr.value, out)
        out.append(")")
    else:  # pragma: no cover
        raise TypeError(f"not a Term: {t!r}")


def print_command(c: Command) -> str:
    """The replayable text of a command (exact source or canonical print)."""
    if isinstance(c, Assert):
        return f"(assert {print_term(c.term)})"
    return c.raw
