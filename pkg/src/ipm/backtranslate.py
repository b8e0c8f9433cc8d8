"""Back-translation of solver-level terms to source-level display forms.

The instrumented verification condition wraps every variable occurrence in an
identity "protection" call carrying the source name as an encoded character
sequence.  This module recovers the name map from those calls, strips the
calls to obtain the solver-facing term, and rewrites the supported fragment
(integers, Booleans, arithmetic) into readable fully parenthesized formulas.

Display rewriting never touches the solver-facing terms: what is sent to the
solver and what is shown to the user are kept strictly apart.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

from .sexpr import (
    Annotated, App, BoolLit, IntLit, Let, Quantifier, QuotedSymbol, Symbol,
    Term, print_term, symbol_name,
)
from .vc import Obligation

__all__ = [
    "BacktranslateError", "NameMap", "NameEntry", "DafnyExpr", "Var",
    "IntConst", "BoolConst", "BinOp", "UnOp", "Ite",
    "decode_string_literal", "build_name_map", "strip_protections",
    "display_rewrite", "is_suppressed_hypothesis", "eliminate_dead_definitions",
    "pretty_print", "Displayer", "PreparedObligation", "prepare_obligation",
]


class BacktranslateError(Exception):
    pass


# Head recognizers.  Boogie monomorphizes box/unbox/literal wrappers with
# numeric suffixes that differ per file, so matching is by prefix; protection
# functions carry a varying module-qualification prefix, so those match by
# suffix.

def _is_box_head(name: str | None) -> bool:
    return name is not None and name.startswith("$Box")


def _is_unbox_head(name: str | None) -> bool:
    return name is not None and name.startswith("$Unbox")


def _is_lit_head(name: str | None) -> bool:
    return name is not None and (name == "Lit" or name.startswith("Lit_"))


def _protect_kind(name: str | None) -> str | None:
    """"protect" | "scope" | "to_prove" for protection heads, else None."""
    if name is None:
        return None
    if name.endswith("__protectToProve"):
        return "to_prove"
    if name.endswith("__protectScope"):
        return "scope"
    if name.endswith("__protect"):
        return "protect"
    return None


def _strip_box(t: Term) -> Term:
    if isinstance(t, App) and _is_box_head(symbol_name(t.head)) and len(t.args) == 1:
        return t.args[0]
    return t


def _strip_lit(t: Term) -> Term:
    while isinstance(t, App) and _is_lit_head(symbol_name(t.head)) and len(t.args) == 1:
        t = t.args[0]
    return t


# ---------------------------------------------------------------------------
# String-literal decoding
# ---------------------------------------------------------------------------

def decode_string_literal(t: Term) -> str:
    """Decode a `Seq#Build`/`Seq#Empty` chain of character codes into text.

    Elements are (possibly boxed) `char#FromInt` applications with literal
    arguments; characters come out in chain order.
    """
    t = _strip_lit(t)
    if symbol_name(t) == "Seq#Empty":
        return ""
    if isinstance(t, App) and symbol_name(t.head) == "Seq#Build":
        if len(t.args) != 2:
            raise BacktranslateError(f"Seq#Build expects 2 arguments: {print_term(t)}")
        prefix = decode_string_literal(t.args[0])
        return prefix + _decode_char(t.args[1])
    raise BacktranslateError(f"not a character-sequence chain: {print_term(t)}")


def _decode_char(t: Term) -> str:
    t = _strip_box(t)
    if isinstance(t, App) and symbol_name(t.head) == "char#FromInt" and len(t.args) == 1:
        code = t.args[0]
        if isinstance(code, IntLit):
            return chr(code.value)
        raise BacktranslateError(f"non-literal character code: {print_term(code)}")
    raise BacktranslateError(f"unexpected chain element: {print_term(t)}")


# ---------------------------------------------------------------------------
# Name map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NameEntry:
    dafny_name: str
    smt_name: str
    in_scope: bool = False


class NameMap:
    """Bidirectional source-name / mangled-name association.

    Reverse lookup is a function (each mangled name belongs to one source
    name); forward lookup may be one-to-many under shadowing, in which case
    the entry marked in-scope wins.
    """

    def __init__(self) -> None:
        self.entries: list[NameEntry] = []
        self._forward: dict[str, list[int]] = {}
        self._reverse: dict[str, int] = {}

    def add(self, dafny_name: str, smt_name: str, in_scope: bool = False) -> None:
        idx = self._reverse.get(smt_name)
        if idx is not None:
            entry = self.entries[idx]
            if entry.dafny_name != dafny_name:
                raise BacktranslateError(
                    f"mangled name {smt_name!r} claimed by both "
                    f"{entry.dafny_name!r} and {dafny_name!r}")
            if in_scope and not entry.in_scope:
                self._check_single_scope(dafny_name, smt_name)
                self.entries[idx] = dc_replace(entry, in_scope=True)
            return
        if in_scope:
            self._check_single_scope(dafny_name, smt_name)
        entry = NameEntry(dafny_name, smt_name, in_scope)
        self.entries.append(entry)
        self._reverse[smt_name] = len(self.entries) - 1
        self._forward.setdefault(dafny_name, []).append(len(self.entries) - 1)

    def _check_single_scope(self, dafny_name: str, smt_name: str) -> None:
        for i in self._forward.get(dafny_name, []):
            e = self.entries[i]
            if e.in_scope and e.smt_name != smt_name:
                raise BacktranslateError(
                    f"two in-scope mangled names for {dafny_name!r}: "
                    f"{e.smt_name!r} and {smt_name!r}")

    def to_dafny(self, smt_name: str) -> str | None:
        idx = self._reverse.get(smt_name)
        return self.entries[idx].dafny_name if idx is not None else None

    def to_smt(self, dafny_name: str) -> list[str]:
        return [self.entries[i].smt_name for i in self._forward.get(dafny_name, [])]

    def resolve(self, dafny_name: str) -> str | None:
        """The mangled name for a source identifier, in-scope entry first."""
        candidates = self._forward.get(dafny_name, [])
        if not candidates:
            return None
        for i in candidates:
            if self.entries[i].in_scope:
                return self.entries[i].smt_name
        return self.entries[candidates[0]].smt_name

    def known_names(self) -> list[str]:
        return sorted(self._forward)


def _protect_parts(t: App, kind: str) -> tuple[Term, Term]:
    """(payload, name chain) of a protection application."""
    min_arity = 3 if kind == "to_prove" else 2
    if len(t.args) < min_arity:
        raise BacktranslateError(
            f"protection application with unexpected arity: {print_term(t)}")
    if kind == "to_prove":
        return t.args[-3], t.args[-2]
    return t.args[-2], t.args[-1]


def build_name_map(t: Term | list[Term] | tuple[Term, ...]) -> NameMap:
    """Collect (source name, mangled name) pairs from protection calls.

    Every `__protect` whose boxed payload is a variable contributes an entry;
    `__protectScope` occurrences mark theirs as in-scope; duplicates collapse.
    """
    names = NameMap()
    terms = list(t) if isinstance(t, (list, tuple)) else [t]
    for term in terms:
        _walk_names(term, names)
    return names


def _walk_names(t: Term, names: NameMap) -> None:
    if isinstance(t, App):
        kind = _protect_kind(symbol_name(t.head))
        if kind in ("protect", "scope"):
            payload, chain = _protect_parts(t, kind)
            var = _strip_box(payload)
            var_name = symbol_name(var)
            if var_name is not None:
                names.add(decode_string_literal(chain), var_name, in_scope=(kind == "scope"))
            _walk_names(payload, names)
            return
        _walk_names(t.head, names)
        for a in t.args:
            _walk_names(a, names)
    elif isinstance(t, (Quantifier, Annotated)):
        _walk_names(t.body, names)
    elif isinstance(t, Let):
        for _, v in t.bindings:
            _walk_names(v, names)
        _walk_names(t.body, names)


# ---------------------------------------------------------------------------
# Protection stripping
# ---------------------------------------------------------------------------

def strip_protections(t: Term) -> Term:
    """Replace every protection call by its payload; the result is what the
    solver sees.

    A surrounding box/unbox pair is removed along with the call, and
    `__protectScope` conjuncts reduce to true and disappear; everything else
    is untouched.
    """
    if isinstance(t, App):
        head_name = symbol_name(t.head)
        # Unbox directly wrapping a protection call: drop both wrappers.
        if _is_unbox_head(head_name) and len(t.args) == 1 and isinstance(t.args[0], App):
            inner_kind = _protect_kind(symbol_name(t.args[0].head))
            if inner_kind in ("protect", "to_prove"):
                payload, _ = _protect_parts(t.args[0], inner_kind)
                return strip_protections(_strip_box(payload))
        kind = _protect_kind(head_name)
        if kind == "scope":
            return BoolLit(True)
        if kind in ("protect", "to_prove"):
            payload, _ = _protect_parts(t, kind)
            return strip_protections(_strip_box(payload))
        if head_name == "and":
            parts = [strip_protections(a) for a in t.args
                     if _protect_kind(symbol_name(a.head) if isinstance(a, App) else None) != "scope"]
            if not parts:
                return BoolLit(True)
            if len(parts) == 1:
                return parts[0]
            return App(t.head, tuple(parts))
        return App(strip_protections(t.head), tuple(strip_protections(a) for a in t.args))
    if isinstance(t, Quantifier):
        return Quantifier(t.kind, t.bindings, strip_protections(t.body), t.attributes)
    if isinstance(t, Let):
        return Let(tuple((n, strip_protections(v)) for n, v in t.bindings),
                   strip_protections(t.body))
    if isinstance(t, Annotated):
        return Annotated(strip_protections(t.body), t.attributes)
    return t


# ---------------------------------------------------------------------------
# Display expressions
# ---------------------------------------------------------------------------

class DafnyExpr:
    __slots__ = ()


@dataclass(frozen=True)
class Var(DafnyExpr):
    name: str


@dataclass(frozen=True)
class IntConst(DafnyExpr):
    value: int


@dataclass(frozen=True)
class BoolConst(DafnyExpr):
    value: bool


@dataclass(frozen=True)
class BinOp(DafnyExpr):
    op: str
    lhs: DafnyExpr
    rhs: DafnyExpr


@dataclass(frozen=True)
class UnOp(DafnyExpr):
    op: str
    arg: DafnyExpr


@dataclass(frozen=True)
class Ite(DafnyExpr):
    cond: DafnyExpr
    then: DafnyExpr
    orelse: DafnyExpr


# Solver symbol -> infix operator for the directly mappable heads.
_BINOP_HEADS = {
    "Mod": "%", "Mul": "*", "Div": "/",
    "<": "<", "<=": "<=", ">": ">", ">=": ">=",
}

_LEFT_FOLD_HEADS = {"+": "+", "-": "-", "and": "&&", "or": "||", "*": "*"}


def display_rewrite(t: Term, names: NameMap) -> DafnyExpr | None:
    """The display form of a protection-stripped term, if it falls in the
    supported fragment (integers, Booleans, arithmetic); None otherwise, in
    which case the caller renders raw solver syntax.
    """
    if isinstance(t, IntLit):
        return IntConst(t.value)
    if isinstance(t, BoolLit):
        return BoolConst(t.value)
    if isinstance(t, (Symbol, QuotedSymbol)):
        mapped = names.to_dafny(t.name)
        # A shadowed-out binding must not render as the bare source name:
        # re-entering that name would resolve to the in-scope binding and
        # change meaning.  Show the mangled name instead, visible but honest.
        if mapped is not None and names.resolve(mapped) == t.name:
            return Var(mapped)
        return Var(t.name)
    if not isinstance(t, App):
        return None
    head = symbol_name(t.head)
    if head is None:
        return None
    if head == "LitInt" and len(t.args) == 1:
        inner = display_rewrite(t.args[0], names)
        return inner
    if _is_lit_head(head) and len(t.args) == 1:
        return display_rewrite(t.args[0], names)
    args = t.args
    if head in _BINOP_HEADS and len(args) == 2:
        return _binop(_BINOP_HEADS[head], args, names)
    if head == "-" and len(args) == 1:
        arg = display_rewrite(args[0], names)
        return UnOp("-", arg) if arg is not None else None
    if head in _LEFT_FOLD_HEADS and len(args) >= 2:
        parts = [display_rewrite(a, names) for a in args]
        if any(p is None for p in parts):
            return None
        acc = parts[0]
        for p in parts[1:]:
            acc = BinOp(_LEFT_FOLD_HEADS[head], acc, p)
        return acc
    if head == "=>" and len(args) >= 2:
        parts = [display_rewrite(a, names) for a in args]
        if any(p is None for p in parts):
            return None
        acc = parts[-1]
        for p in reversed(parts[:-1]):
            acc = BinOp("==>", p, acc)
        return acc
    if head == "=" and len(args) == 2:
        return _binop("==", args, names)
    if head == "not" and len(args) == 1:
        inner = args[0]
        if isinstance(inner, App) and symbol_name(inner.head) == "=" and len(inner.args) == 2:
            return _binop("!=", inner.args, names)
        arg = display_rewrite(inner, names)
        return UnOp("!", arg) if arg is not None else None
    if head == "ite" and len(args) == 3:
        parts = [display_rewrite(a, names) for a in args]
        if any(p is None for p in parts):
            return None
        return Ite(parts[0], parts[1], parts[2])
    return None


def _binop(op: str, args: tuple[Term, ...], names: NameMap) -> DafnyExpr | None:
    lhs = display_rewrite(args[0], names)
    rhs = display_rewrite(args[1], names)
    if lhs is None or rhs is None:
        return None
    return BinOp(op, lhs, rhs)


def _mentions_head(t: Term, name: str) -> bool:
    if isinstance(t, App):
        if symbol_name(t.head) == name:
            return True
        return any(_mentions_head(a, name) for a in t.args)
    return symbol_name(t) == name


def _mentions_prefix(t: Term, prefix: str) -> bool:
    n = symbol_name(t)
    if n is not None and n.startswith(prefix):
        return True
    if isinstance(t, App):
        return (_mentions_prefix(t.head, prefix)
                or any(_mentions_prefix(a, prefix) for a in t.args))
    return False


def is_suppressed_hypothesis(t: Term) -> bool:
    """Hypotheses that are translation artifacts and display nowhere:
    ControlFlow equalities, `$IsGoodHeap`/`$IsHeapAnchor` applications, and
    `$_ModifiesFrame` bindings.  They stay in the solver-facing list.
    """
    if isinstance(t, App):
        head = symbol_name(t.head)
        if head in ("$IsGoodHeap", "$IsHeapAnchor"):
            return True
        if head == "=" and len(t.args) == 2:
            for side in t.args:
                if isinstance(side, App) and symbol_name(side.head) == "ControlFlow":
                    return True
                n = symbol_name(side)
                if n is not None and n.startswith("$_ModifiesFrame"):
                    return True
                if _mentions_prefix(side, "$_ModifiesFrame"):
                    return True
    return False


def _occurs(name: str, e: DafnyExpr) -> bool:
    if isinstance(e, Var):
        return e.name == name
    if isinstance(e, BinOp):
        return _occurs(name, e.lhs) or _occurs(name, e.rhs)
    if isinstance(e, UnOp):
        return _occurs(name, e.arg)
    if isinstance(e, Ite):
        return _occurs(name, e.cond) or _occurs(name, e.then) or _occurs(name, e.orelse)
    return False


def eliminate_dead_definitions(hypotheses: list[DafnyExpr],
                               goal: DafnyExpr | None = None) -> list[DafnyExpr]:
    """Drop `v == e` hypotheses whose v occurs nowhere else, to a fixed point.

    Such definitions arise when the only uses of v sit inside expressions the
    display suppresses.  Operates on display forms only.
    """
    out = list(hypotheses)
    changed = True
    while changed:
        changed = False
        for i, h in enumerate(out):
            if not (isinstance(h, BinOp) and h.op == "==" and isinstance(h.lhs, Var)):
                continue
            v = h.lhs.name
            used = any(_occurs(v, other) for j, other in enumerate(out) if j != i)
            if not used and goal is not None:
                used = _occurs(v, goal)
            if not used:
                del out[i]
                changed = True
                break
    return out


_PAREN_OPS = True  # every compound prints with its own parentheses


def pretty_print(e: DafnyExpr) -> str:
    """Fully parenthesized rendering; deterministic."""
    if isinstance(e, Var):
        return e.name
    if isinstance(e, IntConst):
        return str(e.value)
    if isinstance(e, BoolConst):
        return "true" if e.value else "false"
    if isinstance(e, BinOp):
        return f"({pretty_print(e.lhs)} {e.op} {pretty_print(e.rhs)})"
    if isinstance(e, UnOp):
        return f"({e.op}{pretty_print(e.arg)})"
    if isinstance(e, Ite):
        return f"(if {pretty_print(e.cond)} then {pretty_print(e.then)} else {pretty_print(e.orelse)})"
    raise TypeError(f"not a display expression: {e!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Obligation preparation and rendering
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PreparedObligation:
    """An obligation ready for an interactive session.

    `hypotheses`/`goal` are the protection-stripped solver-facing terms; the
    raw obligation is kept alongside so nothing is lost.
    """

    raw: Obligation
    names: NameMap
    hypotheses: tuple[Term, ...]
    goal: Term
    label: str | None


def _find_to_prove(t: Term) -> App | None:
    if isinstance(t, App):
        if _protect_kind(symbol_name(t.head)) == "to_prove":
            return t
        sub = _find_to_prove(t.head)
        if sub is not None:
            return sub
        for a in t.args:
            sub = _find_to_prove(a)
            if sub is not None:
                return sub
    elif isinstance(t, (Quantifier, Annotated)):
        return _find_to_prove(t.body)
    elif isinstance(t, Let):
        for _, v in t.bindings:
            sub = _find_to_prove(v)
            if sub is not None:
                return sub
        return _find_to_prove(t.body)
    return None


def prepare_obligation(ob: Obligation) -> PreparedObligation:
    names = build_name_map(list(ob.hypotheses) + [ob.goal])
    label = None
    to_prove = _find_to_prove(ob.goal)
    if to_prove is not None:
        try:
            _, chain = _protect_parts(to_prove, "to_prove")
            label = decode_string_literal(chain)
        except BacktranslateError:
            label = None
    return PreparedObligation(
        raw=ob,
        names=names,
        hypotheses=tuple(strip_protections(h) for h in ob.hypotheses),
        goal=strip_protections(ob.goal),
        label=label,
    )


class Displayer:
    """Renders solver-facing terms for the user through one name map."""

    def __init__(self, names: NameMap):
        self.names = names

    def term_text(self, t: Term) -> str:
        """Display text of one term; raw solver syntax outside the fragment."""
        d = display_rewrite(t, self.names)
        return pretty_print(d) if d is not None else print_term(t)

    def render_goal(self, hypotheses: tuple[Term, ...], goal: Term) -> tuple[list[str], str]:
        """(hypothesis display lines, goal display line) for one proof node.

        Suppressed hypotheses are hidden, dead definitions eliminated; terms
        outside the fragment fall back to raw solver syntax (never dropped).
        """
        goal_display = display_rewrite(goal, self.names)
        goal_text = pretty_print(goal_display) if goal_display is not None else print_term(goal)

        entries: list[tuple[DafnyExpr | None, str]] = []
        for h in hypotheses:
            if is_suppressed_hypothesis(h):
                continue
            d = display_rewrite(h, self.names)
            entries.append((d, pretty_print(d) if d is not None else print_term(h)))

        displayed = [d for d, _ in entries if d is not None]
        kept = set(map(id, eliminate_dead_definitions(displayed, goal_display)))
        lines: list[str] = []
        for d, text in entries:
            if d is None or id(d) in kept:
                lines.append(text)
        return lines, goal_text
