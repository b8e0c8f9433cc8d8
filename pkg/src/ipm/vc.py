"""Splitting a Boogie-emitted script into prelude and per-obligation blocks.

Boogie emits a shared prelude (solver options, declarations, around a thousand
axioms) followed by one `(push 1) ... (check-sat) ... (pop 1)` block per
verification condition.  Each block asserts the negation of an implication
chain; peeling that chain yields the hypothesis list and the goal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .sexpr import (
    Annotated, App, Assert, BoolLit, CheckSat, Command, IntLit, Let, Pop,
    Push, Quantifier, QuotedSymbol, StringLit, Symbol, Term, symbol_name,
)

__all__ = [
    "ScriptSplit", "VcBlock", "Obligation", "VcError", "segment_script",
    "extract_obligation", "find_ipm_targets", "reassemble", "inline_lets",
    "free_symbols", "PROTECT_TO_PROVE_SUFFIX",
]

PROTECT_TO_PROVE_SUFFIX = "__protectToProve"

# Let-inlining duplicates bindings used more than once; past this many nodes
# the expansion is aborted rather than silently ballooning.
DEFAULT_INLINE_BUDGET = 10**6

_OPTION_HEADS = {"set-option", "set-info", "set-logic"}


class VcError(Exception):
    """A script or block that does not follow Boogie's emission shape."""


@dataclass(frozen=True)
class VcBlock:
    """The commands strictly between one matched push/pop pair."""

    commands: tuple[Command, ...]

    def check_sats(self) -> list[CheckSat]:
        return [c for c in self.commands if isinstance(c, CheckSat)]

    def negated_asserts(self) -> list[Assert]:
        out = []
        for c in self.commands:
            if isinstance(c, Assert) and isinstance(c.term, App) and symbol_name(c.term.head) == "not":
                out.append(c)
        return out


@dataclass(frozen=True)
class ScriptSplit:
    options: tuple[Command, ...]
    prelude: tuple[Command, ...]
    blocks: tuple[VcBlock, ...]


@dataclass(frozen=True)
class Obligation:
    """One verification condition: hypotheses, goal and replayable context."""

    hypotheses: tuple[Term, ...]
    goal: Term
    local_decls: tuple[Command, ...]
    block: VcBlock
    is_ipm_target: bool = False


def segment_script(commands: list[Command] | tuple[Command, ...]) -> ScriptSplit:
    """Assign every command to options, prelude, or exactly one block.

    Push/pop must be balanced with counts of 1 (Boogie's style); anything else
    is reported rather than silently merged.
    """
    commands = tuple(commands)
    i = 0
    options: list[Command] = []
    while i < len(commands) and commands[i].head in _OPTION_HEADS:
        options.append(commands[i])
        i += 1

    prelude: list[Command] = []
    while i < len(commands) and not isinstance(commands[i], (Push, Pop)):
        prelude.append(commands[i])
        i += 1

    blocks: list[VcBlock] = []
    while i < len(commands):
        cmd = commands[i]
        if isinstance(cmd, Pop):
            raise VcError(f"pop without matching push (command {i + 1})")
        if not isinstance(cmd, Push):
            raise VcError(
                f"unexpected top-level command between obligation blocks (command {i + 1}): {cmd.raw}")
        if cmd.count != 1:
            raise VcError(f"(push {cmd.count}) is not supported; Boogie emits (push 1)")
        i += 1
        body: list[Command] = []
        while i < len(commands) and not isinstance(commands[i], (Push, Pop)):
            body.append(commands[i])
            i += 1
        if i >= len(commands):
            raise VcError("unbalanced push/pop: script ended inside a block")
        closer = commands[i]
        if isinstance(closer, Push):
            raise VcError(f"nested (push 1) inside an obligation block (command {i + 1})")
        assert isinstance(closer, Pop)
        if closer.count != 1:
            raise VcError(f"(pop {closer.count}) is not supported; Boogie emits (pop 1)")
        i += 1
        blocks.append(VcBlock(tuple(body)))

    return ScriptSplit(tuple(options), tuple(prelude), tuple(blocks))


def reassemble(split: ScriptSplit) -> tuple[Command, ...]:
    """Inverse of segment_script: options + prelude + each block rewrapped."""
    out: list[Command] = list(split.options) + list(split.prelude)
    for block in split.blocks:
        out.append(Push(raw="(push 1)", head="push", count=1))
        out.extend(block.commands)
        out.append(Pop(raw="(pop 1)", head="pop", count=1))
    return tuple(out)


# ---------------------------------------------------------------------------
# Let inlining
# ---------------------------------------------------------------------------

class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1) -> None:
        self.used += n
        if self.used > self.limit:
            raise VcError(f"let inlining exceeded the {self.limit}-node budget")


def free_symbols(t: Term) -> set[str]:
    """Unbound symbol names of a term (quantifier and let binders excluded)."""
    out: set[str] = set()
    _free_symbols(t, frozenset(), out)
    return out


def _free_symbols(t: Term, bound: frozenset[str], out: set[str]) -> None:
    if isinstance(t, (Symbol, QuotedSymbol)):
        if t.name not in bound:
            out.add(t.name)
    elif isinstance(t, App):
        _free_symbols(t.head, bound, out)
        for a in t.args:
            _free_symbols(a, bound, out)
    elif isinstance(t, Quantifier):
        names = frozenset(n.name for n, _ in t.bindings if symbol_name(n) is not None)
        for _, sort in t.bindings:
            _free_symbols(sort, bound, out)
        _free_symbols(t.body, bound | names, out)
    elif isinstance(t, Let):
        names = frozenset(n.name for n, _ in t.bindings)
        for _, value in t.bindings:
            _free_symbols(value, bound, out)
        _free_symbols(t.body, bound | names, out)
    elif isinstance(t, Annotated):
        _free_symbols(t.body, bound, out)
    # literals carry no symbols


def term_size(t: Term) -> int:
    """Node count of a term."""
    if isinstance(t, App):
        return 1 + term_size(t.head) + sum(term_size(a) for a in t.args)
    if isinstance(t, (Quantifier, Annotated)):
        return 1 + term_size(t.body)
    if isinstance(t, Let):
        return 1 + term_size(t.body) + sum(term_size(v) for _, v in t.bindings)
    return 1


def inline_lets(t: Term, budget: int = DEFAULT_INLINE_BUDGET) -> Term:
    """Substitute every let binding into its body (duplicating as needed)."""
    return _inline(t, {}, _Budget(budget))


def _inline(t: Term, env: dict[str, tuple[Term, int]], budget: _Budget) -> Term:
    budget.spend()
    if isinstance(t, (Symbol, QuotedSymbol)):
        bound = env.get(t.name)
        if bound is None:
            return t
        value, size = bound
        budget.spend(size)  # a substitution emits a whole copy of the value
        return value
    if isinstance(t, (IntLit, BoolLit, StringLit)):
        return t
    if isinstance(t, App):
        head = _inline(t.head, env, budget)
        return App(head, tuple(_inline(a, env, budget) for a in t.args))
    if isinstance(t, Let):
        new_env = dict(env)
        for name, value in t.bindings:
            assert isinstance(name, (Symbol, QuotedSymbol))
            inlined = _inline(value, env, budget)
            new_env[name.name] = (inlined, term_size(inlined))
        return _inline(t.body, new_env, budget)
    if isinstance(t, Quantifier):
        names = {symbol_name(n) for n, _ in t.bindings}
        inner = {k: v for k, v in env.items() if k not in names}
        if inner:
            # A binder capturing a free symbol of a substituted value would
            # change meaning; Boogie's mangled names rule this out in practice.
            body_free = free_symbols(t.body)
            for k, (v, _) in inner.items():
                if k in body_free and names & free_symbols(v):
                    raise VcError(
                        f"let inlining would capture a variable under binder of {sorted(names)}")
        return Quantifier(t.kind, t.bindings, _inline(t.body, inner, budget), t.attributes)
    if isinstance(t, Annotated):
        return Annotated(_inline(t.body, env, budget), t.attributes)
    raise TypeError(f"not a Term: {t!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# Obligation extraction
# ---------------------------------------------------------------------------

def extract_obligation(block: VcBlock, inline_budget: int = DEFAULT_INLINE_BUDGET) -> Obligation:
    """Peel the block's negated assert into hypotheses and a goal.

    The assert body is processed by (a) inlining all let bindings, (b) peeling
    top-level implications into antecedents, and (c) flattening top-level
    conjunctions among the antecedents.  The goal keeps its structure intact.
    """
    negated = block.negated_asserts()
    if len(negated) != 1:
        raise VcError(
            f"obligation block must contain exactly one (assert (not ...)); found {len(negated)}")
    checks = block.check_sats()
    if len(checks) != 1:
        raise VcError(f"obligation block must contain exactly one (check-sat); found {len(checks)}")
    the_assert = negated[0]
    body = the_assert.term
    assert isinstance(body, App)
    if len(body.args) != 1:
        raise VcError("negated assert must apply `not` to exactly one formula")

    formula = inline_lets(body.args[0], inline_budget)

    antecedents: list[Term] = []
    goal = formula
    while isinstance(goal, App) and symbol_name(goal.head) == "=>" and len(goal.args) >= 2:
        antecedents.extend(goal.args[:-1])
        goal = goal.args[-1]

    hypotheses: list[Term] = []
    for a in antecedents:
        _flatten_and(a, hypotheses)

    local_decls = tuple(c for c in block.commands if c is not the_assert and not isinstance(c, CheckSat))
    return Obligation(tuple(hypotheses), goal, local_decls, block)


def _flatten_and(t: Term, out: list[Term]) -> None:
    if isinstance(t, App) and symbol_name(t.head) == "and":
        for a in t.args:
            _flatten_and(a, out)
    else:
        out.append(t)


def _contains_to_prove(t: Term) -> bool:
    if isinstance(t, App):
        head_name = symbol_name(t.head)
        if head_name is not None and PROTECT_TO_PROVE_SUFFIX in head_name:
            return True
        return _contains_to_prove(t.head) or any(_contains_to_prove(a) for a in t.args)
    if isinstance(t, (Quantifier, Annotated)):
        return _contains_to_prove(t.body)
    if isinstance(t, Let):
        return _contains_to_prove(t.body) or any(_contains_to_prove(v) for _, v in t.bindings)
    return False


def find_ipm_targets(obligations: list[Obligation]) -> list[Obligation]:
    """The obligations whose goal contains a `__protectToProve` call.

    Returns them in file order with `is_ipm_target` set; an empty result is
    valid and reported downstream.
    """
    targets = []
    for ob in obligations:
        if _contains_to_prove(ob.goal):
            targets.append(replace(ob, is_ipm_target=True))
    return targets
