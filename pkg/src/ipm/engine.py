"""The tactic-driven goal tree.

Each node is one proof obligation (hypotheses and a goal, both solver-facing
terms).  Tactics split the focused node into sub-obligations; every new
obligation is sent to the solver first and only the ones it cannot discharge
stay open.  States are immutable snapshots, which makes undo exact: the
history simply stores the state before each mutating tactic.

Node ids are small integers assigned in creation order and never reused, so
transcripts are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .backtranslate import Displayer, PreparedObligation, strip_protections
from .sexpr import Term, mk_app
from .solver import Session, Verdict, check_entailment

__all__ = [
    "EngineError", "Tactic", "ProofNode", "ProofState", "TacticReport",
    "init_session", "apply_tactic", "undo", "focus", "reconstruct_proof",
    "is_tainted", "node_formula",
]

OPEN = "open"
AUTO_DISCHARGED = "auto_discharged"
CLOSED_BY_TACTIC = "closed_by_tactic"
ASSUMED = "assumed"
# A tactic was applied but some child is still open; becomes closed_by_tactic
# once every child closes.
EXPANDED = "expanded"

TACTIC_KINDS = ("check", "assert", "case", "assume")


class EngineError(Exception):
    pass


@dataclass(frozen=True)
class Tactic:
    kind: str  # check | assert | case | assume
    arg: Term

    def __post_init__(self):
        if self.kind not in TACTIC_KINDS:
            raise EngineError(f"unknown tactic {self.kind!r}")


@dataclass(frozen=True)
class ProofNode:
    node_id: int
    hypotheses: tuple[Term, ...]
    goal: Term
    status: str = OPEN
    tainted: bool = False
    applied_tactic: Tactic | None = None
    children: tuple[int, ...] = ()
    display_hypotheses: tuple[str, ...] = ()
    display_goal: str = ""

    @property
    def is_open(self) -> bool:
        return self.status == OPEN

    @property
    def is_closed(self) -> bool:
        return self.status in (AUTO_DISCHARGED, CLOSED_BY_TACTIC, ASSUMED)


@dataclass(frozen=True)
class ProofState:
    nodes: dict[int, ProofNode]
    root_id: int
    focus_id: int | None
    open_order: tuple[int, ...]
    next_id: int
    history: tuple["ProofState", ...] = field(default=())

    def node(self, node_id: int) -> ProofNode:
        return self.nodes[node_id]

    def snapshot(self) -> "ProofState":
        """The state with its history detached, for storing and comparing."""
        return replace(self, history=())

    @property
    def open_count(self) -> int:
        return len(self.open_order)

    @property
    def tree_closed(self) -> bool:
        return not self.open_order


@dataclass(frozen=True)
class TacticReport:
    tactic: Tactic
    check_verdict: Verdict | None = None
    new_open_ids: tuple[int, ...] = ()
    discharged_ids: tuple[int, ...] = ()
    subtree_closed: bool = False
    tree_closed: bool = False


def is_tainted(state: ProofState) -> bool:
    return any(n.tainted for n in state.nodes.values())


def node_formula(node: ProofNode) -> Term:
    """The node's obligation as one nested implication (h1 => ... => goal)."""
    formula = node.goal
    for h in reversed(node.hypotheses):
        formula = mk_app("=>", h, formula)
    return formula


def _query(session: Session, hypotheses: tuple[Term, ...], goal: Term) -> Verdict:
    verdict = check_entailment(session, hypotheses, goal)
    if verdict.kind == "error":
        raise EngineError(f"solver failure: {verdict.reason}")
    return verdict


def _make_node(node_id: int, hypotheses: tuple[Term, ...], goal: Term,
               displayer: Displayer, tainted: bool = False) -> ProofNode:
    hyp_lines, goal_text = displayer.render_goal(hypotheses, goal)
    return ProofNode(node_id, hypotheses, goal, tainted=tainted,
                     display_hypotheses=tuple(hyp_lines), display_goal=goal_text)


def init_session(obligation: PreparedObligation, session: Session,
                 displayer: Displayer) -> ProofState:
    """Build the root node and try to discharge it outright."""
    root = _make_node(1, obligation.hypotheses, obligation.goal, displayer)
    verdict = _query(session, root.hypotheses, root.goal)
    if verdict.is_proved:
        root = replace(root, status=AUTO_DISCHARGED)
        return ProofState({1: root}, 1, None, (), 2)
    return ProofState({1: root}, 1, 1, (1,), 2)


def apply_tactic(state: ProofState, session: Session, tactic: Tactic,
                 displayer: Displayer) -> tuple[ProofState, TacticReport]:
    """Apply one tactic to the focused goal.

    `check` reports a verdict and leaves the state untouched (no history
    entry); the other tactics snapshot the state, create children, send each
    to the solver, and move focus to the first open child, else onward in
    creation order.
    """
    if state.focus_id is None:
        raise EngineError("no open goal")
    node = state.node(state.focus_id)
    if not node.is_open:
        raise EngineError(f"goal {node.node_id} is not open")
    psi = tactic.arg
    if strip_protections(psi) != psi:
        raise EngineError("tactic argument contains protection calls")

    if tactic.kind == "check":
        verdict = _query(session, node.hypotheses, psi)
        return state, TacticReport(tactic, check_verdict=verdict,
                                   tree_closed=state.tree_closed)

    if tactic.kind == "assert":
        child_specs = [
            (node.hypotheses, psi, False),
            (node.hypotheses + (psi,), node.goal, False),
        ]
    elif tactic.kind == "case":
        child_specs = [
            (node.hypotheses + (psi,), node.goal, False),
            (node.hypotheses + (mk_app("not", psi),), node.goal, False),
        ]
    else:  # assume
        child_specs = [
            (node.hypotheses + (psi,), node.goal, True),
        ]

    nodes = dict(state.nodes)
    child_ids: list[int] = []
    new_open: list[int] = []
    discharged: list[int] = []
    next_id = state.next_id
    for hyps, goal, tainted in child_specs:
        child = _make_node(next_id, hyps, goal, displayer, tainted=tainted)
        verdict = _query(session, hyps, goal)
        if verdict.is_proved:
            child = replace(child, status=ASSUMED if tainted else AUTO_DISCHARGED)
            discharged.append(child.node_id)
        else:
            new_open.append(child.node_id)
        nodes[child.node_id] = child
        child_ids.append(child.node_id)
        next_id += 1

    nodes[node.node_id] = replace(node, status=EXPANDED, applied_tactic=tactic,
                                  children=tuple(child_ids))
    _propagate_closure(nodes, node.node_id)

    old_order = state.open_order
    position = old_order.index(node.node_id)
    open_order = tuple(i for i in old_order if i != node.node_id) + tuple(new_open)

    if new_open:
        focus_id = new_open[0]
    else:
        focus_id = None
        for candidate in old_order[position + 1:] + old_order[:position]:
            if candidate in open_order:
                focus_id = candidate
                break

    snapshot = state.snapshot()
    new_state = ProofState(nodes, state.root_id, focus_id, open_order,
                           next_id, state.history + (snapshot,))
    report = TacticReport(tactic, new_open_ids=tuple(new_open),
                          discharged_ids=tuple(discharged),
                          subtree_closed=nodes[node.node_id].is_closed,
                          tree_closed=new_state.tree_closed)
    return new_state, report


def _propagate_closure(nodes: dict[int, ProofNode], start_id: int) -> None:
    """Flip expanded nodes to closed-by-tactic once all children are closed."""
    changed = True
    while changed:
        changed = False
        for node in list(nodes.values()):
            if node.status == EXPANDED and all(nodes[c].is_closed for c in node.children):
                nodes[node.node_id] = replace(node, status=CLOSED_BY_TACTIC)
                changed = True


def undo(state: ProofState) -> ProofState:
    """Restore the exact snapshot taken before the last mutating tactic."""
    if not state.history:
        raise EngineError("nothing to undo")
    previous = state.history[-1]
    return replace(previous, history=state.history[:-1])


def focus(state: ProofState, goal_id: int) -> ProofState:
    if goal_id not in state.nodes:
        raise EngineError(f"unknown goal id {goal_id}")
    if not state.node(goal_id).is_open:
        raise EngineError(f"goal {goal_id} is not open")
    return replace(state, focus_id=goal_id)


# ---------------------------------------------------------------------------
# Proof reconstruction
# ---------------------------------------------------------------------------

def reconstruct_proof(state: ProofState, displayer: Displayer) -> str:
    """Emit the source-level proof for a fully closed tree.

    Auto-discharged leaves contribute nothing; assert becomes `assert e;`
    (with a `by` block when its prove-child needed sub-proofs), case becomes
    `if (e) { ... } else { ... }`, assume becomes `assume e;`.
    """
    if state.open_order:
        raise EngineError(f"{len(state.open_order)} goal(s) still open")
    lines = _emit(state, state.root_id, 0, displayer)
    return "\n".join(lines)


def _emit(state: ProofState, node_id: int, depth: int, displayer: Displayer) -> list[str]:
    node = state.node(node_id)
    pad = "  " * depth
    if node.applied_tactic is None:
        return []
    tactic = node.applied_tactic
    text = displayer.term_text(tactic.arg)
    if tactic.kind == "assert":
        prove_id, use_id = node.children
        prove = state.node(prove_id)
        if prove.applied_tactic is None:
            lines = [f"{pad}assert {text};"]
        else:
            lines = [f"{pad}assert {text} by {{"]
            lines.extend(_emit(state, prove_id, depth + 1, displayer))
            lines.append(f"{pad}}}")
        lines.extend(_emit(state, use_id, depth, displayer))
        return lines
    if tactic.kind == "case":
        then_id, else_id = node.children
        lines = [f"{pad}if ({text}) {{"]
        lines.extend(_emit(state, then_id, depth + 1, displayer))
        lines.append(f"{pad}}} else {{")
        lines.extend(_emit(state, else_id, depth + 1, displayer))
        lines.append(f"{pad}}}")
        return lines
    if tactic.kind == "assume":
        (child_id,) = node.children
        lines = [f"{pad}assume {text};"]
        lines.extend(_emit(state, child_id, depth, displayer))
        return lines
    raise EngineError(f"cannot reconstruct from tactic {tactic.kind!r}")  # pragma: no cover
