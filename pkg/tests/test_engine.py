import itertools
import random

import pytest

from conftest import fake_solver_config
from ipm.backtranslate import Displayer, NameMap, PreparedObligation
from ipm.engine import (
    ASSUMED, AUTO_DISCHARGED, CLOSED_BY_TACTIC, EXPANDED, OPEN, EngineError,
    Tactic, apply_tactic, focus, init_session, is_tainted, node_formula,
    reconstruct_proof, undo,
)
from ipm.sexpr import App, BoolLit, IntLit, Symbol, mk_app, parse_term
from ipm.solver import shutdown, start_session
from ipm.vc import Obligation, VcBlock


def prepared(hypotheses=(), goal=parse_term("(> x 0)")):
    return PreparedObligation(
        raw=Obligation(tuple(hypotheses), goal, (), VcBlock(())),
        names=NameMap(), hypotheses=tuple(hypotheses), goal=goal, label=None)


def make_session(answers: str):
    return start_session(fake_solver_config(answers), [], [])


def displayer() -> Displayer:
    return Displayer(NameMap())


# ---------------------------------------------------------------------------
# init_session
# ---------------------------------------------------------------------------

def test_init_auto_discharged():
    session = make_session("unsat")
    state = init_session(prepared(goal=BoolLit(True)), session, displayer())
    shutdown(session)
    assert state.tree_closed
    assert state.focus_id is None
    assert state.node(1).status == AUTO_DISCHARGED


def test_init_open_goal_focused():
    session = make_session("unknown")
    state = init_session(prepared(), session, displayer())
    shutdown(session)
    assert state.open_count == 1
    assert state.focus_id == 1
    assert state.node(1).status == OPEN


# ---------------------------------------------------------------------------
# check tactic
# ---------------------------------------------------------------------------

def test_check_reports_and_leaves_state_untouched():
    session = make_session("unknown,sat")
    state = init_session(prepared(), session, displayer())
    tactic = Tactic("check", parse_term("(> x 1)"))
    new_state, report = apply_tactic(state, session, tactic, displayer())
    shutdown(session)
    assert new_state is state
    assert new_state.history == ()
    assert report.check_verdict.kind == "not_proved"
    assert report.check_verdict.reason == "sat"


def test_check_proved_verdict():
    session = make_session("unknown,unsat")
    state = init_session(prepared(), session, displayer())
    _, report = apply_tactic(state, session, Tactic("check", BoolLit(True)), displayer())
    shutdown(session)
    assert report.check_verdict.is_proved


# ---------------------------------------------------------------------------
# assert / case / assume transformations
# ---------------------------------------------------------------------------

def test_assert_children_shapes():
    session = make_session("unknown")
    hyp = parse_term("(P x)")
    goal = parse_term("(Q x)")
    psi = parse_term("(R x)")
    state = init_session(prepared((hyp,), goal), session, displayer())
    state, report = apply_tactic(state, session, Tactic("assert", psi), displayer())
    shutdown(session)
    prove_id, use_id = state.node(1).children
    prove, use = state.node(prove_id), state.node(use_id)
    assert prove.hypotheses == (hyp,) and prove.goal == psi
    assert use.hypotheses == (hyp, psi) and use.goal == goal
    assert state.node(1).status == EXPANDED
    assert state.focus_id == prove_id
    assert state.open_order == (prove_id, use_id)


def test_case_children_shapes():
    session = make_session("unknown")
    goal = parse_term("(Q x)")
    psi = parse_term("(R x)")
    state = init_session(prepared((), goal), session, displayer())
    state, _ = apply_tactic(state, session, Tactic("case", psi), displayer())
    shutdown(session)
    then_id, else_id = state.node(1).children
    assert state.node(then_id).hypotheses == (psi,)
    assert state.node(else_id).hypotheses == (mk_app("not", psi),)
    assert state.node(then_id).goal == goal and state.node(else_id).goal == goal


def test_assume_single_tainted_child():
    session = make_session("unknown")
    goal = parse_term("(Q x)")
    psi = parse_term("(R x)")
    state = init_session(prepared((), goal), session, displayer())
    state, _ = apply_tactic(state, session, Tactic("assume", psi), displayer())
    shutdown(session)
    (child_id,) = state.node(1).children
    child = state.node(child_id)
    assert child.hypotheses == (psi,)
    assert child.tainted
    assert is_tainted(state)


def test_assume_false_closes_with_assumed_status():
    session = make_session("unknown,unsat")
    state = init_session(prepared(), session, displayer())
    state, report = apply_tactic(state, session, Tactic("assume", BoolLit(False)), displayer())
    shutdown(session)
    assert state.tree_closed
    (child_id,) = state.node(1).children
    assert state.node(child_id).status == ASSUMED
    assert state.node(1).status == CLOSED_BY_TACTIC
    proof = reconstruct_proof(state, displayer())
    assert proof == "assume false;"


def test_auto_discharged_children_close_parent():
    session = make_session("unknown,unsat,unsat")
    state = init_session(prepared(), session, displayer())
    state, report = apply_tactic(state, session,
                                 Tactic("assert", parse_term("(>= x 1)")), displayer())
    shutdown(session)
    assert report.subtree_closed and report.tree_closed
    assert state.node(1).status == CLOSED_BY_TACTIC
    assert all(state.node(c).status == AUTO_DISCHARGED for c in state.node(1).children)


def test_focus_moves_to_next_open_goal_when_subtree_closes():
    # case splits into two open goals; closing the first moves focus to the second
    answers = "unknown," + "unknown,unknown," + "unsat,unsat"
    session = make_session(answers)
    state = init_session(prepared(), session, displayer())
    state, _ = apply_tactic(state, session, Tactic("case", parse_term("(R x)")), displayer())
    first, second = state.open_order
    assert state.focus_id == first
    state, report = apply_tactic(state, session,
                                 Tactic("assert", parse_term("(S x)")), displayer())
    shutdown(session)
    assert report.subtree_closed and not report.tree_closed
    assert state.focus_id == second
    assert state.open_order == (second,)


def test_no_open_goal_errors():
    session = make_session("unsat")
    state = init_session(prepared(goal=BoolLit(True)), session, displayer())
    with pytest.raises(EngineError, match="no open goal"):
        apply_tactic(state, session, Tactic("check", BoolLit(True)), displayer())
    shutdown(session)


def test_open_goal_accounting():
    rng = random.Random(99)
    session = make_session("unknown,unsat,unknown,unsat,sat,unknown,unsat")
    state = init_session(prepared(), session, displayer())
    for _ in range(12):
        if state.tree_closed:
            break
        kind = rng.choice(["assert", "case", "assume"])
        before = state.open_count
        state, report = apply_tactic(
            state, session, Tactic(kind, parse_term(f"(P{rng.randrange(5)} x)")), displayer())
        expected_children = 1 if kind == "assume" else 2
        assert len(report.new_open_ids) + len(report.discharged_ids) == expected_children
        assert state.open_count == before - 1 + len(report.new_open_ids)
    shutdown(session)


# ---------------------------------------------------------------------------
# undo / focus
# ---------------------------------------------------------------------------

def test_undo_restores_previous_snapshot():
    session = make_session("unknown")
    state0 = init_session(prepared(), session, displayer())
    state1, _ = apply_tactic(state0, session, Tactic("case", parse_term("(R x)")), displayer())
    restored = undo(state1)
    shutdown(session)
    assert restored.snapshot() == state0.snapshot()
    assert restored.focus_id == state0.focus_id


def test_undo_twice_restores_initial():
    session = make_session("unknown")
    state0 = init_session(prepared(), session, displayer())
    state1, _ = apply_tactic(state0, session, Tactic("case", parse_term("(R x)")), displayer())
    state2, _ = apply_tactic(state1, session, Tactic("assert", parse_term("(S x)")), displayer())
    shutdown(session)
    assert undo(undo(state2)).snapshot() == state0.snapshot()


def test_undo_on_fresh_session_errors():
    session = make_session("unknown")
    state = init_session(prepared(), session, displayer())
    shutdown(session)
    with pytest.raises(EngineError, match="nothing to undo"):
        undo(state)


def test_focus_switches_and_validates():
    session = make_session("unknown")
    state = init_session(prepared(), session, displayer())
    state, _ = apply_tactic(state, session, Tactic("case", parse_term("(R x)")), displayer())
    shutdown(session)
    first, second = state.open_order
    focused = focus(state, second)
    assert focused.focus_id == second
    assert focus(focused, second).focus_id == second  # idempotent
    with pytest.raises(EngineError, match="unknown goal id"):
        focus(state, 999)
    with pytest.raises(EngineError, match="not open"):
        focus(state, 1)  # the root is expanded, not open


def test_random_tactic_undo_roundtrip():
    rng = random.Random(2024)
    for trial in range(50):
        session = make_session("unknown,unsat,unknown,sat,unsat")
        state = init_session(prepared(), session, displayer())
        steps = rng.randint(1, 4)
        for _ in range(steps):
            if state.tree_closed:
                break
            kind = rng.choice(["assert", "case", "assume"])
            before = state
            state, _ = apply_tactic(
                state, session, Tactic(kind, parse_term(f"(P{rng.randrange(4)} x)")),
                displayer())
            assert undo(state).snapshot() == before.snapshot()
        shutdown(session)


# ---------------------------------------------------------------------------
# tactic soundness oracle (propositional abstraction, brute force)
# ---------------------------------------------------------------------------

LOGICAL_HEADS = {"not", "and", "or", "=>"}


def collect_atoms(term, out):
    if isinstance(term, App) and isinstance(term.head, Symbol) and term.head.name in LOGICAL_HEADS:
        for a in term.args:
            collect_atoms(a, out)
    elif isinstance(term, BoolLit):
        pass
    else:
        if term not in out:
            out.append(term)


def prop_eval(term, env):
    if isinstance(term, BoolLit):
        return term.value
    if isinstance(term, App) and isinstance(term.head, Symbol) and term.head.name in LOGICAL_HEADS:
        name = term.head.name
        args = [prop_eval(a, env) for a in term.args]
        if name == "not":
            return not args[0]
        if name == "and":
            return all(args)
        if name == "or":
            return any(args)
        result = args[-1]
        for a in reversed(args[:-1]):
            result = (not a) or result
        return result
    return env[term]


def prop_entails(premises, conclusion) -> bool:
    """Brute-force propositional entailment over opaque atoms."""
    atoms = []
    for t in list(premises) + [conclusion]:
        collect_atoms(t, atoms)
    for values in itertools.product([False, True], repeat=len(atoms)):
        env = dict(zip(atoms, values))
        if all(prop_eval(p, env) for p in premises) and not prop_eval(conclusion, env):
            return False
    return True


def gen_linear_atom(rng):
    x, y, z = Symbol("x"), Symbol("y"), Symbol("z")
    lhs = mk_app("+", mk_app("*", IntLit(rng.randint(-3, 3)), rng.choice([x, y, z])),
                 rng.choice([x, y, z]))
    return mk_app(rng.choice(["<", "<=", ">", ">=", "="]), lhs, IntLit(rng.randint(-5, 5)))


def gen_obligation(rng):
    hyps = tuple(gen_linear_atom(rng) for _ in range(rng.randint(0, 3)))
    goal = gen_linear_atom(rng)
    return prepared(hyps, goal)


def test_tactic_soundness_oracle_100_obligations():
    """Children-conjunction (plus the assumed fact, for assume) must entail
    the parent obligation, checked by an independent brute-force oracle."""
    rng = random.Random(1234)
    counterexamples = 0
    for _ in range(100):
        session = make_session("unknown,unsat,unknown")
        state = init_session(gen_obligation(rng), session, displayer())
        for _ in range(rng.randint(1, 3)):
            if state.tree_closed:
                break
            parent_id = state.focus_id
            kind = rng.choice(["assert", "case", "assume"])
            psi = gen_linear_atom(rng)
            state, _ = apply_tactic(state, session, Tactic(kind, psi), displayer())
            parent = state.node(parent_id)
            premises = [node_formula(state.node(c)) for c in parent.children]
            if kind == "assume":
                premises.append(psi)
            if not prop_entails(premises, node_formula(parent)):
                counterexamples += 1
        shutdown(session)
    assert counterexamples == 0


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------

def test_reconstruct_requires_closed_tree():
    session = make_session("unknown")
    state = init_session(prepared(), session, displayer())
    shutdown(session)
    with pytest.raises(EngineError, match="open"):
        reconstruct_proof(state, displayer())


def test_reconstruct_empty_for_auto_discharged_root():
    session = make_session("unsat")
    state = init_session(prepared(goal=BoolLit(True)), session, displayer())
    shutdown(session)
    assert reconstruct_proof(state, displayer()) == ""


def test_taint_iff_assume_token():
    for kinds, expect_assume in [(["case", "assert"], False), (["case", "assume"], True)]:
        session = make_session("unknown,unknown,unknown,unsat,unsat,unsat,unsat")
        state = init_session(prepared(), session, displayer())
        for kind in kinds:
            if state.tree_closed:
                break
            state, _ = apply_tactic(state, session, Tactic(kind, parse_term("(R x)")),
                                    displayer())
        # close whatever is left with assert that discharges both children
        while not state.tree_closed:
            state, _ = apply_tactic(state, session, Tactic("assert", parse_term("(S x)")),
                                    displayer())
        shutdown(session)
        proof = reconstruct_proof(state, displayer())
        has_assumed_node = any(n.status == ASSUMED or n.tainted for n in state.nodes.values())
        assert ("assume" in proof) == expect_assume == has_assumed_node == is_tainted(state)


def test_closed_by_tactic_invariant():
    session = make_session("unknown,unknown,unknown,unsat,unsat,unsat,unsat")
    state = init_session(prepared(), session, displayer())
    state, _ = apply_tactic(state, session, Tactic("case", parse_term("(R x)")), displayer())
    while not state.tree_closed:
        state, _ = apply_tactic(state, session, Tactic("assert", parse_term("(S x)")),
                                displayer())
    shutdown(session)
    for node in state.nodes.values():
        is_cbt = node.status == CLOSED_BY_TACTIC
        definition = (node.applied_tactic is not None
                      and all(not state.node(c).is_open for c in node.children)
                      and len(node.children) > 0)
        assert is_cbt == definition
