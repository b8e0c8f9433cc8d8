import pytest

from conftest import FIXTURES
from ipm.backtranslate import (
    BacktranslateError, BinOp, BoolConst, Displayer, IntConst, UnOp, Var,
    build_name_map, decode_string_literal, display_rewrite,
    eliminate_dead_definitions, is_suppressed_hypothesis, pretty_print,
    prepare_obligation, strip_protections,
)
from ipm.sexpr import parse_script, parse_term, print_term
from ipm.vc import extract_obligation, segment_script


def fixture_obligation(name: str):
    split = segment_script(parse_script((FIXTURES / name).read_text()))
    obligations = [extract_obligation(b) for b in split.blocks]
    return obligations[0]


def chain(text: str, box: bool = True, lit: bool = True) -> str:
    out = "|Seq#Empty|"
    for ch in text:
        code = f"(|char#FromInt| {ord(ch)})"
        element = f"($Box_23439 {code})" if box else code
        out = f"(|Seq#Build| {out} {element})"
    return f"(Lit_25231 {out})" if lit else out


# ---------------------------------------------------------------------------
# decode_string_literal
# ---------------------------------------------------------------------------

def test_decode_single_char():
    t = parse_term("(|Seq#Build| |Seq#Empty| ($Box_23439 (|char#FromInt| 120)))")
    assert decode_string_literal(t) == "x"


def test_decode_empty_chain():
    assert decode_string_literal(parse_term("|Seq#Empty|")) == ""


def test_decode_label_via_char_codes():
    label = "x + y > 0"
    expected_codes = [120, 32, 43, 32, 121, 32, 62, 32, 48]
    assert [ord(c) for c in label] == expected_codes
    assert decode_string_literal(parse_term(chain(label))) == label


def test_decode_unboxed_elements():
    assert decode_string_literal(parse_term(chain("ab", box=False, lit=False))) == "ab"


def test_decode_rejects_non_literal_code():
    t = parse_term("(|Seq#Build| |Seq#Empty| ($Box_23439 (|char#FromInt| n)))")
    with pytest.raises(BacktranslateError, match="non-literal"):
        decode_string_literal(t)


def test_decode_rejects_odd_shape():
    with pytest.raises(BacktranslateError):
        decode_string_literal(parse_term("(f 1 2)"))


# ---------------------------------------------------------------------------
# build_name_map
# ---------------------------------------------------------------------------

PROTECT_X = ("($Unbox_995 (_module.__default.__protect TInt "
             "reveal__module._default._protect ($Box_577 |x#0@@1|) " + chain("x") + "))")


def test_name_map_from_protected_occurrence():
    names = build_name_map(parse_term(PROTECT_X))
    assert names.to_dafny("x#0@@1") == "x"
    assert names.to_smt("x") == ["x#0@@1"]


def test_name_map_empty_without_protections():
    names = build_name_map(parse_term("(= (Mod x 2) 0)"))
    assert names.entries == []


def test_name_map_shadowing_fixture():
    ob = fixture_obligation("example_shadow.smt2")
    names = build_name_map(list(ob.hypotheses) + [ob.goal])
    smt_names = set(names.to_smt("x"))
    assert smt_names == {"x#0@@1", "x#1@@1"}
    in_scope = [e for e in names.entries if e.dafny_name == "x" and e.in_scope]
    assert len(in_scope) == 1
    assert in_scope[0].smt_name == "x#1@@1"
    # forward resolution prefers the in-scope binding
    assert names.resolve("x") == "x#1@@1"
    assert names.resolve("y") == "y#0@@1"


def test_name_map_conflicting_claim_rejected():
    term = parse_term(
        "(f ($Unbox_995 (_module.__default.__protect TInt r ($Box_577 v) " + chain("a") + ")) "
        "($Unbox_995 (_module.__default.__protect TInt r ($Box_577 v) " + chain("b") + ")))")
    with pytest.raises(BacktranslateError, match="claimed by both"):
        build_name_map(term)


# ---------------------------------------------------------------------------
# strip_protections
# ---------------------------------------------------------------------------

def test_strip_protected_variable():
    assert strip_protections(parse_term(PROTECT_X)) == parse_term("|x#0@@1|")


def test_strip_is_identity_on_clean_terms():
    t = parse_term("(= (Mod (Mul |x#0@@1| (+ |x#0@@1| 1)) (LitInt 2)) (LitInt 0))")
    assert strip_protections(t) == t


def test_strip_instrumented_goal_matches_stock():
    instrumented = fixture_obligation("triangle_sum_even.smt2")
    stock = fixture_obligation("triangle_sum_even_stock.smt2")
    assert strip_protections(instrumented.goal) == stock.goal


def test_strip_idempotent():
    instrumented = fixture_obligation("triangle_sum_even.smt2")
    once = strip_protections(instrumented.goal)
    assert strip_protections(once) == once


def test_strip_scope_conjuncts_vanish():
    scope_call = ("(_module.__default.__protectScope TInt r "
                  "($Box_577 |x#0@@1|) " + chain("x") + ")")
    t = parse_term(f"(and (> x 0) {scope_call})")
    assert print_term(strip_protections(t)) == "(> x 0)"
    t2 = parse_term(f"(and {scope_call} {scope_call})")
    assert print_term(strip_protections(t2)) == "true"
    # standalone occurrence reduces to true
    assert print_term(strip_protections(parse_term(scope_call))) == "true"


def test_strip_arity_error():
    with pytest.raises(BacktranslateError, match="arity"):
        strip_protections(parse_term("(_module.__default.__protect TInt)"))


def test_display_purity_solver_terms_untouched():
    ob = prepare_obligation(fixture_obligation("triangle_sum_even.smt2"))
    displayer = Displayer(ob.names)
    before = [print_term(h) for h in ob.hypotheses] + [print_term(ob.goal)]
    displayer.render_goal(ob.hypotheses, ob.goal)
    displayer.term_text(ob.goal)
    after = [print_term(h) for h in ob.hypotheses] + [print_term(ob.goal)]
    assert before == after


# ---------------------------------------------------------------------------
# display_rewrite / pretty_print
# ---------------------------------------------------------------------------

def triangle_names():
    return prepare_obligation(fixture_obligation("triangle_sum_even.smt2")).names


def test_display_triangle_goal():
    names = triangle_names()
    t = parse_term("(= (Mod (Mul |x#0@@1| (+ |x#0@@1| 1)) (LitInt 2)) (LitInt 0))")
    e = display_rewrite(t, names)
    assert pretty_print(e) == "(((x * (x + 1)) % 2) == 0)"


def test_display_litint_unboxes():
    names = triangle_names()
    assert display_rewrite(parse_term("(LitInt 2)"), names) == IntConst(2)
    assert display_rewrite(parse_term("(Lit_25231 true)"), names) == BoolConst(True)


def test_display_operators():
    names = triangle_names()
    cases = {
        "(Div |x#0@@1| (LitInt 2))": "(x / 2)",
        "(=> (> |x#0@@1| 0) (>= |x#0@@1| 1))": "((x > 0) ==> (x >= 1))",
        "(not (= |x#0@@1| 0))": "(x != 0)",
        "(not (> |x#0@@1| 0))": "(!(x > 0))",
        "(and (> |x#0@@1| 0) (< |x#0@@1| 9))": "((x > 0) && (x < 9))",
        "(or a b)": "(a || b)",
        "(ite (> |x#0@@1| 0) 1 0)": "(if (x > 0) then 1 else 0)",
        "(- |x#0@@1|)": "(-x)",
        "(- 0 1)": "(0 - 1)",
    }
    for text, expected in cases.items():
        e = display_rewrite(parse_term(text), names)
        assert e is not None, text
        assert pretty_print(e) == expected


def test_display_unmapped_symbol_shown_verbatim():
    names = triangle_names()
    e = display_rewrite(parse_term("(> |y#9@@0| 0)"), names)
    assert pretty_print(e) == "(y#9@@0 > 0)"


def test_display_outside_fragment_returns_none():
    names = triangle_names()
    assert display_rewrite(parse_term("($IsGoodHeap $Heap)"), names) is None
    assert display_rewrite(parse_term("(forall ((x Int)) (> x 0))"), names) is None


def test_suppressed_hypotheses():
    assert is_suppressed_hypothesis(parse_term("(= (ControlFlow 0 0) 2)"))
    assert is_suppressed_hypothesis(parse_term("(= (ControlFlow 0 2) (- 0 1))"))
    assert is_suppressed_hypothesis(parse_term("($IsGoodHeap $Heap)"))
    assert is_suppressed_hypothesis(parse_term("($IsHeapAnchor $Heap)"))
    assert is_suppressed_hypothesis(
        parse_term("(= $_ModifiesFrame@0 (|lambda#0| null $Heap alloc false))"))
    assert not is_suppressed_hypothesis(parse_term("(> x 0)"))
    assert not is_suppressed_hypothesis(parse_term("(= x 1)"))


def test_pretty_print_transcript_forms():
    x = Var("x")
    goal = BinOp("==", BinOp("%", BinOp("*", x, BinOp("+", x, IntConst(1))), IntConst(2)),
                 IntConst(0))
    assert pretty_print(goal) == "(((x * (x + 1)) % 2) == 0)"
    branch = BinOp("==", x, BinOp("*", IntConst(2), BinOp("/", x, IntConst(2))))
    assert pretty_print(branch) == "(x == (2 * (x / 2)))"
    assert pretty_print(Var("x")) == "x"


# ---------------------------------------------------------------------------
# eliminate_dead_definitions
# ---------------------------------------------------------------------------

def test_dead_definition_dropped():
    h = BinOp("==", Var("h"), Var("oldHeap"))
    goal = BinOp(">", Var("x"), IntConst(0))
    assert eliminate_dead_definitions([h], goal) == []


def test_dead_definitions_empty_fixed_point():
    assert eliminate_dead_definitions([], None) == []


def test_dead_definition_chain_two_passes():
    a_def = BinOp("==", Var("a"), IntConst(1))
    b_def = BinOp("==", Var("b"), Var("a"))
    goal = BinOp(">", Var("x"), IntConst(0))

    def single_pass(hyps, goal_expr):
        """Oracle: one elimination sweep."""
        out = []
        for i, h in enumerate(hyps):
            if isinstance(h, BinOp) and h.op == "==" and isinstance(h.lhs, Var):
                rest = hyps[:i] + hyps[i + 1:] + [goal_expr]
                from ipm.backtranslate import _occurs
                if not any(_occurs(h.lhs.name, other) for other in rest):
                    continue
            out.append(h)
        return out

    reference = [a_def, b_def]
    while True:
        next_ref = single_pass(reference, goal)
        if next_ref == reference:
            break
        reference = next_ref
    assert reference == []
    assert eliminate_dead_definitions([a_def, b_def], goal) == []


def test_used_definition_kept():
    x_def = BinOp("==", Var("x"), IntConst(1))
    goal = BinOp(">", BinOp("+", Var("x"), Var("y")), IntConst(0))
    assert eliminate_dead_definitions([x_def], goal) == [x_def]


# ---------------------------------------------------------------------------
# prepare_obligation / Displayer end-to-end on fixtures
# ---------------------------------------------------------------------------

def test_prepare_triangle():
    ob = prepare_obligation(fixture_obligation("triangle_sum_even.smt2"))
    assert ob.label == "x * (x + 1) % 2 == 0"
    assert print_term(ob.goal) == \
        "(= (Mod (Mul |x#0@@1| (+ |x#0@@1| 1)) (LitInt 2)) (LitInt 0))"
    displayer = Displayer(ob.names)
    hyp_lines, goal_text = displayer.render_goal(ob.hypotheses, ob.goal)
    assert goal_text == "(((x * (x + 1)) % 2) == 0)"
    # ControlFlow / heap / frame hypotheses are all artifacts: nothing shows
    assert hyp_lines == []


def test_prepare_shadow_example():
    ob = prepare_obligation(fixture_obligation("example_shadow.smt2"))
    displayer = Displayer(ob.names)
    hyp_lines, goal_text = displayer.render_goal(ob.hypotheses, ob.goal)
    # the displayed goal renders the in-scope x, never a mangled name
    assert goal_text == "((x + y) > 0)"
    assert "@@" not in goal_text
    assert "(x == 1)" in hyp_lines           # the local definition, used in goal
    # the shadowed-out parameter stays mangled: re-entering a bare `x` would
    # mean the local, so the display must not pretend they are the same
    assert "((x#0@@1 + y) > 0)" in hyp_lines


# ---------------------------------------------------------------------------
# name-map consistency: display -> re-parse -> solver-equivalent term
# ---------------------------------------------------------------------------

def drop_litint(t):
    """Normalize away integer-literal boxing, the one place where the parsed
    tactic form and the emitted form legitimately differ."""
    from ipm.sexpr import App, symbol_name
    if isinstance(t, App):
        if symbol_name(t.head) == "LitInt" and len(t.args) == 1:
            return drop_litint(t.args[0])
        return App(drop_litint(t.head), tuple(drop_litint(a) for a in t.args))
    return t


def display_vars(e) -> set[str]:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, BinOp):
        return display_vars(e.lhs) | display_vars(e.rhs)
    if isinstance(e, UnOp):
        return display_vars(e.arg)
    return set()


def fragment_terms(names, hypotheses, goal):
    """Formulas a user could type back: displayed, with every variable a
    known source name (shadowed-out bindings display mangled and fall out)."""
    for t in list(hypotheses) + [goal]:
        if is_suppressed_hypothesis(t):
            continue
        displayed = display_rewrite(t, names)
        if displayed is None:
            continue
        if all(names.resolve(v) is not None for v in display_vars(displayed)):
            yield t


def test_name_map_consistency_on_fixture_corpus():
    from ipm.dafny import parse_expr
    checked = 0
    for name in ("triangle_sum_even.smt2", "example_shadow.smt2"):
        ob = prepare_obligation(fixture_obligation(name))
        displayer = Displayer(ob.names)
        for term in fragment_terms(ob.names, ob.hypotheses, ob.goal):
            reparsed = parse_expr(displayer.term_text(term), ob.names)
            assert drop_litint(reparsed) == drop_litint(term), print_term(term)
            checked += 1
    assert checked >= 3  # both goals plus in-scope hypotheses
