#!/usr/bin/env python3
"""Regenerate the checked-in SMT-LIB fixtures under fixtures/.

The fixtures mirror what the Dafny/Boogie toolchain emits for the two small
programs in fixtures/*.dfy: a solver-options header, a prelude of declarations
and pattern-guarded axioms, and one (push 1)...(pop 1) block per verification
condition whose negated assert carries the instrumented goal.

Run from the repository root:  python3 tools/make_fixtures.py
"""

from __future__ import annotations

from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "fixtures"

OPTIONS = """\
(set-option :print-success false)
(set-info :smt-lib-version 2.6)
(set-option :auto_config false)
(set-option :type_check true)
(set-option :smt.case_split 3)
(set-option :smt.qi.eager_threshold 100)
(set-option :smt.delay_units true)
(set-option :smt.arith.solver 2)
(set-option :smt.mbqi false)
(set-option :model.compact false)
(set-option :model.v2 true)
(set-option :pp.bv_literals false)
"""

SORTS_AND_FUNS = """\
(declare-sort T@U 0)
(declare-sort T@Ty 0)
(declare-sort T@Seq 0)
(declare-sort T@Char 0)
(declare-sort T@Box 0)
(declare-fun TInt () T@Ty)
(declare-fun TBool () T@Ty)
(declare-fun Mul (Int Int) Int)
(declare-fun Div (Int Int) Int)
(declare-fun Mod (Int Int) Int)
(declare-fun LitInt (Int) Int)
(declare-fun ControlFlow (Int Int) Int)
(declare-fun $Heap () T@U)
(declare-fun alloc () T@U)
(declare-fun null () T@U)
(declare-fun $IsGoodHeap (T@U) Bool)
(declare-fun $IsHeapAnchor (T@U) Bool)
(declare-fun |lambda#0| (T@U T@U T@U Bool) T@U)
(declare-fun |Set#IsMember| (T@U T@Box) Bool)
(declare-fun |Set#Empty| () T@U)
(declare-fun |Seq#Build| (T@Seq T@Box) T@Seq)
(declare-fun |Seq#Empty| () T@Seq)
(declare-fun |char#FromInt| (Int) T@Char)
(declare-fun $Box_577 (Int) T@Box)
(declare-fun $Unbox_995 (T@Box) Int)
(declare-fun $Box_761 (Bool) T@Box)
(declare-fun $Unbox_803 (T@Box) Bool)
(declare-fun $Box_23439 (T@Char) T@Box)
(declare-fun Lit_25231 (T@Seq) T@Seq)
"""

PROTECT_FUNS = """\
(declare-fun reveal__module._default._protect () Bool)
(declare-fun _module.__default.__protect (T@Ty Bool T@Box T@Seq) T@Box)
(declare-fun _module.__default.__protectScope (T@Ty Bool T@Box T@Seq) Bool)
(declare-fun _module.__default.__protectToProve (T@Ty Bool T@Box T@Seq T@Seq) T@Box)
"""

AXIOMS = """\
(assert (forall ((x Int) (y Int)) (! (= (Mul x y) (* x y)) :qid |DafnyPreludebpl.100:15| :skolemid |100| :pattern ((Mul x y)))))
(assert (forall ((x Int) (y Int)) (! (= (Div x y) (div x y)) :qid |DafnyPreludebpl.101:15| :skolemid |101| :pattern ((Div x y)))))
(assert (forall ((x Int) (y Int)) (! (= (Mod x y) (mod x y)) :qid |DafnyPreludebpl.102:15| :skolemid |102| :pattern ((Mod x y)))))
(assert (forall ((x Int)) (! (= (LitInt x) x) :qid |DafnyPreludebpl.103:15| :skolemid |103| :pattern ((LitInt x)))))
(assert (forall ((o@@5 T@Box) ) (!  (not (|Set#IsMember| |Set#Empty| o@@5)) :qid |filebpl.796:15| :skolemid |125| :pattern ( (|Set#IsMember| |Set#Empty| o@@5))))
)
(assert (forall ((i Int)) (! (= ($Unbox_995 ($Box_577 i)) i) :qid |DafnyPreludebpl.104:15| :skolemid |104| :pattern (($Box_577 i)))))
(assert (forall ((b Bool)) (! (= ($Unbox_803 ($Box_761 b)) b) :qid |DafnyPreludebpl.105:15| :skolemid |105| :pattern (($Box_761 b)))))
"""

PROTECT_AXIOMS = """\
(assert (forall ((t T@Ty) (r Bool) (b T@Box) (n T@Seq)) (! (= (_module.__default.__protect t r b n) b) :qid |filebpl.900:15| :skolemid |200| :pattern ((_module.__default.__protect t r b n)))))
(assert (forall ((t T@Ty) (r Bool) (b T@Box) (n T@Seq)) (! (_module.__default.__protectScope t r b n) :qid |filebpl.901:15| :skolemid |201| :pattern ((_module.__default.__protectScope t r b n)))))
(assert (forall ((t T@Ty) (r Bool) (b T@Box) (n T@Seq) (s T@Seq)) (! (= (_module.__default.__protectToProve t r b n s) b) :qid |filebpl.902:15| :skolemid |202| :pattern ((_module.__default.__protectToProve t r b n s)))))
"""


def char_chain(text: str) -> str:
    """The Boogie encoding of a string literal: a Seq#Build chain of boxed
    character codes, wrapped in the literal marker."""
    chain = "|Seq#Empty|"
    for ch in text:
        chain = f"(|Seq#Build| {chain} ($Box_23439 (|char#FromInt| {ord(ch)})))"
    return f"(Lit_25231 {chain})"


def protect_int(mangled: str, name: str) -> str:
    return (f"($Unbox_995 (_module.__default.__protect TInt "
            f"reveal__module._default._protect ($Box_577 {mangled}) {char_chain(name)}))")


def protect_scope(mangled: str, name: str) -> str:
    return (f"(_module.__default.__protectScope TInt "
            f"reveal__module._default._protect ($Box_577 {mangled}) {char_chain(name)})")


def to_prove(goal: str, label: str, scope_entries: list[tuple[str, str]]) -> str:
    scope = "|Seq#Empty|"
    for mangled, name in scope_entries:
        scope = f"(|Seq#Build| {scope} ($Box_761 {protect_scope(mangled, name)}))"
    return (f"($Unbox_803 (_module.__default.__protectToProve TBool "
            f"reveal__module._default._protect ($Box_761 {goal}) "
            f"{char_chain(label)} {scope}))")


def vc_block(local_decls: list[str], inner_hyps: str, goal: str) -> str:
    """One Boogie-style obligation: the negated implication chain with the
    usual control-flow bookkeeping and an anonymous-block let binding."""
    decls = "\n".join(local_decls)
    return f"""(push 1)
{decls}
(assert (not (=> (= (ControlFlow 0 0) 2) (let
 ((anon0_correct (=> (and (and ($IsGoodHeap $Heap)
 ($IsHeapAnchor $Heap)) (and (= $_ModifiesFrame@0
 (|lambda#0| null $Heap alloc false)) (= (ControlFlow
 0 2) (- 0 1)))){inner_hyps} {goal}))) anon0_correct)) ))
(check-sat)
(pop 1)
"""


TRIANGLE_X = "|x#0@@1|"

TRIANGLE_STOCK_GOAL = (
    f"(= (Mod (Mul {TRIANGLE_X} (+ {TRIANGLE_X} 1)) (LitInt 2)) (LitInt 0))")


def triangle_instrumented_goal() -> str:
    px = protect_int(TRIANGLE_X, "x")
    inner = f"(= (Mod (Mul {px} (+ {px} 1)) (LitInt 2)) (LitInt 0))"
    return to_prove(inner, "x * (x + 1) % 2 == 0", [(TRIANGLE_X, "x")])


def triangle_fixture(instrumented: bool) -> str:
    prelude = SORTS_AND_FUNS + (PROTECT_FUNS if instrumented else "") \
        + AXIOMS + (PROTECT_AXIOMS if instrumented else "")
    goal = triangle_instrumented_goal() if instrumented else TRIANGLE_STOCK_GOAL
    block = vc_block(
        [f"(declare-fun {TRIANGLE_X} () Int)", "(declare-fun $_ModifiesFrame@0 () T@U)"],
        "", goal)
    return OPTIONS + prelude + block


# The shadowing example: method Example(x : nat, y : nat) with a local
# variable x shadowing the parameter at the assert site.
EX_PARAM_X = "|x#0@@1|"
EX_PARAM_Y = "|y#0@@1|"
EX_LOCAL_X = "|x#1@@1|"


def example_fixture() -> str:
    px = protect_int(EX_PARAM_X, "x")
    py = protect_int(EX_PARAM_Y, "y")
    lx = protect_int(EX_LOCAL_X, "x")
    requires_hyp = f" (> (+ {px} {py}) 0)"
    typing_hyps = (f" (>= {EX_PARAM_X} 0) (>= {EX_PARAM_Y} 0)"
                   f" (= {EX_LOCAL_X} (LitInt 1))")
    goal_inner = f"(> (+ {lx} {py}) 0)"
    goal = to_prove(goal_inner, "x + y > 0", [(EX_LOCAL_X, "x"), (EX_PARAM_Y, "y")])
    block = vc_block(
        [f"(declare-fun {EX_PARAM_X} () Int)",
         f"(declare-fun {EX_PARAM_Y} () Int)",
         f"(declare-fun {EX_LOCAL_X} () Int)",
         "(declare-fun $_ModifiesFrame@0 () T@U)"],
        " (and" + typing_hyps + requires_hyp + ")", goal)
    return OPTIONS + SORTS_AND_FUNS + PROTECT_FUNS + AXIOMS + PROTECT_AXIOMS + block


TRIANGLE_DFY = """\
lemma triangle_sum_even(x : int)
  ensures {:ipm} x * (x + 1) % 2 == 0
{ }
"""

EXAMPLE_DFY = """\
method Example(x : nat, y : nat)
  requires x + y > 0
  ensures x + y > 0
{
  var x : nat := 1;
  assert {:ipm} x + y > 0;
}
"""


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    (FIXTURES / "triangle_sum_even.dfy").write_text(TRIANGLE_DFY)
    (FIXTURES / "example_shadow.dfy").write_text(EXAMPLE_DFY)
    (FIXTURES / "triangle_sum_even.smt2").write_text(triangle_fixture(instrumented=True))
    (FIXTURES / "triangle_sum_even_stock.smt2").write_text(triangle_fixture(instrumented=False))
    (FIXTURES / "example_shadow.smt2").write_text(example_fixture())
    for name in ("triangle_sum_even.dfy", "example_shadow.dfy",
                 "triangle_sum_even.smt2", "triangle_sum_even_stock.smt2",
                 "example_shadow.smt2"):
        print(f"wrote fixtures/{name}")


if __name__ == "__main__":
    main()
