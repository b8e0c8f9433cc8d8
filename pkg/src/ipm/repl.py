"""Interactive command loop and the pipeline that feeds it.

The transcript format is stable enough to script: goal count, hypotheses and
goal are re-rendered after every state change, commands are read line by line
(stdin and script files behave identically), and the reconstructed proof is
printed when the tree closes.
"""

from __future__ import annotations

import shlex
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path

from . import dafny
from .backtranslate import Displayer, PreparedObligation, prepare_obligation
from .engine import (
    EngineError, ProofState, Tactic, apply_tactic, focus, is_tainted,
    reconstruct_proof, undo,
)
from .sexpr import Command, ParseError, parse_script
from .solver import Session
from .vc import VcError, extract_obligation, find_ipm_targets, segment_script

__all__ = [
    "PipelineError", "PipelineInputs", "drive_pipeline", "render_state",
    "run_repl", "ReplResult", "HELP_TEXT",
    "DEFAULT_DAFNY_CMD", "DEFAULT_BOOGIE_CMD",
]

DEFAULT_DAFNY_CMD = "dafny /compile:0 /noVerify /print:{output} {input}"
DEFAULT_BOOGIE_CMD = "boogie /vcsSplitOnEveryAssert /proverLog:{output} {input}"

HELP_TEXT = """\
Available commands:
  check <expression>    ask whether the solver can prove the expression
                        from the current hypotheses (state unchanged)
  assert <expression>   introduce an intermediate assertion (two subgoals:
                        prove it, then use it)
  case <expression>     case analysis on the truth of the expression
  assume <expression>   add a hypothesis without proof (taints the proof)
  focus <n>             switch to open goal number n
  undo                  revert the last state-changing tactic
  help                  show this message
  quit                  abandon the proof and exit"""


class PipelineError(Exception):
    pass


@dataclass
class PipelineInputs:
    """Everything needed to run sessions: solver inputs plus the targets."""

    options: tuple[Command, ...]
    prelude: tuple[Command, ...]
    targets: tuple[PreparedObligation, ...]


# ---------------------------------------------------------------------------
# Pipeline: source or script -> prepared obligations
# ---------------------------------------------------------------------------

def drive_pipeline(input_path: str | Path, *, from_smt: bool = False,
                   emit_instrumented: str | Path | None = None,
                   dafny_cmd: str = DEFAULT_DAFNY_CMD,
                   boogie_cmd: str = DEFAULT_BOOGIE_CMD,
                   out=sys.stderr) -> PipelineInputs:
    """Turn a `.dfy` source or a ready `.smt2` script into session inputs.

    Dafny sources are instrumented and run through the external toolchain;
    `.smt2` inputs (or `from_smt`) skip the toolchain entirely.
    """
    path = Path(input_path)
    if not path.exists():
        raise PipelineError(f"input file not found: {path}")
    if from_smt or path.suffix == ".smt2":
        script_text = path.read_text()
    elif path.suffix == ".dfy":
        script_text = _run_toolchain(path, emit_instrumented, dafny_cmd, boogie_cmd, out)
    else:
        raise PipelineError(f"unsupported input type {path.suffix!r}; expected .dfy or .smt2 "
                            "(or pass --from-smt)")
    try:
        commands = parse_script(script_text)
        split = segment_script(commands)
        obligations = [extract_obligation(b) for b in split.blocks]
    except (ParseError, VcError) as exc:
        raise PipelineError(f"cannot process {path.name}: {exc}") from exc
    targets = find_ipm_targets(obligations)
    if not targets:
        raise PipelineError(
            f"no IPM targets found in {path.name}: no obligation goal calls "
            "_protectToProve (did you annotate with {:ipm} and instrument?)")
    prepared = tuple(prepare_obligation(ob) for ob in targets)
    return PipelineInputs(split.options, split.prelude, prepared)


def _run_toolchain(path: Path, emit_instrumented, dafny_cmd: str,
                   boogie_cmd: str, out) -> str:
    unit = dafny.parse_program(path.read_text())
    instrumented = dafny.instrument(unit)
    instrumented_path = (Path(emit_instrumented) if emit_instrumented
                         else path.with_suffix(".ipm.dfy"))
    instrumented_path.write_text(instrumented)
    print(f"instrumented source written to {instrumented_path}", file=out)

    bpl_path = path.with_suffix(".ipm.bpl")
    smt_path = path.with_suffix(".ipm.smt2")
    _run_template(dafny_cmd, instrumented_path, bpl_path, "--dafny-cmd")
    _run_template(boogie_cmd, bpl_path, smt_path, "--boogie-cmd")
    if not smt_path.exists():
        raise PipelineError(f"the Boogie step produced no {smt_path}")
    return smt_path.read_text()


def _run_template(template: str, input_path: Path, output_path: Path, flag: str) -> None:
    argv = [part.format(input=str(input_path), output=str(output_path))
            for part in shlex.split(template)]
    try:
        proc = subprocess.run(argv, capture_output=True, text=True)
    except FileNotFoundError:
        raise PipelineError(
            f"toolchain executable not found: {argv[0]!r}; install it, adjust {flag}, "
            "or run on a prepared SMT-LIB file with --from-smt") from None
    if proc.returncode not in (0,):
        # Boogie exits non-zero when verification fails, which is exactly the
        # interesting case; only a missing output file is fatal (checked by
        # the caller).
        print(proc.stdout, file=sys.stderr, end="")


def session_commands(inputs: PipelineInputs, target: PreparedObligation) -> tuple[tuple[Command, ...], tuple[Command, ...]]:
    """(options, prelude) to replay for one target's solver session; the
    block-local declarations must persist, so they ride along the prelude."""
    return inputs.options, inputs.prelude + target.raw.local_decls


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def render_state(state: ProofState) -> str:
    """The goal-count / hypotheses / goal block; a pure function of state."""
    lines = [f"{state.open_count} goal(s) remaining"]
    if state.focus_id is not None:
        node = state.node(state.focus_id)
        lines.append("current goal:")
        lines.append("hypotheses")
        for h in node.display_hypotheses:
            lines.append(f"   {h}")
        lines.append("goal")
        lines.append(f"   {node.display_goal}")
    return "\n".join(lines)


def _goal_position(state: ProofState, node_id: int) -> int:
    return state.open_order.index(node_id) + 1


# ---------------------------------------------------------------------------
# Command parsing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ReplCommand:
    kind: str  # tactic | undo | focus | help | quit | empty | error
    tactic_kind: str | None = None
    argument: str = ""
    goal_number: int | None = None
    message: str = ""


def parse_repl_command(line: str) -> ReplCommand:
    stripped = line.strip()
    if not stripped:
        return ReplCommand("empty")
    head, _, rest = stripped.partition(" ")
    rest = rest.strip()
    if head in (":help", "help"):
        return ReplCommand("help")
    if head in (":quit", "quit"):
        return ReplCommand("quit")
    if head in (":undo", "undo"):
        return ReplCommand("undo")
    if head in (":focus", "focus"):
        if not rest.isdigit():
            return ReplCommand("error", message="usage: focus <goal number>")
        return ReplCommand("focus", goal_number=int(rest))
    if head in ("check", "assert", "case", "assume"):
        if not rest:
            return ReplCommand("error", message=f"usage: {head} <expression>")
        return ReplCommand("tactic", tactic_kind=head, argument=rest)
    return ReplCommand("error", message=f"unknown command {head!r}; type :help for the list")


# ---------------------------------------------------------------------------
# The loop
# ---------------------------------------------------------------------------

@dataclass
class ReplResult:
    completed: bool
    tainted: bool
    quit: bool
    proof: str | None = None


def run_repl(state: ProofState, session: Session, displayer: Displayer,
             in_stream=None, out=None) -> ReplResult:
    """Drive one proof session to completion, quit, or end of input."""
    inp = in_stream if in_stream is not None else sys.stdin
    out = out if out is not None else sys.stdout

    def emit(text: str = "") -> None:
        print(text, file=out)

    if state.tree_closed:
        return _finish(state, displayer, emit)
    emit(render_state(state))

    while True:
        out.write("> ")
        out.flush()
        line = inp.readline()
        if line == "":
            emit()
            return ReplResult(completed=False, tainted=is_tainted(state), quit=True)
        command = parse_repl_command(line)

        if command.kind == "empty":
            continue
        if command.kind == "error":
            emit(command.message)
            continue
        if command.kind == "help":
            emit(HELP_TEXT)
            continue
        if command.kind == "quit":
            return ReplResult(completed=False, tainted=is_tainted(state), quit=True)
        if command.kind == "undo":
            try:
                state = undo(state)
            except EngineError as exc:
                emit(str(exc))
                continue
            emit(render_state(state))
            continue
        if command.kind == "focus":
            if command.goal_number < 1 or command.goal_number > state.open_count:
                emit(f"no open goal number {command.goal_number}")
                continue
            try:
                state = focus(state, state.open_order[command.goal_number - 1])
            except EngineError as exc:
                emit(str(exc))
                continue
            emit(render_state(state))
            continue

        # tactic
        try:
            term = dafny.parse_expr(command.argument, displayer.names)
        except dafny.DafnyError as exc:
            emit(str(exc))
            continue
        tactic = Tactic(command.tactic_kind, term)
        try:
            state, report = apply_tactic(state, session, tactic, displayer)
        except EngineError as exc:
            emit(str(exc))
            continue

        if tactic.kind == "check":
            text = displayer.term_text(term)
            if report.check_verdict is not None and report.check_verdict.is_proved:
                emit(f"Yes, Z3 can prove {text}")
            else:
                emit(f"No, Z3 cannot prove {text}")
            continue

        if report.tree_closed:
            return _finish(state, displayer, emit)
        if report.subtree_closed:
            emit("Congrats, current goal proved.")
        emit(render_state(state))
        announcements = [nid for nid in report.new_open_ids if nid != state.focus_id]
        if announcements:
            emit()
            for nid in announcements:
                emit(f"goal {_goal_position(state, nid)} is: {state.node(nid).display_goal}")


def _finish(state: ProofState, displayer: Displayer, emit) -> ReplResult:
    proof = reconstruct_proof(state, displayer)
    tainted = is_tainted(state)
    emit("Congrats, current goal proved.")
    emit(f"Goal: {state.node(state.root_id).display_goal}")
    emit("Proof:")
    if proof:
        emit(proof)
    if tainted:
        emit("WARNING: proof uses assume")
    return ReplResult(completed=True, tainted=tainted, quit=False, proof=proof)
