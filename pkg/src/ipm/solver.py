"""Long-lived SMT solver process speaking textual SMT-LIB over pipes.

The solver is configured the way the verifier configures it: model-based
quantifier instantiation off, incremental input, pinned random seeds, plus
whatever options the script itself sets.  Faithfulness matters more than
speed here; a proof found under different options may not survive the trip
back to the original pipeline.

Synchronization uses `(echo ...)` markers, which every SMT-LIB 2 solver
prints verbatim, so no reply is ever attributed to the wrong command.
"""

from __future__ import annotations

import logging
import os
import selectors
import subprocess
import time
from dataclasses import dataclass, field

from .sexpr import Command, SetOption, Term, print_command, print_term

__all__ = ["SolverConfig", "Verdict", "Session", "SolverError",
           "start_session", "check_entailment", "shutdown", "default_solver_path"]

log = logging.getLogger(__name__)

# Options pinned regardless of what the script sets, in emission order.
PINNED_OPTIONS: tuple[tuple[str, str], ...] = (
    ("auto_config", "false"),
    ("smt.mbqi", "false"),
    ("smt.random_seed", "0"),
    ("sat.random_seed", "0"),
)

# set-option keys we know; others are replayed but logged.
_RECOGNIZED_KEYS = {
    "auto_config", "smt.mbqi", "smt.random_seed", "sat.random_seed",
    "print-success", "type_check", "smt.case_split", "smt.qi.eager_threshold",
    "smt.delay_units", "smt.arith.solver", "model.compact", "model.v2",
    "pp.bv_literals", "timeout", "rlimit", "model_evaluator.completion",
}


class SolverError(Exception):
    pass


@dataclass(frozen=True)
class SolverConfig:
    executable: str = "z3"
    extra_args: tuple[str, ...] = ("-in",)
    timeout_ms: int = 1000
    options: tuple[tuple[str, str], ...] = PINNED_OPTIONS
    trace_path: str | None = None
    # Slack past the solver's own timeout before the read watchdog gives up.
    watchdog_grace_ms: int = 5000


@dataclass(frozen=True)
class Verdict:
    """Outcome of one entailment query.

    kind: "proved" (exactly an unsat answer), "not_proved" with reason in
    {sat, unknown, timeout}, or "error".
    """

    kind: str
    reason: str | None = None

    @property
    def is_proved(self) -> bool:
        return self.kind == "proved"

    @staticmethod
    def proved() -> "Verdict":
        return Verdict("proved")

    @staticmethod
    def not_proved(reason: str) -> "Verdict":
        return Verdict("not_proved", reason)

    @staticmethod
    def solver_error(message: str) -> "Verdict":
        return Verdict("error", message)


def default_solver_path() -> str:
    """`IPM_SOLVER` environment variable, falling back to `z3`."""
    return os.environ.get("IPM_SOLVER", "z3")


@dataclass
class Session:
    config: SolverConfig
    proc: subprocess.Popen
    dead: bool = False
    _marker: int = 0
    _buffer: bytearray = field(default_factory=bytearray, repr=False)
    _trace: object = field(default=None, repr=False)

    # -- low-level protocol ---------------------------------------------------

    def _send(self, text: str, trace: bool = True) -> None:
        if self.dead:
            raise SolverError("solver session is dead")
        try:
            self.proc.stdin.write(text.encode() + b"\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.dead = True
            raise SolverError(f"solver process died: {exc}") from exc
        if trace and self._trace is not None:
            self._trace.write(text + "\n")
            self._trace.flush()

    def _read_line(self, deadline: float | None) -> str:
        # Raw-fd line buffering: a buffered reader could swallow lines that
        # select() would then never report.
        fd = self.proc.stdout.fileno()
        sel = selectors.DefaultSelector()
        sel.register(fd, selectors.EVENT_READ)
        try:
            while True:
                newline = self._buffer.find(b"\n")
                if newline >= 0:
                    line = bytes(self._buffer[:newline])
                    del self._buffer[:newline + 1]
                    return line.decode(errors="replace").rstrip("\r")
                timeout = None
                if deadline is not None:
                    timeout = deadline - time.monotonic()
                    if timeout <= 0:
                        raise TimeoutError
                if not sel.select(timeout):
                    raise TimeoutError
                chunk = os.read(fd, 65536)
                if chunk == b"":
                    self.dead = True
                    raise SolverError("solver process closed its output")
                self._buffer.extend(chunk)
        finally:
            sel.close()

    def exec(self, command: str, deadline: float | None = None,
             trace: bool = True) -> list[str]:
        """Send one command and return its complete output, echo-delimited."""
        self._marker += 1
        marker = f"ipm-sync-{self._marker}"
        self._send(command, trace=trace)
        self._send(f'(echo "{marker}")', trace=False)
        lines: list[str] = []
        while True:
            line = self._read_line(deadline)
            if line == marker:
                return lines
            lines.append(line)

    def exec_checked(self, command: str) -> None:
        """Replay a command that must not produce output."""
        out = self.exec(command)
        errors = [l for l in out if l.startswith("(error")]
        if errors:
            raise SolverError(f"solver rejected {command!r}: {errors[0]}")
        for line in out:
            log.debug("solver said %r to %r", line, command)


def start_session(config: SolverConfig, options: list[Command] | tuple[Command, ...] = (),
                  prelude: list[Command] | tuple[Command, ...] = ()) -> Session:
    """Spawn the solver, replay options and prelude, leave it at depth 0.

    Script options overridden by the configuration are skipped; pinned
    options are emitted first so the solver never sees a conflicting default.
    """
    argv = [config.executable, *config.extra_args]
    trace = open(config.trace_path, "w") if config.trace_path else None
    try:
        proc = subprocess.Popen(
            argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT)
    except FileNotFoundError as exc:
        if trace:
            trace.close()
        raise SolverError(
            f"solver executable not found: {config.executable!r} "
            f"(set --solver or the IPM_SOLVER environment variable)") from exc
    session = Session(config=config, proc=proc, _trace=trace)

    overridden = {key for key, _ in config.options}
    try:
        for key, value in config.options:
            session.exec_checked(f"(set-option :{key} {value})")
        for cmd in options:
            if isinstance(cmd, SetOption):
                if cmd.key.lstrip(":") in overridden or cmd.key.lstrip(":") == "timeout":
                    continue
                if cmd.key.lstrip(":") not in _RECOGNIZED_KEYS:
                    log.info("replaying unrecognized solver option: %s", cmd.raw)
            session.exec_checked(print_command(cmd))
        for index, cmd in enumerate(prelude):
            try:
                session.exec_checked(print_command(cmd))
            except SolverError as exc:
                raise SolverError(f"prelude command {index + 1} rejected: {exc}") from exc
    except Exception:
        shutdown(session)
        raise
    return session


def check_entailment(session: Session, hypotheses: list[Term] | tuple[Term, ...],
                     goal: Term, timeout_ms: int | None = None) -> Verdict:
    """Ask whether the hypotheses entail the goal.

    Pushes one frame, asserts each hypothesis and the negated goal, checks
    satisfiability under the per-query timeout, and pops back regardless of
    the outcome.  `unsat` means proved; everything else means not proved.
    """
    if session.dead:
        return Verdict.solver_error("solver session is dead")
    ms = timeout_ms if timeout_ms is not None else session.config.timeout_ms
    # Both the solver's soft timeout and a hard watchdog on the read: solvers
    # occasionally ignore soft timeouts under quantifier instantiation.
    deadline = time.monotonic() + (ms + session.config.watchdog_grace_ms) / 1000.0
    try:
        session.exec(f"(set-option :timeout {ms})", deadline=deadline)
        session.exec("(push 1)", deadline=deadline)
        for h in hypotheses:
            session.exec(f"(assert {print_term(h)})", deadline=deadline)
        session.exec(f"(assert (not {print_term(goal)}))", deadline=deadline)
        answer_lines = session.exec("(check-sat)", deadline=deadline)
        verdict = _classify(session, answer_lines, deadline)
        session.exec("(pop 1)", deadline=deadline)
        return verdict
    except TimeoutError:
        shutdown(session)
        session.dead = True
        return Verdict.not_proved("timeout")
    except SolverError as exc:
        session.dead = True
        return Verdict.solver_error(str(exc))


def _classify(session: Session, answer_lines: list[str], deadline: float | None) -> Verdict:
    answer = None
    for line in answer_lines:
        if line.startswith("(error"):
            return Verdict.solver_error(line)
        if line in ("sat", "unsat", "unknown"):
            answer = line
    if answer == "unsat":
        return Verdict.proved()
    if answer == "sat":
        return Verdict.not_proved("sat")
    if answer == "unknown":
        reason_lines = session.exec("(get-info :reason-unknown)", deadline=deadline, trace=False)
        reason = " ".join(reason_lines)
        if any(word in reason for word in ("timeout", "canceled", "cancelled", "resource")):
            return Verdict.not_proved("timeout")
        return Verdict.not_proved("unknown")
    return Verdict.solver_error(f"unrecognized solver answer: {answer_lines!r}")


def shutdown(session: Session) -> None:
    """Terminate the solver process; idempotent."""
    if session.proc.poll() is None:
        try:
            session.proc.stdin.close()
        except OSError:
            pass
        session.proc.terminate()
        try:
            session.proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            session.proc.kill()
            session.proc.wait()
    if session._trace is not None:
        try:
            session._trace.close()
        except ValueError:
            pass
        session._trace = None
    session.dead = True
