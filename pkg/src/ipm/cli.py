"""Command-line entry point.

Exit codes: 0 = proof completed (a tainted proof still completes, with a
warning), 1 = quit with open goals, 2 = pipeline or input error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .backtranslate import Displayer
from .engine import init_session
from .repl import (
    DEFAULT_BOOGIE_CMD, DEFAULT_DAFNY_CMD, PipelineError, drive_pipeline,
    run_repl, session_commands,
)
from .solver import SolverConfig, SolverError, default_solver_path, shutdown, start_session

EXIT_OK = 0
EXIT_QUIT = 1
EXIT_ERROR = 2


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ipm",
        description="Interactive proof mode for failing verification conditions.")
    parser.add_argument("path", help="a Dafny-subset source (.dfy) or SMT-LIB script (.smt2)")
    parser.add_argument("--from-smt", action="store_true",
                        help="treat the input as a ready SMT-LIB script")
    parser.add_argument("--solver", default=None,
                        help="solver executable (default: $IPM_SOLVER or z3)")
    parser.add_argument("--solver-args", default=None,
                        help="arguments for the solver executable (default: -in)")
    parser.add_argument("--timeout-ms", type=int, default=1000,
                        help="per-query solver timeout in milliseconds")
    parser.add_argument("--trace-smt", default=None, metavar="PATH",
                        help="log every solver command to this file")
    parser.add_argument("--emit-instrumented", default=None, metavar="PATH",
                        help="where to write the instrumented Dafny source")
    parser.add_argument("--dafny-cmd", default=DEFAULT_DAFNY_CMD,
                        help="command template producing Boogie from Dafny "
                             "({input}/{output} placeholders)")
    parser.add_argument("--boogie-cmd", default=DEFAULT_BOOGIE_CMD,
                        help="command template producing SMT-LIB from Boogie")
    parser.add_argument("--serve", type=int, default=None, metavar="PORT",
                        help="serve proof sessions over newline-delimited JSON on this port")
    parser.add_argument("--script", default=None, metavar="PATH",
                        help="read tactic commands from a file instead of stdin")
    return parser


def solver_config(args) -> SolverConfig:
    executable = args.solver if args.solver else default_solver_path()
    extra = tuple(args.solver_args.split()) if args.solver_args else ("-in",)
    return SolverConfig(executable=executable, extra_args=extra,
                        timeout_ms=args.timeout_ms, trace_path=args.trace_smt)


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        inputs = drive_pipeline(
            args.path, from_smt=args.from_smt,
            emit_instrumented=args.emit_instrumented,
            dafny_cmd=args.dafny_cmd, boogie_cmd=args.boogie_cmd)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    config = solver_config(args)

    if args.serve is not None:
        from .server import serve
        target = inputs.targets[0]
        if len(inputs.targets) > 1:
            print(f"note: {len(inputs.targets)} targets found; serving the first",
                  file=sys.stderr)
        try:
            serve(args.serve, inputs, target, config)
        except KeyboardInterrupt:
            pass
        except OSError as exc:
            print(f"error: cannot listen on port {args.serve}: {exc}", file=sys.stderr)
            return EXIT_ERROR
        return EXIT_OK

    script_stream = None
    if args.script is not None:
        script_path = Path(args.script)
        if not script_path.exists():
            print(f"error: script file not found: {script_path}", file=sys.stderr)
            return EXIT_ERROR
        script_stream = open(script_path)

    any_quit = False
    try:
        for index, target in enumerate(inputs.targets):
            if len(inputs.targets) > 1:
                print(f"--- obligation {index + 1} of {len(inputs.targets)} ---")
            options, prelude = session_commands(inputs, target)
            try:
                session = start_session(config, options, prelude)
            except SolverError as exc:
                print(f"error: {exc}", file=sys.stderr)
                return EXIT_ERROR
            try:
                displayer = Displayer(target.names)
                state = init_session(target, session, displayer)
                result = run_repl(state, session, displayer,
                                  in_stream=script_stream or sys.stdin)
                if result.quit and not result.completed:
                    any_quit = True
                    break
            finally:
                shutdown(session)
    finally:
        if script_stream is not None:
            script_stream.close()
    return EXIT_QUIT if any_quit else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
