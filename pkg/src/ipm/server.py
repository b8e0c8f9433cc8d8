"""Newline-delimited JSON protocol for driving a proof session remotely.

Each connection gets its own fresh session (and its own solver process);
messages are processed strictly in arrival order by the connection's handler,
so the observable state sequence is always a sequential application.  The
schema is documented in docs/protocol.md.
"""

from __future__ import annotations

import http.server
import json
import os
import socketserver
import threading
from dataclasses import dataclass
from functools import partial
from pathlib import Path

from . import dafny
from .backtranslate import Displayer, PreparedObligation
from .engine import (
    EngineError, ProofState, Tactic, apply_tactic, focus, init_session,
    is_tainted, reconstruct_proof, undo,
)
from .repl import PipelineInputs, session_commands
from .solver import Session, SolverConfig, shutdown, start_session

__all__ = ["handle_message", "state_payload", "serve", "SessionContext"]

TACTIC_KEYWORDS = ("check", "assert", "case", "assume")


@dataclass
class SessionContext:
    state: ProofState
    session: Session
    displayer: Displayer
    closed: bool = False  # set once quit is received


def state_payload(state: ProofState) -> dict:
    goals = []
    for node_id in state.open_order:
        node = state.node(node_id)
        goals.append({
            "id": node.node_id,
            "hypotheses": list(node.display_hypotheses),
            "goal": node.display_goal,
            "status": node.status,
        })
    return {
        "goalCount": state.open_count,
        "goals": goals,
        "focusId": state.focus_id,
        "taint": is_tainted(state),
    }


def _verdict_payload(verdict) -> dict | None:
    if verdict is None:
        return None
    return {"kind": verdict.kind, "reason": verdict.reason}


def _error(request_id, message: str) -> dict:
    return {"id": request_id, "type": "error", "payload": {"message": message}}


def handle_message(ctx: SessionContext, msg: dict) -> list[dict]:
    """Apply one client message; returns the correlated reply, plus a
    `proofComplete` push when the tree closes.  Invalid messages leave the
    state unchanged.
    """
    if not isinstance(msg, dict) or "type" not in msg:
        return [_error(msg.get("id") if isinstance(msg, dict) else None,
                       "message must be an object with a 'type' field")]
    request_id = msg.get("id")
    msg_type = msg["type"]

    if msg_type == "getState":
        return [{"id": request_id, "type": "state", "payload": state_payload(ctx.state)}]

    if msg_type == "quit":
        ctx.closed = True
        return [{"id": request_id, "type": "state", "payload": state_payload(ctx.state)}]

    if msg_type == "undo":
        try:
            ctx.state = undo(ctx.state)
        except EngineError as exc:
            return [_error(request_id, str(exc))]
        return [_report_reply(ctx, request_id, {"kind": "undo"})]

    if msg_type == "focus":
        goal_id = msg.get("goal")
        if not isinstance(goal_id, int):
            return [_error(request_id, "focus requires an integer 'goal' field")]
        try:
            ctx.state = focus(ctx.state, goal_id)
        except EngineError as exc:
            return [_error(request_id, str(exc))]
        return [_report_reply(ctx, request_id, {"kind": "focus", "goal": goal_id})]

    if msg_type == "applyTactic":
        keyword = msg.get("keyword")
        argument = msg.get("argument", "")
        if keyword not in TACTIC_KEYWORDS:
            return [_error(request_id, f"unknown tactic keyword {keyword!r}")]
        if not isinstance(argument, str) or not argument.strip():
            return [_error(request_id, "applyTactic requires a non-empty 'argument'")]
        try:
            term = dafny.parse_expr(argument, ctx.displayer.names)
        except dafny.DafnyError as exc:
            return [_error(request_id, str(exc))]
        tactic = Tactic(keyword, term)
        try:
            new_state, report = apply_tactic(ctx.state, ctx.session, tactic, ctx.displayer)
        except EngineError as exc:
            return [_error(request_id, str(exc))]
        ctx.state = new_state
        report_payload = {
            "kind": keyword,
            "argument": ctx.displayer.term_text(term),
            "checkVerdict": _verdict_payload(report.check_verdict),
            "newOpenIds": list(report.new_open_ids),
            "dischargedIds": list(report.discharged_ids),
            "goalClosed": report.subtree_closed,
            "treeClosed": report.tree_closed,
        }
        replies = [_report_reply(ctx, request_id, report_payload)]
        if report.tree_closed:
            proof = reconstruct_proof(ctx.state, ctx.displayer)
            replies.append({
                "id": None,
                "type": "proofComplete",
                "payload": {
                    "goal": ctx.state.node(ctx.state.root_id).display_goal,
                    "proof": proof,
                    "taint": is_tainted(ctx.state),
                },
            })
        return replies

    return [_error(request_id, f"unknown message type {msg_type!r}")]


def _report_reply(ctx: SessionContext, request_id, report: dict) -> dict:
    return {
        "id": request_id,
        "type": "tacticReport",
        "payload": {"report": report, "state": state_payload(ctx.state)},
    }


# ---------------------------------------------------------------------------
# TCP server
# ---------------------------------------------------------------------------

class _Handler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        inputs: PipelineInputs = self.server.inputs
        target: PreparedObligation = self.server.target
        config: SolverConfig = self.server.config
        options, prelude = session_commands(inputs, target)
        session = start_session(config, options, prelude)
        try:
            displayer = Displayer(target.names)
            state = init_session(target, session, displayer)
            ctx = SessionContext(state, session, displayer)
            for raw in self.rfile:
                line = raw.decode("utf-8", errors="replace").strip()
                if not line:
                    continue
                try:
                    msg = json.loads(line)
                except json.JSONDecodeError as exc:
                    replies = [_error(None, f"invalid JSON: {exc}")]
                else:
                    replies = handle_message(ctx, msg)
                for reply in replies:
                    self.wfile.write((json.dumps(reply) + "\n").encode())
                self.wfile.flush()
                if ctx.closed:
                    break
        finally:
            shutdown(session)


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def _maybe_serve_assets(port: int) -> threading.Thread | None:
    """Serve the companion UI's static build next to the JSON port, if built."""
    assets = os.environ.get("IPM_UI_ASSETS")
    candidates = [Path(assets)] if assets else [
        Path.cwd() / "frontend" / "dist",
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
    ]
    for directory in candidates:
        if directory and directory.is_dir():
            handler = partial(http.server.SimpleHTTPRequestHandler, directory=str(directory))
            try:
                httpd = socketserver.TCPServer(("127.0.0.1", port + 1), handler)
            except OSError as exc:
                print(f"note: not serving ui assets ({exc})", flush=True)
                return None
            httpd.allow_reuse_address = True
            thread = threading.Thread(target=httpd.serve_forever, daemon=True)
            thread.start()
            print(f"ui assets served on http://127.0.0.1:{port + 1}/ from {directory}",
                  flush=True)
            return thread
    return None


def make_server(port: int, inputs: PipelineInputs, target: PreparedObligation,
                config: SolverConfig, host: str = "127.0.0.1") -> _Server:
    """A bound, not-yet-running server; port 0 picks a free port."""
    server = _Server((host, port), _Handler)
    server.inputs = inputs
    server.target = target
    server.config = config
    return server


def serve(port: int, inputs: PipelineInputs, target: PreparedObligation,
          config: SolverConfig, host: str = "127.0.0.1") -> None:
    """Accept connections forever; one isolated proof session per connection."""
    with make_server(port, inputs, target, config, host) as server:
        _maybe_serve_assets(server.server_address[1])
        print(f"session API listening on {host}:{server.server_address[1]}", flush=True)
        server.serve_forever()
