/** The UI's session model: a thin mirror of the server's latest state.
 *
 * The model never computes proof logic locally. Every field comes from a
 * server message; the only client-side work is keyword validation before a
 * tactic is sent and the command history for arrow-key navigation.
 */

import {
  ClientMessage, RequestId, ServerMessage, StatePayload, TACTIC_KEYWORDS,
  TacticKeyword,
} from "./protocol.js";

export interface UiSessionModel {
  goals: StatePayload["goals"];
  goalCount: number;
  focusId: number | null;
  taintFlag: boolean;
  tacticHistory: string[];
  lastReport: string;
  finalProof: string | null;
  finalGoal: string | null;
  lastError: string | null;
}

export function initialModel(): UiSessionModel {
  return {
    goals: [],
    goalCount: 0,
    focusId: null,
    taintFlag: false,
    tacticHistory: [],
    lastReport: "",
    finalProof: null,
    finalGoal: null,
    lastError: null,
  };
}

function withState(model: UiSessionModel, state: StatePayload): UiSessionModel {
  return {
    ...model,
    goals: state.goals,
    goalCount: state.goalCount,
    focusId: state.focusId,
    taintFlag: state.taint,
  };
}

/** Fold one server message into the model (pure). */
export function applyServerMessage(model: UiSessionModel, msg: ServerMessage): UiSessionModel {
  switch (msg.type) {
    case "state":
      return { ...withState(model, msg.payload), lastError: null };
    case "tacticReport": {
      const report = msg.payload.report;
      let summary = report.kind;
      if (report.checkVerdict) {
        summary = report.checkVerdict.kind === "proved"
          ? `Yes, the solver can prove ${report.argument ?? ""}`
          : `No, the solver cannot prove ${report.argument ?? ""}`;
      } else if (report.goalClosed) {
        summary = "Congrats, current goal proved.";
      }
      return { ...withState(model, msg.payload.state), lastReport: summary, lastError: null };
    }
    case "proofComplete":
      return {
        ...model,
        finalProof: msg.payload.proof,
        finalGoal: msg.payload.goal,
        taintFlag: msg.payload.taint,
        lastError: null,
      };
    case "error":
      return { ...model, lastError: msg.payload.message };
  }
}

export interface SubmitResult {
  message: ClientMessage | null;
  model: UiSessionModel;
  inlineError: string | null;
}

/** Turn one input line into an outbound message.
 *
 * Only the keyword is checked locally; argument validation is the server's
 * job. Unknown keywords are flagged inline and nothing is sent.
 */
export function submitTactic(model: UiSessionModel, text: string, id: RequestId): SubmitResult {
  const trimmed = text.trim();
  if (!trimmed) {
    return { message: null, model, inlineError: null };
  }
  const recorded: UiSessionModel = {
    ...model,
    tacticHistory: [...model.tacticHistory, trimmed],
  };
  const spaceIndex = trimmed.indexOf(" ");
  const head = spaceIndex < 0 ? trimmed : trimmed.slice(0, spaceIndex);
  const rest = spaceIndex < 0 ? "" : trimmed.slice(spaceIndex + 1).trim();
  const bare = head.startsWith(":") ? head.slice(1) : head;

  if ((TACTIC_KEYWORDS as readonly string[]).includes(head)) {
    if (!rest) {
      return { message: null, model: recorded, inlineError: `usage: ${head} <expression>` };
    }
    return {
      message: { id, type: "applyTactic", keyword: head as TacticKeyword, argument: rest },
      model: recorded,
      inlineError: null,
    };
  }
  if (bare === "undo") {
    return { message: { id, type: "undo" }, model: recorded, inlineError: null };
  }
  if (bare === "focus") {
    const goal = Number.parseInt(rest, 10);
    if (Number.isNaN(goal)) {
      return { message: null, model: recorded, inlineError: "usage: focus <goal id>" };
    }
    return { message: { id, type: "focus", goal }, model: recorded, inlineError: null };
  }
  if (bare === "quit") {
    return { message: { id, type: "quit" }, model: recorded, inlineError: null };
  }
  return {
    message: null,
    model: recorded,
    inlineError: `unknown command ${head}; tactics are ${TACTIC_KEYWORDS.join(", ")}`,
  };
}

/** History navigation for arrow keys: offset 1 is the most recent entry. */
export function historyEntry(model: UiSessionModel, offset: number): string | null {
  if (offset < 1 || offset > model.tacticHistory.length) {
    return null;
  }
  return model.tacticHistory[model.tacticHistory.length - offset];
}
