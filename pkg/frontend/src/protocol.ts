/** Wire types for the newline-delimited JSON session protocol.
 *
 * Mirrors docs/protocol.md in the main repository: one JSON object per line,
 * every client message answered by exactly one correlated reply, plus an
 * uncorrelated `proofComplete` push when the tree closes.
 */

export type RequestId = string | number | null;

export type GoalStatus = "open" | "auto_discharged" | "closed_by_tactic" | "assumed" | "expanded";

export interface GoalView {
  id: number;
  hypotheses: string[];
  goal: string;
  status: GoalStatus;
}

export interface StatePayload {
  goalCount: number;
  goals: GoalView[];
  focusId: number | null;
  taint: boolean;
}

export interface VerdictPayload {
  kind: "proved" | "not_proved" | "error";
  reason: string | null;
}

export interface ReportPayload {
  kind: string;
  argument?: string;
  checkVerdict?: VerdictPayload | null;
  newOpenIds?: number[];
  dischargedIds?: number[];
  goalClosed?: boolean;
  treeClosed?: boolean;
}

export type ServerMessage =
  | { id: RequestId; type: "state"; payload: StatePayload }
  | { id: RequestId; type: "tacticReport"; payload: { report: ReportPayload; state: StatePayload } }
  | { id: RequestId; type: "proofComplete"; payload: { goal: string; proof: string; taint: boolean } }
  | { id: RequestId; type: "error"; payload: { message: string } };

export type ClientMessage =
  | { id: RequestId; type: "getState" }
  | { id: RequestId; type: "applyTactic"; keyword: TacticKeyword; argument: string }
  | { id: RequestId; type: "undo" }
  | { id: RequestId; type: "focus"; goal: number }
  | { id: RequestId; type: "quit" };

export const TACTIC_KEYWORDS = ["check", "assert", "case", "assume"] as const;
export type TacticKeyword = (typeof TACTIC_KEYWORDS)[number];

export function parseServerLine(line: string): ServerMessage {
  const parsed = JSON.parse(line);
  if (typeof parsed !== "object" || parsed === null || typeof parsed.type !== "string") {
    throw new Error(`malformed server message: ${line}`);
  }
  return parsed as ServerMessage;
}
