/** DOM-free rendering: model -> view structure -> HTML string.
 *
 * The view layer is kept renderable in plain node so the e2e test can assert
 * on what a browser would show. Formulas are monospace and reproduced
 * verbatim (the server's parenthesization is what pastes back into source).
 */

import { UiSessionModel } from "./model.js";
import { GoalView } from "./protocol.js";

export interface GoalCard {
  id: number;
  hypotheses: string[];
  goal: string;
  status: string;
  focused: boolean;
}

export interface View {
  openGoalCount: number;
  goalCards: GoalCard[];
  proofTree: string[];       // indented outline, one line per goal card
  lastReport: string;
  inlineError: string | null;
  finalProof: string | null; // non-null once proved: content of the copy control
  finalGoal: string | null;
  taintBadge: boolean;
}

export function renderState(model: UiSessionModel): View {
  const cards = model.goals.map((g: GoalView) => ({
    id: g.id,
    hypotheses: g.hypotheses,
    goal: g.goal,
    status: g.status,
    focused: g.id === model.focusId,
  }));
  return {
    openGoalCount: model.goalCount,
    goalCards: cards,
    proofTree: cards.map(
      (c, index) => `${c.focused ? "> " : "  "}goal ${index + 1} [#${c.id}] ${c.goal}`),
    lastReport: model.lastReport,
    inlineError: model.lastError,
    finalProof: model.finalProof,
    finalGoal: model.finalGoal,
    taintBadge: model.taintFlag,
  };
}

const escapeHtml = (s: string): string =>
  s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;").replace(/"/g, "&quot;");

export function renderHtml(model: UiSessionModel): string {
  const view = renderState(model);
  const parts: string[] = [];
  parts.push(`<div class="goal-count">${view.openGoalCount} goal(s) remaining</div>`);
  if (view.taintBadge) {
    parts.push('<div class="taint-badge">unsound: uses assume</div>');
  }
  for (const card of view.goalCards) {
    parts.push(`<section class="goal-card${card.focused ? " focused" : ""}" data-goal="${card.id}">`);
    parts.push('<div class="label">hypotheses</div>');
    parts.push("<pre class=\"hypotheses\">" +
      card.hypotheses.map(escapeHtml).join("\n") + "</pre>");
    parts.push('<div class="label">goal</div>');
    parts.push(`<pre class="goal">${escapeHtml(card.goal)}</pre>`);
    parts.push("</section>");
  }
  parts.push('<pre class="proof-tree">' + view.proofTree.map(escapeHtml).join("\n") + "</pre>");
  if (view.lastReport) {
    parts.push(`<div class="report">${escapeHtml(view.lastReport)}</div>`);
  }
  if (view.inlineError) {
    parts.push(`<div class="inline-error">${escapeHtml(view.inlineError)}</div>`);
  }
  if (view.finalProof !== null) {
    parts.push('<section class="proof-panel">');
    if (view.finalGoal !== null) {
      parts.push(`<div class="label">Goal: ${escapeHtml(view.finalGoal)}</div>`);
    }
    parts.push(`<pre class="final-proof" id="final-proof">${escapeHtml(view.finalProof)}</pre>`);
    parts.push('<button class="copy-proof" data-copy-target="final-proof">Copy proof</button>');
    parts.push("</section>");
  }
  return parts.join("\n");
}
