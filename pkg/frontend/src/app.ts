/** Browser entry point: wire the session model to the DOM.
 *
 * One event loop, at most one in-flight request; the input is disabled while
 * a reply is pending. Arrow keys navigate the tactic history.
 */

import { connectWebSocket, SessionClient } from "./client.js";
import { applyServerMessage, historyEntry, initialModel, submitTactic } from "./model.js";
import { renderHtml } from "./render.js";

const DEFAULT_BRIDGE = "ws://127.0.0.1:7073/";

async function main(): Promise<void> {
  const root = document.getElementById("session")!;
  const input = document.getElementById("tactic-input") as HTMLInputElement;
  const form = document.getElementById("tactic-form") as HTMLFormElement;
  const status = document.getElementById("connection-status")!;

  let model = initialModel();
  let historyOffset = 0;

  const redraw = () => {
    root.innerHTML = renderHtml(model);
    const copyButton = root.querySelector<HTMLButtonElement>(".copy-proof");
    if (copyButton) {
      copyButton.addEventListener("click", () => {
        const proof = model.finalProof ?? "";
        void navigator.clipboard.writeText(proof);
        copyButton.textContent = "Copied";
      });
    }
  };

  const url = new URLSearchParams(location.search).get("bridge") ?? DEFAULT_BRIDGE;
  let client: SessionClient;
  try {
    client = new SessionClient(await connectWebSocket(url));
  } catch (err) {
    status.textContent = `not connected: ${(err as Error).message} — start the bridge with npm run bridge`;
    return;
  }
  status.textContent = `connected via ${url}`;

  client.onPush((msg) => {
    model = applyServerMessage(model, msg);
    redraw();
  });

  const send = async (partial: Parameters<SessionClient["request"]>[0]) => {
    input.disabled = true;
    const reply = await client.request(partial);
    model = applyServerMessage(model, reply);
    input.disabled = false;
    input.focus();
    redraw();
  };

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const outcome = submitTactic(model, input.value, null);
    model = outcome.model;
    model = { ...model, lastError: outcome.inlineError };
    historyOffset = 0;
    input.value = "";
    if (outcome.message) {
      void send(outcome.message);
    } else {
      redraw();
    }
  });

  input.addEventListener("keydown", (event) => {
    if (event.key === "ArrowUp") {
      const entry = historyEntry(model, historyOffset + 1);
      if (entry !== null) {
        historyOffset += 1;
        input.value = entry;
        event.preventDefault();
      }
    } else if (event.key === "ArrowDown") {
      const entry = historyEntry(model, historyOffset - 1);
      historyOffset = Math.max(0, historyOffset - 1);
      input.value = entry ?? "";
      event.preventDefault();
    }
  });

  await send({ type: "getState" });
}

void main();
