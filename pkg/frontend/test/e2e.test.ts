/** End-to-end: the UI client against a live session server.
 *
 * Spawns the Python session API on the bundled fixture (scripted fake solver,
 * fully hermetic), drives the worked example's tactic sequence through the
 * model exactly as the browser would, and checks that
 *   - the rendered open-goal counts run 1 -> 2 -> 1 -> 0,
 *   - the proofComplete payload is byte-identical to the REPL's proof output,
 *   - the final proof is exposed through the copy control.
 */

import assert from "node:assert/strict";
import { spawn, spawnSync } from "node:child_process";
import { existsSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { after, before, test } from "node:test";

import { SessionClient, connectTcp } from "../src/client.js";
import { applyServerMessage, initialModel, submitTactic } from "../src/model.js";
import { renderHtml, renderState } from "../src/render.js";
import { ServerMessage } from "../src/protocol.js";

function findRepoRoot(): string {
  let dir = dirname(fileURLToPath(import.meta.url));
  while (!existsSync(join(dir, "fixtures", "triangle_sum_even.smt2"))) {
    const parent = dirname(dir);
    if (parent === dir) {
      throw new Error("repository root with fixtures/ not found");
    }
    dir = parent;
  }
  return dir;
}

const REPO = findRepoRoot();
const FIXTURE = join(REPO, "fixtures", "triangle_sum_even.smt2");
const FAKE_SOLVER = join(REPO, "tests", "fake_solver.py");
const PYTHON = process.env.IPM_PYTHON ?? "python3";

const EXAMPLE_ANSWERS =
  "unknown,unknown,unknown,unsat,unknown,unsat,unsat,unsat,unknown,unsat,unsat";

const EXAMPLE_SEQUENCE = [
  "case (x % 2) == 0",
  "assert x == 2 * (x / 2)",
  "assert x * (x + 1) == 2 * ((x / 2) * (x + 1))",
  "assert x == (2 * (x / 2)) + 1",
  "assert x * (x + 1) == 2 * (x * ((x / 2) + 1))",
];

const env = { ...process.env, PYTHONPATH: join(REPO, "src") };

function cliArgs(extra: string[]): string[] {
  return [
    "-m", "ipm.cli", FIXTURE, ...extra,
    "--solver", PYTHON,
    "--solver-args", `${FAKE_SOLVER} --answers ${EXAMPLE_ANSWERS}`,
  ];
}

/** The REPL's proof output for the same tactic sequence (the golden twin). */
function replProof(): string {
  const run = spawnSync(PYTHON, cliArgs([]), {
    input: EXAMPLE_SEQUENCE.join("\n") + "\n",
    encoding: "utf-8",
    env,
  });
  assert.equal(run.status, 0, run.stderr);
  const stdout = run.stdout;
  const marker = "Proof:\n";
  const start = stdout.indexOf(marker);
  assert.notEqual(start, -1, stdout);
  return stdout.slice(start + marker.length).replace(/\n$/, "");
}

let server: ReturnType<typeof spawn>;
let port = 0;

before(async () => {
  server = spawn(PYTHON, cliArgs(["--serve", "0"]), { env });
  port = await new Promise<number>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => reject(new Error(`server never listened: ${buffer}`)), 30000);
    server.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/listening on 127\.0\.0\.1:(\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(Number.parseInt(match[1], 10));
      }
    });
    server.stderr!.on("data", (chunk: Buffer) => { buffer += chunk.toString(); });
    server.on("exit", (code) => reject(new Error(`server exited ${code}: ${buffer}`)));
  });
});

after(() => {
  server.kill();
});

test("example sequence: goal counts 1 -> 2 -> 1 -> 0 and copyable final proof", async () => {
  const client = new SessionClient(await connectTcp("127.0.0.1", port));
  let model = initialModel();
  const pushes: ServerMessage[] = [];
  client.onPush((msg) => {
    pushes.push(msg);
    model = applyServerMessage(model, msg);
  });

  model = applyServerMessage(model, await client.request({ type: "getState" }));
  const counts: number[] = [renderState(model).openGoalCount];

  for (const line of EXAMPLE_SEQUENCE) {
    const outcome = submitTactic(model, line, null);
    assert.ok(outcome.message, line);
    model = outcome.model;
    const reply = await client.request(
      outcome.message as Omit<Parameters<SessionClient["request"]>[0], "id">);
    assert.equal(reply.type, "tacticReport");
    model = applyServerMessage(model, reply);
    counts.push(renderState(model).openGoalCount);
  }

  // raw counts after each reply, compressed to distinct successive values
  assert.deepEqual(counts, [1, 2, 2, 1, 1, 0]);
  const compressed = counts.filter((c, i) => i === 0 || c !== counts[i - 1]);
  assert.deepEqual(compressed, [1, 2, 1, 0]);

  // the proofComplete push arrived and landed in the model
  await new Promise((resolve) => setTimeout(resolve, 200));
  const complete = pushes.find((p) => p.type === "proofComplete");
  assert.ok(complete, "expected a proofComplete push");

  // byte-identical to the REPL's proof output for the same sequence
  const expected = replProof();
  assert.equal((complete as any).payload.proof, expected);
  assert.equal(model.finalProof, expected);

  // the copy control exposes exactly the final proof text
  const view = renderState(model);
  assert.equal(view.finalProof, expected);
  const html = renderHtml(model);
  assert.match(html, /data-copy-target="final-proof"/);
  assert.ok(html.includes("if (((x % 2) == 0)) {"), html);

  client.close();
});

test("thin client: raw text through the socket matches the model's outcome", async () => {
  // disable the local keyword check by sending the raw message directly
  const client = new SessionClient(await connectTcp("127.0.0.1", port));
  const reply = await client.request({
    type: "applyTactic", keyword: "case", argument: "(x % 2) == 0",
  } as any);
  assert.equal(reply.type, "tacticReport");
  assert.equal((reply as any).payload.state.goalCount, 2);

  // server-side validation is authoritative: bad keyword -> error reply
  const bad = await client.request({ type: "applyTactic", keyword: "frob", argument: "x" } as any);
  assert.equal(bad.type, "error");
  client.close();
});
