/* The generated stub carries the generator config verbatim and its pure
 * helpers derive the server invocation and document routing from it. */

import * as assert from "node:assert";
import * as fs from "node:fs";
import * as path from "node:path";
import { test } from "node:test";

import {
  STUB_CONFIG,
  buildServerInvocation,
  documentSelector,
} from "../generated/vscode/src/stubConfig";

const frontendRoot = path.resolve(__dirname, "..", "..");
const generatedRoot = path.join(frontendRoot, "generated");

function readConfig(): Record<string, unknown> {
  const raw = fs.readFileSync(path.join(frontendRoot, "plugins.json"), "utf-8");
  return JSON.parse(raw) as Record<string, unknown>;
}

function* walk(dir: string): Generator<string> {
  for (const entry of fs.readdirSync(dir, { withFileTypes: true })) {
    const full = path.join(dir, entry.name);
    if (entry.isDirectory()) {
      yield* walk(full);
    } else {
      yield full;
    }
  }
}

test("stub config matches the generator config that produced the bundle", () => {
  const config = readConfig();
  assert.strictEqual(STUB_CONFIG.languageName, config.languageName);
  assert.strictEqual(STUB_CONFIG.fileExt, config.fileExt);
  assert.strictEqual(STUB_CONFIG.launcher, config.launcher);
  assert.strictEqual(STUB_CONFIG.binPath, config.binPath);
});

test("launcher is the argv prefix and binPath the final element", () => {
  const invocation = buildServerInvocation({
    languageName: "demo",
    fileExt: "dem",
    launcher: "python3 -m server --flag",
    binPath: "/opt/server.py",
  });
  assert.strictEqual(invocation.command, "python3");
  assert.deepStrictEqual(invocation.args, [
    "-m",
    "server",
    "--flag",
    "/opt/server.py",
  ]);
});

test("documents are routed by the configured file extension", () => {
  const selector = documentSelector(STUB_CONFIG);
  assert.deepStrictEqual(selector, [
    { scheme: "file", pattern: "**/*." + STUB_CONFIG.fileExt },
  ]);
});

test("no unresolved placeholders anywhere in the generated bundle", () => {
  let checked = 0;
  for (const file of walk(generatedRoot)) {
    const content = fs.readFileSync(file, "utf-8");
    assert.ok(!content.includes("${"), `placeholder residue in ${file}`);
    checked += 1;
  }
  assert.ok(checked >= 8, `expected a full bundle, saw ${checked} files`);
});

test("stub sources stay language-agnostic transport glue", () => {
  for (const name of ["extension.ts", "stubConfig.ts"]) {
    const source = fs.readFileSync(
      path.join(generatedRoot, "vscode", "src", name),
      "utf-8"
    );
    for (const marker of ['"Int"', '"String"', "TypeMismatch", "InferenceException"]) {
      assert.ok(!source.includes(marker), `${name} mentions ${marker}`);
    }
  }
});

test("extension stub stays small", () => {
  const source = fs.readFileSync(
    path.join(generatedRoot, "vscode", "src", "extension.ts"),
    "utf-8"
  );
  const lines = source.split("\n").filter((line) => line.trim().length > 0);
  assert.ok(lines.length <= 100, `extension.ts has ${lines.length} lines`);
});
