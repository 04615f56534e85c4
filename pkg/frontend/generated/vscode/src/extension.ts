/* Generated client stub: pure transport glue between the editor and the
 * language server process. All language behavior lives server-side. */

import * as path from "path";
import * as vscode from "vscode";
import {
  LanguageClient,
  LanguageClientOptions,
  ServerOptions,
} from "vscode-languageclient/node";
import {
  STUB_CONFIG,
  buildServerInvocation,
  documentSelector,
} from "./stubConfig";

let client: LanguageClient | undefined;

export function activate(context: vscode.ExtensionContext): void {
  const binPath = path.isAbsolute(STUB_CONFIG.binPath)
    ? STUB_CONFIG.binPath
    : path.join(context.extensionPath, STUB_CONFIG.binPath);
  const invocation = buildServerInvocation({ ...STUB_CONFIG, binPath });
  const serverOptions: ServerOptions = {
    command: invocation.command,
    args: invocation.args,
  };
  const clientOptions: LanguageClientOptions = {
    documentSelector: documentSelector(STUB_CONFIG),
  };
  client = new LanguageClient(
    STUB_CONFIG.languageName,
    STUB_CONFIG.languageName + " language server",
    serverOptions,
    clientOptions
  );
  client.start().catch((err: unknown) => {
    client = undefined;
    void vscode.window.showErrorMessage(
      "Failed to start the " +
        STUB_CONFIG.languageName +
        " language server: " +
        String(err)
    );
  });
}

export function deactivate(): Thenable<void> | undefined {
  const active = client;
  client = undefined;
  return active ? active.stop() : undefined;
}
