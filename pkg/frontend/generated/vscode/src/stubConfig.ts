/* Generated: configuration and pure helpers for the assignlang client. */

export interface StubConfig {
  languageName: string;
  fileExt: string;
  launcher: string;
  binPath: string;
}

export const STUB_CONFIG: StubConfig = {
  languageName: "assignlang",
  fileExt: "asg",
  launcher: "python3 -m typeforge.cli serve --language assignlang --stdio --root",
  binPath: ".",
};

export interface ServerInvocation {
  command: string;
  args: string[];
}

/** The launcher is the argv prefix; binPath is the final argv element. */
export function buildServerInvocation(config: StubConfig): ServerInvocation {
  const argv = config.launcher
    .split(" ")
    .filter((part) => part.length > 0)
    .concat([config.binPath]);
  return { command: argv[0], args: argv.slice(1) };
}

export function documentSelector(
  config: StubConfig
): { scheme: string; pattern: string }[] {
  return [{ scheme: "file", pattern: "**/*." + config.fileExt }];
}
