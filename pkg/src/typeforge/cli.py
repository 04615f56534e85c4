"""Command line entry points: serve, check, gen-plugins, metrics."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import plugins as plugin_gen
from .demos import UnknownDemo, load_demo
from .language import LanguageRuntime
from .metrics import build_report
from .positions import LineIndex


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="typeforge",
        description="Modular type-system engine, language server, and plugin generator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the language server")
    serve.add_argument("--language", required=True, help="composed language name")
    serve.add_argument(
        "--stdio", action="store_true", help="serve over standard input/output"
    )
    serve.add_argument("--root", default=".", help="workspace root directory")

    check = sub.add_parser("check", help="batch type checking")
    check.add_argument("files", nargs="+")
    check.add_argument("--language", required=True)
    check.add_argument("--format", choices=("json", "text"), default="text")

    gen = sub.add_parser("gen-plugins", help="generate editor plugin bundles")
    gen.add_argument("--config", required=True, help="plugins.json config file")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument(
        "--language",
        help="demo language whose syntax categories feed highlighting "
        "(defaults to the config's languageName when it names a demo)",
    )

    metrics = sub.add_parser("metrics", help="reuse metric report")
    metrics.add_argument("--input", required=True, help="langs.json input file")
    metrics.add_argument("--enumerate", action="store_true", dest="enumerate_all")
    metrics.add_argument("--per-signature", action="store_true", dest="per_signature")

    args = parser.parse_args(argv)
    command = {
        "serve": _cmd_serve,
        "check": _cmd_check,
        "gen-plugins": _cmd_gen_plugins,
        "metrics": _cmd_metrics,
    }[args.command]
    return command(args)


def _load_language(name: str):
    try:
        return load_demo(name).language
    except UnknownDemo as exc:
        print(f"typeforge: {exc}", file=sys.stderr)
        raise SystemExit(2) from None


def _cmd_serve(args) -> int:
    from .server import serve_stdio

    language = _load_language(args.language)
    return serve_stdio(language, args.root)


def _cmd_check(args) -> int:
    language = _load_language(args.language)
    runtime = LanguageRuntime(language)
    all_diagnostics = []
    for file_arg in args.files:
        path = Path(file_arg)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            print(f"typeforge: cannot read {file_arg}: {exc}", file=sys.stderr)
            return 2
        result = runtime.check_file(str(path), text)
        line_index = LineIndex(text)
        for event in result.diagnostics:
            line, col = line_index.byte_to_position(event.range[0])
            all_diagnostics.append(
                {
                    "file": str(path),
                    "range": {"startByte": event.range[0], "endByte": event.range[1]},
                    "line": line,
                    "character": col,
                    "severity": event.severity,
                    "code": event.code,
                    "message": event.message,
                }
            )
    if args.format == "json":
        json.dump({"diagnostics": all_diagnostics}, sys.stdout, indent=2)
        print()
    else:
        for d in all_diagnostics:
            print(
                f"{d['file']}:{d['line'] + 1}:{d['character'] + 1}: "
                f"{d['severity']} {d['code']}: {d['message']}",
                file=sys.stderr,
            )
    errors = [d for d in all_diagnostics if d["severity"] == "error"]
    return 1 if errors else 0


def _cmd_gen_plugins(args) -> int:
    config = plugin_gen.GeneratorConfig.load(args.config)
    elements: plugin_gen.SyntaxElements = {}
    demo_name = args.language or config.language_name
    try:
        language = load_demo(demo_name).language
    except UnknownDemo:
        language = None
    if language is not None:
        elements = plugin_gen.collect_syntax_elements(language)
    manifest = plugin_gen.generate(config, elements, args.out)
    json.dump(manifest.to_json(), sys.stdout, indent=2)
    print()
    return 0


def _cmd_metrics(args) -> int:
    with open(args.input, encoding="utf-8") as fh:
        data = json.load(fh)
    report = build_report(
        data, enumerate_all=args.enumerate_all, per_signature=args.per_signature
    )
    json.dump(report, sys.stdout, indent=2)
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
