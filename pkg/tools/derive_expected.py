#!/usr/bin/env python3
"""Re-derive the demo fixtures' expected/*.json by hand-executable rules.

This is the documented manual oracle, mechanized: a deliberately naive
walk of each demo program that never imports the typeforge package.

assignlang rules, per statement in scope order (enclosing scope first,
queued blocks afterwards, FIFO):
  * `name = value`: the value types as Int (digits), String (quoted), or
    the type of a bound identifier. An unbound identifier value is an
    InferenceException. An unbound name becomes a definition with the
    value's type; a bound name with an equal type is a reference; a bound
    name with a different type is a TypeMismatch.
  * `{ ... }` introduces a child scope processed after the enclosing
    scope finishes, and contributes a folding range.

exprlang rules, per line: literals type as Int or Double; `+` and `*`
require equal operand types and return that type, otherwise the line is
an InferenceException and stays untyped.

Run with --write to regenerate the expected files, or with no arguments
to verify they match (exit 1 on drift).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

DEMOS = Path(__file__).resolve().parent.parent / "src" / "typeforge" / "demos"


def line_col(text: str, offset: int) -> tuple[int, int]:
    prefix = text[:offset]
    line = prefix.count("\n")
    col = len(prefix) - (prefix.rfind("\n") + 1)
    return line, col


# ---------------------------------------------------------------------------
# assignlang

ASSIGN_TOKEN = re.compile(r'\s*("[^"\n]*"|\d+|[A-Za-z_][A-Za-z_0-9]*|[={}])')


def tokenize_assign(text: str):
    tokens, pos = [], 0
    while pos < len(text):
        m = ASSIGN_TOKEN.match(text, pos)
        if m is None:
            break
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


def derive_assignlang(text: str) -> dict:
    tokens = tokenize_assign(text)
    diagnostics, hover, symbols, folds = [], [], [], []
    counts = {"definitions": 0, "references": 0}

    def parse_block(i):
        """Return (statements, next index); statements are assign tuples or
        nested ('block', stmts, open_off, close_off)."""
        stmts = []
        while i < len(tokens) and tokens[i][0] != "}":
            if tokens[i][0] == "{":
                inner, j = parse_block(i + 1)
                stmts.append(("block", inner, tokens[i][1], tokens[j][1]))
                i = j + 1
            else:
                name, name_off = tokens[i]
                value, value_off = tokens[i + 2]
                stmts.append(("assign", name, name_off, value, value_off))
                i += 3
        return stmts, i

    program, _ = parse_block(0)

    def value_type(value, chain):
        if value.startswith('"'):
            return "String"
        if value.isdigit():
            return "Int"
        for env in reversed(chain):
            if value in env:
                return env[value]
        return None

    queue = [(program, [{}])]
    while queue:
        stmts, chain = queue.pop(0)
        for stmt in stmts:
            if stmt[0] == "block":
                _, inner, open_off, close_off = stmt
                folds.append([line_col(text, open_off)[0], line_col(text, close_off)[0]])
                queue.append((inner, chain + [{}]))
                continue
            _, name, name_off, value, _ = stmt
            line, col = line_col(text, name_off)
            rhs = value_type(value, chain)
            if rhs is None:
                diagnostics.append({"code": "InferenceException", "line": line})
                continue
            bound = None
            for env in reversed(chain):
                if name in env:
                    bound = env[name]
                    break
            if bound is None:
                chain[-1][name] = rhs
                counts["definitions"] += 1
                hover.append(
                    {"line": line, "character": col, "text": f"{name}: {rhs}"}
                )
                symbols.append((name_off, name))
            elif bound == rhs:
                counts["references"] += 1
            else:
                diagnostics.append({"code": "TypeMismatch", "line": line})

    return {
        "diagnostics": sorted(diagnostics, key=lambda d: d["line"]),
        "effects": counts,
        "hover": sorted(hover, key=lambda h: (h["line"], h["character"])),
        "documentSymbols": [name for _, name in sorted(symbols)],
        "folds": sorted(folds),
        "exprTypes": [],
    }


# ---------------------------------------------------------------------------
# exprlang

EXPR_TOKEN = re.compile(r"[ \t]*(\d+\.\d+|\d+|[+*])")


class ExprFailure(Exception):
    pass


def derive_exprlang(text: str) -> dict:
    diagnostics, types = [], []
    for lineno, line in enumerate(text.splitlines()):
        if not line.strip():
            continue
        tokens = [m.group(1) for m in EXPR_TOKEN.finditer(line)]

        def parse_sum(pos):
            left, pos = parse_product(pos)
            while pos < len(tokens) and tokens[pos] == "+":
                right, pos = parse_product(pos + 1)
                left = combine(left, right)
            return left, pos

        def parse_product(pos):
            left, pos = parse_factor(pos)
            while pos < len(tokens) and tokens[pos] == "*":
                right, pos = parse_factor(pos + 1)
                left = combine(left, right)
            return left, pos

        def parse_factor(pos):
            tok = tokens[pos]
            return ("Double" if "." in tok else "Int"), pos + 1

        def combine(a, b):
            if a != b:
                raise ExprFailure()
            return a

        try:
            result, _ = parse_sum(0)
            types.append(result)
        except ExprFailure:
            diagnostics.append({"code": "InferenceException", "line": lineno})
            types.append(None)

    return {
        "diagnostics": diagnostics,
        "effects": {"definitions": 0, "references": 0},
        "hover": [],
        "documentSymbols": [],
        "folds": [],
        "exprTypes": types,
    }


DERIVERS = {"assignlang": derive_assignlang, "exprlang": derive_exprlang}


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--write", action="store_true", help="regenerate expected files")
    args = parser.parse_args()
    drift = 0
    for demo, derive in DERIVERS.items():
        for program in sorted((DEMOS / demo / "programs").glob("*.demo")):
            expected = derive(program.read_text())
            target = DEMOS / demo / "expected" / f"{program.stem}.json"
            rendered = json.dumps(expected, indent=2, sort_keys=True) + "\n"
            if args.write:
                target.write_text(rendered)
                print(f"wrote {target}")
            else:
                current = target.read_text() if target.exists() else ""
                status = "ok" if current == rendered else "DRIFT"
                if status == "DRIFT":
                    drift += 1
                print(f"{status:5} {target}")
    return 1 if drift else 0


if __name__ == "__main__":
    sys.exit(main())
