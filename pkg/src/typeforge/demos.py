"""Self-contained demo languages used by the end-to-end tests and the CLI.

Each demo bundle lives in package data under ``demos/<name>/`` with its
feature-box registry, artifact descriptions, Typelang roles, fixture
programs, and hand-derived expected results. ``assignlang`` is a small
assignment language (int/string literals, braces introducing block scopes);
``exprlang`` is additive/multiplicative arithmetic over int and double.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .engine import TypeValue
from .features import Artifact, FeatureRegistry, IntegrationReport
from .language import ComposedLanguage, compose_language
from .positions import byte_offsets
from .syntax import SyntaxNode
from .typelang import ParseError

DEMO_NAMES = ("assignlang", "exprlang")


class UnknownDemo(Exception):
    def __init__(self, name: str) -> None:
        super().__init__(f"unknown demo {name!r}; available: {', '.join(DEMO_NAMES)}")


class DemoIntegrityError(Exception):
    pass


@dataclass
class DemoBundle:
    language: ComposedLanguage
    report: IntegrationReport
    programs: dict[str, str] = field(default_factory=dict)
    expected: dict[str, dict] = field(default_factory=dict)


def demo_data_root() -> Path:
    return Path(str(resources.files("typeforge") / "demos"))


def load_demo(name: str) -> DemoBundle:
    """Compose a demo language from its fixture bundle and validate it."""
    if name not in DEMO_NAMES:
        raise UnknownDemo(name)
    base = demo_data_root() / name
    config = json.loads((base / "language.json").read_text(encoding="utf-8"))
    registry = FeatureRegistry.load(base / "featureboxes.json")

    def role_loader(rel_path: str) -> str:
        return (base / rel_path).read_text(encoding="utf-8")

    artifacts = [
        Artifact.from_json(json.loads(path.read_text(encoding="utf-8")), role_loader)
        for path in sorted((base / "artifacts").glob("*.json"))
    ]
    language = compose_language(
        name=config["name"],
        artifacts=artifacts,
        registry=registry,
        priorities=config["priorities"],
        parser=PARSERS[name],
        literal_types={
            kind: TypeValue(type_name)
            for kind, type_name in config.get("literalTypes", {}).items()
        },
        file_ext=config.get("fileExt", "txt"),
        global_contexts=config.get("globalContexts", ("scope_index", "symbol_graph")),
    )
    report = language.validate()
    if not report.valid:
        raise DemoIntegrityError(
            f"demo {name!r} failed integration validation: {report.violations}"
        )
    bundle = DemoBundle(language, report)
    for program_path in sorted((base / "programs").glob("*.demo")):
        bundle.programs[program_path.stem] = program_path.read_text(encoding="utf-8")
    expected_dir = base / "expected"
    if expected_dir.is_dir():
        for expected_path in sorted(expected_dir.glob("*.json")):
            bundle.expected[expected_path.stem] = json.loads(
                expected_path.read_text(encoding="utf-8")
            )
    return bundle


# ---------------------------------------------------------------------------
# assignlang parser

_ASSIGN_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<string>"[^"\n]*")
    | (?P<int>\d+)
    | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<punct>[={}])
    """,
    re.VERBOSE,
)


def _scan(text: str, token_re: re.Pattern) -> list[tuple[str, str, int, int]]:
    offs = byte_offsets(text)
    tokens = []
    pos = 0
    while pos < len(text):
        m = token_re.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", offs[pos])
        if m.lastgroup != "ws":
            tokens.append((m.lastgroup, m.group(), offs[m.start()], offs[m.end()]))
        pos = m.end()
    return tokens


class _TokenCursor:
    def __init__(self, tokens, eof_offset: int) -> None:
        self.tokens = tokens
        self.pos = 0
        self.eof_offset = eof_offset

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def next(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", self.eof_offset)
        self.pos += 1
        return tok

    def expect(self, text: str):
        tok = self.next()
        if tok[1] != text:
            raise ParseError(f"expected {text!r}, found {tok[1]!r}", tok[2])
        return tok


def parse_assignlang(text: str, file: str) -> SyntaxNode:
    """program := (assign | block)* ; assign := ID '=' (INT|STRING|ID)."""
    total = len(text.encode("utf-8"))
    cursor = _TokenCursor(_scan(text, _ASSIGN_TOKEN_RE), total)

    def statements(stop: str | None) -> list[SyntaxNode]:
        nodes = []
        while True:
            tok = cursor.peek()
            if tok is None or (stop is not None and tok[1] == stop):
                return nodes
            nodes.append(statement())

    def statement() -> SyntaxNode:
        tok = cursor.peek()
        if tok[0] == "punct" and tok[1] == "{":
            return block()
        return assignment()

    def block() -> SyntaxNode:
        open_tok = cursor.expect("{")
        inner = statements("}")
        close_tok = cursor.expect("}")
        open_node = SyntaxNode(
            "token", "{", (open_tok[2], open_tok[3]), file, "{", is_token=True
        )
        close_node = SyntaxNode(
            "token", "}", (close_tok[2], close_tok[3]), file, "}", is_token=True
        )
        stmt_list = SyntaxNode(
            "stmt_list", "StmtList",
            _hull(inner, (open_tok[3], close_tok[2])), file, children=inner,
        )
        return SyntaxNode(
            "block", "Block", (open_tok[2], close_tok[3]), file,
            children=[open_node, stmt_list, close_node], artifact_id="block-stmt",
        )

    def assignment() -> SyntaxNode:
        name = cursor.next()
        if name[0] != "ident":
            raise ParseError(f"expected an identifier, found {name[1]!r}", name[2])
        eq = cursor.expect("=")
        value = expression()
        id_node = SyntaxNode(
            "identifier", "Id", (name[2], name[3]), file, name[1]
        )
        eq_node = SyntaxNode("token", "=", (eq[2], eq[3]), file, "=", is_token=True)
        return SyntaxNode(
            "assign", "Assign", (name[2], value.span[1]), file,
            children=[id_node, eq_node, value], artifact_id="assign-stmt",
        )

    def expression() -> SyntaxNode:
        tok = cursor.next()
        kind, textval, start, end = tok
        if kind == "int":
            return SyntaxNode(
                "int_literal", "IntLit", (start, end), file, textval,
                artifact_id="int-type",
            )
        if kind == "string":
            return SyntaxNode(
                "string_literal", "StrLit", (start, end), file, textval,
                artifact_id="string-type",
            )
        if kind == "ident":
            return SyntaxNode("identifier", "Id", (start, end), file, textval)
        raise ParseError(f"expected a value, found {textval!r}", start)

    body = statements(None)
    if cursor.peek() is not None:
        tok = cursor.peek()
        raise ParseError(f"unexpected {tok[1]!r}", tok[2])
    span = (0, max(total, 1))
    stmt_list = SyntaxNode("stmt_list", "StmtList", _hull(body, span), file, children=body)
    return SyntaxNode(
        "program", "Program", span, file,
        children=[stmt_list], artifact_id="program-scope",
    )


# ---------------------------------------------------------------------------
# exprlang parser

_EXPR_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r]+)
    | (?P<newline>\n)
    | (?P<double>\d+\.\d+)
    | (?P<int>\d+)
    | (?P<punct>[+*])
    """,
    re.VERBOSE,
)


def parse_exprlang(text: str, file: str) -> SyntaxNode:
    """One expression per line; '+' over '*' with the usual precedence."""
    total = len(text.encode("utf-8"))
    tokens = _scan(text, _EXPR_TOKEN_RE)
    lines: list[list[tuple]] = [[]]
    for tok in tokens:
        if tok[0] == "newline":
            lines.append([])
        else:
            lines[-1].append(tok)

    expressions = []
    for line_tokens in lines:
        if not line_tokens:
            continue
        cursor = _TokenCursor(line_tokens, line_tokens[-1][3])
        expressions.append(_parse_sum(cursor, file))
        leftover = cursor.peek()
        if leftover is not None:
            raise ParseError(f"unexpected {leftover[1]!r}", leftover[2])

    span = (0, max(total, 1))
    expr_list = SyntaxNode(
        "expr_list", "ExprList", _hull(expressions, span), file, children=expressions
    )
    return SyntaxNode(
        "program", "Program", span, file,
        children=[expr_list], artifact_id="program-scope",
    )


def _parse_sum(cursor: _TokenCursor, file: str) -> SyntaxNode:
    node = _parse_product(cursor, file)
    while cursor.peek() is not None and cursor.peek()[1] == "+":
        op = cursor.next()
        right = _parse_product(cursor, file)
        node = _binary(node, op, right, "add", "Add", "add-expr", file)
    return node


def _parse_product(cursor: _TokenCursor, file: str) -> SyntaxNode:
    node = _parse_factor(cursor, file)
    while cursor.peek() is not None and cursor.peek()[1] == "*":
        op = cursor.next()
        right = _parse_factor(cursor, file)
        node = _binary(node, op, right, "mul", "Mul", "mul-expr", file)
    return node


def _parse_factor(cursor: _TokenCursor, file: str) -> SyntaxNode:
    kind, text, start, end = cursor.next()
    if kind == "int":
        return SyntaxNode(
            "int_literal", "IntLit", (start, end), file, text, artifact_id="int-type"
        )
    if kind == "double":
        return SyntaxNode(
            "double_literal", "DblLit", (start, end), file, text,
            artifact_id="double-type",
        )
    raise ParseError(f"expected a number, found {text!r}", start)


def _binary(left, op, right, kind, label, artifact_id, file) -> SyntaxNode:
    op_node = SyntaxNode("token", op[1], (op[2], op[3]), file, op[1], is_token=True)
    return SyntaxNode(
        kind, label, (left.span[0], right.span[1]), file,
        children=[left, op_node, right], artifact_id=artifact_id,
    )


def _hull(nodes: list[SyntaxNode], fallback: tuple[int, int]) -> tuple[int, int]:
    if not nodes:
        return fallback
    return (nodes[0].span[0], nodes[-1].span[1])


PARSERS = {
    "assignlang": parse_assignlang,
    "exprlang": parse_exprlang,
}
