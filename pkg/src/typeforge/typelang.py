"""The per-artifact type-rule DSL: AST, tokenizer, parser, and printer.

The statement surface:

    program    ::= statement*
    statement  ::= define | defineScope | infer | check | use | run
                 | enter | exit | try | init
    define     ::= "define" typeExpr nodeRef ("then" CALLBACK)?
    defineScope::= "define" "scope" SCOPE nodeRef ("from" TERMINAL "to" TERMINAL)?
    infer      ::= "infer" sigExpr nodeRef ("=>" typeExpr)?
                   ("with" typeExpr ("," typeExpr)*)?
    check      ::= "check" nodeRef ":" typeExpr variance typeExpr
    use        ::= "use" nodeRef typeExpr
    run        ::= "run" "[" PRIORITY "]" nodeRef+ ("then" CALLBACK)?
    enter/exit ::= ("enter" | "exit") SCOPE
    try        ::= "try" "{" statement* "}" ("on" EXCEPTION "{" statement* "}")?
    init       ::= "init" SCOPE
    typeExpr   ::= TYPE | "typeof" "(" nodeRef ")"
    sigExpr    ::= SIGNATURE | "typeof" "(" nodeRef ")"
    nodeRef    ::= "$" INT | "<" IDENT ">"

Hook identifiers (TYPE, SIGNATURE, SCOPE, CALLBACK, EXCEPTION) resolve
against the variant grammar the program is parsed under; an identifier with
no backing feature box is a parse error. Whitespace is insignificant and
``//`` comments run to end of line.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence

Span = tuple[int, int]


class ParseError(Exception):
    """Typelang source rejected; carries a byte offset into the source."""

    def __init__(self, message: str, offset: int = 0) -> None:
        super().__init__(message)
        self.message = message
        self.offset = offset

    def render(self, file: str, source: str) -> str:
        prefix = source.encode("utf-8")[: self.offset].decode("utf-8", "replace")
        line = prefix.count("\n") + 1
        col = len(prefix) - (prefix.rfind("\n") + 1) + 1
        return f"{file}:{line}:{col}: {self.message}"


class UnknownHook(ParseError):
    """A hook identifier matched no feature box in the active variant."""

    def __init__(self, kind: str, name: str, offset: int = 0) -> None:
        super().__init__(f"unknown {kind} hook '{name}'", offset)
        self.kind = kind
        self.name = name


class Variance(enum.Enum):
    INVARIANT = "invariant"
    COVARIANT = "covariant"
    CONTRAVARIANT = "contravariant"


@dataclass(frozen=True)
class NodeRef:
    """Reference to a node of the production the role is attached to.

    Either positional (index 0 is the production head, 1..k its nonterminal
    children left to right) or labeled by nonterminal name.
    """

    index: int | None = None
    label: str | None = None
    span: Span = (0, 0)

    def __post_init__(self) -> None:
        if (self.index is None) == (self.label is None):
            raise ValueError("NodeRef takes exactly one of index/label")

    def __str__(self) -> str:
        return f"${self.index}" if self.index is not None else f"<{self.label}>"


class TypeExpr:
    pass


@dataclass(frozen=True)
class NamedType(TypeExpr):
    name: str
    span: Span = (0, 0)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class TypeOf(TypeExpr):
    ref: NodeRef
    span: Span = (0, 0)

    def __str__(self) -> str:
        return f"typeof({self.ref})"


@dataclass(frozen=True)
class NamedSignature:
    name: str
    span: Span = (0, 0)

    def __str__(self) -> str:
        return self.name


SigExpr = NamedSignature | TypeOf


class Statement:
    span: Span


@dataclass(frozen=True)
class Define(Statement):
    type_expr: TypeExpr
    ref: NodeRef
    callback: str | None = None
    span: Span = (0, 0)


@dataclass(frozen=True)
class DefineScope(Statement):
    scope: str
    ref: NodeRef
    fold_from: str | None = None
    fold_to: str | None = None
    span: Span = (0, 0)


@dataclass(frozen=True)
class Infer(Statement):
    sig: SigExpr
    ref: NodeRef
    expected: TypeExpr | None = None
    with_args: tuple[TypeExpr, ...] = ()
    span: Span = (0, 0)


@dataclass(frozen=True)
class Check(Statement):
    ref: NodeRef
    found: TypeExpr
    variance: Variance = Variance.INVARIANT
    expected: TypeExpr = field(default_factory=lambda: NamedType("?"))
    span: Span = (0, 0)


@dataclass(frozen=True)
class Use(Statement):
    ref: NodeRef
    type_expr: TypeExpr
    span: Span = (0, 0)


@dataclass(frozen=True)
class Run(Statement):
    priority: str
    refs: tuple[NodeRef, ...] = ()
    callback: str | None = None
    span: Span = (0, 0)


@dataclass(frozen=True)
class Enter(Statement):
    scope: str
    span: Span = (0, 0)


@dataclass(frozen=True)
class Exit(Statement):
    scope: str
    span: Span = (0, 0)


@dataclass(frozen=True)
class Try(Statement):
    body: tuple[Statement, ...]
    exception: str | None = None
    handler: tuple[Statement, ...] | None = None
    span: Span = (0, 0)

    def __post_init__(self) -> None:
        if (self.exception is None) != (self.handler is None):
            raise ValueError("Try handler present iff exception present")


@dataclass(frozen=True)
class Init(Statement):
    scope: str
    span: Span = (0, 0)


@dataclass(frozen=True)
class TypelangProgram:
    statements: tuple[Statement, ...]
    source_span: Span = (0, 0)


# ---------------------------------------------------------------------------
# Tokenizer

_KEYWORDS = {
    "define", "scope", "infer", "check", "use", "run", "enter", "exit",
    "try", "on", "init", "then", "from", "to", "with", "typeof",
    "covariant", "contravariant", "invariant",
}

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>\s+)
    | (?P<comment>//[^\n]*)
    | (?P<ref>\$\d+)
    | (?P<label><[A-Za-z_][A-Za-z_0-9]*>)
    | (?P<arrow>=>)
    | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
    | (?P<int>\d+)
    | (?P<punct>[{}()\[\]:,]|[^\s])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ParseError(f"unexpected character {source[pos]!r}", pos)
        kind = m.lastgroup or "punct"
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    return tokens


# ---------------------------------------------------------------------------
# Parser

HookSink = Callable[[str, str, int], None]
"""Called with (kind, name, offset) for every hook reference encountered."""


class _Parser:
    def __init__(self, source: str, resolve: HookSink) -> None:
        self.source = source
        self.tokens = tokenize(source)
        self.pos = 0
        self.resolve = resolve

    # -- token stream helpers

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)

    def next(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.source))
        self.pos += 1
        return tok

    def expect(self, text: str) -> Token:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.start)
        return tok

    def expect_ident(self, role: str) -> Token:
        tok = self.next()
        if tok.kind != "ident" or tok.text in _KEYWORDS:
            raise ParseError(f"expected {role} identifier, found {tok.text!r}", tok.start)
        return tok

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "ident" and tok.text in words

    # -- grammar

    def program(self) -> TypelangProgram:
        stmts: list[Statement] = []
        while not self.at_end():
            stmts.append(self.statement())
        return TypelangProgram(tuple(stmts), (0, len(self.source.encode("utf-8"))))

    def statement(self) -> Statement:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of input", len(self.source))
        if tok.kind != "ident":
            raise ParseError(f"expected statement, found {tok.text!r}", tok.start)
        handlers = {
            "define": self._define,
            "infer": self._infer,
            "check": self._check,
            "use": self._use,
            "run": self._run,
            "enter": self._enter_exit,
            "exit": self._enter_exit,
            "try": self._try,
            "init": self._init,
        }
        handler = handlers.get(tok.text)
        if handler is None:
            raise ParseError(f"expected statement keyword, found {tok.text!r}", tok.start)
        return handler()

    def _hook(self, kind: str, tok: Token) -> str:
        self.resolve(kind, tok.text, tok.start)
        return tok.text

    def node_ref(self) -> NodeRef:
        tok = self.next()
        if tok.kind == "ref":
            return NodeRef(index=int(tok.text[1:]), span=(tok.start, tok.end))
        if tok.kind == "label":
            return NodeRef(label=tok.text[1:-1], span=(tok.start, tok.end))
        raise ParseError(f"expected node reference, found {tok.text!r}", tok.start)

    def type_expr(self) -> TypeExpr:
        tok = self.next()
        if tok.kind == "ident" and tok.text == "typeof":
            self.expect("(")
            ref = self.node_ref()
            end = self.expect(")")
            return TypeOf(ref, span=(tok.start, end.end))
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            return NamedType(self._hook("Type", tok), span=(tok.start, tok.end))
        raise ParseError(f"expected type expression, found {tok.text!r}", tok.start)

    def sig_expr(self) -> SigExpr:
        tok = self.next()
        if tok.kind == "ident" and tok.text == "typeof":
            self.expect("(")
            ref = self.node_ref()
            end = self.expect(")")
            return TypeOf(ref, span=(tok.start, end.end))
        if tok.kind == "ident" and tok.text not in _KEYWORDS:
            return NamedSignature(self._hook("Signature", tok), span=(tok.start, tok.end))
        raise ParseError(f"expected signature expression, found {tok.text!r}", tok.start)

    def _define(self) -> Statement:
        start = self.expect("define")
        if self.at_keyword("scope"):
            self.next()
            scope_tok = self.expect_ident("scope")
            scope = self._hook("Scope", scope_tok)
            ref = self.node_ref()
            fold_from = fold_to = None
            end = ref.span[1]
            if self.at_keyword("from"):
                self.next()
                fold_from = self.next().text
                self.expect("to")
                to_tok = self.next()
                fold_to = to_tok.text
                end = to_tok.end
            return DefineScope(scope, ref, fold_from, fold_to, span=(start.start, end))
        te = self.type_expr()
        ref = self.node_ref()
        callback = None
        end = ref.span[1]
        if self.at_keyword("then"):
            self.next()
            cb_tok = self.expect_ident("callback")
            callback = self._hook("Callback", cb_tok)
            end = cb_tok.end
        return Define(te, ref, callback, span=(start.start, end))

    def _infer(self) -> Statement:
        start = self.expect("infer")
        sig = self.sig_expr()
        ref = self.node_ref()
        expected = None
        with_args: list[TypeExpr] = []
        end = ref.span[1]
        if self.peek() is not None and self.peek().kind == "arrow":
            self.next()
            expected = self.type_expr()
            end = _expr_end(expected)
        if self.at_keyword("with"):
            self.next()
            with_args.append(self.type_expr())
            while self.peek() is not None and self.peek().text == ",":
                self.next()
                with_args.append(self.type_expr())
            end = _expr_end(with_args[-1])
        return Infer(sig, ref, expected, tuple(with_args), span=(start.start, end))

    def _check(self) -> Statement:
        start = self.expect("check")
        ref = self.node_ref()
        self.expect(":")
        found = self.type_expr()
        var_tok = self.next()
        try:
            variance = Variance(var_tok.text)
        except ValueError:
            raise ParseError(
                f"expected a variance keyword, found {var_tok.text!r}", var_tok.start
            ) from None
        expected = self.type_expr()
        return Check(ref, found, variance, expected, span=(start.start, _expr_end(expected)))

    def _use(self) -> Statement:
        start = self.expect("use")
        ref = self.node_ref()
        te = self.type_expr()
        return Use(ref, te, span=(start.start, _expr_end(te)))

    def _run(self) -> Statement:
        start = self.expect("run")
        self.expect("[")
        pri_tok = self.expect_ident("priority")
        self.expect("]")
        refs = [self.node_ref()]
        while self.peek() is not None and self.peek().kind in ("ref", "label"):
            refs.append(self.node_ref())
        callback = None
        end = refs[-1].span[1]
        if self.at_keyword("then"):
            self.next()
            cb_tok = self.expect_ident("callback")
            callback = self._hook("Callback", cb_tok)
            end = cb_tok.end
        return Run(pri_tok.text, tuple(refs), callback, span=(start.start, end))

    def _enter_exit(self) -> Statement:
        start = self.next()
        scope_tok = self.expect_ident("scope")
        scope = self._hook("Scope", scope_tok)
        span = (start.start, scope_tok.end)
        return Enter(scope, span) if start.text == "enter" else Exit(scope, span)

    def _try(self) -> Statement:
        start = self.expect("try")
        self.expect("{")
        body: list[Statement] = []
        while self.peek() is not None and self.peek().text != "}":
            body.append(self.statement())
        end_tok = self.expect("}")
        exception = None
        handler: list[Statement] | None = None
        if self.at_keyword("on"):
            self.next()
            exc_tok = self.expect_ident("exception")
            exception = self._hook("Exception", exc_tok)
            self.expect("{")
            handler = []
            while self.peek() is not None and self.peek().text != "}":
                handler.append(self.statement())
            end_tok = self.expect("}")
        return Try(
            tuple(body),
            exception,
            tuple(handler) if handler is not None else None,
            span=(start.start, end_tok.end),
        )

    def _init(self) -> Statement:
        start = self.expect("init")
        scope_tok = self.expect_ident("scope")
        scope = self._hook("Scope", scope_tok)
        return Init(scope, span=(start.start, scope_tok.end))


def _expr_end(expr: TypeExpr | NamedSignature) -> int:
    return expr.span[1]


def parse_program(source: str, variant) -> TypelangProgram:
    """Parse Typelang source, resolving every hook against ``variant``.

    ``variant`` needs a ``has(kind, name) -> bool`` method (a
    VariantGrammar). Raises ParseError on malformed input and UnknownHook
    when an identifier matches no feature box; never returns a
    partially-resolved AST.
    """

    def resolve(kind: str, name: str, offset: int) -> None:
        if not variant.has(kind, name):
            raise UnknownHook(kind, name, offset)

    return _Parser(source, resolve).program()


def collect_hooks(source: str) -> set[tuple[str, str]]:
    """Return every (kind, name) hook reference in the source.

    Hook kinds are determined by syntactic position, so no variant is
    needed; this backs the collection phase that runs before assembly.
    """
    hooks: set[tuple[str, str]] = set()

    def sink(kind: str, name: str, offset: int) -> None:
        hooks.add((kind, name))

    _Parser(source, sink).program()
    return hooks


# ---------------------------------------------------------------------------
# Printer

def print_program(program: TypelangProgram) -> str:
    """Render a canonical textual form; parses back to an equal AST."""
    lines: list[str] = []
    for stmt in program.statements:
        lines.extend(_print_statement(stmt, 0))
    return "\n".join(lines) + ("\n" if lines else "")


def _print_statement(stmt: Statement, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(stmt, Define):
        text = f"define {stmt.type_expr} {stmt.ref}"
        if stmt.callback:
            text += f" then {stmt.callback}"
        return [pad + text]
    if isinstance(stmt, DefineScope):
        text = f"define scope {stmt.scope} {stmt.ref}"
        if stmt.fold_from is not None:
            text += f" from {stmt.fold_from} to {stmt.fold_to}"
        return [pad + text]
    if isinstance(stmt, Infer):
        text = f"infer {stmt.sig} {stmt.ref}"
        if stmt.expected is not None:
            text += f" => {stmt.expected}"
        if stmt.with_args:
            text += " with " + ", ".join(str(a) for a in stmt.with_args)
        return [pad + text]
    if isinstance(stmt, Check):
        return [
            pad
            + f"check {stmt.ref} : {stmt.found} {stmt.variance.value} {stmt.expected}"
        ]
    if isinstance(stmt, Use):
        return [pad + f"use {stmt.ref} {stmt.type_expr}"]
    if isinstance(stmt, Run):
        text = f"run [{stmt.priority}] " + " ".join(str(r) for r in stmt.refs)
        if stmt.callback:
            text += f" then {stmt.callback}"
        return [pad + text]
    if isinstance(stmt, Enter):
        return [pad + f"enter {stmt.scope}"]
    if isinstance(stmt, Exit):
        return [pad + f"exit {stmt.scope}"]
    if isinstance(stmt, Init):
        return [pad + f"init {stmt.scope}"]
    if isinstance(stmt, Try):
        lines = [pad + "try {"]
        for inner in stmt.body:
            lines.extend(_print_statement(inner, indent + 1))
        if stmt.exception is not None:
            lines.append(pad + f"}} on {stmt.exception} {{")
            for inner in stmt.handler or ():
                lines.extend(_print_statement(inner, indent + 1))
        lines.append(pad + "}")
        return lines
    raise TypeError(f"unknown statement {stmt!r}")


def iter_node_refs(program: TypelangProgram) -> Iterator[NodeRef]:
    """Yield every NodeRef in the program, including nested ones."""

    def from_expr(expr) -> Iterator[NodeRef]:
        if isinstance(expr, TypeOf):
            yield expr.ref

    def walk(stmts: Sequence[Statement]) -> Iterator[NodeRef]:
        for stmt in stmts:
            if isinstance(stmt, Define):
                yield from from_expr(stmt.type_expr)
                yield stmt.ref
            elif isinstance(stmt, DefineScope):
                yield stmt.ref
            elif isinstance(stmt, Infer):
                yield from from_expr(stmt.sig)
                yield stmt.ref
                if stmt.expected is not None:
                    yield from from_expr(stmt.expected)
                for arg in stmt.with_args:
                    yield from from_expr(arg)
            elif isinstance(stmt, Check):
                yield stmt.ref
                yield from from_expr(stmt.found)
                yield from from_expr(stmt.expected)
            elif isinstance(stmt, Use):
                yield stmt.ref
                yield from from_expr(stmt.type_expr)
            elif isinstance(stmt, Run):
                yield from stmt.refs
            elif isinstance(stmt, Try):
                yield from walk(stmt.body)
                if stmt.handler is not None:
                    yield from walk(stmt.handler)

    yield from walk(program.statements)
