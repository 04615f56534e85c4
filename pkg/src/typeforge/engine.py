"""Execution of Typelang statements over typing environments.

Bindings, inference, variance checking, the scope stack, and error
signaling all live here. Role execution returns a list of effects (env
mutations, scheduled tasks, scope transitions, emitted diagnostics) so
callers and tests can observe exactly what a role did.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from . import typelang
from .features import KIND_SIGNATURE, SignatureShape, VariantGrammar
from .symbol_graph import EDGE_REFERENCE
from .syntax import NodeRefError, SyntaxNode, node_at_ref
from .typelang import NodeRef, Statement, TypelangProgram, TypeOf, Variance

IDENTIFIER_KIND = "identifier"

ENTRY_DEFINITION = "definition"
ENTRY_REFERENCE = "reference"


@dataclass(frozen=True)
class TypeValue:
    """A constructed type; nullary constructors have no args."""

    name: str
    args: tuple["TypeValue", ...] = ()

    def __str__(self) -> str:
        if not self.args:
            return self.name
        return f"{self.name}({', '.join(str(a) for a in self.args)})"


# ---------------------------------------------------------------------------
# Errors raised while executing statements. Each carries the tag a Typelang
# `on <exception>` clause matches against; uncaught ones become diagnostics
# at the compilation helper.

class TypelangRuntimeError(Exception):
    tag = "RuntimeError"


class InferenceException(TypelangRuntimeError):
    tag = "InferenceException"


class UnificationError(TypelangRuntimeError):
    tag = "UnificationError"


class TypeMismatchError(TypelangRuntimeError):
    tag = "TypeMismatch"

    def __init__(self, found: TypeValue, expected: TypeValue, variance: Variance) -> None:
        super().__init__(
            f"type {found} is not {variance.value} with {expected}"
        )
        self.found = found
        self.expected = expected
        self.variance = variance


class DuplicateDefinition(TypelangRuntimeError):
    tag = "DuplicateDefinition"

    def __init__(self, name: str, prior_location: tuple[str, int]) -> None:
        super().__init__(
            f"{name!r} is already defined at {prior_location[0]}:{prior_location[1]}"
        )
        self.name = name
        self.prior_location = prior_location


class NotFoundError(TypelangRuntimeError):
    tag = "NotFound"

    def __init__(self, name: str) -> None:
        super().__init__(f"{name!r} is not bound in any enclosing scope")
        self.name = name


class RoleExecutionError(TypelangRuntimeError):
    tag = "RoleError"


@dataclass(frozen=True)
class ErrorEvent:
    """Diagnostic record routed through the compilation helper."""

    file: str
    range: tuple[int, int]
    severity: str
    code: str
    message: str

    def to_json(self) -> dict:
        return {
            "file": self.file,
            "range": {"startByte": self.range[0], "endByte": self.range[1]},
            "severity": self.severity,
            "code": self.code,
            "message": self.message,
        }


# ---------------------------------------------------------------------------
# Symbol table entries and environments

@dataclass
class SymbolTableEntry:
    name: str
    entry_type: TypeValue
    entry_kind: str
    file: str
    location: int
    range: tuple[int, int]
    signature_text: str = ""
    hover_text: str = ""
    scope_id: int | None = None
    node_id: int | None = None

    def __post_init__(self) -> None:
        if not self.hover_text:
            self.hover_text = f"{self.name}: {self.entry_type}"
        if not self.signature_text:
            self.signature_text = f": {self.entry_type}"

    def get_hover(self) -> str:
        return self.hover_text

    def get_signature(self) -> str:
        return self.signature_text

    def is_assignable_from(
        self, found: TypeValue, subtype_dag: Mapping[str, Sequence[str]] | None = None
    ) -> bool:
        return types_compatible(found, self.entry_type, Variance.COVARIANT, subtype_dag or {})


class TypingEnvironment:
    """Scope-local map from identifiers to definition entries."""

    def __init__(self, owner_scope_id: int | None = None) -> None:
        self.owner_scope_id = owner_scope_id
        self._entries: dict[str, SymbolTableEntry] = {}

    def define(self, entry: SymbolTableEntry) -> SymbolTableEntry:
        prior = self._entries.get(entry.name)
        if prior is not None and prior.entry_kind == ENTRY_DEFINITION:
            raise DuplicateDefinition(entry.name, (prior.file, prior.location))
        self._entries[entry.name] = entry
        return entry

    def get(self, name: str) -> SymbolTableEntry | None:
        return self._entries.get(name)

    def names(self) -> list[str]:
        return sorted(self._entries)

    def entries(self) -> list[SymbolTableEntry]:
        return list(self._entries.values())


class ScopeStack:
    """Stack of compilation-unit frames, innermost last.

    Frames are duck-typed: anything with ``id``, ``scope_name`` and ``env``
    attributes works (orchestration.CompilationUnit in production).
    """

    def __init__(self, frames: Sequence | None = None) -> None:
        self.frames: list = list(frames or [])

    def push(self, frame) -> None:
        self.frames.append(frame)

    def pop(self):
        if not self.frames:
            raise RoleExecutionError("scope stack underflow")
        return self.frames.pop()

    @property
    def top(self):
        if not self.frames:
            raise RoleExecutionError("scope stack is empty")
        return self.frames[-1]

    def depth(self) -> int:
        return len(self.frames)

    def snapshot(self) -> "ScopeStack":
        return ScopeStack(self.frames)


def define_binding(
    env: TypingEnvironment,
    name: str,
    type_value: TypeValue,
    kind: str = ENTRY_DEFINITION,
    file: str = "",
    location: int = 0,
    range_: tuple[int, int] | None = None,
) -> SymbolTableEntry:
    """Bind a name in one environment; re-defining in the same env fails."""
    entry = SymbolTableEntry(
        name=name,
        entry_type=type_value,
        entry_kind=kind,
        file=file,
        location=location,
        range=range_ if range_ is not None else (location, location + len(name)),
        scope_id=env.owner_scope_id,
    )
    return env.define(entry)


def lookup(stack: ScopeStack, name: str, helper=None) -> SymbolTableEntry:
    """Resolve a name by scanning environments innermost-outward.

    When the resolution crosses a unit boundary and a helper is given, a
    reader-to-owner dependency edge is recorded for invalidation.
    """
    frames = stack.frames
    for frame in reversed(frames):
        entry = frame.env.get(name)
        if entry is not None:
            if helper is not None and frames and frame is not frames[-1]:
                helper.record_dependency(frames[-1].id, frame.id)
            return entry
    raise NotFoundError(name)


# ---------------------------------------------------------------------------
# Variance checking

def _reaches(found: str, expected: str, dag: Mapping[str, Sequence[str]]) -> bool:
    if found == expected:
        return True
    seen = {found}
    stack = list(dag.get(found, ()))
    while stack:
        name = stack.pop()
        if name == expected:
            return True
        if name in seen:
            continue
        seen.add(name)
        stack.extend(dag.get(name, ()))
    return False


def types_compatible(
    found: TypeValue,
    expected: TypeValue,
    variance: Variance,
    subtype_dag: Mapping[str, Sequence[str]],
) -> bool:
    if variance is Variance.INVARIANT:
        return found == expected
    if variance is Variance.CONTRAVARIANT:
        return types_compatible(expected, found, Variance.COVARIANT, subtype_dag)
    # Covariance walks the declared subtype DAG on constructor names;
    # constructor arguments stay invariant.
    return found.args == expected.args and _reaches(found.name, expected.name, subtype_dag)


def check_compat(
    found: TypeValue,
    expected: TypeValue,
    variance: Variance,
    subtype_dag: Mapping[str, Sequence[str]] | None = None,
) -> None:
    if not types_compatible(found, expected, variance, subtype_dag or {}):
        raise TypeMismatchError(found, expected, variance)


# ---------------------------------------------------------------------------
# Inference

@dataclass(frozen=True)
class InferenceStrategy:
    """Named, deterministic procedure assigning types to syntax nodes."""

    name: str
    procedure: Callable[[SyntaxNode, ScopeStack, Mapping[str, SignatureShape]], TypeValue]


def default_strategy(
    literal_types: Mapping[str, TypeValue], helper=None
) -> InferenceStrategy:
    """Syntax-directed inference: literal axioms plus identifier lookup."""

    def procedure(node: SyntaxNode, stack: ScopeStack, signatures) -> TypeValue:
        if node.kind in literal_types:
            return literal_types[node.kind]
        if node.kind == IDENTIFIER_KIND:
            try:
                return lookup(stack, node.text, helper).entry_type
            except NotFoundError as exc:
                raise InferenceException(str(exc)) from exc
        raise InferenceException(f"no inference rule applies to {node.kind!r} node")

    return InferenceStrategy("syntax-directed", procedure)


def _is_type_var(name: str) -> bool:
    return len(name) == 1 and name.isupper()


def unify_signature(shape: SignatureShape, args: Sequence[TypeValue]) -> TypeValue:
    """First-order unification of argument types against a signature shape.

    Single-uppercase-letter parameter names are type variables; everything
    else must match the argument exactly.
    """
    if len(args) != len(shape.params):
        raise InferenceException(
            f"signature expects {len(shape.params)} argument types, got {len(args)}"
        )
    bindings: dict[str, TypeValue] = {}
    for param, arg in zip(shape.params, args):
        if _is_type_var(param):
            bound = bindings.setdefault(param, arg)
            if bound != arg:
                raise InferenceException(
                    f"type variable {param} bound to both {bound} and {arg}"
                )
        elif TypeValue(param) != arg:
            raise InferenceException(f"argument {arg} does not match {param}")
    if _is_type_var(shape.returns):
        if shape.returns not in bindings:
            raise InferenceException(f"return variable {shape.returns} is unbound")
        return bindings[shape.returns]
    return TypeValue(shape.returns)


def infer_type(
    node: SyntaxNode,
    stack: ScopeStack,
    strategy: InferenceStrategy,
    signatures: Mapping[str, SignatureShape],
) -> TypeValue:
    """Type of a node under a strategy; cached on the node."""
    if node.type_value is not None:
        return node.type_value  # type: ignore[return-value]
    result = strategy.procedure(node, stack, signatures)
    node.type_value = result
    return result


# ---------------------------------------------------------------------------
# Effects

@dataclass(frozen=True)
class BindingDefined:
    entry: SymbolTableEntry


@dataclass(frozen=True)
class ReferenceRecorded:
    entry: SymbolTableEntry


@dataclass(frozen=True)
class DiagnosticEmitted:
    event: ErrorEvent


@dataclass(frozen=True)
class ScopeDefined:
    scope_name: str
    unit_id: int


@dataclass(frozen=True)
class TaskScheduled:
    priority: str
    node_count: int


@dataclass(frozen=True)
class ScopeEntered:
    scope_name: str


@dataclass(frozen=True)
class ScopeExited:
    scope_name: str


@dataclass(frozen=True)
class NodeTyped:
    span: tuple[int, int]
    type_value: TypeValue


@dataclass(frozen=True)
class CallbackFired:
    name: str
    event: str


Effect = (
    BindingDefined | ReferenceRecorded | DiagnosticEmitted | ScopeDefined
    | TaskScheduled | ScopeEntered | ScopeExited | NodeTyped | CallbackFired
)


# ---------------------------------------------------------------------------
# Role execution

class _RoleRun:
    def __init__(
        self,
        node: SyntaxNode,
        stack: ScopeStack,
        helper,
        variant: VariantGrammar,
        strategy: InferenceStrategy,
    ) -> None:
        self.node = node
        self.stack = stack
        self.helper = helper
        self.variant = variant
        self.strategy = strategy
        self.effects: list[Effect] = []
        self.local_units: dict[str, object] = {}
        self.entry_depth = stack.depth()

    @property
    def signatures(self) -> dict[str, SignatureShape]:
        return {
            box.name: box.signature_shape
            for box in self.variant.boxes()
            if box.kind == KIND_SIGNATURE and box.signature_shape is not None
        }

    # -- expression evaluation

    def resolve(self, ref: NodeRef) -> SyntaxNode:
        try:
            return node_at_ref(self.node, ref)
        except NodeRefError as exc:
            raise RoleExecutionError(str(exc)) from exc

    def type_of(self, node: SyntaxNode) -> TypeValue:
        if node.type_value is not None:
            return node.type_value  # type: ignore[return-value]
        if node.kind == IDENTIFIER_KIND:
            try:
                entry = lookup(self.stack, node.text, self.helper)
            except NotFoundError as exc:
                raise InferenceException(str(exc)) from exc
            node.type_value = entry.entry_type
            return entry.entry_type
        result = self.strategy.procedure(node, self.stack, self.signatures)
        node.type_value = result
        self.helper.note_typed_node(node, result, self.variant)
        self.effects.append(NodeTyped(node.span, result))
        return result

    def eval_type_expr(self, expr: typelang.TypeExpr) -> TypeValue:
        if isinstance(expr, typelang.NamedType):
            return TypeValue(expr.name)
        if isinstance(expr, TypeOf):
            return self.type_of(self.resolve(expr.ref))
        raise RoleExecutionError(f"unknown type expression {expr!r}")

    # -- statements

    def exec_block(self, statements: Sequence[Statement]) -> None:
        for stmt in statements:
            self.exec_statement(stmt)

    def exec_statement(self, stmt: Statement) -> None:
        if isinstance(stmt, typelang.Define):
            self._define(stmt)
        elif isinstance(stmt, typelang.DefineScope):
            self._define_scope(stmt)
        elif isinstance(stmt, typelang.Infer):
            self._infer(stmt)
        elif isinstance(stmt, typelang.Check):
            self._check(stmt)
        elif isinstance(stmt, typelang.Use):
            self._use(stmt)
        elif isinstance(stmt, typelang.Run):
            self._run(stmt)
        elif isinstance(stmt, typelang.Enter):
            self._enter(stmt)
        elif isinstance(stmt, typelang.Exit):
            self._exit(stmt)
        elif isinstance(stmt, typelang.Try):
            self._try(stmt)
        elif isinstance(stmt, typelang.Init):
            self._init(stmt)
        else:
            raise RoleExecutionError(f"unknown statement {stmt!r}")

    def _define(self, stmt: typelang.Define) -> None:
        type_value = self.eval_type_expr(stmt.type_expr)
        target = self.resolve(stmt.ref)
        name = target.text or target.label
        env = self.stack.top.env
        entry = SymbolTableEntry(
            name=name,
            entry_type=type_value,
            entry_kind=ENTRY_DEFINITION,
            file=target.file,
            location=target.span[0],
            range=target.span,
            scope_id=env.owner_scope_id,
        )
        env.define(entry)
        target.type_value = type_value
        entry.node_id = self.helper.graph.add_symbol(
            name, "variable", target.file, target.span[0], target.span,
            scope_id=env.owner_scope_id,
        )
        self.helper.note_definition(entry, self.variant)
        self.effects.append(BindingDefined(entry))
        if stmt.callback is not None:
            self.helper.fire_callback(stmt.callback, "binding_created", entry)
            self.effects.append(CallbackFired(stmt.callback, "binding_created"))

    def _define_scope(self, stmt: typelang.DefineScope) -> None:
        target = self.resolve(stmt.ref)
        parent = self.stack.frames[-1] if self.stack.frames else None
        unit = self.helper.create_unit(
            scope_name=stmt.scope,
            file=target.file,
            span=target.span,
            fold_from=stmt.fold_from,
            fold_to=stmt.fold_to,
            parent=parent,
        )
        self.local_units[stmt.scope] = unit
        self.effects.append(ScopeDefined(stmt.scope, unit.id))

    def _infer(self, stmt: typelang.Infer) -> None:
        target = self.resolve(stmt.ref)
        result: TypeValue | None = None
        try:
            if isinstance(stmt.sig, TypeOf):
                result = self.type_of(self.resolve(stmt.sig.ref))
            else:
                box = self.variant.box(KIND_SIGNATURE, stmt.sig.name)
                if box is None:
                    raise RoleExecutionError(
                        f"signature {stmt.sig.name!r} is not in the variant"
                    )
                if box.signature_shape is None:
                    # Shapeless signatures resolve the node's own text in
                    # the enclosing scopes (the `identifier` feature box).
                    try:
                        entry = lookup(self.stack, target.text, self.helper)
                    except NotFoundError as exc:
                        raise InferenceException(str(exc)) from exc
                    result = entry.entry_type
                else:
                    args = [self.eval_type_expr(a) for a in stmt.with_args]
                    result = unify_signature(box.signature_shape, args)
        except InferenceException:
            if stmt.expected is None:
                raise
            result = self.eval_type_expr(stmt.expected)
        if stmt.expected is not None:
            expected = self.eval_type_expr(stmt.expected)
            if result != expected:
                raise UnificationError(
                    f"inferred {result} but the annotation requires {expected}"
                )
        target.type_value = result
        if target.kind != IDENTIFIER_KIND:
            self.helper.note_typed_node(target, result, self.variant)
        self.effects.append(NodeTyped(target.span, result))

    def _check(self, stmt: typelang.Check) -> None:
        found = self.eval_type_expr(stmt.found)
        expected = self.eval_type_expr(stmt.expected)
        check_compat(found, expected, stmt.variance, self.helper.subtype_dag)

    def _use(self, stmt: typelang.Use) -> None:
        target = self.resolve(stmt.ref)
        name = target.text or target.label
        type_value = self.eval_type_expr(stmt.type_expr)
        try:
            definition = lookup(self.stack, name, self.helper)
        except NotFoundError as exc:
            raise InferenceException(str(exc)) from exc
        entry = SymbolTableEntry(
            name=name,
            entry_type=type_value,
            entry_kind=ENTRY_REFERENCE,
            file=target.file,
            location=target.span[0],
            range=target.span,
            scope_id=self.stack.top.env.owner_scope_id,
        )
        entry.node_id = self.helper.graph.add_symbol(
            name, "variable", target.file, target.span[0], target.span,
            scope_id=entry.scope_id,
        )
        if definition.node_id is not None:
            self.helper.graph.add_dependency(
                entry.node_id, definition.node_id, EDGE_REFERENCE
            )
        self.helper.note_reference(entry, self.variant)
        self.effects.append(ReferenceRecorded(entry))

    def _run(self, stmt: typelang.Run) -> None:
        nodes = [self.resolve(ref) for ref in stmt.refs]
        self.helper.schedule_subtree_task(
            priority=stmt.priority,
            nodes=nodes,
            stack=self.stack.snapshot(),
            unit=self.stack.top if self.stack.frames else None,
            callback=stmt.callback,
        )
        self.effects.append(TaskScheduled(stmt.priority, len(nodes)))

    def _enter(self, stmt: typelang.Enter) -> None:
        unit = self.local_units.get(stmt.scope)
        if unit is None:
            raise RoleExecutionError(
                f"enter {stmt.scope}: scope was not defined in this role"
            )
        self.stack.push(unit)
        self.helper.notify_scope_entered(unit)
        self.effects.append(ScopeEntered(stmt.scope))

    def _exit(self, stmt: typelang.Exit) -> None:
        if self.stack.depth() <= self.entry_depth:
            raise RoleExecutionError(
                f"exit {stmt.scope}: scope was not entered by this role"
            )
        top = self.stack.top
        if getattr(top, "scope_name", None) != stmt.scope:
            raise RoleExecutionError(
                f"exit {stmt.scope}: innermost scope is {top.scope_name!r}"
            )
        self.stack.pop()
        self.effects.append(ScopeExited(stmt.scope))

    def _try(self, stmt: typelang.Try) -> None:
        try:
            self.exec_block(stmt.body)
        except TypelangRuntimeError as exc:
            if stmt.exception is not None and exc.tag == stmt.exception:
                self.exec_block(stmt.handler or ())
            else:
                raise

    def _init(self, stmt: typelang.Init) -> None:
        rank = self.helper.priorities.rank(stmt.scope)
        if rank != 0:
            raise RoleExecutionError(
                f"init {stmt.scope}: the root scope must have the highest "
                f"priority (rank 0), found rank {rank}"
            )
        unit = self.local_units.get(stmt.scope)
        if unit is None:
            raise RoleExecutionError(
                f"init {stmt.scope}: scope was not defined in this role"
            )
        self.helper.pin_root_unit(unit)


def execute_role(
    program: TypelangProgram,
    node: SyntaxNode,
    stack: ScopeStack,
    helper,
    variant: VariantGrammar,
    strategy: InferenceStrategy,
) -> list[Effect]:
    """Run a role's statements in order against one syntax node.

    A runtime error not caught by a ``try``/``on`` block aborts the rest of
    the role, is routed to the compilation helper, and surfaces as a
    DiagnosticEmitted effect anchored at the node's span.
    """
    run = _RoleRun(node, stack, helper, variant, strategy)
    try:
        run.exec_block(program.statements)
        if stack.depth() != run.entry_depth:
            raise RoleExecutionError(
                "unbalanced enter/exit: role changed the scope stack depth"
            )
    except TypelangRuntimeError as exc:
        del stack.frames[run.entry_depth:]
        event = ErrorEvent(
            file=node.file,
            range=node.span,
            severity="error",
            code=exc.tag,
            message=str(exc),
        )
        helper.report_error(event)
        run.effects.append(DiagnosticEmitted(event))
    return run.effects
