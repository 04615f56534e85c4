"""Composed languages and the per-file checking pipeline.

A composed language binds artifacts, their assembled variants and compiled
roles, a parser, and a priority order. The runtime walks parse trees,
executes roles, and drains the task queue; structural roles (those that
define scopes or schedule work) control descent into their subtrees, while
plain check/infer roles run in post-order so children are typed first.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

from . import features as ft
from . import typelang
from .engine import (
    Effect,
    ErrorEvent,
    InferenceStrategy,
    ScopeStack,
    SymbolTableEntry,
    TypeValue,
    default_strategy,
    execute_role,
)
from .orchestration import BATCH, SERVER, CompilationHelper, ExecutionTrace, PriorityOrder
from .positions import LineIndex
from .symbol_graph import NoDefinition, SymbolNode, UnknownNode
from .syntax import SyntaxNode
from .typelang import ParseError, TypelangProgram

Parser = Callable[[str, str], SyntaxNode]

STRUCTURAL_STATEMENTS = (
    typelang.DefineScope,
    typelang.Run,
    typelang.Init,
    typelang.Enter,
    typelang.Exit,
)


@dataclass(frozen=True)
class LanguageCapabilities:
    """Union of the capabilities declared by a language's feature boxes."""

    token_types: tuple[str, ...] = ()
    document_symbol: bool = False
    inlay_hint: bool = False
    hover: bool = False
    folding_range: bool = False
    definition: bool = False
    references: bool = False
    completion: bool = False

    def any(self) -> bool:
        return bool(
            self.token_types
            or self.document_symbol
            or self.inlay_hint
            or self.hover
            or self.folding_range
            or self.definition
            or self.references
            or self.completion
        )


class ComposedLanguage:
    def __init__(
        self,
        name: str,
        artifacts: Sequence[ft.Artifact],
        registry: ft.FeatureRegistry,
        priorities: PriorityOrder,
        parser: Parser,
        literal_types: Mapping[str, TypeValue] | None = None,
        file_ext: str = "txt",
        global_contexts: Sequence[str] = ("scope_index", "symbol_graph"),
        lsp_role_names: Sequence[str] = ("check-infer",),
    ) -> None:
        self.name = name
        self.artifacts = {a.id: a for a in artifacts}
        self.registry = registry
        self.priorities = priorities
        self.parser = parser
        self.literal_types = dict(literal_types or {})
        self.file_ext = file_ext.lstrip(".")
        self.global_contexts = tuple(global_contexts)
        self.lsp_role_names = tuple(lsp_role_names)
        self.compiled: dict[str, dict[str, TypelangProgram]] = {}

    def compiled_pairs(self) -> list[tuple[ft.Artifact, dict[str, TypelangProgram]]]:
        return [(a, self.compiled[a.id]) for a in self.artifacts.values()]

    def role_for(self, artifact_id: str | None) -> TypelangProgram | None:
        if artifact_id is None or artifact_id not in self.compiled:
            return None
        roles = self.compiled[artifact_id]
        for role_name in self.lsp_role_names:
            if role_name in roles:
                return roles[role_name]
        return None

    def capabilities(self) -> LanguageCapabilities:
        tokens: set[str] = set()
        flags = {
            "document_symbol": False, "inlay_hint": False, "hover": False,
            "folding_range": False, "definition": False, "references": False,
            "completion": False,
        }
        for artifact in self.artifacts.values():
            if artifact.variant is None:
                continue
            for box in artifact.variant.boxes():
                caps = box.capabilities
                if caps.semantic_token:
                    tokens.add(caps.semantic_token)
                for flag in flags:
                    if getattr(caps, flag):
                        flags[flag] = True
        return LanguageCapabilities(token_types=tuple(sorted(tokens)), **flags)

    def validate(self) -> ft.IntegrationReport:
        return ft.validate_integration(self.compiled_pairs(), self.global_contexts)


def compose_language(
    name: str,
    artifacts: Sequence[ft.Artifact],
    registry: ft.FeatureRegistry,
    priorities: Sequence[str],
    parser: Parser,
    literal_types: Mapping[str, TypeValue] | None = None,
    file_ext: str = "txt",
    global_contexts: Sequence[str] = ("scope_index", "symbol_graph"),
) -> ComposedLanguage:
    """Collect, assemble, bind, and compile every artifact of a language.

    Fails with MissingFeatureBox (a parse error) when any role references an
    unregistered hook, naming every missing (kind, name) pair.
    """
    language = ComposedLanguage(
        name, artifacts, registry, PriorityOrder(priorities), parser,
        literal_types, file_ext, global_contexts,
    )
    for artifact in artifacts:
        feature_set = ft.collect(artifact, registry)
        variant = ft.assemble_variant(feature_set, registry, artifact.id)
        artifact.bind_variant(variant)
        language.compiled[artifact.id] = ft.compile_roles(artifact, variant)
    return language


@dataclass
class FileCheckResult:
    file: str
    diagnostics: list[ErrorEvent] = field(default_factory=list)
    effects: list[Effect] = field(default_factory=list)
    trace: ExecutionTrace | None = None
    root: SyntaxNode | None = None

    @property
    def ok(self) -> bool:
        return not any(d.severity == "error" for d in self.diagnostics)


class LanguageRuntime:
    """Per-process runtime: one compilation helper plus per-file records."""

    def __init__(self, language: ComposedLanguage, mode: str = BATCH) -> None:
        self.language = language
        self.helper = CompilationHelper(language.priorities, language.registry, mode)
        self.helper.node_processor = self._process_nodes
        self.strategy = default_strategy(language.literal_types, self.helper)
        self.line_indexes: dict[str, LineIndex] = {}
        self._current_effects: list[Effect] = []
        self._captured: list[ErrorEvent] = []
        self._prior_sink = None

    # -- checking

    def check_file(self, file: str, text: str) -> FileCheckResult:
        result = FileCheckResult(file)
        self.helper.clear_file(file)
        self.line_indexes[file] = LineIndex(text)
        self._current_effects = []
        self._captured = []
        sink = self.helper.diagnostics_sink

        def capture(event: ErrorEvent) -> None:
            self._captured.append(event)
            if sink is not None:
                sink(event)

        before = len(self.helper.batch_events)
        self.helper.diagnostics_sink = capture
        try:
            try:
                root = self.language.parser(text, file)
            except ParseError as exc:
                event = ErrorEvent(
                    file, (exc.offset, exc.offset), "error", "ParseError", exc.message
                )
                self.helper.report_error(event)
                result.diagnostics = self._drain_events(before)
                return result
            result.root = root
            self._process_nodes([root], ScopeStack())
            result.trace = self.helper.run_all()
        finally:
            self.helper.diagnostics_sink = sink
        result.effects = list(self._current_effects)
        result.diagnostics = self._drain_events(before)
        return result

    def _drain_events(self, batch_before: int) -> list[ErrorEvent]:
        if self.helper.mode == SERVER:
            return list(self._captured)
        return list(self.helper.batch_events[batch_before:])

    def _process_nodes(self, nodes: Sequence[SyntaxNode], stack: ScopeStack) -> None:
        for node in nodes:
            self._process(node, stack)

    def _process(self, node: SyntaxNode, stack: ScopeStack) -> None:
        role = self.language.role_for(node.artifact_id)
        if role is None:
            for child in node.children:
                self._process(child, stack)
            return
        artifact = self.language.artifacts[node.artifact_id]
        if _is_structural(role):
            # Scope-shaped roles own their subtree: they define units and
            # defer children through the task queue.
            self._execute(role, node, stack, artifact)
            return
        for child in node.children:
            self._process(child, stack)
        self._execute(role, node, stack, artifact)

    def _execute(
        self,
        role: TypelangProgram,
        node: SyntaxNode,
        stack: ScopeStack,
        artifact: ft.Artifact,
    ) -> None:
        strategy = self._effective_strategy(stack)
        effects = execute_role(role, node, stack, self.helper, artifact.variant, strategy)
        self._current_effects.extend(effects)

    def _effective_strategy(self, stack: ScopeStack) -> InferenceStrategy:
        if stack.frames:
            unit_strategy = getattr(stack.top, "strategy", None)
            if unit_strategy is not None:
                return unit_strategy
        return self.strategy

    # -- queries backing the language server

    def line_index(self, file: str) -> LineIndex | None:
        return self.line_indexes.get(file)

    def _entries_at(self, file: str, offset: int) -> list[SymbolTableEntry]:
        found = []
        for entry in self.helper.definitions.get(file, []) + self.helper.references.get(file, []):
            if entry.range[0] <= offset < entry.range[1]:
                found.append(entry)
        return found

    def _type_box(self, type_value: TypeValue) -> ft.FeatureBox | None:
        return self.language.registry.get(ft.KIND_TYPE, type_value.name)

    def hover_at(self, file: str, offset: int) -> str | None:
        for entry in self._entries_at(file, offset):
            box = self._type_box(entry.entry_type)
            if box is not None and box.capabilities.hover:
                return entry.get_hover()
        return None

    def document_symbols(self, file: str) -> list[SymbolTableEntry]:
        symbols = []
        for entry in self.helper.definitions.get(file, []):
            box = self._type_box(entry.entry_type)
            if box is not None and box.capabilities.document_symbol:
                symbols.append(entry)
        symbols.sort(key=lambda e: e.range[0])
        return symbols

    def inlay_hints(self, file: str, span: tuple[int, int] | None = None) -> list[tuple[int, str]]:
        hints = [
            (position, label)
            for position, label in self.helper.inlays.get(file, {})
            if span is None or span[0] <= position <= span[1]
        ]
        hints.sort()
        return hints

    def folding_ranges(self, file: str) -> list[tuple[int, int]]:
        index = self.line_indexes.get(file)
        if index is None:
            return []
        return self.helper.scope_index.folding_ranges(file, index)

    def definition_at(self, file: str, offset: int) -> SymbolNode | None:
        for entry in self._entries_at(file, offset):
            if entry.node_id is None:
                continue
            if entry.entry_kind == "definition":
                return self.helper.graph.node(entry.node_id)
            try:
                return self.helper.graph.go_to_definition(entry.node_id)
            except (NoDefinition, UnknownNode):
                continue
        return None

    def references_at(
        self, file: str, offset: int, include_declaration: bool = False
    ) -> list[SymbolNode]:
        definition = self.definition_at(file, offset)
        if definition is None:
            return []
        refs = self.helper.graph.find_references(definition.id)
        if include_declaration:
            refs = [definition] + refs
        return refs

    def semantic_tokens(self, file: str) -> list[tuple[tuple[int, int], str]]:
        return sorted(self.helper.tokens.get(file, {}), key=lambda t: t[0])

    def completions_at(self, file: str, offset: int) -> list[str]:
        for entry in self._entries_at(file, offset):
            if entry.node_id is not None:
                return self.helper.graph.completions_at(entry.node_id)
        return []


def _is_structural(role: TypelangProgram) -> bool:
    def walk(statements) -> bool:
        for stmt in statements:
            if isinstance(stmt, STRUCTURAL_STATEMENTS):
                return True
            if isinstance(stmt, typelang.Try):
                if walk(stmt.body) or walk(stmt.handler or ()):
                    return True
        return False

    return walk(role.statements)
