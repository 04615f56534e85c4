"""Compilation units, prioritized tasks, the min-heap executor, and the
compilation helper binding executor, indexes, and error routing.

Priorities form an exogenous total order declared up front; the executor
drains a min-heap keyed by priority rank with FIFO order inside a rank.
Tasks enqueued during execution are honored. Errors raised by tasks are
routed to the helper and never escape run_all.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Sequence

from .engine import (
    ErrorEvent,
    InferenceStrategy,
    SymbolTableEntry,
    TypingEnvironment,
    TypeValue,
)
from .features import (
    FeatureRegistry,
    KIND_SIGNATURE,
    KIND_TYPE,
    VariantGrammar,
)
from .scope_index import FenwickScopeIndex
from .symbol_graph import SymbolGraph
from .syntax import SyntaxNode

BATCH = "batch"
SERVER = "server"


class UnknownPriority(Exception):
    def __init__(self, priority: str, order: Sequence[str]) -> None:
        super().__init__(f"priority {priority!r} is not in the declared order {list(order)}")
        self.priority = priority


class UnknownUnit(Exception):
    pass


class PriorityOrder:
    """Exogenous total order over priority identifiers."""

    def __init__(self, names: Sequence[str]) -> None:
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate priorities in {list(names)}")
        self.names = tuple(names)
        self._rank = {name: i for i, name in enumerate(names)}

    def rank(self, name: str) -> int:
        try:
            return self._rank[name]
        except KeyError:
            raise UnknownPriority(name, self.names) from None

    def __contains__(self, name: str) -> bool:
        return name in self._rank

    def __iter__(self):
        return iter(self.names)


class CompilationUnit:
    """A scope's unit of typing work; the unit tree mirrors scope nesting."""

    def __init__(
        self,
        unit_id: int,
        scope_name: str,
        file: str = "",
        parent: "CompilationUnit | None" = None,
        strategy: InferenceStrategy | None = None,
        interval_id: int | None = None,
    ) -> None:
        self.id = unit_id
        self.scope_name = scope_name
        self.file = file
        self.parent = parent
        self.strategy = strategy
        self.interval_id = interval_id
        self.env = TypingEnvironment(owner_scope_id=unit_id)
        self.task: "CompilationUnitTask | None" = None


@dataclass
class CompilationUnitTask:
    """A prioritized procedure with mutable access to the helper's state."""

    task_id: int
    priority: str
    procedure: Callable[["CompilationHelper"], None]
    unit_id: int | None = None
    callback: str | None = None
    description: str = ""


@dataclass(frozen=True)
class TraceRow:
    seq: int
    task_id: int
    priority: str
    unit: int | None
    outcome: str


class ExecutionTrace:
    def __init__(self) -> None:
        self.rows: list[TraceRow] = []

    def append(self, row: TraceRow) -> None:
        self.rows.append(row)

    def priorities(self) -> list[str]:
        return [row.priority for row in self.rows]

    def to_json_lines(self) -> str:
        return "\n".join(
            json.dumps(
                {
                    "seq": row.seq,
                    "taskId": row.task_id,
                    "priority": row.priority,
                    "unit": row.unit,
                    "outcome": row.outcome,
                }
            )
            for row in self.rows
        )

    def __len__(self) -> int:
        return len(self.rows)


class InstrumentedHeap:
    """Binary min-heap that counts the levels each operation touches."""

    def __init__(self) -> None:
        self._items: list[tuple[int, int, CompilationUnitTask]] = []
        self.last_op_levels = 0
        self.max_op_levels = 0

    def __len__(self) -> int:
        return len(self._items)

    def _note(self, levels: int) -> None:
        self.last_op_levels = levels
        self.max_op_levels = max(self.max_op_levels, levels)

    def push(self, rank: int, seq: int, task: CompilationUnitTask) -> None:
        items = self._items
        items.append((rank, seq, task))
        i = len(items) - 1
        levels = 1
        while i > 0:
            parent = (i - 1) // 2
            if items[parent][:2] <= items[i][:2]:
                break
            items[parent], items[i] = items[i], items[parent]
            i = parent
            levels += 1
        self._note(levels)

    def pop(self) -> CompilationUnitTask:
        items = self._items
        if not items:
            raise IndexError("pop from empty heap")
        top = items[0]
        last = items.pop()
        levels = 1
        if items:
            items[0] = last
            i = 0
            while True:
                left, right = 2 * i + 1, 2 * i + 2
                smallest = i
                if left < len(items) and items[left][:2] < items[smallest][:2]:
                    smallest = left
                if right < len(items) and items[right][:2] < items[smallest][:2]:
                    smallest = right
                if smallest == i:
                    break
                items[i], items[smallest] = items[smallest], items[i]
                i = smallest
                levels += 1
        self._note(levels)
        return top[2]


class CompilationHelper:
    """Centralized binder for units, executor, indexes, and error routing.

    Exactly one helper exists per language instance. Every error event is
    classified exactly once: batch mode collects events for a final report
    with nonzero exit, server mode converts each to a diagnostic through
    ``diagnostics_sink`` and keeps the process alive.
    """

    def __init__(
        self,
        priorities: PriorityOrder,
        registry: FeatureRegistry | None = None,
        mode: str = BATCH,
    ) -> None:
        self.priorities = priorities
        self.registry = registry
        self.mode = mode
        self.scope_index = FenwickScopeIndex()
        self.graph = SymbolGraph()
        self.subtype_dag = registry.subtype_dag() if registry is not None else {}
        self.units: dict[int, CompilationUnit] = {}
        self.root_unit: CompilationUnit | None = None
        self.dependencies: set[tuple[int, int]] = set()
        self.batch_events: list[ErrorEvent] = []
        self.diagnostics_sink: Callable[[ErrorEvent], None] | None = None
        self.node_processor: Callable[[list[SyntaxNode], object], None] | None = None
        self.callbacks: dict[str, Callable] = {}
        self.scope_listeners: list[Callable] = []
        self.definitions: dict[str, list[SymbolTableEntry]] = {}
        self.references: dict[str, list[SymbolTableEntry]] = {}
        # Ordered sets: re-executed tasks must not duplicate records.
        self.tokens: dict[str, dict[tuple[tuple[int, int], str], None]] = {}
        self.inlays: dict[str, dict[tuple[int, str], None]] = {}
        self._seen_entries: dict[str, set[tuple]] = {}
        self._heap = InstrumentedHeap()
        self._routed: set[int] = set()
        self._next_unit = 1
        self._next_task = 1
        self._next_seq = 0

    # -- units

    def create_unit(
        self,
        scope_name: str,
        file: str = "",
        span: tuple[int, int] | None = None,
        fold_from: str | None = None,
        fold_to: str | None = None,
        parent: CompilationUnit | None = None,
        strategy: InferenceStrategy | None = None,
    ) -> CompilationUnit:
        interval_id = None
        if span is not None:
            interval_id = self.scope_index.insert_scope(
                file, span[0], span[1], fold_from, fold_to, name=scope_name
            )
        unit = CompilationUnit(
            self._next_unit, scope_name, file, parent, strategy, interval_id
        )
        self._next_unit += 1
        self.units[unit.id] = unit
        return unit

    def pin_root_unit(self, unit: CompilationUnit) -> None:
        self.root_unit = unit

    def children_of(self, unit_id: int) -> list[CompilationUnit]:
        return [
            u for u in self.units.values()
            if u.parent is not None and u.parent.id == unit_id
        ]

    def record_dependency(self, reader_unit_id: int, owner_unit_id: int) -> None:
        if reader_unit_id != owner_unit_id:
            self.dependencies.add((reader_unit_id, owner_unit_id))

    # -- scheduling and execution

    def make_task(
        self,
        priority: str,
        procedure: Callable[["CompilationHelper"], None],
        unit: CompilationUnit | None = None,
        callback: str | None = None,
        description: str = "",
    ) -> CompilationUnitTask:
        task = CompilationUnitTask(
            self._next_task, priority, procedure,
            unit.id if unit is not None else None, callback, description,
        )
        self._next_task += 1
        if unit is not None:
            unit.task = task
        return task

    def schedule(self, task: CompilationUnitTask) -> None:
        rank = self.priorities.rank(task.priority)
        self._heap.push(rank, self._next_seq, task)
        self._next_seq += 1

    def schedule_subtree_task(
        self,
        priority: str,
        nodes: list[SyntaxNode],
        stack,
        unit: CompilationUnit | None = None,
        callback: str | None = None,
    ) -> CompilationUnitTask:
        def procedure(helper: "CompilationHelper") -> None:
            if helper.node_processor is None:
                raise RuntimeError("no node processor installed")
            helper.node_processor(nodes, stack.snapshot())

        task = self.make_task(
            priority, procedure, unit, callback,
            description=f"process {len(nodes)} subtree(s)",
        )
        self.schedule(task)
        return task

    def run_all(self) -> ExecutionTrace:
        """Drain the queue in priority order; errors never escape."""
        trace = ExecutionTrace()
        while len(self._heap):
            task = self._heap.pop()
            outcome = "ok"
            try:
                task.procedure(self)
            except Exception as exc:  # routed, not raised past run_all
                outcome = "error"
                self.report_error(
                    ErrorEvent(
                        file="",
                        range=(0, 0),
                        severity="error",
                        code=type(exc).__name__,
                        message=str(exc),
                    )
                )
            else:
                if task.callback is not None:
                    self.fire_callback(task.callback, "inference_completed", task)
            trace.append(
                TraceRow(len(trace.rows), task.task_id, task.priority, task.unit_id, outcome)
            )
        return trace

    @property
    def heap(self) -> InstrumentedHeap:
        return self._heap

    def invalidate(self, unit_id: int) -> set[int]:
        """Re-enqueue the unit, its descendants, and registered dependents.

        Returns the closed set of unit ids whose tasks were re-enqueued;
        the closure is the fixpoint over tree descent and reader edges.
        """
        if unit_id not in self.units:
            raise UnknownUnit(f"no compilation unit {unit_id}")
        closure = {unit_id}
        frontier = [unit_id]
        while frontier:
            current = frontier.pop()
            for child in self.children_of(current):
                if child.id not in closure:
                    closure.add(child.id)
                    frontier.append(child.id)
            for reader, owner in self.dependencies:
                if owner == current and reader not in closure:
                    closure.add(reader)
                    frontier.append(reader)
        for uid in sorted(closure):
            task = self.units[uid].task
            if task is not None:
                self.schedule(task)
        return closure

    # -- error routing

    def report_error(self, event: ErrorEvent) -> bool:
        """Route an event exactly once; duplicates (by identity) are dropped."""
        if id(event) in self._routed:
            return False
        self._routed.add(id(event))
        if self.mode == SERVER and self.diagnostics_sink is not None:
            self.diagnostics_sink(event)
        else:
            self.batch_events.append(event)
        return True

    # -- callbacks
    # The firing events are exactly: binding_created (define ... then),
    # inference_completed (run ... then, after the task), and
    # scope_entered (broadcast to registered scope listeners).

    def register_callback(self, name: str, fn: Callable) -> None:
        self.callbacks[name] = fn

    def fire_callback(self, name: str, event_name: str, payload) -> bool:
        fn = self.callbacks.get(name)
        if fn is None:
            return False
        fn(event_name, payload)
        return True

    def register_scope_listener(self, fn: Callable) -> None:
        self.scope_listeners.append(fn)

    def notify_scope_entered(self, unit: CompilationUnit) -> None:
        for listener in self.scope_listeners:
            listener("scope_entered", unit)

    # -- LSP data recording (driven by the executing variant's boxes)

    def _remember_entry(self, entry: SymbolTableEntry) -> bool:
        key = (entry.name, entry.entry_kind, entry.range, str(entry.entry_type))
        seen = self._seen_entries.setdefault(entry.file, set())
        if key in seen:
            return False
        seen.add(key)
        return True

    def note_definition(self, entry: SymbolTableEntry, variant: VariantGrammar) -> None:
        if not self._remember_entry(entry):
            return
        self.definitions.setdefault(entry.file, []).append(entry)
        token = self._identifier_token_type(variant)
        if token is not None:
            self.tokens.setdefault(entry.file, {})[(entry.range, token)] = None
        if any(
            box.capabilities.inlay_hint
            for box in variant.boxes()
            if box.kind == KIND_SIGNATURE
        ):
            self.inlays.setdefault(entry.file, {})[
                (entry.range[1], entry.signature_text)
            ] = None

    def note_reference(self, entry: SymbolTableEntry, variant: VariantGrammar) -> None:
        if not self._remember_entry(entry):
            return
        self.references.setdefault(entry.file, []).append(entry)
        token = self._identifier_token_type(variant)
        if token is not None:
            self.tokens.setdefault(entry.file, {})[(entry.range, token)] = None

    def note_typed_node(
        self, node: SyntaxNode, type_value: TypeValue, variant: VariantGrammar
    ) -> None:
        box = variant.box(KIND_TYPE, type_value.name)
        if box is not None and box.capabilities.semantic_token is not None:
            self.tokens.setdefault(node.file, {})[
                (node.span, box.capabilities.semantic_token)
            ] = None

    def _identifier_token_type(self, variant: VariantGrammar) -> str | None:
        for box in variant.boxes():
            if box.kind == KIND_SIGNATURE and box.capabilities.semantic_token:
                return box.capabilities.semantic_token
        return None

    # -- per-file reset used when a document is re-checked

    def clear_file(self, file: str) -> None:
        self.scope_index.remove_file(file)
        self.graph.remove_file(file)
        self.definitions.pop(file, None)
        self.references.pop(file, None)
        self.tokens.pop(file, None)
        self.inlays.pop(file, None)
        self._seen_entries.pop(file, None)
        doomed = [uid for uid, unit in self.units.items() if unit.file == file]
        for uid in doomed:
            unit = self.units.pop(uid)
            if self.root_unit is not None and self.root_unit.id == uid:
                self.root_unit = None
            self.dependencies = {
                (r, o) for r, o in self.dependencies if r != uid and o != uid
            }
