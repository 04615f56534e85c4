"""Directed symbol dependency graph behind references, definitions, and
completion.

Nodes are symbols (definitions and uses); edges point from a dependent
symbol to the symbol it depends on and are not symmetric. Populating is
idempotent: identical payloads coalesce, so re-executed tasks after an
invalidation do not duplicate results.
"""

from __future__ import annotations

from dataclasses import dataclass


class UnknownNode(Exception):
    pass


class NoDefinition(Exception):
    pass


class AmbiguousDefinition(Exception):
    def __init__(self, use_id: int, candidates: list[int]) -> None:
        super().__init__(f"node {use_id} has {len(candidates)} definitions")
        self.candidates = candidates


EDGE_REFERENCE = "reference"
EDGE_USE_DECL = "use-decl"


@dataclass(frozen=True)
class SymbolNode:
    id: int
    name: str
    kind: str
    file: str
    location: int
    range: tuple[int, int]
    scope_id: int | None = None


@dataclass(frozen=True)
class DependencyEdge:
    from_id: int
    to_id: int
    kind: str = EDGE_REFERENCE


class SymbolGraph:
    def __init__(self) -> None:
        self._nodes: dict[int, SymbolNode] = {}
        self._by_payload: dict[tuple, int] = {}
        self._edges: set[DependencyEdge] = set()
        self._out: dict[int, set[DependencyEdge]] = {}
        self._in: dict[int, set[DependencyEdge]] = {}
        self._next_id = 1

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def node(self, node_id: int) -> SymbolNode:
        try:
            return self._nodes[node_id]
        except KeyError:
            raise UnknownNode(f"no symbol node {node_id}") from None

    def add_symbol(
        self,
        name: str,
        kind: str,
        file: str,
        location: int,
        range_: tuple[int, int],
        scope_id: int | None = None,
    ) -> int:
        """Insert a symbol node; identical payloads return the existing id."""
        payload = (name, kind, file, location, tuple(range_), scope_id)
        existing = self._by_payload.get(payload)
        if existing is not None:
            return existing
        node = SymbolNode(self._next_id, name, kind, file, location, tuple(range_), scope_id)
        self._next_id += 1
        self._nodes[node.id] = node
        self._by_payload[payload] = node.id
        self._out[node.id] = set()
        self._in[node.id] = set()
        return node.id

    def add_dependency(self, from_id: int, to_id: int, kind: str = EDGE_REFERENCE) -> None:
        self.node(from_id)
        self.node(to_id)
        edge = DependencyEdge(from_id, to_id, kind)
        if edge in self._edges:
            return
        self._edges.add(edge)
        self._out[from_id].add(edge)
        self._in[to_id].add(edge)

    def find_references(self, def_id: int) -> list[SymbolNode]:
        """Nodes with a reference edge into the definition, in source order."""
        self.node(def_id)
        refs = [
            self._nodes[e.from_id]
            for e in self._in[def_id]
            if e.kind == EDGE_REFERENCE
        ]
        refs.sort(key=lambda n: (n.file, n.range[0]))
        return refs

    def go_to_definition(self, use_id: int) -> SymbolNode:
        """The unique definition a use depends on."""
        self.node(use_id)
        targets = sorted(
            {e.to_id for e in self._out[use_id] if e.kind == EDGE_REFERENCE}
        )
        if not targets:
            raise NoDefinition(f"node {use_id} has no definition edge")
        if len(targets) > 1:
            raise AmbiguousDefinition(use_id, targets)
        return self._nodes[targets[0]]

    def completions_at(self, node_id: int) -> list[str]:
        """Distinct names of in- and out-neighbors, sorted."""
        self.node(node_id)
        names = {self._nodes[e.to_id].name for e in self._out[node_id]}
        names |= {self._nodes[e.from_id].name for e in self._in[node_id]}
        return sorted(names)

    def nodes_for_file(self, file: str) -> list[SymbolNode]:
        return sorted(
            (n for n in self._nodes.values() if n.file == file),
            key=lambda n: n.range[0],
        )

    def remove_file(self, file: str) -> int:
        """Drop a file's nodes and incident edges (document re-checked)."""
        doomed = [n.id for n in self._nodes.values() if n.file == file]
        for node_id in doomed:
            for edge in list(self._out[node_id]) + list(self._in[node_id]):
                self._edges.discard(edge)
                self._out[edge.from_id].discard(edge)
                self._in[edge.to_id].discard(edge)
            node = self._nodes.pop(node_id)
            del self._out[node_id]
            del self._in[node_id]
            payload = (node.name, node.kind, node.file, node.location, node.range, node.scope_id)
            self._by_payload.pop(payload, None)
        return len(doomed)

    def dump(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "name": n.name,
                    "kind": n.kind,
                    "file": n.file,
                    "location": n.location,
                    "range": list(n.range),
                    "scope": n.scope_id,
                }
                for n in sorted(self._nodes.values(), key=lambda n: n.id)
            ],
            "edges": [
                {"from": e.from_id, "to": e.to_id, "kind": e.kind}
                for e in sorted(self._edges, key=lambda e: (e.from_id, e.to_id, e.kind))
            ],
        }
