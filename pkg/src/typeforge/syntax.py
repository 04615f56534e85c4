"""Syntax tree nodes produced by language parsers and consumed by roles."""

from __future__ import annotations

from dataclasses import dataclass, field

from .typelang import NodeRef

Span = tuple[int, int]


@dataclass
class SyntaxNode:
    """One parse tree node.

    ``artifact_id`` links the node to the language artifact whose production
    built it (None for plain tokens and synthetic list nodes). ``label`` is
    the grammar symbol name the node stands for. ``type_value`` caches the
    type assigned during role execution.
    """

    kind: str
    label: str
    span: Span
    file: str = ""
    text: str = ""
    children: list["SyntaxNode"] = field(default_factory=list)
    artifact_id: str | None = None
    is_token: bool = False
    type_value: object | None = None

    @property
    def nt_children(self) -> list["SyntaxNode"]:
        return [c for c in self.children if not c.is_token]

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


class NodeRefError(Exception):
    pass


def node_at_ref(node: SyntaxNode, ref: NodeRef) -> SyntaxNode:
    """Resolve a role's node reference against the node it executes on.

    Index 0 (or the production head's label) is the node itself; positional
    indexes count nonterminal children left to right from 1.
    """
    if ref.index is not None:
        if ref.index == 0:
            return node
        nts = node.nt_children
        if ref.index - 1 < len(nts):
            return nts[ref.index - 1]
        raise NodeRefError(f"{ref} out of range for node {node.label!r}")
    if ref.label == node.label:
        return node
    for child in node.nt_children:
        if child.label == ref.label:
            return child
    raise NodeRefError(f"<{ref.label}> names no child of node {node.label!r}")
