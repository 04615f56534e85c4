"""Typeforge: a modular type-system engine with a derived language server
and editor-plugin generator.

Language artifacts declare their type rules in a small per-artifact DSL
whose grammar is assembled from registered feature boxes; the same
declarations drive an LSP server (diagnostics, hover, symbols, folding,
navigation) and the generation of editor plugin bundles.
"""

__version__ = "0.1.0"
