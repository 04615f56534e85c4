"""Feature boxes, variant assembly, and composed-language validation.

A feature box is the registered implementation of one Typelang hook (type,
signature, scope, callback, or exception) together with the editor
capabilities it contributes. The collection phase scans an artifact's roles
for hook references; the assembling phase derives the artifact's variant
grammar from them and fails fast when a referenced box is unregistered.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .typelang import ParseError, TypelangProgram, collect_hooks, iter_node_refs
from . import typelang

KIND_TYPE = "Type"
KIND_SIGNATURE = "Signature"
KIND_SCOPE = "Scope"
KIND_CALLBACK = "Callback"
KIND_EXCEPTION = "Exception"
KINDS = (KIND_TYPE, KIND_SIGNATURE, KIND_SCOPE, KIND_CALLBACK, KIND_EXCEPTION)

# LSP 3.17 semantic token type vocabulary.
SEMANTIC_TOKEN_TYPES = frozenset(
    {
        "namespace", "type", "class", "enum", "interface", "struct",
        "typeParameter", "parameter", "variable", "property", "enumMember",
        "event", "function", "method", "macro", "keyword", "modifier",
        "comment", "string", "number", "regexp", "operator", "decorator",
    }
)

FeatureSet = frozenset[tuple[str, str]]


class RegistryError(Exception):
    pass


class MissingFeatureBox(ParseError):
    """Assembly failed: one or more referenced boxes are unregistered.

    Subclasses ParseError because an unresolved hook is treated as a
    parsing error of the artifact's roles.
    """

    def __init__(self, missing: Sequence[tuple[str, str]]) -> None:
        self.missing = tuple(sorted(missing))
        listing = ", ".join(f"({k}, {n})" for k, n in self.missing)
        super().__init__(f"missing feature boxes: {listing}")


class RebindError(Exception):
    """An artifact was already bound to a variant."""


@dataclass(frozen=True)
class BoxCapabilities:
    semantic_token: str | None = None
    document_symbol: bool = False
    inlay_hint: bool = False
    hover: bool = False
    folding_range: bool = False
    definition: bool = False
    references: bool = False
    completion: bool = False

    def any(self) -> bool:
        return bool(
            self.semantic_token
            or self.document_symbol
            or self.inlay_hint
            or self.hover
            or self.folding_range
            or self.definition
            or self.references
            or self.completion
        )


@dataclass(frozen=True)
class SignatureShape:
    params: tuple[str, ...]
    returns: str


@dataclass(frozen=True)
class FeatureBox:
    kind: str
    name: str
    capabilities: BoxCapabilities = BoxCapabilities()
    subtype_of: tuple[str, ...] = ()
    signature_shape: SignatureShape | None = None


class FeatureRegistry:
    """Immutable-after-load registry of feature boxes keyed by (kind, name)."""

    def __init__(self, boxes: Iterable[FeatureBox] = ()) -> None:
        self._boxes: dict[tuple[str, str], FeatureBox] = {}
        self.explicit_variants: dict[str, FeatureSet] = {}
        for box in boxes:
            self.add(box)

    def add(self, box: FeatureBox) -> None:
        key = (box.kind, box.name)
        if key in self._boxes:
            raise RegistryError(f"duplicate feature box {key}")
        if box.kind not in KINDS:
            raise RegistryError(f"unknown feature box kind {box.kind!r}")
        if (
            box.capabilities.semantic_token is not None
            and box.capabilities.semantic_token not in SEMANTIC_TOKEN_TYPES
        ):
            raise RegistryError(
                f"semantic token type {box.capabilities.semantic_token!r} "
                f"is not in the LSP vocabulary"
            )
        if box.subtype_of and box.kind != KIND_TYPE:
            raise RegistryError(f"subtypeOf only applies to Type boxes: {key}")
        if box.signature_shape and box.kind != KIND_SIGNATURE:
            raise RegistryError(f"signature only applies to Signature boxes: {key}")
        self._boxes[key] = box

    def get(self, kind: str, name: str) -> FeatureBox | None:
        return self._boxes.get((kind, name))

    def __contains__(self, key: tuple[str, str]) -> bool:
        return key in self._boxes

    def __iter__(self):
        return iter(self._boxes.values())

    def __len__(self) -> int:
        return len(self._boxes)

    def subtype_dag(self) -> dict[str, tuple[str, ...]]:
        """Parent map over Type box names; reflexivity is implicit."""
        dag = {
            box.name: box.subtype_of
            for box in self._boxes.values()
            if box.kind == KIND_TYPE
        }
        for name, parents in dag.items():
            seen: set[str] = set()
            stack = list(parents)
            while stack:
                p = stack.pop()
                if p == name:
                    raise RegistryError(f"subtype cycle through {name!r}")
                if p in seen:
                    continue
                seen.add(p)
                stack.extend(dag.get(p, ()))
        return dag

    @classmethod
    def from_json(cls, data) -> "FeatureRegistry":
        if isinstance(data, Mapping):
            box_items = data.get("boxes", [])
            variants = data.get("variants", {})
        else:
            box_items, variants = data, {}
        registry = cls(_box_from_json(item) for item in box_items)
        for artifact_id, pairs in variants.items():
            registry.explicit_variants[artifact_id] = frozenset(
                (p["kind"], p["name"]) for p in pairs
            )
        registry.subtype_dag()
        return registry

    @classmethod
    def load(cls, path: str | Path) -> "FeatureRegistry":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


def _box_from_json(item: Mapping) -> FeatureBox:
    lsp = item.get("lsp", {})
    caps = BoxCapabilities(
        semantic_token=lsp.get("semanticToken"),
        document_symbol=bool(lsp.get("documentSymbol", False)),
        inlay_hint=bool(lsp.get("inlayHint", False)),
        hover=bool(lsp.get("hover", False)),
        folding_range=bool(lsp.get("foldingRange", False)),
        definition=bool(lsp.get("definition", False)),
        references=bool(lsp.get("references", False)),
        completion=bool(lsp.get("completion", False)),
    )
    shape = None
    if "signature" in item:
        shape = SignatureShape(
            params=tuple(item["signature"].get("params", [])),
            returns=item["signature"]["returns"],
        )
    return FeatureBox(
        kind=item["kind"],
        name=item["name"],
        capabilities=caps,
        subtype_of=tuple(item.get("subtypeOf", [])),
        signature_shape=shape,
    )


# ---------------------------------------------------------------------------
# Artifacts

@dataclass(frozen=True)
class Symbol:
    """One right-hand-side grammar symbol; terminals are quoted in JSON."""

    text: str
    is_terminal: bool


@dataclass(frozen=True)
class Production:
    label: str
    symbols: tuple[Symbol, ...]
    categories: Mapping[str, frozenset[str]] = field(default_factory=dict)

    @property
    def nonterminals(self) -> tuple[str, ...]:
        return tuple(s.text for s in self.symbols if not s.is_terminal)

    @property
    def arity(self) -> int:
        # Referenceable nodes: the head plus each nonterminal child.
        return 1 + len(self.nonterminals)


class Artifact:
    """A language artifact: one production, its categories, and its roles."""

    def __init__(
        self,
        artifact_id: str,
        production: Production,
        roles: Mapping[str, str],
    ) -> None:
        self.id = artifact_id
        self.production = production
        self.roles = dict(roles)
        self._variant: "VariantGrammar | None" = None

    @property
    def variant(self) -> "VariantGrammar | None":
        return self._variant

    def bind_variant(self, variant: "VariantGrammar") -> None:
        if self._variant is not None:
            raise RebindError(f"artifact {self.id!r} already bound to a variant")
        self._variant = variant

    @classmethod
    def from_json(cls, data: Mapping, role_loader) -> "Artifact":
        prod = data["production"]
        symbols = tuple(_symbol_from_text(s) for s in prod.get("symbols", []))
        categories = {
            cat: frozenset(terms)
            for cat, terms in prod.get("categories", {}).items()
        }
        roles = {name: role_loader(ref) for name, ref in data.get("roles", {}).items()}
        return cls(
            data["id"],
            Production(prod["label"], symbols, categories),
            roles,
        )


def _symbol_from_text(text: str) -> Symbol:
    if len(text) >= 2 and text.startswith("'") and text.endswith("'"):
        return Symbol(text[1:-1], is_terminal=True)
    return Symbol(text, is_terminal=False)


# ---------------------------------------------------------------------------
# Collection and assembling phases

CORE_GRAMMAR_VERSION = "typelang-core-1"


class VariantGrammar:
    """The core grammar plus exactly the hooks collected for one artifact."""

    def __init__(
        self,
        features: FeatureSet,
        boxes: Mapping[tuple[str, str], FeatureBox],
        artifact_id: str | None = None,
    ) -> None:
        self.features = frozenset(features)
        self._boxes = dict(boxes)
        self.artifact_id = artifact_id
        self.core = CORE_GRAMMAR_VERSION

    def has(self, kind: str, name: str) -> bool:
        return (kind, name) in self.features

    def box(self, kind: str, name: str) -> FeatureBox | None:
        return self._boxes.get((kind, name))

    def boxes(self) -> tuple[FeatureBox, ...]:
        return tuple(self._boxes[key] for key in sorted(self._boxes))

    def hook_names(self, kind: str) -> tuple[str, ...]:
        return tuple(sorted(name for k, name in self.features if k == kind))

    def serialize(self) -> str:
        payload = {
            "core": self.core,
            "artifact": self.artifact_id,
            "hooks": {kind: list(self.hook_names(kind)) for kind in KINDS},
        }
        return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def collect(artifact: Artifact, registry: FeatureRegistry | None = None) -> FeatureSet:
    """Gather the hook references appearing in the artifact's roles.

    Honors an explicit variant declared for the artifact in the registry
    file; otherwise the feature set is derived from the role sources.
    """
    if registry is not None and artifact.id in registry.explicit_variants:
        return registry.explicit_variants[artifact.id]
    hooks: set[tuple[str, str]] = set()
    for source in artifact.roles.values():
        hooks |= collect_hooks(source)
    return frozenset(hooks)


def assemble_variant(
    features: FeatureSet,
    registry: FeatureRegistry,
    artifact_id: str | None = None,
) -> VariantGrammar:
    """Derive the variant grammar for a feature set.

    Deterministic in the set (not its iteration order). Raises
    MissingFeatureBox listing every absent (kind, name) pair.
    """
    missing = [key for key in sorted(features) if key not in registry]
    if missing:
        raise MissingFeatureBox(missing)
    boxes = {key: registry.get(*key) for key in sorted(features)}
    return VariantGrammar(features, boxes, artifact_id)


def compile_roles(
    artifact: Artifact, variant: VariantGrammar
) -> dict[str, TypelangProgram]:
    """Parse all role sources under the variant and validate node refs."""
    programs: dict[str, TypelangProgram] = {}
    for role_name, source in artifact.roles.items():
        program = typelang.parse_program(source, variant)
        for ref in iter_node_refs(program):
            if ref.index is not None and ref.index >= artifact.production.arity:
                raise ParseError(
                    f"node reference {ref} exceeds production arity "
                    f"{artifact.production.arity} of {artifact.id!r}",
                    ref.span[0],
                )
            if ref.label is not None and ref.label not in (
                artifact.production.label,
                *artifact.production.nonterminals,
            ):
                raise ParseError(
                    f"node reference <{ref.label}> names no symbol of "
                    f"{artifact.id!r}",
                    ref.span[0],
                )
        programs[role_name] = program
    return programs


# ---------------------------------------------------------------------------
# Integration validation

@dataclass(frozen=True)
class Violation:
    prop: str
    pair: tuple[str, str]
    detail: str


@dataclass(frozen=True)
class PairVerdict:
    pair: tuple[str, str]
    ok: bool
    shared_contexts: tuple[str, ...]
    violations: tuple[Violation, ...]


@dataclass(frozen=True)
class IntegrationReport:
    pairs: tuple[PairVerdict, ...]
    global_contexts: tuple[str, ...]

    @property
    def valid(self) -> bool:
        return all(p.ok for p in self.pairs)

    @property
    def violations(self) -> tuple[Violation, ...]:
        return tuple(v for p in self.pairs for v in p.violations)


def required_global_contexts(programs: Iterable[TypelangProgram]) -> frozenset[str]:
    """Global shared contexts an artifact's roles touch, derived statically."""
    needed: set[str] = set()

    def walk(stmts):
        for stmt in stmts:
            if isinstance(stmt, (typelang.DefineScope, typelang.Init,
                                 typelang.Enter, typelang.Exit)):
                needed.add("scope_index")
            elif isinstance(stmt, (typelang.Define, typelang.Use)):
                needed.add("symbol_graph")
            elif isinstance(stmt, typelang.Try):
                walk(stmt.body)
                if stmt.handler is not None:
                    walk(stmt.handler)

    for program in programs:
        walk(program.statements)
    return frozenset(needed)


def validate_integration(
    language: Sequence[tuple[Artifact, Mapping[str, TypelangProgram]]],
    global_contexts: Sequence[str],
) -> IntegrationReport:
    """Check the variant-integration properties over all artifact pairs.

    Per unordered pair: (1) each artifact is bound to its own variant,
    generated for it, with no shared mutable state; (2) both compose in one
    language as configurations of the same core DSL; (3) every context the
    pair's roles touch is a declared context, and at least one global shared
    context is declared; (4) a context reachable by both exists. The
    language integrates iff every pair passes.
    """
    declared = frozenset(global_contexts)
    entries = [
        (artifact, required_global_contexts(programs.values()), _local_scopes(programs))
        for artifact, programs in language
    ]
    verdicts: list[PairVerdict] = []
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            a, a_needs, a_scopes = entries[i]
            b, b_needs, b_scopes = entries[j]
            pair = (a.id, b.id)
            violations: list[Violation] = []
            for artifact in (a, b):
                if artifact.variant is None:
                    violations.append(
                        Violation("independence", pair, f"{artifact.id} has no variant")
                    )
                elif artifact.variant.artifact_id != artifact.id:
                    violations.append(
                        Violation(
                            "independence",
                            pair,
                            f"variant of {artifact.id} was generated for "
                            f"{artifact.variant.artifact_id!r}",
                        )
                    )
            if (
                a.variant is not None
                and b.variant is not None
                and a.variant is b.variant
            ):
                violations.append(
                    Violation("independence", pair, "artifacts share one variant object")
                )
            if (
                a.variant is not None
                and b.variant is not None
                and a.variant.core != b.variant.core
            ):
                violations.append(
                    Violation("coexistence", pair, "variants use different core grammars")
                )
            if not declared:
                violations.append(
                    Violation("declared-interaction", pair, "no global shared context declared")
                )
            else:
                undeclared = (a_needs | b_needs) - declared
                if undeclared:
                    violations.append(
                        Violation(
                            "declared-interaction",
                            pair,
                            f"roles touch undeclared contexts {sorted(undeclared)}",
                        )
                    )
            shared = tuple(sorted(declared | (a_scopes & b_scopes)))
            if not shared:
                violations.append(
                    Violation("cooperation", pair, "no shared context reachable by both")
                )
            verdicts.append(
                PairVerdict(pair, not violations, shared, tuple(violations))
            )
    return IntegrationReport(tuple(verdicts), tuple(sorted(declared)))


def _local_scopes(programs: Mapping[str, TypelangProgram]) -> frozenset[str]:
    scopes: set[str] = set()

    def walk(stmts):
        for stmt in stmts:
            if isinstance(stmt, (typelang.DefineScope, typelang.Enter,
                                 typelang.Exit, typelang.Init)):
                scopes.add(stmt.scope)
            elif isinstance(stmt, typelang.Try):
                walk(stmt.body)
                if stmt.handler is not None:
                    walk(stmt.handler)

    for program in programs.values():
        walk(program.statements)
    return frozenset(scopes)
