"""Expression-language counting and the NAR/OCR reuse metrics.

An expression language over a universe of primitive types U and operators O
is a pair (u, o) with nonempty u ⊆ U and nonempty o ⊆ O_u, where O_u holds
the operators definable on u: those with at least one signature whose types
all lie in u. An operator keeps one identity across its per-type signatures
(`+` over int and `+` over double is one operator), which is what makes the
two-type/two-operator worked example count 3 + 3 + 3 = 9. The closed form

    count = Σ over nonempty u ⊆ U of (2^|O_u| − 1)

is cross-checked by ``enumerate_languages``, the brute-force oracle that
builds every (u, o) pair. Metric values are exact rationals.

>>> u = TypeUniverse.from_parts(
...     ["int", "double"],
...     [("+", ["int"]), ("+", ["double"]), ("*", ["int"]), ("*", ["double"])],
... )
>>> count_expression_languages(u)
9
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence


class UniverseTooLarge(Exception):
    pass


class EmptyLanguageSet(Exception):
    pass


class TypeNotPresent(Exception):
    def __init__(self, type_name: str) -> None:
        super().__init__(f"no language contains type {type_name!r}")
        self.type_name = type_name


@dataclass(frozen=True)
class Operator:
    """One named operator with the type sets of its signatures."""

    name: str
    signatures: frozenset[frozenset[str]]

    def __post_init__(self) -> None:
        if not self.signatures or any(not s for s in self.signatures):
            raise ValueError(f"operator {self.name!r} needs nonempty signature types")

    def definable_on(self, types: frozenset[str]) -> bool:
        return any(sig <= types for sig in self.signatures)


@dataclass(frozen=True)
class TypeUniverse:
    types: tuple[str, ...]
    operators: tuple[Operator, ...]

    @classmethod
    def from_parts(
        cls,
        types: Sequence[str],
        operators: Iterable[tuple[str, Sequence[str]]],
    ) -> "TypeUniverse":
        grouped: dict[str, set[frozenset[str]]] = {}
        order: list[str] = []
        for name, sig_types in operators:
            if name not in grouped:
                grouped[name] = set()
                order.append(name)
            grouped[name].add(frozenset(sig_types))
        ops = tuple(Operator(name, frozenset(grouped[name])) for name in order)
        known = set(types)
        for op in ops:
            for sig in op.signatures:
                unknown = sig - known
                if unknown:
                    raise ValueError(
                        f"operator {op.name!r} uses unknown types {sorted(unknown)}"
                    )
        return cls(tuple(types), ops)

    @classmethod
    def from_json(cls, data: Mapping) -> "TypeUniverse":
        return cls.from_parts(
            data.get("types", []),
            [(op["name"], op["types"]) for op in data.get("operators", [])],
        )


@dataclass(frozen=True)
class ExpressionLanguage:
    """One (u, o) pair; components() is the name set NAR/OCR work over."""

    types: frozenset[str]
    operators: tuple[Operator, ...]

    def components(self, per_signature: bool = False) -> frozenset[str]:
        if per_signature:
            ops = frozenset(
                _signature_key(op.name, sig)
                for op in self.operators
                for sig in op.signatures
                if sig <= self.types
            )
        else:
            ops = frozenset(op.name for op in self.operators)
        return self.types | ops


def _signature_key(name: str, sig: frozenset[str]) -> str:
    return f"{name}({','.join(sorted(sig))})"


def count_expression_languages(universe: TypeUniverse) -> int:
    """Closed-form count of valid expression languages."""
    n = len(universe.types)
    if n > 62:
        raise UniverseTooLarge(f"|U| = {n} exceeds the 62-type word-width guard")
    sig_masks = _signature_masks(universe)
    total = 0
    for subset in range(1, 1 << n):
        definable = sum(
            1 for masks in sig_masks if any(m & subset == m for m in masks)
        )
        total += (1 << definable) - 1
    return total


def enumerate_languages(universe: TypeUniverse) -> list[ExpressionLanguage]:
    """Brute-force enumeration of every valid expression language."""
    n, m = len(universe.types), len(universe.operators)
    if n > 16 or m > 16:
        raise UniverseTooLarge(f"|U| = {n}, |O| = {m} exceeds the 16/16 enumeration guard")
    sig_masks = _signature_masks(universe)
    languages: list[ExpressionLanguage] = []
    for subset in range(1, 1 << n):
        type_set = frozenset(
            t for i, t in enumerate(universe.types) if subset & (1 << i)
        )
        definable = [
            op
            for op, masks in zip(universe.operators, sig_masks)
            if any(m & subset == m for m in masks)
        ]
        for op_choice in range(1, 1 << len(definable)):
            chosen = tuple(
                op for i, op in enumerate(definable) if op_choice & (1 << i)
            )
            languages.append(ExpressionLanguage(type_set, chosen))
    return languages


def _signature_masks(universe: TypeUniverse) -> list[list[int]]:
    index = {t: i for i, t in enumerate(universe.types)}
    all_masks: list[list[int]] = []
    for op in universe.operators:
        masks = []
        for sig in op.signatures:
            mask = 0
            for t in sig:
                mask |= 1 << index[t]
            masks.append(mask)
        all_masks.append(masks)
    return all_masks


def _as_component_set(language) -> frozenset[str]:
    if isinstance(language, ExpressionLanguage):
        return language.components()
    return frozenset(language)


def nar(component: str, languages: Sequence) -> Fraction:
    """Normalized absolute reuse degree: the fraction of languages
    containing the component."""
    if not languages:
        raise EmptyLanguageSet("NAR needs at least one language")
    containing = sum(1 for lang in languages if component in _as_component_set(lang))
    return Fraction(containing, len(languages))


def ocr(operator: str, type_name: str, languages: Sequence) -> Fraction:
    """Operator conditional reuse degree: among languages containing the
    type, the fraction also containing the operator."""
    with_type = [
        lang for lang in languages if type_name in _as_component_set(lang)
    ]
    if not with_type:
        raise TypeNotPresent(type_name)
    both = sum(1 for lang in with_type if operator in _as_component_set(lang))
    return Fraction(both, len(with_type))


# ---------------------------------------------------------------------------
# Report building (CLI surface)

def _render_fraction(value: Fraction) -> dict:
    return {
        "fraction": f"{value.numerator}/{value.denominator}",
        "decimal": f"{float(value):.2f}",
    }


def build_report(
    data: Mapping,
    enumerate_all: bool = False,
    per_signature: bool = False,
) -> dict:
    """Turn the metrics input schema into a JSON-ready report.

    ``languages`` entries are component-name lists; when a universe is
    present its closed-form count (and optionally the enumeration) is
    included. ``per_signature`` switches operator identity from name to
    name-plus-signature when rendering enumerated languages.
    """
    report: dict = {}
    universe = None
    if data.get("types") or data.get("operators"):
        universe = TypeUniverse.from_json(data)
        report["count"] = count_expression_languages(universe)
        if enumerate_all:
            report["enumerated"] = [
                {
                    "types": sorted(lang.types),
                    "operators": sorted(
                        lang.components(per_signature) - lang.types
                    ),
                }
                for lang in enumerate_languages(universe)
            ]
    languages = data.get("languages", [])
    if languages:
        named = [(lang["name"], frozenset(lang["components"])) for lang in languages]
        component_names = sorted(set().union(*(c for _, c in named)))
        sets = [c for _, c in named]
        report["nar"] = {
            component: _render_fraction(nar(component, sets))
            for component in component_names
        }
        if universe is not None:
            ocr_report = {}
            for op in universe.operators:
                for type_name in sorted(set().union(*op.signatures)):
                    if any(type_name in c for c in sets):
                        ocr_report[f"{op.name}|{type_name}"] = _render_fraction(
                            ocr(op.name, type_name, sets)
                        )
            report["ocr"] = ocr_report
    return report
