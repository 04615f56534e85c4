"""Collection, assembly, and integration validation."""

import pytest

from typeforge import features as ft
from typeforge.typelang import UnknownHook, parse_program


def registry():
    return ft.FeatureRegistry(
        [
            ft.FeatureBox("Type", "Int", ft.BoxCapabilities(semantic_token="number")),
            ft.FeatureBox("Type", "Double"),
            ft.FeatureBox("Type", "String"),
            ft.FeatureBox("Signature", "identifier"),
            ft.FeatureBox(
                "Signature", "plus",
                signature_shape=ft.SignatureShape(("T", "T"), "T"),
            ),
            ft.FeatureBox(
                "Signature", "times",
                signature_shape=ft.SignatureShape(("T", "T"), "T"),
            ),
            ft.FeatureBox("Scope", "global"),
            ft.FeatureBox("Exception", "InferenceException"),
        ]
    )


def make_artifact(artifact_id, role_source, label="Assign", symbols=("Id", "'='", "Expr")):
    return ft.Artifact(
        artifact_id,
        ft.Production(label, tuple(ft._symbol_from_text(s) for s in symbols)),
        {"check-infer": role_source},
    )


ASSIGNMENT_ROLE = """\
infer typeof($2) $2
try {
  infer identifier $1
  check $1 : typeof($1) invariant typeof($2)
  use $1 typeof($1)
} on InferenceException {
  define typeof($2) $1
}
"""


class TestCollect:
    def test_assignment_role_boxes(self):
        artifact = make_artifact("assign", ASSIGNMENT_ROLE)
        assert ft.collect(artifact, registry()) == {
            ("Signature", "identifier"),
            ("Exception", "InferenceException"),
        }

    def test_role_without_hooks(self):
        artifact = make_artifact("plain", "check $1 : typeof($1) invariant typeof($2)")
        assert ft.collect(artifact, registry()) == frozenset()

    def test_expression_fixture_uses_four_boxes(self):
        sources = {
            "int": "infer typeof($0) $0 => Int",
            "double": "infer typeof($0) $0 => Double",
            "plus": "infer plus $0 with typeof($1), typeof($2)",
            "times": "infer times $0 with typeof($1), typeof($2)",
        }
        artifact = ft.Artifact(
            "expressions",
            ft.Production("Expr", (ft.Symbol("Lhs", False), ft.Symbol("Rhs", False))),
            sources,
        )
        assert ft.collect(artifact, registry()) == {
            ("Type", "Int"),
            ("Type", "Double"),
            ("Signature", "plus"),
            ("Signature", "times"),
        }

    def test_explicit_variant_override(self):
        reg = ft.FeatureRegistry.from_json(
            {
                "boxes": [
                    {"kind": "Type", "name": "Int"},
                    {"kind": "Type", "name": "Double"},
                ],
                "variants": {
                    "assign": [{"kind": "Type", "name": "Double"}],
                },
            }
        )
        artifact = make_artifact("assign", "define Int $1")
        assert ft.collect(artifact, reg) == {("Type", "Double")}


class TestAssemble:
    def test_variant_admits_exactly_the_set(self):
        v = ft.assemble_variant(
            frozenset({("Type", "Int"), ("Type", "Double")}), registry()
        )
        assert v.hook_names("Type") == ("Double", "Int")
        assert v.hook_names("Signature") == ()
        assert v.has("Type", "Int") and not v.has("Type", "String")

    def test_missing_boxes_all_listed(self):
        with pytest.raises(ft.MissingFeatureBox) as exc:
            ft.assemble_variant(
                frozenset({("Type", "Ghost"), ("Scope", "nowhere"), ("Type", "Int")}),
                registry(),
            )
        assert exc.value.missing == (("Scope", "nowhere"), ("Type", "Ghost"))

    def test_missing_box_is_a_parse_error(self):
        with pytest.raises(ft.ParseError):
            ft.assemble_variant(frozenset({("Type", "Ghost")}), registry())

    def test_determinism_across_permutations(self):
        keys = [
            ("Type", "Int"), ("Type", "Double"),
            ("Signature", "plus"), ("Signature", "times"),
        ]
        v1 = ft.assemble_variant(frozenset(keys), registry())
        v2 = ft.assemble_variant(frozenset(reversed(keys)), registry())
        assert v1.serialize() == v2.serialize()

    def test_registry_closure_property(self):
        artifact = make_artifact("assign", ASSIGNMENT_ROLE)
        fs = ft.collect(artifact, registry())
        variant = ft.assemble_variant(fs, registry(), artifact.id)
        parse_program(ASSIGNMENT_ROLE, variant)
        small = ft.VariantGrammar(frozenset({("Exception", "InferenceException")}), {})
        with pytest.raises(UnknownHook):
            parse_program(ASSIGNMENT_ROLE, small)

    def test_rebinding_is_an_error(self):
        artifact = make_artifact("assign", ASSIGNMENT_ROLE)
        v = ft.assemble_variant(ft.collect(artifact), registry(), artifact.id)
        artifact.bind_variant(v)
        with pytest.raises(ft.RebindError):
            artifact.bind_variant(v)


class TestCompileRoles:
    def test_positional_ref_out_of_arity(self):
        artifact = make_artifact("assign", "define Int $7")
        variant = ft.assemble_variant(ft.collect(artifact), registry(), "assign")
        with pytest.raises(ft.ParseError):
            ft.compile_roles(artifact, variant)

    def test_unknown_label(self):
        artifact = make_artifact("assign", "define Int <Nope>")
        variant = ft.assemble_variant(ft.collect(artifact), registry(), "assign")
        with pytest.raises(ft.ParseError):
            ft.compile_roles(artifact, variant)

    def test_valid_refs(self):
        artifact = make_artifact("assign", ASSIGNMENT_ROLE)
        variant = ft.assemble_variant(ft.collect(artifact), registry(), "assign")
        programs = ft.compile_roles(artifact, variant)
        assert set(programs) == {"check-infer"}


def compiled_language(role_sources):
    reg = registry()
    out = []
    for artifact_id, source in role_sources.items():
        artifact = make_artifact(artifact_id, source)
        variant = ft.assemble_variant(ft.collect(artifact, reg), reg, artifact_id)
        artifact.bind_variant(variant)
        out.append((artifact, ft.compile_roles(artifact, variant)))
    return out


class TestValidateIntegration:
    def test_demo_style_language_passes(self):
        language = compiled_language(
            {
                "int-type": "infer typeof($0) $0 => Int",
                "string-type": "infer typeof($0) $0 => String",
                "assign": ASSIGNMENT_ROLE,
            }
        )
        report = ft.validate_integration(language, ["scope_index", "symbol_graph"])
        assert report.valid
        assert len(report.pairs) == 3
        for pair in report.pairs:
            assert "scope_index" in pair.shared_contexts
            assert "symbol_graph" in pair.shared_contexts

    def test_zero_global_contexts_violates_property_three(self):
        language = compiled_language(
            {
                "int-type": "infer typeof($0) $0 => Int",
                "assign": ASSIGNMENT_ROLE,
            }
        )
        report = ft.validate_integration(language, [])
        assert not report.valid
        for pair in report.pairs:
            assert any(v.prop == "declared-interaction" for v in pair.violations)

    def test_single_artifact_is_vacuously_valid(self):
        language = compiled_language({"assign": ASSIGNMENT_ROLE})
        report = ft.validate_integration(language, ["scope_index", "symbol_graph"])
        assert report.valid and report.pairs == ()

    def test_undeclared_context_flagged(self):
        language = compiled_language(
            {
                "assign": ASSIGNMENT_ROLE,
                "scoped": "define scope global $0\ninit global",
            }
        )
        report = ft.validate_integration(language, ["symbol_graph"])
        assert not report.valid
        assert any(
            "scope_index" in v.detail
            for pair in report.pairs
            for v in pair.violations
        )

    def test_one_variant_per_artifact_enforced(self):
        reg = registry()
        artifact = make_artifact("assign", ASSIGNMENT_ROLE)
        foreign = ft.assemble_variant(ft.collect(artifact, reg), reg, "other")
        artifact.bind_variant(foreign)
        language = [(artifact, ft.compile_roles(artifact, foreign))]
        second = make_artifact("int-type", "infer typeof($0) $0 => Int")
        second.bind_variant(ft.assemble_variant(ft.collect(second, reg), reg, "int-type"))
        language.append((second, ft.compile_roles(second, second.variant)))
        report = ft.validate_integration(language, ["scope_index", "symbol_graph"])
        assert not report.valid
        assert any(v.prop == "independence" for v in report.violations)


class TestRegistryValidation:
    def test_duplicate_box_rejected(self):
        with pytest.raises(ft.RegistryError):
            ft.FeatureRegistry([ft.FeatureBox("Type", "Int"), ft.FeatureBox("Type", "Int")])

    def test_semantic_token_vocabulary_enforced(self):
        with pytest.raises(ft.RegistryError):
            ft.FeatureRegistry(
                [ft.FeatureBox("Type", "Int", ft.BoxCapabilities(semantic_token="sparkles"))]
            )

    def test_subtype_cycle_rejected(self):
        reg = ft.FeatureRegistry(
            [
                ft.FeatureBox("Type", "A", subtype_of=("B",)),
                ft.FeatureBox("Type", "B", subtype_of=("A",)),
            ]
        )
        with pytest.raises(ft.RegistryError):
            reg.subtype_dag()

    def test_subtype_dag_shape(self):
        reg = ft.FeatureRegistry(
            [
                ft.FeatureBox("Type", "Int", subtype_of=("Double",)),
                ft.FeatureBox("Type", "Double"),
            ]
        )
        assert reg.subtype_dag() == {"Int": ("Double",), "Double": ()}
