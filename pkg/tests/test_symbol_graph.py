"""Symbol dependency graph: navigation queries against a reverse-scan oracle."""

import random

import pytest

from typeforge.symbol_graph import (
    AmbiguousDefinition,
    EDGE_REFERENCE,
    EDGE_USE_DECL,
    NoDefinition,
    SymbolGraph,
    UnknownNode,
)


def small_graph():
    g = SymbolGraph()
    d = g.add_symbol("x", "variable", "f", 0, (0, 1))
    u1 = g.add_symbol("x", "variable", "f", 10, (10, 11))
    u2 = g.add_symbol("x", "variable", "f", 20, (20, 21))
    g.add_dependency(u1, d)
    g.add_dependency(u2, d)
    return g, d, u1, u2


class TestPopulation:
    def test_two_nodes_one_edge(self):
        g = SymbolGraph()
        d = g.add_symbol("x", "variable", "f", 0, (0, 1))
        u = g.add_symbol("x", "variable", "f", 5, (5, 6))
        g.add_dependency(u, d)
        assert len(g) == 2
        assert g.edge_count == 1

    def test_identical_payloads_coalesce(self):
        g = SymbolGraph()
        a = g.add_symbol("x", "variable", "f", 0, (0, 1))
        b = g.add_symbol("x", "variable", "f", 0, (0, 1))
        assert a == b
        u = g.add_symbol("x", "variable", "f", 5, (5, 6))
        g.add_dependency(u, a)
        g.add_dependency(u, a)
        assert g.edge_count == 1

    def test_edge_to_missing_node(self):
        g = SymbolGraph()
        a = g.add_symbol("x", "variable", "f", 0, (0, 1))
        with pytest.raises(UnknownNode):
            g.add_dependency(a, 999)

    def test_idempotent_repopulation_is_isomorphic(self):
        def populate(g):
            d = g.add_symbol("x", "variable", "f", 0, (0, 1))
            u = g.add_symbol("x", "variable", "f", 9, (9, 10))
            g.add_dependency(u, d)

        g = SymbolGraph()
        populate(g)
        first = g.dump()
        populate(g)
        assert g.dump() == first


class TestFindReferences:
    def test_ordered_by_location(self):
        g, d, u1, u2 = small_graph()
        assert [n.id for n in g.find_references(d)] == [u1, u2]

    def test_no_uses(self):
        g = SymbolGraph()
        d = g.add_symbol("x", "variable", "f", 0, (0, 1))
        assert g.find_references(d) == []

    def test_unknown(self):
        with pytest.raises(UnknownNode):
            SymbolGraph().find_references(7)

    def test_matches_reverse_scan_oracle(self):
        rng = random.Random(31)
        g = SymbolGraph()
        nodes = [
            g.add_symbol(f"s{i}", "variable", f"f{rng.randrange(3)}", i * 10, (i * 10, i * 10 + 2))
            for i in range(1000)
        ]
        edges = set()
        for _ in range(3000):
            a, b = rng.sample(nodes, 2)
            kind = rng.choice([EDGE_REFERENCE, EDGE_USE_DECL])
            g.add_dependency(a, b, kind)
            edges.add((a, b, kind))
        for target in rng.sample(nodes, 40):
            expected = sorted(
                (g.node(a) for a, b, k in edges if b == target and k == EDGE_REFERENCE),
                key=lambda n: (n.file, n.range[0]),
            )
            assert g.find_references(target) == expected


class TestGoToDefinition:
    def test_resolves(self):
        g, d, u1, _ = small_graph()
        assert g.go_to_definition(u1).id == d

    def test_no_definition(self):
        g = SymbolGraph()
        lonely = g.add_symbol("x", "variable", "f", 0, (0, 1))
        with pytest.raises(NoDefinition):
            g.go_to_definition(lonely)

    def test_ambiguous_is_surfaced(self):
        g = SymbolGraph()
        u = g.add_symbol("x", "variable", "f", 0, (0, 1))
        d1 = g.add_symbol("x", "variable", "f", 10, (10, 11))
        d2 = g.add_symbol("x", "variable", "f", 20, (20, 21))
        g.add_dependency(u, d1)
        g.add_dependency(u, d2)
        with pytest.raises(AmbiguousDefinition):
            g.go_to_definition(u)

    def test_asymmetry(self):
        g = SymbolGraph()
        a = g.add_symbol("a", "variable", "f", 0, (0, 1))
        b = g.add_symbol("b", "variable", "f", 5, (5, 6))
        g.add_dependency(a, b)
        assert [n.id for n in g.find_references(b)] == [a]
        assert g.find_references(a) == []


class TestCompletions:
    def test_neighbors_collapse_to_names(self):
        g, d, u1, u2 = small_graph()
        assert g.completions_at(d) == ["x"]

    def test_isolated_node(self):
        g = SymbolGraph()
        lonely = g.add_symbol("q", "variable", "f", 0, (0, 1))
        assert g.completions_at(lonely) == []

    def test_unknown(self):
        with pytest.raises(UnknownNode):
            SymbolGraph().completions_at(3)

    def test_in_and_out_neighbors(self):
        g = SymbolGraph()
        mid = g.add_symbol("assign", "statement", "f", 0, (0, 5))
        d = g.add_symbol("x", "variable", "f", 0, (0, 1))
        user = g.add_symbol("y", "variable", "f", 8, (8, 9))
        g.add_dependency(mid, d)
        g.add_dependency(user, mid)
        assert g.completions_at(mid) == ["x", "y"]


class TestRemoveFile:
    def test_only_that_file_goes(self):
        g = SymbolGraph()
        a = g.add_symbol("a", "variable", "f1", 0, (0, 1))
        b = g.add_symbol("b", "variable", "f2", 0, (0, 1))
        g.add_dependency(a, b)
        g.remove_file("f1")
        assert len(g) == 1
        assert g.edge_count == 0
        assert g.node(b).name == "b"
