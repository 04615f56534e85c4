"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. Every tolerance is pinned here; the oracles are the independent
implementations described in each test.
"""

import itertools
import json
import math
import os
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

import pytest

from typeforge import rpc
from typeforge.demos import demo_data_root, load_demo
from typeforge.engine import BindingDefined, DiagnosticEmitted, ReferenceRecorded
from typeforge.features import (
    Artifact,
    FeatureRegistry,
    MissingFeatureBox,
    Production,
    Symbol,
    assemble_variant,
)
from typeforge.language import LanguageRuntime, compose_language
from typeforge.metrics import (
    TypeUniverse,
    count_expression_languages,
    enumerate_languages,
    nar,
    ocr,
)
from typeforge.orchestration import CompilationHelper, PriorityOrder
from typeforge.plugins import GeneratorConfig, collect_syntax_elements, generate
from typeforge.positions import LineIndex
from typeforge.scope_index import FenwickScopeIndex
from typeforge.typelang import UnknownHook, parse_program

REPO = Path(__file__).resolve().parent.parent
GOLDEN = REPO / "tests" / "golden" / "assignlang_session.json"


def report(name: str) -> None:
    print(f"\nACCEPTANCE {name}: PASS")


# ---------------------------------------------------------------------------
# Criterion 1: metrics exactness


def test_metrics_exactness():
    start = time.time()
    universe = TypeUniverse.from_parts(
        ["int", "double"],
        [("+", ["int"]), ("+", ["double"]), ("*", ["int"]), ("*", ["double"])],
    )
    assert count_expression_languages(universe) == 9

    languages = [
        frozenset({"int", "+"}),
        frozenset({"bool", "int", "+", "*", "=="}),
        frozenset({"double", "+", "*"}),
    ]
    assert nar("+", languages) == Fraction(1)
    assert nar("*", languages) == Fraction(2, 3)
    assert nar("==", languages) == Fraction(1, 3)
    assert ocr("+", "int", languages) == Fraction(1)
    assert ocr("*", "int", languages) == Fraction(1, 2)
    assert ocr("==", "int", languages) == Fraction(1, 2)
    elapsed = time.time() - start
    assert elapsed < 1.0, f"metrics took {elapsed:.2f}s"
    report("metrics exactness")


# ---------------------------------------------------------------------------
# Criterion 2: oracle equivalence (enumeration vs closed form)


def test_oracle_equivalence():
    # Neither side depends on operator names, only on the multiset of
    # signature type-sets, so enumerating every multiset of nonempty
    # subsets covers every universe with |U| <= 4, |O| <= 6 exactly.
    start = time.time()
    checked = 0
    for n in range(0, 5):
        type_names = [f"t{i}" for i in range(n)]
        subsets = [
            [type_names[i] for i in range(n) if mask & (1 << i)]
            for mask in range(1, 1 << n)
        ]
        for m in range(0, 7):
            if n == 0 and m > 0:
                continue
            for combo in itertools.combinations_with_replacement(
                range(len(subsets)), m
            ):
                universe = TypeUniverse.from_parts(
                    type_names, [(f"op{j}", subsets[k]) for j, k in enumerate(combo)]
                )
                assert len(enumerate_languages(universe)) == count_expression_languages(
                    universe
                )
                checked += 1
    assert checked == 56072

    rng = random.Random(20240817)
    for _ in range(200):
        n = rng.randint(0, 8)
        m = rng.randint(0, 8)
        type_names = [f"t{i}" for i in range(n)]
        ops = []
        for j in range(m):
            if not type_names:
                break
            # Duplicate names exercise multi-signature operators.
            name = f"op{rng.randint(0, max(1, m // 2))}"
            ops.append((name, rng.sample(type_names, rng.randint(1, n))))
        universe = TypeUniverse.from_parts(type_names, ops)
        assert len(enumerate_languages(universe)) == count_expression_languages(universe)
    elapsed = time.time() - start
    assert elapsed < 30.0, f"oracle equivalence took {elapsed:.1f}s"
    report(f"oracle equivalence ({checked} exhaustive + 200 random universes, {elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# Criterion 3: assignment-role semantics on the assignlang fixture


def test_assignment_role_semantics():
    bundle = load_demo("assignlang")
    runtime = LanguageRuntime(bundle.language)
    text = bundle.programs["assignment"]
    result = runtime.check_file("assignment.demo", text)
    li = LineIndex(text)

    definitions = [e for e in result.effects if isinstance(e, BindingDefined)]
    references = [e for e in result.effects if isinstance(e, ReferenceRecorded)]
    diagnostics = [e for e in result.effects if isinstance(e, DiagnosticEmitted)]

    assert len(definitions) == 1
    assert li.line_of_byte(definitions[0].entry.range[0]) == 0
    assert str(definitions[0].entry.entry_type) == "Int"

    assert len(references) == 1
    assert li.line_of_byte(references[0].entry.range[0]) == 1

    assert len(diagnostics) == 1
    assert diagnostics[0].event.code == "TypeMismatch"
    assert li.line_of_byte(diagnostics[0].event.range[0]) == 2

    expected = bundle.expected["assignment"]
    assert len(definitions) == expected["effects"]["definitions"]
    assert len(references) == expected["effects"]["references"]
    assert [
        {"code": d.code, "line": li.line_of_byte(d.range[0])}
        for d in result.diagnostics
    ] == expected["diagnostics"]
    report("assignment-role semantics")


# ---------------------------------------------------------------------------
# Criterion 4: scope index equivalence


class _LinearScanOracle:
    def __init__(self):
        self.intervals = {}

    def insert(self, iid, start, end, fold):
        self.intervals[iid] = (start, end, fold)

    def remove_subtree(self, iid):
        start, end, _ = self.intervals[iid]
        doomed = sorted(
            other
            for other, (s, e, _) in self.intervals.items()
            if start <= s and e <= end
        )
        for other in doomed:
            del self.intervals[other]
        return doomed

    def depth(self, offset):
        return sum(1 for s, e, _ in self.intervals.values() if s <= offset < e)

    def innermost(self, offset):
        best = None
        for iid, (s, e, _) in self.intervals.items():
            if s <= offset < e and (best is None or e - s < best[1]):
                best = (iid, e - s)
        return best[0] if best else None

    def folds(self, line_index):
        rows = sorted((s, e) for s, e, fold in self.intervals.values() if fold)
        return [
            (line_index.line_of_byte(s), line_index.line_of_byte(max(s, e - 1)))
            for s, e in rows
        ]


def _random_nested_intervals(rng, size, depth=3):
    intervals = [(0, size, True)]

    def split(lo, hi, level):
        if level == 0 or hi - lo < 4:
            return
        points = sorted(rng.sample(range(lo, hi), min(2 * rng.randint(0, 3), hi - lo)))
        for i in range(0, len(points) - 1, 2):
            s, e = points[i], points[i + 1]
            if e > s:
                intervals.append((s, e, rng.random() < 0.5))
                split(s, e, level - 1)

    split(0, size, depth)
    seen, unique = set(), []
    for s, e, fold in intervals:
        if (s, e) not in seen:
            seen.add((s, e))
            unique.append((s, e, fold))
    return unique


def test_scope_index_equivalence():
    rng = random.Random(31337)
    trials = 1000
    size = 512
    line_index = LineIndex(("x" * 63 + "\n") * (size // 64))
    checks = 0
    for _ in range(trials):
        doc = _random_nested_intervals(rng, size)
        rng.shuffle(doc)
        index = FenwickScopeIndex()
        oracle = _LinearScanOracle()
        for s, e, fold in doc:
            iid = index.insert_scope(
                "f", s, e,
                fold_from="{" if fold else None,
                fold_to="}" if fold else None,
            )
            oracle.insert(iid, s, e, fold)
            fenwick = index._files["f"].fenwick
            bound = math.floor(math.log2(fenwick.capacity)) + 1
            assert fenwick.last_update_touches <= bound
        offsets = rng.sample(range(0, size + 32), 10)
        for offset in offsets:
            assert index.depth("f", offset) == oracle.depth(offset)
            assert index.innermost_scope_at("f", offset) == oracle.innermost(offset)
            checks += 1
        assert index.folding_ranges("f", line_index) == oracle.folds(line_index)
        victim = rng.choice(sorted(oracle.intervals))
        assert sorted(index.remove_scope(victim)) == oracle.remove_subtree(victim)
        for offset in offsets:
            assert index.depth("f", offset) == oracle.depth(offset)
            assert index.innermost_scope_at("f", offset) == oracle.innermost(offset)
            checks += 1
    assert checks >= 10_000
    report(f"scope index equivalence ({trials} trials, {checks} checks)")


# ---------------------------------------------------------------------------
# Criterion 5: executor ordering and invalidation closure


def test_executor_ordering():
    rng = random.Random(6006)
    for _ in range(500):
        names = [f"p{i}" for i in range(rng.randint(1, 5))]
        helper = CompilationHelper(PriorityOrder(names))
        order = PriorityOrder(names)
        executed = []
        expected_fifo = {name: [] for name in names}
        for seq in range(rng.randint(0, 25)):
            pri = rng.choice(names)
            expected_fifo[pri].append(seq)
            helper.schedule(
                helper.make_task(pri, lambda h, p=pri, s=seq: executed.append((p, s)))
            )
        helper.run_all()
        ranks = [order.rank(p) for p, _ in executed]
        assert ranks == sorted(ranks)
        for name in names:
            seqs = [s for p, s in executed if p == name]
            assert seqs == expected_fifo[name]

    # Invalidation equals the brute-force closure oracle.
    for _ in range(100):
        helper = CompilationHelper(PriorityOrder(["global"]))
        units = [helper.create_unit("global")]
        parents = {units[0].id: None}
        for _ in range(rng.randint(1, 60)):
            parent = rng.choice(units)
            unit = helper.create_unit("global", parent=parent)
            parents[unit.id] = parent.id
            units.append(unit)
        edges = set()
        for _ in range(len(units) // 2):
            reader, owner = rng.sample(units, 2)
            helper.record_dependency(reader.id, owner.id)
            edges.add((reader.id, owner.id))

        children = {}
        for child, parent_id in parents.items():
            children.setdefault(parent_id, set()).add(child)
        start = rng.choice(units).id
        closure, frontier = {start}, [start]
        while frontier:
            current = frontier.pop()
            for nxt in children.get(current, set()) | {
                r for r, o in edges if o == current
            }:
                if nxt not in closure:
                    closure.add(nxt)
                    frontier.append(nxt)
        assert helper.invalidate(start) == closure
    report("executor ordering and invalidation closure")


# ---------------------------------------------------------------------------
# Criterion 6: LSP transcript conformance over real stdio


def _normalize(message, uri: str):
    if isinstance(message, dict):
        return {k: _normalize(v, uri) for k, v in message.items()}
    if isinstance(message, list):
        return [_normalize(v, uri) for v in message]
    if isinstance(message, str) and uri in message:
        return message.replace(uri, "file:///WORKSPACE/session.asg")
    return message


def _normalize_ids(messages, request_order):
    id_map = {rid: f"<req-{i}>" for i, rid in enumerate(request_order)}
    out = []
    for message in messages:
        message = dict(message)
        if "id" in message:
            message["id"] = id_map.get(message["id"], message["id"])
        out.append(message)
    return out


def test_lsp_transcript_conformance(tmp_path):
    text = load_demo("assignlang").programs["session"]
    uri = "file://" + str(tmp_path / "session.asg")
    # Shifted request ids prove the comparison is id-insensitive.
    base = 100

    def request(rid, method, params=None):
        return {"jsonrpc": "2.0", "id": rid, "method": method, "params": params or {}}

    def notify(method, params=None):
        return {"jsonrpc": "2.0", "method": method, "params": params or {}}

    requests = [
        request(base + 1, "initialize", {"processId": None, "rootUri": None, "capabilities": {}}),
        notify("initialized"),
        notify("textDocument/didOpen", {"textDocument": {
            "uri": uri, "languageId": "assignlang", "version": 1, "text": text}}),
        request(base + 2, "textDocument/documentSymbol", {"textDocument": {"uri": uri}}),
        request(base + 3, "textDocument/foldingRange", {"textDocument": {"uri": uri}}),
        request(base + 4, "textDocument/hover", {
            "textDocument": {"uri": uri}, "position": {"line": 0, "character": 0}}),
        request(base + 5, "textDocument/definition", {
            "textDocument": {"uri": uri}, "position": {"line": 4, "character": 2}}),
        request(base + 6, "textDocument/references", {
            "textDocument": {"uri": uri},
            "position": {"line": 0, "character": 0},
            "context": {"includeDeclaration": False}}),
        request(base + 7, "textDocument/semanticTokens/full", {"textDocument": {"uri": uri}}),
        request(base + 8, "shutdown"),
        notify("exit"),
    ]

    payload = b""
    for message in requests:
        body = json.dumps(message).encode()
        payload += f"Content-Length: {len(body)}\r\n\r\n".encode() + body

    env = dict(os.environ, PYTHONPATH=str(REPO / "src"))
    proc = subprocess.run(
        [sys.executable, "-m", "typeforge.cli", "serve", "--language", "assignlang", "--stdio"],
        input=payload,
        capture_output=True,
        env=env,
        cwd=REPO,
        timeout=60,
    )
    assert proc.returncode == 0, proc.stderr.decode()

    import io

    stream = io.BytesIO(proc.stdout)
    received = []
    while True:
        try:
            received.append(rpc.read_message(stream))
        except rpc.TransportClosed:
            break

    golden = json.loads(GOLDEN.read_text())
    request_ids = [m["id"] for m in requests if "id" in m]
    golden_ids = [m["id"] for m in golden if "id" in m]
    actual = _normalize_ids([_normalize(m, uri) for m in received], request_ids)
    expected = _normalize_ids(golden, golden_ids)
    assert actual == expected

    # Exactly one response per request; notifications get none.
    ids = [m["id"] for m in received if "id" in m]
    assert sorted(ids) == sorted(request_ids)
    assert len(ids) == len(set(ids))

    # Every emitted token type is inside the advertised legend.
    init = next(m for m in received if m.get("id") == base + 1)
    legend = init["result"]["capabilities"]["semanticTokensProvider"]["legend"]["tokenTypes"]
    tokens = next(m for m in received if m.get("id") == base + 7)["result"]["data"]
    assert tokens
    for i in range(3, len(tokens), 5):
        assert tokens[i] < len(legend)
    report("LSP transcript conformance")


# ---------------------------------------------------------------------------
# Criterion 7: plugin generation


def test_plugin_generation(tmp_path):
    config = GeneratorConfig(
        generator_version="0.1.0",
        clients=("vscode", "neovim", "vim"),
        language_name="assignlang",
        launcher="typeforge serve --language assignlang --stdio --root",
        file_ext="asg",
        bin_path=".",
    )
    elements = collect_syntax_elements(load_demo("assignlang").language)

    first = generate(config, elements, tmp_path / "run1")
    second = generate(config, elements, tmp_path / "run2")
    assert first.files == second.files
    assert first.digest() == second.digest()

    json_outputs = 0
    for rel, digest in first.files.items():
        content = (tmp_path / "run1" / rel).read_text()
        assert "${" not in content, rel
        if rel.endswith(".json"):
            json.loads(content)
            json_outputs += 1
    assert json_outputs >= 4

    vim_syntax = (tmp_path / "run1" / "vim/syntax/assignlang.vim").read_bytes()
    neovim_syntax = (tmp_path / "run1" / "neovim/syntax/assignlang.vim").read_bytes()
    assert vim_syntax == neovim_syntax

    clients = {rel.split("/", 1)[0] for rel in first.files}
    assert clients == {"vscode", "neovim", "vim"}
    report("plugin generation")


# ---------------------------------------------------------------------------
# Criterion 8: variant assembly failure mode


def test_variant_assembly_failure_mode():
    registry = FeatureRegistry([])
    artifact = Artifact(
        "ghostly",
        Production("Lit", (Symbol("INT", True),)),
        {"check-infer": "define Ghost $0"},
    )
    with pytest.raises(MissingFeatureBox) as excinfo:
        compose_language("ghost-lang", [artifact], registry, ["global"], lambda t, f: None)
    assert excinfo.value.missing == (("Type", "Ghost"),)
    # It is a parsing error, and parsing under a variant without the box
    # names the same missing pair.
    from typeforge.typelang import ParseError

    assert isinstance(excinfo.value, ParseError)
    empty_variant = assemble_variant(frozenset(), FeatureRegistry([]))
    with pytest.raises(UnknownHook) as hook_info:
        parse_program("define Ghost $0", empty_variant)
    assert (hook_info.value.kind, hook_info.value.name) == ("Type", "Ghost")
    report("variant assembly failure mode")


# ---------------------------------------------------------------------------
# Retained indicative check: the check-infer role stays small


def test_check_infer_role_size():
    role = demo_data_root() / "assignlang" / "roles" / "assign.tl"
    lines = [line for line in role.read_text().splitlines() if line.strip()]
    assert len(lines) <= 8
    report(f"check-infer role size ({len(lines)} non-empty lines)")
