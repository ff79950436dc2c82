"""Acceptance criteria. Each test prints one PASS/FAIL line."""

import json
import random
import time

import pytest

from evmcfg import batch
from evmcfg.abi import extract_selectors, precision_recall, selectors_from_abi
from evmcfg.batch import BatchEntry, run_batch
from evmcfg.bytecode import decode_opcodes, split_metadata
from evmcfg.cfg import EdgeKind, TerminatorKind
from evmcfg.export import cfg_to_json, emit_dot, parse_cfg_json
from evmcfg.pipeline import AnalysisOptions, analyze_bytes
from evmcfg.reentrancy import detect_reentrancy
from evmcfg.symbolic import SymbolicStack, execute_sequence

from helpers import COMPILED, FIXTURES, SNIPPETS, build, build_fixture, fixture_abi, fixture_bytes, oracle_mismatches
from oracles import PRECISE, STRAIGHT_LINE, run_paths
from test_bytecode import SIMPLEBANK_METADATA
from test_symbolic import TWO_CALL_SITES


@pytest.fixture
def report(capsys):
    def emit(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n[acceptance {number:2d}] {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, detail

    return emit


def test_01_metadata_round_trip(report):
    start = time.perf_counter()
    code = split_metadata(fixture_bytes("SimpleBank")).runtime_code
    result = analyze_bytes(code + bytes.fromhex(SIMPLEBANK_METADATA), "simplebank")
    elapsed = time.perf_counter() - start
    r = result.report
    tail = result.layout.metadata[-2:].hex()
    ok = r.metadata_length == 53 and tail == "0033" and r.compiler_version == "0.6.11" and elapsed < 1.0
    report(1, ok, f"metadata {r.metadata_length} B, tail 0x{tail}, solc {r.compiler_version}, {elapsed:.3f} s")


def test_02_opcode_decoding(report):
    ops = decode_opcodes(bytes.fromhex("6005600301"))
    got = [(o.offset, str(o)) for o in ops]
    stack = execute_sequence(SymbolicStack(), ops).as_list()
    ok = got == [(0, "PUSH1 0x05"), (2, "PUSH1 0x03"), (4, "ADD")] and stack == [None]
    report(2, ok, f"{got} -> stack {['Unknown' if v is None else v for v in stack]}")


def test_03_symbolic_oracle(report):
    start = time.perf_counter()
    exact = oracle_mismatches(10_000, seed=2021, allowed=PRECISE)
    loose = oracle_mismatches(2_000, seed=2022, allowed=STRAIGHT_LINE, exact=False)
    elapsed = time.perf_counter() - start
    ok = not exact and not loose and elapsed < 60
    report(3, ok, f"10000 precise + 2000 full-set programs, {len(exact) + len(loose)} counterexamples, {elapsed:.1f} s")


def test_04_orphan_jumps_on_fixtures(report):
    bad = []
    for name in COMPILED:
        cfg, res = build_fixture(name, decorated=False)
        for off, block in cfg.blocks.items():
            if block.terminator_kind is TerminatorKind.JUMP and off in cfg.reachable() and not cfg.successors(off):
                bad.append((name, off))
            if block.terminator_kind is TerminatorKind.JUMPI and off in cfg.reachable():
                if not any(k is not EdgeKind.CONDITIONAL_FALSE for k in cfg.succ[off].values()):
                    bad.append((name, off))
        for e in cfg.edges():
            if e.kind is not EdgeKind.FALLTHROUGH and e.kind is not EdgeKind.CONDITIONAL_FALSE:
                if not cfg.blocks[e.to_offset].starts_with_jumpdest:
                    bad.append((name, e.to_offset))
        if res.unresolved:
            bad.append((name, sorted(res.unresolved)))
        decorated = analyze_bytes(fixture_bytes(name), name).report
        if decorated.unresolved_jump_offsets:
            bad.append((name, decorated.unresolved_jump_offsets))
    ok = len(COMPILED) >= 5 and "SimpleBank" in COMPILED and not bad
    report(4, ok, f"{len(COMPILED)} fixtures, problems: {bad or 'none'}")


def test_05_infeasible_path_suppression(report):
    cfg, _ = build(TWO_CALL_SITES, decorated=False)
    shared = max(cfg.offsets)
    ours = sorted(cfg.successors(shared))
    concrete = sorted({d for s, d in run_paths(TWO_CALL_SITES, [{}]) if s == shared})
    ok = len(cfg.offsets) == 6 and ours == concrete and len(ours) == 2
    report(5, ok, f"shared JUMP block {shared}: out-edges {ours}, concrete {concrete}")


def test_06_selector_precision_recall(report):
    rows = []
    for name in COMPILED:
        cfg, _ = build_fixture(name)
        pr = precision_recall(extract_selectors(cfg), selectors_from_abi(fixture_abi(name)))
        rows.append((name, pr.precision, pr.recall))
    worst = [r for r in rows if r[1:] != (1.0, 1.0)]
    report(6, not worst, f"{len(rows)} fixtures with ABI, below 1.0: {worst or 'none'}")


def test_07_reentrancy(report):
    def count(name):
        cfg, res = build_fixture(name)
        return len(detect_reentrancy(cfg, res.entry_stacks))

    bank, safe = count("Bank"), count("BankSafe")
    flagged = [n for n in SNIPPETS if count(n) > 0]
    ok = bank >= 1 and safe == 0 and len(SNIPPETS) >= 5 and flagged == SNIPPETS
    report(7, ok, f"Bank {bank}, BankSafe {safe}, snippets flagged {len(flagged)}/{len(SNIPPETS)}")


def _stall(entry, options):
    time.sleep(3600)


def test_08_performance_and_timeout(report, monkeypatch):
    raw = fixture_bytes("Token")
    start = time.perf_counter()
    r = analyze_bytes(raw, "Token").report
    elapsed = time.perf_counter() - start
    default = AnalysisOptions().timeout
    monkeypatch.setattr(batch, "analyze_entry", _stall)
    t0 = time.perf_counter()
    (stalled,) = run_batch([BatchEntry("0x00", "stall")], AnalysisOptions(timeout=0.5), kill_grace=0.5)["reports"]
    killed_after = time.perf_counter() - t0
    ok = (
        r.status.value == "ok"
        and elapsed < 10
        and default == 600
        and stalled["status"] == "failed"
        and stalled["reason"].startswith("timeout")
        and killed_after < 10
    )
    report(
        8,
        ok,
        f"Token {len(raw)} B in {elapsed:.2f} s; default timeout {default:g} s; "
        f"stalled worker killed after {killed_after:.1f} s",
    )


def test_09_serialization(report):
    mismatches = []
    for name in COMPILED:
        a, _ = build_fixture(name)
        b, _ = build_fixture(name)
        doc = cfg_to_json(a)
        text = json.dumps(doc, sort_keys=True)
        back = json.loads(text)
        if back != doc or parse_cfg_json(back) != (set(a.offsets), a.edge_set()):
            mismatches.append((name, "json"))
        if emit_dot(a, name).encode() != emit_dot(b, name).encode():
            mismatches.append((name, "dot"))
    report(9, not mismatches, f"{len(COMPILED)} fixtures, mismatches: {mismatches or 'none'}")


def test_10_batch_robustness(report, tmp_path):
    rng = random.Random(99)
    random_hex = bytes(rng.getrandbits(8) for _ in range(512)).hex()
    entries = [
        BatchEntry(str(FIXTURES / "SimpleBank.hex"), "valid"),
        BatchEntry("0x", "empty"),
        BatchEntry("0x6080604052" + "61aa", "truncated-push"),
        BatchEntry("0x" + random_hex, "random"),
    ]
    summary = run_batch(entries, AnalysisOptions(timeout=60), jobs=2)
    statuses = [r["status"] for r in summary["reports"]]
    expected_ok = statuses[:3] == ["ok", "failed", "ok"] and statuses[3] in ("ok", "partial")
    succeeded = [r for r in summary["reports"] if r["status"] != "failed"]
    aggregate_ok = (
        summary["total"] == 4
        and summary["failed"] == 1
        and summary["ok"] + summary["partial"] == 3
        and summary["success_rate"] == 0.75
        and summary["avg_nodes"] == sum(r["block_count"] for r in succeeded) / 3
    )
    report(10, expected_ok and aggregate_ok, f"statuses {statuses}, success rate {summary['success_rate']}")
