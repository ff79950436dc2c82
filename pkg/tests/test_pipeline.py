import pytest

from evmcfg.pipeline import AnalysisOptions, Status, analyze, analyze_bytes, exit_code

from helpers import FIXTURES, fixture_abi, fixture_bytes


def test_simplebank_report():
    result = analyze(str(FIXTURES / "SimpleBank.hex"), AnalysisOptions(abi=fixture_abi("SimpleBank")))
    r = result.report
    assert r.status is Status.OK and r.reason is None
    assert r.contract_id == "SimpleBank.hex"
    assert r.compiler_version == "0.6.11"
    assert r.metadata_length == 53
    assert r.unresolved_jump_offsets == []
    assert r.precision_recall["precision"] == 1.0
    assert r.block_count == len(result.cfg.blocks)
    assert set(r.timings) >= {"parse", "blocks", "symbolic", "data_separation", "decoration", "selectors", "total"}


def test_literal_hex_and_address_inputs():
    r = analyze("0x6005600301").report
    assert r.status is Status.OK and r.contract_id == "<hex>"
    calls = []

    def fake(address, cache_dir=None):
        calls.append(address)
        return "0x" + fixture_bytes("Deposit100").hex()

    addr = "0x" + "ab" * 20
    r = analyze(addr, fetcher=fake).report
    assert calls == [addr] and r.contract_id == addr and r.status is Status.OK


@pytest.mark.parametrize(
    "source,reason",
    [("", "EmptyCode"), ("0x123", "OddHexLength"), ("0xzz", "NonHexCharacter")],
)
def test_failures_are_reported(source, reason):
    r = analyze(source).report
    assert r.status is Status.FAILED and r.reason.startswith(reason)
    assert exit_code(r.status) == 1


def test_metadata_only_input_fails():
    raw = fixture_bytes("SimpleBank")
    meta = raw[-53:]
    r = analyze_bytes(meta).report
    assert r.status is Status.FAILED and "EmptyCode" in r.reason


def test_budget_gives_partial():
    r = analyze_bytes(fixture_bytes("Token"), options=AnalysisOptions(step_budget=5)).report
    assert r.status is Status.PARTIAL and r.reason == "StepBudgetExceeded"
    assert exit_code(r.status) == 2
    assert r.reentrancy_findings == []


def test_timeout_gives_partial():
    r = analyze_bytes(fixture_bytes("Token"), options=AnalysisOptions(timeout=0)).report
    assert r.status is Status.PARTIAL and r.reason == "timeout"


def test_unresolved_jump_keeps_ok():
    r = analyze("0x3656" + "5b00").report
    assert r.status is Status.OK
    assert r.unresolved_jump_offsets == [0]


def test_malformed_abi_fails_cleanly():
    r = analyze_bytes(fixture_bytes("Deposit100"), options=AnalysisOptions(abi="[1,2]")).report
    assert r.status is Status.FAILED and "MalformedAbi" in r.reason


def test_trace_option():
    result = analyze_bytes(fixture_bytes("Deposit100"), options=AnalysisOptions(trace=True))
    assert result.trace[0] == "block=0 depth=0 top=[]"
    assert analyze_bytes(fixture_bytes("Deposit100")).trace == []
