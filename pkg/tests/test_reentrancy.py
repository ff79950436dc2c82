import pytest

from evmcfg.reentrancy import detect_reentrancy

from helpers import SNIPPETS, build, build_fixture
from oracles import assemble

CALL_ARGS = ["PUSH1 0"] * 5


def findings(code, **kw):
    cfg, res = build(code)
    return detect_reentrancy(cfg, res.entry_stacks, **kw)


def fixture_findings(name):
    cfg, res = build_fixture(name)
    return detect_reentrancy(cfg, res.entry_stacks)


def test_bank_flagged():
    found = fixture_findings("Bank")
    assert len(found) >= 1
    f = found[0]
    assert f.address_known is False and f.confidence == "high"
    assert f.store_offset > f.call_offset
    assert f.as_dict()["path_witness"] == list(f.path_witness)


def test_state_update_first_is_clean():
    assert fixture_findings("BankSafe") == []


@pytest.mark.parametrize("name", SNIPPETS)
def test_snippets_flagged(name):
    assert fixture_findings(name)


@pytest.mark.parametrize("name", ["SimpleBank", "Token", "Wallet", "Factory", "Deposit100"])
def test_clean_fixtures(name):
    assert fixture_findings(name) == []


def test_call_then_store_same_block():
    code = assemble(*CALL_ARGS, "CALLER", "GAS", "CALL", "POP", "PUSH1 1", "PUSH1 0", "SSTORE", "STOP")
    (f,) = findings(code)
    assert f.path_witness == (0,)


def test_known_address_not_flagged():
    code = assemble(*CALL_ARGS, "PUSH20 0x1234", "GAS", "CALL", "POP", "PUSH1 1", "PUSH1 0", "SSTORE", "STOP")
    assert findings(code) == []


def test_store_before_call_not_flagged():
    code = assemble("PUSH1 1", "PUSH1 0", "SSTORE", *CALL_ARGS, "CALLER", "GAS", "CALL", "STOP")
    assert findings(code) == []


def test_store_in_later_block():
    code = assemble(
        *CALL_ARGS, "CALLER", "GAS", "CALL", "PUSH1 @w", "JUMPI", "STOP",
        "w:", "JUMPDEST", "PUSH1 1", "PUSH1 0", "SSTORE", "STOP",
    )
    (f,) = findings(code)
    assert f.path_witness[0] == 0 and f.path_witness[-1] == f.store_offset - 5


def test_shared_helper_is_path_sensitive():
    # caller A calls out then returns via a helper; caller B writes storage
    # after the same helper. A's call must not reach B's store.
    code = assemble(
        "CALLVALUE", "PUSH1 @b", "JUMPI",
        *CALL_ARGS, "CALLER", "GAS", "CALL", "POP",
        "PUSH1 @enda", "PUSH1 @helper", "JUMP",
        "enda:", "JUMPDEST", "STOP",
        "b:", "JUMPDEST", "PUSH1 @endb", "PUSH1 @helper", "JUMP",
        "endb:", "JUMPDEST", "PUSH1 1", "PUSH1 0", "SSTORE", "STOP",
        "helper:", "JUMPDEST", "JUMP",
    )
    assert findings(code) == []


def test_callcode_family_opt_in():
    code = assemble(*CALL_ARGS, "CALLER", "GAS", "CALLCODE", "POP", "PUSH1 1", "PUSH1 0", "SSTORE", "STOP")
    assert findings(code) == []
    assert findings(code, call_mnemonics=("CALL", "CALLCODE"))


def test_missing_stack_state_falls_back_to_graph():
    code = assemble(*CALL_ARGS, "CALLER", "GAS", "CALL", "PUSH1 @w", "JUMPI", "STOP",
                    "w:", "JUMPDEST", "PUSH1 1", "PUSH1 0", "SSTORE", "STOP")
    cfg, _ = build(code)
    (f,) = detect_reentrancy(cfg, {})
    assert f.confidence == "low"
    assert "MissingStackState" in {d.kind for d in cfg.diagnostics}
