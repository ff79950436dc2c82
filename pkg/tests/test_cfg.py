import pytest
from hypothesis import given, strategies as st

from evmcfg.bytecode import decode_opcodes, split_metadata
from evmcfg.cfg import EdgeKind, EmptyCode, TerminatorKind, add_static_edges, build_blocks

from helpers import COMPILED, fixture_bytes
from oracles import assemble


def blocks_of(code):
    return build_blocks(decode_opcodes(code))


def test_empty_code_rejected():
    with pytest.raises(EmptyCode):
        build_blocks([])


def test_single_block_without_terminator():
    blocks = blocks_of(bytes.fromhex("6005600301"))
    assert list(blocks) == [0]
    assert blocks[0].terminator_kind is TerminatorKind.FALLTHROUGH
    cfg = add_static_edges(blocks, 5)
    assert cfg.successors(0) == []


def test_jumpdest_opens_block_and_fallthrough_edge():
    code = assemble("PUSH1 1", "a:", "JUMPDEST", "STOP")
    cfg = add_static_edges(blocks_of(code), len(code))
    assert cfg.offsets == [0, 2]
    assert cfg.succ[0] == {2: EdgeKind.FALLTHROUGH}
    assert cfg.blocks[2].starts_with_jumpdest


def test_static_edges_for_pushed_jumps():
    code = assemble(
        "PUSH1 1", "PUSH1 @t", "JUMPI",
        "PUSH1 @t", "JUMP",
        "t:", "JUMPDEST", "STOP",
    )
    cfg = add_static_edges(blocks_of(code), len(code))
    t = cfg.offsets[-1]
    assert cfg.succ[0] == {5: EdgeKind.CONDITIONAL_FALSE, t: EdgeKind.CONDITIONAL_TRUE}
    assert cfg.succ[5] == {t: EdgeKind.PUSHED_JUMP}
    assert cfg.predecessors(t) == [0, 5]


def test_orphan_jump_has_no_static_edge():
    code = assemble("CALLVALUE", "JUMP", "JUMPDEST", "STOP")
    cfg = add_static_edges(blocks_of(code), len(code))
    assert cfg.succ[0] == {}


def test_dangling_pushed_target_diagnosed():
    # target 3 is the STOP, not a JUMPDEST
    code = assemble("PUSH1 3", "JUMP", "STOP")
    cfg = add_static_edges(blocks_of(code), len(code))
    assert cfg.succ[0] == {}
    assert [d.kind for d in cfg.diagnostics] == ["DanglingTarget"]


def test_unknown_byte_terminates_block():
    cfg = add_static_edges(blocks_of(bytes([0x0C, 0x00])), 2)
    assert cfg.offsets == [0, 1]
    assert cfg.blocks[0].terminator_kind is TerminatorKind.HALT


def test_deposit100_block_structure():
    code = split_metadata(fixture_bytes("Deposit100")).runtime_code
    cfg = add_static_edges(blocks_of(code), len(code))
    assert cfg.offsets == [0, 12, 28, 33, 39, 41, 49, 53, 132]
    assert cfg.blocks[132].last.mnemonic == "INVALID"
    assert cfg.blocks[53].terminator_kind is TerminatorKind.JUMP
    assert cfg.successors(53) == []
    assert cfg.succ[33] == {41: EdgeKind.PUSHED_JUMP}


def _partition_holds(code):
    ops = decode_opcodes(code)
    blocks = build_blocks(ops)
    flat = [op for b in blocks.values() for op in b.opcodes]
    assert flat == ops
    for b in blocks.values():
        for op in b.opcodes[:-1]:
            assert op.mnemonic not in ("JUMP", "JUMPI", "STOP", "RETURN", "REVERT", "INVALID", "SELFDESTRUCT", "UNKNOWN")
        for op in b.opcodes[1:]:
            assert op.mnemonic != "JUMPDEST"


@given(st.binary(min_size=1, max_size=300))
def test_partition_property_random(code):
    _partition_holds(code)


@pytest.mark.parametrize("name", COMPILED)
def test_partition_property_fixtures(name):
    _partition_holds(split_metadata(fixture_bytes(name)).runtime_code)


@given(st.binary(min_size=1, max_size=300))
def test_static_edges_target_blocks(code):
    cfg = add_static_edges(blocks_of(code), len(code))
    for e in cfg.edges():
        assert e.to_offset in cfg.blocks
        if e.kind in (EdgeKind.PUSHED_JUMP, EdgeKind.CONDITIONAL_TRUE):
            assert cfg.blocks[e.to_offset].starts_with_jumpdest
