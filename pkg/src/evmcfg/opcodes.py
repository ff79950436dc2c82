"""EVM instruction table: byte -> (mnemonic, alpha, delta, push_width).

``alpha`` is the number of stack items an instruction produces and ``delta``
the number it consumes. DUPn and SWAPn follow the convention of counting the
whole touched window (DUPn: delta=n, alpha=n+1; SWAPn: delta=alpha=n+1), so
the net stack effect is still alpha - delta.

The default table targets the Berlin instruction set (Istanbul additions
CHAINID and SELFBALANCE included). Later revisions are layered on top.
"""

from __future__ import annotations

from typing import NamedTuple


class Instruction(NamedTuple):
    mnemonic: str
    alpha: int
    delta: int
    push_width: int = 0


UNKNOWN = "UNKNOWN"

# (byte, mnemonic, delta, alpha)
_BASE: list[tuple[int, str, int, int]] = [
    (0x00, "STOP", 0, 0),
    (0x01, "ADD", 2, 1),
    (0x02, "MUL", 2, 1),
    (0x03, "SUB", 2, 1),
    (0x04, "DIV", 2, 1),
    (0x05, "SDIV", 2, 1),
    (0x06, "MOD", 2, 1),
    (0x07, "SMOD", 2, 1),
    (0x08, "ADDMOD", 3, 1),
    (0x09, "MULMOD", 3, 1),
    (0x0A, "EXP", 2, 1),
    (0x0B, "SIGNEXTEND", 2, 1),
    (0x10, "LT", 2, 1),
    (0x11, "GT", 2, 1),
    (0x12, "SLT", 2, 1),
    (0x13, "SGT", 2, 1),
    (0x14, "EQ", 2, 1),
    (0x15, "ISZERO", 1, 1),
    (0x16, "AND", 2, 1),
    (0x17, "OR", 2, 1),
    (0x18, "XOR", 2, 1),
    (0x19, "NOT", 1, 1),
    (0x1A, "BYTE", 2, 1),
    (0x1B, "SHL", 2, 1),
    (0x1C, "SHR", 2, 1),
    (0x1D, "SAR", 2, 1),
    (0x20, "KECCAK256", 2, 1),
    (0x30, "ADDRESS", 0, 1),
    (0x31, "BALANCE", 1, 1),
    (0x32, "ORIGIN", 0, 1),
    (0x33, "CALLER", 0, 1),
    (0x34, "CALLVALUE", 0, 1),
    (0x35, "CALLDATALOAD", 1, 1),
    (0x36, "CALLDATASIZE", 0, 1),
    (0x37, "CALLDATACOPY", 3, 0),
    (0x38, "CODESIZE", 0, 1),
    (0x39, "CODECOPY", 3, 0),
    (0x3A, "GASPRICE", 0, 1),
    (0x3B, "EXTCODESIZE", 1, 1),
    (0x3C, "EXTCODECOPY", 4, 0),
    (0x3D, "RETURNDATASIZE", 0, 1),
    (0x3E, "RETURNDATACOPY", 3, 0),
    (0x3F, "EXTCODEHASH", 1, 1),
    (0x40, "BLOCKHASH", 1, 1),
    (0x41, "COINBASE", 0, 1),
    (0x42, "TIMESTAMP", 0, 1),
    (0x43, "NUMBER", 0, 1),
    (0x44, "DIFFICULTY", 0, 1),
    (0x45, "GASLIMIT", 0, 1),
    (0x46, "CHAINID", 0, 1),
    (0x47, "SELFBALANCE", 0, 1),
    (0x50, "POP", 1, 0),
    (0x51, "MLOAD", 1, 1),
    (0x52, "MSTORE", 2, 0),
    (0x53, "MSTORE8", 2, 0),
    (0x54, "SLOAD", 1, 1),
    (0x55, "SSTORE", 2, 0),
    (0x56, "JUMP", 1, 0),
    (0x57, "JUMPI", 2, 0),
    (0x58, "PC", 0, 1),
    (0x59, "MSIZE", 0, 1),
    (0x5A, "GAS", 0, 1),
    (0x5B, "JUMPDEST", 0, 0),
    (0xA0, "LOG0", 2, 0),
    (0xA1, "LOG1", 3, 0),
    (0xA2, "LOG2", 4, 0),
    (0xA3, "LOG3", 5, 0),
    (0xA4, "LOG4", 6, 0),
    (0xF0, "CREATE", 3, 1),
    (0xF1, "CALL", 7, 1),
    (0xF2, "CALLCODE", 7, 1),
    (0xF3, "RETURN", 2, 0),
    (0xF4, "DELEGATECALL", 6, 1),
    (0xF5, "CREATE2", 4, 1),
    (0xFA, "STATICCALL", 6, 1),
    (0xFD, "REVERT", 2, 0),
    (0xFE, "INVALID", 0, 0),
    (0xFF, "SELFDESTRUCT", 1, 0),
]

# Instructions added by later forks, keyed by revision name.
_LATER: dict[str, list[tuple[int, str, int, int]]] = {
    "london": [(0x48, "BASEFEE", 0, 1)],
    "shanghai": [(0x5F, "PUSH0", 0, 1)],
}
REVISIONS = ("berlin", "london", "shanghai")


def build_table(revision: str = "berlin") -> tuple[Instruction, ...]:
    """Return a 256-entry tuple indexed by byte value."""
    if revision not in REVISIONS:
        raise ValueError(f"unknown EVM revision {revision!r}; expected one of {REVISIONS}")
    table: list[Instruction] = [Instruction(UNKNOWN, 0, 0)] * 256
    rows = list(_BASE)
    for rev in REVISIONS[1 : REVISIONS.index(revision) + 1]:
        rows.extend(_LATER[rev])
    for byte, name, delta, alpha in rows:
        table[byte] = Instruction(name, alpha, delta)
    for n in range(1, 33):
        table[0x5F + n] = Instruction(f"PUSH{n}", 1, 0, n)
    for n in range(1, 17):
        table[0x7F + n] = Instruction(f"DUP{n}", n + 1, n)
        table[0x8F + n] = Instruction(f"SWAP{n}", n + 1, n + 1)
    return tuple(table)


INSTRUCTIONS = build_table()
"""Default instruction table (Berlin)."""

BY_NAME: dict[str, int] = {ins.mnemonic: byte for byte, ins in enumerate(INSTRUCTIONS) if ins.mnemonic != UNKNOWN}

# Byte values used throughout the analysis.
STOP = 0x00
AND = 0x16
POP = 0x50
SSTORE = 0x55
JUMP = 0x56
JUMPI = 0x57
JUMPDEST = 0x5B
PUSH1 = 0x60
PUSH4 = 0x63
PUSH32 = 0x7F
DUP1 = 0x80
DUP16 = 0x8F
SWAP1 = 0x90
SWAP16 = 0x9F
EQ = 0x14
CALL = 0xF1
RETURN = 0xF3
REVERT = 0xFD
INVALID = 0xFE
SELFDESTRUCT = 0xFF

HALT_MNEMONICS = frozenset({"STOP", "REVERT", "RETURN", "INVALID", "SELFDESTRUCT", UNKNOWN})


def is_push(byte: int) -> bool:
    return PUSH1 <= byte <= PUSH32


def push_width(byte: int) -> int:
    return byte - 0x5F if PUSH1 <= byte <= PUSH32 else 0
