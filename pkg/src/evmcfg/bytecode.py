"""Hex decoding, metadata separation and opcode decoding."""

from __future__ import annotations

import enum
import logging
import re
from dataclasses import dataclass, field
from typing import Optional

from evmcfg import cbor
from evmcfg.kernels import decode_stream
from evmcfg.opcodes import INSTRUCTIONS, Instruction, push_width

log = logging.getLogger(__name__)

METADATA_KEYS = frozenset({"solc", "ipfs", "bzzr0", "bzzr1", "experimental"})


class BytecodeError(ValueError):
    pass


class OddHexLength(BytecodeError):
    pass


class NonHexCharacter(BytecodeError):
    def __init__(self, position: int, char: str):
        super().__init__(f"non-hex character {char!r} at position {position}")
        self.position = position
        self.char = char


_WS = re.compile(r"[ \t\n\r\f\v]")


def decode_hex(text: str) -> bytes:
    """Decode hex text; accepts a ``0x`` prefix and ASCII whitespace anywhere."""
    lead = len(text) - len(text.lstrip())
    start = lead + 2 if text[lead : lead + 2] in ("0x", "0X") else 0
    digits = []
    for pos in range(start, len(text)):
        ch = text[pos]
        if ch in "0123456789abcdefABCDEF":
            digits.append(ch)
        elif not _WS.match(ch):
            raise NonHexCharacter(pos, ch)
    if len(digits) % 2:
        raise OddHexLength(f"hex text has an odd number of digits ({len(digits)})")
    return bytes.fromhex("".join(digits))


class MetadataScheme(str, enum.Enum):
    CBOR_SOLC = "cbor-solc"
    CBOR_BZZR = "cbor-bzzr"
    EXPERIMENTAL = "experimental"
    NONE = "none"


@dataclass(frozen=True)
class CodeLayout:
    runtime_code: bytes
    metadata: bytes = b""
    compiler_version: Optional[tuple[int, int, int]] = None
    metadata_scheme: MetadataScheme = MetadataScheme.NONE
    metadata_fields: dict = field(default_factory=dict, compare=False)

    @property
    def compiler_version_str(self) -> Optional[str]:
        if self.compiler_version is None:
            return None
        return ".".join(map(str, self.compiler_version))


def _parse_version(value) -> Optional[tuple[int, int, int]]:
    if isinstance(value, bytes) and len(value) == 3:
        return value[0], value[1], value[2]
    if isinstance(value, str):
        # prerelease builds store the full version string
        m = re.match(r"v?(\d+)\.(\d+)\.(\d+)", value)
        if m:
            return int(m[1]), int(m[2]), int(m[3])
    return None


def split_metadata(raw: bytes) -> CodeLayout:
    """Split trailing compiler metadata off ``raw``.

    The last two bytes hold the big-endian length of the CBOR map in front
    of them. The candidate is accepted when it decodes to a map with at
    least one known metadata key; anything else leaves ``raw`` whole.
    """
    raw = bytes(raw)
    if len(raw) < 2:
        return CodeLayout(raw)
    length = int.from_bytes(raw[-2:], "big")
    start = len(raw) - 2 - length
    if length == 0 or start < 0:
        return CodeLayout(raw)
    candidate = raw[start:-2]
    if candidate[0] >> 5 != 5:
        return CodeLayout(raw)
    try:
        fields = cbor.loads(candidate)
    except cbor.CBORDecodeError as exc:
        log.info("trailing bytes look like metadata but do not decode: %s", exc)
        return CodeLayout(raw)
    if not isinstance(fields, dict) or not all(isinstance(k, str) for k in fields):
        return CodeLayout(raw)
    known = METADATA_KEYS.intersection(fields)
    if not known:
        log.info("trailing CBOR map has no known metadata keys: %s", sorted(fields))
        return CodeLayout(raw)
    unknown = set(fields) - METADATA_KEYS
    if unknown:
        log.info("metadata map carries unrecognised keys %s", sorted(unknown))
    if "experimental" in fields:
        scheme = MetadataScheme.EXPERIMENTAL
    elif "bzzr0" in fields or "bzzr1" in fields:
        scheme = MetadataScheme.CBOR_BZZR
    else:
        scheme = MetadataScheme.CBOR_SOLC
    return CodeLayout(
        runtime_code=raw[:start],
        metadata=raw[start:],
        compiler_version=_parse_version(fields.get("solc")),
        metadata_scheme=scheme,
        metadata_fields=fields,
    )


@dataclass(frozen=True, slots=True)
class Opcode:
    offset: int
    byte_value: int
    mnemonic: str
    alpha: int
    delta: int
    push_argument: Optional[int] = None

    @property
    def push_width(self) -> int:
        return push_width(self.byte_value)

    @property
    def size(self) -> int:
        return 1 + self.push_width

    @property
    def next_offset(self) -> int:
        return self.offset + self.size

    def is_push(self) -> bool:
        return self.push_argument is not None

    def __str__(self) -> str:
        if self.push_argument is None:
            return self.mnemonic
        return f"{self.mnemonic} 0x{self.push_argument:0{2 * self.push_width}x}"


def decode_opcodes(code: bytes, table: tuple[Instruction, ...] = INSTRUCTIONS) -> list[Opcode]:
    """Decode ``code`` into opcodes in a single linear pass.

    Bytes missing from a trailing PUSH are treated as zeros. Unassigned byte
    values decode with mnemonic ``UNKNOWN``.
    """
    ops = []
    for offset, byte, arg in decode_stream(bytes(code)):
        ins = table[byte]
        ops.append(Opcode(offset, byte, ins.mnemonic, ins.alpha, ins.delta, arg))
    return ops


def encode_opcodes(ops: list[Opcode]) -> bytes:
    """Inverse of :func:`decode_opcodes` (a truncated PUSH comes back padded)."""
    out = bytearray()
    for op in ops:
        out.append(op.byte_value)
        if op.push_argument is not None:
            out += op.push_argument.to_bytes(op.push_width, "big")
    return bytes(out)
