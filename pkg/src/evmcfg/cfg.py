"""Basic blocks, edges and the statically resolvable part of the CFG."""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional

from evmcfg.bytecode import Opcode
from evmcfg.opcodes import HALT_MNEMONICS

log = logging.getLogger(__name__)


class EmptyCode(ValueError):
    pass


class TerminatorKind(str, enum.Enum):
    JUMP = "jump"
    JUMPI = "jumpi"
    HALT = "halt"
    FALLTHROUGH = "fallthrough"


class EdgeKind(str, enum.Enum):
    PUSHED_JUMP = "pushed-jump"
    CONDITIONAL_TRUE = "conditional-true"
    CONDITIONAL_FALSE = "conditional-false"
    FALLTHROUGH = "fallthrough"
    ORPHAN_RESOLVED = "orphan-resolved"
    TO_EXIT = "to-exit"


@dataclass(frozen=True, slots=True)
class Edge:
    from_offset: int
    to_offset: int
    kind: EdgeKind


@dataclass(frozen=True)
class Diagnostic:
    kind: str
    offset: int
    detail: str = ""

    def as_dict(self) -> dict:
        return {"kind": self.kind, "offset": self.offset, "detail": self.detail}


_ENDS_BLOCK = HALT_MNEMONICS | {"JUMP", "JUMPI"}


@dataclass(frozen=True)
class BasicBlock:
    offset: int
    opcodes: tuple[Opcode, ...]

    def __post_init__(self):
        if not self.opcodes:
            raise ValueError("a basic block needs at least one opcode")

    @property
    def last(self) -> Opcode:
        return self.opcodes[-1]

    @property
    def end(self) -> int:
        """Offset one past the last byte of the block."""
        return self.last.next_offset

    @property
    def length(self) -> int:
        return self.end - self.offset

    @property
    def terminator_kind(self) -> TerminatorKind:
        name = self.last.mnemonic
        if name == "JUMP":
            return TerminatorKind.JUMP
        if name == "JUMPI":
            return TerminatorKind.JUMPI
        if name in HALT_MNEMONICS:
            return TerminatorKind.HALT
        return TerminatorKind.FALLTHROUGH

    @property
    def starts_with_jumpdest(self) -> bool:
        return self.opcodes[0].mnemonic == "JUMPDEST"

    def pushed_target(self) -> Optional[int]:
        """Jump target pushed right before the final JUMP/JUMPI, if any."""
        if len(self.opcodes) >= 2 and self.terminator_kind in (TerminatorKind.JUMP, TerminatorKind.JUMPI):
            prev = self.opcodes[-2]
            if prev.push_argument is not None:
                return prev.push_argument
        return None

    def contains(self, mnemonic: str) -> bool:
        return any(op.mnemonic == mnemonic for op in self.opcodes)


@dataclass
class Decoration:
    dispatcher_offsets: frozenset[int] = frozenset()
    fallback_offset: Optional[int] = None
    fallback_confidence: str = "heuristic"
    exit_id: Optional[int] = None
    data_segment_start: Optional[int] = None
    pruned_offsets: frozenset[int] = frozenset()
    pruned_data: bytes = b""


@dataclass
class Cfg:
    """Directed graph of basic blocks keyed by offset.

    Edges are stored as ``succ[from][to] = kind``; at most one edge exists
    per ordered pair of blocks.
    """

    blocks: dict[int, BasicBlock]
    succ: dict[int, dict[int, EdgeKind]] = field(default_factory=dict)
    entry_offset: int = 0
    diagnostics: list[Diagnostic] = field(default_factory=list)
    annotations: Decoration = field(default_factory=Decoration)
    code_length: int = 0

    def __post_init__(self):
        self._order = sorted(self.blocks)
        for off in self._order:
            self.succ.setdefault(off, {})

    @property
    def offsets(self) -> list[int]:
        return self._order

    def refresh_order(self) -> None:
        self._order = sorted(self.blocks)

    def next_block(self, offset: int) -> Optional[int]:
        """Offset of the block that starts right where ``offset``'s block ends."""
        end = self.blocks[offset].end
        return end if end in self.blocks else None

    def add_edge(self, src: int, dst: int, kind: EdgeKind) -> bool:
        out = self.succ.setdefault(src, {})
        if dst in out:
            return False
        out[dst] = kind
        return True

    def remove_block(self, offset: int) -> None:
        del self.blocks[offset]
        self.succ.pop(offset, None)
        for out in self.succ.values():
            out.pop(offset, None)

    def successors(self, offset: int) -> list[int]:
        return sorted(self.succ.get(offset, ()))

    def predecessors(self, offset: int) -> list[int]:
        return sorted(src for src, out in self.succ.items() if offset in out)

    def edges(self) -> Iterator[Edge]:
        for src in sorted(self.succ):
            for dst in sorted(self.succ[src]):
                yield Edge(src, dst, self.succ[src][dst])

    def edge_set(self) -> set[tuple[int, int, str]]:
        return {(e.from_offset, e.to_offset, e.kind.value) for e in self.edges()}

    def has_edge(self, src: int, dst: int) -> bool:
        return dst in self.succ.get(src, ())

    def is_valid_target(self, offset: int) -> bool:
        block = self.blocks.get(offset)
        return block is not None and block.starts_with_jumpdest

    def reachable(self, start: Optional[int] = None) -> set[int]:
        start = self.entry_offset if start is None else start
        if start not in self.blocks:
            return set()
        seen = {start}
        todo = [start]
        while todo:
            cur = todo.pop()
            for nxt in self.succ.get(cur, ()):
                if nxt in self.blocks and nxt not in seen:
                    seen.add(nxt)
                    todo.append(nxt)
        return seen

    def diag(self, kind: str, offset: int, detail: str = "") -> None:
        log.debug("%s at %d: %s", kind, offset, detail)
        self.diagnostics.append(Diagnostic(kind, offset, detail))


def build_blocks(opcodes: Iterable[Opcode]) -> dict[int, BasicBlock]:
    """Partition a decoded opcode stream into basic blocks.

    A block ends after JUMP, JUMPI or any halting instruction and a new one
    starts at every JUMPDEST.
    """
    blocks: dict[int, BasicBlock] = {}
    current: list[Opcode] = []
    for op in opcodes:
        if op.mnemonic == "JUMPDEST" and current:
            blocks[current[0].offset] = BasicBlock(current[0].offset, tuple(current))
            current = []
        current.append(op)
        if op.mnemonic in _ENDS_BLOCK:
            blocks[current[0].offset] = BasicBlock(current[0].offset, tuple(current))
            current = []
    if current:
        blocks[current[0].offset] = BasicBlock(current[0].offset, tuple(current))
    if not blocks:
        raise EmptyCode("no opcodes to partition")
    return blocks


def add_static_edges(blocks: dict[int, BasicBlock], code_length: Optional[int] = None) -> Cfg:
    """Build the partial CFG: every edge that needs no stack simulation.

    The true branch of a JUMPI that is not preceded by a PUSH and the target
    of such a JUMP are left for the symbolic executor.
    """
    if code_length is None:
        code_length = max(b.end for b in blocks.values()) if blocks else 0
    cfg = Cfg(dict(blocks), code_length=code_length)
    for off in cfg.offsets:
        block = cfg.blocks[off]
        kind = block.terminator_kind
        if kind is TerminatorKind.HALT:
            continue
        nxt = cfg.next_block(off)
        if kind is TerminatorKind.FALLTHROUGH:
            if nxt is not None:
                cfg.add_edge(off, nxt, EdgeKind.FALLTHROUGH)
            continue
        if kind is TerminatorKind.JUMPI and nxt is not None:
            cfg.add_edge(off, nxt, EdgeKind.CONDITIONAL_FALSE)
        target = block.pushed_target()
        if target is None:
            continue
        if not cfg.is_valid_target(target):
            why = "beyond end of code" if target >= code_length else "not a JUMPDEST block"
            cfg.diag("DanglingTarget", off, f"pushed target {target} {why}")
            continue
        edge_kind = EdgeKind.PUSHED_JUMP if kind is TerminatorKind.JUMP else EdgeKind.CONDITIONAL_TRUE
        if not cfg.add_edge(off, target, edge_kind):
            # JUMPI whose target is also its fall-through block
            cfg.succ[off][target] = edge_kind
    return cfg
