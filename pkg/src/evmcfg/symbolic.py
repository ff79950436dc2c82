"""Symbolic stack execution and orphan-jump resolution.

Stack items are ints (known 256-bit words) or ``None`` for unknown values.
Only PUSHn, DUPn, SWAPn, POP and AND are modelled; any other instruction
pops ``delta`` items and pushes ``alpha`` unknowns.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Optional

from evmcfg.bytecode import Opcode
from evmcfg.cfg import BasicBlock, Cfg, EdgeKind, TerminatorKind
from evmcfg.kernels import STACK_LIMIT, run_block
from evmcfg.opcodes import INSTRUCTIONS, Instruction

log = logging.getLogger(__name__)

UNKNOWN = None
DEFAULT_FINGERPRINT_DEPTH = 32
DEFAULT_STEP_BUDGET = 10_000_000
MAX_ENTRY_STACKS = 256


def arity_tables(table: tuple[Instruction, ...] = INSTRUCTIONS) -> tuple[bytes, bytes, bool]:
    alpha = bytes(ins.alpha for ins in table)
    delta = bytes(ins.delta for ins in table)
    return alpha, delta, table[0x5F].mnemonic == "PUSH0"


_DEFAULT_ARITY = arity_tables()


class StackOverflow(RuntimeError):
    pass


class SymbolicStack:
    """LIFO of known words and unknowns; ``peek(0)`` is the top."""

    __slots__ = ("items", "underflows")

    def __init__(self, items: Iterable[Optional[int]] = ()):
        # stored bottom -> top
        self.items: list[Optional[int]] = list(items)
        self.underflows = 0

    @classmethod
    def from_top(cls, values: Iterable[Optional[int]]) -> "SymbolicStack":
        return cls(reversed(list(values)))

    def __len__(self) -> int:
        return len(self.items)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymbolicStack) and self.items == other.items

    def __repr__(self) -> str:
        return f"SymbolicStack({self.as_list()!r})"

    def as_list(self) -> list[Optional[int]]:
        """Items from the top down."""
        return self.items[::-1]

    def copy(self) -> "SymbolicStack":
        new = SymbolicStack(self.items)
        new.underflows = self.underflows
        return new

    def push(self, value: Optional[int]) -> None:
        if len(self.items) >= STACK_LIMIT:
            raise StackOverflow("symbolic stack exceeds 1024 items")
        self.items.append(value)

    def pop(self) -> Optional[int]:
        if self.items:
            return self.items.pop()
        self.underflows += 1
        return UNKNOWN

    def peek(self, depth: int = 0) -> Optional[int]:
        if depth < len(self.items):
            return self.items[-1 - depth]
        return UNKNOWN

    def fingerprint(self, depth: int = DEFAULT_FINGERPRINT_DEPTH) -> tuple:
        return tuple(self.items[-depth:]) if depth else ()

    def run(self, ops: bytes, args: list, arity=_DEFAULT_ARITY) -> None:
        alpha, delta, push0 = arity
        status = run_block(self.items, ops, args, alpha, delta, push0)
        if status < 0:
            raise StackOverflow("symbolic stack exceeds 1024 items")
        self.underflows += status


def execute_opcode(stack: SymbolicStack, op: Opcode) -> SymbolicStack:
    """Return the stack after symbolically executing ``op`` (input untouched)."""
    out = stack.copy()
    out.run(bytes((op.byte_value,)), [op.push_argument])
    return out


def execute_sequence(stack: SymbolicStack, ops: Iterable[Opcode]) -> SymbolicStack:
    ops = list(ops)
    out = stack.copy()
    out.run(bytes(op.byte_value for op in ops), [op.push_argument for op in ops])
    return out


@dataclass
class Step:
    """Outcome of executing one block on one entry stack."""

    stack: list  # post-block stack, bottom -> top
    targets: list[int]
    jump_target: Optional[int] = None  # value read for JUMP/JUMPI, None if unknown
    underflows: int = 0
    overflow: bool = False


@dataclass
class ResolutionResult:
    entry_stacks: dict[int, list[tuple]] = field(default_factory=dict)
    unresolved: dict[int, str] = field(default_factory=dict)
    steps: int = 0
    enqueued: int = 0
    visited: set = field(default_factory=set)
    budget_exceeded: bool = False
    timed_out: bool = False
    trace: list[str] = field(default_factory=list)

    @property
    def complete(self) -> bool:
        return not (self.budget_exceeded or self.timed_out)


class BlockExecutor:
    """Executes blocks of a CFG on concrete symbolic stacks.

    Shared by the orphan-jump resolver and by analyses that need to replay
    stack states (re-entrancy detection).
    """

    def __init__(self, cfg: Cfg, table: tuple[Instruction, ...] = INSTRUCTIONS):
        self.cfg = cfg
        self.arity = arity_tables(table)
        self._compiled: dict[int, tuple[bytes, list, int]] = {}

    def _compile(self, offset: int) -> tuple[bytes, list, int]:
        hit = self._compiled.get(offset)
        if hit is None:
            block = self.cfg.blocks[offset]
            body = block.opcodes
            if block.terminator_kind in (TerminatorKind.JUMP, TerminatorKind.JUMPI):
                body = body[:-1]
            hit = (
                bytes(op.byte_value for op in body),
                [op.push_argument for op in body],
                block.last.byte_value,
            )
            self._compiled[offset] = hit
        return hit

    def step(self, offset: int, entry: Iterable[Optional[int]]) -> Step:
        block = self.cfg.blocks[offset]
        ops, args, _ = self._compile(offset)
        stack = list(entry)
        alpha, delta, push0 = self.arity
        status = run_block(stack, ops, args, alpha, delta, push0)
        if status < 0:
            return Step(stack, [], overflow=True)
        kind = block.terminator_kind
        if kind is TerminatorKind.HALT:
            return Step(stack, [], underflows=status)
        if kind is TerminatorKind.FALLTHROUGH:
            return Step(stack, self.cfg.successors(offset), underflows=status)

        # JUMP / JUMPI: read the destination, then consume it (and the condition)
        underflows = status
        if stack:
            target = stack.pop()
        else:
            target = None
            underflows += 1
        targets: list[int] = []
        if kind is TerminatorKind.JUMPI:
            if stack:
                stack.pop()
            else:
                underflows += 1
            nxt = self.cfg.next_block(offset)
            if nxt is not None and self.cfg.has_edge(offset, nxt):
                targets.append(nxt)
        if target is not None and self.cfg.is_valid_target(target) and target not in targets:
            targets.append(target)
        return Step(stack, sorted(targets), jump_target=target, underflows=underflows)


def resolve_orphan_jumps(
    cfg: Cfg,
    fingerprint_depth: int = DEFAULT_FINGERPRINT_DEPTH,
    step_budget: int = DEFAULT_STEP_BUDGET,
    deadline: Optional[float] = None,
    trace: bool = False,
    table: tuple[Instruction, ...] = INSTRUCTIONS,
) -> ResolutionResult:
    """Depth-first walk of ``cfg`` from the entry block with an empty stack.

    Each block is executed on the stack it was reached with. A JUMP only
    continues to the destination read from the stack, so a function body
    shared by several callers returns to each caller separately. An edge is
    never explored twice with stacks whose top ``fingerprint_depth`` items
    agree. Resolved edges are added to ``cfg`` in place.
    """
    result = ResolutionResult()
    if cfg.entry_offset not in cfg.blocks:
        return result
    executor = BlockExecutor(cfg, table)
    visited = result.visited
    seen_diag: set[tuple[str, int]] = set()
    seen_entry: dict[int, set[tuple]] = {}
    unknown_top: set[int] = set()
    queue: list[tuple[int, list]] = [(cfg.entry_offset, [])]
    result.enqueued = 1
    k = fingerprint_depth

    def note(kind: str, offset: int, detail: str) -> None:
        if (kind, offset) not in seen_diag:
            seen_diag.add((kind, offset))
            cfg.diag(kind, offset, detail)

    while queue:
        if result.steps >= step_budget:
            result.budget_exceeded = True
            cfg.diag("StepBudgetExceeded", -1, f"stopped after {result.steps} block executions")
            break
        if deadline is not None and result.steps % 256 == 0 and time.monotonic() > deadline:
            result.timed_out = True
            cfg.diag("Timeout", -1, f"stopped after {result.steps} block executions")
            break
        offset, entry = queue.pop()
        result.steps += 1

        key = tuple(entry)
        known = seen_entry.setdefault(offset, set())
        if key not in known and len(known) < MAX_ENTRY_STACKS:
            known.add(key)
            result.entry_stacks.setdefault(offset, []).append(key)
        if trace:
            result.trace.append(_trace_line(offset, entry, k))

        out = executor.step(offset, entry)
        if out.overflow:
            note("StackOverflow", offset, "symbolic stack exceeded 1024 items")
            continue
        if out.underflows:
            note("StackUnderflow", offset, f"{out.underflows} pops on an empty stack")
        block = cfg.blocks[offset]
        kind = block.terminator_kind
        if kind in (TerminatorKind.JUMP, TerminatorKind.JUMPI):
            target = out.jump_target
            if target is None:
                unknown_top.add(offset)
                note("UnresolvedJump", offset, "jump destination unknown on the symbolic stack")
            elif not cfg.is_valid_target(target):
                note("DanglingTarget", offset, f"stack target {target} is not a JUMPDEST block")
            elif not cfg.has_edge(offset, target):
                cfg.add_edge(offset, target, EdgeKind.ORPHAN_RESOLVED)
                if kind is TerminatorKind.JUMPI:
                    # not a case the static rules cover; reported so it stays visible
                    note("OrphanJumpiResolved", offset, f"true branch {target} taken from the symbolic stack")

        fp = tuple(out.stack[-k:]) if k else ()
        # reversed so the lowest offset is explored first
        for dst in reversed(out.targets):
            edge = (offset, dst, fp)
            if edge in visited:
                continue
            visited.add(edge)
            queue.append((dst, list(out.stack)))
            result.enqueued += 1

    for offset in unknown_top:
        block = cfg.blocks[offset]
        resolved = [d for d, kind in cfg.succ[offset].items() if kind is not EdgeKind.CONDITIONAL_FALSE]
        result.unresolved[offset] = "partially resolved" if resolved else "unresolved"
    return result


def _fmt(value: Optional[int]) -> str:
    return "?" if value is None else hex(value)


def _trace_line(offset: int, stack: list, depth: int) -> str:
    top = stack[-depth:][::-1] if depth else []
    return f"block={offset} depth={len(stack)} top=[{','.join(_fmt(v) for v in top)}]"
