"""Re-entrancy: an SSTORE reachable after a CALL to an address the
symbolic stack cannot pin down."""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from evmcfg.cfg import Cfg
from evmcfg.symbolic import BlockExecutor, SymbolicStack, execute_sequence

log = logging.getLogger(__name__)

MAX_STATES = 200_000


@dataclass(frozen=True)
class ReentrancyFinding:
    call_offset: int
    store_offset: int
    path_witness: tuple[int, ...]
    address_known: bool = False
    confidence: str = "high"  # "low" when the CALL block has no recorded stack

    def as_dict(self) -> dict:
        return {
            "call_offset": self.call_offset,
            "store_offset": self.store_offset,
            "path_witness": list(self.path_witness),
            "address_known": self.address_known,
            "confidence": self.confidence,
        }


def _stores(cfg: Cfg, offset: int, after: int = -1) -> list[int]:
    return [op.offset for op in cfg.blocks[offset].opcodes if op.mnemonic == "SSTORE" and op.offset > after]


def _path(parents: dict, state) -> list[int]:
    out = []
    while state is not None:
        out.append(state[0])
        state = parents[state]
    return out[::-1]


def _search_with_stack(cfg: Cfg, executor: BlockExecutor, origin: int, entry: tuple, depth: int):
    """BFS over (block, stack) states after ``origin``; yields (store block, path)."""
    first = executor.step(origin, entry)
    parents: dict = {}
    queue = deque()
    root = (origin, None)
    parents[root] = None
    for dst in first.targets:
        if cfg.has_edge(origin, dst):
            state = (dst, tuple(first.stack))
            key = (dst, state[1][-depth:])
            if key not in parents:
                parents[key] = root
                queue.append((key, state))
    while queue and len(parents) < MAX_STATES:
        key, (offset, stack) = queue.popleft()
        if _stores(cfg, offset):
            yield offset, _path(parents, key)
        out = executor.step(offset, stack)
        if out.overflow:
            continue
        for dst in out.targets:
            if not cfg.has_edge(offset, dst):
                continue
            nkey = (dst, tuple(out.stack[-depth:]))
            if nkey not in parents:
                parents[nkey] = key
                queue.append((nkey, (dst, tuple(out.stack))))


def _search_graph(cfg: Cfg, origin: int):
    parents = {origin: None}
    queue = deque(d for d in cfg.successors(origin) if d in cfg.blocks)
    for d in queue:
        parents[d] = origin
    while queue:
        offset = queue.popleft()
        if _stores(cfg, offset):
            path = [offset]
            while parents[path[-1]] is not None:
                path.append(parents[path[-1]])
            yield offset, path[::-1]
        for dst in cfg.successors(offset):
            if dst in cfg.blocks and dst not in parents:
                parents[dst] = offset
                queue.append(dst)


def detect_reentrancy(
    cfg: Cfg,
    stack_states: Mapping[int, Sequence[tuple]],
    call_mnemonics: tuple[str, ...] = ("CALL",),
    fingerprint_depth: int = 32,
) -> list[ReentrancyFinding]:
    """Find SSTOREs that may run after a CALL with an undetermined address.

    ``stack_states`` maps block offsets to the entry stacks (bottom -> top
    tuples) recorded while resolving jumps. Reachability follows the same
    stack-driven transitions as jump resolution, so a return jump only goes
    back to the caller the stack says it came from.
    """
    executor = BlockExecutor(cfg)
    best: dict[tuple[int, int], ReentrancyFinding] = {}

    def record(finding: ReentrancyFinding) -> None:
        key = (finding.call_offset, finding.store_offset)
        old = best.get(key)
        if old is None or len(finding.path_witness) < len(old.path_witness):
            best[key] = finding

    for offset in cfg.offsets:
        block = cfg.blocks[offset]
        for idx, op in enumerate(block.opcodes):
            if op.mnemonic not in call_mnemonics:
                continue
            entries = stack_states.get(offset)
            if not entries:
                cfg.diag("MissingStackState", offset, f"{op.mnemonic} at {op.offset} never reached symbolically")
                confidence = "low"
                unknown_entries: list[Optional[tuple]] = [None]
            else:
                confidence = "high"
                unknown_entries = []
                for entry in entries:
                    stack = execute_sequence(SymbolicStack(entry), block.opcodes[:idx])
                    if stack.peek(1) is None:  # address operand
                        unknown_entries.append(entry)
                if not unknown_entries:
                    continue
            for store in _stores(cfg, offset, after=op.offset):
                record(ReentrancyFinding(op.offset, store, (offset,), False, confidence))
            for entry in unknown_entries:
                if entry is None:
                    hits = _search_graph(cfg, offset)
                else:
                    hits = _search_with_stack(cfg, executor, offset, entry, fingerprint_depth)
                for store_block, path in hits:
                    for store in _stores(cfg, store_block):
                        record(ReentrancyFinding(op.offset, store, tuple(path), False, confidence))
    return [best[k] for k in sorted(best)]
