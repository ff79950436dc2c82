"""Static-data removal and CFG annotations (dispatcher, fallback, exit)."""

from __future__ import annotations

import logging
from dataclasses import replace
from typing import Optional

from evmcfg.cfg import Cfg, EdgeKind

log = logging.getLogger(__name__)


def _data_boundary(cfg: Cfg) -> Optional[int]:
    """End of the first INVALID-bearing block that code never jumps past.

    solc places INVALID right before the data section, but older compilers
    also emit it for failed asserts inside code; a candidate is skipped when
    an edge from a block before it lands beyond it.
    """
    for off in cfg.offsets:
        block = cfg.blocks[off]
        if not block.contains("INVALID"):
            continue
        boundary = block.end
        crosses = any(
            dst >= boundary and dst in cfg.blocks
            for src in cfg.offsets
            if src < boundary
            for dst in cfg.succ.get(src, ())
        )
        if not crosses:
            return boundary
        log.debug("INVALID at block %d is followed by live code; not a data marker", off)
    return None


def separate_static_data(cfg: Cfg, code: Optional[bytes] = None) -> Cfg:
    """Drop the static-data tail and every block unreachable from entry."""
    pruned: set[int] = set()
    boundary = _data_boundary(cfg)
    data_start = None
    if boundary is not None and boundary < cfg.code_length:
        data_start = boundary
        for off in [o for o in cfg.offsets if o >= boundary]:
            cfg.remove_block(off)
            pruned.add(off)
    live = cfg.reachable()
    for off in [o for o in cfg.offsets if o in cfg.blocks and o not in live]:
        cfg.remove_block(off)
        pruned.add(off)
    cfg.refresh_order()
    cfg.diagnostics = [d for d in cfg.diagnostics if d.offset not in pruned]
    data = b""
    if code is not None and data_start is not None:
        data = bytes(code[data_start:])
    cfg.annotations = replace(
        cfg.annotations,
        data_segment_start=data_start,
        pruned_offsets=frozenset(pruned),
        pruned_data=data,
    )
    return cfg


def mark_dispatcher(cfg: Cfg) -> Cfg:
    """Every block below the last block that contains RETURN or STOP."""
    returning = [o for o in cfg.offsets if cfg.blocks[o].last.mnemonic in ("RETURN", "STOP")]
    if not returning:
        cfg.diag("NoDispatcher", cfg.entry_offset, "no block contains RETURN or STOP")
        dispatcher: frozenset[int] = frozenset()
    else:
        threshold = max(returning)
        dispatcher = frozenset(o for o in cfg.offsets if o < threshold)
    cfg.annotations = replace(cfg.annotations, dispatcher_offsets=dispatcher)
    return cfg


def _highest_successor(cfg: Cfg, offset: int) -> Optional[int]:
    succ = [d for d in cfg.successors(offset) if d in cfg.blocks]
    return max(succ) if succ else None


def mark_fallback(cfg: Cfg) -> Cfg:
    """Two hops along highest-offset successors from the entry block.

    The landing block is the fallback entry unless it ends with REVERT
    (no fallback, or one that only reverts). A one-hop chain is judged on
    the first hop. The fallback entry is taken out of the dispatcher set,
    since solc lays it out among the dispatcher blocks.
    """
    fallback = None
    first = _highest_successor(cfg, cfg.entry_offset)
    if first is not None:
        second = _highest_successor(cfg, first)
        candidate = second if second is not None else first
        if cfg.blocks[candidate].last.mnemonic != "REVERT" and candidate != cfg.entry_offset:
            fallback = candidate
    dispatcher = cfg.annotations.dispatcher_offsets - {fallback}
    cfg.annotations = replace(
        cfg.annotations,
        dispatcher_offsets=frozenset(dispatcher),
        fallback_offset=fallback,
        fallback_confidence="heuristic",
    )
    return cfg


def add_exit_node(cfg: Cfg) -> Cfg:
    """Connect every block without successors to one artificial exit node."""
    exit_id = max(b.end for b in cfg.blocks.values()) if cfg.blocks else 0
    for off in cfg.offsets:
        if not cfg.succ.get(off):
            cfg.add_edge(off, exit_id, EdgeKind.TO_EXIT)
    cfg.annotations = replace(cfg.annotations, exit_id=exit_id)
    return cfg


def decorate(cfg: Cfg, code: Optional[bytes] = None) -> Cfg:
    separate_static_data(cfg, code)
    mark_dispatcher(cfg)
    mark_fallback(cfg)
    add_exit_node(cfg)
    return cfg
