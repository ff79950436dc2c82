"""End-to-end analysis of one contract."""

from __future__ import annotations

import enum
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from evmcfg import abi as abi_mod
from evmcfg import fetch
from evmcfg.bytecode import BytecodeError, CodeLayout, decode_hex, decode_opcodes, split_metadata
from evmcfg.cfg import Cfg, EdgeKind, EmptyCode, TerminatorKind, add_static_edges, build_blocks
from evmcfg.decorate import add_exit_node, mark_dispatcher, mark_fallback, separate_static_data
from evmcfg.export import SCHEMA_VERSION, cfg_to_json
from evmcfg.opcodes import build_table
from evmcfg.reentrancy import ReentrancyFinding, detect_reentrancy
from evmcfg.symbolic import DEFAULT_FINGERPRINT_DEPTH, DEFAULT_STEP_BUDGET, ResolutionResult, resolve_orphan_jumps

log = logging.getLogger(__name__)


class Status(str, enum.Enum):
    OK = "ok"
    PARTIAL = "partial"
    FAILED = "failed"


EXIT_CODES = {Status.OK: 0, Status.FAILED: 1, Status.PARTIAL: 2}


def exit_code(status: Status | str) -> int:
    return EXIT_CODES[Status(status)]


@dataclass
class AnalysisOptions:
    timeout: float = 600.0
    fingerprint_depth: int = DEFAULT_FINGERPRINT_DEPTH
    step_budget: int = DEFAULT_STEP_BUDGET
    trace: bool = False
    abi: Any = None  # parsed ABI, JSON text, or path
    reentrancy: bool = True
    revision: str = "berlin"
    cache_dir: Optional[str] = None


@dataclass
class AnalysisReport:
    contract_id: str
    code_length: int = 0
    compiler_version: Optional[str] = None
    metadata_scheme: str = "none"
    metadata_length: int = 0
    block_count: int = 0
    edge_count: int = 0
    unresolved_jump_offsets: list[int] = field(default_factory=list)
    selectors: list[str] = field(default_factory=list)
    precision_recall: Optional[dict] = None
    reentrancy_findings: list[dict] = field(default_factory=list)
    dispatcher_offsets: list[int] = field(default_factory=list)
    fallback_offset: Optional[int] = None
    exit_id: Optional[int] = None
    data_segment_start: Optional[int] = None
    static_data: str = ""
    diagnostics: list[dict] = field(default_factory=list)
    timings: dict[str, float] = field(default_factory=dict)
    status: Status = Status.OK
    reason: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "contract_id": self.contract_id,
            "status": self.status.value,
            "reason": self.reason,
            "code_length": self.code_length,
            "compiler_version": self.compiler_version,
            "metadata_scheme": self.metadata_scheme,
            "metadata_length": self.metadata_length,
            "block_count": self.block_count,
            "edge_count": self.edge_count,
            "unresolved_jump_offsets": self.unresolved_jump_offsets,
            "selectors": self.selectors,
            "precision_recall": self.precision_recall,
            "reentrancy_findings": self.reentrancy_findings,
            "dispatcher_offsets": self.dispatcher_offsets,
            "fallback_offset": self.fallback_offset,
            "exit_id": self.exit_id,
            "data_segment_start": self.data_segment_start,
            "static_data": self.static_data,
            "diagnostics": self.diagnostics,
            "timings": self.timings,
        }


@dataclass
class Analysis:
    report: AnalysisReport
    cfg: Optional[Cfg] = None
    layout: Optional[CodeLayout] = None
    resolution: Optional[ResolutionResult] = None
    findings: list[ReentrancyFinding] = field(default_factory=list)

    @property
    def cfg_json(self) -> Optional[dict]:
        return cfg_to_json(self.cfg) if self.cfg is not None else None

    @property
    def trace(self) -> list[str]:
        return self.resolution.trace if self.resolution else []


class _Clock:
    def __init__(self, timings: dict):
        self.timings = timings
        self.last = time.perf_counter()

    def lap(self, phase: str) -> None:
        now = time.perf_counter()
        self.timings[phase] = round(now - self.last, 6)
        self.last = now


def unresolved_jumps(cfg: Cfg, resolution: Optional[ResolutionResult] = None) -> list[int]:
    """JUMP/JUMPI blocks still in the graph whose destination is missing."""
    out = set(resolution.unresolved) if resolution else set()
    exit_id = cfg.annotations.exit_id
    for off in cfg.offsets:
        block = cfg.blocks[off]
        kind = block.terminator_kind
        succ = cfg.succ.get(off, {})
        if kind is TerminatorKind.JUMP:
            if not any(d != exit_id for d in succ):
                out.add(off)
        elif kind is TerminatorKind.JUMPI:
            if not any(k in (EdgeKind.CONDITIONAL_TRUE, EdgeKind.ORPHAN_RESOLVED) for k in succ.values()):
                out.add(off)
    return sorted(o for o in out if o in cfg.blocks)


def analyze_bytes(raw: bytes, contract_id: str = "<input>", options: Optional[AnalysisOptions] = None) -> Analysis:
    options = options or AnalysisOptions()
    report = AnalysisReport(contract_id)
    analysis = Analysis(report)
    deadline = time.monotonic() + options.timeout
    clock = _Clock(report.timings)
    try:
        table = build_table(options.revision)
        if not raw:
            raise EmptyCode("empty bytecode")
        layout = split_metadata(raw)
        analysis.layout = layout
        report.code_length = len(layout.runtime_code)
        report.compiler_version = layout.compiler_version_str
        report.metadata_scheme = layout.metadata_scheme.value
        report.metadata_length = len(layout.metadata)
        opcodes = decode_opcodes(layout.runtime_code, table)
        clock.lap("parse")
        if not opcodes:
            raise EmptyCode("no executable code after removing metadata")

        cfg = add_static_edges(build_blocks(opcodes), len(layout.runtime_code))
        analysis.cfg = cfg
        clock.lap("blocks")

        resolution = resolve_orphan_jumps(
            cfg,
            fingerprint_depth=options.fingerprint_depth,
            step_budget=options.step_budget,
            deadline=deadline,
            trace=options.trace,
            table=table,
        )
        analysis.resolution = resolution
        clock.lap("symbolic")
        if not resolution.complete:
            report.status = Status.PARTIAL
            report.reason = "timeout" if resolution.timed_out else "StepBudgetExceeded"

        separate_static_data(cfg, layout.runtime_code)
        clock.lap("data_separation")
        mark_dispatcher(cfg)
        mark_fallback(cfg)
        add_exit_node(cfg)
        clock.lap("decoration")

        ann = cfg.annotations
        report.dispatcher_offsets = sorted(ann.dispatcher_offsets)
        report.fallback_offset = ann.fallback_offset
        report.exit_id = ann.exit_id
        report.data_segment_start = ann.data_segment_start
        report.static_data = ann.pruned_data.hex()
        report.unresolved_jump_offsets = unresolved_jumps(cfg, resolution)

        extracted = abi_mod.extract_selectors(cfg)
        report.selectors = sorted(s.hex for s in extracted)
        if options.abi is not None:
            reference = abi_mod.selectors_from_abi(_read_abi(options.abi))
            report.precision_recall = abi_mod.precision_recall(extracted, reference).as_dict()
        clock.lap("selectors")

        if options.reentrancy and report.status is Status.OK and time.monotonic() < deadline:
            analysis.findings = detect_reentrancy(cfg, resolution.entry_stacks, fingerprint_depth=options.fingerprint_depth)
            report.reentrancy_findings = [f.as_dict() for f in analysis.findings]
            clock.lap("reentrancy")

        doc = cfg_to_json(cfg)
        report.block_count = len(doc["nodes"])
        report.edge_count = len(doc["edges"])
        report.diagnostics = [d.as_dict() for d in cfg.diagnostics]
    except (EmptyCode, fetch.EmptyCode) as exc:
        report.status, report.reason = Status.FAILED, f"EmptyCode: {exc}"
    except Exception as exc:  # one contract must never take down a batch
        log.exception("analysis of %s failed", contract_id)
        report.status, report.reason = Status.FAILED, f"{type(exc).__name__}: {exc}"
    report.timings["total"] = round(sum(v for k, v in report.timings.items() if k != "total"), 6)
    return analysis


def _read_abi(abi: Any) -> Any:
    if isinstance(abi, (str, os.PathLike)) and os.path.isfile(abi):
        with open(abi, encoding="utf-8") as fh:
            return fh.read()
    return abi


def load_input(source: str, options: Optional[AnalysisOptions] = None, fetcher: Optional[Callable[..., str]] = None) -> tuple[bytes, str]:
    """Resolve a hex file, an address or literal hex to raw bytes and an id."""
    options = options or AnalysisOptions()
    text = source.strip()
    if os.path.isfile(source):
        with open(source, encoding="utf-8") as fh:
            return decode_hex(fh.read()), os.path.basename(source)
    if fetch.is_address(text):
        get = fetcher or fetch.fetch_bytecode
        return decode_hex(get(text, cache_dir=options.cache_dir)), text.lower()
    return decode_hex(text), "<hex>"


def analyze(source: str, options: Optional[AnalysisOptions] = None, contract_id: Optional[str] = None, fetcher=None) -> Analysis:
    """Analyse a hex file, a contract address, or literal hex text."""
    options = options or AnalysisOptions()
    try:
        raw, cid = load_input(source, options, fetcher)
    except (BytecodeError, fetch.FetchError) as exc:
        report = AnalysisReport(contract_id or source[:80])
        report.status = Status.FAILED
        report.reason = f"{type(exc).__name__}: {exc}"
        return Analysis(report)
    return analyze_bytes(raw, contract_id or cid, options)
