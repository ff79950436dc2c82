"""Batch runs over a manifest of contracts, one worker process per entry."""

from __future__ import annotations

import json
import multiprocessing as mp
import os
import time
from dataclasses import dataclass, replace
from typing import Optional

from evmcfg.export import SCHEMA_VERSION
from evmcfg.pipeline import AnalysisOptions, AnalysisReport, Status, analyze

# extra seconds a worker gets past the in-process deadline before it is killed
KILL_GRACE = 5.0


@dataclass(frozen=True)
class BatchEntry:
    source: str
    contract_id: Optional[str] = None
    abi: Optional[str] = None


def load_manifest(path: str) -> list[BatchEntry]:
    """Read a manifest: a JSON array, or one input per line.

    JSON items are either strings or objects with ``input`` and optional
    ``id`` / ``abi``. Relative paths resolve against the manifest's folder.
    """
    base = os.path.dirname(os.path.abspath(path))
    with open(path, encoding="utf-8") as fh:
        text = fh.read()

    def local(p: Optional[str]) -> Optional[str]:
        if p is None:
            return None
        candidate = os.path.join(base, p)
        return candidate if not os.path.isabs(p) and os.path.exists(candidate) else p

    entries = []
    if text.lstrip().startswith("["):
        for item in json.loads(text):
            if isinstance(item, str):
                entries.append(BatchEntry(local(item)))
            else:
                entries.append(BatchEntry(local(item["input"]), item.get("id"), local(item.get("abi"))))
    else:
        for line in text.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                entries.append(BatchEntry(local(line)))
    return entries


def analyze_entry(entry: BatchEntry, options: AnalysisOptions) -> dict:
    if entry.abi is not None:
        options = replace(options, abi=entry.abi)
    return analyze(entry.source, options, contract_id=entry.contract_id).report.to_dict()


def _worker(conn, entry: BatchEntry, options: AnalysisOptions) -> None:
    try:
        conn.send(analyze_entry(entry, options))
    except BaseException as exc:  # report, never hang the parent
        conn.send(_failed(entry, f"{type(exc).__name__}: {exc}"))
    finally:
        conn.close()


def _failed(entry: BatchEntry, reason: str) -> dict:
    report = AnalysisReport(entry.contract_id or os.path.basename(entry.source)[:80])
    report.status = Status.FAILED
    report.reason = reason
    return report.to_dict()


def run_batch(
    entries: list[BatchEntry],
    options: Optional[AnalysisOptions] = None,
    jobs: int = 1,
    kill_grace: float = KILL_GRACE,
) -> dict:
    """Analyse every entry in its own process, at most ``jobs`` at a time.

    A worker still alive ``options.timeout + kill_grace`` seconds after it
    started is terminated and its entry reported as failed.
    """
    options = options or AnalysisOptions()
    ctx = mp.get_context("fork") if "fork" in mp.get_all_start_methods() else mp.get_context()
    results: list[Optional[dict]] = [None] * len(entries)
    pending = list(range(len(entries)))[::-1]
    running: dict[int, tuple] = {}
    limit = options.timeout + kill_grace

    while pending or running:
        while pending and len(running) < max(1, jobs):
            idx = pending.pop()
            parent, child = ctx.Pipe(duplex=False)
            proc = ctx.Process(target=_worker, args=(child, entries[idx], options), daemon=True)
            proc.start()
            child.close()
            running[idx] = (proc, parent, time.monotonic())
        for idx, (proc, conn, started) in list(running.items()):
            if conn.poll():
                try:
                    results[idx] = conn.recv()
                except EOFError:
                    proc.join()
                    results[idx] = _failed(entries[idx], f"worker died (exit code {proc.exitcode})")
                proc.join()
            elif not proc.is_alive():
                results[idx] = _failed(entries[idx], f"worker died (exit code {proc.exitcode})")
            elif time.monotonic() - started > limit:
                proc.terminate()
                proc.join()
                results[idx] = _failed(entries[idx], f"timeout after {options.timeout:g} s")
            else:
                continue
            conn.close()
            del running[idx]
        if running:
            time.sleep(0.01)
    return summarize([r for r in results if r is not None])


def summarize(reports: list[dict]) -> dict:
    """Aggregate statistics in the style of a success-rate table."""
    total = len(reports)
    counts = {s.value: sum(1 for r in reports if r["status"] == s.value) for s in Status}
    succeeded = [r for r in reports if r["status"] != Status.FAILED.value]
    non_empty = [r for r in succeeded if r["block_count"] > 0]
    return {
        "schema_version": SCHEMA_VERSION,
        "total": total,
        "ok": counts["ok"],
        "partial": counts["partial"],
        "failed": counts["failed"],
        "success_rate": len(succeeded) / total if total else None,
        "non_empty_cfgs": len(non_empty),
        "avg_nodes": sum(r["block_count"] for r in succeeded) / len(succeeded) if succeeded else None,
        "avg_edges": sum(r["edge_count"] for r in succeeded) / len(succeeded) if succeeded else None,
        "reports": reports,
    }


def format_table(summary: dict) -> str:
    header = f"{'contract':<40} {'status':<8} {'nodes':>6} {'edges':>6} {'sel':>4} {'reent':>5} {'secs':>8}"
    rows = [header, "-" * len(header)]
    for r in summary["reports"]:
        rows.append(
            f"{str(r['contract_id'])[:40]:<40} {r['status']:<8} {r['block_count']:>6} {r['edge_count']:>6} "
            f"{len(r['selectors']):>4} {len(r['reentrancy_findings']):>5} {r['timings'].get('total', 0.0):>8.3f}"
        )
    rows.append("-" * len(header))
    rate = summary["success_rate"]
    rows.append(
        f"total {summary['total']}  ok {summary['ok']}  partial {summary['partial']}  failed {summary['failed']}  "
        f"success rate {'n/a' if rate is None else f'{rate:.3f}'}"
    )
    if summary["avg_nodes"] is not None:
        rows.append(f"avg nodes {summary['avg_nodes']:.1f}  avg edges {summary['avg_edges']:.1f}")
    return "\n".join(rows) + "\n"
