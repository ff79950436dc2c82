import json
import time

import pytest

from evmcfg import batch
from evmcfg.batch import BatchEntry, format_table, load_manifest, run_batch
from evmcfg.pipeline import AnalysisOptions

from helpers import FIXTURES


def test_load_manifest_forms(tmp_path):
    (tmp_path / "a.hex").write_text("0x00")
    lines = tmp_path / "list.txt"
    lines.write_text("# comment\na.hex\n\n0x6000\n")
    entries = load_manifest(str(lines))
    assert [e.source for e in entries] == [str(tmp_path / "a.hex"), "0x6000"]
    js = tmp_path / "list.json"
    js.write_text(json.dumps([{"input": "a.hex", "id": "A", "abi": "[]"}, "0x00"]))
    entries = load_manifest(str(js))
    assert entries[0] == BatchEntry(str(tmp_path / "a.hex"), "A", "[]")
    assert entries[1].source == "0x00"


def test_isolation_and_stats():
    entries = [
        BatchEntry(str(FIXTURES / "SimpleBank.hex")),
        BatchEntry(""),
        BatchEntry(str(FIXTURES / "Bank.hex"), abi=str(FIXTURES / "Bank.abi.json")),
    ]
    summary = run_batch(entries, AnalysisOptions(), jobs=2)
    statuses = [r["status"] for r in summary["reports"]]
    assert statuses == ["ok", "failed", "ok"]
    assert (summary["total"], summary["ok"], summary["failed"]) == (3, 2, 1)
    assert summary["success_rate"] == pytest.approx(2 / 3)
    assert summary["non_empty_cfgs"] == 2
    nodes = [r["block_count"] for r in summary["reports"] if r["status"] == "ok"]
    assert summary["avg_nodes"] == pytest.approx(sum(nodes) / 2)
    assert summary["reports"][2]["precision_recall"]["recall"] == 1.0
    table = format_table(summary)
    assert "success rate 0.667" in table


def test_empty_batch():
    summary = run_batch([])
    assert summary["total"] == 0 and summary["success_rate"] is None


def _stall(entry, options):
    time.sleep(60)


def _crash(entry, options):
    import os

    os._exit(3)


def test_stalled_worker_is_killed(monkeypatch):
    monkeypatch.setattr(batch, "analyze_entry", _stall)
    started = time.monotonic()
    summary = run_batch([BatchEntry("0x00", "stuck")], AnalysisOptions(timeout=0.3), kill_grace=0.2)
    assert time.monotonic() - started < 10
    (r,) = summary["reports"]
    assert r["status"] == "failed" and r["reason"] == "timeout after 0.3 s"
    assert r["contract_id"] == "stuck"


def test_dead_worker_is_reported(monkeypatch):
    monkeypatch.setattr(batch, "analyze_entry", _crash)
    (r,) = run_batch([BatchEntry("0x00")])["reports"]
    assert r["status"] == "failed" and "exit code 3" in r["reason"]
