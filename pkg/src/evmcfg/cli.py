"""Command-line interface."""

from __future__ import annotations

import json
import logging
import sys
from typing import Optional

import click

from evmcfg import abi as abi_mod
from evmcfg import fetch
from evmcfg.batch import format_table, load_manifest, run_batch
from evmcfg.export import emit_dot
from evmcfg.pipeline import AnalysisOptions, Status, analyze, exit_code
from evmcfg.symbolic import DEFAULT_FINGERPRINT_DEPTH, DEFAULT_STEP_BUDGET


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=not text.endswith("\n"))


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def analysis_options(f):
    opts = [
        click.option("--timeout", type=float, default=600.0, show_default=True, help="Seconds per contract."),
        click.option(
            "--fingerprint-depth",
            type=int,
            default=DEFAULT_FINGERPRINT_DEPTH,
            show_default=True,
            help="Stack items compared when deciding whether an edge was already explored.",
        ),
        click.option("--step-budget", type=int, default=DEFAULT_STEP_BUDGET, show_default=True, help="Max block executions."),
        click.option("--revision", type=click.Choice(["berlin", "london", "shanghai"]), default="berlin", show_default=True),
        click.option("--cache-dir", type=click.Path(file_okay=False), default=None, help="Bytecode cache for addresses."),
    ]
    for opt in reversed(opts):
        f = opt(f)
    return f


def _options(timeout, fingerprint_depth, step_budget, revision, cache_dir, **extra) -> AnalysisOptions:
    return AnalysisOptions(
        timeout=timeout,
        fingerprint_depth=fingerprint_depth,
        step_budget=step_budget,
        revision=revision,
        cache_dir=cache_dir,
        **extra,
    )


@click.group()
@click.option("-v", "--verbose", count=True, help="Repeat for more logging.")
@click.version_option(package_name="artifact")
def main(verbose: int) -> None:
    """Recover and analyse control-flow graphs of EVM runtime bytecode.

    INPUT is a file holding hex, a 0x-prefixed contract address (fetched from
    the explorer in $EVMCFG_EXPLORER_URL with key $EVMCFG_API_KEY), or hex text.
    """
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


@main.command("analyze")
@click.argument("source", metavar="INPUT")
@analysis_options
@click.option("--abi", "abi_path", default=None, help="ABI file or inline JSON for precision/recall.")
@click.option("--trace", is_flag=True, help="Write the symbolic execution trace to stderr.")
@click.option("--no-reentrancy", is_flag=True, help="Skip re-entrancy detection.")
@click.option(
    "--format",
    "fmt",
    type=click.Choice(["json", "report", "cfg", "dot"]),
    default="json",
    show_default=True,
    help="json: report and CFG; report/cfg: one of them; dot: Graphviz.",
)
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write output here instead of stdout.")
def analyze_cmd(source, abi_path, trace, no_reentrancy, fmt, out, **kw):
    """Build the CFG of INPUT and report on it."""
    options = _options(**kw, abi=abi_path, trace=trace, reentrancy=not no_reentrancy)
    result = analyze(source, options)
    if trace:
        for line in result.trace:
            click.echo(line, err=True)
    report = result.report.to_dict()
    if fmt == "dot":
        if result.cfg is None:
            click.echo(f"error: {report['reason']}", err=True)
        else:
            _emit(emit_dot(result.cfg, report["contract_id"]), out)
    elif fmt == "report":
        _emit(_dump(report), out)
    elif fmt == "cfg":
        _emit(_dump(result.cfg_json), out)
    else:
        _emit(_dump({"report": report, "cfg": result.cfg_json}), out)
    sys.exit(exit_code(result.report.status))


@main.command("selectors")
@click.argument("source", metavar="INPUT")
@analysis_options
def selectors_cmd(**kw):
    """Print the function selectors found in the dispatcher."""
    result = analyze(kw.pop("source"), _options(**kw, reentrancy=False))
    if result.report.status is Status.FAILED:
        click.echo(f"error: {result.report.reason}", err=True)
    for sel in result.report.selectors:
        click.echo(sel)
    sys.exit(exit_code(result.report.status))


@main.command("compare-abi")
@click.argument("source", metavar="INPUT")
@click.option("--abi", "abi_path", required=True, help="ABI file or inline JSON.")
@analysis_options
def compare_abi_cmd(abi_path, **kw):
    """Precision and recall of extracted selectors against an ABI."""
    try:
        abi_mod.selectors_from_abi(_abi_document(abi_path))
    except abi_mod.MalformedAbi as exc:
        raise click.BadParameter(str(exc), param_hint="--abi")
    result = analyze(kw.pop("source"), _options(**kw, abi=abi_path, reentrancy=False))
    report = result.report
    click.echo(_dump({"contract_id": report.contract_id, "status": report.status.value, "reason": report.reason,
                      "selectors": report.selectors, "precision_recall": report.precision_recall}), nl=False)
    sys.exit(exit_code(report.status))


def _abi_document(abi_path: str):
    import os

    if os.path.isfile(abi_path):
        with open(abi_path, encoding="utf-8") as fh:
            return fh.read()
    return abi_path


@main.command("reentrancy")
@click.argument("source", metavar="INPUT")
@analysis_options
def reentrancy_cmd(**kw):
    """List SSTOREs reachable after a CALL to an undetermined address."""
    result = analyze(kw.pop("source"), _options(**kw))
    report = result.report
    click.echo(_dump({"contract_id": report.contract_id, "status": report.status.value, "reason": report.reason,
                      "findings": report.reentrancy_findings}), nl=False)
    sys.exit(exit_code(report.status))


@main.command("fetch")
@click.argument("address")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None)
def fetch_cmd(address, cache_dir, out):
    """Download the runtime bytecode at ADDRESS (cached)."""
    try:
        code = fetch.fetch_bytecode(address, cache_dir=cache_dir)
    except fetch.FetchError as exc:
        click.echo(f"error: {type(exc).__name__}: {exc}", err=True)
        sys.exit(1)
    _emit(code + "\n", out)


@main.command("batch")
@click.argument("manifest", type=click.Path(exists=True, dir_okay=False))
@analysis_options
@click.option("--jobs", type=int, default=1, show_default=True, help="Contracts analysed in parallel.")
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write the JSON summary here.")
@click.option("--json", "as_json", is_flag=True, help="Print the JSON summary instead of the table.")
def batch_cmd(manifest, jobs, out, as_json, **kw):
    """Analyse every input listed in MANIFEST and summarise."""
    summary = run_batch(load_manifest(manifest), _options(**kw), jobs=jobs)
    if out:
        _emit(_dump(summary), out)
    click.echo(_dump(summary) if as_json else format_table(summary), nl=False)


if __name__ == "__main__":
    main()
