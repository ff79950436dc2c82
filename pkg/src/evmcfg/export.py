"""CFG serialisation: JSON interchange and Graphviz DOT."""

from __future__ import annotations

import json
from importlib import resources

from evmcfg.cfg import Cfg, EdgeKind

SCHEMA_VERSION = "1.0"


def cfg_to_json(cfg: Cfg) -> dict:
    """Nodes are the basic blocks; edges are (from, to, kind) triples.

    The artificial exit node is not listed among the nodes; edges into it
    use ``exit_id``.
    """
    ann = cfg.annotations
    nodes = []
    for off in cfg.offsets:
        block = cfg.blocks[off]
        nodes.append(
            {
                "offset": off,
                "length": block.length,
                "opcodes": [
                    {"offset": op.offset, "mnemonic": op.mnemonic}
                    | ({"argument": hex(op.push_argument)} if op.push_argument is not None else {})
                    for op in block.opcodes
                ],
                "flags": {
                    "dispatcher": off in ann.dispatcher_offsets,
                    "fallback": off == ann.fallback_offset,
                    "exit": ann.exit_id is not None and cfg.has_edge(off, ann.exit_id),
                },
            }
        )
    edges = [{"from": e.from_offset, "to": e.to_offset, "kind": e.kind.value} for e in cfg.edges()]
    return {"schema_version": SCHEMA_VERSION, "exit_id": ann.exit_id, "nodes": nodes, "edges": edges}


def parse_cfg_json(doc: dict) -> tuple[set[int], set[tuple[int, int, str]]]:
    """Node offsets and edge triples of a serialised CFG."""
    nodes = {n["offset"] for n in doc["nodes"]}
    edges = {(e["from"], e["to"], e["kind"]) for e in doc["edges"]}
    return nodes, edges


_EDGE_STYLE = {
    EdgeKind.PUSHED_JUMP: 'style=solid',
    EdgeKind.CONDITIONAL_TRUE: 'style=solid, color="darkgreen"',
    EdgeKind.CONDITIONAL_FALSE: 'style=solid, color="firebrick"',
    EdgeKind.FALLTHROUGH: 'style=solid, color="gray40"',
    EdgeKind.ORPHAN_RESOLVED: 'style=dashed, color="blue"',
    EdgeKind.TO_EXIT: 'style=dotted',
}


def _escape(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"')


def emit_dot(cfg: Cfg, name: str = "cfg") -> str:
    ann = cfg.annotations
    lines = [
        f'digraph "{_escape(name)}" {{',
        '  node [shape=box, fontname="monospace", fontsize=10];',
        '  edge [fontname="monospace", fontsize=9];',
    ]
    for off in cfg.offsets:
        block = cfg.blocks[off]
        body = "".join(f"{op.offset}: {_escape(str(op))}\\l" for op in block.opcodes)
        attrs = [f'label="block {off}\\l{body}"']
        if off in ann.dispatcher_offsets:
            attrs.append('style=filled, fillcolor="lightgrey"')
        elif off == ann.fallback_offset:
            attrs.append('style=filled, fillcolor="lightblue"')
        lines.append(f"  n{off} [{', '.join(attrs)}];")
    if ann.exit_id is not None:
        lines.append(f'  n{ann.exit_id} [label="exit {ann.exit_id}", shape=doublecircle];')
    for e in cfg.edges():
        lines.append(f"  n{e.from_offset} -> n{e.to_offset} [{_EDGE_STYLE[e.kind]}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def load_schema() -> dict:
    """The JSON schema shipped with the package (``$defs``: report, cfg, ...)."""
    return json.loads(resources.files("evmcfg").joinpath("schema/report.schema.json").read_text())
