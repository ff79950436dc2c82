"""Shared helpers for loading and building the compiled fixtures."""

from __future__ import annotations

from pathlib import Path

from evmcfg.bytecode import decode_hex, decode_opcodes, split_metadata
from evmcfg.cfg import add_static_edges, build_blocks
from evmcfg.decorate import decorate
from evmcfg.symbolic import resolve_orphan_jumps

FIXTURES = Path(__file__).parent / "fixtures"

COMPILED = sorted(p.stem for p in FIXTURES.glob("*.hex"))
SNIPPETS = [f"ReEnt{i}" for i in range(1, 8)]


def fixture_bytes(name: str) -> bytes:
    return decode_hex((FIXTURES / f"{name}.hex").read_text())


def fixture_abi(name: str) -> str:
    return (FIXTURES / f"{name}.abi.json").read_text()


def build(code: bytes, decorated: bool = True, **kw):
    """Run the pipeline on raw runtime code (no metadata split)."""
    cfg = add_static_edges(build_blocks(decode_opcodes(code)), len(code))
    res = resolve_orphan_jumps(cfg, **kw)
    if decorated:
        decorate(cfg, code)
    return cfg, res


def build_fixture(name: str, decorated: bool = True):
    layout = split_metadata(fixture_bytes(name))
    return build(layout.runtime_code, decorated)



def oracle_mismatches(count: int, seed: int, allowed: list[int], max_len: int = 200, exact: bool = True) -> list:
    """Run ``count`` random straight-line programs symbolically and
    concretely; return the counterexamples found.

    With ``exact`` every symbolic element must be known and equal to the
    concrete one. Otherwise only known elements are compared.
    """
    import random

    from evmcfg.symbolic import SymbolicStack
    from oracles import concrete_step, random_program

    rng = random.Random(seed)
    bad = []
    for _ in range(count):
        prog = random_program(rng, allowed, 0, rng.randint(1, max_len))
        concrete: list[int] = []
        env = random.Random(rng.random())
        for op, arg in prog:
            concrete_step(concrete, op, arg, env)
        sym = SymbolicStack()
        sym.run(bytes(op for op, _ in prog), [arg for _, arg in prog])
        if len(sym.items) != len(concrete) or sym.underflows:
            bad.append(prog)
        elif exact and sym.items != concrete:
            bad.append(prog)
        elif any(s is not None and s != c for s, c in zip(sym.items, concrete)):
            bad.append(prog)
    return bad
