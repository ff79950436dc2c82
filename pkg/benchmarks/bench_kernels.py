"""Compare the compiled kernels with the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Times the two hot kernels directly on the test fixtures, then the whole
pipeline on every fixture with each backend in a fresh interpreter
(EVMCFG_PURE_PYTHON selects the fallback at import).
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit
from pathlib import Path

from evmcfg import _pykernels
from evmcfg.bytecode import decode_hex, split_metadata
from evmcfg.symbolic import arity_tables

FIXTURES = Path(__file__).resolve().parent.parent / "tests" / "fixtures"

PIPELINE = """
import sys, time
from pathlib import Path
from evmcfg import kernels
from evmcfg.pipeline import analyze_bytes
from evmcfg.bytecode import decode_hex
codes = [decode_hex(p.read_text()) for p in sorted(Path(sys.argv[1]).glob("*.hex"))]
best = float("inf")
for _ in range(int(sys.argv[2])):
    t = time.perf_counter()
    for c in codes:
        analyze_bytes(c)
    best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def load_codes() -> list[bytes]:
    return [split_metadata(decode_hex(p.read_text())).runtime_code for p in sorted(FIXTURES.glob("*.hex"))]


def kernel_timings(repeat: int) -> list[tuple[str, float, float]]:
    try:
        from evmcfg import _kernels
    except ImportError:
        print("compiled kernels not built; only the pipeline fallback is timed")
        return []
    codes = load_codes()
    alpha, delta, push0 = arity_tables()
    streams = [_pykernels.decode_stream(c) for c in codes]
    blocks = [(bytes(op for _, op, _ in s), [a for _, _, a in s]) for s in streams]

    def decode(impl):
        for c in codes:
            impl.decode_stream(c)

    def run(impl):
        for ops, args in blocks:
            impl.run_block([], ops, args, alpha, delta, push0)

    rows = []
    for label, fn in (("decode_stream", decode), ("run_block", run)):
        fast = min(timeit.repeat(lambda: fn(_kernels), number=20, repeat=repeat))
        slow = min(timeit.repeat(lambda: fn(_pykernels), number=20, repeat=repeat))
        rows.append((label, fast, slow))
    return rows


def pipeline_timing(pure: bool, repeat: int) -> tuple[str, float]:
    env = dict(os.environ)
    env.pop("EVMCFG_PURE_PYTHON", None)
    if pure:
        env["EVMCFG_PURE_PYTHON"] = "1"
    out = subprocess.run(
        [sys.executable, "-c", PIPELINE, str(FIXTURES), str(repeat)],
        env=env, capture_output=True, text=True, check=True,
    ).stdout.split()
    return out[0], float(out[1])


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"{'kernel':<16} {'compiled':>10} {'python':>10} {'speedup':>8}")
    for label, fast, slow in kernel_timings(args.repeat):
        print(f"{label:<16} {fast:>9.4f}s {slow:>9.4f}s {slow / fast:>7.1f}x")

    compiled = pipeline_timing(False, args.repeat)
    python = pipeline_timing(True, args.repeat)
    print(f"\nfull pipeline over {len(list(FIXTURES.glob('*.hex')))} fixtures (best of {args.repeat})")
    for backend, secs in (compiled, python):
        print(f"  {backend:<8} {secs:.4f}s")
    if compiled[0] == "cython":
        print(f"  speedup  {python[1] / compiled[1]:.1f}x")


if __name__ == "__main__":
    main()
