"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``EVMCFG_PURE_PYTHON=1``
to force the pure-Python implementation.
"""

from __future__ import annotations

import os

from evmcfg import _pykernels

if os.environ.get("EVMCFG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from evmcfg import _kernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

decode_stream = _impl.decode_stream
run_block = _impl.run_block
STACK_LIMIT = _pykernels.STACK_LIMIT

__all__ = ["BACKEND", "STACK_LIMIT", "decode_stream", "run_block"]
