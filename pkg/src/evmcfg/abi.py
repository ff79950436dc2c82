"""Function selectors: from the dispatcher, from an ABI, and their agreement."""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass
from typing import Any, Iterable, Optional

from evmcfg.cfg import Cfg
from evmcfg.keccak import keccak256


class MalformedAbi(ValueError):
    pass


class SelectorSource(str, enum.Enum):
    DISPATCHER = "dispatcher"
    ABI = "abi"


@dataclass(frozen=True)
class Selector:
    value: int
    source: SelectorSource
    signature: Optional[str] = None

    @property
    def hex(self) -> str:
        return f"0x{self.value:08x}"


def selector_of(signature: str) -> int:
    return int.from_bytes(keccak256(signature.encode())[:4], "big")


_ALIASES = {"uint": "uint256", "int": "int256", "byte": "bytes1", "fixed": "fixed128x18", "ufixed": "ufixed128x18"}
_TYPE = re.compile(r"^([a-z]+[0-9x]*)((\[[0-9]*\])*)$")


def canonical_type(param: dict) -> str:
    """Canonical ABI type of one ``inputs`` entry (tuples expanded)."""
    if not isinstance(param, dict) or "type" not in param:
        raise MalformedAbi(f"parameter without a type: {param!r}")
    typ = str(param["type"]).replace(" ", "")
    if typ.startswith("tuple"):
        components = param.get("components")
        if not isinstance(components, list):
            raise MalformedAbi("tuple parameter without components")
        inner = ",".join(canonical_type(c) for c in components)
        return f"({inner}){typ[len('tuple'):]}"
    m = _TYPE.match(typ)
    if not m:
        raise MalformedAbi(f"unrecognised ABI type {typ!r}")
    base, dims = m.group(1), m.group(2)
    return _ALIASES.get(base, base) + dims


def function_signature(entry: dict) -> str:
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise MalformedAbi(f"function entry without a name: {entry!r}")
    inputs = entry.get("inputs", [])
    if not isinstance(inputs, list):
        raise MalformedAbi(f"inputs of {name} is not a list")
    return f"{name}({','.join(canonical_type(p) for p in inputs)})"


def load_abi(document: Any) -> list:
    """Accept a parsed ABI, JSON text, or an object with an ``abi`` member."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedAbi(f"ABI is not valid JSON: {exc}") from exc
    if isinstance(document, dict) and "abi" in document:
        document = document["abi"]
        if isinstance(document, str):
            return load_abi(document)
    if not isinstance(document, list):
        raise MalformedAbi("ABI must be a JSON array of entries")
    return document


def selectors_from_abi(document: Any) -> set[Selector]:
    out = set()
    for entry in load_abi(document):
        if not isinstance(entry, dict):
            raise MalformedAbi(f"ABI entry is not an object: {entry!r}")
        # entries without "type" are functions by ABI convention
        if entry.get("type", "function") != "function":
            continue
        sig = function_signature(entry)
        out.add(Selector(selector_of(sig), SelectorSource.ABI, sig))
    return out


def extract_selectors(cfg: Cfg) -> set[Selector]:
    """4-byte constants compared with EQ right before a JUMPI in the dispatcher.

    Matches ``PUSH4 c EQ ... JUMPI`` and the ``PUSH4 c DUPn EQ`` variant
    produced by the optimizer.
    """
    found = set()
    for off in sorted(cfg.annotations.dispatcher_offsets):
        block = cfg.blocks.get(off)
        if block is None or block.last.mnemonic != "JUMPI":
            continue
        ops = block.opcodes
        for i, op in enumerate(ops[:-1]):
            if op.mnemonic != "PUSH4":
                continue
            j = i + 1
            if ops[j].mnemonic.startswith("DUP") and j + 1 < len(ops):
                j += 1
            if ops[j].mnemonic == "EQ":
                found.add(Selector(op.push_argument, SelectorSource.DISPATCHER))
    return found


@dataclass(frozen=True)
class PrecisionRecall:
    precision: Optional[float]
    recall: Optional[float]
    extracted_count: int
    abi_count: int
    intersection_count: int

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "extracted_count": self.extracted_count,
            "abi_count": self.abi_count,
            "intersection_count": self.intersection_count,
        }


def _values(items: Iterable) -> set[int]:
    return {s.value if isinstance(s, Selector) else int(s) for s in items}


def precision_recall(extracted: Iterable, abi: Iterable) -> PrecisionRecall:
    """Set precision/recall of extracted selectors against ABI selectors.

    Both empty gives 1/1; a ratio whose denominator is empty while the other
    side is not is reported as ``None``.
    """
    ext, ref = _values(extracted), _values(abi)
    hit = len(ext & ref)
    if not ext and not ref:
        return PrecisionRecall(1.0, 1.0, 0, 0, 0)
    precision = hit / len(ext) if ext else None
    recall = hit / len(ref) if ref else None
    return PrecisionRecall(precision, recall, len(ext), len(ref), hit)
