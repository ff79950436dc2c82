"""Just enough CBOR (RFC 8949) decoding to read compiler metadata maps."""

from __future__ import annotations


class CBORDecodeError(ValueError):
    pass


def loads(data: bytes):
    """Decode one CBOR item that must span all of ``data``."""
    value, end = _item(data, 0, depth=0)
    if end != len(data):
        raise CBORDecodeError(f"{len(data) - end} trailing bytes after CBOR item")
    return value


def _length(data: bytes, pos: int, info: int) -> tuple[int, int]:
    if info < 24:
        return info, pos
    if info > 27:
        raise CBORDecodeError(f"unsupported additional info {info} at {pos - 1}")
    size = 1 << (info - 24)
    if pos + size > len(data):
        raise CBORDecodeError("truncated length field")
    return int.from_bytes(data[pos : pos + size], "big"), pos + size


def _item(data: bytes, pos: int, depth: int):
    if depth > 16:
        raise CBORDecodeError("nesting too deep")
    if pos >= len(data):
        raise CBORDecodeError("unexpected end of data")
    head = data[pos]
    major, info = head >> 5, head & 0x1F
    pos += 1
    if major == 7:
        simple = {20: False, 21: True, 22: None}
        if info in simple:
            return simple[info], pos
        raise CBORDecodeError(f"unsupported simple/float value {info}")
    arg, pos = _length(data, pos, info)
    if major == 0:
        return arg, pos
    if major == 1:
        return -1 - arg, pos
    if major in (2, 3):
        end = pos + arg
        if end > len(data):
            raise CBORDecodeError("truncated string")
        raw = bytes(data[pos:end])
        if major == 3:
            try:
                return raw.decode("utf-8"), end
            except UnicodeDecodeError as exc:
                raise CBORDecodeError("invalid utf-8 in text string") from exc
        return raw, end
    if major == 4:
        items = []
        for _ in range(arg):
            value, pos = _item(data, pos, depth + 1)
            items.append(value)
        return items, pos
    if major == 5:
        mapping = {}
        for _ in range(arg):
            key, pos = _item(data, pos, depth + 1)
            if isinstance(key, (list, dict)):
                raise CBORDecodeError("unhashable map key")
            value, pos = _item(data, pos, depth + 1)
            mapping[key] = value
        return mapping, pos
    raise CBORDecodeError(f"unsupported major type {major}")  # tags (6)
