"""Pure-Python kernels. ``_kernels.pyx`` mirrors these line for line."""

from __future__ import annotations

STACK_LIMIT = 1024
MASK = (1 << 256) - 1


def decode_stream(code):
    """Linear sweep over ``code``.

    Returns ``(offset, byte, argument)`` triples; ``argument`` is ``None``
    except for PUSH1..PUSH32, whose operand is right-padded with zeros when
    the code ends early.
    """
    out = []
    n = len(code)
    i = 0
    while i < n:
        op = code[i]
        if 0x60 <= op <= 0x7F:
            width = op - 0x5F
            chunk = bytes(code[i + 1 : i + 1 + width])
            if len(chunk) < width:
                chunk = chunk + bytes(width - len(chunk))
            out.append((i, op, int.from_bytes(chunk, "big")))
            i += 1 + width
        else:
            out.append((i, op, None))
            i += 1
    return out


def run_block(stack, ops, args, alpha, delta, push0):
    """Symbolically execute ``ops`` on ``stack`` in place.

    ``stack`` is a list with the top at the end; items are ints (known
    words) or ``None`` (unknown). ``args`` holds the PUSH operands aligned
    with ``ops``. Returns the number of pops that hit an empty stack, or -1
    if the stack limit was exceeded (execution stops there).
    """
    underflow = 0
    for k in range(len(ops)):
        op = ops[k]
        if 0x60 <= op <= 0x7F:
            stack.append(args[k])
        elif 0x80 <= op <= 0x8F:
            n = op - 0x7F
            if len(stack) >= n:
                stack.append(stack[-n])
            else:
                underflow += 1
                stack.append(None)
        elif 0x90 <= op <= 0x9F:
            n = op - 0x8F
            if len(stack) > n:
                stack[-1], stack[-1 - n] = stack[-1 - n], stack[-1]
            else:
                # pad the missing window with unknowns, then swap
                missing = n + 1 - len(stack)
                underflow += missing
                stack[0:0] = [None] * missing
                stack[-1], stack[-1 - n] = stack[-1 - n], stack[-1]
        elif op == 0x50:
            if stack:
                stack.pop()
            else:
                underflow += 1
        elif op == 0x16:
            if stack:
                a = stack.pop()
            else:
                a = None
                underflow += 1
            if stack:
                b = stack.pop()
            else:
                b = None
                underflow += 1
            stack.append(a & b if a is not None and b is not None else None)
        elif op == 0x5F and push0:
            stack.append(0)
        else:
            for _ in range(delta[op]):
                if stack:
                    stack.pop()
                else:
                    underflow += 1
            for _ in range(alpha[op]):
                stack.append(None)
        if len(stack) > STACK_LIMIT:
            return -1
    return underflow
