# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels; behaviour must match ``_pykernels`` exactly."""

cdef enum:
    STACK_LIMIT = 1024


def decode_stream(const unsigned char[:] code):
    cdef Py_ssize_t n = code.shape[0]
    cdef Py_ssize_t i = 0
    cdef Py_ssize_t width, avail
    cdef unsigned char op
    cdef list out = []
    cdef bytes chunk
    while i < n:
        op = code[i]
        if 0x60 <= op <= 0x7F:
            width = op - 0x5F
            avail = n - i - 1
            if avail >= width:
                chunk = bytes(code[i + 1:i + 1 + width])
            else:
                chunk = bytes(code[i + 1:n]) + bytes(width - avail)
            out.append((i, op, int.from_bytes(chunk, "big")))
            i += 1 + width
        else:
            out.append((i, op, None))
            i += 1
    return out


def run_block(list stack, const unsigned char[:] ops, list args,
              const unsigned char[:] alpha, const unsigned char[:] delta, bint push0):
    cdef Py_ssize_t k, n, j, missing, size
    cdef Py_ssize_t underflow = 0
    cdef unsigned char op
    cdef object a, b
    for k in range(ops.shape[0]):
        op = ops[k]
        size = len(stack)
        if 0x60 <= op <= 0x7F:
            stack.append(args[k])
        elif 0x80 <= op <= 0x8F:
            n = op - 0x7F
            if size >= n:
                stack.append(stack[size - n])
            else:
                underflow += 1
                stack.append(None)
        elif 0x90 <= op <= 0x9F:
            n = op - 0x8F
            if size <= n:
                missing = n + 1 - size
                underflow += missing
                stack[0:0] = [None] * missing
                size = len(stack)
            a = stack[size - 1]
            stack[size - 1] = stack[size - 1 - n]
            stack[size - 1 - n] = a
        elif op == 0x50:
            if size:
                stack.pop()
            else:
                underflow += 1
        elif op == 0x16:
            if size:
                a = stack.pop()
                size -= 1
            else:
                a = None
                underflow += 1
            if size:
                b = stack.pop()
            else:
                b = None
                underflow += 1
            stack.append(a & b if a is not None and b is not None else None)
        elif op == 0x5F and push0:
            stack.append(0)
        else:
            for j in range(delta[op]):
                if size:
                    stack.pop()
                    size -= 1
                else:
                    underflow += 1
            for j in range(alpha[op]):
                stack.append(None)
        if len(stack) > STACK_LIMIT:
            return -1
    return underflow
