# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled sign/product kernels; see _pykernels for the reference semantics."""


cdef inline int _popcount(unsigned long long x):
    cdef int n = 0
    while x:
        x &= x - 1
        n += 1
    return n


cdef int _mask_sign(unsigned long long a, unsigned long long b):
    cdef unsigned long long low
    cdef int n = 0
    if a & b:
        return 0
    while b:
        low = b & (~b + 1)
        n += _popcount(a & ~((low << 1) - 1))
        b ^= low
    return -1 if n & 1 else 1


def mask_sign(a, b):
    if a >= (1 << 63) or b >= (1 << 63):
        from artifact._pykernels import mask_sign as slow
        return slow(a, b)
    return _mask_sign(a, b)


def merge_sign(tuple a, tuple b):
    cdef Py_ssize_t la = len(a), lb = len(b), i = 0, j = 0
    cdef long swaps = 0
    cdef list out
    if la == 0:
        return 1, b
    if lb == 0:
        return 1, a
    out = []
    while i < la and j < lb:
        x = a[i]
        y = b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            swaps += la - i
            j += 1
        else:
            return 0, None
    while i < la:
        out.append(a[i])
        i += 1
    while j < lb:
        out.append(b[j])
        j += 1
    return (-1 if swaps & 1 else 1), tuple(out)


def mul_terms(dict ta, dict tb):
    cdef dict out = {}
    cdef unsigned long long ma, mb
    cdef int s
    for ka, ca in ta.items():
        ma = ka
        for kb, cb in tb.items():
            mb = kb
            if ma & mb:
                continue
            s = _mask_sign(ma, mb)
            m = ma | mb
            p = ca * cb
            v = out.get(m, 0) + (p if s > 0 else -p)
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out
