"""Pure-Python versions of the hot sign/product kernels.

The compiled module ``artifact._ckernels`` exposes the same three functions.
Monomials of Grassmann generators are bitmasks (bit i <-> generator i+1);
ordered odd-variable monomials in expressions are ascending int tuples.
"""


def mask_sign(a, b):
    """Sign of Z^a Z^b relative to Z^(a|b) in ascending order, 0 if they overlap."""
    if a & b:
        return 0
    n = 0
    while b:
        low = b & -b
        # generators of a that sit above this generator of b must be crossed
        n += bin(a & ~((low << 1) - 1)).count("1")
        b ^= low
    return -1 if n & 1 else 1


def merge_sign(a, b):
    """Merge two ascending tuples; returns (sign, merged) or (0, None) on repeat."""
    la, lb = len(a), len(b)
    if not la:
        return 1, b
    if not lb:
        return 1, a
    out = []
    i = j = 0
    swaps = 0
    while i < la and j < lb:
        x, y = a[i], b[j]
        if x < y:
            out.append(x)
            i += 1
        elif y < x:
            out.append(y)
            swaps += la - i
            j += 1
        else:
            return 0, None
    if i < la:
        out.extend(a[i:])
    if j < lb:
        out.extend(b[j:])
    return (-1 if swaps & 1 else 1), tuple(out)


def mul_terms(ta, tb):
    """Product of two sparse Grassmann term maps {mask: coefficient}."""
    out = {}
    for ma, ca in ta.items():
        for mb, cb in tb.items():
            if ma & mb:
                continue
            s = mask_sign(ma, mb)
            m = ma | mb
            v = out.get(m, 0) + (ca * cb if s > 0 else -(ca * cb))
            if v:
                out[m] = v
            else:
                out.pop(m, None)
    return out
