"""Compare the compiled and pure-Python sign/product kernels.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import random
import timeit
from fractions import Fraction

from artifact import _pykernels

try:
    from artifact import _ckernels
except ImportError:
    _ckernels = None


def _random_terms(rng, n, k):
    return {rng.getrandbits(n): Fraction(rng.randint(-9, 9), rng.randint(1, 5)) for _ in range(k)}


def _random_tuples(rng, count):
    out = []
    for _ in range(count):
        a = tuple(sorted(rng.sample(range(40), rng.randint(0, 6))))
        b = tuple(sorted(rng.sample(range(40), rng.randint(0, 6))))
        out.append((a, b))
    return out


def bench(mod, data, repeat):
    masks, terms, tuples = data
    res = {}
    res["mask_sign"] = min(timeit.repeat(lambda: [mod.mask_sign(a, b) for a, b in masks],
                                         number=1, repeat=repeat))
    res["merge_sign"] = min(timeit.repeat(lambda: [mod.merge_sign(a, b) for a, b in tuples],
                                          number=1, repeat=repeat))
    res["mul_terms"] = min(timeit.repeat(lambda: [mod.mul_terms(x, y) for x, y in terms],
                                         number=1, repeat=repeat))
    return res


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    masks = [(rng.getrandbits(20), rng.getrandbits(20)) for _ in range(20000)]
    terms = [(_random_terms(rng, 8, 12), _random_terms(rng, 8, 12)) for _ in range(300)]
    data = (masks, terms, _random_tuples(rng, 20000))
    py = bench(_pykernels, data, args.repeat)
    print(f"{'kernel':<12}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    cy = bench(_ckernels, data, args.repeat) if _ckernels else None
    for k, t in py.items():
        if cy:
            print(f"{k:<12}{t:>12.4f}{cy[k]:>12.4f}{t / cy[k]:>9.1f}x")
        else:
            print(f"{k:<12}{t:>12.4f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
