"""Random generators and fixture loaders shared by the test modules."""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations
from pathlib import Path

from artifact.cli import build_model, read_json
from artifact.superalgebra import GrassmannNumber, SuperMatrix, det_even
from artifact.symalg import GradedExpr, VariableTable

MODELS = Path(__file__).resolve().parents[1] / "src" / "artifact" / "models"


def model(name):
    return build_model(read_json(MODELS / f"{name}.json"))


def rfrac(rng, lo=-5, hi=5, den=3):
    return Fraction(rng.randint(lo, hi), rng.randint(1, den))


def rand_gr(rng, n, parity=None, terms=3, body=None):
    """Random Grassmann number; ``parity`` None gives a mixed element."""
    subsets = [s for k in range(n + 1) for s in combinations(range(1, n + 1), k)]
    if parity is not None:
        subsets = [s for s in subsets if len(s) % 2 == parity]
    data = {}
    for _ in range(terms):
        if subsets:
            data[rng.choice(subsets)] = rfrac(rng)
    if body is not None and parity in (None, 0):
        data[()] = Fraction(body)
    return GrassmannNumber.from_subsets(n, data)


def rand_supermatrix(rng, n, rp, cp, *, invertible=False, soul_only=False):
    while True:
        rows = []
        for a in rp:
            row = []
            for b in cp:
                par = (a + b) % 2
                x = rand_gr(rng, n, par, terms=2)
                if par == 0 and not soul_only:
                    x = x + rng.randint(-3, 3)
                if par == 0 and soul_only:
                    x = x - x.body
                row.append(x)
            rows.append(row)
        m = SuperMatrix(n, rp, cp, rows)
        if not invertible:
            return m
        a, _, _, b = m.blocks()
        if det_even(a).body and det_even(b).body:
            return m


def rand_parities(rng, k):
    return [rng.randint(0, 1) for _ in range(k)]


def bracket_table(generators=4):
    """Three canonical pairs: x even, th1 and th2 odd (six phase-space variables)."""
    tb = VariableTable(generators, max_jet_order=1)
    tb.add_position("x")
    tb.add_position("th1", 1)
    tb.add_position("th2", 1)
    return tb


def phase_vars(tb):
    return [v for pair in tb.pairs() for v in pair]


def rand_expr(rng, tb, variables, parity, *, terms=3, degree=3, grassmann=True):
    """Random homogeneous-parity polynomial of total degree <= ``degree``."""
    out = GradedExpr.constant(tb, 0)
    for _ in range(terms):
        k = rng.randint(0, degree)
        mono = GradedExpr.constant(tb, 1)
        odd = 0
        chosen = set()
        for _ in range(k):
            v = rng.choice(variables)
            if v.parity:
                if v.id in chosen:
                    continue
                chosen.add(v.id)
                odd += 1
            mono = mono * GradedExpr.variable(tb, v)
        need = (parity - odd) % 2
        if grassmann and tb.n:
            c = rand_gr(rng, tb.n, need, terms=2, body=rfrac(rng) if need == 0 else None)
        elif need:
            continue
        else:
            c = rfrac(rng)
        out = out + GradedExpr.constant(tb, c) * mono
    return out


def rng_for(seed):
    return random.Random(seed)
