"""Finite-dimensional BRST operator on a ghost-extended graded algebra.

Per Lie algebra index a the table carries Phi<a> (even adjoint matter),
w<a> (odd ghost, ghost number +1), wb<a> (odd antighost, -1) and k<a>
(even auxiliary). Q acts from the left as an odd derivation:

    Q Phi^a = -C_bc^a w^b Phi^c      Q w^a  = -1/2 C_bc^a w^b w^c
    Q wb_a  = -k_a                   Q k_a  = 0
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

from artifact.symalg.expr import GradedExpr
from artifact.symalg.table import VariableTable


class JacobiViolation(ValueError):
    pass


class NotClosed(ValueError):
    pass


class UnknownGenerator(KeyError):
    pass


class InhomogeneousGhostNumber(ValueError):
    pass


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass
class LieAlgebraSpec:
    """Structure constants C[a][b][c] = C_ab^c (0-based indices)."""

    dimension: int
    structure_constants: list
    check: bool = True
    _table: VariableTable | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        n = self.dimension
        C = self.structure_constants
        if C is None or C == []:
            C = [[[0] * n for _ in range(n)] for _ in range(n)]
        if len(C) != n or any(len(r) != n or any(len(x) != n for x in r) for r in C):
            raise ValueError(f"structure constants must be {n}x{n}x{n}")
        self.structure_constants = [[[_frac(x) for x in r] for r in m] for m in C]
        for a, b, c in product(range(n), repeat=3):
            if self.C(a, b, c) != -self.C(b, a, c):
                raise ValueError(f"C is not antisymmetric at ({a + 1},{b + 1},{c + 1})")
        if self.check:
            bad = self.jacobi_defect()
            if bad:
                raise JacobiViolation(f"Jacobi identity fails at indices {bad}")

    def C(self, a, b, c) -> Fraction:
        return self.structure_constants[a][b][c]

    def jacobi_defect(self):
        """First (a, b, c, d) (1-based) with sum_e C_ab^e C_ec^d + cyclic != 0, else None."""
        n = self.dimension
        for a, b, c, d in product(range(n), repeat=4):
            s = sum(self.C(a, b, e) * self.C(e, c, d) + self.C(b, c, e) * self.C(e, a, d)
                    + self.C(c, a, e) * self.C(e, b, d) for e in range(n))
            if s:
                return (a + 1, b + 1, c + 1, d + 1)
        return None

    @classmethod
    def abelian(cls, n: int) -> "LieAlgebraSpec":
        return cls(n, [])

    @classmethod
    def su2(cls) -> "LieAlgebraSpec":
        C = [[[0] * 3 for _ in range(3)] for _ in range(3)]
        for (a, b, c), s in _levi_civita().items():
            C[a][b][c] = s
        return cls(3, C)

    @classmethod
    def from_sparse(cls, n: int, entries, check: bool = True) -> "LieAlgebraSpec":
        """entries: iterable of (a, b, c, value), 1-based, antisymmetry filled in."""
        C = [[[Fraction(0)] * n for _ in range(n)] for _ in range(n)]
        for a, b, c, v in entries:
            C[a - 1][b - 1][c - 1] = _frac(v)
            C[b - 1][a - 1][c - 1] = -_frac(v)
        return cls(n, C, check=check)

    @property
    def table(self) -> VariableTable:
        if self._table is None:
            self._table = ghost_table(self.dimension)
        return self._table


def _levi_civita():
    out = {}
    for a, b, c in product(range(3), repeat=3):
        if len({a, b, c}) == 3:
            out[(a, b, c)] = 1 if (a, b, c) in ((0, 1, 2), (1, 2, 0), (2, 0, 1)) else -1
    return out


def random_lie_algebra(n: int, rng: random.Random, max_tries: int = 200) -> LieAlgebraSpec:
    """A random Jacobi-valid algebra: a conjugate of su(2) or a random solvable one."""
    if n == 3:
        # real similarity transform of su(2): C'_ab^c = M^-1 acting on the three indices
        from artifact.superalgebra.supermatrix import SuperMatrix, smat_inverse
        base = LieAlgebraSpec.su2()
        for _ in range(max_tries):
            M = [[Fraction(rng.randint(-2, 2)) for _ in range(3)] for _ in range(3)]
            try:
                Mi = smat_inverse(SuperMatrix(0, [0] * 3, [0] * 3, M)).entries
            except Exception:
                continue
            Mi = [[x.body for x in r] for r in Mi]
            C = [[[sum(M[a][i] * M[b][j] * base.C(i, j, k) * Mi[k][c]
                       for i in range(3) for j in range(3) for k in range(3))
                   for c in range(3)] for b in range(3)] for a in range(3)]
            return LieAlgebraSpec(3, C)
    # solvable: [T_1, T_b] = sum_c A_bc T_c, others commute
    A = [[Fraction(rng.randint(-3, 3)) for _ in range(n)] for _ in range(n)]
    entries = []
    for b in range(2, n + 1):
        for c in range(2, n + 1):
            if A[b - 1][c - 1]:
                entries.append((1, b, c, A[b - 1][c - 1]))
    return LieAlgebraSpec.from_sparse(n, entries)


def ghost_table(n: int) -> VariableTable:
    tb = VariableTable(0, max_jet_order=0)
    for a in range(1, n + 1):
        tb.add(f"Phi{a}", 0, "matter", ghost_number=0)
    for a in range(1, n + 1):
        tb.add(f"w{a}", 1, "ghost", ghost_number=1)
    for a in range(1, n + 1):
        tb.add(f"wb{a}", 1, "antighost", ghost_number=-1)
    for a in range(1, n + 1):
        tb.add(f"k{a}", 0, "auxiliary", ghost_number=0)
    return tb


def _gen(tb, stem, a) -> GradedExpr:
    return GradedExpr.variable(tb, tb[f"{stem}{a}"])


def _classify(tb: VariableTable, vid: int):
    name = tb[vid].name
    for stem in ("Phi", "wb", "w", "k"):
        if name.startswith(stem) and name[len(stem):].isdigit():
            return stem, int(name[len(stem):])
    return None, None


def _brst_image(spec: LieAlgebraSpec, vid: int) -> GradedExpr:
    tb = spec.table
    stem, a = _classify(tb, vid)
    n = spec.dimension
    zero = GradedExpr.constant(tb, 0)
    if stem == "w":
        out = zero
        for b, c in product(range(n), repeat=2):
            C = spec.C(b, c, a - 1)
            if C:
                out = out - _gen(tb, "w", b + 1) * _gen(tb, "w", c + 1) * (C / 2)
        return out
    if stem == "Phi":
        out = zero
        for b, c in product(range(n), repeat=2):
            C = spec.C(b, c, a - 1)
            if C:
                out = out - _gen(tb, "w", b + 1) * _gen(tb, "Phi", c + 1) * C
        return out
    if stem == "wb":
        return -_gen(tb, "k", a)
    if stem == "k":
        return zero
    if tb[vid].kind in ("time", "grassmann-constant"):
        return zero
    raise UnknownGenerator(tb[vid].name)


def _derivation(expr: GradedExpr, image) -> GradedExpr:
    """Odd left derivation D with D v = image(v): D F = sum_v (D v) dF/dv (left)."""
    out = GradedExpr.constant(expr.table, 0)
    for vid in sorted(expr.variables()):
        img = image(vid)
        if img.is_zero():
            continue
        out = out + img * expr.derivative(vid)
    return out


def _check_table(expr, spec):
    if expr.table is not spec.table:
        raise UnknownGenerator("expression is not over this algebra's ghost table")


def brst_apply(expr: GradedExpr, spec: LieAlgebraSpec) -> GradedExpr:
    _check_table(expr, spec)
    return _derivation(expr, lambda v: _brst_image(spec, v))


def hodge_apply(expr: GradedExpr, spec: LieAlgebraSpec) -> GradedExpr:
    """Q_H k_a = -wb_a, zero on every other generator."""
    _check_table(expr, spec)
    tb = spec.table

    def image(vid):
        stem, a = _classify(tb, vid)
        if stem == "k":
            return -_gen(tb, "wb", a)
        return GradedExpr.constant(tb, 0)

    return _derivation(expr, image)


def _n_count(tb, key) -> int:
    e, o, _ = key
    cnt = sum(k for i, k in e if tb[i].kind == "auxiliary" and _classify(tb, i)[0] == "k")
    cnt += sum(1 for i in o if tb[i].kind == "antighost")
    return cnt


def number_operator(expr: GradedExpr) -> GradedExpr:
    """Multiplies each monomial by its number of wb and k factors."""
    tb = expr.table
    return expr._new({k: c * _n_count(tb, k) for k, c in expr.terms.items() if _n_count(tb, k)})


def n_grades(expr: GradedExpr) -> dict[int, GradedExpr]:
    tb = expr.table
    out: dict[int, dict] = {}
    for k, c in expr.terms.items():
        out.setdefault(_n_count(tb, k), {})[k] = c
    return {n: expr._new(t) for n, t in sorted(out.items())}


def ghost_number(expr: GradedExpr) -> int:
    tb = expr.table
    vals = set()
    for e, o, _ in expr.terms:
        g = sum(tb[i].ghost_number * k for i, k in e) + sum(tb[i].ghost_number for i in o)
        vals.add(g)
    if len(vals) > 1:
        raise InhomogeneousGhostNumber(f"ghost numbers {sorted(vals)} in {expr}")
    return vals.pop() if vals else 0


@dataclass
class NilpotencyReport:
    passed: bool
    checked: int
    witness: str | None = None
    defect: str | None = None


def random_element(spec: LieAlgebraSpec, rng: random.Random, terms: int = 4, degree: int = 3,
                   ghost: int | None = None) -> GradedExpr:
    """Random polynomial over the ghost algebra; fixed ghost number if requested."""
    tb = spec.table
    gens = [v for v in tb if v.kind in ("matter", "ghost", "antighost", "auxiliary")]
    out = GradedExpr.constant(tb, 0)
    tries = 0
    while len(out.terms) < terms and tries < 50 * terms:
        tries += 1
        m = GradedExpr.constant(tb, rng.randint(1, 5) * rng.choice((1, -1)))
        g = 0
        for _ in range(rng.randint(0, degree)):
            v = rng.choice(gens)
            g += v.ghost_number
            m = m * GradedExpr.variable(tb, v)
        if m.is_zero() or (ghost is not None and g != ghost):
            continue
        out = out + m * Fraction(1, rng.randint(1, 3))
    return out


def nilpotency_check(spec: LieAlgebraSpec, samples: int = 50, seed: int = 0) -> NilpotencyReport:
    tb = spec.table
    items = [GradedExpr.variable(tb, v) for v in tb if v.kind in ("matter", "ghost", "antighost", "auxiliary")]
    rng = random.Random(seed)
    items += [random_element(spec, rng) for _ in range(samples)]
    for x in items:
        d = brst_apply(brst_apply(x, spec), spec)
        if not d.is_zero():
            return NilpotencyReport(False, len(items), str(x), str(d))
    return NilpotencyReport(True, len(items))


def homotopy_check(spec: LieAlgebraSpec, samples: int = 50, seed: int = 0) -> NilpotencyReport:
    """{Q_H, Q_B} = N on random elements."""
    rng = random.Random(seed)
    for i in range(samples):
        x = random_element(spec, rng)
        lhs = hodge_apply(brst_apply(x, spec), spec) + brst_apply(hodge_apply(x, spec), spec)
        if lhs != number_operator(x):
            return NilpotencyReport(False, i + 1, str(x), str(lhs - number_operator(x)))
    return NilpotencyReport(True, samples)


def decompose_closed(Y: GradedExpr, spec: LieAlgebraSpec) -> tuple[GradedExpr, GradedExpr]:
    """Y = Y0 + Q Yt with Y0 the N = 0 part and Yt = sum_{N>=1} (1/N) Q_H Y_N."""
    if not brst_apply(Y, spec).is_zero():
        raise NotClosed(f"Q({Y}) != 0")
    grades = n_grades(Y)
    Y0 = grades.get(0, GradedExpr.constant(Y.table, 0))
    Yt = GradedExpr.constant(Y.table, 0)
    for n, part in grades.items():
        if n:
            Yt = Yt + hodge_apply(part, spec) * Fraction(1, n)
    tb = Y.table
    if any(_n_count(tb, k) for k in Y0.terms) or not brst_apply(Y0, spec).is_zero():
        raise ArithmeticError("grade-zero part is not a closed function of w and Phi")
    if Y0 + brst_apply(Yt, spec) != Y:
        raise ArithmeticError("homotopy decomposition failed to reconstruct the input")
    return Y0, Yt
