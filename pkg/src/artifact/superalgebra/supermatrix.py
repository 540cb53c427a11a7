"""Supermatrices over the Grassmann algebra: products, transposes, str, sdet, inverse."""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from artifact.superalgebra.errors import ParityError, SingularBlock, SingularBody
from artifact.superalgebra.grassmann import GrassmannNumber


def _g(n: int, x) -> GrassmannNumber:
    if isinstance(x, GrassmannNumber):
        return x
    return GrassmannNumber.scalar(n, x)


class SuperMatrix:
    """Dense grid of Grassmann numbers with row/column parities.

    Entry (a, b) must have parity ``row_parities[a] + col_parities[b]``
    (mod 2) unless it is zero. The index order is free: blocks are read off
    from the parity lists, not from the position.
    """

    __slots__ = ("n", "row_parities", "col_parities", "entries")

    def __init__(self, n: int, row_parities: Sequence[int], col_parities: Sequence[int],
                 entries: Sequence[Sequence[object]], *, check: bool = True):
        self.n = n
        self.row_parities = tuple(int(p) & 1 for p in row_parities)
        self.col_parities = tuple(int(p) & 1 for p in col_parities)
        rows = [[_g(n, x) for x in row] for row in entries]
        if len(rows) != len(self.row_parities) or any(len(r) != len(self.col_parities) for r in rows):
            raise ValueError("entries do not match the parity lists")
        self.entries = tuple(tuple(r) for r in rows)
        if check:
            self.check_parity()

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, n: int, row_parities, col_parities) -> "SuperMatrix":
        z = GrassmannNumber.scalar(n, 0)
        return cls(n, row_parities, col_parities,
                   [[z] * len(col_parities) for _ in row_parities], check=False)

    @classmethod
    def identity(cls, n: int, parities) -> "SuperMatrix":
        k = len(parities)
        one, z = GrassmannNumber.scalar(n, 1), GrassmannNumber.scalar(n, 0)
        return cls(n, parities, parities,
                   [[one if i == j else z for j in range(k)] for i in range(k)], check=False)

    @classmethod
    def from_rows(cls, n: int, row_parities, col_parities, rows) -> "SuperMatrix":
        return cls(n, row_parities, col_parities, rows)

    def check_parity(self) -> None:
        for a, row in enumerate(self.entries):
            for b, x in enumerate(row):
                if not x:
                    continue
                p = x.parity
                if p is None or p != (self.row_parities[a] + self.col_parities[b]) & 1:
                    raise ParityError(f"entry ({a},{b}) = {x} has wrong parity")

    # shape ----------------------------------------------------------------
    @property
    def shape(self) -> tuple[int, int]:
        return len(self.row_parities), len(self.col_parities)

    def __getitem__(self, ij) -> GrassmannNumber:
        i, j = ij
        return self.entries[i][j]

    def rows(self) -> list[list[GrassmannNumber]]:
        return [list(r) for r in self.entries]

    def is_square(self) -> bool:
        return self.row_parities == self.col_parities

    # algebra --------------------------------------------------------------
    def __matmul__(self, other: "SuperMatrix") -> "SuperMatrix":
        if self.col_parities != other.row_parities:
            raise ParityError("inner parities do not match")
        n = self.n
        k = len(self.col_parities)
        cols = [tuple(r[j] for r in other.entries) for j in range(len(other.col_parities))]
        out = []
        for row in self.entries:
            nz = [(t, row[t]) for t in range(k) if row[t]]
            new = []
            for col in cols:
                acc = GrassmannNumber.scalar(n, 0)
                for t, x in nz:
                    y = col[t]
                    if y:
                        acc = acc + x * y
                new.append(acc)
            out.append(new)
        return SuperMatrix(n, self.row_parities, other.col_parities, out, check=False)

    def __add__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._same_shape(other)
        return SuperMatrix(self.n, self.row_parities, self.col_parities,
                           [[x + y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)],
                           check=False)

    def __sub__(self, other: "SuperMatrix") -> "SuperMatrix":
        self._same_shape(other)
        return SuperMatrix(self.n, self.row_parities, self.col_parities,
                           [[x - y for x, y in zip(r, s)] for r, s in zip(self.entries, other.entries)],
                           check=False)

    def __neg__(self) -> "SuperMatrix":
        return SuperMatrix(self.n, self.row_parities, self.col_parities,
                           [[-x for x in r] for r in self.entries], check=False)

    def scale(self, c) -> "SuperMatrix":
        """Left multiplication of every entry by an even scalar c."""
        c = _g(self.n, c)
        return SuperMatrix(self.n, self.row_parities, self.col_parities,
                           [[c * x for x in r] for r in self.entries], check=False)

    def _same_shape(self, other):
        if self.row_parities != other.row_parities or self.col_parities != other.col_parities:
            raise ParityError("shape/parity mismatch")

    def __eq__(self, other):
        if not isinstance(other, SuperMatrix):
            return NotImplemented
        return (self.row_parities == other.row_parities and self.col_parities == other.col_parities
                and self.entries == other.entries)

    def __hash__(self):
        return hash((self.row_parities, self.col_parities, self.entries))

    # body/soul ------------------------------------------------------------
    def body(self) -> list[list[Fraction]]:
        return [[x.body for x in r] for r in self.entries]

    def body_matrix(self) -> "SuperMatrix":
        return SuperMatrix(self.n, self.row_parities, self.col_parities,
                           [[x.body for x in r] for r in self.entries], check=False)

    def soul_matrix(self) -> "SuperMatrix":
        return self - self.body_matrix()

    def is_pure_soul(self) -> bool:
        return all(not x.body for r in self.entries for x in r)

    def is_zero(self) -> bool:
        return all(not x for r in self.entries for x in r)

    def is_real(self) -> bool:
        return all(x.is_scalar() for r in self.entries for x in r)

    # index manipulation ---------------------------------------------------
    def submatrix(self, rows: Sequence[int], cols: Sequence[int]) -> "SuperMatrix":
        return SuperMatrix(self.n, [self.row_parities[i] for i in rows], [self.col_parities[j] for j in cols],
                           [[self.entries[i][j] for j in cols] for i in rows], check=False)

    def permuted(self, row_order: Sequence[int], col_order: Sequence[int]) -> "SuperMatrix":
        return self.submatrix(row_order, col_order)

    def row_indices(self, parity: int) -> list[int]:
        return [i for i, p in enumerate(self.row_parities) if p == parity]

    def col_indices(self, parity: int) -> list[int]:
        return [j for j, p in enumerate(self.col_parities) if p == parity]

    def blocks(self):
        """(A, Psi, Theta, B) read off the parity lists."""
        r0, r1 = self.row_indices(0), self.row_indices(1)
        c0, c1 = self.col_indices(0), self.col_indices(1)
        return (self.submatrix(r0, c0), self.submatrix(r0, c1),
                self.submatrix(r1, c0), self.submatrix(r1, c1))

    # printing -------------------------------------------------------------
    def to_lists(self) -> list[list[str]]:
        return [[str(x) for x in r] for r in self.entries]

    def __repr__(self):
        return f"SuperMatrix(rows={self.row_parities}, cols={self.col_parities}, {self.to_lists()})"


# transposes ---------------------------------------------------------------

def smat_transpose(m: SuperMatrix) -> SuperMatrix:
    """(M^T)_ab = (-1)^{#a(#a+#b)} M_ba with #a, #b the parities of M^T's indices."""
    rp, cp = m.col_parities, m.row_parities
    out = []
    for a, pa in enumerate(rp):
        row = []
        for b, pb in enumerate(cp):
            x = m.entries[b][a]
            row.append(-x if (pa * (pa + pb)) & 1 else x)
        out.append(row)
    return SuperMatrix(m.n, rp, cp, out, check=False)


def smat_conjugate(m: SuperMatrix) -> SuperMatrix:
    """(M*)_ab = (-1)^{#b(#a+#b)} (M_ab)*."""
    out = []
    for a, pa in enumerate(m.row_parities):
        row = []
        for b, pb in enumerate(m.col_parities):
            x = m.entries[a][b].conjugate()
            row.append(-x if (pb * (pa + pb)) & 1 else x)
        out.append(row)
    return SuperMatrix(m.n, m.row_parities, m.col_parities, out, check=False)


def smat_dagger(m: SuperMatrix) -> SuperMatrix:
    return smat_transpose(smat_conjugate(m))


# determinants and inverses ---------------------------------------------------

def _rational_inverse(a: list[list[Fraction]]) -> list[list[Fraction]] | None:
    """Gauss-Jordan over the rationals; None when singular."""
    k = len(a)
    m = [list(r) + [Fraction(int(i == j)) for j in range(k)] for i, r in enumerate(a)]
    for c in range(k):
        piv = next((r for r in range(c, k) if m[r][c]), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        inv = 1 / m[c][c]
        m[c] = [x * inv for x in m[c]]
        for r in range(k):
            if r != c and m[r][c]:
                f = m[r][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [r[k:] for r in m]


def rational_rank(a: list[list[Fraction]]) -> int:
    m = [list(r) for r in a]
    if not m:
        return 0
    rank = 0
    cols = len(m[0])
    for c in range(cols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c] / m[rank][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[rank])]
        rank += 1
    return rank


def det_even(m: SuperMatrix) -> GrassmannNumber:
    """Determinant of a matrix whose entries are all even (commuting).

    Laplace expansion with memoised minors; sizes here stay small.
    """
    k = m.shape[0]
    if m.shape[1] != k:
        raise ValueError("det of a non-square matrix")
    n = m.n
    if k == 0:
        return GrassmannNumber.scalar(n, 1)
    e = m.entries

    @lru_cache(maxsize=None)
    def minor(row: int, cols: tuple[int, ...]) -> GrassmannNumber:
        if row == k:
            return GrassmannNumber.scalar(n, 1)
        acc = GrassmannNumber.scalar(n, 0)
        for pos, c in enumerate(cols):
            x = e[row][c]
            if not x:
                continue
            sub = minor(row + 1, cols[:pos] + cols[pos + 1:])
            if not sub:
                continue
            t = x * sub
            acc = acc - t if pos & 1 else acc + t
        return acc

    return minor(0, tuple(range(k)))


def inverse_even(m: SuperMatrix) -> SuperMatrix:
    """Inverse of a bosonic matrix: body inverse plus the nilpotent soul series."""
    k = m.shape[0]
    n = m.n
    b = _rational_inverse(m.body())
    if b is None:
        raise SingularBody("bosonic block has a singular body")
    binv = SuperMatrix(n, m.row_parities, m.col_parities, b, check=False) if k else m
    if k == 0:
        return m
    soul = m.soul_matrix()
    x = -(binv @ soul)
    term = SuperMatrix.identity(n, m.col_parities)
    acc = term
    for _ in range(n + 1):
        term = term @ x
        if term.is_zero():
            break
        acc = acc + term
    return acc @ binv


def _even_order(parities: Sequence[int]) -> list[int]:
    return [i for i, p in enumerate(parities) if p == 0] + [i for i, p in enumerate(parities) if p == 1]


def _require_square(m: SuperMatrix):
    if not m.is_square():
        raise ParityError("operation needs a square supermatrix with matching row/column parities")


def supertrace(m: SuperMatrix) -> GrassmannNumber:
    _require_square(m)
    acc = GrassmannNumber.scalar(m.n, 0)
    for i, p in enumerate(m.row_parities):
        acc = acc - m.entries[i][i] if p else acc + m.entries[i][i]
    return acc


def superdeterminant(m: SuperMatrix, *, cross_check: bool = True) -> GrassmannNumber:
    """sdet = det(A - Psi B^-1 Theta) / det B, cross-checked against det A / det(B - Theta A^-1 Psi)."""
    _require_square(m)
    a, psi, theta, b = m.blocks()
    da, db = det_even(a).body, det_even(b).body
    if not da or not db:
        raise SingularBlock("det(A)_body * det(B)_body vanishes")
    binv = inverse_even(b)
    first = det_even(a - psi @ binv @ theta) * det_even(b).inverse()
    if cross_check:
        ainv = inverse_even(a)
        second = det_even(a) * det_even(b - theta @ ainv @ psi).inverse()
        if first != second:  # pragma: no cover - would indicate an arithmetic bug
            raise AssertionError(f"sdet formulas disagree: {first} vs {second}")
    return first


def smat_inverse(m: SuperMatrix) -> SuperMatrix:
    """Block inverse; bosonic pieces via inverse_even. Verified M M^-1 = 1."""
    _require_square(m)
    n = m.n
    order = _even_order(m.row_parities)
    mp = m.permuted(order, order)
    a, psi, theta, b = mp.blocks()
    try:
        ainv = inverse_even(a)
        binv = inverse_even(b)
    except SingularBody:
        raise SingularBody("supermatrix body is not invertible") from None
    s_a = inverse_even(a - psi @ binv @ theta)
    s_b = inverse_even(b - theta @ ainv @ psi)
    top_right = -(ainv @ psi @ s_b)
    bottom_left = -(binv @ theta @ s_a)
    k0 = len(a.row_parities)
    kk = len(order)
    rows = []
    for i in range(kk):
        row = []
        for j in range(kk):
            if i < k0 and j < k0:
                row.append(s_a.entries[i][j])
            elif i < k0:
                row.append(top_right.entries[i][j - k0])
            elif j < k0:
                row.append(bottom_left.entries[i - k0][j])
            else:
                row.append(s_b.entries[i - k0][j - k0])
        rows.append(row)
    inv_p = SuperMatrix(n, mp.row_parities, mp.col_parities, rows, check=False)
    back = [0] * kk
    for pos, i in enumerate(order):
        back[i] = pos
    inv = inv_p.permuted(back, back)
    ident = SuperMatrix.identity(n, m.row_parities)
    if m @ inv != ident or inv @ m != ident:  # pragma: no cover
        raise AssertionError("block inverse failed verification")
    return inv


def smat_from_rationals(rows: Iterable[Iterable[object]], n: int = 0, parities=None) -> SuperMatrix:
    rows = [list(r) for r in rows]
    k = len(rows)
    c = len(rows[0]) if rows else 0
    rp = parities if parities is not None else [0] * k
    cp = parities if parities is not None else [0] * c
    return SuperMatrix(n, rp, cp, rows)
