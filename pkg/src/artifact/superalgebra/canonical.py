"""Canonical forms of supermatrices under invertible left/right (or congruence) transformations.

Every routine returns a :class:`CanonicalFormResult` and re-verifies
``left @ input @ right == canonical`` before returning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Sequence

from artifact.superalgebra.errors import SingularBody, SymmetryViolation
from artifact.superalgebra.grassmann import GrassmannNumber
from artifact.superalgebra.supermatrix import (
    SuperMatrix,
    _rational_inverse,
    det_even,
    inverse_even,
    rational_rank,
    smat_transpose,
)


@dataclass(frozen=True)
class CanonicalFormResult:
    left: SuperMatrix
    right: SuperMatrix
    canonical: SuperMatrix
    rank_data: dict = field(default_factory=dict)
    # position blocks of the canonical matrix, e.g. {"b": [0, 1], "s": [2]}
    row_blocks: dict = field(default_factory=dict)
    col_blocks: dict = field(default_factory=dict)

    def reconstructs(self, m: SuperMatrix) -> bool:
        return self.left @ m @ self.right == self.canonical

    def soul_blocks_ok(self) -> bool:
        """Entries outside the declared body-carrying blocks have zero body."""
        body_rows = set(self.row_blocks.get("body", []))
        body_cols = set(self.col_blocks.get("body", []))
        for i, row in enumerate(self.canonical.entries):
            for j, x in enumerate(row):
                if i in body_rows and j in body_cols:
                    continue
                if x.body:
                    return False
        return True


def _perm_matrix(n: int, order: Sequence[int], parities: Sequence[int]) -> SuperMatrix:
    """Row-selection matrix S with (S M) = M.permuted(order, ...)."""
    k = len(order)
    one, z = GrassmannNumber.scalar(n, 1), GrassmannNumber.scalar(n, 0)
    rows = [[one if c == order[r] else z for c in range(k)] for r in range(k)]
    return SuperMatrix(n, [parities[i] for i in order], parities, rows, check=False)


def _blockdiag(n: int, a: SuperMatrix, b: SuperMatrix) -> SuperMatrix:
    z = GrassmannNumber.scalar(n, 0)
    rows = [list(r) + [z] * b.shape[1] for r in a.entries]
    rows += [[z] * a.shape[1] + list(r) for r in b.entries]
    return SuperMatrix(n, a.row_parities + b.row_parities, a.col_parities + b.col_parities, rows, check=False)


def _verify(res: CanonicalFormResult, m: SuperMatrix) -> CanonicalFormResult:
    if not res.reconstructs(m):  # pragma: no cover - internal consistency guard
        raise AssertionError("canonical form failed to reconstruct")
    for f in (res.left, res.right):
        if rational_rank(f.body()) != f.shape[0]:  # pragma: no cover
            raise AssertionError("transformation is not invertible")
    return res


# column orthogonalization -----------------------------------------------

def orthogonalize_columns(m: SuperMatrix):
    """Graded Gram-Schmidt on the columns of a bosonic matrix.

    Returns (Q, MQ, k): the first k columns of MQ are mutually orthogonal
    under the dagger scalar product with nonzero bodies; the rest are pure soul.
    """
    n = m.n
    rows, cols = m.shape
    if any(m.row_parities) or any(m.col_parities):
        raise ValueError("orthogonalize_columns expects a bosonic matrix")
    vcols = [[m.entries[i][j] for i in range(rows)] for j in range(cols)]
    zero, one = GrassmannNumber.scalar(n, 0), GrassmannNumber.scalar(n, 1)

    def dot(u, v):
        acc = zero
        for x, y in zip(u, v):
            acc = acc + x.conjugate() * y
        return acc

    ws: list[tuple[list, list]] = []  # (w column, Q column)
    souls: list[tuple[list, list]] = []
    for j in range(cols):
        w = list(vcols[j])
        q = [one if t == j else zero for t in range(cols)]
        for wi, qi in ws:
            c = dot(wi, w) * dot(wi, wi).inverse()
            w = [x - y * c for x, y in zip(w, wi)]
            q = [x - y * c for x, y in zip(q, qi)]
        if any(x.body for x in w):
            ws.append((w, q))
        else:
            souls.append((w, q))
    ordered = ws + souls
    qmat = SuperMatrix(n, m.col_parities, m.col_parities,
                       [[ordered[c][1][r] for c in range(cols)] for r in range(cols)], check=False)
    mq = SuperMatrix(n, m.row_parities, m.col_parities,
                     [[ordered[c][0][r] for c in range(cols)] for r in range(rows)], check=False)
    return qmat, mq, len(ws)


# generic canonical form ---------------------------------------------------

class _Work:
    """Mutable elimination state tracking left and right factors."""

    def __init__(self, m: SuperMatrix):
        self.n = m.n
        self.rp, self.cp = m.row_parities, m.col_parities
        self.m = [list(r) for r in m.entries]
        ident_l = SuperMatrix.identity(m.n, self.rp)
        ident_r = SuperMatrix.identity(m.n, self.cp)
        self.left = [list(r) for r in ident_l.entries]
        self.right = [list(r) for r in ident_r.entries]

    def scale_row(self, i, c):
        self.m[i] = [c * x for x in self.m[i]]
        self.left[i] = [c * x for x in self.left[i]]

    def row_sub(self, i, k, f):
        # row_i -= f * row_k
        self.m[i] = [x - f * y for x, y in zip(self.m[i], self.m[k])]
        self.left[i] = [x - f * y for x, y in zip(self.left[i], self.left[k])]

    def col_sub(self, j, k, g):
        # col_j -= col_k * g
        for r in self.m:
            if r[k]:
                r[j] = r[j] - r[k] * g
        for r in self.right:
            if r[k]:
                r[j] = r[j] - r[k] * g

    def pivot(self, i, k, normalize: bool):
        p = self.m[i][k]
        pinv = p.inverse()
        if normalize:
            self.scale_row(i, pinv)
            pinv = GrassmannNumber.scalar(self.n, 1)
        for r in range(len(self.m)):
            if r != i and self.m[r][k]:
                self.row_sub(r, i, self.m[r][k] * pinv)
        for c in range(len(self.cp)):
            if c != k and self.m[i][c]:
                self.col_sub(c, k, pinv * self.m[i][c])


def canonical_form_generic(m: SuperMatrix, normalize: bool | None = None) -> CanonicalFormResult:
    """P' M P = (1,0,0,0 / 0,s1,0,psi / 0,0,1,0 / 0,chi,0,s2).

    For purely bosonic input the pivots are kept (Lambda = diag(lambda_i))
    unless ``normalize`` is forced.
    """
    n = m.n
    if normalize is None:
        normalize = any(m.row_parities) or any(m.col_parities)
    w = _Work(m)
    used_r: set[int] = set()
    used_c: set[int] = set()
    pivots: dict[int, list[tuple[int, int]]] = {0: [], 1: []}
    for par in (0, 1):
        rows = [i for i, p in enumerate(w.rp) if p == par]
        cols = [j for j, p in enumerate(w.cp) if p == par]
        while True:
            found = None
            for j in cols:
                if j in used_c:
                    continue
                for i in rows:
                    if i not in used_r and w.m[i][j].body:
                        found = (i, j)
                        break
                if found:
                    break
            if not found:
                break
            i, j = found
            w.pivot(i, j, normalize)
            used_r.add(i)
            used_c.add(j)
            pivots[par].append((i, j))

    def order(pars, used, piv_idx):
        out = []
        for par in (0, 1):
            out += [pv[piv_idx] for pv in pivots[par]]
            out += [x for x, p in enumerate(pars) if p == par and x not in used]
        return out

    row_order = order(w.rp, used_r, 0)
    col_order = order(w.cp, used_c, 1)
    cur = SuperMatrix(n, w.rp, w.cp, w.m, check=False)
    left = SuperMatrix(n, w.rp, w.rp, w.left, check=False)
    right = SuperMatrix(n, w.cp, w.cp, w.right, check=False)
    canonical = cur.permuted(row_order, col_order)
    pl = _perm_matrix(n, row_order, w.rp)
    pr = _perm_matrix(n, col_order, w.cp)
    left = pl @ left
    right = right @ smat_transpose(pr)
    k1, k2 = len(pivots[0]), len(pivots[1])
    n1 = sum(1 for p in w.rp if p == 0)
    m1 = sum(1 for p in w.cp if p == 0)
    body_r = list(range(k1)) + list(range(n1, n1 + k2))
    body_c = list(range(k1)) + list(range(m1, m1 + k2))
    res = CanonicalFormResult(left, right, canonical, {"k1": k1, "k2": k2, "k": k1 + k2},
                              {"body": body_r, "pivot_rows": [pv[0] for pv in pivots[0] + pivots[1]]},
                              {"body": body_c, "pivot_cols": [pv[1] for pv in pivots[0] + pivots[1]]})
    return _verify(res, m)


# desouling ---------------------------------------------------------------

def desoul_coefficients(count: int) -> list[Fraction]:
    """a_0..a_count from a_1 = -1/2, a_{n+1} = -a_n - 1/2 sum_j a_j (a_{n+1-j} + a_{n-j})."""
    a = [Fraction(0), Fraction(-1, 2)]
    while len(a) <= count:
        nn = len(a) - 1
        s = sum(a[j] * (a[nn + 1 - j] + a[nn - j]) for j in range(1, nn + 1))
        a.append(-a[nn] - s / 2)
    return a[: count + 1]


def _symmetry_sign(a: SuperMatrix) -> int:
    t = smat_transpose(a)
    if t == a:
        return 1
    if t == -a:
        return -1
    raise SymmetryViolation("matrix is neither symmetric nor antisymmetric")


def desoul(a: SuperMatrix) -> CanonicalFormResult:
    """P A P^T = A_body with P = 1 + sum a_n (A_soul A_body^-1)^n."""
    n = a.n
    if a.shape[0] != a.shape[1]:
        raise ValueError("desoul needs a square matrix")
    if any((p + q) & 1 for p in a.row_parities for q in a.col_parities):
        raise ValueError("desoul needs an even (bosonic) matrix")
    _symmetry_sign(a)
    a0 = a.body_matrix()
    if a.shape[0] and _rational_inverse(a0.body()) is None:
        raise SingularBody("body of A is singular")
    ident = SuperMatrix.identity(n, a.row_parities)
    if a.shape[0] == 0:
        return CanonicalFormResult(ident, ident, a, {"k": 0}, {"body": []}, {"body": []})
    x = a.soul_matrix() @ inverse_even(a0)
    coeffs = desoul_coefficients(n + 1)
    p = ident
    power = ident
    for k in range(1, n + 2):
        power = power @ x
        if power.is_zero():
            break
        p = p + power.scale(coeffs[k])
    res = CanonicalFormResult(p, smat_transpose(p), a0, {"k": a.shape[0]},
                              {"body": list(range(a.shape[0]))}, {"body": list(range(a.shape[0]))})
    return _verify(res, a)


# antisymmetric even matrices ---------------------------------------------

def canonical_form_antisym(a: SuperMatrix) -> CanonicalFormResult:
    """P A P^T = diag(b, s) for bosonic A with A^T = +-A; b body-invertible, s pure soul."""
    n = a.n
    k = a.shape[0]
    if a.shape[0] != a.shape[1] or a.row_parities != a.col_parities:
        raise ValueError("canonical_form_antisym needs a square matrix")
    if any((p + q) & 1 for p in a.row_parities for q in a.col_parities):
        raise ValueError("canonical_form_antisym needs a bosonic matrix")
    _symmetry_sign(a)
    body = a.body()
    r = rational_rank(body)
    chosen: tuple[int, ...] = ()
    if r:
        for combo in combinations(range(k), r):
            sub = [[body[i][j] for j in combo] for i in combo]
            if _rational_inverse(sub) is not None:
                chosen = combo
                break
    rest = [i for i in range(k) if i not in chosen]
    order = list(chosen) + rest
    pi = _perm_matrix(n, order, a.row_parities)
    ap = pi @ a @ smat_transpose(pi)
    a_ii = ap.submatrix(range(r), range(r))
    a_ji = ap.submatrix(range(r, k), range(r))
    pars = ap.row_parities
    zero, one = GrassmannNumber.scalar(n, 0), GrassmannNumber.scalar(n, 1)
    kmat = [[one if i == j else zero for j in range(k)] for i in range(k)]
    if r and k > r:
        f = -(a_ji @ inverse_even(a_ii))
        for i in range(r, k):
            for j in range(r):
                kmat[i][j] = f.entries[i - r][j]
    kk = SuperMatrix(n, pars, pars, kmat, check=False)
    p5 = desoul(a_ii).left if r else SuperMatrix.identity(n, ())
    diag = _blockdiag(n, p5, SuperMatrix.identity(n, pars[r:]))
    p = diag @ kk @ pi
    canon = p @ a @ smat_transpose(p)
    res = CanonicalFormResult(p, smat_transpose(p), canon, {"k": r},
                              {"body": list(range(r))}, {"body": list(range(r))})
    _verify(res, a)
    if not canon.submatrix(range(r, k), range(r, k)).is_pure_soul():  # pragma: no cover
        raise AssertionError("soul block carries a body")
    return res


# antihermitian supermatrices ---------------------------------------------

def _check_antihermitian(om: SuperMatrix) -> None:
    if not om.is_square():
        raise SymmetryViolation("Omega must be square with matching parities")
    for a, pa in enumerate(om.row_parities):
        for b, pb in enumerate(om.col_parities):
            lhs = om.entries[a][b]
            rhs = om.entries[b][a]
            expect = rhs if (pa * pb) & 1 else -rhs
            if lhs != expect:
                raise SymmetryViolation(f"Omega[{a},{b}] breaks the graded antisymmetry")


def canonical_form_antihermitian(om: SuperMatrix) -> CanonicalFormResult:
    """L Omega L^T = (b-,0,0,0 / 0,s-,0,psi / 0,0,b+,0 / 0,-psi^T,0,s+).

    The odd-odd block is handled in the real encoding: it is symmetric and
    carries no explicit imaginary unit.
    """
    _check_antihermitian(om)
    n = om.n
    pars = om.row_parities
    order = [i for i, p in enumerate(pars) if p == 0] + [i for i, p in enumerate(pars) if p == 1]
    ne = sum(1 for p in pars if p == 0)
    no = len(pars) - ne
    pi0 = _perm_matrix(n, order, pars)
    x0 = pi0 @ om @ smat_transpose(pi0)
    spars = x0.row_parities
    zero = GrassmannNumber.scalar(n, 0)

    # step 1: even block
    r6 = canonical_form_antisym(x0.submatrix(range(ne), range(ne)))
    km = r6.rank_data["k"]
    r1 = _blockdiag(n, r6.left, SuperMatrix.identity(n, spars[ne:]))
    x1 = r1 @ x0 @ smat_transpose(r1)

    # step 2: clear the (odd, b-) coupling
    l2 = [list(r) for r in SuperMatrix.identity(n, spars).entries]
    if km and no:
        b_inv = inverse_even(x1.submatrix(range(km), range(km)))
        theta = x1.submatrix(range(ne, ne + no), range(km))
        c = -(theta @ b_inv)
        for i in range(no):
            for j in range(km):
                l2[ne + i][j] = c.entries[i][j]
    l2m = SuperMatrix(n, spars, spars, l2, check=False)
    x2 = l2m @ x1 @ smat_transpose(l2m)

    # step 3: odd block
    r6b = canonical_form_antisym(x2.submatrix(range(ne, ne + no), range(ne, ne + no)))
    kp = r6b.rank_data["k"]
    r3 = _blockdiag(n, SuperMatrix.identity(n, spars[:ne]), r6b.left)
    x3 = r3 @ x2 @ smat_transpose(r3)

    # step 4: clear the (s-, b+) coupling
    l4 = [list(r) for r in SuperMatrix.identity(n, spars).entries]
    if kp and ne > km:
        bp_inv = inverse_even(x3.submatrix(range(ne, ne + kp), range(ne, ne + kp)))
        psi = x3.submatrix(range(km, ne), range(ne, ne + kp))
        y = -(psi @ bp_inv)
        for i in range(ne - km):
            for j in range(kp):
                l4[km + i][ne + j] = y.entries[i][j]
    l4m = SuperMatrix(n, spars, spars, l4, check=False)
    x4 = l4m @ x3 @ smat_transpose(l4m)

    left = l4m @ r3 @ l2m @ r1 @ pi0
    body = list(range(km)) + list(range(ne, ne + kp))
    res = CanonicalFormResult(left, smat_transpose(left), x4,
                              {"k_minus": km, "k_plus": kp, "n_minus": ne, "n_plus": no},
                              {"body": body}, {"body": body})
    _verify(res, om)
    # the body-carrying blocks must decouple from everything else
    for i in range(len(spars)):
        for j in range(len(spars)):
            inside = (i < km and j < km) or (ne <= i < ne + kp and ne <= j < ne + kp)
            touches = i < km or j < km or ne <= i < ne + kp or ne <= j < ne + kp
            if touches and not inside and x4.entries[i][j] != zero:  # pragma: no cover
                raise AssertionError("canonical form left a coupling to a body block")
    if not res.soul_blocks_ok():  # pragma: no cover
        raise AssertionError("soul block carries a body")
    return res


__all__ = [
    "CanonicalFormResult",
    "orthogonalize_columns",
    "canonical_form_generic",
    "desoul",
    "desoul_coefficients",
    "canonical_form_antisym",
    "canonical_form_antihermitian",
    "det_even",
]
