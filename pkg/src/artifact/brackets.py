"""Graded Poisson and Dirac brackets on a phase space of (q, p) pairs."""

from __future__ import annotations

from dataclasses import dataclass, field

from artifact.superalgebra.errors import ParityError, SuperAlgebraError
from artifact.superalgebra.grassmann import GrassmannNumber
from artifact.superalgebra.supermatrix import SuperMatrix, smat_inverse
from artifact.symalg.expr import GradedExpr
from artifact.symalg.table import VariableTable


class DegenerateOmega(ValueError):
    """The bracket matrix of a would-be second-class set is not invertible."""


class NonConstantOmega(DegenerateOmega):
    """Bracket matrix entries depend on phase-space variables."""


class PhaseSpace:
    """Canonical pairs of a variable table; every other symbol is a parameter."""

    def __init__(self, table: VariableTable):
        self.table = table
        self.pairs = table.pairs()
        for q, p in self.pairs:
            if q.parity != p.parity:
                raise ParityError(f"{q.name} and {p.name} differ in parity")

    @property
    def dimension(self) -> int:
        return len(self.pairs)

    def coordinates(self) -> list:
        """x^M = (q^1..q^N, p_1..p_N)."""
        return [q for q, _ in self.pairs] + [p for _, p in self.pairs]

    def J(self) -> list[list[int]]:
        """Graded symplectic matrix [x^M, x^N} as integers."""
        n = len(self.pairs)
        out = [[0] * (2 * n) for _ in range(2 * n)]
        for a, (q, _) in enumerate(self.pairs):
            out[a][n + a] = -1 if q.parity else 1
            out[n + a][a] = -1
        return out


def _homogeneous(F: GradedExpr) -> int:
    if F.is_zero():
        return 0
    p = F.parity
    if p is None:
        raise ParityError(f"bracket argument has mixed parity: {F}")
    return p


def poisson(F: GradedExpr, G: GradedExpr, ps: PhaseSpace) -> GradedExpr:
    """[F, G} with left derivatives."""
    pf = _homogeneous(F)
    _homogeneous(G)
    out = F.zero()
    if F.is_zero() or G.is_zero():
        return out
    fv = F.variables()
    gv = G.variables()
    for q, p in ps.pairs:
        a = q.parity
        if q.id in fv and p.id in gv:
            t = F.derivative(q) * G.derivative(p)
            out = out - t if (a * pf) & 1 else out + t
        if p.id in fv and q.id in gv:
            t = F.derivative(p) * G.derivative(q)
            out = out + t if (a * (pf + 1)) & 1 else out - t
    return out


def jacobi_defect(F, G, H, bracket) -> GradedExpr:
    """Graded cyclic sum; identically zero for a Lie superbracket.

    ``bracket`` is a two-argument callable such as ``lambda a, b: poisson(a, b, ps)``.
    """
    f, g, h = (_homogeneous(x) for x in (F, G, H))

    def sgn(x):
        return -1 if x & 1 else 1

    return (bracket(F, bracket(G, H)) * sgn(f * h)
            + bracket(G, bracket(H, F)) * sgn(g * f)
            + bracket(H, bracket(F, G)) * sgn(h * g))


@dataclass
class SecondClassSet:
    rho: list
    omega: SuperMatrix
    omega_inverse: SuperMatrix
    parities: list = field(default_factory=list)


def bracket_matrix(rho: list, ps: PhaseSpace) -> list[list[GradedExpr]]:
    return [[poisson(a, b, ps) for b in rho] for a in rho]


def build_second_class(rho: list, ps: PhaseSpace) -> SecondClassSet:
    """Pairwise brackets of ``rho`` with a verified inverse; entries must be constant."""
    tb = ps.table
    par = [_homogeneous(r) for r in rho]
    rows = []
    for s, row in enumerate(bracket_matrix(rho, ps)):
        out = []
        for t, e in enumerate(row):
            if not e.is_constant():
                raise NonConstantOmega(f"bracket [{rho[s]}, {rho[t]}}} = {e} is not constant")
            out.append(e.constant_value())
        rows.append(out)
    try:
        omega = SuperMatrix(tb.n, par, par, rows)
        inv = smat_inverse(omega)
    except SuperAlgebraError as exc:
        raise DegenerateOmega(f"bracket matrix is not invertible: {exc}") from None
    return SecondClassSet(list(rho), omega, inv, par)


def dirac(F: GradedExpr, G: GradedExpr, scs: SecondClassSet | None, ps: PhaseSpace) -> GradedExpr:
    """[F, G}_D = [F, G} - [F, rho_s} (Omega^-1)^{st} [rho_t, G}."""
    out = poisson(F, G, ps)
    if scs is None or not scs.rho:
        return out
    left = [poisson(F, r, ps) for r in scs.rho]
    right = [poisson(r, G, ps) for r in scs.rho]
    inv = scs.omega_inverse.entries
    for s, fs in enumerate(left):
        if fs.is_zero():
            continue
        for t, gt in enumerate(right):
            w = inv[s][t]
            if gt.is_zero() or not w:
                continue
            out = out - fs * GradedExpr.constant(ps.table, w) * gt
    return out


def is_constant_grassmann(e: GradedExpr) -> GrassmannNumber | None:
    return e.constant_value() if e.is_constant() else None
