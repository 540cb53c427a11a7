"""Jet-space calculus: total time derivative, Euler-Lagrange operator,
total-derivative extraction and the reality conjugation."""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from artifact.symalg.expr import GradedExpr
from artifact.symalg.table import JetOrderOverflow, VariableTable


def _jet_ids(table: VariableTable) -> dict[int, tuple[int, int]]:
    """id -> (position id, order) for every position and jet variable."""
    out = {}
    for v in table:
        jb = table.jet_base(v)
        if jb is not None:
            out[v.id] = (jb[0].id, jb[1])
    return out


def jet_order(F: GradedExpr) -> int:
    """Highest jet order present in F (0 when only positions and t appear)."""
    jets = _jet_ids(F.table)
    return max((jets[i][1] for i in F.variables() if i in jets), default=0)


def total_time_derivative(F: GradedExpr) -> GradedExpr:
    """d/dt = d/dt|explicit + sum_n q_{n+1} * (left d/dq_n)."""
    tb = F.table
    out = F.derivative(tb.time)
    jets = _jet_ids(tb)
    for vid in sorted(F.variables()):
        if vid not in jets:
            continue
        dF = F.derivative(vid)
        if dF.is_zero():
            continue
        qid, n = jets[vid]
        nxt = tb.jet(qid, n + 1)  # raises JetOrderOverflow
        out = out + GradedExpr.variable(tb, nxt) * dF
    return out


def prolong(f: GradedExpr, n: int) -> GradedExpr:
    """f_n = (d/dt)^n f."""
    if n > f.table.max_jet_order:
        raise JetOrderOverflow(f"prolongation order {n} exceeds maximum {f.table.max_jet_order}")
    for _ in range(n):
        f = total_time_derivative(f)
    return f


def euler_lagrange(F: GradedExpr, positions=None, grow: bool = True) -> list[GradedExpr]:
    """delta F / delta q^A = sum_n (-d/dt)^n dF/dq^A_n for each position.

    With ``grow`` the table's jet towers are extended as needed instead of
    raising on overflow.
    """
    tb = F.table
    pos = [tb[p] for p in (positions if positions is not None else tb.positions)]
    order = jet_order(F)
    if grow and 2 * order > tb.max_jet_order:
        tb.ensure_jet_order(2 * order)
    out = []
    for q in pos:
        acc = GradedExpr.constant(tb, 0)
        for n in range(order, -1, -1):
            # Horner: acc = dF/dq_n - d/dt acc
            acc = F.derivative(tb.jet(q, n)) - total_time_derivative(acc)
        out.append(acc)
    return out


def _integrate_even(G: GradedExpr, vid: int) -> GradedExpr:
    """J with dJ/dy = G for an even variable y (polynomial times exp)."""
    tb = G.table
    y = GradedExpr.variable(tb, tb[vid])
    out = GradedExpr.constant(tb, 0)
    for (e, o, l), c in G.terms.items():
        k = 0
        rest_e = []
        for i, m in e:
            if i == vid:
                k = m
            else:
                rest_e.append((i, m))
        a = dict(l).get(vid, Fraction(0))
        base = GradedExpr(tb, {(tuple(rest_e), o, l): c})
        if not a:
            out = out + base * (y ** (k + 1)) * Fraction(1, k + 1)
        else:
            poly = GradedExpr.constant(tb, 0)
            for j in range(k + 1):
                coef = Fraction((-1) ** j * factorial(k), factorial(k - j)) / a ** (j + 1)
                poly = poly + (y ** (k - j)) * coef
            out = out + base * poly
    return out


def _integrate(G: GradedExpr, vid: int) -> GradedExpr:
    tb = G.table
    if tb[vid].parity:
        if G.depends_on(vid):
            raise ArithmeticError("odd one-form component depends on its own variable")
        return GradedExpr.variable(tb, tb[vid]) * G
    return _integrate_even(G, vid)


def _closed_potential(comps: list[tuple[int, GradedExpr]]) -> GradedExpr | None:
    """K with left dK/dy^A = F_A for all A, or None when the one-form is not exact."""
    if not comps:
        return None
    tb = comps[0][1].table
    K = GradedExpr.constant(tb, 0)
    try:
        for vid, FA in comps:
            G = FA - K.derivative(vid)
            if G:
                K = K + _integrate(G, vid)
    except ArithmeticError:
        return None
    for vid, FA in comps:
        if K.derivative(vid) != FA:
            return None
    return K


def extract_total_derivative(F: GradedExpr) -> GradedExpr | None:
    """Return K with dK/dt = F, or None when F is not a total derivative.

    Peels the top jet order: F must be affine in the top jets q_M, the
    coefficients form a closed one-form in q_{M-1} whose potential K_1 is
    subtracted, and the remainder of lower order is treated the same way.
    At order zero what is left must depend on t alone and is integrated in t.
    """
    tb = F.table
    jets = _jet_ids(tb)
    K = GradedExpr.constant(tb, 0)
    rem = F
    while True:
        if rem.is_zero():
            break
        M = jet_order(rem)
        present = [i for i in rem.variables() if i in jets]
        if M == 0:
            if present:
                return None
            # non-jet parameters ride along in the t-integral
            K = K + _integrate_even(rem, tb.time.id)
            rem = GradedExpr.constant(tb, 0)
            break
        tops = sorted({i for i in present if jets[i][1] == M})
        comps = []
        for vid in tops:
            FA = rem.derivative(vid)
            if any(FA.depends_on(w) for w in tops):
                return None
            qid, _ = jets[vid]
            comps.append((tb.jet(qid, M - 1).id, FA))
        K1 = _closed_potential(comps)
        if K1 is None:
            return None
        K = K + K1
        new = rem - total_time_derivative(K1)
        if jet_order(new) >= M and not new.is_zero():
            return None
        rem = new
    if total_time_derivative(K) != F:
        return None
    return K


def hermitian_conjugate(F: GradedExpr) -> GradedExpr:
    """Reality conjugation: q and t are real, odd momenta flip sign, products reverse."""
    tb = F.table
    out = {}
    for (e, o, l), c in F.terms.items():
        m = len(o)
        sign = -1 if (m * (m - 1) // 2) & 1 else 1
        for i in o:
            if tb[i].kind == "momentum":
                sign = -sign
        cc = c.conjugate()
        if m & 1:
            cc = cc.involution()
        if sign < 0:
            cc = -cc
        out[(e, o, l)] = cc
    return GradedExpr(tb, out)
