"""Noether charges and symmetry generators of constrained systems."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

from artifact.brackets import poisson
from artifact.constraints import (
    ConstraintIdeal,
    ConstraintReport,
    HamiltonianModel,
    LagrangianModel,
    _to_constant_matrix,
    solve_linear,
    total_hamiltonian,
    velocity_formula,
)
from artifact.superalgebra.supermatrix import SuperMatrix
from artifact.symalg.expr import GradedExpr
from artifact.symalg.jet import euler_lagrange, jet_order, total_time_derivative


class UnverifiedSymmetry(ValueError):
    pass


class NonStatic(ValueError):
    pass


class EliminationFailure(ValueError):
    pass


@dataclass
class SymmetryCandidate:
    delta_q: dict            # position name -> GradedExpr in (q, q_dot, t)
    delta_K: GradedExpr
    name: str = "symmetry"

    def variation(self, table, q) -> GradedExpr:
        e = self.delta_q.get(table[q].name)
        return e if e is not None else GradedExpr.constant(table, 0)


@dataclass
class InvarianceResult:
    verified: bool
    residual: GradedExpr
    kl1_residuals: list = field(default_factory=list)
    integrability_ok: bool = True

    def __bool__(self):
        return self.verified


def _positions(model):
    return [q for q, _ in model.table.pairs()]


def _check_parities(model, s: SymmetryCandidate):
    tb = model.table
    for name, e in s.delta_q.items():
        q = tb[name]
        if e and e.parity is not None and e.parity != q.parity:
            raise ValueError(f"variation of {name} has the wrong parity")


def delta_L(model: LagrangianModel, s: SymmetryCandidate) -> GradedExpr:
    """delta L = sum_n (delta q)_n dL/dq_n with prolonged variations."""
    tb = model.table
    L = model.L
    order = jet_order(L)
    out = L.zero()
    for q in _positions(model):
        dq = s.variation(tb, q)
        for n in range(order + 1):
            if dq.is_zero():
                break
            if n:
                dq = total_time_derivative(dq)
            out = out + dq * L.derivative(tb.jet(q, n))
    return out


def verify_offshell_invariance(model: LagrangianModel, s: SymmetryCandidate) -> InvarianceResult:
    """delta L - d(delta K)/dt must vanish identically."""
    _check_parities(model, s)
    tb = model.table
    res = delta_L(model, s) - total_time_derivative(s.delta_K)
    kl1 = []
    ok = True
    if res.is_zero():
        qs = _positions(model)
        vel = [tb.jet(q, 1) for q in qs]
        X = []
        for qa in vel:
            lhs = GradedExpr.constant(tb, 0)
            for q, qb in zip(qs, vel):
                lhs = lhs + s.variation(tb, q).derivative(qa) * model.L.derivative(qb)
            r = lhs - s.delta_K.derivative(qa)
            X.append(lhs)
            kl1.append(r)
        for i, a in enumerate(vel):
            for c in vel[i + 1:]:
                sign = -1 if (a.parity and c.parity) else 1
                if X[vel.index(c)].derivative(a) * sign - X[i].derivative(c):
                    ok = False
    return InvarianceResult(res.is_zero(), res, kl1, ok)


def noether_charge(model: LagrangianModel, s: SymmetryCandidate, *, check: bool = True) -> GradedExpr:
    """Q = delta q^A dL/dq_dot^A - delta K."""
    tb = model.table
    if check:
        r = verify_offshell_invariance(model, s)
        if not r.verified:
            raise UnverifiedSymmetry(f"{s.name}: residual {r.residual}")
    Q = -s.delta_K
    for q in _positions(model):
        dq = s.variation(tb, q)
        if dq:
            Q = Q + dq * model.L.derivative(tb.jet(q, 1))
    if check:
        d = conservation_defect(model, s, Q)
        if d:  # pragma: no cover - follows from the verified identity
            raise AssertionError(f"Noether identity fails: {d}")
    return Q


def conservation_defect(model: LagrangianModel, s: SymmetryCandidate, Q: GradedExpr) -> GradedExpr:
    """dQ/dt - delta q^A (d/dt dL/dq_dot^A - dL/dq^A); zero for a verified symmetry."""
    tb = model.table
    qs = _positions(model)
    el = euler_lagrange(model.L, qs)
    out = total_time_derivative(Q)
    for q, e in zip(qs, el):
        dq = s.variation(tb, q)
        if dq:
            out = out + dq * e
    return out


def _velocity_substitution(hm: HamiltonianModel, report: ConstraintReport | None):
    tb = hm.table
    HT = total_hamiltonian(hm, report) if report is not None else hm.raw_total_hamiltonian()
    vel = velocity_formula(hm, HT)
    return {tb.jet(q, 1).id: vel[q.id] for q, _ in tb.pairs()}, HT


def total_noether_charge(model: LagrangianModel, s: SymmetryCandidate, hm: HamiltonianModel,
                         report: ConstraintReport | None = None, *, check: bool = True) -> GradedExpr:
    """Q_T = delta q~^A p_A - delta K~ with velocities replaced on the primary surface."""
    tb = model.table
    if check:
        r = verify_offshell_invariance(model, s)
        if not r.verified:
            raise UnverifiedSymmetry(f"{s.name}: residual {r.residual}")
    sub, HT = _velocity_substitution(hm, report)
    higher = {v.id for v in tb if v.kind == "jet" and v.order >= 2}
    QT = GradedExpr.constant(tb, 0)
    dqt = {}
    for q, p in tb.pairs():
        dq = s.variation(tb, q)
        if dq.variables() & higher:
            raise EliminationFailure(f"variation of {q.name} involves accelerations")
        d = dq.subs(sub)
        dqt[q.id] = d
        QT = QT + d * GradedExpr.variable(tb, p)
    dK = s.delta_K
    if dK.variables() & higher:
        raise EliminationFailure("delta K involves accelerations")
    QT = QT - dK.subs(sub)
    if check and report is not None:
        chk = check_total_charge(QT, dqt, hm, report, HT)
        if not chk["generates"] or not chk["conserved"]:
            raise EliminationFailure(f"total Noether charge checks failed: {chk}")
    return QT


def check_total_charge(QT, dqt: dict, hm: HamiltonianModel, report: ConstraintReport, HT=None) -> dict:
    """Generation on the primary surface and conservation up to the constraint ideal."""
    tb = hm.table
    ps = hm.phase_space
    HT = HT if HT is not None else total_hamiltonian(hm, report)
    prim = ConstraintIdeal(hm.primary, tb) if hm.primary else None
    gen = True
    for q, _ in tb.pairs():
        d = poisson(GradedExpr.variable(tb, q), QT, ps) - dqt.get(q.id, QT.zero())
        if prim is not None:
            d = prim.restrict(d)
        if d:
            gen = False
    R = poisson(QT, HT, ps) + QT.derivative(tb.time)
    if report.constraints:
        R = ConstraintIdeal(report.constraints, tb).restrict(R)
    return {"generates": gen, "conserved": R.is_zero(), "residual": R}


# generator criterion -----------------------------------------------------------------

@dataclass
class GeneratorCheckResult:
    verdict: str                          # "generator" | "not-generator"
    delta_v: list = field(default_factory=list)
    delta_w: dict = field(default_factory=dict)
    residual: GradedExpr | None = None
    reason: str = ""
    dropped: GradedExpr | None = None     # phase-space independent f(t) removed

    @property
    def is_generator(self) -> bool:
        return self.verdict == "generator"


def _split_phase_free(R: GradedExpr, phase: set):
    keep = R.filter_terms(lambda k, c: any(i in phase for i, _ in k[0]) or any(i in phase for i in k[1])
                          or any(i in phase for i, _ in k[2]))
    return keep, R - keep


def linear_quadratic_split(R: GradedExpr, chain: list, table):
    """R = R0 + sum_h phi_h r^h + sum_{h,h'} phi_h phi_h' d^{hh'} with r^h and R0 pivot-free."""
    ideal = ConstraintIdeal(chain, table)
    R0, c = ideal.reduce(R)
    lin = []
    quad = {}
    for h, ch in enumerate(c):
        r, d = ideal.reduce(ch)
        lin.append(r)
        for hp, x in enumerate(d):
            if x:
                quad[(h, hp)] = x
    return R0, lin, quad


def is_symmetry_generator(Q: GradedExpr, hm: HamiltonianModel, report: ConstraintReport,
                          H_T: GradedExpr | None = None) -> GeneratorCheckResult:
    """Decide whether [Q,H_T} + dQ/dt = phi1st_i dv^i + 1/2 phi_h phi_h' dw^{hh'}."""
    tb = hm.table
    ps = hm.phase_space
    phase = tb.phase_ids()
    if Q.parity not in (0, None) or (Q.parity is None and not Q.is_zero()):
        return GeneratorCheckResult("not-generator", reason="charge is not even")
    HT = H_T if H_T is not None else total_hamiltonian(hm, report)
    chain = report.constraints
    # on-shell first-class precondition
    if chain:
        ideal = ConstraintIdeal(chain, tb)
        for ph in chain:
            b = ideal.restrict(poisson(Q, ph, ps))
            if b:
                return GeneratorCheckResult("not-generator", residual=b,
                                            reason=f"[Q, {ph}}} does not vanish on the constraint surface")
    R = poisson(Q, HT, ps) + Q.derivative(tb.time)
    R, dropped = _split_phase_free(R, phase)
    if not chain:
        if R:
            return GeneratorCheckResult("not-generator", residual=R, reason="nonzero residual", dropped=dropped)
        return GeneratorCheckResult("generator", dropped=dropped)
    R0, lin, quad = linear_quadratic_split(R, chain, tb)
    if R0:
        return GeneratorCheckResult("not-generator", residual=R0, reason="residual off the constraint surface",
                                    dropped=dropped)
    nprim = len(hm.primary)
    for h in range(nprim, len(chain)):
        if lin[h]:
            return GeneratorCheckResult("not-generator", residual=chain[h] * lin[h],
                                        reason="linear term outside the primary first-class span",
                                        dropped=dropped)
    kernel = report.kernel
    rhs = lin[:nprim]
    if kernel:
        ppar = [p.parity or 0 for p in hm.primary]
        kpar = [_vec_parity(v, ppar) for v in kernel]
        A = SuperMatrix(tb.n, ppar, kpar, [[v[m] for v in kernel] for m in range(nprim)])
        sol = solve_linear(A, rhs, tb)
        bad = [(m, r) for m, r in sol.residuals if r]
        if bad:
            m, r = bad[0]
            return GeneratorCheckResult("not-generator", residual=r,
                                        reason="linear term outside the primary first-class span",
                                        dropped=dropped)
        dv = sol.values
    else:
        if any(rhs):
            m = next(i for i, r in enumerate(rhs) if r)
            return GeneratorCheckResult("not-generator", residual=chain[m] * rhs[m],
                                        reason="no primary first-class constraints", dropped=dropped)
        dv = []
    dw = {k: v * 2 for k, v in quad.items()}
    # exact witness check
    chk = R
    for vec, d in zip(report.primary_first_class, dv):
        chk = chk - vec * d
    for (h, hp), w in dw.items():
        chk = chk - chain[h] * chain[hp] * w * Fraction(1, 2)
    if chk:  # pragma: no cover - internal consistency guard
        raise AssertionError(f"generator witness failed: {chk}")
    return GeneratorCheckResult("generator", dv, dw, dropped=dropped)


def _vec_parity(vec, par):
    for x, p in zip(vec, par):
        if x:
            xp = x.parity or 0
            return (xp + p) & 1
    return 0


# gauge generators ----------------------------------------------------------------------

@dataclass
class GaugeConditions:
    first_class: list                 # phi1st in order: primary (a) then secondary (s)
    n_primary: int
    T_linear: list                    # T[x][y]: coefficient of phi1st_x in [phi1st_y, H_T}
    T_quadratic: dict                 # y -> {(h, h'): expr}
    ode: list                         # per secondary s: list of (index, coefficient) beyond d eps^s/dt
    flags: list = field(default_factory=list)

    @property
    def constant(self) -> bool:
        return all(e.is_constant() for row in self.T_linear for e in row)

    def check(self, eps: dict, table) -> dict:
        """Residual of each ODE row for polynomial eps(t) given by index -> expression."""
        out = {}
        zero = GradedExpr.constant(table, 0)
        for s in range(self.n_primary, len(self.first_class)):
            r = eps.get(s, zero).derivative(table.time)
            for x in range(len(self.first_class)):
                c = self.T_linear[s][x]
                if c:
                    r = r + c * eps.get(x, zero)
            out[s] = r
        return out

    def holds(self, eps: dict, table) -> bool:
        return all(r.is_zero() for r in self.check(eps, table).values()) and not self.T_quadratic_nonzero()

    def T_quadratic_nonzero(self) -> bool:
        return any(self.T_quadratic.values())


def gauge_generator_conditions(report: ConstraintReport, hm: HamiltonianModel) -> GaugeConditions:
    tb = hm.table
    ps = hm.phase_space
    if hm.explicit_time:
        raise NonStatic("gauge generator conditions require a static model")
    HT = total_hamiltonian(hm, report)
    fc = list(report.primary_first_class) + report.secondary_first_class()
    npc = len(report.primary_first_class)
    chain = report.constraints
    flags = []
    K = len(fc)
    if K == 0:
        return GaugeConditions([], 0, [], {}, [], flags)
    # coefficient vectors of phi1st over the chain basis
    ideal = ConstraintIdeal(chain, tb)
    vecs = []
    for f in fc:
        R0, c = ideal.reduce(f)
        vecs.append([x for x in c])
    cpar = [p.parity or 0 for p in chain]
    fpar = [f.parity or 0 for f in fc]
    A = _to_constant_matrix([[vecs[x][h] for x in range(K)] for h in range(len(chain))], cpar, fpar, tb.n)
    T_lin = [[GradedExpr.constant(tb, 0)] * K for _ in range(K)]
    T_quad = {}
    for y, f in enumerate(fc):
        R = poisson(f, HT, ps)
        R0, lin, quad = linear_quadratic_split(R, chain, tb)
        if R0:
            flags.append(f"[{f}, H_T}} is not weakly zero: {R0}")
        sol = solve_linear(A, lin, tb)
        if any(r for _, r in sol.residuals):
            flags.append(f"[{f}, H_T}} has a linear part outside the first-class span")
        for x in range(K):
            T_lin[x][y] = sol.values[x]
        if quad:
            T_quad[y] = {k: v * 2 for k, v in quad.items()}
            flags.append(f"[{f}, H_T}} has a quadratic-ideal part; condition flagged, not solved")
    if any(not e.is_constant() for row in T_lin for e in row):
        flags.append("T matrices are expression-valued")
    ode = []
    for s in range(npc, K):
        ode.append([(x, T_lin[s][x]) for x in range(K) if T_lin[s][x]])
    return GaugeConditions(fc, npc, T_lin, T_quad, ode, flags)
