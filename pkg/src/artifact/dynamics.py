"""Numerical evolution under total Hamiltonians.

The even sector is integrated on real vectors with the monodromy (tangent
map) carried along. Odd variables enter only through H_T quadratic in them,
so each odd coordinate is a real vector over the Grassmann generators that
evolves linearly with the same scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.linalg import expm

from artifact.brackets import build_second_class, dirac, poisson
from artifact.constraints import ConstraintReport, HamiltonianModel, total_hamiltonian
from artifact.symalg.expr import GradedExpr


class SchemeMismatch(ValueError):
    pass


class NonFiniteState(ArithmeticError):
    pass


# schedules ---------------------------------------------------------------------

@dataclass
class Piece:
    start: float
    coeffs: tuple          # polynomial in (t - start), lowest degree first


class PiecewisePolynomial:
    """Continuous piecewise polynomial in t; derivative jumps are allowed."""

    def __init__(self, pieces, tol: float = 1e-12):
        ps = []
        for p in pieces:
            if isinstance(p, Piece):
                ps.append(p)
            else:
                start, coeffs = p
                if not isinstance(coeffs, (list, tuple)):
                    coeffs = [coeffs]
                ps.append(Piece(float(start), tuple(float(Fraction(c)) for c in coeffs)))
        if not ps:
            ps = [Piece(0.0, (0.0,))]
        ps.sort(key=lambda p: p.start)
        for a, b in zip(ps, ps[1:]):
            left = _poly(a.coeffs, b.start - a.start)
            if abs(left - b.coeffs[0]) > tol * max(1.0, abs(left)):
                raise ValueError(f"schedule discontinuous at t={b.start}: {left} != {b.coeffs[0]}")
        self.pieces = ps

    @classmethod
    def constant(cls, c) -> "PiecewisePolynomial":
        return cls([(0.0, [c])])

    @classmethod
    def polynomial(cls, coeffs) -> "PiecewisePolynomial":
        return cls([(0.0, list(coeffs))])

    def piece_at(self, t: float) -> Piece:
        cur = self.pieces[0]
        for p in self.pieces:
            if p.start <= t + 1e-15:
                cur = p
        return cur

    def __call__(self, t: float) -> float:
        p = self.piece_at(t)
        return _poly(p.coeffs, t - p.start)

    def breakpoints(self) -> list[float]:
        return [p.start for p in self.pieces[1:]]

    def degree(self) -> int:
        return max(len(p.coeffs) for p in self.pieces) - 1

    def local_coeffs(self, t0: float) -> list[float]:
        """Taylor coefficients in s = t - t0 of the piece active at t0."""
        p = self.piece_at(t0)
        c = list(p.coeffs)
        d = t0 - p.start
        out = [0.0] * len(c)
        for k, ck in enumerate(c):
            for j in range(k + 1):
                out[j] += ck * math.comb(k, j) * d ** (k - j)
        return out


def _poly(c, x):
    acc = 0.0
    for ck in reversed(c):
        acc = acc * x + ck
    return acc


class MultiplierSchedule(dict):
    """Free multiplier name -> :class:`PiecewisePolynomial`."""

    @classmethod
    def from_spec(cls, spec: dict | None) -> "MultiplierSchedule":
        out = cls()
        for name, val in (spec or {}).items():
            if isinstance(val, PiecewisePolynomial):
                out[name] = val
            elif isinstance(val, (int, float, str, Fraction)):
                out[name] = PiecewisePolynomial.constant(val)
            elif val and isinstance(val[0], (list, tuple)):
                out[name] = PiecewisePolynomial(val)
            else:
                out[name] = PiecewisePolynomial.polynomial(val)
        return out

    def values(self, names, t):
        return [self[n](t) if n in self else 0.0 for n in names]

    def breakpoints(self) -> list[float]:
        return sorted({b for p in dict.values(self) for b in p.breakpoints()})


# numeric compilation ---------------------------------------------------------------

class NumExpr:
    """Float evaluator of the body of a GradedExpr over slots (state, params, t)."""

    def __init__(self, expr: GradedExpr, slots: dict[int, int]):
        self.terms = []
        for (e, o, l), c in expr.terms.items():
            if o:
                continue
            coef = float(c.body)
            if coef == 0.0:
                continue
            facs = []
            for i, k in e:
                if i not in slots:
                    raise KeyError(f"no numeric value for {expr.table[i].name}")
                facs.append((slots[i], k))
            ex = []
            for i, a in l:
                if i not in slots:
                    raise KeyError(f"no numeric value for {expr.table[i].name}")
                ex.append((slots[i], float(a)))
            self.terms.append((coef, tuple(facs), tuple(ex)))

    def __call__(self, vals) -> float:
        acc = 0.0
        for coef, facs, ex in self.terms:
            v = coef
            for j, k in facs:
                v *= vals[j] ** k if k != 1 else vals[j]
            if ex:
                v *= math.exp(sum(a * vals[j] for j, a in ex))
            acc += v
        return acc

    def is_zero(self) -> bool:
        return not self.terms


@dataclass
class TrajectoryState:
    t: float
    x: np.ndarray
    odd: np.ndarray
    monodromy: np.ndarray


@dataclass
class Trajectory:
    states: list
    system: "CompiledSystem"
    schedule: MultiplierSchedule
    scheme: str

    @property
    def final(self) -> TrajectoryState:
        return self.states[-1]

    def value(self, expr: GradedExpr, state: TrajectoryState) -> float:
        return self.system.evaluate(expr, state, self.schedule)


class CompiledSystem:
    """Hamilton's equations of H_T compiled for float evaluation."""

    def __init__(self, hm: HamiltonianModel, H_T: GradedExpr, *, bracket: str = "poisson",
                 second_class: list | None = None):
        tb = hm.table
        self.table = tb
        self.H_T = H_T
        pairs = tb.pairs()
        self.even = [(q, p) for q, p in pairs if q.parity == 0]
        self.odd = [(q, p) for q, p in pairs if q.parity == 1]
        self.coords = [q for q, _ in self.even] + [p for _, p in self.even]
        self.odd_coords = [q for q, _ in self.odd] + [p for _, p in self.odd]
        phase = tb.phase_ids()
        self.params = sorted({i for i in H_T.variables() if i not in phase and i != tb.time.id
                              and tb[i].kind != "grassmann-constant"})
        self.param_names = [tb[i].name for i in self.params]
        self.slots = {v.id: k for k, v in enumerate(self.coords)}
        base = len(self.coords)
        for k, i in enumerate(self.params):
            self.slots[i] = base + k
        self.t_slot = base + len(self.params)
        self.slots[tb.time.id] = self.t_slot
        ps = hm.phase_space
        if bracket == "dirac":
            scs = build_second_class(second_class or [], ps)
            field_exprs = [dirac(GradedExpr.variable(tb, x), H_T, scs, ps) for x in self.coords]
        else:
            field_exprs = [poisson(GradedExpr.variable(tb, x), H_T, ps) for x in self.coords]
        self.field_exprs = field_exprs
        self.f = [NumExpr(e, self.slots) for e in field_exprs]
        self.jac = []
        for i, e in enumerate(field_exprs):
            for j, x in enumerate(self.coords):
                d = e.derivative(x)
                if d:
                    self.jac.append((i, j, NumExpr(d, self.slots)))
        # odd sector: xdot_odd = A(t) x_odd, A read off the linear coefficients
        self.odd_A = []
        oid = {v.id: k for k, v in enumerate(self.odd_coords)}
        for i, x in enumerate(self.odd_coords):
            e = poisson(GradedExpr.variable(tb, x), H_T, ps)
            for (ev, o, l), c in e.terms.items():
                if len(o) != 1:
                    if o:
                        raise SchemeMismatch("odd sector is not linear")
                    continue
                coeff = GradedExpr(tb, {(ev, (), l): c})
                self.odd_A.append((i, oid[o[0]], NumExpr(coeff, self.slots)))
        self.n = len(self.coords)
        self.m = len(self.odd_coords)
        self._const_jac = None
        if all(not facs and not ex for _, _, f in self.jac for _, facs, ex in f.terms):
            self._const_jac = self.jacobian(np.zeros(self.n), 0.0, [0.0] * len(self.params))
        self._const_odd = None
        if all(not facs and not ex for _, _, f in self.odd_A for _, facs, ex in f.terms):
            self._const_odd = self.odd_matrix(np.zeros(self.n), 0.0, [0.0] * len(self.params))

    def _vals(self, x, t, pv):
        return list(x) + list(pv) + [t]

    def rhs(self, x, t, pv):
        vals = self._vals(x, t, pv)
        return np.array([f(vals) for f in self.f], dtype=float)

    def jacobian(self, x, t, pv):
        if self._const_jac is not None:
            return self._const_jac
        vals = self._vals(x, t, pv)
        J = np.zeros((self.n, self.n))
        for i, j, f in self.jac:
            J[i, j] = f(vals)
        return J

    def odd_matrix(self, x, t, pv):
        if self._const_odd is not None:
            return self._const_odd
        vals = self._vals(x, t, pv)
        A = np.zeros((self.m, self.m))
        for i, j, f in self.odd_A:
            A[i, j] += f(vals)
        return A

    def evaluate(self, expr: GradedExpr, state: TrajectoryState, schedule) -> float | np.ndarray:
        pv = schedule.values(self.param_names, state.t)
        vals = self._vals(state.x, state.t, pv)
        if expr.parity == 1:
            # odd observable linear in odd coordinates: Grassmann-coefficient vector
            oid = {v.id: k for k, v in enumerate(self.odd_coords)}
            out = np.zeros(state.odd.shape[1] if state.odd.size else 0)
            for (ev, o, l), c in expr.terms.items():
                if len(o) != 1 or o[0] not in oid:
                    continue
                coeff = NumExpr(GradedExpr(expr.table, {(ev, (), l): c}), self.slots)(vals)
                out = out + coeff * state.odd[oid[o[0]]]
            return out
        return NumExpr(expr, self.slots)(vals)

    def affine_data(self):
        """(A, b0, B) with f = A x + b0 + B v; raises unless the field is affine and autonomous."""
        tb = self.table
        coord_ids = {v.id for v in self.coords}
        param_ids = set(self.params)
        for e in self.field_exprs:
            if e.depends_on(tb.time) or e.has_exp():
                raise SchemeMismatch("exact-linear needs a quadratic, autonomous H_T")
            for (ev, o, l), c in e.terms.items():
                deg_x = sum(k for i, k in ev if i in coord_ids)
                deg_v = sum(k for i, k in ev if i in param_ids)
                if deg_x + deg_v > 1:
                    raise SchemeMismatch("exact-linear needs a quadratic H_T with linear multipliers")
        zero = np.zeros(self.n)
        pz = [0.0] * len(self.params)
        A = self.jacobian(zero, 0.0, pz)
        b0 = self.rhs(zero, 0.0, pz)
        B = np.zeros((self.n, len(self.params)))
        for k in range(len(self.params)):
            e = list(pz)
            e[k] = 1.0
            B[:, k] = self.rhs(zero, 0.0, e) - b0
        Aodd = self.odd_matrix(zero, 0.0, pz)
        if any(f.terms and any(j >= self.n for j, _ in sum((t[1] for t in f.terms), ())) for _, _, f in self.odd_A):
            raise SchemeMismatch("odd sector depends on multipliers; use rk4")
        return A, b0, B, Aodd


def _check_finite(x, t):
    if not np.all(np.isfinite(x)):
        raise NonFiniteState(f"nonfinite state at t={t}")


def _state_vector(system: CompiledSystem, x0: dict):
    x = np.zeros(system.n)
    tb = system.table
    g = max(tb.n, 1)
    odd = np.zeros((system.m, g))
    for name, val in (x0 or {}).items():
        v = tb[name]
        if v.parity == 0:
            x[system.coords.index(v)] = float(Fraction(val)) if isinstance(val, str) else float(val)
        else:
            k = system.odd_coords.index(v)
            for gen, c in (val or {}).items():
                odd[k, int(gen) - 1] = float(Fraction(c)) if isinstance(c, str) else float(c)
    return x, odd


def evolve(hm: HamiltonianModel, report: ConstraintReport | None, x0: dict,
           schedule: MultiplierSchedule | dict | None = None, *, dt: float = 1e-3, steps: int = 1000,
           scheme: str = "rk4", H_T: GradedExpr | None = None, bracket: str = "poisson",
           record_every: int = 1, t0: float = 0.0) -> Trajectory:
    """Integrate q_dot = (-1)^{#A} dH_T/dp_A, p_dot = -dH_T/dq^A with the tangent map."""
    if not isinstance(schedule, MultiplierSchedule):
        schedule = MultiplierSchedule.from_spec(schedule)
    if H_T is None:
        H_T = total_hamiltonian(hm, report) if report is not None else hm.raw_total_hamiltonian()
    sc = None
    if bracket == "dirac":
        sc = [report.constraints[i] for i in report.second_class] if report else []
    system = CompiledSystem(hm, H_T, bracket=bracket, second_class=sc)
    missing = [n for n in system.param_names if n not in schedule]
    for n in missing:
        schedule[n] = PiecewisePolynomial.constant(0)
    x, odd = _state_vector(system, x0)
    S = np.eye(system.n)
    t = t0
    states = [TrajectoryState(t, x.copy(), odd.copy(), S.copy())]
    if scheme == "rk4":
        step = _rk4_step
    elif scheme == "exact-linear":
        data = system.affine_data()
        step = _make_exact_step(system, data)
    else:
        raise SchemeMismatch(f"unknown scheme {scheme!r}")
    bps = schedule.breakpoints()
    for k in range(steps):
        t1 = t0 + (k + 1) * dt
        # split at schedule breakpoints inside the step
        cuts = [b for b in bps if t < b < t1 - 1e-15]
        ta = t
        for tb_ in cuts + [t1]:
            x, odd, S = step(system, schedule, x, odd, S, ta, tb_ - ta)
            ta = tb_
        t = t1
        _check_finite(x, t)
        if (k + 1) % record_every == 0 or k + 1 == steps:
            states.append(TrajectoryState(t, x.copy(), odd.copy(), S.copy()))
    return Trajectory(states, system, schedule, scheme)


def _rk4_step(system, schedule, x, odd, S, t, h):
    names = system.param_names

    def F(xx, oo, SS, tt):
        pv = schedule.values(names, tt)
        J = system.jacobian(xx, tt, pv)
        A = system.odd_matrix(xx, tt, pv) if system.m else None
        return system.rhs(xx, tt, pv), (A @ oo if A is not None else oo * 0), J @ SS

    k1 = F(x, odd, S, t)
    k2 = F(x + h / 2 * k1[0], odd + h / 2 * k1[1], S + h / 2 * k1[2], t + h / 2)
    k3 = F(x + h / 2 * k2[0], odd + h / 2 * k2[1], S + h / 2 * k2[2], t + h / 2)
    k4 = F(x + h * k3[0], odd + h * k3[1], S + h * k3[2], t + h)
    out = []
    for i, base in enumerate((x, odd, S)):
        out.append(base + h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]))
    return tuple(out)


def _make_exact_step(system, data):
    A, b0, B, Aodd = data
    n = system.n
    names = system.param_names
    cache: dict = {}

    def step(system_, schedule, x, odd, S, t, h):
        coeffs = [schedule[nm].local_coeffs(t) for nm in names]
        d = max([len(c) for c in coeffs] + [1])
        # augmented state (x, 1, s, s^2, ...): b(t+s) = b0 + sum_k B_k v_k(t+s)
        M = np.zeros((n + d, n + d))
        M[:n, :n] = A
        M[:n, n] = b0
        for k, c in enumerate(coeffs):
            for j, cj in enumerate(c):
                M[:n, n + j] += B[:, k] * cj
        for j in range(1, d):
            M[n + j, n + j - 1] = j
        E = expm(M * h)
        z = np.zeros(n + d)
        z[:n] = x
        z[n] = 1.0
        z = E @ z
        key = round(h, 15)
        if key not in cache:
            cache[key] = (expm(A * h), expm(Aodd * h) if system.m else None)
        EA, EO = cache[key]
        odd2 = EO @ odd if EO is not None else odd
        return z[:n], odd2, EA @ S

    return step


# diagnostics ----------------------------------------------------------------------------

def _J(n2):
    n = n2 // 2
    J = np.zeros((n2, n2))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def symplectic_check(traj: Trajectory) -> float:
    """max over the trajectory of |S^T J S - J| (even sector)."""
    n = traj.system.n
    if n == 0:
        return 0.0
    J = _J(n)
    return max(float(np.max(np.abs(s.monodromy.T @ J @ s.monodromy - J))) for s in traj.states)


def constraint_drift(traj: Trajectory, report: ConstraintReport | None) -> dict:
    if report is None:
        return {}
    out = {}
    for phi in report.constraints:
        worst = 0.0
        for s in traj.states:
            v = traj.value(phi, s)
            worst = max(worst, float(np.max(np.abs(v))) if np.ndim(v) else abs(v))
        out[str(phi)] = worst
    return out


def conservation_report(traj: Trajectory, charges: list) -> dict:
    out = {}
    for Q in charges:
        q0 = traj.value(Q, traj.states[0])
        worst = 0.0
        for s in traj.states[1:]:
            worst = max(worst, float(np.max(np.abs(np.asarray(traj.value(Q, s)) - q0))))
        out[str(Q)] = worst
    return out


def gauge_difference(hm: HamiltonianModel, report: ConstraintReport, x0: dict, schedule1, schedule2,
                     observable: GradedExpr, dt: float, t0: float = 0.0) -> tuple[float, float]:
    """One-step difference of F under two schedules and its first-order prediction."""
    s1 = schedule1 if isinstance(schedule1, MultiplierSchedule) else MultiplierSchedule.from_spec(schedule1)
    s2 = schedule2 if isinstance(schedule2, MultiplierSchedule) else MultiplierSchedule.from_spec(schedule2)
    tr1 = evolve(hm, report, x0, s1, dt=dt, steps=1, t0=t0)
    tr2 = evolve(hm, report, x0, s2, dt=dt, steps=1, t0=t0)
    measured = tr2.value(observable, tr2.final) - tr1.value(observable, tr1.final)
    ps = hm.phase_space
    predicted = 0.0
    for sym, phi in zip(report.free_symbols, report.primary_first_class):
        dv = s2.get(sym.name, PiecewisePolynomial.constant(0))(t0) - s1.get(sym.name, PiecewisePolynomial.constant(0))(t0)
        if dv:
            b = poisson(observable, phi, ps)
            predicted += tr1.value(b, tr1.states[0]) * dv * dt
    return float(measured), float(predicted)


def state_error(traj: Trajectory, exact: dict) -> float:
    """max |x(T) - exact| over named coordinates at the final state."""
    s = traj.final
    err = 0.0
    for name, val in exact.items():
        v = traj.system.table[name]
        err = max(err, abs(s.x[traj.system.coords.index(v)] - val))
    return err
