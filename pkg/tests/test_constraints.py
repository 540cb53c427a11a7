import random
from fractions import Fraction

import pytest

from artifact.cli import constraint_report, ensure_hamiltonian
from artifact.constraints import (
    ConstraintError,
    ConstraintIdeal,
    HamiltonianModel,
    InconsistentModel,
    LagrangianModel,
    NonAffineResidual,
    NotPreserved,
    analyze_chain,
    extended_hamiltonian,
    hamiltonian_to_lagrangian,
    ideal_reduce,
    momenta,
    primary_constraints,
    run_dirac_bergmann,
    total_hamiltonian,
    verify_constraint_set,
)
from artifact.symalg import VariableTable
from helpers import model, rand_expr


def strs(xs):
    return [str(x) for x in xs]


def test_para4_chain():
    m = model("para4")
    hm = ensure_hamiltonian(m)
    tb = m.table
    assert hm.H == tb.parse("1/2*p1^2 + 1/2*p2^2 + 1/2*q2^2 + 1/2*q4^2")
    assert strs(hm.primary) == ["p3", "p4"]
    r = run_dirac_bergmann(hm)
    assert [(str(p), t) for p, t in r.chain] == [("p3", 1), ("p4", 1), ("q4", 2)]
    assert r.first_class == [0] and r.second_class == [1, 2]
    assert r.dof == 2
    assert strs(r.multipliers) == ["v1", "0"]
    assert [u.name for u in r.multiplier_symbols] == ["u_p3", "u_p4"]
    assert strs(r.primary_first_class) == ["p3"]
    assert total_hamiltonian(hm, r) == tb.parse("1/2*p1^2 + 1/2*p2^2 + 1/2*q2^2 + 1/2*q4^2 + p3*v1")
    assert extended_hamiltonian(r, hm) == total_hamiltonian(hm, r)


def test_para4_incomplete_chain_not_preserved():
    hm = ensure_hamiltonian(model("para4"))
    with pytest.raises(NotPreserved) as info:
        analyze_chain(hm, [(p, 1) for p in hm.primary])
    assert str(info.value.constraint) == "p4"
    assert str(info.value.residual) == "-q4"


def test_diracce_verified():
    m = model("diracce")
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    assert [(str(p), t) for p, t in r.chain] == [("p_y", 1), ("p_x", 2)]
    assert r.first_class == [0, 1] and r.second_class == []
    assert r.dof == 0
    assert any("Dirac conjecture" in c for c in r.caveats)
    T = verify_constraint_set(hm, m.manual)
    assert T[1][0] == m.table.parse("1/2*p_x*exp(-y)")


def test_fermion_pair():
    m = model("fermion_pair")
    hm = ensure_hamiltonian(m)
    assert hm.H.is_zero()
    assert hm.primary[0] == m.table.parse("p_psi1 - 1/2*psi1")
    r = run_dirac_bergmann(hm)
    assert r.first_class == [] and r.dof == 1
    assert all(u.is_zero() for u in r.multipliers)


def test_momenta():
    m = model("para4")
    assert strs(momenta(m.lagrangian)) == ["q1_dot", "q2_dot", "0", "0"]


def test_inconsistent_model():
    tb = VariableTable(0)
    tb.add_position("q")
    tb.add_position("r")
    hm = HamiltonianModel(tb, tb.parse("1/2*p_q^2 + r"), [tb.parse("p_r")])
    with pytest.raises(InconsistentModel):
        run_dirac_bergmann(hm)


def test_nonaffine_residual():
    tb = VariableTable(0)
    tb.add_position("q")
    tb.add_position("r")
    hm = HamiltonianModel(tb, tb.parse("1/2*p_q^2 + 1/2*r^2*q^2"), [tb.parse("p_r")])
    with pytest.raises(NonAffineResidual):
        run_dirac_bergmann(hm)


def test_odd_lagrangian_rejected():
    tb = VariableTable(1)
    tb.add_position("psi", 1)
    with pytest.raises(ConstraintError):
        LagrangianModel(tb, tb.parse("psi"))


def test_ideal_reduce_examples():
    tb = VariableTable(0)
    for n in ("x", "y"):
        tb.add_position(n)
    phi = [tb.parse("p_x - y"), tb.parse("p_y")]
    R, c = ideal_reduce(tb.parse("p_x^2 + p_y*x"), phi)
    assert R == tb.parse("y^2")
    assert c[0] * phi[0] + c[1] * phi[1] + R == tb.parse("p_x^2 + p_y*x")


def test_ideal_reduce_random():
    tb = VariableTable(2)
    tb.add_position("x")
    tb.add_position("th", 1)
    phis = [tb.parse("p_x - 2*x + 1"), tb.parse("p_th - 1/2*th")]
    ideal = ConstraintIdeal(phis, tb)
    vs = [tb[n] for n in ("x", "p_x", "th", "p_th")]
    rng = random.Random(9)
    for _ in range(60):
        F = rand_expr(rng, tb, vs, rng.randint(0, 1))
        R, c = ideal.reduce(F)
        assert not R.depends_on("p_x") and not R.depends_on("p_th")
        acc = R
        for p, x in zip(phis, c):
            acc = acc + p * x
        assert acc == F
        assert ideal.restrict(F) == R


def test_hamiltonian_round_trip():
    for name in ("para4", "fermion_pair", "harmonic"):
        m = model(name)
        hm, _ = primary_constraints(m.lagrangian)
        back = hamiltonian_to_lagrangian(hm)
        assert back.L == m.lagrangian.L, name


def _halfness_model(mat):
    k = len(mat)
    tb = VariableTable(k)
    for a in range(k):
        tb.add_position(f"psi{a + 1}", 1)
    L = tb.parse("0")
    for a in range(k):
        for b in range(k):
            if mat[a][b]:
                L = L + tb.parse(f"psi{a + 1}_dot*psi{b + 1}") * mat[a][b]
    return tb, LagrangianModel(tb, L)


@pytest.mark.parametrize("seed", range(5))
def test_fermion_halfness(seed):
    rng = random.Random(seed)
    k = rng.randint(1, 3)
    while True:
        mat = [[Fraction(0)] * k for _ in range(k)]
        for a in range(k):
            for b in range(a, k):
                mat[a][b] = mat[b][a] = Fraction(rng.randint(-4, 4), rng.randint(1, 3))
        tb, lm = _halfness_model(mat)
        hm, _ = primary_constraints(lm)
        try:
            r = run_dirac_bergmann(hm)
        except ConstraintError:
            continue
        if len(r.second_class) == k:
            break
    assert r.dof == Fraction(k, 2)
    for a in range(k):
        expected = tb.parse(f"p_psi{a + 1}")
        for b in range(k):
            expected = expected - tb.parse(f"psi{b + 1}") * mat[a][b]
        assert hm.primary[a] == expected
