import pytest

from artifact.cli import constraint_report, ensure_hamiltonian
from artifact.constraints import HamiltonianModel, run_dirac_bergmann
from artifact.symalg import VariableTable
from artifact.symmetry import (
    NonStatic,
    SymmetryCandidate,
    UnverifiedSymmetry,
    check_total_charge,
    conservation_defect,
    gauge_generator_conditions,
    is_symmetry_generator,
    noether_charge,
    total_noether_charge,
    verify_offshell_invariance,
)
from helpers import model

FIXTURES = ["para4", "fermion_pair", "free_particle", "harmonic"]


def _sym(m, name):
    return next(s for s in m.symmetries if s.name == name)


@pytest.mark.parametrize("name", FIXTURES)
def test_fixture_symmetries(name):
    m = model(name)
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    for s in m.symmetries:
        assert verify_offshell_invariance(m.lagrangian, s)
        Q = noether_charge(m.lagrangian, s)
        assert conservation_defect(m.lagrangian, s, Q).is_zero()
        QT = total_noether_charge(m.lagrangian, s, hm, r)
        if QT.parity == 0:
            assert is_symmetry_generator(QT, hm, r).is_generator


def test_para4_charges():
    m = model("para4")
    tb = m.table
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    L = m.lagrangian
    assert noether_charge(L, _sym(m, "q1_shift")) == tb.parse("q1_dot")
    assert noether_charge(L, _sym(m, "q3_gauge")).is_zero()
    energy = noether_charge(L, _sym(m, "time_translation"))
    assert energy == tb.parse("1/2*q1_dot^2 + 1/2*q2_dot^2 + 1/2*q2^2 + 1/2*q4^2")
    assert total_noether_charge(L, _sym(m, "q3_gauge"), hm, r) == tb.parse("p3")
    assert total_noether_charge(L, _sym(m, "q1_shift"), hm, r) == tb.parse("p1")


def test_fermion_rotation_charge():
    m = model("fermion_pair")
    tb = m.table
    s = _sym(m, "rotation")
    assert noether_charge(m.lagrangian, s) == tb.parse("-psi1*psi2")
    QT = total_noether_charge(m.lagrangian, s, ensure_hamiltonian(m), constraint_report(m))
    assert QT == tb.parse("-psi1*p_psi2 - p_psi1*psi2")


def test_galilean_boost():
    m = model("free_particle")
    s = _sym(m, "galilean_boost")
    assert noether_charge(m.lagrangian, s) == m.table.parse("t*q_dot - q")


def test_not_a_symmetry():
    m = model("para4")
    tb = m.table
    s = SymmetryCandidate({"q2": tb.parse("1")}, tb.parse("0"), "q2_shift")
    res = verify_offshell_invariance(m.lagrangian, s)
    assert not res.verified
    assert res.residual == tb.parse("-q2")
    with pytest.raises(UnverifiedSymmetry):
        noether_charge(m.lagrangian, s)


def test_wrong_parity_variation():
    m = model("fermion_pair")
    tb = m.table
    s = SymmetryCandidate({"psi1": tb.parse("1")}, tb.parse("0"))
    with pytest.raises(ValueError):
        verify_offshell_invariance(m.lagrangian, s)


def test_generator_verdicts():
    m = model("para4")
    tb = m.table
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    assert is_symmetry_generator(tb.parse("p3"), hm, r).is_generator
    assert is_symmetry_generator(tb.parse("p1"), hm, r).is_generator
    # q3 is not first class on the surface
    res = is_symmetry_generator(tb.parse("q3"), hm, r)
    assert not res.is_generator and "does not vanish" in res.reason
    # q1 does not commute with H
    res = is_symmetry_generator(tb.parse("q1"), hm, r)
    assert not res.is_generator
    # terms quadratic in the constraints are allowed
    res = is_symmetry_generator(tb.parse("p1 + 1/2*q4^2"), hm, r)
    assert res.is_generator


def test_check_total_charge():
    m = model("para4")
    tb = m.table
    hm = ensure_hamiltonian(m)
    r = constraint_report(m)
    out = check_total_charge(tb.parse("p1"), {tb["q1"].id: tb.parse("1")}, hm, r)
    assert out["generates"] and out["conserved"]


def test_gauge_conditions_para4():
    m = model("para4")
    hm = ensure_hamiltonian(m)
    gc = gauge_generator_conditions(constraint_report(m), hm)
    assert [str(x) for x in gc.first_class] == ["p3"]
    assert gc.constant
    assert gc.holds({}, m.table)


def test_gauge_conditions_reject_time_dependence():
    tb = VariableTable(0)
    tb.add_position("q")
    tb.add_position("r")
    hm = HamiltonianModel(tb, tb.parse("1/2*p_q^2 + t*q"), [tb.parse("p_r")])
    with pytest.raises(NonStatic):
        gauge_generator_conditions(run_dirac_bergmann(hm), hm)
