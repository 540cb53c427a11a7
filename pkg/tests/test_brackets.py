import random

import pytest

from artifact.brackets import (
    DegenerateOmega,
    NonConstantOmega,
    PhaseSpace,
    build_second_class,
    dirac,
    jacobi_defect,
    poisson,
)
from artifact.cli import ensure_hamiltonian
from artifact.superalgebra import ParityError
from artifact.symalg import hermitian_conjugate
from helpers import bracket_table, model, phase_vars, rand_expr


@pytest.fixture
def tb():
    return bracket_table()


def E(tb, s):
    return tb.parse(s)


def test_canonical_brackets(tb):
    ps = PhaseSpace(tb)
    assert poisson(E(tb, "x"), E(tb, "p_x"), ps) == E(tb, "1")
    assert poisson(E(tb, "p_x"), E(tb, "x"), ps) == E(tb, "-1")
    # odd pairs are symmetric and carry a minus sign
    assert poisson(E(tb, "th1"), E(tb, "p_th1"), ps) == E(tb, "-1")
    assert poisson(E(tb, "p_th1"), E(tb, "th1"), ps) == E(tb, "-1")
    assert poisson(E(tb, "th1"), E(tb, "th2"), ps).is_zero()
    assert poisson(E(tb, "x^2"), E(tb, "p_x"), ps) == E(tb, "2*x")


def test_symplectic_matrix(tb):
    ps = PhaseSpace(tb)
    J = ps.J()
    xs = ps.coordinates()
    for i, a in enumerate(xs):
        for j, b in enumerate(xs):
            got = poisson(E(tb, a.name), E(tb, b.name), ps)
            assert got == E(tb, str(J[i][j]))


def test_mixed_parity_rejected(tb):
    ps = PhaseSpace(tb)
    with pytest.raises(ParityError):
        poisson(E(tb, "x + th1"), E(tb, "p_x"), ps)


def _sgn(x):
    return -1 if x & 1 else 1


def test_graded_antisymmetry_and_leibniz(tb):
    ps = PhaseSpace(tb)
    rng = random.Random(1)
    vs = phase_vars(tb)
    for _ in range(80):
        pf, pg, ph = (rng.randint(0, 1) for _ in range(3))
        F, G, H = (rand_expr(rng, tb, vs, p) for p in (pf, pg, ph))
        assert poisson(F, G, ps) == poisson(G, F, ps) * (-_sgn(pf * pg))
        lhs = poisson(F, G * H, ps)
        rhs = poisson(F, G, ps) * H + G * poisson(F, H, ps) * _sgn(pf * pg)
        assert lhs == rhs
        lhs = poisson(F * G, H, ps)
        rhs = F * poisson(G, H, ps) + poisson(F, H, ps) * G * _sgn(pg * ph)
        assert lhs == rhs


def test_conjugation_rule(tb):
    ps = PhaseSpace(tb)
    rng = random.Random(6)
    vs = phase_vars(tb)
    for _ in range(80):
        F, G = (rand_expr(rng, tb, vs, rng.randint(0, 1)) for _ in range(2))
        assert hermitian_conjugate(poisson(F, G, ps)) == -poisson(hermitian_conjugate(G), hermitian_conjugate(F), ps)


def test_jacobi_identity(tb):
    ps = PhaseSpace(tb)
    rng = random.Random(2)
    vs = phase_vars(tb)
    br = lambda a, b: poisson(a, b, ps)  # noqa: E731
    for _ in range(40):
        F, G, H = (rand_expr(rng, tb, vs, rng.randint(0, 1)) for _ in range(3))
        assert jacobi_defect(F, G, H, br).is_zero()


def test_para4_degenerate_omega():
    m = model("para4")
    hm = ensure_hamiltonian(m)
    tb = m.table
    ps = hm.phase_space
    with pytest.raises(DegenerateOmega):
        build_second_class([tb.parse("p3")], ps)
    scs = build_second_class([tb.parse("p4"), tb.parse("q4")], ps)
    assert dirac(tb.parse("q4"), tb.parse("p4"), scs, ps).is_zero()
    assert dirac(tb.parse("q1"), tb.parse("p1"), scs, ps) == tb.parse("1")


def test_nonconstant_omega(tb):
    ps = PhaseSpace(tb)
    with pytest.raises(NonConstantOmega):
        build_second_class([E(tb, "p_x"), E(tb, "x^2")], ps)


def test_dirac_annihilates_second_class():
    m = model("fermion_pair")
    hm = ensure_hamiltonian(m)
    tb = m.table
    ps = hm.phase_space
    rho = hm.primary
    scs = build_second_class(rho, ps)
    rng = random.Random(3)
    vs = phase_vars(tb)
    for _ in range(30):
        F = rand_expr(rng, tb, vs, rng.randint(0, 1))
        for r in rho:
            assert dirac(F, r, scs, ps).is_zero()
            assert dirac(r, F, scs, ps).is_zero()
    assert dirac(tb.parse("psi1"), tb.parse("psi1"), scs, ps) == tb.parse("-1")
    assert dirac(tb.parse("p_psi1"), tb.parse("psi1"), scs, ps) == tb.parse("-1/2")


def test_dirac_jacobi():
    m = model("fermion_pair")
    hm = ensure_hamiltonian(m)
    tb = m.table
    ps = hm.phase_space
    scs = build_second_class(hm.primary, ps)
    br = lambda a, b: dirac(a, b, scs, ps)  # noqa: E731
    rng = random.Random(4)
    vs = phase_vars(tb)
    for _ in range(20):
        F, G, H = (rand_expr(rng, tb, vs, rng.randint(0, 1), degree=2) for _ in range(3))
        assert jacobi_defect(F, G, H, br).is_zero()
