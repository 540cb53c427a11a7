import random
from fractions import Fraction

import pytest

from artifact.brst import (
    InhomogeneousGhostNumber,
    JacobiViolation,
    LieAlgebraSpec,
    NotClosed,
    brst_apply,
    decompose_closed,
    ghost_number,
    hodge_apply,
    homotopy_check,
    n_grades,
    nilpotency_check,
    number_operator,
    random_element,
    random_lie_algebra,
)


def E(spec, s):
    return spec.table.parse(s)


def test_su2_images():
    spec = LieAlgebraSpec.su2()
    Q = lambda s: brst_apply(E(spec, s), spec)  # noqa: E731
    assert Q("w1") == E(spec, "-w2*w3")
    assert Q("wb2") == E(spec, "-k2")
    assert Q("k3").is_zero()
    assert Q("Phi1") == E(spec, "-w2*Phi3 + w3*Phi2")
    assert hodge_apply(E(spec, "k1"), spec) == E(spec, "-wb1")
    assert hodge_apply(E(spec, "w1*Phi2"), spec).is_zero()


def test_ghost_numbers():
    spec = LieAlgebraSpec.su2()
    assert ghost_number(E(spec, "w1*w2*wb3")) == 1
    assert ghost_number(E(spec, "Phi1*k2")) == 0
    with pytest.raises(InhomogeneousGhostNumber):
        ghost_number(E(spec, "w1 + wb1"))
    rng = random.Random(0)
    for _ in range(20):
        x = random_element(spec, rng, ghost=1)
        if x:
            assert ghost_number(brst_apply(x, spec)) == 2


def test_number_operator():
    spec = LieAlgebraSpec.abelian(2)
    assert number_operator(E(spec, "wb1*k2*w1")) == E(spec, "2*wb1*k2*w1")
    assert number_operator(E(spec, "Phi1*w2")).is_zero()
    g = n_grades(E(spec, "Phi1 + k1 + k1*wb2"))
    assert sorted(g) == [0, 1, 2]


@pytest.mark.parametrize("spec", [LieAlgebraSpec.abelian(2), LieAlgebraSpec.su2(),
                                  random_lie_algebra(3, random.Random(1)),
                                  random_lie_algebra(4, random.Random(2))],
                         ids=["abelian", "su2", "random3", "random4"])
def test_nilpotency_and_homotopy(spec):
    assert nilpotency_check(spec, samples=50, seed=3).passed
    assert homotopy_check(spec, samples=50, seed=4).passed


def test_jacobi_validation():
    entries = [(1, 2, 3, 1), (2, 3, 1, 1), (3, 1, 2, 1), (1, 2, 1, 1)]
    with pytest.raises(JacobiViolation):
        LieAlgebraSpec.from_sparse(3, entries)
    bad = LieAlgebraSpec.from_sparse(3, entries, check=False)
    assert bad.jacobi_defect() is not None
    rep = nilpotency_check(bad, samples=5)
    assert not rep.passed and rep.witness


def test_antisymmetry_validation():
    with pytest.raises(ValueError):
        LieAlgebraSpec(2, [[[0, 0], [1, 0]], [[0, 0], [0, 0]]])
    with pytest.raises(ValueError):
        LieAlgebraSpec(2, [[[0, 0]]])


def test_random_lie_algebra_is_lie():
    for n in range(1, 6):
        spec = random_lie_algebra(n, random.Random(n))
        assert spec.jacobi_defect() is None


def test_decompose_abelian_examples():
    spec = LieAlgebraSpec.abelian(1)
    y0, yt = decompose_closed(E(spec, "k1"), spec)
    assert y0.is_zero() and yt == E(spec, "-wb1")
    y0, yt = decompose_closed(E(spec, "w1"), spec)
    assert y0 == E(spec, "w1") and yt.is_zero()
    with pytest.raises(NotClosed):
        decompose_closed(E(spec, "wb1"), spec)


@pytest.mark.parametrize("which", ["su2", "random"])
def test_decompose_random_closed(which):
    spec = LieAlgebraSpec.su2() if which == "su2" else random_lie_algebra(3, random.Random(7))
    rng = random.Random(5)
    casimir = E(spec, "Phi1^2 + Phi2^2 + Phi3^2") if which == "su2" else E(spec, "0")
    for _ in range(25):
        Y = brst_apply(random_element(spec, rng), spec) + casimir * Fraction(rng.randint(0, 3))
        y0, yt = decompose_closed(Y, spec)
        assert y0 + brst_apply(yt, spec) == Y
        assert brst_apply(y0, spec).is_zero()
