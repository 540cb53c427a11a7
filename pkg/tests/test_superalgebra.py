import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from artifact.superalgebra import (
    GeneratorCountMismatch,
    GrassmannNumber,
    SingularBlock,
    SingularBody,
    SuperMatrix,
    SymmetryViolation,
    ZeroBody,
    body_soul_split,
    canonical_form_antihermitian,
    canonical_form_antisym,
    canonical_form_generic,
    desoul,
    desoul_coefficients,
    det_even,
    gr_coeff,
    gr_inverse,
    gr_mul,
    orthogonalize_columns,
    smat_dagger,
    smat_inverse,
    smat_transpose,
    superdeterminant,
    supertrace,
)
from helpers import rand_gr, rand_parities, rand_supermatrix

G = GrassmannNumber


def z(n, *idx, c=1):
    return G.from_subsets(n, {tuple(idx): c})


# Grassmann numbers ---------------------------------------------------------------

def test_generator_products():
    assert gr_mul(z(2, 1), z(2, 2)) == z(2, 1, 2)
    assert gr_mul(z(2, 2), z(2, 1)) == -z(2, 1, 2)
    assert gr_mul(1 + z(2, 1, 2), 1 - z(2, 1, 2)) == G.scalar(2, 1)
    assert gr_mul(z(3, 1), z(3, 1)).is_zero()


def test_generator_count_mismatch():
    with pytest.raises(GeneratorCountMismatch):
        gr_mul(z(2, 1), z(3, 1))


def test_inverse_examples():
    assert gr_inverse(1 + z(2, 1, 2)) == 1 - z(2, 1, 2)
    assert gr_inverse(G.scalar(0, 2)) == G.scalar(0, Fraction(1, 2))
    with pytest.raises(ZeroBody):
        gr_inverse(z(2, 1))


def test_body_soul_and_coefficients():
    x = G.from_subsets(2, {(): 3, (1,): 2, (1, 2): 5})
    b, s = body_soul_split(x)
    assert b == G.scalar(2, 3) and s == G.from_subsets(2, {(1,): 2, (1, 2): 5})
    assert body_soul_split(G.scalar(2, 0)) == (G.scalar(2, 0), G.scalar(2, 0))
    y = 3 + z(2, 1, 2, c=5)
    assert gr_coeff(y, (1, 2)) == 5 and gr_coeff(y, ()) == 3 and gr_coeff(z(2, 2), (1,)) == 0
    with pytest.raises(IndexError):
        gr_coeff(y, (3,))


def test_normal_form_and_parity():
    x = G.from_subsets(3, {(2, 1): 1, (1, 2): 1})
    assert x.is_zero()
    assert (z(3, 1) + z(3, 1, 2)).parity is None
    assert z(3, 1, 2, 3).parity == 1


def test_json_round_trip():
    x = G.from_subsets(3, {(): Fraction(1, 2), (1, 3): -2})
    assert G.from_json(3, x.to_json()) == x


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_ring_axioms(rng):
    n = 4
    a, b, c = (rand_gr(rng, n, terms=4, body=rng.randint(-2, 2)) for _ in range(3))
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert (a + b) * c == a * c + b * c


@settings(max_examples=60, deadline=None)
@given(st.randoms(use_true_random=False))
def test_inverse_property(rng):
    x = rand_gr(rng, 4, terms=4)
    if x.body:
        assert x * gr_inverse(x) == G.scalar(4, 1)
    else:
        with pytest.raises(ZeroBody):
            gr_inverse(x)


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_odd_elements_anticommute(rng):
    a, b = rand_gr(rng, 4, 1), rand_gr(rng, 4, 1)
    assert a * b == -(b * a)
    assert (a * a).is_zero()


# supermatrices ------------------------------------------------------------------

def test_parity_is_checked():
    with pytest.raises(Exception):
        SuperMatrix(1, [0, 1], [0, 1], [[1, 1], [0, 1]])


def test_supertrace_and_sdet_examples():
    m = SuperMatrix(0, [0, 1], [0, 1], [[3, 0], [0, 5]])
    assert supertrace(m) == G.scalar(0, -2)
    d = SuperMatrix(0, [0, 1], [0, 1], [[2, 0], [0, 4]])
    assert superdeterminant(d) == G.scalar(0, Fraction(1, 2))
    m = SuperMatrix(2, [0, 1], [0, 1], [[2, z(2, 1)], [z(2, 2), 1]])
    assert superdeterminant(m) == 2 - z(2, 1, 2)
    inv = smat_inverse(m)
    assert m @ inv == SuperMatrix.identity(2, [0, 1])


def test_sdet_singular_block():
    m = SuperMatrix(0, [0, 1], [0, 1], [[0, 0], [0, 1]])
    with pytest.raises(SingularBlock):
        superdeterminant(m)


def test_inverse_examples_matrix():
    assert smat_inverse(SuperMatrix(0, [0, 0], [0, 0], [[2, 0], [0, 4]])) == \
        SuperMatrix(0, [0, 0], [0, 0], [[Fraction(1, 2), 0], [0, Fraction(1, 4)]])
    s = SuperMatrix(2, [0, 0], [0, 0], [[0, z(2, 1, 2)], [0, 0]])
    one = SuperMatrix.identity(2, [0, 0])
    assert smat_inverse(one + s) == one - s
    with pytest.raises(SingularBody):
        smat_inverse(SuperMatrix(0, [0], [0], [[0]]))


def test_transpose_block_diagonal():
    m = SuperMatrix(0, [0, 0, 1], [0, 0, 1], [[1, 2, 0], [3, 4, 0], [0, 0, 5]])
    assert smat_transpose(m) == SuperMatrix(0, [0, 0, 1], [0, 0, 1], [[1, 3, 0], [2, 4, 0], [0, 0, 5]])


@settings(max_examples=40, deadline=None)
@given(st.randoms(use_true_random=False))
def test_transpose_powers(rng):
    p = rand_parities(rng, 3)
    q = rand_parities(rng, 3)
    m = rand_supermatrix(rng, 3, p, q)
    t2 = smat_transpose(smat_transpose(m))
    for a, pa in enumerate(p):
        for b, pb in enumerate(q):
            x = m.entries[a][b]
            assert t2.entries[a][b] == (-x if (pa + pb) % 2 else x)
    assert smat_transpose(smat_transpose(t2)) == m


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_dagger_reverses_products(rng):
    p, q, r = rand_parities(rng, 2), rand_parities(rng, 2), rand_parities(rng, 2)
    a = rand_supermatrix(rng, 3, p, q)
    b = rand_supermatrix(rng, 3, q, r)
    assert smat_dagger(a @ b) == smat_dagger(b) @ smat_dagger(a)


@pytest.mark.parametrize("seed", range(25))
def test_sdet_multiplicative_and_str_cyclic(seed):
    rng = random.Random(seed)
    p = rand_parities(rng, rng.randint(1, 4))
    a = rand_supermatrix(rng, 3, p, p, invertible=True)
    b = rand_supermatrix(rng, 3, p, p, invertible=True)
    assert superdeterminant(a @ b) == superdeterminant(a) * superdeterminant(b)
    assert supertrace(a @ b) == supertrace(b @ a)
    inv = smat_inverse(a)
    assert a @ inv == SuperMatrix.identity(3, p)


def test_det_even_small():
    m = SuperMatrix(0, [0, 0], [0, 0], [[1, 2], [3, 4]])
    assert det_even(m) == G.scalar(0, -2)


# canonical forms --------------------------------------------------------------------

def _check(res, m):
    assert res.reconstructs(m)
    assert res.soul_blocks_ok()
    assert det_even(res.left.body_matrix()).body if not any(res.left.row_parities) else True


def test_generic_examples():
    m = SuperMatrix(0, [0, 0], [0, 0], [[2, 4], [1, 2]])
    res = canonical_form_generic(m)
    _check(res, m)
    assert res.rank_data["k1"] == 1
    c = res.canonical.body()
    assert c[1] == [0, 0] and c[0][1] == 0
    one = SuperMatrix.identity(0, [0, 0])
    r1 = canonical_form_generic(one)
    assert r1.canonical == one and r1.left == one and r1.right == one
    m = SuperMatrix(2, [0, 1], [0, 1], [[0, z(2, 1)], [z(2, 2), 3]])
    res = canonical_form_generic(m)
    _check(res, m)
    assert (res.rank_data["k1"], res.rank_data["k2"]) == (0, 1)


def test_desoul_examples():
    J = SuperMatrix(2, [0, 0], [0, 0], [[0, 1], [-1, 0]])
    A = J.scale(1 + z(2, 1, 2))
    res = desoul(A)
    assert res.canonical == J
    assert res.left == SuperMatrix.identity(2, [0, 0]).scale(1 - z(2, 1, 2) * Fraction(1, 2))
    assert desoul(J).left == SuperMatrix.identity(2, [0, 0])
    S = SuperMatrix(2, [0, 0], [0, 0], [[2, 0], [0, 2]])
    assert desoul(S.scale(1 + z(2, 1, 2))).canonical == S
    with pytest.raises(SingularBody):
        desoul(SuperMatrix(2, [0], [0], [[z(2, 1, 2)]]))
    with pytest.raises(SymmetryViolation):
        desoul(SuperMatrix(0, [0, 0], [0, 0], [[1, 2], [3, 4]]))


def test_desoul_series_prefix():
    a = desoul_coefficients(4)
    assert a[:3] == [0, Fraction(-1, 2), Fraction(3, 8)]


def test_antisym_examples():
    J = SuperMatrix(0, [0, 0], [0, 0], [[0, 1], [-1, 0]])
    res = canonical_form_antisym(J)
    assert res.canonical == J and res.left == SuperMatrix.identity(0, [0, 0])
    Z = SuperMatrix(0, [0, 0], [0, 0], [[0, 0], [0, 0]])
    rz = canonical_form_antisym(Z)
    assert rz.canonical == Z and not rz.row_blocks.get("body")
    P = SuperMatrix(2, [0] * 3, [0] * 3, [[0, 1, 0], [-1, 0, 0], [0, 0, 0]])
    rp = canonical_form_antisym(P)
    _check(rp, P)
    assert rp.rank_data.get("k", len(rp.row_blocks.get("body", []))) == 2
    assert all(not x.body for x in rp.canonical.entries[2])


def test_antihermitian_examples():
    J = SuperMatrix(0, [0, 0], [0, 0], [[0, 1], [-1, 0]])
    res = canonical_form_antihermitian(J)
    _check(res, J)
    assert res.rank_data["k_minus"] == 2
    Z = SuperMatrix(0, [0, 0], [0, 0], [[0, 0], [0, 0]])
    rz = canonical_form_antihermitian(Z)
    assert rz.rank_data["k_minus"] == 0 and rz.rank_data["k_plus"] == 0
    with pytest.raises(SymmetryViolation):
        canonical_form_antihermitian(SuperMatrix(0, [0, 0], [0, 0], [[0, 1], [1, 0]]))


def test_orthogonalize_columns():
    m = SuperMatrix(2, [0, 0], [0, 0, 0], [[1, 2, z(2, 1, 2)], [0, 0, 0]])
    Q, MQ, k = orthogonalize_columns(m)
    assert k == 1
    assert m @ Q == MQ
    for j in range(k, 3):
        assert all(not MQ.entries[i][j].body for i in range(2))


def _rand_antisym(rng, n, k):
    rows = [[G.scalar(n, 0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i + 1, k):
            x = rand_gr(rng, n, 0, terms=2) + rng.randint(-2, 2)
            rows[i][j] = x
            rows[j][i] = -x
    return SuperMatrix(n, [0] * k, [0] * k, rows)


def _rand_antihermitian(rng, n, pars):
    k = len(pars)
    rows = [[G.scalar(n, 0)] * k for _ in range(k)]
    for i in range(k):
        for j in range(i, k):
            par = (pars[i] + pars[j]) % 2
            x = rand_gr(rng, n, par, terms=2)
            if par == 0:
                x = x + rng.randint(-2, 2)
            # Omega_ab = -(-1)^{#a #b} Omega_ba
            s = -1 if pars[i] * pars[j] == 0 else 1
            if i == j:
                if s == -1:
                    continue
            rows[i][j] = x
            rows[j][i] = x if s == 1 else -x
    return SuperMatrix(n, pars, pars, rows)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_random_canonical_forms_reconstruct(rng):
    p = rand_parities(rng, rng.randint(1, 4))
    q = rand_parities(rng, rng.randint(1, 4))
    m = rand_supermatrix(rng, 3, p, q)
    _check(canonical_form_generic(m), m)
    a = _rand_antisym(rng, 3, rng.randint(1, 4))
    _check(canonical_form_antisym(a), a)
    om = _rand_antihermitian(rng, 3, rand_parities(rng, rng.randint(1, 4)))
    _check(canonical_form_antihermitian(om), om)
