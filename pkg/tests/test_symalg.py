import random
from fractions import Fraction

import pytest

from artifact.symalg import (
    GradedExpr,
    JetOrderOverflow,
    ParseError,
    UnknownVariable,
    VariableTable,
    euler_lagrange,
    extract_total_derivative,
    hermitian_conjugate,
    jet_order,
    left_derivative,
    parse_expr,
    prolong,
    right_derivative,
    total_time_derivative,
)
from helpers import rand_expr


@pytest.fixture
def tb():
    t = VariableTable(2)
    for name in ("q1", "q2", "y", "x"):
        t.add_position(name)
    t.add_position("th1", 1)
    t.add_position("th2", 1)
    return t


def P(tb, s):
    return parse_expr(s, tb)


def test_parse_literals(tb):
    e = P(tb, "1/2 * p1^2 + 1/2 * q2^2")
    assert str(e) == "1/2*p1^2 + 1/2*q2^2"
    assert P(tb, "th1 * th2") == -P(tb, "th2 * th1")
    e = P(tb, "exp(-y) * p_x^2")
    assert len(e.terms) == 1 and e.has_exp()


def test_parse_errors(tb):
    with pytest.raises(ParseError) as info:
        P(tb, "q1 + * q2")
    assert info.value.pos == 5
    with pytest.raises(ParseError):
        P(tb, "nosuch")
    with pytest.raises(ParseError):
        P(tb, "exp(q1*q2)")
    diags = []
    assert parse_expr("th1^2", tb, diags).is_zero()
    assert diags


def test_grassmann_constants_in_text(tb):
    assert P(tb, "z1*th1 + z1*z2").parity == 0
    assert P(tb, "z1 + z1*z2").parity is None
    assert P(tb, "z1*z2") == -P(tb, "z2*z1")
    assert P(tb, "z1*z1").is_zero()


def test_derivative_examples(tb):
    assert left_derivative(P(tb, "q1*p1"), "q1") == P(tb, "p1")
    assert left_derivative(P(tb, "th1*th2"), "th2") == P(tb, "-th1")
    assert right_derivative(P(tb, "th1*th2"), "th2") == P(tb, "th1")
    assert left_derivative(P(tb, "exp(-y)*p_x^2"), "y") == P(tb, "-exp(-y)*p_x^2")


def test_left_right_relation(tb):
    rng = random.Random(7)
    vs = [v for pair in tb.pairs() for v in pair]
    for _ in range(100):
        par = rng.randint(0, 1)
        F = rand_expr(rng, tb, vs, par)
        for v in vs:
            # right derivative = (-1)^{#v (#F + 1)} left derivative
            sign = -1 if (v.parity * (par + 1)) % 2 else 1
            assert right_derivative(F, v) == left_derivative(F, v) * sign


def test_product_rule(tb):
    rng = random.Random(3)
    vs = [v for pair in tb.pairs() for v in pair]
    for _ in range(60):
        pa, pb = rng.randint(0, 1), rng.randint(0, 1)
        A, B = rand_expr(rng, tb, vs, pa), rand_expr(rng, tb, vs, pb)
        v = rng.choice(vs)
        sign = -1 if (v.parity * pa) % 2 else 1
        assert (A * B).d(v) == A.d(v) * B + A * B.d(v) * sign


def test_printer_round_trip(tb):
    rng = random.Random(11)
    vs = [v for pair in tb.pairs() for v in pair] + [tb["t"]]
    for i in range(500):
        F = rand_expr(rng, tb, vs, rng.randint(0, 1), terms=4)
        if i % 5 == 0:
            F = F * P(tb, f"exp({rng.randint(-3, 3)}*y + {rng.randint(1, 3)}/2*x)")
        assert P(tb, str(F)) == F


def test_arithmetic_normal_form(tb):
    a = P(tb, "(q1 + p1)*(q1 + p1)")
    assert a == P(tb, "q1^2 + 2*q1*p1 + p1^2")
    assert (P(tb, "exp(y)") * P(tb, "exp(-y)")) == P(tb, "1")
    assert P(tb, "q1 - q1").is_zero()


def test_total_derivative_examples(tb):
    assert total_time_derivative(P(tb, "q1^2")) == P(tb, "2*q1*q1_dot")
    assert total_time_derivative(P(tb, "q1_dot")) == P(tb, "q1_ddot")
    assert total_time_derivative(P(tb, "t*q1")) == P(tb, "q1 + t*q1_dot")
    assert total_time_derivative(P(tb, "th1*th2")) == P(tb, "th1_dot*th2 + th1*th2_dot")


def test_jet_overflow():
    t = VariableTable(0, max_jet_order=1)
    t.add_position("q")
    with pytest.raises(JetOrderOverflow):
        total_time_derivative(t.parse("q_dot"))
    with pytest.raises(JetOrderOverflow):
        prolong(t.parse("q"), 3)


def test_prolong_examples(tb):
    assert prolong(P(tb, "q1"), 1) == P(tb, "q1_dot")
    assert prolong(P(tb, "q1_dot"), 1) == P(tb, "q1_ddot")
    assert prolong(P(tb, "t"), 1) == P(tb, "1")


def test_euler_lagrange_examples():
    t = VariableTable(0)
    t.add_position("q")
    assert euler_lagrange(t.parse("1/2*q_dot^2")) == [t.parse("-q_ddot")]
    assert euler_lagrange(total_time_derivative(t.parse("q^2"))) == [t.parse("0")]
    assert euler_lagrange(t.parse("1/2*q_dot^2 - 1/2*q^2")) == [t.parse("-q_ddot - q")]


def test_euler_lagrange_grows_jets():
    t = VariableTable(0, max_jet_order=2)
    t.add_position("q")
    el = euler_lagrange(t.parse("1/2*q_ddot^2"))
    assert el == [t.parse("q_d4")]


def test_dtq_commutation(tb):
    rng = random.Random(5)
    jets = [tb.jet(q, n) for q, _ in tb.pairs() for n in range(3)] + [tb["t"]]
    for _ in range(60):
        F = rand_expr(rng, tb, jets, rng.randint(0, 1), grassmann=False)
        for q, _ in tb.pairs():
            lhs = total_time_derivative(F).d(q)
            assert lhs == total_time_derivative(F.d(q))
            for n in range(1, 3):
                lhs = total_time_derivative(F).d(tb.jet(q, n))
                rhs = total_time_derivative(F.d(tb.jet(q, n))) + F.d(tb.jet(q, n - 1))
                assert lhs == rhs


def _jet_table():
    t = VariableTable(2, max_jet_order=4)
    t.add_position("q")
    t.add_position("r")
    t.add_position("psi", 1)
    return t


def rand_jet(rng, t, order):
    vs = [t.jet(q, n) for q in ("q", "r", "psi") for n in range(order + 1)] + [t["t"]]
    F = rand_expr(rng, t, vs, 0, terms=3, degree=3)
    if rng.random() < 0.3:
        F = F * GradedExpr.exponential(t, {t["q"].id: Fraction(rng.choice([-2, -1, 1, 2]))})
    return F


def test_el_kills_total_derivatives():
    t = _jet_table()
    rng = random.Random(21)
    for _ in range(200):
        K = rand_jet(rng, t, rng.randint(0, 1))
        assert all(e.is_zero() for e in euler_lagrange(total_time_derivative(K)))


def test_extract_total_derivative_round_trip():
    t = _jet_table()
    rng = random.Random(8)
    for _ in range(50):
        K = rand_jet(rng, t, rng.randint(0, 2))
        F = total_time_derivative(K)
        K2 = extract_total_derivative(F)
        assert K2 is not None
        assert (K2 - K).is_constant()


def test_extract_examples():
    t = VariableTable(0)
    t.add_position("q")
    assert extract_total_derivative(t.parse("2*q*q_dot")) == t.parse("q^2")
    assert extract_total_derivative(t.parse("q")) is None
    assert extract_total_derivative(t.parse("q_dot")) == t.parse("q")
    assert extract_total_derivative(t.parse("0")) == t.parse("0")


def test_hermitian_conjugate_examples(tb):
    assert hermitian_conjugate(P(tb, "p_th1")) == P(tb, "-p_th1")
    assert hermitian_conjugate(P(tb, "q1*p1")) == P(tb, "q1*p1")
    assert hermitian_conjugate(P(tb, "th1*th2")) == P(tb, "-th1*th2")


def test_hermitian_conjugate_is_involutive(tb):
    rng = random.Random(4)
    vs = [v for pair in tb.pairs() for v in pair]
    for _ in range(100):
        F = rand_expr(rng, tb, vs, rng.randint(0, 1))
        G = rand_expr(rng, tb, vs, rng.randint(0, 1))
        assert hermitian_conjugate(hermitian_conjugate(F)) == F
        assert hermitian_conjugate(F * G) == hermitian_conjugate(G) * hermitian_conjugate(F)


def test_table_names():
    t = VariableTable(1)
    t.add_position("q1")
    t.add_position("x")
    assert t.momentum("q1").name == "p1"
    assert t.momentum("x").name == "p_x"
    assert t.jet("x", 3).name == "x_d3"
    with pytest.raises(UnknownVariable):
        t["nope"]
    with pytest.raises(ValueError):
        t.add_position("x")


def test_jet_order():
    t = _jet_table()
    assert jet_order(t.parse("q*r_ddot + psi_dot*z1")) == 2
    assert jet_order(t.parse("t*q")) == 0


def test_constants_and_parity(tb):
    e = P(tb, "th1*z1")
    assert e.parity == 0
    assert P(tb, "3").constant_value().body == 3
