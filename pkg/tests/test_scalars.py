from __future__ import annotations

from fractions import Fraction
from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from opfields.expr import ParseError
from opfields.scalars import (DepthError, Field, Fp, OperatorField, RatFunc, naive_power_family, parse_field,
                              truncated_family, verify_operator_field)

QT = Field(0, True)
F2T = Field(2, True)
F3T = Field(3, True)


def test_fp_arithmetic():
    a, b = Fp(3, 7), Fp(5, 7)
    assert a + b == Fp(1, 7)
    assert a * b == Fp(1, 7)
    assert a / b == Fp(2, 7)
    assert -a == Fp(4, 7)
    assert a ** 6 == Fp(1, 7)
    with pytest.raises(ZeroDivisionError):
        a / Fp(0, 7)


def test_field_parsing_and_format():
    assert parse_field("Q") == Field(0)
    assert parse_field("F5(t)") == Field(5, True)
    assert parse_field("GF(3)") == Field(3)
    with pytest.raises(ValueError):
        parse_field("F4")
    Q = Field(0)
    assert Q.parse("3/4") == Fraction(3, 4)
    assert Field(5).parse("3 mod 5") == Fp(3, 5)
    with pytest.raises(ParseError):
        Field(5).parse("3 mod 7")
    f = QT.parse("(t^2 + 1)/(t - 1)")
    assert QT.parse(QT.fmt(f)) == f
    assert QT.fmt(QT.t()) == "(t)/(1)"


def test_ratfunc_reduces_and_stays_exact():
    t = QT.t()
    f = (t * t - 1) / (t - 1)
    assert f == t + 1
    assert f.is_poly()
    g = 1 / (t + 1)
    assert all(isinstance(c, int | Fraction) for c in (g.num + g.den))
    assert (g * (t + 1)) == QT.one
    assert RatFunc.const(Fraction(1, 2), 0) * 2 == QT.one


def test_characteristic_p_identities():
    t = F3T.t()
    # Frobenius is additive
    assert (t + 1) ** 3 == t ** 3 + 1
    assert F3T(3) == F3T.zero


samples_q = st.builds(lambda a, b, c, d: (QT.t() * a + b) / (QT.t() * QT.t() + c * QT.t() + d),
                      st.integers(-4, 4), st.integers(-4, 4), st.integers(-3, 3), st.integers(1, 5))


@settings(max_examples=40, deadline=None)
@given(samples_q, samples_q, samples_q)
def test_field_axioms(a, b, c):
    assert (a + b) + c == a + (b + c)
    assert a * (b + c) == a * b + a * c
    assert a * b == b * a
    if a:
        assert a * (1 / a) == QT.one


def test_ratfunc_against_sympy():
    sympy = pytest.importorskip("sympy")
    t = QT.t()
    to_sympy = lambda h: sympy.sympify(QT.fmt(h).replace("^", "**"), locals={"t": sympy.Symbol("t")})
    exprs = [(t ** 3 - 2 * t) / (t + 5), (2 * t + 1) / (3 * t * t - 1), 1 / (t - 1) ** 2]
    for f in exprs:
        for g in exprs:
            theirs = to_sympy(f) * to_sympy(g) - to_sympy(f) / to_sympy(g)
            assert sympy.simplify(to_sympy(f * g - f / g) - theirs) == 0


# -- Hasse-Schmidt families ------------------------------------------------------

def test_divided_family_frozen_values():
    K = OperatorField(QT, "identity", "divided")
    t = QT.t()
    # d_i(1/(t+1)) = (-1)^i / (t+1)^(i+1)
    for i in range(6):
        assert K.hs_derive(i, 1 / (t + 1)) == QT((-1) ** i) / (t + 1) ** (i + 1)
    # d_i(t^n) = C(n, i) t^(n-i)
    for i in range(5):
        assert K.hs_derive(i, t ** 4) == QT(comb(4, i)) * t ** (4 - i)


def test_divided_family_in_char_p():
    K = OperatorField(F2T, "identity", "divided")
    t = F2T.t()
    assert K.hs_derive(1, t ** 2) == F2T.zero
    assert K.hs_derive(2, t ** 2) == F2T.one
    naive = naive_power_family(F2T, 3)
    assert naive.hs_derive(2, t ** 2) == F2T.zero


def test_shift_and_scale():
    t = QT.t()
    K = OperatorField(QT, "shift", "divided")
    assert K.apply_sigma(t * t) == (t + 1) ** 2
    assert K.sigma_inv(K.apply_sigma(1 / t)) == 1 / t
    S = OperatorField(QT, ("scale", Fraction(3)), "divided")
    assert S.apply_sigma(t) == 3 * t
    assert S.apply_sigma(t, -1) == t / 3


def test_depth_bound():
    K = OperatorField(QT, "shift", "divided", depth=2)
    with pytest.raises(DepthError):
        K.hs_vector(QT.t(), 3)


def test_prime_field_rejects_operators():
    with pytest.raises(ValueError):
        OperatorField(Field(0), "shift", "trivial")


@pytest.mark.parametrize("F", [QT, F2T, F3T])
def test_operator_field_laws(F):
    t = F.t()
    K = OperatorField(F, "shift", "divided")
    rep = verify_operator_field(K, 4, [t, t * t + 1, 1 / (t + 2)])
    assert rep.ok, rep.summary()


def test_controls_fail_with_witness():
    t = QT.t()
    rep = verify_operator_field(naive_power_family(QT, 3), 3, [t * t])
    assert not rep.passed("iterativity")
    assert rep.witness("iterativity")["i"] >= 1
    rep = verify_operator_field(truncated_family(QT, 3), 3, [t ** 3])
    assert not rep.ok
    S = OperatorField(QT, ("scale", Fraction(2)), "divided")
    rep = verify_operator_field(S, 2, [t])
    assert not rep.passed("sigma_commutes")
    assert rep.passed("iterativity")


@settings(max_examples=25, deadline=None)
@given(samples_q, samples_q)
def test_leibniz_and_iterativity_property(a, b):
    K = OperatorField(QT, "shift", "divided")
    n = 4
    da, db, dab = K.hs_vector(a, n), K.hs_vector(b, n), K.hs_vector(a * b, n)
    for m in range(n + 1):
        assert dab[m] == sum((da[i] * db[m - i] for i in range(m + 1)), QT.zero)
    for i in range(3):
        for j in range(3):
            assert K.hs_derive(j, K.hs_derive(i, a)) == comb(i + j, i) * K.hs_derive(i + j, a)
    # shift commutes with the family
    sa = K.apply_sigma(a)
    assert K.hs_vector(sa, n) == [K.apply_sigma(x) for x in da]


def test_constants_predicate():
    t = F3T.t()
    K = OperatorField(F3T, "identity", "divided")
    assert K.is_constant(F3T(2))
    assert not K.is_constant(t ** 3)
    Ks = OperatorField(QT, "shift", "divided")
    assert not Ks.is_constant(QT.t())
    assert Ks.is_constant(QT(5))
