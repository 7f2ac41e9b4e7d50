from __future__ import annotations

from math import comb

import pytest
from hypothesis import given, settings, strategies as st

from opfields import algebra as alg
from opfields import linalg as la
from opfields import monoid as mn
from opfields.scalars import Field, OperatorField, naive_power_family

Q = Field(0)
QT = Field(0, True)


def test_free_monoid_on_dual_numbers_products():
    T = mn.free_monoid(alg.dual_numbers(Q), 4)
    assert [T.level(n).dim for n in range(5)] == [1, 2, 3, 4, 5]
    E = T.level(3)
    e = mn.free_generators(T, 3)
    assert E.multiply(e[1], e[2]) == la.vscale(Q(3), e[3])
    assert E.multiply(e[1], e[1]) == la.vscale(Q(2), e[2])
    assert T.check().ok


def test_free_monoid_char_two_square_vanishes():
    F2 = Field(2)
    T = mn.free_monoid(alg.dual_numbers(F2), 3)
    e = mn.free_generators(T, 2)
    assert la.is_zero_vec(T.level(2).multiply(e[1], e[1]))


@pytest.mark.parametrize("abelian,dims", [(True, [1, 3, 6, 10]), (False, [1, 3, 7, 15])])
def test_free_monoid_dimensions_on_truncated(abelian, dims):
    T = mn.free_monoid(alg.truncated(Q, 2), 3, abelian=abelian)
    assert [T.level(n).dim for n in range(4)] == dims
    assert T.commutative == abelian
    assert T.check().ok


def test_free_monoid_rejects_function_field():
    with pytest.raises(mn.TowerError):
        mn.free_monoid(alg.dual_numbers(QT), 2)


def test_multiplicative_law_coproduct():
    T = mn.power_series_monoid(Q, 3, "multiplicative")
    M = T.product(1, 1).matrix
    # m#(x^2) = (x + y + xy)^2 = 2 x (x) y in E_1 (x) E_1
    col = [row[2] for row in M]
    assert col == [Q(0), Q(0), Q(0), Q(2)]
    assert T.check().ok
    with pytest.raises(mn.TowerError):
        mn.power_series_monoid(Q, 2, {(1, 0): 1, (0, 1): 1, (2, 0): 1})


def test_discrete_towers():
    for name in ("N", "Z", "Z/3"):
        T = mn.discrete_monoid_truncation(Q, name, 3)
        assert T.check().ok
    assert mn.discrete_monoid_truncation(Q, "Z", 2).level(2).dim == 5
    with pytest.raises(mn.TowerError):
        mn.discrete_monoid_truncation(Q, "R", 2)


def test_product_tower():
    T = mn.product_tower(mn.power_series_monoid(Q, 2), mn.discrete_monoid_truncation(Q, "N", 2))
    assert [T.level(n).dim for n in range(3)] == [1, 4, 9]
    assert T.check().ok
    K = OperatorField(QT, "shift", "divided")
    t = QT.t()
    assert mn.verify_action(mn.make_action(T, K), [t, 1 / (t + 1)]).ok


def test_tower_json_round_trip():
    for T in (mn.power_series_monoid(Field(3), 3, "multiplicative"), mn.free_monoid(alg.dual_numbers(Q), 2)):
        d = T.to_dict()
        assert mn.tower_from_dict(d).to_dict() == d


def test_cartier_dual_divided_powers():
    C = mn.cartier_dual(mn.power_series_monoid(Q, 4))
    assert C.multiply(1, 1, C.basis(1, 1), C.basis(1, 1)) == la.vscale(Q(2), C.basis(2, 2))
    assert C.multiply(1, 2, C.basis(1, 1), C.basis(2, 2)) == la.vscale(Q(3), C.basis(3, 3))
    assert C.check().ok
    with pytest.raises(mn.TowerError):
        mn.cartier_dual(mn.free_monoid(alg.truncated(Q, 2), 2))


def test_cartier_dual_of_multiplicative_law():
    C = mn.cartier_dual(mn.power_series_monoid(Q, 3, "multiplicative"))
    # the xy term of the law adds u1 to u1 * u1
    assert C.multiply(1, 1, C.basis(1, 1), C.basis(1, 1)) == [Q(0), Q(1), Q(2)]
    assert C.check().ok


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([0, 2, 3, 5]), st.integers(1, 5))
def test_power_series_tower_axioms(p, N):
    T = mn.power_series_monoid(Field(p), N)
    rep = T.check()
    assert rep.ok, rep.summary()
    for (i, j), c in mn.binomial_table(N).items():
        C = mn.cartier_dual(T)
        assert C.multiply(i, j, C.basis(i, i), C.basis(j, j)) == la.vscale(Field(p)(c), C.basis(i + j, i + j))


def test_derivation_lift_is_iterated_derivative():
    K = OperatorField(QT, "identity", "divided")
    T = mn.free_monoid(alg.dual_numbers(Q), 4)
    t = QT.t()
    a = 1 / (t - 2)
    lift = mn.derivation_lift(T, K, a, 4)
    # d^n (t-2)^-1 = (-1)^n n! (t-2)^-(n+1)
    fact = [1, 1, 2, 6, 24]
    assert lift[4] == [QT((-1) ** n * fact[n]) / (t - 2) ** (n + 1) for n in range(5)]


def test_actions_verified_and_controls_rejected():
    K = OperatorField(QT, "shift", "divided")
    t = QT.t()
    ps = mn.power_series_monoid(Q, 4)
    assert mn.verify_action(mn.make_action(ps, K, "hs"), [t, t * t]).ok
    assert mn.verify_action(mn.make_action(mn.discrete_monoid_truncation(Q, "Z", 3), K), [t]).ok
    rep = mn.verify_action(mn.make_action(ps, naive_power_family(QT, 4), "hs"), [t * t])
    assert not rep.passed("comodule_law")
    w = rep.witness("comodule_law")
    assert set(w) >= {"levels", "a", "component (u,v)"}
    assert mn.comodule_defect(mn.make_action(ps, K, "hs"), 2, 2, t ** 4) == []
    with pytest.raises(mn.TowerError):
        mn.make_action(mn.free_monoid(alg.dual_numbers(Q), 2), K, "hs")


def test_divided_power_coefficients():
    for k, d, coef, divisible in mn.divided_power_check(None, 6):
        assert divisible
        assert coef == comb(d * k, k) * (coef // comb(d * k, k))
    T = mn.free_monoid(alg.dual_numbers(Q), 4)
    e = mn.free_generators(T, 4)
    E = T.level(4)
    # e1^4 = 4! e4
    assert E.power(e[1], 4) == la.vscale(Q(24), e[4])
