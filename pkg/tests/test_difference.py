from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from opfields import difference as dm
from opfields import linalg as la
from opfields import modules as md
from opfields import monoid as mn
from opfields.scalars import DepthError, Field, OperatorField

QT = Field(0, True)
F2T = Field(2, True)


def shift_field(F=QT, depth=4):
    return OperatorField(F, "shift", "divided", depth=depth), F.t()


def test_rejects_singular_matrix():
    K, t = shift_field()
    with pytest.raises(ValueError):
        dm.DifferenceModule(K, [[t, t], [t, t]])


def test_dual_convention_and_rigidity():
    K, t = shift_field()
    M = dm.DifferenceModule(K, [[t]])
    assert dm.dual(M).A == [[1 / t]]
    # sigma^-1 applied to the inverse transpose would break evaluation
    assert not dm.equivariant(K, dm.evaluation(M), [[1 / (t - 1) * t]], [[QT.one]])
    A = [[t, QT.one], [QT.zero, t + 1]]
    N = dm.DifferenceModule(K, A)
    assert dm.dual(N).A == la.inverse(QT, la.transpose(A, 2))
    for X in (M, N, dm.direct_sum_modules(M, N), dm.hom_modules(N, M)):
        assert dm.check_rigidity(X).ok
    # a morphism of difference modules: evaluation lands in the unit
    assert dm.equivariant(K, dm.evaluation(N), dm.tensor_modules(dm.dual(N), N).A, [[QT.one]])


def test_tau_one_matrix():
    K, t = shift_field()
    P = dm.tau_k(dm.DifferenceModule(K, [[t]]), 1)
    # sigma(d_1 e) = d_1(t e) = t d_1 e + e
    assert P.S == [[t, QT.one], [QT.zero, t]]
    assert P.X == [[QT.zero, QT.one], [QT.zero, QT.zero]]
    assert P.check([t, 1 / (t + 1)]).ok
    assert P.as_difference_module().n == 2


@pytest.mark.parametrize("F", [QT, F2T])
def test_tau_checks_and_certificate(F):
    K, t = shift_field(F)
    M = dm.DifferenceModule(K, [[t, F.one], [F.zero, t * t + 1]])
    for k in range(4):
        P = dm.tau_k(M, k)
        rep = P.check([t])
        assert rep.ok, rep.summary()
        ok, levels = P.injectivity_certificate()
        assert ok and len(levels) == k
    with pytest.raises(DepthError):
        dm.tau_k(M, 5)


def test_tau_morphism_is_functorial():
    K, t = shift_field()
    F = [[t, QT.one], [QT(2), t * t]]
    G = [[1 / (t + 1), QT.zero], [t, QT.one]]
    lhs = dm.tau_morphism(K, la.matmul(QT, F, G, 2), 2, 2, 2)
    rhs = la.matmul(QT, dm.tau_morphism(K, F, 2, 2, 2), dm.tau_morphism(K, G, 2, 2, 2), 6)
    assert lhs == rhs


def test_tensor_structure_iso():
    K, t = shift_field()
    M = dm.DifferenceModule(K, [[t]])
    N = dm.DifferenceModule(K, [[QT.one, t], [QT.zero, QT.one]])
    for k in range(3):
        T = dm.tensor_structure_iso(M, N, k)
        assert T.report.ok, T.report.summary()


def test_counit_and_change_of_algebra():
    K, t = shift_field()
    M = dm.DifferenceModule(K, [[t]])
    for k in range(3):
        _, rep = dm.counit_iso_a(M, k)
        assert rep.ok, rep.summary()
    _, rep = dm.change_algebra_iso(dm.unit_module(K), 1)
    assert rep.ok and rep.passed("unit_case_is_dual_transition")
    _, rep = dm.change_algebra_iso(M, 2)
    assert rep.ok


def test_b_coefficients_frozen():
    assert dm.b_coefficient(1, 1, 1, 1, 0, 0) == 2
    assert dm.b_coefficient(1, 1, 1, 0, 0, 0) == 1
    assert dm.b_coefficient(1, 1, 1, 1, 1, 0) == 1
    assert dm.b_coefficient(2, 1, 2, 1, 0, 0) == 3
    assert dm.b_coefficient(1, 1, 0, 0, 0, 0) == 1
    assert dm.b_coefficient(1, 1, 0, 0, 0, 0, "sabotaged") == 0
    # out of range exponents give zero
    assert dm.b_coefficient(1, 1, 0, 1, 1, 0) == 0


def test_b_coassociativity():
    for k in range(3):
        for l in range(3):
            for r in range(2):
                assert dm.b_coassociativity(k, l, r) == []
    bad = dm.b_coassociativity(1, 1, 1, "sabotaged")
    assert bad and set(bad[0]) == {"d", "at", "route_A", "route_B"}


def test_comultiplication_iso():
    K, t = shift_field()
    M = dm.DifferenceModule(K, [[t]])
    B = dm.comul_iso_b(M, 1, 1)
    assert B.report.ok, B.report.summary()
    with pytest.raises(DepthError):
        dm.comul_iso_b(M, 3, 2)
    S = dm.comul_iso_b(M, 1, 1, "sabotaged")
    assert not S.report.ok


def test_fibre_twist():
    K, t = shift_field()
    M = dm.DifferenceModule(K, [[t, QT.one], [QT.zero, t]])
    for k in range(3):
        assert dm.check_fibre_twist(M, k, [t, t * t - 1]).ok
    # d_1 acts on a as x . theta_1 = theta_0 with coefficient d_1(a)
    assert dm.twisted_theta(K, 1, 1, t * t, 1, 0) == [2 * t, t * t]


def test_estructure_small_and_sabotaged():
    K, t = shift_field()
    D = dm.build_estructure(K, dm.DifferenceModule(K, [[t]]), 1, 1)
    rep = dm.verify_etensor(D, [t])
    assert rep.ok, rep.summary()
    bad = dm.verify_etensor(dm.build_estructure(K, dm.DifferenceModule(K, [[t]]), 1, 1, "sabotaged"), [t])
    assert any(n.startswith("comultiplication.") for n in bad.failures())
    with pytest.raises(DepthError):
        dm.build_estructure(K, dm.DifferenceModule(K, [[t]]), 3, 2)


def test_actions_read_back():
    K, t = shift_field()
    built = mn.make_action(mn.power_series_monoid(QT.prime_field(), 3), K, "hs")
    D = dm.build_estructure(K, dm.DifferenceModule(K, [[t]]), 1, 1, action=built)
    back = dm.action_from_tau_unit(D, 3)
    a = (t + 2) / (t * t + 1)
    assert [back.mu(n, a) for n in range(4)] == [built.mu(n, a) for n in range(4)]
    read = dm.action_from_twisted_unit(built)
    assert read(2, a) == built.mu(2, a)


def test_scale_sigma_breaks_prolongation():
    K = OperatorField(QT, ("scale", Fraction(2)), "divided", depth=3)
    t = QT.t()
    rep = dm.tau_k(dm.DifferenceModule(K, [[t]]), 1).check([t])
    assert not rep.passed("sigma_commutes_with_d")


entries = st.integers(-3, 3)


@settings(max_examples=10, deadline=None)
@given(st.lists(entries, min_size=8, max_size=8))
def test_random_two_dimensional_modules(c):
    K, t = shift_field(depth=2)
    A = [[t + c[0], QT(c[1]) * t + c[2]], [QT(c[3]), QT(c[4]) * t * t + c[5] * t + c[6] + 1]]
    if not la.is_invertible(QT, A):
        return
    M = dm.DifferenceModule(K, A)
    assert dm.check_rigidity(M).ok
    P = dm.tau_k(M, 2)
    assert P.check([t + c[7]]).ok
    assert md.flatness_report(P.module).injective
    assert dm.tensor_structure_iso(M, dm.dual(M), 1).report.ok
