from __future__ import annotations

import random

import pytest
from hypothesis import given, settings, strategies as st

from opfields import algebra as alg
from opfields import linalg as la
from opfields import monoid as mn
from opfields import prolong as pr
from opfields.scalars import DepthError, Field, OperatorField

Q = Field(0)
QT = Field(0, True)
KD = OperatorField(QT, "identity", "divided")


def trivial_action(F=Q, N=4):
    return mn.make_action(mn.power_series_monoid(F, N), OperatorField(F), "trivial")


def hs_action(N=4):
    return mn.make_action(mn.power_series_monoid(Q, N), KD, "hs")


def sympy_jets(text, names, k, twist):
    """Oracle: substitute X -> sum X_b e^b (and t -> t + e when twisted), expand, read e-coefficients."""
    sympy = pytest.importorskip("sympy")
    e, t = sympy.symbols("e t")
    subs = {sympy.Symbol(n): sum(sympy.Symbol(f"{n}{b}") * e ** b for b in range(k + 1)) for n in names}
    if twist:
        subs[t] = t + e
    expr = sympy.sympify(text.replace("^", "**"), locals={"t": t})
    expr = expr.subs(subs, simultaneous=True)
    ser = sympy.series(expr, e, 0, k + 1).removeO()
    return [sympy.expand(ser.coeff(e, b)) for b in range(k + 1)]


def as_sympy(strings):
    sympy = pytest.importorskip("sympy")
    t = sympy.Symbol("t")
    return [sympy.sympify(s.replace("^", "**"), locals={"t": t}) for s in strings]


def test_cusp_jets():
    J = pr.jet_ideal([pr.parse_poly(Q, ["x", "y"], "y^2 - x^3")], 2, trivial_action(), ["x", "y"])
    assert J.fmt()[2] == pr.parse_poly(Q, J.names, "2*y0*y2 + y1^2 - 3*x0^2*x2 - 3*x0*x1^2").fmt(J.names)
    assert J.check_projection().ok


@pytest.mark.parametrize("text,twist", [("y^2 - x^3", False), ("x*y^2 + 3*x - 1", False),
                                        ("y^2 - t*x + 1/(t+1)", True), ("t^2*x*y - y^3", True)])
def test_jets_against_sympy(text, twist):
    sympy = pytest.importorskip("sympy")
    F = QT if twist else Q
    A = hs_action() if twist else trivial_action()
    for k in (1, 2, 3):
        J = pr.jet_ideal([pr.parse_poly(F, ["x", "y"], text)], k, A, ["x", "y"])
        want = sympy_jets(text, ["x", "y"], k, twist)
        got = as_sympy(J.fmt())
        assert all(sympy.simplify(g - w) == 0 for g, w in zip(got, want))


def test_level_zero_and_depth_bound():
    f = pr.parse_poly(Q, ["x", "y"], "x*y - 1")
    J = pr.jet_ideal([f], 0, trivial_action(), ["x", "y"])
    assert J.fmt() == ["x0*y0 - 1"]
    with pytest.raises(DepthError):
        pr.jet_ideal([f], 5, trivial_action(N=4), ["x", "y"])


def test_nabla_of_points():
    A = hs_action()
    t = QT.t()
    circle = pr.parse_poly(QT, ["x", "y"], "x^2 + y^2 - 1")
    s = t + 1
    pt = [(1 - s * s) / (s * s + 1), 2 * s / (s * s + 1)]
    jp = pr.nabla(A, [circle], pt, 3)
    assert pr.jet_ideal([circle], 3, A).satisfied_by(jp)
    assert jp[:4] == KD.hs_vector(pt[0], 3)
    with pytest.raises(pr.PointError):
        pr.nabla(A, [circle], [t, t], 1)


def test_comonad_substitutions():
    eps, mt, rep = pr.comonad_maps(trivial_action(), 1, 1, 1)
    assert rep.ok
    imgs = [p.fmt(mt.target_names) for p in mt.images]
    assert imgs == ["X0_0", "X0_1", "X0_1", "2*X0_2"]
    _, mt2, rep2 = pr.comonad_maps(trivial_action(Field(2)), 1, 1, 1)
    assert rep2.ok
    assert not mt2.images[3]
    with pytest.raises(DepthError):
        pr.comonad_maps(trivial_action(N=2), 2, 1, 1)


def test_jet_comultiplication_for_generators():
    f = pr.parse_poly(QT, ["x", "y"], "y^2 - t*x")
    _, _, rep = pr.comonad_maps(hs_action(3), 1, 2, gens=[f])
    assert rep.ok, rep.summary()
    assert rep.passed("maps_into_jet_ideal")


def test_jet_of_jet_layout():
    f = pr.parse_poly(Q, ["x"], "x^2")
    outer, inner = pr.jet_of_jet([f], 1, 1, trivial_action())
    assert inner.nvars == 2 and outer.nvars == 4
    assert len(outer.gens) == 4


def random_jet_matrix(rng, k, m=2):
    g = [[[QT(rng.randint(-3, 3)) for _ in range(m)] for _ in range(m)] for _ in range(k + 1)]
    g[0] = la.madd(g[0], la.mscale(QT(7), la.identity(QT, m)))
    return g


def test_jet_group_laws():
    rng = random.Random(11)
    samples = [random_jet_matrix(rng, 3) for _ in range(3)]
    assert pr.check_jet_group(QT, samples).ok
    with pytest.raises(ValueError):
        pr.jet_point_compose(QT, [la.zeros(QT, 2, 2)], [la.identity(QT, 2)])


@settings(max_examples=15, deadline=None)
@given(st.lists(st.integers(-4, 4), min_size=8, max_size=8))
def test_nabla_is_a_group_homomorphism(c):
    t = QT.t()
    g = [[t + c[0], QT(c[1])], [QT(c[2]) * t, t * t + c[3] + 9]]
    h = [[QT(c[4]) + 1 / (t - 20), t], [QT(c[5]), QT(c[6]) * t + c[7] + 30]]
    if not (la.is_invertible(QT, g) and la.is_invertible(QT, h)):
        return
    gh = la.matmul(QT, g, h, 2)
    lhs = pr.nabla_matrix(KD, gh, 3)
    rhs = pr.jet_point_compose(QT, pr.nabla_matrix(KD, g, 3), pr.nabla_matrix(KD, h, 3))
    assert lhs == rhs


def test_operator_structure_on_square_root_extension():
    t = QT.t()
    B = alg.quotient_poly(QT, [-t, QT.zero, QT.one], "u")
    u = B.basis_vector(1)
    rel = pr.parse_poly(QT, ["u"], "u^2 - t")
    # D_1(u) = 1/(2u) = u/(2t)
    good = pr.verify_algebra_estructure(KD, B, [u], [rel], [[la.vscale(1 / (2 * t), u)]], 3)
    assert good.ok, good.summary()
    bad = pr.verify_algebra_estructure(KD, B, [u], [rel], [[la.vscale(QT.one, u)]], 2)
    assert not bad.passed("relations_preserved")
    assert bad.witness("relations_preserved")["relation"] == 0


def test_twisted_tensor_scalar_matrix():
    t = QT.t()
    T = pr.twisted_tensor(1, hs_action(2), 1)
    # t acts on K[x]/x^2 as multiplication by t + x
    assert T.scalar_matrix(t) == [[t, QT.zero], [QT.one, t]]
    assert T.check([t, 1 / (t + 1)]).ok
    assert pr.twisted_tensor(2, hs_action(2), 2).dim == 6
