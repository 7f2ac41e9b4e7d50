"""Jet ideals of a cusp and of a twisted curve, and the canonical lift of a point."""
from __future__ import annotations

from opfields import monoid as mn
from opfields import prolong as pr
from opfields.scalars import Field, OperatorField

Q = Field(0)
QT = Field(0, True)

if __name__ == "__main__":
    triv = mn.make_action(mn.power_series_monoid(Q, 3), OperatorField(Q), "trivial")
    cusp = pr.parse_poly(Q, ["x", "y"], "y^2 - x^3")
    for k in (1, 2):
        print(f"cusp, level {k}:", pr.jet_ideal([cusp], k, triv, ["x", "y"]).fmt())

    K = OperatorField(QT, "identity", "divided")
    hs = mn.make_action(mn.power_series_monoid(Q, 3), K, "hs")
    twisted = pr.parse_poly(QT, ["x", "y"], "y^2 - t*x")
    print("y^2 - t x, level 1:", pr.jet_ideal([twisted], 1, hs, ["x", "y"]).fmt())

    t = QT.t()
    circle = pr.parse_poly(QT, ["x", "y"], "x^2 + y^2 - 1")
    pt = [(1 - t * t) / (1 + t * t), 2 * t / (1 + t * t)]
    jp = pr.nabla(hs, [circle], pt, 2)
    print("lift of a circle point to level 2:", [QT.fmt(a) for a in jp])

    _, mt, rep = pr.comonad_maps(triv, 1, 1, 1)
    print("comonad at (1,1):", dict(zip(mt.source_names, (p.fmt(mt.target_names) for p in mt.images))),
          "laws ok:", rep.ok)
