"""The rank one module (t) over Q(t) with the shift: prolongations and the E-structure checks."""
from __future__ import annotations

import sys

from opfields import difference as dm
from opfields import linalg as la
from opfields.scalars import Field, OperatorField

if __name__ == "__main__":
    p = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    F = Field(p, True)
    K = OperatorField(F, "shift", "divided", depth=4)
    t = F.t()
    M = dm.DifferenceModule(K, [[t]], "Gamma")
    print("dual matrix:", la.fmt_matrix(F, dm.dual(M).A))
    for k in range(3):
        P = dm.tau_k(M, k)
        ok, _ = P.injectivity_certificate()
        print(f"tau_{k}: Sigma = {la.fmt_matrix(F, P.S)}, injective: {ok}")
    B = dm.comul_iso_b(M, 1, 1)
    print("b at (1,1) is an isomorphism:", B.report.ok)
    rep = dm.verify_etensor(dm.build_estructure(K, M, 2, 2), [t, 1 / (t + 1)])
    print(f"{len(rep.names())} diagram families checked, all pass: {rep.ok}")
    bad = dm.verify_etensor(dm.build_estructure(K, M, 1, 1, "sabotaged"), [t])
    print("sabotaged binomial caught by:", bad.failures())
