"""Free monoids on dual numbers, their Cartier duals, and where characteristic p bites."""
from __future__ import annotations

from opfields import algebra as alg
from opfields import linalg as la
from opfields import monoid as mn
from opfields.scalars import Field


def show_products(p, N=4):
    F = Field(p)
    T = mn.free_monoid(alg.dual_numbers(F), N)
    E = T.level(N)
    e = mn.free_generators(T, N)
    print(f"char {p}: level dims {[T.level(n).dim for n in range(N + 1)]}")
    for i in range(1, N + 1):
        for j in range(i, N + 1 - i):
            c = la.solve(F, la.from_columns(F, e, E.dim), E.multiply(e[i], e[j]), N + 1)
            print(f"  e{i} * e{j} = {F.fmt(c[i + j])} e{i + j}")
    ps = mn.power_series_monoid(F, N)
    maps = mn.lift_map(ps, la.identity(F, 2), alg.dual_numbers(F), T)
    print("  x -> e1 invertible by level:", [la.is_invertible(F, f.matrix) for f in maps])


def show_cartier(law):
    F = Field(0)
    C = mn.cartier_dual(mn.power_series_monoid(F, 3, law))
    print(f"Cartier dual of the {law} law, u1 * u1 =", [F.fmt(a) for a in C.multiply(1, 1, C.basis(1, 1), C.basis(1, 1))])


if __name__ == "__main__":
    for p in (0, 2, 3):
        show_products(p)
    show_cartier("additive")
    show_cartier("multiplicative")
