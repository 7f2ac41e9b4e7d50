"""Finite-dimensional commutative algebras by structure constants."""
from __future__ import annotations

import itertools
from math import prod

from . import linalg as la
from .report import Report
from .scalars import Field, RatFunc, pdivmod, pmul


class AlgebraError(ValueError):
    pass


class FiniteAlgebra:
    """Commutative algebra with basis b_0..b_{d-1}; b_i b_j = sum_k mul[i][j][k] b_k."""

    def __init__(self, field: Field, dim: int, mul, unit, counit=None, radical=None,
                 tag="custom", names=None):
        self.field = field
        self.dim = dim
        self.mul = mul
        self.unit = list(unit)
        self.counit = list(counit) if counit is not None else None
        self.radical_basis = radical
        self.tag = tag
        self.names = names or [f"b{i}" for i in range(dim)]
        self._lmats = None

    def __repr__(self):
        return f"FiniteAlgebra({self.tag}, dim={self.dim}, over {self.field.name})"

    # -- elements -------------------------------------------------------
    def basis_vector(self, i):
        v = [self.field.zero] * self.dim
        v[i] = self.field.one
        return v

    def one(self):
        return list(self.unit)

    def zero(self):
        return [self.field.zero] * self.dim

    def scalar(self, c):
        c = self.field(c)
        return [c * u for u in self.unit]

    def multiply(self, a, b):
        F = self.field
        out = [F.zero] * self.dim
        for i, ai in enumerate(a):
            if not ai:
                continue
            row = self.mul[i]
            for j, bj in enumerate(b):
                if not bj:
                    continue
                c = ai * bj
                for k, m in enumerate(row[j]):
                    if m:
                        out[k] = out[k] + c * m
        return out

    def power(self, a, e):
        out = self.one()
        base = list(a)
        while e:
            if e & 1:
                out = self.multiply(out, base)
            base = self.multiply(base, base)
            e >>= 1
        return out

    def mult_matrix(self, a):
        """L_a with (L_a)[k][j] = sum_i a_i mul[i][j][k]."""
        F = self.field
        L = la.zeros(F, self.dim, self.dim)
        for i, ai in enumerate(a):
            if not ai:
                continue
            for j in range(self.dim):
                for k, m in enumerate(self.mul[i][j]):
                    if m:
                        L[k][j] = L[k][j] + ai * m
        return L

    def left_mats(self):
        if self._lmats is None:
            self._lmats = [self.mult_matrix(self.basis_vector(i)) for i in range(self.dim)]
        return self._lmats

    def trace(self, a):
        L = self.mult_matrix(a)
        acc = self.field.zero
        for i in range(self.dim):
            acc = acc + L[i][i]
        return acc

    def trace_form(self):
        F = self.field
        tr = [self.trace(self.basis_vector(k)) for k in range(self.dim)]
        T = la.zeros(F, self.dim, self.dim)
        for i in range(self.dim):
            for j in range(self.dim):
                acc = F.zero
                for k, m in enumerate(self.mul[i][j]):
                    if m and tr[k]:
                        acc = acc + m * tr[k]
                T[i][j] = acc
        return T

    def fmt_element(self, v):
        F = self.field
        parts = []
        for c, name in zip(v, self.names):
            if not c:
                continue
            cs = F.fmt(c)
            parts.append(name if cs == "1" and name != "1" else (cs if name == "1" else f"{cs}*{name}"))
        return " + ".join(parts) if parts else "0"

    def to_dict(self):
        F = self.field
        d = {
            "field": F.name,
            "dim": self.dim,
            "unit": [F.fmt(a) for a in self.unit],
            "mul": [[[F.fmt(a) for a in self.mul[i][j]] for j in range(self.dim)] for i in range(self.dim)],
            "tag": self.tag,
            "names": self.names,
        }
        if self.counit is not None:
            d["counit"] = [F.fmt(a) for a in self.counit]
        if self.radical_basis is not None:
            d["radical"] = [[F.fmt(a) for a in v] for v in self.radical_basis]
        return d


def _nested(F, data, depth):
    if depth == 0:
        return F(data)
    return [_nested(F, x, depth - 1) for x in data]


def algebra_from_dict(d, field=None) -> FiniteAlgebra:
    from .scalars import parse_field
    F = field or parse_field(d["field"])
    dim = int(d["dim"])
    mul = _nested(F, d["mul"], 3)
    unit = _nested(F, d["unit"], 1)
    counit = _nested(F, d["counit"], 1) if d.get("counit") is not None else None
    rad = _nested(F, d["radical"], 2) if d.get("radical") is not None else None
    if len(mul) != dim or any(len(r) != dim or any(len(c) != dim for c in r) for r in mul):
        raise AlgebraError("structure constants have the wrong shape")
    return FiniteAlgebra(F, dim, mul, unit, counit, rad, d.get("tag", "custom"), d.get("names"))


# ---------------------------------------------------------------------------
# constructors

def _poly_names(n, var="x"):
    return ["1" if i == 0 else (var if i == 1 else f"{var}^{i}") for i in range(n)]


def quotient_poly(F: Field, coeffs, var="x") -> FiniteAlgebra:
    """K[x]/(f) for f given by coefficients, lowest degree first."""
    f = [F(c) for c in coeffs]
    while f and not f[-1]:
        f.pop()
    if len(f) < 2:
        raise AlgebraError("modulus must have positive degree")
    lead = f[-1]
    f = [c / lead for c in f]
    d = len(f) - 1
    # x^d = -sum_{i<d} f_i x^i; reduce products of degree < 2d - 1
    reduce = []
    for e in range(2 * d - 1):
        if e < d:
            v = [F.zero] * d
            v[e] = F.one
        else:
            prev = reduce[e - 1]
            v = [F.zero] + prev[:-1]
            top = prev[-1]
            if top:
                v = [a - top * c for a, c in zip(v, f[:d])]
        reduce.append(v)
    mul = [[reduce[i + j] for j in range(d)] for i in range(d)]
    unit = [F.one] + [F.zero] * (d - 1)
    counit = None
    if not f[0]:
        counit = list(unit)
    return FiniteAlgebra(F, d, mul, unit, counit, None, "quotient-poly", _poly_names(d, var))


def truncated(F: Field, n: int, var="x") -> FiniteAlgebra:
    """K[x]/x^(n+1) with counit x -> 0 and radical (x)."""
    d = n + 1
    mul = []
    for i in range(d):
        row = []
        for j in range(d):
            v = [F.zero] * d
            if i + j < d:
                v[i + j] = F.one
            row.append(v)
        mul.append(row)
    unit = [F.one] + [F.zero] * n
    rad = [[F.one if k == i else F.zero for k in range(d)] for i in range(1, d)]
    return FiniteAlgebra(F, d, mul, unit, list(unit), rad, "truncated", _poly_names(d, var))


def dual_numbers(F: Field) -> FiniteAlgebra:
    E = truncated(F, 1, "e")
    E.names = ["1", "e"]
    return E


def group_algebra(F: Field, orders) -> FiniteAlgebra:
    """K[Z/m_1 x ... x Z/m_r], basis in lexicographic order of the elements."""
    orders = list(orders)
    elems = list(itertools.product(*[range(m) for m in orders]))
    index = {g: i for i, g in enumerate(elems)}
    d = len(elems)
    mul = []
    for g in elems:
        row = []
        for h in elems:
            v = [F.zero] * d
            v[index[tuple((a + b) % m for a, b, m in zip(g, h, orders))]] = F.one
            row.append(v)
        mul.append(row)
    unit = [F.zero] * d
    unit[index[tuple(0 for _ in orders)]] = F.one
    counit = [F.one] * d
    rad = [] if (F.p == 0 or prod(orders) % F.p) else None
    names = ["g" + "".join(map(str, g)) if g else "1" for g in elems]
    return FiniteAlgebra(F, d, mul, unit, counit, rad, "group-algebra", names)


def product(E1: FiniteAlgebra, E2: FiniteAlgebra) -> FiniteAlgebra:
    F = E1.field
    d1, d2 = E1.dim, E2.dim
    d = d1 + d2
    z = F.zero
    mul = [[[z] * d for _ in range(d)] for _ in range(d)]
    for i in range(d1):
        for j in range(d1):
            mul[i][j] = list(E1.mul[i][j]) + [z] * d2
    for i in range(d2):
        for j in range(d2):
            mul[d1 + i][d1 + j] = [z] * d1 + list(E2.mul[i][j])
    unit = list(E1.unit) + list(E2.unit)
    rad = None
    if E1.radical_basis is not None and E2.radical_basis is not None:
        rad = [list(v) + [z] * d2 for v in E1.radical_basis] + [[z] * d1 + list(v) for v in E2.radical_basis]
    names = [f"({n},0)" for n in E1.names] + [f"(0,{n})" for n in E2.names]
    return FiniteAlgebra(F, d, mul, unit, None, rad, "product", names)


def tensor(E1: FiniteAlgebra, E2: FiniteAlgebra) -> FiniteAlgebra:
    """E1 (x) E2 with basis index i * dim E2 + j."""
    F = E1.field
    d1, d2 = E1.dim, E2.dim
    d = d1 * d2
    mul = [[None] * d for _ in range(d)]
    for i in range(d1):
        for j in range(d2):
            for k in range(d1):
                for l in range(d2):
                    mul[i * d2 + j][k * d2 + l] = la.vkron(E1.mul[i][k], E2.mul[j][l])
    unit = la.vkron(E1.unit, E2.unit)
    counit = None
    if E1.counit is not None and E2.counit is not None:
        counit = la.vkron(E1.counit, E2.counit)
    rad = None
    perfect = not F.function
    if perfect and E1.radical_basis is not None and E2.radical_basis is not None:
        vecs = [la.vkron(r, E2.basis_vector(j)) for r in E1.radical_basis for j in range(d2)]
        vecs += [la.vkron(E1.basis_vector(i), r) for i in range(d1) for r in E2.radical_basis]
        rad = la.span(F, vecs, d).basis
    names = [f"{a}*{b}" if a != "1" and b != "1" else (a if b == "1" else b)
             for a in E1.names for b in E2.names]
    if len(set(names)) != len(names):
        names = [f"{a}(x){b}" for a in E1.names for b in E2.names]
    return FiniteAlgebra(F, d, mul, unit, counit, rad, "tensor", names)


def monomial_basis(nvars, gens):
    """Standard monomials for a monomial ideal, by degree then x-first lex."""
    gens = [tuple(g) for g in gens]
    for v in range(nvars):
        if not any(g[v] > 0 and sum(g) == g[v] for g in gens):
            raise AlgebraError(f"ideal contains no pure power of variable {v}; quotient is infinite")
    bound = [min(g[v] for g in gens if sum(g) == g[v] and g[v] > 0) for v in range(nvars)]

    def standard(m):
        return not any(all(m[v] >= g[v] for v in range(nvars)) for g in gens)

    monos = [m for m in itertools.product(*[range(b) for b in bound]) if standard(m)]
    monos.sort(key=lambda m: (sum(m), tuple(-e for e in m)))
    return monos


def monomial_quotient(F: Field, nvars: int, gens, var_names=None) -> FiniteAlgebra:
    monos = monomial_basis(nvars, gens)
    index = {m: i for i, m in enumerate(monos)}
    d = len(monos)
    mul = []
    for a in monos:
        row = []
        for b in monos:
            v = [F.zero] * d
            c = tuple(x + y for x, y in zip(a, b))
            if c in index:
                v[index[c]] = F.one
            row.append(v)
        mul.append(row)
    unit = [F.one] + [F.zero] * (d - 1)
    vn = var_names or (["x", "y", "z", "w"][:nvars] if nvars <= 4 else [f"x{i}" for i in range(nvars)])

    def name(m):
        parts = [v if e == 1 else f"{v}^{e}" for v, e in zip(vn, m) if e]
        return "*".join(parts) if parts else "1"

    rad = [[F.one if k == i else F.zero for k in range(d)] for i in range(1, d)]
    return FiniteAlgebra(F, d, mul, unit, list(unit), rad, "monomial-quotient", [name(m) for m in monos])


# ---------------------------------------------------------------------------
# algebra maps

class AlgebraMap:
    """Linear map whose matrix columns are the images of the source basis."""

    def __init__(self, source: FiniteAlgebra, target: FiniteAlgebra, matrix):
        if len(matrix) != target.dim or any(len(r) != source.dim for r in matrix):
            raise AlgebraError("map matrix has the wrong shape")
        self.source = source
        self.target = target
        self.matrix = matrix

    def __call__(self, v):
        return la.matvec(self.target.field, self.matrix, v)

    def compose(self, other: "AlgebraMap") -> "AlgebraMap":
        """self after other."""
        F = self.target.field
        return AlgebraMap(other.source, self.target, la.matmul(F, self.matrix, other.matrix, other.source.dim))


def identity_map(E: FiniteAlgebra) -> AlgebraMap:
    return AlgebraMap(E, E, la.identity(E.field, E.dim))


def truncation_map(F: Field, m: int, n: int) -> AlgebraMap:
    """K[x]/x^(m+1) -> K[x]/x^(n+1), x -> x, for n <= m."""
    Em, En = truncated(F, m), truncated(F, n)
    M = la.zeros(F, n + 1, m + 1)
    for i in range(n + 1):
        M[i][i] = F.one
    return AlgebraMap(Em, En, M)


def tensor_map(f: AlgebraMap, g: AlgebraMap, source=None, target=None) -> AlgebraMap:
    F = f.target.field
    src = source or tensor(f.source, g.source)
    tgt = target or tensor(f.target, g.target)
    return AlgebraMap(src, tgt, la.kron(F, f.matrix, g.matrix))


def check_algebra_axioms(E: FiniteAlgebra) -> Report:
    F = E.field
    rep = Report(f"algebra axioms for {E!r}")
    d = E.dim
    rep.check("shape", len(E.mul) == d and all(len(r) == d for r in E.mul) and len(E.unit) == d)
    for i in range(d):
        for j in range(d):
            rep.check("commutativity", E.mul[i][j] == E.mul[j][i], lambda i=i, j=j: {"i": i, "j": j})
    for i in range(d):
        bi = E.basis_vector(i)
        for j in range(d):
            bij = E.mul[i][j]
            for k in range(d):
                lhs = E.multiply(bij, E.basis_vector(k))
                rhs = E.multiply(bi, E.mul[j][k])
                rep.check("associativity", lhs == rhs,
                          lambda i=i, j=j, k=k, lhs=lhs, rhs=rhs: {
                              "triple": [i, j, k],
                              "(bi bj) bk": [F.fmt(a) for a in lhs],
                              "bi (bj bk)": [F.fmt(a) for a in rhs]})
        rep.check("unit", E.multiply(E.unit, bi) == bi, lambda i=i: {"i": i})
    if E.counit is not None:
        eps = E.counit
        rep.check("counit_unital", _dot(F, eps, E.unit) == F.one)
        for i in range(d):
            for j in range(d):
                lhs = _dot(F, eps, E.mul[i][j])
                rep.check("counit_multiplicative", lhs == eps[i] * eps[j], lambda i=i, j=j: {"i": i, "j": j})
    if E.radical_basis is not None:
        rep.merge(check_radical(E, E.radical_basis))
    return rep


def check_map_axioms(f: AlgebraMap) -> Report:
    E, G = f.source, f.target
    F = G.field
    rep = Report("algebra map axioms")
    rep.check("unit", f(E.unit) == G.unit, lambda: {"image of unit": [F.fmt(a) for a in f(E.unit)]})
    for i in range(E.dim):
        fi = f(E.basis_vector(i))
        for j in range(E.dim):
            lhs = f(E.mul[i][j])
            rhs = G.multiply(fi, f(E.basis_vector(j)))
            rep.check("multiplicative", lhs == rhs, lambda i=i, j=j: {"i": i, "j": j})
    if E.counit is not None and G.counit is not None:
        pulled = [_dot(F, G.counit, f(E.basis_vector(i))) for i in range(E.dim)]
        rep.check("counit", pulled == E.counit, lambda: {"pulled back counit": [F.fmt(a) for a in pulled]})
    return rep


def _dot(F, u, v):
    acc = F.zero
    for a, b in zip(u, v):
        if a and b:
            acc = acc + a * b
    return acc


# ---------------------------------------------------------------------------
# coalgebras

class Coalgebra:
    """Delta(c_k) = sum comul[k][i][j] c_i (x) c_j, with counit and an optional point."""

    def __init__(self, field, dim, comul, counit, point=None, mul=None, unit=None, names=None):
        self.field = field
        self.dim = dim
        self.comul = comul
        self.counit = list(counit)
        self.point = list(point) if point is not None else None
        self.mul = mul
        self.unit = unit
        self.names = names or [f"c{i}" for i in range(dim)]

    def coproduct(self, v):
        F = self.field
        d = self.dim
        out = [F.zero] * (d * d)
        for k, a in enumerate(v):
            if not a:
                continue
            for i in range(d):
                for j in range(d):
                    c = self.comul[k][i][j]
                    if c:
                        out[i * d + j] = out[i * d + j] + a * c
        return out

    def comul_matrix(self):
        F = self.field
        d = self.dim
        M = la.zeros(F, d * d, d)
        for k in range(d):
            for i in range(d):
                for j in range(d):
                    M[i * d + j][k] = self.comul[k][i][j]
        return M

    def check(self) -> Report:
        F = self.field
        d = self.dim
        rep = Report("coalgebra axioms")
        D = self.comul_matrix()
        I = la.identity(F, d)
        lhs = la.matmul(F, la.kron(F, D, I), D)
        rhs = la.matmul(F, la.kron(F, I, D), D)
        for k in range(d):
            rep.check("coassociativity", [r[k] for r in lhs] == [r[k] for r in rhs], lambda k=k: {"basis": k})
        epsI = la.kron(F, [self.counit], I)
        Ieps = la.kron(F, I, [self.counit])
        rep.check("counit_left", la.matmul(F, epsI, D) == I)
        rep.check("counit_right", la.matmul(F, Ieps, D) == I)
        return rep


def dual_coalgebra(E: FiniteAlgebra) -> Coalgebra:
    d = E.dim
    comul = [[[E.mul[i][j][k] for j in range(d)] for i in range(d)] for k in range(d)]
    names = [f"d[{n}]" for n in E.names]
    return Coalgebra(E.field, d, comul, E.unit, E.counit, names=names)


def predual_algebra(C: Coalgebra, tag="dual") -> FiniteAlgebra:
    """The algebra whose dual coalgebra is C (transpose back)."""
    d = C.dim
    mul = [[[C.comul[k][i][j] for k in range(d)] for j in range(d)] for i in range(d)]
    return FiniteAlgebra(C.field, d, mul, C.counit, C.point, None, tag)


# ---------------------------------------------------------------------------
# radical and quasi-separability

def quotient_algebra(E: FiniteAlgebra, J) -> tuple:
    """E/J for an ideal J; returns (algebra, Quotient)."""
    F = E.field
    Q = la.Quotient(F, E.dim, J)
    q = Q.dim
    mul = [[Q.project(E.multiply(la.matvec(F, Q.sec, _e(F, q, a)), la.matvec(F, Q.sec, _e(F, q, b))))
            for b in range(q)] for a in range(q)]
    unit = Q.project(E.unit)
    names = [E.names[c] for c in Q.keep]
    return FiniteAlgebra(F, q, mul, unit, None, None, "quotient", names), Q


def _e(F, n, i):
    v = [F.zero] * n
    v[i] = F.one
    return v


def _frobenius_exponent(p, d):
    q = p
    while q < d:
        q *= p
    return q


def _pbasis_parts(c: RatFunc, q: int):
    """Write c = sum_{r<q} g_r^q t^r over F_p(t); return [g_0..g_{q-1}]."""
    p = c.p
    h = c.den
    hq1 = (1,)
    for _ in range(q - 1):
        hq1 = pmul(hq1, h, p)
    N = pmul(c.num, hq1, p)
    parts = []
    for r in range(q):
        coeffs = tuple(N[m] for m in range(r, len(N), q))
        parts.append(RatFunc(coeffs, h, p))
    return parts


def frobenius_kernel(E: FiniteAlgebra):
    """Basis of {a : a^q = 0} in characteristic p, q = p^m >= dim E."""
    F = E.field
    p = F.p
    d = E.dim
    q = _frobenius_exponent(p, max(d, 1))
    images = [E.power(E.basis_vector(i), q) for i in range(d)]
    if not F.function:
        # a^q = sum a_i b_i^q since a_i^q = a_i in F_p
        return la.nullspace(F, la.from_columns(F, images, d), d)[0]
    rows = []
    for k in range(d):
        parts = [_pbasis_parts(images[i][k], q) for i in range(d)]
        for r in range(q):
            rows.append([parts[i][r] for i in range(d)])
    return la.nullspace(F, rows, d)[0]


def _compute_radical(E: FiniteAlgebra):
    F = E.field
    if E.dim == 0:
        return []
    if F.p == 0:
        return la.nullspace(F, E.trace_form(), E.dim)[0]
    return frobenius_kernel(E)


def is_reduced(E: FiniteAlgebra) -> bool:
    return not _compute_radical(E)


def check_radical(E: FiniteAlgebra, J) -> Report:
    F = E.field
    rep = Report("radical candidate")
    S = la.span(F, J, E.dim)
    rep.check("independent", S.dim == len(J), lambda: {"given": len(J), "rank": S.dim})
    for v in S.basis:
        for i in range(E.dim):
            w = E.multiply(E.basis_vector(i), v)
            rep.check("ideal", S.contains(w), lambda i=i, v=v: {"basis": i, "element": E.fmt_element(v)})
        rep.check("nilpotent", not any(E.power(v, max(E.dim, 1))),
                  lambda v=v: {"element": E.fmt_element(v)})
    if rep.ok:
        Q, _ = quotient_algebra(E, S.basis)
        rest = _compute_radical(Q)
        rep.check("reduced_quotient", not rest, lambda: {"nilpotent in quotient": [Q.fmt_element(v) for v in rest]})
    return rep


def radical(E: FiniteAlgebra, candidate=None):
    """Basis of the nilradical.

    A supplied candidate (or one recorded at construction) is verified and
    returned in canonical form; otherwise the nilradical is computed.
    """
    F = E.field
    cand = candidate if candidate is not None else E.radical_basis
    if cand is not None:
        cand = [[F(a) for a in v] for v in cand]
        rep = check_radical(E, cand)
        if not rep.ok:
            if candidate is not None:
                raise AlgebraError(f"supplied radical rejected: {rep.failures()} {rep.to_dict()['checks']}")
            raise AlgebraError(f"recorded radical is wrong: {rep.failures()}")
        return la.span(F, cand, E.dim).basis
    return la.span(F, _compute_radical(E), E.dim).basis


def is_quasi_separable(E: FiniteAlgebra, candidate=None) -> bool:
    """True iff the trace form of E/J is nondegenerate."""
    F = E.field
    J = radical(E, candidate)
    Q, _ = quotient_algebra(E, J)
    if Q.dim == 0:
        return True
    return la.det(F, Q.trace_form()) != F.zero
