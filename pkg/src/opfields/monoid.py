"""Formal monoids as truncation towers, free monoids, Cartier duals, actions."""
from __future__ import annotations

import itertools
from math import comb, factorial

from . import linalg as la
from .algebra import (AlgebraMap, FiniteAlgebra, dual_coalgebra, tensor, truncated)
from .report import Report
from .scalars import DepthError, Field, OperatorField


class TowerError(ValueError):
    pass


class MonoidTower:
    """Levels E_0..E_N with step transitions E_n -> E_(n-1) and products m#_(k,l)."""

    def __init__(self, field: Field, levels, steps, products, kind="custom", commutative=None, meta=None):
        self.field = field
        self.levels = levels
        self.steps = steps            # steps[n] : E_n -> E_(n-1), n >= 1 (steps[0] unused)
        self.products = products      # (k, l) -> AlgebraMap E_(k+l) -> E_k (x) E_l
        self.kind = kind
        self.meta = meta or {}
        self._tensors = {}
        if commutative is None:
            commutative = self._cocommutative()
        self.commutative = commutative

    @property
    def depth(self):
        return len(self.levels) - 1

    def __repr__(self):
        return f"MonoidTower({self.kind}, depth={self.depth}, over {self.field.name})"

    def level(self, n) -> FiniteAlgebra:
        if n > self.depth or n < 0:
            raise DepthError(f"level {n} outside the tower (depth {self.depth})")
        return self.levels[n]

    def tensor_level(self, k, l) -> FiniteAlgebra:
        key = (k, l)
        if key not in self._tensors:
            self._tensors[key] = tensor(self.level(k), self.level(l))
        return self._tensors[key]

    def product(self, k, l) -> AlgebraMap:
        if (k, l) not in self.products:
            raise DepthError(f"no product component m#_({k},{l}) (depth {self.depth})")
        return self.products[(k, l)]

    def counit(self, n):
        return self.level(n).counit

    def transition(self, m, n) -> AlgebraMap:
        """E_m -> E_n for n <= m."""
        F = self.field
        if n > m:
            raise TowerError("transitions only go down")
        M = la.identity(F, self.level(m).dim)
        for r in range(m, n, -1):
            M = la.matmul(F, self.steps[r].matrix, M, self.level(m).dim)
        return AlgebraMap(self.level(m), self.level(n), M)

    def _cocommutative(self):
        F = self.field
        for (k, l), f in self.products.items():
            if (l, k) not in self.products:
                continue
            g = self.products[(l, k)]
            dk, dl = self.level(k).dim, self.level(l).dim
            for c in range(self.level(k + l).dim):
                col = [r[c] for r in f.matrix]
                sw = [r[c] for r in g.matrix]
                for a in range(dk):
                    for b in range(dl):
                        if col[a * dl + b] != sw[b * dk + a]:
                            return False
        return True

    def check(self) -> Report:
        from .algebra import check_algebra_axioms, check_map_axioms
        F = self.field
        N = self.depth
        rep = Report(f"tower axioms {self!r}")
        for n, E in enumerate(self.levels):
            r = check_algebra_axioms(E)
            rep.check("level_algebra", r.ok, lambda n=n, r=r: {"level": n, "failures": r.failures()})
            rep.check("level_counit", E.counit is not None, lambda n=n: {"level": n})
        for n in range(1, N + 1):
            s = self.steps[n]
            r = check_map_axioms(s)
            rep.check("transition_algebra_map", r.ok, lambda n=n, r=r: {"level": n, "failures": r.failures()})
            rep.check("transition_surjective", la.rank(F, s.matrix, s.source.dim) == s.target.dim,
                      lambda n=n: {"level": n})
            pulled = la.matmul(F, [self.counit(n - 1)], s.matrix, s.source.dim)[0]
            rep.check("counit_compatible", pulled == self.counit(n), lambda n=n: {"level": n})
        for (k, l), f in sorted(self.products.items()):
            r = check_map_axioms(f)
            rep.check("product_algebra_map", r.ok, lambda k=k, l=l, r=r: {"k": k, "l": l, "failures": r.failures()})
            Ek, El = self.level(k), self.level(l)
            # counit laws
            left = la.matmul(F, la.kron(F, [Ek.counit], la.identity(F, El.dim)), f.matrix, f.source.dim)
            rep.check("counit_law_left", left == self.transition(k + l, l).matrix, lambda k=k, l=l: {"k": k, "l": l})
            right = la.matmul(F, la.kron(F, la.identity(F, Ek.dim), [El.counit]), f.matrix, f.source.dim)
            rep.check("counit_law_right", right == self.transition(k + l, k).matrix, lambda k=k, l=l: {"k": k, "l": l})
            # compatibility with transitions
            if k >= 1:
                lhs = la.matmul(F, la.kron(F, self.steps[k].matrix, la.identity(F, El.dim)), f.matrix, f.source.dim)
                rhs = la.matmul(F, self.product(k - 1, l).matrix, self.steps[k + l].matrix, f.source.dim)
                rep.check("product_transition", lhs == rhs, lambda k=k, l=l: {"k": k, "l": l})
        for a in range(N + 1):
            for b in range(N + 1 - a):
                for c in range(N + 1 - a - b):
                    lhs = la.matmul(F, la.kron(F, self.product(a, b).matrix, la.identity(F, self.level(c).dim)),
                                    self.product(a + b, c).matrix, self.level(a + b + c).dim)
                    rhs = la.matmul(F, la.kron(F, la.identity(F, self.level(a).dim), self.product(b, c).matrix),
                                    self.product(a, b + c).matrix, self.level(a + b + c).dim)
                    rep.check("coassociativity", lhs == rhs, lambda a=a, b=b, c=c: {"levels": [a, b, c]})
        if self.commutative:
            rep.check("cocommutative", self._cocommutative())
        return rep

    def to_dict(self):
        F = self.field
        fm = lambda M: la.fmt_matrix(F, M)
        return {
            "field": F.name,
            "kind": self.kind,
            "depth": self.depth,
            "levels": [E.to_dict() for E in self.levels],
            "transitions": [fm(self.steps[n].matrix) for n in range(1, self.depth + 1)],
            "products": {f"{k},{l}": fm(f.matrix) for (k, l), f in sorted(self.products.items())},
            "counits": [[F.fmt(a) for a in E.counit] for E in self.levels],
            "commutative": self.commutative,
        }


def tower_from_dict(d) -> MonoidTower:
    from .algebra import algebra_from_dict
    from .scalars import parse_field
    F = parse_field(d["field"])
    levels = [algebra_from_dict(e, F) for e in d["levels"]]
    for E, c in zip(levels, d.get("counits", [])):
        E.counit = [F(a) for a in c]
    steps = [None] + [AlgebraMap(levels[n], levels[n - 1], [[F(a) for a in r] for r in M])
                      for n, M in enumerate(d["transitions"], start=1)]
    products = {}
    for key, M in d["products"].items():
        k, l = (int(x) for x in key.split(","))
        products[(k, l)] = AlgebraMap(levels[k + l], tensor(levels[k], levels[l]), [[F(a) for a in r] for r in M])
    return MonoidTower(F, levels, steps, products, d.get("kind", "custom"), d.get("commutative"))


# ---------------------------------------------------------------------------
# power series (formal group law) towers

def _law_coeffs(law):
    if law == "additive":
        return {(1, 0): 1, (0, 1): 1}
    if law == "multiplicative":
        return {(1, 0): 1, (0, 1): 1, (1, 1): 1}
    if isinstance(law, dict):
        return dict(law)
    raise TowerError(f"unknown law {law!r}")


def power_series_monoid(F: Field, N: int, law="additive") -> MonoidTower:
    coeffs = _law_coeffs(law)
    coeffs = {tuple(k): F(v) for k, v in coeffs.items() if F(v)}
    for (a, b), c in coeffs.items():
        if (a == 0 or b == 0) and (a, b) not in ((1, 0), (0, 1)):
            raise TowerError("law fails the unit axioms F(X,0)=X, F(0,Y)=Y")
    if coeffs.get((1, 0)) != F.one or coeffs.get((0, 1)) != F.one:
        raise TowerError("law fails the unit axioms F(X,0)=X, F(0,Y)=Y")
    levels = [truncated(F, n) for n in range(N + 1)]
    steps = [None]
    for n in range(1, N + 1):
        M = la.zeros(F, n, n + 1)
        for i in range(n):
            M[i][i] = F.one
        steps.append(AlgebraMap(levels[n], levels[n - 1], M))
    products = {}
    for k in range(N + 1):
        for l in range(N + 1 - k):
            T = tensor(levels[k], levels[l])
            x = [F.zero] * T.dim
            for (a, b), c in coeffs.items():
                if a <= k and b <= l:
                    x[a * (l + 1) + b] = x[a * (l + 1) + b] + c
            cols = [T.one()]
            for _ in range(k + l):
                cols.append(T.multiply(cols[-1], x))
            products[(k, l)] = AlgebraMap(levels[k + l], T, la.from_columns(F, cols, T.dim))
    kind = law if isinstance(law, str) else "custom-law"
    return MonoidTower(F, levels, steps, products, f"power-series:{kind}", meta={"law": coeffs})


# ---------------------------------------------------------------------------
# discrete monoids

def _function_algebra(F, points, identity_point, names):
    d = len(points)
    z = F.zero
    mul = [[[F.one if i == j == k else z for k in range(d)] for j in range(d)] for i in range(d)]
    unit = [F.one] * d
    counit = [F.one if p == identity_point else z for p in points]
    return FiniteAlgebra(F, d, mul, unit, counit, [], "functions", names)


def discrete_monoid_truncation(F: Field, name, N: int) -> MonoidTower:
    """name is "N", "Z" or ("Z/m", m) / "Z/m"."""
    if isinstance(name, str) and name.startswith("Z/"):
        name = ("Z/m", int(name[2:]))
    if name == "N":
        windows = [list(range(n + 1)) for n in range(N + 1)]
        add = lambda a, b: a + b
        kind = "discrete:N"
    elif name == "Z":
        windows = [list(range(-n, n + 1)) for n in range(N + 1)]
        add = lambda a, b: a + b
        kind = "discrete:Z"
    elif isinstance(name, tuple) and name[0] == "Z/m":
        m = name[1]
        if m < 1:
            raise TowerError("modulus must be positive")
        windows = [list(range(m)) for _ in range(N + 1)]
        add = lambda a, b: (a + b) % m
        kind = f"discrete:Z/{m}"
    else:
        raise TowerError(f"unknown discrete monoid {name!r}")
    levels = [_function_algebra(F, w, 0, [f"d[{s}]" for s in w]) for w in windows]
    steps = [None]
    for n in range(1, N + 1):
        src, tgt = windows[n], windows[n - 1]
        M = la.zeros(F, len(tgt), len(src))
        for i, s in enumerate(tgt):
            M[i][src.index(s)] = F.one
        steps.append(AlgebraMap(levels[n], levels[n - 1], M))
    products = {}
    for k in range(N + 1):
        for l in range(N + 1 - k):
            wk, wl, w = windows[k], windows[l], windows[k + l]
            T = tensor(levels[k], levels[l])
            M = la.zeros(F, T.dim, len(w))
            for a, s in enumerate(wk):
                for b, u in enumerate(wl):
                    tgt = add(s, u)
                    if tgt not in w:
                        raise TowerError(f"window {k + l} cannot hold {s}+{u}")
                    M[a * len(wl) + b][w.index(tgt)] = F.one
            products[(k, l)] = AlgebraMap(levels[k + l], T, M)
    return MonoidTower(F, levels, steps, products, kind, meta={"windows": windows})


# ---------------------------------------------------------------------------
# free monoids on a pointed algebra

def _digits(idx, d, n):
    out = []
    for _ in range(n):
        out.append(idx % d)
        idx //= d
    return out[::-1]


def tensor_power_multiply(E: FiniteAlgebra, n: int, u, v):
    """Slotwise product in E^(x)n (kron index order, slot 1 most significant)."""
    F = E.field
    d = E.dim
    out = [F.zero] * (d ** n)
    nz_u = [(i, c) for i, c in enumerate(u) if c]
    nz_v = [(j, c) for j, c in enumerate(v) if c]
    for i, a in nz_u:
        di = _digits(i, d, n)
        for j, b in nz_v:
            dj = _digits(j, d, n)
            vec = [a * b]
            for s in range(n):
                vec = la.vkron(vec, E.mul[di[s]][dj[s]])
            for k, c in enumerate(vec):
                if c:
                    out[k] = out[k] + c
    return out


def _slot_counit(E: FiniteAlgebra, n: int, r: int):
    """E^(x)n -> E^(x)(n-1) applying the point at slot r (0-based)."""
    F = E.field
    M = [[F.one]]
    for s in range(n):
        M = la.kron(F, M, [E.counit] if s == r else la.identity(F, E.dim))
    return M


def _symmetrize(E, n, v):
    F = E.field
    d = E.dim
    out = [F.zero] * (d ** n)
    for i, c in enumerate(v):
        if not c:
            continue
        digs = _digits(i, d, n)
        orbit = set(itertools.permutations(digs))
        share = c / F(len(orbit))
        for perm in orbit:
            k = 0
            for x in perm:
                k = k * d + x
            out[k] = out[k] + share
    return out


def _swap_matrix(F, d, n, r):
    size = d ** n
    M = la.zeros(F, size, size)
    for i in range(size):
        digs = _digits(i, d, n)
        digs[r], digs[r + 1] = digs[r + 1], digs[r]
        k = 0
        for x in digs:
            k = k * d + x
        M[k][i] = F.one
    return M


def free_level_space(E: FiniteAlgebra, n: int, abelian=False):
    """E_n inside E^(x)n as a canonical subspace."""
    F = E.field
    size = E.dim ** n
    if n <= 1:
        return la.span(F, [[F.one if i == j else F.zero for i in range(size)] for j in range(size)], size)
    cons = [la.msub(_slot_counit(E, n, r), _slot_counit(E, n, r + 1)) for r in range(n - 1)]
    if abelian and F.p:
        cons += [la.msub(_swap_matrix(F, E.dim, n, r), la.identity(F, size)) for r in range(n - 1)]
    S = la.kernel(F, la.vstack(*cons), size)
    if abelian and not F.p:
        S = la.span(F, [_symmetrize(E, n, v) for v in S.basis], size)
    else:
        S = la.span(F, S.basis, size)
    return S


def free_monoid(E: FiniteAlgebra, N: int, abelian=False) -> MonoidTower:
    F = E.field
    if E.counit is None:
        raise TowerError("free_monoid needs a pointed algebra (counit)")
    if F.function:
        raise TowerError("free_monoid is built over a prime field")
    spaces = [free_level_space(E, n, abelian) for n in range(N + 1)]
    levels = []
    for n, S in enumerate(spaces):
        d = S.dim
        basis = S.basis
        mul = [[S.coords(tensor_power_multiply(E, n, basis[i], basis[j])) for j in range(d)] for i in range(d)]
        one = [F.one]
        for _ in range(n):
            one = la.vkron(one, E.unit)
        unit = S.coords(one)
        pt = [F.one]
        for _ in range(n):
            pt = la.vkron(pt, E.counit)
        counit = [sum((a * b for a, b in zip(pt, v)), F.zero) for v in basis]
        names = [f"e{i}" for i in range(d)]
        levels.append(FiniteAlgebra(F, d, mul, unit, counit, None, "free-monoid-level", names))
    steps = [None]
    for n in range(1, N + 1):
        P = _slot_counit(E, n, 0)
        Sn, Sm = spaces[n], spaces[n - 1]
        cols = [Sm.coords(la.matvec(F, P, v)) for v in Sn.basis]
        steps.append(AlgebraMap(levels[n], levels[n - 1], la.from_columns(F, cols, Sm.dim)))
    products = {}
    for k in range(N + 1):
        for l in range(N + 1 - k):
            T = tensor(levels[k], levels[l])
            Sk, Sl = spaces[k], spaces[l]
            cols = []
            for v in spaces[k + l].basis:
                # v lies in E^(x)k (x) E^(x)l = kron(Sk, Sl); read coordinates by pivots
                c = [v[pk * (E.dim ** l) + pl] for pk in Sk.pivots for pl in Sl.pivots]
                back = la.matvec(F, la.kron(F, Sk.inc, Sl.inc), c)
                if back != list(v):
                    raise TowerError("free monoid level does not sit inside the product")
                cols.append(c)
            products[(k, l)] = AlgebraMap(levels[k + l], T, la.from_columns(F, cols, T.dim))
    kind = "free-abelian" if abelian else "free"
    T = MonoidTower(F, levels, steps, products, kind, meta={"base": E, "spaces": spaces})
    return T


def free_generators(T: MonoidTower, n: int):
    """e_0..e_n in E_n for the free monoid on K[e]: e_j = sum of tensors with j slots e."""
    E = T.meta["base"]
    F = T.field
    S = T.meta["spaces"][n]
    out = []
    for j in range(n + 1):
        v = [F.zero] * (E.dim ** n)
        for idx in range(E.dim ** n):
            digs = _digits(idx, E.dim, n)
            if all(x in (0, 1) for x in digs) and sum(digs) == j:
                v[idx] = F.one
        out.append(S.coords(v))
    return out


def lift_map(H: MonoidTower, t, E: FiniteAlgebra, target: MonoidTower):
    """Levelwise t_n = t^(x)n o (iterated m#_(1, .)) : H_n -> E_n.

    ``t`` is the matrix of a linear map H_1 -> E.  Returns a list of
    AlgebraMaps H_n -> target level n.
    """
    F = H.field
    maps = []
    spaces = target.meta["spaces"]
    for n in range(min(H.depth, target.depth) + 1):
        Hn = H.level(n)
        # iterated coproduct H_n -> H_1^(x)n
        C = la.identity(F, Hn.dim)
        for r in range(n - 1):
            rest = n - r - 1
            step = la.kron(F, la.identity(F, H.level(1).dim ** r), H.product(1, rest).matrix)
            C = la.matmul(F, step, C, Hn.dim)
        if n == 0:
            tn = la.identity(F, 1)
        else:
            tn = [[F.one]]
            for _ in range(n):
                tn = la.kron(F, tn, t)
            tn = la.matmul(F, tn, C, Hn.dim)
        S = spaces[n]
        cols = []
        for c in range(Hn.dim):
            v = [r[c] for r in tn]
            coords = S.coords(v)
            if la.matvec(F, S.inc, coords) != v:
                raise TowerError("lifted map leaves the free monoid level")
            cols.append(coords)
        maps.append(AlgebraMap(Hn, target.level(n), la.from_columns(F, cols, S.dim)))
    return maps


def check_lift(H: MonoidTower, T: MonoidTower, maps) -> Report:
    from .algebra import check_map_axioms
    F = H.field
    rep = Report("universal lift")
    for n, f in enumerate(maps):
        r = check_map_axioms(f)
        rep.check("algebra_map", r.ok, lambda n=n, r=r: {"level": n, "failures": r.failures()})
    for n in range(1, len(maps)):
        lhs = la.matmul(F, T.steps[n].matrix, maps[n].matrix, H.level(n).dim)
        rhs = la.matmul(F, maps[n - 1].matrix, H.steps[n].matrix, H.level(n).dim)
        rep.check("transitions", lhs == rhs, lambda n=n: {"level": n})
    for k in range(len(maps)):
        for l in range(len(maps) - k):
            lhs = la.matmul(F, T.product(k, l).matrix, maps[k + l].matrix, H.level(k + l).dim)
            rhs = la.matmul(F, la.kron(F, maps[k].matrix, maps[l].matrix), H.product(k, l).matrix, H.level(k + l).dim)
            rep.check("coalgebra_map", lhs == rhs, lambda k=k, l=l: {"k": k, "l": l})
    return rep


def product_tower(T1: MonoidTower, T2: MonoidTower) -> MonoidTower:
    """Levels E1_n (x) E2_n; products are m1 (x) m2 followed by the middle swap."""
    F = T1.field
    N = min(T1.depth, T2.depth)
    levels = []
    for n in range(N + 1):
        L = tensor(T1.level(n), T2.level(n))
        L.tag = "product-level"
        levels.append(L)
    steps = [None] + [AlgebraMap(levels[n], levels[n - 1], la.kron(F, T1.steps[n].matrix, T2.steps[n].matrix))
                      for n in range(1, N + 1)]
    products = {}
    for k in range(N + 1):
        for l in range(N + 1 - k):
            a1, b1 = T1.level(k).dim, T1.level(l).dim
            a2, b2 = T2.level(k).dim, T2.level(l).dim
            M = la.kron(F, T1.product(k, l).matrix, T2.product(k, l).matrix)
            # reorder (x1, y1, x2, y2) -> (x1, x2, y1, y2)
            size = a1 * b1 * a2 * b2
            P = la.zeros(F, size, size)
            for x1 in range(a1):
                for y1 in range(b1):
                    for x2 in range(a2):
                        for y2 in range(b2):
                            src = ((x1 * b1 + y1) * a2 + x2) * b2 + y2
                            dst = ((x1 * a2 + x2) * b1 + y1) * b2 + y2
                            P[dst][src] = F.one
            T = tensor(levels[k], levels[l])
            products[(k, l)] = AlgebraMap(levels[k + l], T, la.matmul(F, P, M, levels[k + l].dim))
    return MonoidTower(F, levels, steps, products, f"product({T1.kind},{T2.kind})",
                       meta={"factors": (T1, T2)})


# ---------------------------------------------------------------------------
# Cartier duality

class CartierDual:
    """Graded dual of a commutative tower.

    Elements of Co(E_n) are coordinate vectors in the basis dual to E_n.
    ``multiply(k, l, phi, psi)`` lands in Co(E_(k+l)) via the transpose of m#.
    """

    def __init__(self, T: MonoidTower, N=None):
        if not T.commutative:
            raise TowerError("Cartier dual needs a commutative tower")
        self.tower = T
        self.field = T.field
        self.depth = T.depth if N is None else min(N, T.depth)
        F = self.field
        self.mul_mats = {(k, l): la.transpose(T.product(k, l).matrix, T.level(k + l).dim)
                         for k in range(self.depth + 1) for l in range(self.depth + 1 - k)}
        self.coalgebras = [dual_coalgebra(T.level(n)) for n in range(self.depth + 1)]
        self.inclusions = [None] + [la.transpose(T.steps[n].matrix, T.level(n - 1).dim)
                                    for n in range(1, self.depth + 1)]
        self.units = [list(T.counit(n)) for n in range(self.depth + 1)]
        self.F = F

    def dim(self, n):
        return self.tower.level(n).dim

    def basis(self, n, i):
        v = [self.F.zero] * self.dim(n)
        v[i] = self.F.one
        return v

    def multiply(self, k, l, phi, psi):
        return la.matvec(self.F, self.mul_mats[(k, l)], la.vkron(phi, psi))

    def include(self, n, m, phi):
        """Co(E_n) -> Co(E_m), n <= m."""
        for r in range(n + 1, m + 1):
            phi = la.matvec(self.F, self.inclusions[r], phi)
        return phi

    def coproduct(self, n, phi):
        return self.coalgebras[n].coproduct(phi)

    def counit(self, n, phi):
        """Evaluation at 1 in E_n."""
        return sum((a * b for a, b in zip(self.tower.level(n).unit, phi)), self.F.zero)

    def structure_constants(self):
        """{(k, l): {(i, j): vector in Co(E_(k+l))}} on basis elements."""
        out = {}
        for (k, l) in self.mul_mats:
            out[(k, l)] = {(i, j): self.multiply(k, l, self.basis(k, i), self.basis(l, j))
                           for i in range(self.dim(k)) for j in range(self.dim(l))}
        return out

    def recovered_level_algebra(self, n) -> FiniteAlgebra:
        from .algebra import predual_algebra
        return predual_algebra(self.coalgebras[n])

    def check(self) -> Report:
        F = self.F
        N = self.depth
        rep = Report(f"Cartier dual of {self.tower!r}")
        for n in range(N + 1):
            rep.merge(self.coalgebras[n].check(), f"level{n}.")
        for k in range(N + 1):
            for l in range(N + 1 - k):
                for i in range(self.dim(k)):
                    phi = self.basis(k, i)
                    rep.check("unit_left", self.multiply(0, k, self.units[0], phi) == phi if k <= N else True,
                              lambda k=k, i=i: {"level": k, "basis": i})
                    for j in range(self.dim(l)):
                        psi = self.basis(l, j)
                        prod_ = self.multiply(k, l, phi, psi)
                        rep.check("commutative", prod_ == self.multiply(l, k, psi, phi),
                                  lambda k=k, l=l, i=i, j=j: {"levels": [k, l], "basis": [i, j]})
                        # coproduct multiplicative: Delta(phi psi) = Delta(phi) Delta(psi)
                        lhs = self.coproduct(k + l, prod_)
                        dphi, dpsi = self.coproduct(k, phi), self.coproduct(l, psi)
                        rhs = self._tensor_multiply(k, l, dphi, dpsi)
                        rep.check("bialgebra", lhs == rhs, lambda k=k, l=l, i=i, j=j: {"levels": [k, l], "basis": [i, j]})
                        rep.check("counit_multiplicative",
                                  self.counit(k + l, prod_) == self.counit(k, phi) * self.counit(l, psi))
                        for r in range(N + 1 - k - l):
                            for s in range(self.dim(r)):
                                chi = self.basis(r, s)
                                a = self.multiply(k + l, r, prod_, chi)
                                b = self.multiply(k, l + r, phi, self.multiply(l, r, psi, chi))
                                rep.check("associative", a == b, lambda k=k, l=l, r=r: {"levels": [k, l, r]})
                # inclusions are compatible with the product
                if k >= 1:
                    for i in range(self.dim(k - 1)):
                        for j in range(self.dim(l)):
                            a = self.multiply(k, l, self.include(k - 1, k, self.basis(k - 1, i)), self.basis(l, j))
                            b = self.include(k - 1 + l, k + l, self.multiply(k - 1, l, self.basis(k - 1, i), self.basis(l, j)))
                            rep.check("inclusion_compatible", a == b, lambda k=k, l=l: {"levels": [k, l]})
        for n in range(N + 1):
            rep.check("unit_is_counit_dual", self.include(0, n, self.units[0]) == self.units[n], lambda n=n: {"level": n})
            E = self.tower.level(n)
            rep.check("double_dual", self.recovered_level_algebra(n).mul == E.mul, lambda n=n: {"level": n})
        return rep

    def _tensor_multiply(self, k, l, u, v):
        """Product in Co(E_k)^(x)2 x Co(E_l)^(x)2 -> Co(E_(k+l))^(x)2, slotwise."""
        F = self.F
        dk, dl, dm = self.dim(k), self.dim(l), self.dim(k + l)
        out = [F.zero] * (dm * dm)
        M = self.mul_mats[(k, l)]
        for a, ca in enumerate(u):
            if not ca:
                continue
            a1, a2 = divmod(a, dk)
            for b, cb in enumerate(v):
                if not cb:
                    continue
                b1, b2 = divmod(b, dl)
                x = [r[a1 * dl + b1] for r in M]
                y = [r[a2 * dl + b2] for r in M]
                c = ca * cb
                for i, xi in enumerate(x):
                    if xi:
                        for j, yj in enumerate(y):
                            if yj:
                                out[i * dm + j] = out[i * dm + j] + c * xi * yj
        return out


def cartier_dual(T: MonoidTower, N=None) -> CartierDual:
    return CartierDual(T, N)


# ---------------------------------------------------------------------------
# actions on operator fields

class MonoidAction:
    """mu(n, a): coordinates of mu#_n(a) in K (x) E_n, in the basis of E_n."""

    def __init__(self, tower: MonoidTower, K: OperatorField, mu, kind="custom", meta=None):
        self.tower = tower
        self.K = K
        self._mu = mu
        self.kind = kind
        self.meta = meta or {}

    def __repr__(self):
        return f"MonoidAction({self.kind}, {self.tower!r}, {self.K!r})"

    def mu(self, n, a):
        if n > self.tower.depth:
            raise DepthError(f"level {n} beyond tower depth {self.tower.depth}")
        Kf = self.K.field
        return [Kf(c) for c in self._mu(n, Kf(a))]


def _hs_mu(K):
    def mu(n, a):
        return K.hs_vector(a, n)
    return mu


def _shift_mu(K, windows):
    def mu(n, a):
        return [K.apply_sigma(a, s) for s in windows[n]]
    return mu


def _trivial_mu(T, K):
    def mu(n, a):
        return [a * u for u in T.level(n).unit]
    return mu


def _free_mu(T, K, derivation):
    gens = {}

    def mu(n, a):
        if n not in gens:
            gens[n] = free_generators(T, n)
        Kf = K.field
        out = [Kf.zero] * T.level(n).dim
        cur = a
        for i in range(n + 1):
            if cur:
                out = [o + cur * g for o, g in zip(out, gens[n][i])]
            cur = derivation(cur)
        return out
    return mu


def make_action(T: MonoidTower, K: OperatorField, kind=None, derivation=None, factors=None) -> MonoidAction:
    if kind is None:
        if T.kind.startswith("power-series"):
            kind = "hs"
        elif T.kind in ("discrete:N", "discrete:Z"):
            kind = "shift"
        elif T.kind.startswith("free"):
            kind = "free"
        elif T.kind.startswith("product"):
            kind = "product"
        else:
            kind = "trivial"
    if kind == "hs":
        if not T.kind.startswith("power-series"):
            raise TowerError("an HS action needs a power-series tower")
        return MonoidAction(T, K, _hs_mu(K), "hs")
    if kind == "shift":
        if T.kind not in ("discrete:N", "discrete:Z"):
            raise TowerError("a shift action needs a discrete N or Z tower")
        return MonoidAction(T, K, _shift_mu(K, T.meta["windows"]), "shift")
    if kind == "trivial":
        return MonoidAction(T, K, _trivial_mu(T, K), "trivial")
    if kind == "free":
        if derivation is None:
            derivation = lambda a: K.hs_derive(1, a)
        return MonoidAction(T, K, _free_mu(T, K, derivation), "free")
    if kind == "product":
        T1, T2 = T.meta["factors"]
        A1, A2 = factors if factors else (make_action(T1, K), make_action(T2, K))

        def mu(n, a):
            inner = A2.mu(n, a)
            d2 = len(inner)
            out = [None] * (T1.level(n).dim * d2)
            for v, c in enumerate(inner):
                outer = A1.mu(n, c)
                for u, w in enumerate(outer):
                    out[u * d2 + v] = w
            return out
        return MonoidAction(T, K, mu, "product", meta={"factors": (A1, A2)})
    raise TowerError(f"unknown action kind {kind!r}")


def _k_multiply(E: FiniteAlgebra, Kf, a, b):
    out = [Kf.zero] * E.dim
    for i, ai in enumerate(a):
        if not ai:
            continue
        for j, bj in enumerate(b):
            if not bj:
                continue
            c = ai * bj
            for k, m in enumerate(E.mul[i][j]):
                if m:
                    out[k] = out[k] + c * m
    return out


def _k_apply(M, Kf, v):
    out = []
    for row in M:
        acc = Kf.zero
        for a, b in zip(row, v):
            if a and b:
                acc = acc + b * a
        out.append(acc)
    return out


def comodule_defect(A: MonoidAction, k, l, a):
    """Pairs (u, v) where coef(u,v) m#(mu_(k+l)(a)) differs from mu_k(coef_v mu_l(a))_u."""
    T = A.tower
    Kf = A.K.field
    lhs = _k_apply(T.product(k, l).matrix, Kf, A.mu(k + l, a))
    inner = A.mu(l, a)
    dl = T.level(l).dim
    bad = []
    outer = [A.mu(k, c) for c in inner]
    for u in range(T.level(k).dim):
        for v in range(dl):
            if Kf(lhs[u * dl + v]) != outer[v][u]:
                bad.append((u, v, lhs[u * dl + v], outer[v][u]))
    return bad


def verify_action(A: MonoidAction, samples, depth=None) -> Report:
    T = A.tower
    Kf = A.K.field
    N = T.depth if depth is None else min(depth, T.depth)
    rep = Report(f"action {A!r}")
    samples = [Kf(s) for s in samples]
    pool = list(samples)
    for a in samples:
        for b in samples:
            pool.append(a * b)
    fmt = Kf.fmt
    for a in pool:
        for n in range(N + 1):
            E = T.level(n)
            mu_n = A.mu(n, a)
            rep.check("unit", Kf(sum((c * e for c, e in zip(mu_n, E.counit)), Kf.zero)) == a,
                      lambda n=n, a=a: {"level": n, "a": fmt(a)})
            if n >= 1:
                down = _k_apply(T.steps[n].matrix, Kf, mu_n)
                rep.check("transition", [Kf(x) for x in down] == A.mu(n - 1, a),
                          lambda n=n, a=a: {"level": n, "a": fmt(a)})
        for k in range(N + 1):
            for l in range(N + 1 - k):
                bad = comodule_defect(A, k, l, a)
                rep.check("comodule_law", not bad, lambda k=k, l=l, a=a, bad=bad: {
                    "levels": [k, l], "a": fmt(a), "component (u,v)": list(bad[0][:2]),
                    "m#(mu(a))": fmt(bad[0][2]), "mu(mu(a))": fmt(bad[0][3])})
    for a in samples:
        for b in samples:
            for n in range(N + 1):
                E = T.level(n)
                lhs = A.mu(n, a * b)
                rhs = [Kf(x) for x in _k_multiply(E, Kf, A.mu(n, a), A.mu(n, b))]
                rep.check("multiplicative", lhs == rhs, lambda n=n, a=a, b=b: {"level": n, "a": fmt(a), "b": fmt(b)})
                # dual picture: phi.(ab) = sum (phi_(1).a)(phi_(2).b) with Delta from level multiplication
                ma, mb = A.mu(n, a), A.mu(n, b)
                for kk in range(E.dim):
                    val = Kf.zero
                    for i in range(E.dim):
                        if not ma[i]:
                            continue
                        for j in range(E.dim):
                            c = E.mul[i][j][kk]
                            if c and mb[j]:
                                val = val + ma[i] * mb[j] * c
                    rep.check("dual_comodule_diagram", Kf(val) == lhs[kk],
                              lambda n=n, kk=kk: {"level": n, "dual basis": kk})
    # module structure of the Cartier dual on K: (phi psi).a = phi.(psi.a), unit acts trivially
    if T.commutative:
        for a in samples:
            for k in range(N + 1):
                for l in range(N + 1 - k):
                    mkl = T.product(k, l).matrix
                    top = A.mu(k + l, a)
                    inner = A.mu(l, a)
                    for i in range(T.level(k).dim):
                        for j in range(T.level(l).dim):
                            # <phi_i psi_j, mu(a)> = <phi_i (x) psi_j, m# mu(a)>
                            lhs = Kf(sum((top[c] * mkl[i * T.level(l).dim + j][c] for c in range(len(top))
                                          if mkl[i * T.level(l).dim + j][c]), Kf.zero))
                            rhs = A.mu(k, inner[j])[i]
                            rep.check("dual_module_associative", lhs == rhs,
                                      lambda k=k, l=l, i=i, j=j, a=a: {"levels": [k, l], "basis": [i, j], "a": fmt(a)})
            rep.check("identity_acts_trivially",
                      Kf(sum((c * e for c, e in zip(A.mu(0, a), T.counit(0))), Kf.zero)) == a)
    return rep


def derivation_lift(T: MonoidTower, K: OperatorField, a, N, mu1=None):
    """Solve the comodule constraints level by level for the unique lift.

    Starting from mu_1(a) (default a + d(a) e), mu_n is the unique solution of
    m#_(1,n-1)(mu_n(a)) = (id (x) mu_(n-1))(mu_1(a)).  Returns the
    list [mu_0(a), ..., mu_N(a)] and whether each level was uniquely solvable.
    """
    from .linalg import nullspace, solve
    Kf = K.field
    if mu1 is None:
        mu1 = lambda b: [Kf(b), Kf(K.hs_derive(1, b))]

    cache = {}

    def lift(n, b):
        key = (n, b)
        if key in cache:
            return cache[key]
        if n == 0:
            out = [b]
        elif n == 1:
            out = mu1(b)
        else:
            M = T.product(1, n - 1).matrix
            first = mu1(b)
            dl = T.level(n - 1).dim
            rhs = [Kf.zero] * (T.level(1).dim * dl)
            for u, c in enumerate(first):
                if c:
                    inner = lift(n - 1, c)
                    for v in range(dl):
                        rhs[u * dl + v] = inner[v]
            Mk = [[Kf(x) for x in row] for row in M]
            x = solve(Kf, Mk, rhs, T.level(n).dim)
            if x is None:
                raise TowerError(f"no coalgebra lift at level {n}")
            if nullspace(Kf, Mk, T.level(n).dim)[0]:
                raise TowerError(f"coalgebra lift at level {n} is not unique")
            out = x
        cache[key] = out
        return out

    return [lift(n, Kf(a)) for n in range(N + 1)]


def divided_power_check(T: MonoidTower, n):
    """For the free monoid on dual numbers: e_k^d = ((dk)!/(k!)^d) e_(dk), divisible by d!."""
    out = []
    for k in range(1, n + 1):
        for d in range(1, n // k + 1):
            coef = factorial(d * k) // factorial(k) ** d
            out.append((k, d, coef, coef % factorial(d) == 0))
    return out


def binomial_table(N):
    return {(i, j): comb(i + j, i) for i in range(N + 1) for j in range(N + 1 - i)}
