"""Modules over finite algebras: both tensor products, Hom, duals, flatness.

Every constructed subspace or quotient keeps its inclusion/retraction or
projection/section matrices into the ambient K-space, so every
"canonical isomorphism" below is an explicit matrix that gets checked.
"""
from __future__ import annotations

import random as _random

from . import linalg as la
from .algebra import AlgebraMap, FiniteAlgebra, radical
from .report import Report


class ModuleError(ValueError):
    pass


class FModule:
    """A K-space of dimension ``dim`` with action matrices ``rho[i]`` = rho(b_i)."""

    def __init__(self, algebra: FiniteAlgebra, dim: int, rho, label=""):
        self.algebra = algebra
        self.dim = dim
        self.rho = rho
        self.label = label
        # ambient data, filled in by constructions
        self.inc = self.ret = None
        self.proj = self.sec = None
        self.ambient_dim = None

    @property
    def field(self):
        return self.algebra.field

    def __repr__(self):
        return f"FModule(dim={self.dim}, over {self.algebra!r}{', ' + self.label if self.label else ''})"

    def act(self, a):
        """Matrix of the algebra element a (coordinate vector)."""
        F = self.field
        M = la.zeros(F, self.dim, self.dim)
        for ai, R in zip(a, self.rho):
            if ai:
                for r in range(self.dim):
                    row, Rr = M[r], R[r]
                    for c in range(self.dim):
                        if Rr[c]:
                            row[c] = row[c] + ai * Rr[c]
        return M

    def check(self) -> Report:
        E = self.algebra
        F = self.field
        n = self.dim
        rep = Report(f"module axioms {self!r}")
        rep.check("shape", len(self.rho) == E.dim and all(len(R) == n and all(len(r) == n for r in R) for R in self.rho))
        rep.check("unit", self.act(E.unit) == la.identity(F, n))
        for i in range(E.dim):
            for j in range(E.dim):
                lhs = la.matmul(F, self.rho[i], self.rho[j], n)
                rhs = self.act(E.mul[i][j])
                rep.check("multiplicative", lhs == rhs, lambda i=i, j=j: {"i": i, "j": j})
                rep.check("commuting", lhs == la.matmul(F, self.rho[j], self.rho[i], n),
                          lambda i=i, j=j: {"i": i, "j": j})
        return rep


def _same_algebra(X, Y):
    if X.algebra is not Y.algebra and (X.algebra.dim != Y.algebra.dim or X.algebra.mul != Y.algebra.mul):
        raise ModuleError("modules over different algebras")


# ---------------------------------------------------------------------------
# basic modules

def free_module(E: FiniteAlgebra, rank: int = 1) -> FModule:
    """E^rank with index copy * dim E + i."""
    F = E.field
    L = E.left_mats()
    rho = [la.block_diag(F, *([L[i]] * rank)) if rank else [] for i in range(E.dim)]
    return FModule(E, E.dim * rank, rho, f"E^{rank}")


def trivial_module(E: FiniteAlgebra) -> FModule:
    """K with E acting through the counit."""
    if E.counit is None:
        raise ModuleError("algebra has no counit")
    return FModule(E, 1, [[[c]] for c in E.counit], "K")


def character_module(E: FiniteAlgebra, chi) -> FModule:
    return FModule(E, 1, [[[c]] for c in chi], "character")


def direct_sum(*mods) -> FModule:
    E = mods[0].algebra
    F = E.field
    rho = [la.block_diag(F, *[M.rho[i] for M in mods]) for i in range(E.dim)]
    return FModule(E, sum(M.dim for M in mods), rho, "sum")


def conjugate(X: FModule, P) -> FModule:
    """The module with action P^-1 rho P (isomorphic to X via P)."""
    F = X.field
    Pi = la.inverse(F, P)
    rho = [la.matmul(F, Pi, la.matmul(F, R, P)) for R in X.rho]
    return FModule(X.algebra, X.dim, rho, X.label)


def restrict_to(X: FModule, S: la.Subspace, label="sub") -> FModule:
    F = X.field
    rho = [la.matmul(F, S.ret, la.matmul(F, R, S.inc, S.dim), S.dim) if S.dim else [] for R in X.rho]
    M = FModule(X.algebra, S.dim, rho, label)
    M.inc, M.ret, M.ambient_dim = S.inc, S.ret, X.dim
    return M


def quotient_by(X: FModule, Q: la.Quotient, label="quotient") -> FModule:
    F = X.field
    rho = [la.matmul(F, Q.proj, la.matmul(F, R, Q.sec, Q.dim), Q.dim) if Q.dim else [] for R in X.rho]
    M = FModule(X.algebra, Q.dim, rho, label)
    M.proj, M.sec, M.ambient_dim = Q.proj, Q.sec, X.dim
    return M


def generated(X: FModule, vectors):
    """Basis of the submodule generated by vectors."""
    F = X.field
    vecs = [la.matvec(F, R, v) for v in vectors for R in X.rho]
    return la.span(F, vecs + list(vectors), X.dim)


def submodule(X: FModule, vectors) -> FModule:
    return restrict_to(X, generated(X, vectors))


def quotient_module(X: FModule, vectors) -> FModule:
    S = generated(X, vectors)
    return quotient_by(X, la.Quotient(X.field, X.dim, S.basis))


def is_morphism(X: FModule, Y: FModule, M) -> bool:
    F = X.field
    return all(la.matmul(F, M, RX, X.dim) == la.matmul(F, RY, M, X.dim) for RX, RY in zip(X.rho, Y.rho))


def check_iso(X: FModule, Y: FModule, M, name="iso") -> Report:
    F = X.field
    rep = Report(name)
    square = X.dim == Y.dim and len(M) == Y.dim and all(len(r) == X.dim for r in M)
    rep.check("square", square, lambda: {"source": X.dim, "target": Y.dim})
    if square:
        rep.check("invertible", la.is_invertible(F, M), lambda: {"rank": la.rank(F, M, X.dim)})
    for i, (RX, RY) in enumerate(zip(X.rho, Y.rho)):
        ok = square and la.matmul(F, M, RX, X.dim) == la.matmul(F, RY, M, X.dim)
        rep.check("linear", ok, lambda i=i: {"algebra basis": X.algebra.names[i]})
    return rep


# ---------------------------------------------------------------------------
# tensor products and Hom

def _tensor_relations(X: FModule, Y: FModule):
    F = X.field
    IX = la.identity(F, X.dim)
    IY = la.identity(F, Y.dim)
    rel = []
    for RX, RY in zip(X.rho, Y.rho):
        rel.append(la.msub(la.kron(F, RX, IY), la.kron(F, IX, RY)))
    return rel


def tensor_over(X: FModule, Y: FModule) -> FModule:
    """X (x)_E Y: quotient of X (x) Y (index a * dim Y + b) by ex (x) y - x (x) ey."""
    _same_algebra(X, Y)
    F = X.field
    n = X.dim * Y.dim
    rel = _tensor_relations(X, Y)
    vecs = [col for R in rel for col in la.transpose(R, n)]
    Q = la.Quotient(F, n, vecs)
    IY = la.identity(F, Y.dim)
    rho = [la.matmul(F, Q.proj, la.matmul(F, la.kron(F, RX, IY), Q.sec, Q.dim), Q.dim) if Q.dim else []
           for RX in X.rho]
    M = FModule(X.algebra, Q.dim, rho, "tensor")
    M.proj, M.sec, M.ambient_dim = Q.proj, Q.sec, n
    M.factors = (X, Y)
    return M


def cotensor_over(X: FModule, Y: FModule) -> FModule:
    """X (x)^E Y: the joint kernel of e (x) 1 - 1 (x) e on X (x) Y."""
    _same_algebra(X, Y)
    F = X.field
    n = X.dim * Y.dim
    rel = _tensor_relations(X, Y)
    S = la.kernel(F, la.vstack(*rel), n)
    IY = la.identity(F, Y.dim)
    rho = [la.matmul(F, S.ret, la.matmul(F, la.kron(F, RX, IY), S.inc, S.dim), S.dim) if S.dim else []
           for RX in X.rho]
    M = FModule(X.algebra, S.dim, rho, "cotensor")
    M.inc, M.ret, M.ambient_dim = S.inc, S.ret, n
    M.factors = (X, Y)
    return M


def hom_over(X: FModule, Y: FModule) -> FModule:
    """Hom_E(X, Y) inside Hom_K(X, Y); phi is vectorised row-major (b * dim X + a)."""
    _same_algebra(X, Y)
    F = X.field
    n = X.dim * Y.dim
    IX = la.identity(F, X.dim)
    IY = la.identity(F, Y.dim)
    cons = [la.msub(la.kron(F, RY, IX), la.kron(F, IY, la.transpose(RX, X.dim))) for RX, RY in zip(X.rho, Y.rho)]
    S = la.kernel(F, la.vstack(*cons), n)
    rho = [la.matmul(F, S.ret, la.matmul(F, la.kron(F, RY, IX), S.inc, S.dim), S.dim) if S.dim else []
           for RY in Y.rho]
    M = FModule(X.algebra, S.dim, rho, "hom")
    M.inc, M.ret, M.ambient_dim = S.inc, S.ret, n
    M.factors = (X, Y)
    return M


def hom_element_matrix(H: FModule, w):
    """The dim Y x dim X matrix of the element of H = hom_over(X, Y) with coordinates w."""
    X, Y = H.factors
    F = H.field
    v = la.matvec(F, H.inc, w) if H.dim else [F.zero] * (X.dim * Y.dim)
    return [v[b * X.dim:(b + 1) * X.dim] for b in range(Y.dim)]


def hom_coords(H: FModule, phi):
    X, Y = H.factors
    vec = [phi[b][a] for b in range(Y.dim) for a in range(X.dim)]
    return la.matvec(H.field, H.ret, vec) if H.dim else []


def dual_module(X: FModule) -> FModule:
    """Co X with (e.phi)(x) = phi(e x)."""
    rho = [la.transpose(R, X.dim) for R in X.rho]
    return FModule(X.algebra, X.dim, rho, "dual")


# ---------------------------------------------------------------------------
# canonical isomorphisms

def _columns_to_matrix(F, cols, nrows):
    return la.from_columns(F, cols, nrows)


def dual_tensor_iso(X: FModule, Y: FModule):
    """Co(X (x)_E Y) -> Hom_E(X, Co Y); returns (source, target, matrix, report)."""
    T = tensor_over(X, Y)
    src = dual_module(T)
    tgt = hom_over(X, dual_module(Y))
    F = X.field
    cols = []
    for r in range(T.dim):
        row = T.proj[r]
        vec = [row[a * Y.dim + b] for b in range(Y.dim) for a in range(X.dim)]
        cols.append(la.matvec(F, tgt.ret, vec) if tgt.dim else [])
    M = _columns_to_matrix(F, cols, tgt.dim)
    rep = check_iso(src, tgt, M, "Co(X (x)_E Y) = Hom_E(X, Co Y)")
    if T.dim:
        # the image functionals must really be E-linear maps
        rep.check("lands_in_hom", all(
            tgt.dim and la.matvec(F, tgt.inc, c) == [T.proj[r][a * Y.dim + b] for b in range(Y.dim) for a in range(X.dim)]
            for r, c in enumerate(cols)))
    return src, tgt, M, rep


def triple_identification(X: FModule, Y: FModule):
    """Co(Co X (x)_E Co Y) -> X (x)^E Y -> Hom_E(Co X, Y), both checked."""
    F = X.field
    CX, CY = dual_module(X), dual_module(Y)
    T = tensor_over(CX, CY)
    A = dual_module(T)
    B = cotensor_over(X, Y)
    C = hom_over(CX, Y)
    rep = Report("Co(Co X (x)_E Co Y) = X (x)^E Y = Hom_E(Co X, Y)")
    cols = []
    inside = True
    for r in range(T.dim):
        w = T.proj[r]
        if B.dim:
            c = la.matvec(F, B.ret, w)
            inside = inside and la.matvec(F, B.inc, c) == list(w)
        else:
            c = []
            inside = inside and la.is_zero_vec(w)
        cols.append(c)
    rep.check("lands_in_cotensor", inside)
    M1 = _columns_to_matrix(F, cols, B.dim)
    rep.merge(check_iso(A, B, M1), "first.")
    cols2 = []
    for r in range(B.dim):
        w = [row[r] for row in B.inc]
        phi = [[w[a * Y.dim + b] for a in range(X.dim)] for b in range(Y.dim)]
        cols2.append(hom_coords(C, phi))
    M2 = _columns_to_matrix(F, cols2, C.dim)
    rep.merge(check_iso(B, C, M2), "second.")
    return (A, B, C), (M1, M2), rep


def tensor_unit_iso(X: FModule) -> Report:
    """E (x)_E X = X and Co E (x)^E X = X as explicit maps."""
    E = X.algebra
    F = X.field
    R = free_module(E, 1)
    T = tensor_over(R, X)
    rep = Report("unit isomorphisms")
    # e (x) x -> e x
    amb = la.zeros(F, X.dim, E.dim * X.dim)
    for i in range(E.dim):
        for a in range(X.dim):
            col = [r[a] for r in X.rho[i]]
            for b in range(X.dim):
                amb[b][i * X.dim + a] = col[b]
    M = la.matmul(F, amb, T.sec, T.dim)
    rep.merge(check_iso(T, X, M), "tensor.")
    C = cotensor_over(dual_module(R), X)
    # (counit pairing) w -> sum_i unit_i w[i, :]
    P = la.zeros(F, X.dim, E.dim * X.dim)
    for i in range(E.dim):
        if E.unit[i]:
            for a in range(X.dim):
                P[a][i * X.dim + a] = E.unit[i]
    M2 = la.matmul(F, P, C.inc, C.dim)
    rep.merge(check_iso(C, X, M2), "cotensor.")
    return rep


# ---------------------------------------------------------------------------
# flatness

class FlatnessReport:
    def __init__(self, flat, injective, witness, injective_baer, flat_dual_baer):
        self.flat = flat
        self.injective = injective
        self.witness = witness
        self.injective_baer = injective_baer
        self.flat_dual_baer = flat_dual_baer

    def to_dict(self):
        return {"flat": self.flat, "injective": self.injective, "witness": self.witness,
                "injective_by_extension_test": self.injective_baer}

    def __repr__(self):
        return f"FlatnessReport(flat={self.flat}, injective={self.injective})"


def radical_module(E: FiniteAlgebra, J=None) -> FModule:
    J = radical(E) if J is None else J
    R = free_module(E, 1)
    S = la.span(E.field, J, E.dim)
    return restrict_to(R, S, "J")


def _flat_kernel(X: FModule, J):
    """Kernel of J (x)_E X -> X, as ambient vectors over (J basis, X basis)."""
    E = X.algebra
    F = X.field
    Jm = radical_module(E, J)
    T = tensor_over(Jm, X)
    amb = la.zeros(F, X.dim, Jm.dim * X.dim)
    for r in range(Jm.dim):
        jvec = [row[r] for row in Jm.inc]
        act = X.act(jvec)
        for a in range(X.dim):
            for b in range(X.dim):
                amb[b][r * X.dim + a] = act[b][a]
    mu = la.matmul(F, amb, T.sec, T.dim) if T.dim else la.zeros(F, X.dim, 0)
    ker = la.nullspace(F, mu, T.dim)[0] if T.dim else []
    return Jm, T, ker


def _restriction_surjective(X: FModule, J) -> bool:
    """Hom_E(E, X) -> Hom_E(J, X) onto, i.e. Ext^1(E/J, X) = 0."""
    E = X.algebra
    F = X.field
    Jm = radical_module(E, J)
    H = hom_over(Jm, X)
    # x -> (j -> j x); columns are images of X basis vectors
    cols = []
    for a in range(X.dim):
        phi = [[F.zero] * Jm.dim for _ in range(X.dim)]
        for r in range(Jm.dim):
            jvec = [row[r] for row in Jm.inc]
            col = [row[a] for row in X.act(jvec)]
            for b in range(X.dim):
                phi[b][r] = col[b]
        cols.append(hom_coords(H, phi))
    if H.dim == 0:
        return True
    return la.rank(F, la.from_columns(F, cols, H.dim), X.dim) == H.dim


def is_flat(X: FModule, J=None) -> bool:
    J = radical(X.algebra) if J is None else J
    return not _flat_kernel(X, J)[2]


def flatness_report(X: FModule, J=None) -> FlatnessReport:
    E = X.algebra
    F = X.field
    J = radical(E) if J is None else J
    Jm, T, ker = _flat_kernel(X, J)
    flat = not ker
    witness = None
    if ker:
        amb = la.matvec(F, T.sec, ker[0])
        terms = []
        for r in range(Jm.dim):
            jname = E.fmt_element([row[r] for row in Jm.inc])
            for a in range(X.dim):
                c = amb[r * X.dim + a]
                if c:
                    terms.append({"coeff": F.fmt(c), "radical element": jname, "module basis": a})
        witness = {"kernel element of J (x)_E X -> X": terms}
    CX = dual_module(X)
    injective = not _flat_kernel(CX, J)[2]
    return FlatnessReport(flat, injective, witness, _restriction_surjective(X, J), _restriction_surjective(CX, J))


# ---------------------------------------------------------------------------
# base change along f: E -> F

def algebra_as_module(f: AlgebraMap) -> FModule:
    """The target algebra viewed as a module over the source via f."""
    E, G = f.source, f.target
    rho = [G.mult_matrix(f(E.basis_vector(i))) for i in range(E.dim)]
    return FModule(E, G.dim, rho, "F over E")


def base_change(f: AlgebraMap, X: FModule, variant: str) -> FModule:
    E, G = f.source, f.target
    K = E.field
    if variant == "push":
        if X.algebra.dim != G.dim:
            raise ModuleError("push needs a module over the target algebra")
        rho = [X.act(f(E.basis_vector(i))) for i in range(E.dim)]
        return FModule(E, X.dim, rho, "f_*")
    if X.algebra.dim != E.dim:
        raise ModuleError(f"{variant} needs a module over the source algebra")
    FE = algebra_as_module(f)
    LG = G.left_mats()
    if variant == "star":
        T = tensor_over(FE, X)
        I = la.identity(K, X.dim)
        rho = [la.matmul(K, T.proj, la.matmul(K, la.kron(K, L, I), T.sec, T.dim), T.dim) if T.dim else []
               for L in LG]
        M = FModule(G, T.dim, rho, "f^*")
        M.proj, M.sec, M.ambient_dim = T.proj, T.sec, T.ambient_dim
        M.factors = (FE, X)
        return M
    if variant == "shriek":
        H = hom_over(FE, X)
        I = la.identity(K, X.dim)
        rho = [la.matmul(K, H.ret, la.matmul(K, la.kron(K, I, la.transpose(L, G.dim)), H.inc, H.dim), H.dim)
               if H.dim else [] for L in LG]
        M = FModule(G, H.dim, rho, "f^!")
        M.inc, M.ret, M.ambient_dim = H.inc, H.ret, H.ambient_dim
        M.factors = (FE, X)
        return M
    if variant == "lower_shriek":
        raise ModuleError("lower_shriek takes a module over the target algebra; use lower_shriek()")
    raise ModuleError(f"unknown variant {variant!r}")


def dualizing_bimodule(f: AlgebraMap):
    """Hom_E(F, E) with its F-action (precomposition) and E-action (postcomposition)."""
    E, G = f.source, f.target
    K = E.field
    FE = algebra_as_module(f)
    H = hom_over(FE, free_module(E, 1))
    IE = la.identity(K, E.dim)
    rhoF = [la.matmul(K, H.ret, la.matmul(K, la.kron(K, IE, la.transpose(L, G.dim)), H.inc, H.dim), H.dim)
            if H.dim else [] for L in G.left_mats()]
    HF = FModule(G, H.dim, rhoF, "Hom_E(F,E) over F")
    HF.inc, HF.ret, HF.factors = H.inc, H.ret, H.factors
    return H, HF


def lower_shriek(f: AlgebraMap, X: FModule, require_flat=True) -> FModule:
    """f_!(X) = Hom_E(F, E) (x)_F X, an E-module, for X flat over F."""
    E, G = f.source, f.target
    K = E.field
    if X.algebra.dim != G.dim:
        raise ModuleError("lower_shriek needs a module over the target algebra")
    if require_flat and not is_flat(X):
        raise ModuleError("lower_shriek is only defined on flat modules")
    H, HF = dualizing_bimodule(f)
    T = tensor_over(HF, X)
    I = la.identity(K, X.dim)
    rho = [la.matmul(K, T.proj, la.matmul(K, la.kron(K, RH, I), T.sec, T.dim), T.dim) if T.dim else []
           for RH in H.rho]
    M = FModule(E, T.dim, rho, "f_!")
    M.proj, M.sec, M.ambient_dim = T.proj, T.sec, T.ambient_dim
    M.parts = (H, HF, T)
    return M


def shriek_dual_iso(f: AlgebraMap, X: FModule):
    """f^!(Co X) -> Co(f^* X) as an explicit F-module isomorphism."""
    K = X.field
    S = base_change(f, dual_module(X), "shriek")
    P = base_change(f, X, "star")
    tgt = dual_module(P)
    FE, _ = S.factors
    src_amb_cols = []
    for r in range(P.dim):
        row = P.proj[r]
        vec = [row[a * X.dim + b] for b in range(X.dim) for a in range(FE.dim)]
        src_amb_cols.append(la.matvec(K, S.ret, vec) if S.dim else [])
    # columns: Co(f^*X) basis -> f^!(Co X); invert to get the requested direction
    N = la.from_columns(K, src_amb_cols, S.dim)
    rep = check_iso(tgt, S, N, "f^!(Co X) = Co(f^* X)")
    M = la.inverse(K, N) if rep.ok and N else N
    return S, tgt, M, rep


def lower_shriek_iso(f: AlgebraMap, X: FModule):
    """f_! f^* X -> f_* f^! X, (phi (x) (c (x) x)) -> (y -> phi(y c) x)."""
    E, G = f.source, f.target
    K = E.field
    P = base_change(f, X, "star")
    L = lower_shriek(f, P, require_flat=False)
    H, HF, T = L.parts
    S = base_change(f, X, "shriek")
    R = base_change(f, S, "push")
    LG = G.left_mats()
    cols = []
    for q in range(L.dim):
        amb = [row[q] for row in L.sec]
        psi = [[K.zero] * G.dim for _ in range(X.dim)]
        for r in range(H.dim):
            phi = hom_element_matrix(H, [K.one if i == r else K.zero for i in range(H.dim)])
            for s in range(P.dim):
                coeff = amb[r * P.dim + s]
                if not coeff:
                    continue
                tvec = [row[s] for row in P.sec]
                for c in range(G.dim):
                    for a in range(X.dim):
                        w = tvec[c * X.dim + a]
                        if not w:
                            continue
                        Phi = la.matmul(K, phi, LG[c], G.dim)
                        for d in range(G.dim):
                            e_vec = [Phi[e][d] for e in range(E.dim)]
                            col = [row[a] for row in X.act(e_vec)]
                            for b in range(X.dim):
                                if col[b]:
                                    psi[b][d] = psi[b][d] + coeff * w * col[b]
        cols.append(hom_coords(S, psi))
    M = la.from_columns(K, cols, R.dim)
    return L, R, M, check_iso(L, R, M, "f_! f^* = f_* f^!")


def star_dual(X: FModule, Y: FModule | None = None, check_flat=True):
    """X* = Hom_E(X, E), and if Y is given the verified map X* (x)_E Y -> Hom_E(X, Y)."""
    E = X.algebra
    F = X.field
    if check_flat and not is_flat(X):
        raise ModuleError("star_dual requires a flat module")
    Xs = hom_over(X, free_module(E, 1))
    if Y is None:
        return Xs, None, None
    T = tensor_over(Xs, Y)
    Hm = hom_over(X, Y)
    amb_cols = []
    for c in range(Xs.dim):
        h = hom_element_matrix(Xs, [F.one if i == c else F.zero for i in range(Xs.dim)])
        for b in range(Y.dim):
            phi = [[F.zero] * X.dim for _ in range(Y.dim)]
            for a in range(X.dim):
                e_vec = [h[k][a] for k in range(E.dim)]
                col = [row[b] for row in Y.act(e_vec)]
                for r in range(Y.dim):
                    phi[r][a] = col[r]
            amb_cols.append(hom_coords(Hm, phi))
    A = la.from_columns(F, amb_cols, Hm.dim)
    M = la.matmul(F, A, T.sec, T.dim) if T.dim and Hm.dim else la.zeros(F, Hm.dim, T.dim)
    return Xs, (T, Hm, M), check_iso(T, Hm, M, "X* (x)_E Y = Hom_E(X, Y)")


# ---------------------------------------------------------------------------
# flat modules over dual numbers as exact sequences

class SequenceView:
    def __init__(self, module, i, pi, a_dim, exact):
        self.module = module
        self.i = i
        self.pi = pi
        self.a_dim = a_dim
        self.y_dim = module.dim
        self.exact = exact


def _eps_index(E):
    if E.dim != 2 or E.mul[1][1] != [E.field.zero] * 2 or E.unit != [E.field.one, E.field.zero]:
        raise ModuleError("sequence_view needs the dual numbers K[e]")
    return 1


def sequence_view(X: FModule) -> SequenceView:
    """0 -> A -> X -> A -> 0 with A = image of e, and e = i pi."""
    F = X.field
    idx = _eps_index(X.algebra)
    N = X.rho[idx]
    A = la.image(F, N, X.dim)
    i = A.inc
    pi = la.matmul(F, A.ret, N, X.dim) if A.dim else []
    ker_pi = la.kernel(F, pi, X.dim) if A.dim else la.kernel(F, la.zeros(F, 0, X.dim), X.dim)
    exact = X.dim == 2 * A.dim and all(A.contains(v) for v in ker_pi.basis)
    if not exact:
        raise ModuleError("module is not flat: the sequence is not exact")
    return SequenceView(X, i, pi, A.dim, exact)


def from_sequence(E: FiniteAlgebra, i, pi, y_dim) -> FModule:
    F = E.field
    _eps_index(E)
    a_dim = len(pi)
    if a_dim:
        N = la.matmul(F, i, pi, y_dim)
        if not la.is_zero(la.matmul(F, pi, i, a_dim)):
            raise ModuleError("pi i must vanish")
    else:
        N = la.zeros(F, y_dim, y_dim)
    return FModule(E, y_dim, [la.identity(F, y_dim), N], "sequence")


def sequence_tensor_space(S1: SequenceView, S2: SequenceView):
    """The sub-space {(i (x) 1)a + (1 (x) i)b : (1 (x) pi)a = (pi (x) 1)b} of Y1 (x) Y2."""
    F = S1.module.field
    n1, n2 = S1.y_dim, S2.y_dim
    a1, a2 = S1.a_dim, S2.a_dim
    I1, I2 = la.identity(F, n1), la.identity(F, n2)
    Ia1, Ia2 = la.identity(F, a1), la.identity(F, a2)
    # unknowns: a in A1 (x) Y2, b in Y1 (x) A2
    left = la.kron(F, Ia1, S2.pi)      # (1 (x) pi) : A1 Y2 -> A1 A2
    right = la.kron(F, S1.pi, Ia2)     # (pi (x) 1) : Y1 A2 -> A1 A2
    cons = la.hstack(left, la.mscale(-F.one, right))
    sols = la.nullspace(F, cons, a1 * n2 + n1 * a2)[0]
    emb = la.hstack(la.kron(F, S1.i, I2), la.kron(F, I1, S2.i))
    vecs = [la.matvec(F, emb, s) for s in sols]
    return la.span(F, vecs, n1 * n2)


# ---------------------------------------------------------------------------
# random modules for batteries

def random_invertible(F, n, rng, size=2):
    while True:
        P = [[F(rng.randint(-size, size)) for _ in range(n)] for _ in range(n)]
        if la.is_invertible(F, P):
            return P


def random_element(E, rng, size=2):
    return [E.field(rng.randint(-size, size)) for _ in range(E.dim)]


def _random_piece(E, rng, max_dim, size):
    for _ in range(50):
        kind = rng.choice(["free", "quotient", "submodule", "quotient", "submodule"])
        if kind == "free":
            X = free_module(E, rng.randint(1, max(1, max_dim // E.dim)))
        else:
            base = free_module(E, rng.randint(1, max(1, (max_dim + E.dim) // E.dim)))
            gens = [[E.field(rng.randint(-size, size)) for _ in range(base.dim)] for _ in range(rng.randint(1, 2))]
            X = quotient_module(base, gens) if kind == "quotient" else submodule(base, gens)
            X = FModule(E, X.dim, X.rho, kind)
        if 0 < X.dim <= max_dim:
            return X
    return None


def random_module(E: FiniteAlgebra, rng: _random.Random, max_dim=6, size=2) -> FModule:
    """A random module built from E^r by quotients, submodules, duals and sums, then conjugated."""
    for _ in range(100):
        kind = rng.choice(["piece", "piece", "dual", "sum"])
        if kind == "sum":
            parts = [_random_piece(E, rng, max(1, max_dim // 2), size) for _ in range(2)]
            X = direct_sum(*parts) if all(parts) else None
        else:
            X = _random_piece(E, rng, max_dim, size)
            if X is not None and kind == "dual":
                X = dual_module(X)
        if X is not None and 0 < X.dim <= max_dim:
            if rng.random() < 0.7:
                X = conjugate(X, random_invertible(E.field, X.dim, rng))
            return X
    raise ModuleError("could not draw a module of the requested size")
