"""Exact dense linear algebra over any of the scalar fields.

Matrices are lists of rows.  A matrix of a linear map has the images of the
source basis vectors as its columns.  Every routine takes the field
descriptor ``F`` so it can produce zeros and ones of the right type.
"""
from __future__ import annotations


def zeros(F, r, c):
    z = F.zero
    return [[z] * c for _ in range(r)]


def identity(F, n):
    M = zeros(F, n, n)
    for i in range(n):
        M[i][i] = F.one
    return M


def transpose(A, ncols=None):
    if not A:
        return [[] for _ in range(ncols or 0)]
    return [list(col) for col in zip(*A)]


def matmul(F, A, B, ncols=None):
    if not A:
        return []
    inner = len(B)
    cols = ncols if ncols is not None else (len(B[0]) if B else 0)
    out = []
    for row in A:
        acc = [F.zero] * cols
        for k in range(inner):
            a = row[k]
            if not a:
                continue
            Bk = B[k]
            for j in range(cols):
                b = Bk[j]
                if b:
                    acc[j] = acc[j] + a * b
        out.append(acc)
    return out


def matvec(F, A, v):
    out = []
    for row in A:
        acc = F.zero
        for a, b in zip(row, v):
            if a and b:
                acc = acc + a * b
        out.append(acc)
    return out


def madd(A, B):
    return [[a + b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def msub(A, B):
    return [[a - b for a, b in zip(ra, rb)] for ra, rb in zip(A, B)]


def mscale(c, A):
    return [[c * a for a in row] for row in A]


def vadd(u, v):
    return [a + b for a, b in zip(u, v)]


def vsub(u, v):
    return [a - b for a, b in zip(u, v)]


def vscale(c, v):
    return [c * a for a in v]


def is_zero(A) -> bool:
    return all(not a for row in A for a in row)


def is_zero_vec(v) -> bool:
    return all(not a for a in v)


def kron(F, A, B):
    """Kronecker product; index (a, b) of the product is a * len(B) + b."""
    rb = len(B)
    cb = len(B[0]) if B else 0
    ca = len(A[0]) if A else 0
    out = zeros(F, len(A) * rb, ca * cb)
    for i, row in enumerate(A):
        for j, a in enumerate(row):
            if not a:
                continue
            for k in range(rb):
                Bk = B[k]
                orow = out[i * rb + k]
                for l in range(cb):
                    if Bk[l]:
                        orow[j * cb + l] = a * Bk[l]
    return out


def vkron(u, v):
    return [a * b for a in u for b in v]


def hstack(*mats):
    return [sum((list(m[i]) for m in mats), []) for i in range(len(mats[0]))]


def vstack(*mats):
    out = []
    for m in mats:
        out.extend(list(r) for r in m)
    return out


def columns(A, ncols=None):
    return transpose(A, ncols)


def from_columns(F, cols, nrows):
    if not cols:
        return [[] for _ in range(nrows)]
    return transpose(cols)


def block_diag(F, *mats):
    n = sum(len(m) for m in mats)
    c = sum(len(m[0]) if m else 0 for m in mats)
    out = zeros(F, n, c)
    r0 = c0 = 0
    for m in mats:
        for i, row in enumerate(m):
            for j, a in enumerate(row):
                out[r0 + i][c0 + j] = a
        r0 += len(m)
        c0 += len(m[0]) if m else 0
    return out


def apply_entrywise(fn, A):
    return [[fn(a) for a in row] for row in A]


# ---------------------------------------------------------------------------
# elimination

def rref(F, A, ncols=None):
    """Reduced row echelon form; returns (rows, pivot columns).

    Pivots are chosen as the first nonzero entry in input order, so results
    are deterministic.
    """
    M = [list(r) for r in A]
    n = ncols if ncols is not None else (len(M[0]) if M else 0)
    pivots = []
    r = 0
    for c in range(n):
        piv = None
        for i in range(r, len(M)):
            if M[i][c]:
                piv = i
                break
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        inv = F.one / M[r][c]
        if inv != F.one:
            M[r] = [inv * a if a else a for a in M[r]]
        prow = M[r]
        for i in range(len(M)):
            if i != r and M[i][c]:
                f = M[i][c]
                M[i] = [a - f * b if b else a for a, b in zip(M[i], prow)]
        pivots.append(c)
        r += 1
        if r == len(M):
            break
    return M[:r], pivots


def rank(F, A, ncols=None) -> int:
    return len(rref(F, A, ncols)[1])


def nullspace(F, A, ncols):
    """Basis of {v : A v = 0}, one vector per free column, in column order.

    Each basis vector has a 1 at its free column and 0 at the other free
    columns, so free coordinates read off the expansion.
    """
    R, piv = rref(F, A, ncols)
    pset = set(piv)
    free = [c for c in range(ncols) if c not in pset]
    basis = []
    for f in free:
        v = [F.zero] * ncols
        v[f] = F.one
        for row, p in zip(R, piv):
            if row[f]:
                v[p] = -row[f]
        basis.append(v)
    return basis, free


def solve(F, A, b, ncols=None):
    """One solution x of A x = b, or None."""
    n = ncols if ncols is not None else (len(A[0]) if A else 0)
    aug = [list(row) + [bi] for row, bi in zip(A, b)]
    R, piv = rref(F, aug, n + 1)
    if piv and piv[-1] == n:
        return None
    x = [F.zero] * n
    for row, p in zip(R, piv):
        x[p] = row[n]
    return x


def solve_matrix(F, A, B, ncols=None):
    """X with A X = B (columnwise), or None."""
    n = ncols if ncols is not None else (len(A[0]) if A else 0)
    cols = []
    for col in transpose(B, 0):
        x = solve(F, A, col, n)
        if x is None:
            return None
        cols.append(x)
    if not cols:
        return zeros(F, n, 0)
    return transpose(cols)


def inverse(F, A):
    n = len(A)
    if n == 0:
        return []
    aug = [list(row) + e for row, e in zip(A, identity(F, n))]
    R, piv = rref(F, aug, 2 * n)
    if len(piv) < n or piv[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return [row[n:] for row in R]


def is_invertible(F, A) -> bool:
    if not A:
        return True
    if len(A) != len(A[0]):
        return False
    return rank(F, A) == len(A)


def det(F, A):
    M = [list(r) for r in A]
    n = len(M)
    d = F.one
    for c in range(n):
        piv = next((i for i in range(c, n) if M[i][c]), None)
        if piv is None:
            return F.zero
        if piv != c:
            M[c], M[piv] = M[piv], M[c]
            d = -d
        d = d * M[c][c]
        inv = F.one / M[c][c]
        for i in range(c + 1, n):
            if M[i][c]:
                f = M[i][c] * inv
                M[i] = [a - f * b for a, b in zip(M[i], M[c])]
    return d


def left_inverse(F, A):
    """r with r A = I for A of full column rank."""
    m = len(A)
    n = len(A[0]) if A else 0
    At = transpose(A, n)
    Y = solve_matrix(F, At, identity(F, n), m)
    if Y is None:
        raise ValueError("matrix has no left inverse")
    return transpose(Y, n) if m else zeros(F, n, 0)


# ---------------------------------------------------------------------------
# subspaces and quotients

class Subspace:
    """A subspace of K^n with basis columns ``inc`` and a retraction ``ret``.

    ``ret @ inc == I``; ``ret`` reads coordinates of vectors in the span.
    """

    def __init__(self, F, n, basis, pivots):
        self.F = F
        self.n = n
        self.basis = basis
        self.dim = len(basis)
        self.inc = from_columns(F, basis, n)
        ret = zeros(F, self.dim, n)
        for i, p in enumerate(pivots):
            ret[i][p] = F.one
        self.ret = ret
        self.pivots = pivots

    def coords(self, v):
        w = [v[p] for p in self.pivots]
        return w

    def contains(self, v) -> bool:
        w = self.coords(v)
        back = matvec(self.F, self.inc, w) if self.dim else [self.F.zero] * self.n
        return back == list(v)


def span(F, vectors, n):
    """Canonical subspace spanned by vectors (rref rows ordered by pivot)."""
    R, piv = rref(F, vectors, n)
    return Subspace(F, n, R, piv)


def kernel(F, A, ncols):
    basis, free = nullspace(F, A, ncols)
    return Subspace(F, ncols, basis, free)


def image(F, A, nrows):
    return span(F, transpose(A, 0), nrows)


class Quotient:
    """K^n / span(relations) with projection ``proj`` and section ``sec``.

    The quotient basis is the images of the standard basis vectors at the
    non-pivot positions of the row-reduced relations, in input order.
    """

    def __init__(self, F, n, relations):
        R, piv = rref(F, relations, n)
        self.F = F
        self.n = n
        self.rows = R
        self.pivots = piv
        pset = set(piv)
        keep = [c for c in range(n) if c not in pset]
        self.keep = keep
        self.dim = len(keep)
        q = len(keep)
        sec = zeros(F, n, q)
        for i, c in enumerate(keep):
            sec[c][i] = F.one
        self.sec = sec
        proj = zeros(F, q, n)
        kidx = {c: i for i, c in enumerate(keep)}
        # v -> v - sum_p v_p row_p, then read the kept coordinates
        for j in range(n):
            if j in kidx:
                proj[kidx[j]][j] = F.one
            else:
                row = R[piv.index(j)]
                for c in keep:
                    if row[c]:
                        proj[kidx[c]][j] = -row[c]
        self.proj = proj

    def project(self, v):
        return matvec(self.F, self.proj, v)


def semilinear_restrict(F, P, sigma, inc, ret):
    """Matrix of v -> P sigma(v) restricted to the subspace (inc, ret)."""
    sig_inc = apply_entrywise(sigma, inc)
    return matmul(F, ret, matmul(F, P, sig_inc))


def fmt_matrix(F, A):
    return [[F.fmt(a) for a in row] for row in A]


def first_difference(A, B):
    """First (row, col) where two matrices differ, or None; shape mismatches report the shapes."""
    if A and not isinstance(A[0], list):
        A, B = [A], [B]
    if len(A) != len(B) or any(len(r) != len(s) for r, s in zip(A, B)):
        return {"shapes": [[len(A), len(A[0]) if A else 0], [len(B), len(B[0]) if B else 0]]}
    for i, (r, s) in enumerate(zip(A, B)):
        for j, (a, b) in enumerate(zip(r, s)):
            if a != b:
                return {"row": i, "col": j, "lhs": str(a), "rhs": str(b)}
    return None
