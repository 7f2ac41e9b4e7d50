"""Exact base fields Q, F_p, Q(t), F_p(t) and operator structures on them.

Rationals are :class:`fractions.Fraction`.  Prime-field elements are
:class:`Fp`.  Rational functions are :class:`RatFunc`, a reduced quotient
of univariate polynomials with a monic denominator.  Polynomial coefficients
inside a ``RatFunc`` are plain ints modulo p (p > 0) or Fractions (p == 0).
"""
from __future__ import annotations

import random as _random
from fractions import Fraction
from math import comb

from .expr import ParseError, evaluate
from .report import Report


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    i = 2
    while i * i <= n:
        if n % i == 0:
            return False
        i += 1
    return True


# ---------------------------------------------------------------------------
# prime field elements

class Fp:
    __slots__ = ("v", "p")

    def __init__(self, v: int, p: int):
        self.v = v % p
        self.p = p

    def _coerce(self, other):
        if isinstance(other, Fp):
            if other.p != self.p:
                raise ValueError("mixing different prime fields")
            return other.v
        if isinstance(other, int):
            return other % self.p
        if isinstance(other, Fraction):
            return other.numerator * pow(other.denominator, -1, self.p) % self.p
        return None

    def __add__(self, o):
        w = self._coerce(o)
        return NotImplemented if w is None else Fp(self.v + w, self.p)

    __radd__ = __add__

    def __sub__(self, o):
        w = self._coerce(o)
        return NotImplemented if w is None else Fp(self.v - w, self.p)

    def __rsub__(self, o):
        w = self._coerce(o)
        return NotImplemented if w is None else Fp(w - self.v, self.p)

    def __mul__(self, o):
        w = self._coerce(o)
        return NotImplemented if w is None else Fp(self.v * w, self.p)

    __rmul__ = __mul__

    def __truediv__(self, o):
        w = self._coerce(o)
        if w is None:
            return NotImplemented
        if w == 0:
            raise ZeroDivisionError("division by zero in F_%d" % self.p)
        return Fp(self.v * pow(w, -1, self.p), self.p)

    def __rtruediv__(self, o):
        w = self._coerce(o)
        if w is None:
            return NotImplemented
        if self.v == 0:
            raise ZeroDivisionError("division by zero in F_%d" % self.p)
        return Fp(w * pow(self.v, -1, self.p), self.p)

    def __neg__(self):
        return Fp(-self.v, self.p)

    def __pow__(self, e: int):
        if e < 0:
            return Fp(pow(self.v, -1, self.p), self.p) ** (-e)
        return Fp(pow(self.v, e, self.p), self.p)

    def __eq__(self, o):
        w = self._coerce(o)
        if w is None:
            return NotImplemented
        return self.v == w

    def __hash__(self):
        return hash((self.v, self.p))

    def __bool__(self):
        return self.v != 0

    def __repr__(self):
        return f"{self.v} mod {self.p}"


# ---------------------------------------------------------------------------
# dense univariate polynomial helpers; coefficient tuples, low degree first

def _norm(c, p):
    return c % p if p else c


def _inv(c, p):
    return pow(c, -1, p) if p else Fraction(1) / c


def _trim(a):
    n = len(a)
    while n and not a[n - 1]:
        n -= 1
    return tuple(a[:n])


def padd(a, b, p):
    n = max(len(a), len(b))
    out = [0] * n
    for i, c in enumerate(a):
        out[i] = c
    for i, c in enumerate(b):
        out[i] = _norm(out[i] + c, p)
    return _trim(out)


def pneg(a, p):
    return tuple(_norm(-c, p) for c in a)


def psub(a, b, p):
    return padd(a, pneg(b, p), p)


def pmul(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            out[i + j] += x * y
    if p:
        out = [c % p for c in out]
    return _trim(out)


def pscale(a, c, p):
    return _trim([_norm(x * c, p) for x in a])


def pdivmod(a, b, p):
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = list(a)
    db = len(b) - 1
    lead_inv = _inv(b[-1], p)
    q = [0] * max(len(a) - db, 0)
    for k in range(len(a) - 1 - db, -1, -1):
        c = _norm(a[k + db] * lead_inv, p)
        q[k] = c
        if c:
            for j, y in enumerate(b):
                a[k + j] = _norm(a[k + j] - c * y, p)
    return _trim(q), _trim(a[:db] if db else [])


def pmonic(a, p):
    if not a:
        return a
    return pscale(a, _inv(a[-1], p), p)


def pgcd(a, b, p):
    while b:
        a, b = b, pdivmod(a, b, p)[1]
    return pmonic(a, p)


def pcompose_shift(a, c, p):
    """Return a(t + c)."""
    out = ()
    lin = (_norm(c, p), 1) if c else (0, 1)
    lin = _trim(lin)
    for coef in reversed(a):
        out = padd(pmul(out, lin, p), (coef,) if coef else (), p)
    return out


def pcompose_scale(a, q, p):
    """Return a(q t)."""
    out = []
    power = 1
    for coef in a:
        out.append(_norm(coef * power, p))
        power = power * q
    return _trim(out)


def pderiv_divided(a, i, p):
    """Divided-power derivative: t^n -> C(n, i) t^(n-i)."""
    if i == 0:
        return a
    return _trim([_norm(a[n] * comb(n, i), p) for n in range(i, len(a))])


def pderiv_naive(a, p):
    return _trim([_norm(a[n] * n, p) for n in range(1, len(a))])


def phas_value(a, p):
    return a


# ---------------------------------------------------------------------------
# rational functions

class RatFunc:
    __slots__ = ("num", "den", "p")

    def __init__(self, num, den=(1,), p=0, reduce=True):
        num = _trim(list(num))
        den = _trim(list(den))
        if not den:
            raise ZeroDivisionError("zero denominator")
        if reduce:
            if not num:
                den = (1,)
            else:
                g = pgcd(num, den, p)
                if len(g) > 1:
                    num = pdivmod(num, g, p)[0]
                    den = pdivmod(den, g, p)[0]
                lead = _inv(den[-1], p)
                if den[-1] != 1:
                    num = pscale(num, lead, p)
                    den = pscale(den, lead, p)
        self.num = num
        self.den = den
        self.p = p

    @classmethod
    def const(cls, c, p):
        c = _norm(c, p)
        return cls((c,) if c else (), (1,), p, reduce=False)

    def _coerce(self, o):
        if isinstance(o, RatFunc):
            if o.p != self.p:
                raise ValueError("mixing function fields of different characteristic")
            return o
        if isinstance(o, int):
            return RatFunc.const(o if self.p else Fraction(o), self.p)
        if isinstance(o, Fraction):
            if self.p:
                return RatFunc.const(Fp(0, self.p)._coerce(o), self.p)
            return RatFunc.const(o, 0)
        if isinstance(o, Fp):
            if o.p != self.p:
                raise ValueError("mixing fields")
            return RatFunc.const(o.v, self.p)
        return None

    def is_poly(self):
        return self.den == (1,)

    def is_const(self):
        return self.den == (1,) and len(self.num) <= 1

    def const_value(self):
        return self.num[0] if self.num else 0

    def __add__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        p = self.p
        if self.den == o.den:
            if self.den == (1,):
                return RatFunc(padd(self.num, o.num, p), (1,), p, reduce=False)
            return RatFunc(padd(self.num, o.num, p), self.den, p)
        num = padd(pmul(self.num, o.den, p), pmul(o.num, self.den, p), p)
        return RatFunc(num, pmul(self.den, o.den, p), p)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc(pneg(self.num, self.p), self.den, self.p, reduce=False)

    def __sub__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        p = self.p
        if not self.num or not o.num:
            return RatFunc((), (1,), p, reduce=False)
        if self.den == (1,) and o.den == (1,):
            return RatFunc(pmul(self.num, o.num, p), (1,), p, reduce=False)
        if o.is_const():
            return RatFunc(pscale(self.num, o.num[0], p), self.den, p, reduce=False)
        if self.is_const():
            return RatFunc(pscale(o.num, self.num[0], p), o.den, p, reduce=False)
        return RatFunc(pmul(self.num, o.num, p), pmul(self.den, o.den, p), p)

    __rmul__ = __mul__

    def inverse(self):
        if not self.num:
            raise ZeroDivisionError("inverse of zero rational function")
        return RatFunc(self.den, self.num, self.p)

    def __truediv__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, e: int):
        if e < 0:
            return self.inverse() ** (-e)
        out = RatFunc.const(1, self.p)
        base = self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, o):
        o = self._coerce(o)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        return hash((self.num, self.den, self.p))

    def __bool__(self):
        return bool(self.num)

    def __repr__(self):
        return format_ratfunc(self)


def _format_coeff(c, p):
    if p:
        return str(c % p)
    c = Fraction(c)
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_tpoly(a, p) -> str:
    if not a:
        return "0"
    terms = []
    for k in range(len(a) - 1, -1, -1):
        c = a[k]
        if not c:
            continue
        cs = _format_coeff(c, p)
        mono = "" if k == 0 else ("t" if k == 1 else f"t^{k}")
        if not mono:
            terms.append(cs)
        elif cs in ("1", "-1"):
            terms.append(cs[:-1] + mono)
        else:
            terms.append(f"{cs}*{mono}")
    out = terms[0]
    for t in terms[1:]:
        out += " - " + t[1:] if t.startswith("-") else " + " + t
    return out


def format_ratfunc(f: RatFunc) -> str:
    return f"({format_tpoly(f.num, f.p)})/({format_tpoly(f.den, f.p)})"


# ---------------------------------------------------------------------------
# field descriptors

class Field:
    """One of Q, F_p, Q(t), F_p(t)."""

    def __init__(self, p: int = 0, function: bool = False):
        if p and not is_prime(p):
            raise ValueError(f"{p} is not prime")
        self.p = p
        self.function = function

    @property
    def char(self) -> int:
        return self.p

    @property
    def name(self) -> str:
        base = "Q" if self.p == 0 else f"F{self.p}"
        return base + "(t)" if self.function else base

    def prime_field(self) -> "Field":
        return Field(self.p, False)

    def __eq__(self, o):
        return isinstance(o, Field) and (self.p, self.function) == (o.p, o.function)

    def __hash__(self):
        return hash((self.p, self.function))

    def __repr__(self):
        return f"Field({self.name})"

    def __call__(self, x):
        if self.function:
            if isinstance(x, RatFunc):
                if x.p != self.p:
                    raise ValueError("element of another field")
                return x
            if isinstance(x, str):
                return self.parse(x)
            return RatFunc.const(0, self.p) + x
        if self.p:
            if isinstance(x, Fp):
                if x.p != self.p:
                    raise ValueError("element of another field")
                return x
            if isinstance(x, Fraction):
                return Fp(x.numerator * pow(x.denominator, -1, self.p), self.p)
            if isinstance(x, str):
                return self.parse(x)
            return Fp(int(x), self.p)
        if isinstance(x, str):
            return self.parse(x)
        if isinstance(x, (Fp, RatFunc)):
            raise ValueError("element of another field")
        return Fraction(x)

    @property
    def zero(self):
        return self(0)

    @property
    def one(self):
        return self(1)

    def t(self):
        if not self.function:
            raise ValueError(f"{self.name} has no variable t")
        return RatFunc((0, 1), (1,), self.p, reduce=False)

    def contains(self, x) -> bool:
        if self.function:
            return isinstance(x, RatFunc) and x.p == self.p
        if self.p:
            return isinstance(x, Fp) and x.p == self.p
        return isinstance(x, Fraction)

    def from_poly(self, coeffs) -> RatFunc:
        return RatFunc(tuple(_norm(self._base(c), self.p) for c in coeffs), (1,), self.p)

    def _base(self, c):
        if self.p:
            if isinstance(c, Fp):
                return c.v
            if isinstance(c, Fraction):
                return c.numerator * pow(c.denominator, -1, self.p) % self.p
            return int(c) % self.p
        return Fraction(c)

    # -- text encoding --------------------------------------------------
    def fmt(self, x) -> str:
        x = self(x)
        if self.function:
            return format_ratfunc(x)
        if self.p:
            return f"{x.v} mod {self.p}"
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"

    def parse(self, s: str):
        s = s.strip()
        if self.p and not self.function and " mod " in s:
            r, q = s.split(" mod ")
            if int(q) != self.p:
                raise ParseError(f"{s!r} is not an element of {self.name}")
            return Fp(int(r), self.p)
        if not self.function:
            if self.p == 0:
                try:
                    return Fraction(s)
                except ValueError:
                    pass

        def atom(name):
            if name == "t" and self.function:
                return self.t()
            raise ParseError(f"unknown symbol {name!r} in {self.name}")

        val = evaluate(s, self, atom)
        return self(val)

    # -- misc -----------------------------------------------------------
    def random(self, rng: _random.Random, size: int = 3, degree: int = 2):
        if not self.function:
            if self.p:
                return Fp(rng.randrange(self.p), self.p)
            den = rng.randint(1, size)
            return Fraction(rng.randint(-size, size), den)
        num = [self._base(self.prime_field().random(rng, size)) for _ in range(rng.randint(0, degree) + 1)]
        den = [self._base(self.prime_field().random(rng, size)) for _ in range(rng.randint(0, degree))] + [1]
        return RatFunc(tuple(num), tuple(den), self.p)


def parse_field(name: str) -> Field:
    s = name.strip().replace(" ", "").replace("_", "")
    function = s.endswith("(t)")
    if function:
        s = s[:-3]
    if s in ("Q", "QQ"):
        return Field(0, function)
    if s.startswith("GF(") and s.endswith(")"):
        s = "F" + s[3:-1]
    if s.startswith("F") and s[1:].isdigit():
        p = int(s[1:])
        if not is_prime(p):
            raise ValueError(f"{p} is not prime")
        return Field(p, function)
    raise ValueError(f"unknown field {name!r}")


QQ = Field(0)
QT = Field(0, True)


# ---------------------------------------------------------------------------
# fields with operators

class DepthError(ValueError):
    pass


class OperatorField:
    """A field with an automorphism sigma and a Hasse-Schmidt family d_i.

    ``sigma`` is "identity", "shift" (t -> t+1) or ("scale", q) for t -> q t.
    The last one is only there as a negative control: it does not commute
    with the divided-power family.  ``hs`` is "trivial", "divided" or a
    callable ``(i, f) -> scalar``; callables need an explicit ``depth``.
    """

    def __init__(self, field: Field, sigma="identity", hs="trivial", depth=None, label=None):
        self.field = field
        if not field.function and (sigma != "identity" or hs not in ("trivial",)):
            if not callable(hs) and hs != "trivial":
                raise ValueError("only the trivial family exists on a prime field")
            if sigma != "identity":
                raise ValueError("only the identity automorphism exists on a prime field")
        if callable(hs) and depth is None:
            raise ValueError("a custom family needs an explicit depth")
        self.sigma_kind = sigma
        self.hs_kind = hs
        self.depth = depth
        self.label = label
        self._cache = {}

    def __repr__(self):
        hs = self.hs_kind if isinstance(self.hs_kind, str) else (self.label or "custom")
        sg = self.sigma_kind if isinstance(self.sigma_kind, str) else f"scale:{self.sigma_kind[1]}"
        return f"OperatorField({self.field.name}, sigma={sg}, hs={hs})"

    @property
    def char(self):
        return self.field.p

    # -- Hasse-Schmidt family ------------------------------------------
    def hs_vector(self, f, n: int) -> list:
        """[d_0 f, ..., d_n f]."""
        F = self.field
        f = F(f)
        if self.depth is not None and n > self.depth:
            raise DepthError(f"index {n} beyond supported depth {self.depth}")
        if self.hs_kind == "trivial":
            return [f] + [F.zero] * n
        if callable(self.hs_kind):
            return [f] + [F(self.hs_kind(i, f)) for i in range(1, n + 1)]
        key = (f, n)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        p = F.p
        if f.is_poly():
            out = [RatFunc(pderiv_divided(f.num, i, p), (1,), p, reduce=False) for i in range(n + 1)]
        else:
            dg = [RatFunc(pderiv_divided(f.num, i, p), (1,), p, reduce=False) for i in range(n + 1)]
            dh = [RatFunc(pderiv_divided(f.den, i, p), (1,), p, reduce=False) for i in range(n + 1)]
            h = dh[0]
            out = []
            for i in range(n + 1):
                acc = dg[i]
                for j in range(i):
                    if out[j] and dh[i - j]:
                        acc = acc - out[j] * dh[i - j]
                out.append(acc / h)
        if len(self._cache) > 20000:
            self._cache.clear()
        self._cache[key] = out
        return out

    def hs_derive(self, i: int, f):
        if i < 0:
            raise ValueError("negative index")
        return self.hs_vector(f, i)[i]

    # -- automorphism ---------------------------------------------------
    def apply_sigma(self, f, power: int = 1):
        F = self.field
        f = F(f)
        if self.sigma_kind == "identity" or power == 0:
            return f
        p = F.p
        if self.sigma_kind == "shift":
            c = power
            return RatFunc(pcompose_shift(f.num, c, p), pcompose_shift(f.den, c, p), p)
        kind, q = self.sigma_kind
        if kind != "scale":
            raise ValueError(f"unknown automorphism {self.sigma_kind!r}")
        qq = F._base(q)
        if power < 0:
            qq = _inv(qq, p)
        out = f
        for _ in range(abs(power)):
            out = RatFunc(pcompose_scale(out.num, qq, p), pcompose_scale(out.den, qq, p), p)
        return out

    def sigma_inv(self, f):
        return self.apply_sigma(f, -1)

    def is_constant(self, f) -> bool:
        """Membership in the field of constants (fixed by sigma, killed by all d_i, i > 0)."""
        f = self.field(f)
        if self.apply_sigma(f) != f:
            return False
        if not self.field.function:
            return True
        if self.hs_kind == "trivial":
            return True
        bound = max(len(f.num), len(f.den), 2) - 1
        if self.field.p == 0:
            bound = 1
        if self.depth is not None:
            bound = min(bound, self.depth)
        return all(not d for d in self.hs_vector(f, bound)[1:])

    def mu(self, f, n: int) -> list:
        """Coefficients of sum_i d_i(f) x^i, truncated at x^n."""
        return self.hs_vector(f, n)


def naive_power_family(field: Field, depth: int, sigma="identity") -> OperatorField:
    """d_i := (d/dt)^i, the standard non-iterative control."""
    p = field.p

    def fam(i, f):
        for _ in range(i):
            f = _ddt(f, p)
        return f

    return OperatorField(field, sigma, fam, depth=depth, label="naive-power")


def truncated_family(field: Field, depth: int, keep: int = 1, sigma="identity") -> OperatorField:
    """d_1 = d/dt and d_i := 0 for i > keep (a broken family)."""
    base = OperatorField(field, "identity", "divided")

    def fam(i, f):
        return base.hs_derive(i, f) if i <= keep else field.zero

    return OperatorField(field, sigma, fam, depth=depth, label="truncated")


def _ddt(f: RatFunc, p):
    num = padd(pmul(pderiv_naive(f.num, p), f.den, p), pneg(pmul(f.num, pderiv_naive(f.den, p), p), p), p)
    return RatFunc(num, pmul(f.den, f.den, p), p)


def hs_derive(K: OperatorField, i: int, f):
    return K.hs_derive(i, f)


def apply_sigma(K: OperatorField, f):
    return K.apply_sigma(f)


def verify_operator_field(K: OperatorField, depth: int, samples) -> Report:
    """Check d_0 = id, iterativity, Leibniz and sigma d = d sigma on samples."""
    F = K.field
    rep = Report(f"operator field {K!r}, depth {depth}")
    base = [F(s) for s in samples]
    pool = list(base)
    for a in base:
        for b in base:
            pool.append(a + b)
            pool.append(a * b)
    fmt = F.fmt

    for f in pool:
        d = K.hs_vector(f, depth)
        rep.check("d0_identity", d[0] == f, lambda f=f: {"f": fmt(f)})
        for i in range(depth + 1):
            di = K.hs_vector(d[i], depth - i)
            for j in range(depth - i + 1):
                lhs = comb(i + j, i) * d[i + j]
                rep.check("iterativity", lhs == di[j],
                          lambda i=i, j=j, f=f, lhs=lhs, r=di[j]: {
                              "i": i, "j": j, "f": fmt(f),
                              "C(i+j,i)d_(i+j)": fmt(lhs), "d_i d_j": fmt(r)})
        sf = K.apply_sigma(f)
        ds = K.hs_vector(sf, depth)
        for i in range(depth + 1):
            rhs = K.apply_sigma(d[i])
            rep.check("sigma_commutes", ds[i] == rhs,
                      lambda i=i, f=f, a=ds[i], b=rhs: {"i": i, "f": fmt(f),
                                                       "d_i(sigma f)": fmt(a), "sigma(d_i f)": fmt(b)})
        rep.check("sigma_invertible", K.sigma_inv(sf) == f, lambda f=f: {"f": fmt(f)})
    for a in base:
        da = K.hs_vector(a, depth)
        for b in base:
            db = K.hs_vector(b, depth)
            dab = K.hs_vector(a * b, depth)
            for n in range(depth + 1):
                rhs = F.zero
                for i in range(n + 1):
                    rhs = rhs + da[i] * db[n - i]
                rep.check("leibniz", dab[n] == rhs,
                          lambda n=n, a=a, b=b: {"n": n, "a": fmt(a), "b": fmt(b)})
    return rep
