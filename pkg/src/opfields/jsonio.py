"""JSON ingestion and emission for algebras, towers, modules, ideals and difference modules."""
from __future__ import annotations

import json
from fractions import Fraction

from .algebra import AlgebraError, FiniteAlgebra, algebra_from_dict, dual_numbers, truncated
from .expr import ParseError
from .modules import FModule
from .scalars import Field, Fp, OperatorField, RatFunc, format_ratfunc, parse_field


class InputError(ValueError):
    pass


def to_jsonable(x):
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, Fp):
        return f"{x.v} mod {x.p}"
    if isinstance(x, RatFunc):
        return format_ratfunc(x)
    if hasattr(x, "to_dict"):
        return to_jsonable(x.to_dict())
    return str(x)


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False) + "\n"


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _field(d, default=None):
    name = d.get("field", default)
    if name is None:
        raise InputError("missing field")
    try:
        return parse_field(name)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _scalars(F, data, what):
    try:
        return [F(x) if not isinstance(x, list) else _scalars(F, x, what) for x in data]
    except (ParseError, ValueError, TypeError, ZeroDivisionError) as exc:
        raise InputError(f"bad scalar in {what}: {exc}") from exc


# -- algebras ---------------------------------------------------------------

def algebra_ref(ref, F: Field | None = None) -> FiniteAlgebra:
    """"dual-numbers", "truncated:n" or an inline algebra dict."""
    if isinstance(ref, str):
        F = F or Field(0)
        if ref == "dual-numbers":
            return dual_numbers(F)
        if ref.startswith("truncated:"):
            return truncated(F, int(ref.split(":", 1)[1]))
        raise InputError(f"unknown algebra reference {ref!r}")
    if not isinstance(ref, dict):
        raise InputError("an algebra is a name or an object")
    try:
        return algebra_from_dict(ref, F)
    except (KeyError, TypeError, ParseError) as exc:
        raise InputError(f"bad algebra: {exc}") from exc
    except ValueError as exc:
        if isinstance(exc, AlgebraError):
            raise
        raise InputError(f"bad algebra: {exc}") from exc


# -- modules ----------------------------------------------------------------

def module_to_dict(X: FModule):
    F = X.field
    return {"algebra": X.algebra.to_dict(), "dim": X.dim,
            "action": [[[F.fmt(a) for a in row] for row in R] for R in X.rho]}


def module_from_dict(d, F: Field | None = None) -> FModule:
    E = algebra_ref(d.get("algebra"), F)
    try:
        n = int(d["dim"])
        rho = [_scalars(E.field, R, "action") for R in d["action"]]
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad module: {exc}") from exc
    if len(rho) != E.dim or any(len(R) != n or any(len(r) != n for r in R) for R in rho):
        raise InputError("module action matrices have the wrong shape")
    return FModule(E, n, rho, d.get("label", ""))


# -- operator fields and difference modules --------------------------------

def operator_field_from_dict(d, depth=None) -> OperatorField:
    F = _field(d)
    sigma = d.get("sigma", "identity")
    if isinstance(sigma, dict) and "scale" in sigma:
        sigma = ("scale", F.prime_field()(sigma["scale"]))
    hs = d.get("hs", "trivial")
    if sigma not in ("identity", "shift") and not isinstance(sigma, tuple):
        raise InputError(f"unknown sigma {sigma!r}")
    if hs not in ("trivial", "divided"):
        raise InputError(f"unknown hs family {hs!r}")
    try:
        return OperatorField(F, sigma, hs, depth=d.get("depth", depth))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def operator_field_to_dict(K: OperatorField):
    sg = K.sigma_kind
    if isinstance(sg, tuple):
        sg = {"scale": K.field.prime_field().fmt(sg[1])}
    out = {"field": K.field.name, "sigma": sg, "hs": K.hs_kind if isinstance(K.hs_kind, str) else "custom"}
    if K.depth is not None:
        out["depth"] = K.depth
    return out


def difference_module_from_dict(d, depth=None):
    from .difference import DifferenceModule
    K = operator_field_from_dict(d, depth)
    try:
        A = _scalars(K.field, d["matrix"], "matrix")
    except KeyError as exc:
        raise InputError("difference module needs a matrix") from exc
    n = int(d.get("dim", len(A)))
    if len(A) != n or any(len(r) != n for r in A):
        raise InputError("difference module matrix must be dim x dim")
    try:
        return DifferenceModule(K, A, d.get("label", "M"))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def difference_module_to_dict(M):
    F = M.K.field
    out = operator_field_to_dict(M.K)
    out.update({"dim": M.n, "matrix": [[F.fmt(a) for a in row] for row in M.A]})
    return out


# -- ideals -----------------------------------------------------------------

def ideal_from_dict(d, F: Field | None = None):
    """Returns (field, names, gens).  Generators are sparse [[coeff, exponents], ...] or strings."""
    from .prolong import parse_poly, poly_from_json
    F = F or _field(d, "Q")
    try:
        names = list(d["vars"])
        raw = d["gens"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"bad ideal: {exc}") from exc
    gens = []
    for g in raw:
        try:
            if isinstance(g, str):
                gens.append(parse_poly(F, names, g))
            else:
                if any(len(e) != len(names) for _, e in g):
                    raise InputError("exponent vector length differs from the variable count")
                gens.append(poly_from_json(F, len(names), g))
        except (ParseError, ValueError, TypeError) as exc:
            if isinstance(exc, InputError):
                raise
            raise InputError(f"bad generator {g!r}: {exc}") from exc
    return F, names, gens


def ideal_to_dict(F: Field, names, gens):
    return {"field": F.name, "vars": list(names), "gens": [g.to_json() for g in gens]}
