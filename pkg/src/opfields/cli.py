"""Command-line front end.

Exit codes: 0 ok, 2 invalid input, 3 algebra axiom failure, 4 depth bound,
5 verification failure.
"""
from __future__ import annotations

import argparse
import sys

from . import algebra as alg
from . import difference as dm
from . import linalg as la
from . import monoid as mn
from . import prolong as pr
from .expr import ParseError
from .jsonio import (InputError, algebra_ref, difference_module_to_dict, difference_module_from_dict, dumps,
                     ideal_from_dict, operator_field_from_dict, read_json)
from .modules import ModuleError
from .report import Report
from .scalars import DepthError, Field, OperatorField, parse_field, verify_operator_field

OK, PARSE, AXIOM, DEPTH, FAILED = 0, 2, 3, 4, 5


class Failure(Exception):
    def __init__(self, code, payload):
        self.code = code
        self.payload = payload
        super().__init__(str(payload))


def _field_from_char(p) -> Field:
    try:
        return Field(p) if p == 0 else parse_field(f"F{p}")
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _table_report(rep: dict, indent="") -> list:
    lines = [f"{indent}{rep['title']}: {'PASS' if rep['ok'] else 'FAIL'}"]
    for c in rep["checks"]:
        mark = "ok  " if c["pass"] else "FAIL"
        line = f"{indent}  {mark} {c['name']} ({c['cases']})"
        if not c["pass"] and c["witness"] is not None:
            line += f"  witness: {c['witness']}"
        lines.append(line)
    return lines


# -- free-monoid --------------------------------------------------------------

def cmd_free_monoid(args):
    F = _field_from_char(args.char)
    if args.base in ("dual-numbers",) or args.base.startswith("truncated:"):
        E = algebra_ref(args.base, F)
        named = args.base
    else:
        E = algebra_ref(read_json(args.base))
        named = args.base
    ar = alg.check_algebra_axioms(E)
    if not ar.ok:
        raise Failure(AXIOM, {"base": named, "report": ar.to_dict()})
    if E.counit is None:
        raise InputError("the base algebra needs a counit (a rational point)")
    if args.depth < 0:
        raise InputError("depth must be non-negative")
    T = mn.free_monoid(E, args.depth, abelian=args.abelian)
    tr = T.check()
    out = {"base": E.to_dict(), "abelian": args.abelian, "dims": [T.level(n).dim for n in range(T.depth + 1)],
           "tower": T.to_dict(), "report": tr.to_dict()}
    if E.dim == 2 and not args.abelian and E.mul[1][1] == [E.field.zero, E.field.zero]:
        n = T.depth
        gens = mn.free_generators(T, n)
        top = T.level(n)
        out["products"] = {f"e{i}*e{j}": _fmt_in_generators(E.field, top.multiply(gens[i], gens[j]), gens)
                           for i in range(1, n + 1) for j in range(i, n + 1 - i)}
        ps = mn.power_series_monoid(E.field, n)
        maps = mn.lift_map(ps, la.identity(E.field, 2), E, T)
        inv = [la.is_invertible(E.field, f.matrix) for f in maps]
        out["lift_x_to_e1"] = {"invertible_by_level": inv, "isomorphism": all(inv),
                               "coalgebra_map": mn.check_lift(ps, T, maps).ok}
    if not tr.ok:
        raise Failure(AXIOM, out)
    return out


def _fmt_in_generators(F, v, gens):
    n = len(gens)
    basis = la.from_columns(F, gens, len(v))
    c = la.solve(F, basis, v, n)
    parts = []
    for i, a in enumerate(c):
        if a:
            s = F.fmt(a)
            parts.append(f"e{i}" if a == F.one else (f"({s})*e{i}" if " " in s else f"{s}*e{i}"))
    return " + ".join(parts) if parts else "0"


def table_free_monoid(out):
    lines = [f"free monoid, dims {out['dims']}"]
    for k, v in out.get("products", {}).items():
        lines.append(f"  {k} = {v}")
    if "lift_x_to_e1" in out:
        lt = out["lift_x_to_e1"]
        lines.append(f"  x -> e1 invertible by level: {lt['invertible_by_level']}")
    lines += _table_report(out["report"], "  ")
    return lines


# -- cartier-dual -------------------------------------------------------------

def _tower_from_arg(name, F, depth):
    if name in ("additive", "multiplicative"):
        return mn.power_series_monoid(F, depth, name)
    if name in ("N", "Z") or name.startswith("Z/"):
        return mn.discrete_monoid_truncation(F, name, depth)
    try:
        T = mn.tower_from_dict(read_json(name))
    except (KeyError, TypeError, ParseError) as exc:
        raise InputError(f"bad tower file: {exc}") from exc
    r = T.check()
    if not r.ok:
        raise Failure(AXIOM, {"tower": name, "report": r.to_dict()})
    return T


def cmd_cartier_dual(args):
    F = _field_from_char(args.char)
    T = _tower_from_arg(args.tower, F, args.depth)
    C = mn.cartier_dual(T)
    fmt = lambda v: [C.field.fmt(a) for a in v]
    consts = {f"{k},{l}": {f"{i},{j}": fmt(v) for (i, j), v in sorted(d.items())}
              for (k, l), d in sorted(C.structure_constants().items())}
    rep = C.check()
    out = {"tower": T.kind, "field": T.field.name, "depth": C.depth, "structure_constants": consts,
           "report": rep.to_dict()}
    if not rep.ok:
        raise Failure(FAILED, out)
    return out


def table_cartier_dual(out):
    lines = [f"Cartier dual of {out['tower']} over {out['field']} through level {out['depth']}"]
    top = out["structure_constants"]
    N = out["depth"]
    for key, d in top.items():
        k, l = (int(x) for x in key.split(","))
        if k + l != N:
            continue
        for ij, v in d.items():
            nz = [f"u{r}" if c.split(" mod ")[0] == "1" else f"{c}*u{r}"
                  for r, c in enumerate(v) if c.split(" mod ")[0] != "0"]
            i, j = ij.split(",")
            lines.append(f"  [{k},{l}] u{i}*u{j} = {' + '.join(nz) if nz else '0'}")
    lines += _table_report(out["report"], "  ")
    return lines


# -- jet ----------------------------------------------------------------------

def _action(kind, K, depth):
    P = K.field.prime_field()
    if kind == "trivial":
        return mn.make_action(mn.power_series_monoid(P, depth), K, "trivial")
    if kind == "hs":
        return mn.make_action(mn.power_series_monoid(P, depth), K, "hs")
    if kind == "shift":
        return mn.make_action(mn.discrete_monoid_truncation(P, "N", depth), K, "shift")
    if kind == "free":
        return mn.make_action(mn.free_monoid(alg.dual_numbers(P), depth), K, "free")
    raise InputError(f"unknown action {kind!r}")


def cmd_jet(args):
    d = read_json(args.ideal)
    F, names, gens = ideal_from_dict(d)
    if args.level < 0:
        raise InputError("level must be non-negative")
    depth = args.level if args.depth is None else args.depth
    if args.level > depth:
        raise DepthError(f"level {args.level} exceeds depth {depth}")
    desc = {"field": F.name,
            "sigma": d.get("sigma", "shift" if args.action == "shift" and F.function else "identity"),
            "hs": d.get("hs", "divided" if F.function else "trivial")}
    K = operator_field_from_dict(desc)
    A = _action(args.action, K, depth)
    out = {"field": F.name, "level": args.level, "action": args.action}
    if args.level == 0:
        out.update({"vars": names, "gens": [g.to_json() for g in gens], "display": [g.fmt(names) for g in gens],
                    "input": d["gens"]})
        return out
    J = pr.jet_ideal(gens, args.level, A, names)
    out.update(J.to_dict())
    out["action"] = args.action
    out["blocks"] = [[b.fmt(J.names) for b in blk] for blk in J.blocks]
    rep = J.check_projection()
    out["report"] = rep.to_dict()
    if not rep.ok:
        raise Failure(FAILED, out)
    return out


def table_jet(out):
    lines = [f"jet ideal at level {out['level']} ({out['action']}) over {out['field']}"]
    if "blocks" not in out:
        return lines + [f"  {g}" for g in out["display"]]
    for g, blk in enumerate(out["blocks"]):
        for a, p in enumerate(blk):
            lines.append(f"  generator {g}, x^{a}: {p}")
    return lines


# -- taumod -------------------------------------------------------------------

def _samples(K):
    F = K.field
    if F.function:
        t = F.t()
        return [t, 1 / (t + 1)]
    return [F(1), F(2)]


def cmd_taumod(args):
    d = read_json(args.module)
    k = args.level
    if k < 0:
        raise InputError("level must be non-negative")
    depth = args.depth if args.depth is not None else d.get("depth", 2 * k if args.check else k)
    if not isinstance(depth, int):
        raise InputError("depth must be an integer")
    M = difference_module_from_dict(dict(d, depth=depth), depth)
    K = M.K
    if k > depth:
        raise DepthError(f"level {k} exceeds depth {depth}")
    P = dm.tau_k(M, k)
    F = K.field
    samples = _samples(K)
    rep = Report(f"tau_{k}")
    rep.merge(verify_operator_field(K, min(depth, 3), samples), "operator_field.")
    rep.merge(P.check(samples), "prolongation.")
    if args.check:
        rule = d.get("b_rule", "standard")
        if rule not in ("standard", "sabotaged"):
            raise InputError(f"unknown b_rule {rule!r}")
        D = dm.build_estructure(K, M, k, k, rule)
        rep.merge(dm.verify_etensor(D, samples), "etensor.")
    out = {"module": difference_module_to_dict(M), "level": k, "dim": P.dim,
           "sigma_matrix": la.fmt_matrix(F, P.S), "x_matrix": la.fmt_matrix(F, P.X), "report": rep.to_dict()}
    if not rep.ok:
        raise Failure(FAILED, out)
    return out


def table_taumod(out):
    lines = [f"tau_{out['level']} of a dimension {out['module']['dim']} module: dimension {out['dim']}"]
    lines.append("  Sigma on the d-basis:")
    lines += [f"    {row}" for row in out["sigma_matrix"]]
    lines += _table_report(out["report"], "  ")
    return lines


# -- action -------------------------------------------------------------------

def cmd_action(args):
    try:
        F = parse_field(args.field)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    sigma = args.sigma or ("shift" if args.action == "shift" else "identity")
    hs = args.hs or ("divided" if F.function else "trivial")
    K = operator_field_from_dict({"field": F.name, "sigma": sigma, "hs": hs})
    depth = args.level if args.depth is None else args.depth
    if args.level > depth:
        raise DepthError(f"level {args.level} exceeds depth {depth}")
    A = _action(args.action, K, depth)
    try:
        scalars = [F(s) for s in (args.scalar or (["t"] if F.function else ["2"]))]
    except (ParseError, ValueError, ZeroDivisionError) as exc:
        raise InputError(f"bad scalar: {exc}") from exc
    values = {F.fmt(a): [[F.fmt(c) for c in A.mu(n, a)] for n in range(args.level + 1)] for a in scalars}
    rep = mn.verify_action(A, scalars, args.level)
    out = {"field": F.name, "action": A.kind, "tower": A.tower.kind, "level": args.level, "mu": values,
           "report": rep.to_dict()}
    if not rep.ok:
        raise Failure(FAILED, out)
    return out


def table_action(out):
    lines = [f"{out['action']} action of {out['tower']} on {out['field']}"]
    for a, levels in out["mu"].items():
        for n, v in enumerate(levels):
            lines.append(f"  mu_{n}({a}) = {v}")
    lines += _table_report(out["report"], "  ")
    return lines


# -- check --------------------------------------------------------------------

def cmd_check(args):
    from .acceptance import run_suite
    try:
        results = run_suite(args.suite, args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    out = {"suite": args.suite, "seed": args.seed, "ok": all(r["ok"] for r in results), "criteria": results}
    if not out["ok"]:
        raise Failure(FAILED, out)
    return out


def table_check(out):
    lines = [f"suite {out['suite']} (seed {out['seed']})"]
    for r in out["criteria"]:
        lines.append(f"criterion {r['criterion']}: {'PASS' if r['ok'] else 'FAIL'} {r['name']} over {', '.join(r['fields'])}")
        for f in r["failures"]:
            lines.append(f"    {f}: {r['witness'][f]}")
    return lines


COMMANDS = {
    "free-monoid": (cmd_free_monoid, table_free_monoid),
    "cartier-dual": (cmd_cartier_dual, table_cartier_dual),
    "jet": (cmd_jet, table_jet),
    "taumod": (cmd_taumod, table_taumod),
    "action": (cmd_action, table_action),
    "check": (cmd_check, table_check),
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--output", help="write here instead of stdout")
    p = argparse.ArgumentParser(prog="opfields", description="Formal monoids, jets and difference E-structures.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("free-monoid", parents=[common], help="free monoid on a pointed algebra")
    s.add_argument("base", nargs="?", default="dual-numbers", help='algebra JSON file, "dual-numbers" or "truncated:n"')
    s.add_argument("--depth", type=int, default=3)
    s.add_argument("--char", type=int, default=0)
    s.add_argument("--abelian", action="store_true")

    s = sub.add_parser("cartier-dual", parents=[common], help="graded dual of a commutative tower")
    s.add_argument("tower", nargs="?", default="additive",
                   help='"additive", "multiplicative", "N", "Z", "Z/m" or a tower JSON file')
    s.add_argument("--depth", type=int, default=4)
    s.add_argument("--char", type=int, default=0)

    s = sub.add_parser("jet", parents=[common], help="jet ideal of an affine scheme")
    s.add_argument("ideal", help="ideal JSON file")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--depth", type=int)
    s.add_argument("--action", choices=("trivial", "hs", "shift", "free"), default="trivial")

    s = sub.add_parser("taumod", parents=[common], help="prolongation of a difference module")
    s.add_argument("module", help="difference module JSON file")
    s.add_argument("--level", type=int, default=1)
    s.add_argument("--depth", type=int)
    s.add_argument("--check", action="store_true", help="run every E-structure diagram up to the level")

    s = sub.add_parser("action", parents=[common], help="evaluate and verify a monoid action")
    s.add_argument("--field", default="Q(t)")
    s.add_argument("--sigma", choices=("identity", "shift"))
    s.add_argument("--hs", choices=("trivial", "divided"))
    s.add_argument("--action", choices=("trivial", "hs", "shift", "free"), default="hs")
    s.add_argument("--level", type=int, default=2)
    s.add_argument("--depth", type=int)
    s.add_argument("--scalar", action="append")

    s = sub.add_parser("check", parents=[common], help="run the acceptance batteries")
    s.add_argument("--suite", choices=("kernel", "monoid", "jets", "galois", "controls", "all"), default="all")
    s.add_argument("--seed", type=int, default=0)
    return p


def _render(out, render):
    try:
        return render(out)
    except KeyError:
        # failure payloads before the main object was built carry only the report
        return _table_report(out["report"])


def _emit(args, out, render):
    text = dumps(out) if args.format == "json" else "\n".join(_render(out, render)) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    run, render = COMMANDS[args.command]
    try:
        out = run(args)
    except Failure as exc:
        _emit(args, exc.payload, render)
        return exc.code
    except DepthError as exc:
        sys.stderr.write(f"depth error: {exc}\n")
        return DEPTH
    except alg.AlgebraError as exc:
        sys.stderr.write(f"algebra error: {exc}\n")
        return AXIOM
    except (InputError, ParseError, ModuleError, mn.TowerError, ValueError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return PARSE
    _emit(args, out, render)
    return OK


if __name__ == "__main__":
    sys.exit(main())
