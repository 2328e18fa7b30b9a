"""Batch front end: ``hopfck <group> <action> [flags]``.

Exit codes: 0 success, 1 domain or usage error, 2 verification failure.
All numbers are printed as exact ``p/q`` strings.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable

from . import forest_core
from .classify import (
    KINDS,
    FamilySpec,
    family_array,
    match_family,
    seq01_an,
    seq01_an_piecewise,
    seq01_an_via_cycle_index,
    seq01_classify_array,
)
from .forest_core import (
    LEAF,
    admissible_cuts,
    corolla,
    enumerate_trees,
    ladder,
    parse_tree,
    symmetry_factor,
    tree_factorial,
)
from .hopf_ck import Elem, antipode, coproduct
from .lambda_arrays import (
    LambdaArray,
    check_prelie,
    extract_lambda,
    homogeneity_check,
    nondegeneracy_failures,
    reconstruct_seq,
    strong_order,
)
from .rge import Char, c_triangle, feynman_phi, fit_beta, green_function, grge_residual
from .sequences import (
    PowerSeries,
    Seq,
    dse_solve,
    family_abc,
    family_cm,
    family_corollas,
    family_dse_ab,
    family_ladders,
    family_ladders_with_leaves,
    family_prelie_ext,
    family_zn,
    verify_subhopf,
)

EXIT_OK, EXIT_DOMAIN, EXIT_VERIFY = 0, 1, 2
GOLDEN_FORMAT = 1


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for verification failures here
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- families


def parse_params(text: str | None) -> dict[str, str]:
    if not text:
        return {}
    out = {}
    for item in text.split(","):
        key, sep, val = item.partition("=")
        if not sep or not key.strip() or not val.strip():
            raise UsageError(f"bad --params item {item!r}; expected k=v")
        out[key.strip()] = val.strip()
    return out


def _need(params: dict, *names: str) -> list[Fraction]:
    missing = [n for n in names if n not in params]
    if missing:
        raise UsageError(f"missing --params {', '.join(missing)}")
    extra = sorted(set(params) - set(names))
    if extra:
        raise UsageError(f"unexpected --params {', '.join(extra)}")
    return [Fraction(params[n]) for n in names]


def _int(x: Fraction, name: str) -> int:
    if x.denominator != 1:
        raise UsageError(f"{name} must be an integer")
    return int(x)


def _prelie_ext(N: int) -> Seq:
    # t_n = t_{n-2} grafted with the primitive 2 l_2 - o o
    X = Elem.parse("2*o[o] - o*o")
    s = family_prelie_ext([Elem.tree(LEAF), Elem.tree(ladder(2))], X, N)
    return Seq(s.gens, "prelie-ext")


def _corollas(params: dict, k: int | None, N: int) -> Seq:
    _need(params)
    return family_corollas(0 if k is None else k, N)


def _no_params(fn: Callable[[int], Seq]):
    def build(params, k, N):
        _need(params)
        return fn(N)
    return build


FAMILIES: dict[str, Callable[[dict, int | None, int], Seq]] = {
    "ladders": _no_params(family_ladders),
    "cm": _no_params(family_cm),
    "corollas": lambda p, k, N: _corollas(p, k, N),
    "scaled-corolla": lambda p, k, N: _corollas(p, k, N),
    "dse-ab": lambda p, k, N: family_dse_ab(*_need(p, "a", "b"), N),
    "dse-square": _no_params(lambda N: dse_solve(PowerSeries.polynomial(1, 2, 1), N, "dse-square")),
    "dse-geometric": _no_params(lambda N: dse_solve(PowerSeries.geometric(N), N, "dse-geometric")),
    "zn": lambda p, k, N: (lambda n, b: family_zn(_int(n, "n"), b, N))(*_need(p, "n", "b")),
    "prelie-ext": _no_params(_prelie_ext),
    "abc": lambda p, k, N: family_abc(*_need(p, "a", "b", "c"), N),
    "ladders-leaves": lambda p, k, N: family_ladders_with_leaves(*_need(p, "a", "b"), N),
}


def load_seq(name: str | None, params: dict, k: int | None, N: int) -> Seq:
    """A named sequence family, or any classification kind rebuilt from its array."""
    if not name:
        raise UsageError("--family is required")
    if name in FAMILIES:
        return FAMILIES[name](params, k, N)
    if name in KINDS:
        return reconstruct_seq(load_array(name, params, N), N)
    raise UsageError(f"unknown family {name!r}; choose from {sorted(FAMILIES) + sorted(KINDS)}")


def load_array(name: str, params: dict, N: int) -> LambdaArray:
    if name in KINDS:
        p = dict(params)
        if "coeffs" in p:
            p["coeffs"] = p["coeffs"].split(";")
        return family_array(FamilySpec.make(name, **p), N)
    return extract_lambda(load_seq(name, params, None, N))


def load_sigma(kind: str, seed: int | None, N: int) -> Char:
    if kind == "generic":
        return Char.generic(N)
    if kind == "tree-factorial":
        return Char.tree_factorial()
    if kind == "random":
        if seed is None:
            raise UsageError("--sigma random needs an explicit --seed")
        return Char.random(seed, N)
    raise UsageError(f"unknown --sigma {kind!r}")


# ---------------------------------------------------------------- output


def _dump(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True)


def _emit(args, obj, text: str) -> None:
    print(_dump(obj) if args.json else text)


# ---------------------------------------------------------------- trees / hopf


def cmd_trees_enumerate(args) -> int:
    trees = enumerate_trees(args.n)
    _emit(args, [str(t) for t in trees], "\n".join(map(str, trees)))
    return EXIT_OK


def cmd_trees_info(args) -> int:
    t = parse_tree(args.tree)
    cuts = admissible_cuts(t)
    obj = {
        "tree": str(t),
        "size": t.size,
        "symmetry_factor": symmetry_factor(t),
        "tree_factorial": tree_factorial(t),
        "cuts": [{"pruned": str(c.removed_part), "trunk": str(c.root_part)} for c in cuts],
    }
    lines = [f"{k}: {obj[k]}" for k in ("tree", "size", "symmetry_factor", "tree_factorial")]
    lines += [f"cut: {c['pruned']} | {c['trunk']}" for c in obj["cuts"]]
    _emit(args, obj, "\n".join(lines))
    return EXIT_OK


def cmd_hopf_coproduct(args) -> int:
    d = coproduct(Elem.parse(args.elem))
    _emit(args, d.to_json(), str(d))
    return EXIT_OK


def cmd_hopf_antipode(args) -> int:
    s = antipode(Elem.parse(args.elem))
    _emit(args, s.to_json(), str(s))
    return EXIT_OK


# ---------------------------------------------------------------- seq


def _seq_from_args(args) -> Seq:
    return load_seq(args.family, parse_params(args.params), args.k, args.N)


def cmd_seq_show(args) -> int:
    s = _seq_from_args(args)
    _emit(args, s.to_json(), s.to_text())
    return EXIT_OK


def _verify(args, s: Seq) -> int:
    rep = verify_subhopf(s)
    _emit(args, rep.to_json(), ("ok: " if rep.ok else "FAILED: ") + rep.message)
    return EXIT_OK if rep.ok else EXIT_VERIFY


def cmd_seq_verify(args) -> int:
    return _verify(args, _seq_from_args(args))


def cmd_seq_dse(args) -> int:
    coeffs = [Fraction(c) for c in args.coeffs.split(",")]
    s = dse_solve(PowerSeries(coeffs), args.N, "dse")
    if args.show:
        _emit(args, s.to_json(), s.to_text())
        return EXIT_OK
    return _verify(args, s)


# ---------------------------------------------------------------- lambda


def _array_from_args(args) -> LambdaArray:
    if args.rows:
        return LambdaArray.from_json(json.loads(Path(args.rows).read_text()))
    if not args.family:
        raise UsageError("give --family or --rows FILE")
    return load_array(args.family, parse_params(args.params), args.N) if args.family in KINDS \
        else extract_lambda(_seq_from_args(args))


def cmd_lambda_extract(args) -> int:
    a = _array_from_args(args)
    _emit(args, a.to_json(), a.to_text())
    return EXIT_OK


def cmd_lambda_reconstruct(args) -> int:
    a = _array_from_args(args)
    bad = check_prelie(a)
    if bad:
        print(f"pre-Lie relation fails at (i, j, k) = {bad[0]}", file=sys.stderr)
        return EXIT_VERIFY
    if nondegeneracy_failures(a):
        print(f"degenerate rows: {nondegeneracy_failures(a)}", file=sys.stderr)
        return EXIT_VERIFY
    s = reconstruct_seq(a, a.N)
    _emit(args, s.to_json(), s.to_text())
    return EXIT_OK


def cmd_lambda_order(args) -> int:
    a = _array_from_args(args)
    rep = strong_order(a)
    obj = rep.to_json()
    if args.homogeneity is not None:
        obj["homogeneous"] = bool(homogeneity_check(a, Fraction(args.homogeneity)))
    text = [f"strong order: {rep.strong_order}", f"leftmost exact: {rep.leftmost_exact}"]
    if rep.reason:
        text.append(f"note: {rep.reason}")
    text += [
        f"column {d.j}: samples {d.samples}, order >= {d.lower_bound}"
        + (" (determined)" if d.determined else "")
        for _, d in sorted(rep.per_diagonal.items())
    ]
    if "homogeneous" in obj:
        text.append(f"homogeneous with c={args.homogeneity}: {obj['homogeneous']}")
    _emit(args, obj, "\n".join(text))
    return EXIT_OK


# ---------------------------------------------------------------- classify


def cmd_classify_match(args) -> int:
    r = match_family(_array_from_args(args))
    _emit(args, r.to_json(), f"matched: {r.matched}" if r else f"no match; witness {r.failure_witness}")
    return EXIT_OK


def cmd_classify_array(args) -> int:
    if args.kind not in KINDS:
        raise UsageError(f"unknown kind {args.kind!r}; choose from {sorted(KINDS)}")
    a = load_array(args.kind, parse_params(args.params), args.N)
    _emit(args, a.to_json(), a.to_text())
    return EXIT_OK


def cmd_classify_seq01(args) -> int:
    found = seq01_classify_array(_array_from_args(args))
    _emit(args, [f.to_json() for f in found], "\n".join(map(str, found)) or "not a 0/1 array")
    return EXIT_OK


def cmd_classify_an(args) -> int:
    routes = {
        "series": seq01_an(args.m, args.n),
        "cycle_index": seq01_an_via_cycle_index(args.m, args.n),
        "piecewise": seq01_an_piecewise(args.m, args.n),
    }
    obj = {k: str(v) for k, v in routes.items()}
    _emit(args, obj, "\n".join(f"{k}: {v}" for k, v in obj.items()))
    return EXIT_OK if len(set(routes.values())) == 1 else EXIT_VERIFY


# ---------------------------------------------------------------- rge


def cmd_rge_phi(args) -> int:
    sigma = load_sigma(args.sigma, args.seed, max(args.N, 1))
    p = feynman_phi(sigma, Elem.parse(args.elem))
    _emit(args, p.to_json(), str(p))
    return EXIT_OK


def rge_order(s: Seq, sigma: Char, scale=1, max_m: int | None = None) -> dict:
    """Smallest m for which the Green function obeys an order-m equation on the window."""
    scale = Fraction(scale)
    lam = extract_lambda(s)
    tri = c_triangle(s, sigma, lam)
    rep = strong_order(lam)
    g = green_function(sigma, s, scale)
    out = {
        "family": s.name,
        "N": s.N,
        "sigma": sigma.name,
        "scale": str(scale),
        "oracle": tri.oracle,
        "lambda_strong_order": rep.strong_order,
        "leftmost_exact": rep.leftmost_exact,
        "fit": None,
        "failures": [],
    }
    top = s.N if max_m is None else max_m
    for m in range(top + 1):
        fr = fit_beta(tri, m, scale)
        if not fr:
            out["failures"].append({"m": m, "witness": list(fr.witness)})
            continue
        res = grge_residual(g, fr.system)
        out["fit"] = fr.to_json()
        out["order"] = m
        out["residual_zero"] = not any(res)
        out["gamma0_nonzero"] = not fr.system.homogeneous
        break
    return out


def cmd_rge_order(args) -> int:
    s = _seq_from_args(args)
    sigma = load_sigma(args.sigma, args.seed, args.N)
    obj = rge_order(s, sigma, args.scale)
    if obj["oracle"] == "mismatch":
        _emit(args, obj, "c-triangle disagrees with the Feynman-rule oracle")
        return EXIT_VERIFY
    if obj["fit"] is None:
        _emit(args, obj, "no equation of order <= N fits this window")
        return EXIT_VERIFY
    text = [
        f"family: {obj['family']}  sigma: {obj['sigma']}  N: {obj['N']}",
        f"order: {obj['order']}",
        f"gamma0 nonzero: {obj['gamma0_nonzero']}",
        f"residual zero: {obj['residual_zero']}",
        f"strong order from structure constants: {obj['lambda_strong_order']}",
        f"oracle: {obj['oracle']}",
    ]
    text += [f"order {f['m']} fails at c{tuple(f['witness'])}" for f in obj["failures"]]
    _emit(args, obj, "\n".join(text))
    return EXIT_OK if obj["residual_zero"] else EXIT_VERIFY


# ---------------------------------------------------------------- golden vectors


def _seq_block(s: Seq, n: int) -> dict:
    return s.truncate(n).to_json()


def _golden_builders() -> dict[str, Callable[[], dict]]:
    def coproducts(make):
        return lambda: {str(n): coproduct(make(n)).to_json() for n in range(1, 7)}

    def seq_and_lambda(make, N=8, shown=5):
        def build():
            s = make(N)
            return {"seq": _seq_block(s, shown), "lambda": extract_lambda(s).to_json()}
        return build

    def seq01():
        specs = [
            FamilySpec.make("Seq01AllOnes"),
            FamilySpec.make("Seq01A", m=3),
            FamilySpec.make("Seq01B", m=3),
            FamilySpec.make("Seq01C", m=3),
        ]
        return {str(sp): family_array(sp, 9).to_json() for sp in specs}

    def seq01_corolla_coeffs():
        return {
            str(m): {str(n): str(seq01_an(m, n)) for n in range(1, 7)} for m in (2, 3)
        }

    def scaled_corolla_rge():
        return rge_order(family_corollas(1, 7), Char.generic(7))

    return {
        "ladder_coproducts": coproducts(ladder),
        "corolla_coproducts": coproducts(corolla),
        "dse_square": lambda: _seq_block(dse_solve(PowerSeries.polynomial(1, 2, 1), 5, "dse-square"), 5),
        "dse_geometric": lambda: _seq_block(dse_solve(PowerSeries.geometric(5), 5, "dse-geometric"), 5),
        "cm": seq_and_lambda(family_cm),
        "zn_3_2": seq_and_lambda(lambda N: family_zn(3, 2, N)),
        "abc_1_1_1": seq_and_lambda(lambda N: family_abc(1, 1, 1, N)),
        "prelie_ext": seq_and_lambda(_prelie_ext),
        "seq01_triangles": seq01,
        "seq01_corolla_coeffs": seq01_corolla_coeffs,
        "scaled_corolla_rge": scaled_corolla_rge,
    }


def golden_payloads() -> dict[str, str]:
    """File name -> exact file contents."""
    out = {}
    for name, build in sorted(_golden_builders().items()):
        doc = {"format": GOLDEN_FORMAT, "name": name, "data": build()}
        out[f"{name}.json"] = _dump(doc) + "\n"
    return out


def golden_regen(path: Path) -> list[Path]:
    path.mkdir(parents=True, exist_ok=True)
    written = []
    for fname, text in golden_payloads().items():
        p = path / fname
        p.write_text(text)
        written.append(p)
    return written


def golden_check(path: Path) -> list[str]:
    """Names of fixtures that are missing or differ from a fresh regeneration."""
    bad = []
    for fname, text in golden_payloads().items():
        p = path / fname
        if not p.exists() or p.read_text() != text:
            bad.append(fname)
    return bad


def cmd_golden_regen(args) -> int:
    written = golden_regen(Path(args.path))
    _emit(args, [p.name for p in written], "\n".join(str(p) for p in written))
    return EXIT_OK


def cmd_golden_check(args) -> int:
    bad = golden_check(Path(args.path))
    _emit(args, {"stale": bad}, "\n".join(f"stale: {b}" for b in bad) or "all fixtures current")
    return EXIT_VERIFY if bad else EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-N", type=int, default=8, help="truncation degree (default 8)")
    common.add_argument("--json", action="store_true", help="print JSON instead of text")
    common.add_argument("--seed", type=int, default=None)

    fam = _Parser(add_help=False)
    fam.add_argument("--family", help="sequence family or classification kind")
    fam.add_argument("--params", help="k=v,... (rationals as p/q)")
    fam.add_argument("--k", type=int, default=None, help="corolla exponent")

    arr = _Parser(add_help=False, parents=[fam])
    arr.add_argument("--rows", help="JSON file with triangle rows")

    p = _Parser(prog="hopfck", description=__doc__.splitlines()[0])
    groups = p.add_subparsers(dest="group", required=True)

    def action(group, name, fn, parents=(), **kw):
        sp = group.add_parser(name, parents=[common, *parents], **kw)
        sp.set_defaults(fn=fn)
        return sp

    g = groups.add_parser("trees").add_subparsers(dest="action", required=True)
    action(g, "enumerate", cmd_trees_enumerate).add_argument("-n", type=int, required=True)
    action(g, "info", cmd_trees_info).add_argument("tree")

    g = groups.add_parser("hopf").add_subparsers(dest="action", required=True)
    action(g, "coproduct", cmd_hopf_coproduct).add_argument("elem")
    action(g, "antipode", cmd_hopf_antipode).add_argument("elem")

    g = groups.add_parser("seq").add_subparsers(dest="action", required=True)
    action(g, "show", cmd_seq_show, [fam])
    action(g, "verify", cmd_seq_verify, [fam])
    sp = action(g, "dse", cmd_seq_dse)
    sp.add_argument("--coeffs", required=True, help="f as c0,c1,... with c0 = 1")
    sp.add_argument("--show", action="store_true", help="print the solution instead of verifying")

    g = groups.add_parser("lambda").add_subparsers(dest="action", required=True)
    action(g, "extract", cmd_lambda_extract, [arr])
    action(g, "reconstruct", cmd_lambda_reconstruct, [arr])
    action(g, "order", cmd_lambda_order, [arr]).add_argument(
        "--homogeneity", default=None, help="also test homogeneity with this extension value"
    )

    g = groups.add_parser("classify").add_subparsers(dest="action", required=True)
    action(g, "match", cmd_classify_match, [arr])
    sp = action(g, "array", cmd_classify_array)
    sp.add_argument("--kind", required=True)
    sp.add_argument("--params", help="k=v,...; coeffs as c0;c1;...")
    action(g, "seq01", cmd_classify_seq01, [arr])
    sp = action(g, "an", cmd_classify_an)
    sp.add_argument("-m", type=int, required=True)
    sp.add_argument("-n", type=int, required=True)

    g = groups.add_parser("rge").add_subparsers(dest="action", required=True)
    sp = action(g, "order", cmd_rge_order, [fam])
    sp.add_argument("--sigma", default="generic", help="generic | tree-factorial | random")
    sp.add_argument("--scale", default="1", help="G_n = scale * phi(t_n)")
    sp = action(g, "phi", cmd_rge_phi)
    sp.add_argument("elem")
    sp.add_argument("--sigma", default="generic")

    g = groups.add_parser("golden").add_subparsers(dest="action", required=True)
    action(g, "regen", cmd_golden_regen).add_argument("path")
    action(g, "check", cmd_golden_check).add_argument("path")
    return p


def run(argv: list[str]) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.N < 1:
            raise UsageError("-N must be positive")
        if args.N > forest_core.nmax():
            raise UsageError(f"-N {args.N} exceeds HOPFCK_NMAX={forest_core.nmax()}")
        return args.fn(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, ZeroDivisionError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DOMAIN


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
