"""Command line front end.

Subcommands mirror the library: `cosets`, `classify`, `germ`, `structure`,
`psi`, `join`, `verify`. Every command accepts --json for canonical
machine-readable output (sorted keys, compact separators, one line), which
round-trips byte-identically through json.loads/dumps.

Exit codes are part of the interface:

* 0 - success / affirmative answer
* 1 - a definite negative mathematical answer (the report is still valid)
* 2 - input error: malformed JSON, unknown names, bad arguments
* 3 - numeric indeterminacy: the computation could not settle the question
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .cosets import (CELLS, FiniteGroup, classify_wa_pair, double_cosets,
                     intersection_type, pm_double_cosets)
from .dline import classification_to_json, compose_diffeo, diffeo_classes, psi, same_structure
from .errors import (DomainError, GlueInfeasible, IncompatiblePresentations,
                     NotJoinable, TwoOriginsError)
from .germs import (NONEXISTENT, Germ, NumericGerm, Tri, compose, germ_from_json,
                    germ_match, germ_to_json, invert, jet_of, smoothness_at_zero)
from .join import (NumericDiffeo, chain_from_json, collapse_chain,
                   collapse_to_json, verify_ck_numeric)
from .realnum import real_sqrt

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


class _InputProblem(Exception):
    """Internal: anything that should terminate with exit code 2."""


def _load_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _InputProblem(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise _InputProblem(f"{path}: invalid JSON: {exc}") from exc


def _print_json(payload) -> None:
    print(json.dumps(payload, sort_keys=True, separators=(",", ":")))


def _rational(text: str) -> Fraction:
    """Exact parse of CLI numbers: '2', '0.5' and '1/3' all stay rational."""
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc


def _entry_json(v):
    if v is NONEXISTENT:
        return "nonexistent"
    if v is None:
        return None
    return float(v)


def _germ_arg(path: str) -> Germ:
    d = _load_json(path)
    try:
        return germ_from_json(d)
    except DomainError as exc:
        raise _InputProblem(f"{path}: {exc}") from exc


def _germ_text(g: Germ) -> str:
    d = germ_to_json(g)

    def side(terms, var):
        if not terms:
            return "0"
        return " + ".join(f"{t['c']:g}*{var}^{t['e']:g}" for t in terms)

    return (f"neg: {side(d['neg'], '(-x)')}   pos: {side(d['pos'], 'x')}   "
            f"[{d['orientation']}]")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_cosets(args) -> int:
    data = _load_json(args.group)
    group, subgroups = FiniteGroup.from_json(data)

    def sub(name):
        if name not in subgroups:
            raise _InputProblem(
                f"unknown subgroup {name!r}; the file defines {sorted(subgroups)}")
        return subgroups[name]

    if args.pm:
        part = pm_double_cosets(group, sub(args.D))
        title = f"({args.D}, +/-) double cosets of {group.name}"
    else:
        if args.C is None:
            raise _InputProblem("--C is required unless --pm is given")
        part = double_cosets(group, sub(args.C), sub(args.D))
        title = f"{args.C}\\{group.name}/{args.D} double cosets"

    if args.json:
        _print_json(part.to_json())
    else:
        print(title)
        for block in part.named_blocks():
            print("  {" + ", ".join(block) + "}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    cls_, witnesses = diffeo_classes(args.a, args.b, args.k)
    itype = intersection_type(args.a, args.b, args.k)
    if args.json:
        payload = classification_to_json(cls_, witnesses)
        payload["a"] = float(args.a)
        payload["b"] = float(args.b)
        payload["k"] = args.k
        payload["intersection"] = itype
        _print_json(payload)
    else:
        print(f"structures w_a, w_b with a={args.a}, b={args.b} (order {args.k})")
        width = max(len(cls_.witness_kind.get(c, "")) for c in CELLS)
        width = max(width, len("(empty)"))

        def cell(c):
            return (cls_.witness_kind[c] if cls_.nonempty[c] else "(empty)").ljust(width)

        print(f"  {'':10s} {'preserving':<{width}s} {'reversing':<{width}s}")
        print(f"  {'fix':10s} {cell('fix+')} {cell('fix-')}")
        print(f"  {'exchange':10s} {cell('ex+')} {cell('ex-')}")
        print(f"  intersection_type: {itype}")
    return EXIT_OK if cls_.any_nonempty() else EXIT_NEGATIVE


def _cmd_germ(args) -> int:
    if args.germ_op == "compose":
        g = _germ_arg(args.g)
        h = _germ_arg(args.h)
        out = compose(g, h)
        if isinstance(out, NumericGerm):
            print("the composite is not closed-form representable; its jets "
                  "are only available numerically", file=sys.stderr)
            return EXIT_NUMERIC
        if args.json:
            _print_json(germ_to_json(out))
        else:
            print(_germ_text(out))
        return EXIT_OK
    if args.germ_op == "invert":
        h = _germ_arg(args.h)
        out = invert(h)
        if isinstance(out, NumericGerm):
            print("the inverse is not closed-form representable; its jets "
                  "are only available numerically", file=sys.stderr)
            return EXIT_NUMERIC
        if args.json:
            _print_json(germ_to_json(out))
        else:
            print(_germ_text(out))
        return EXIT_OK
    # jet
    h = _germ_arg(args.h)
    jet = jet_of(h, args.order)
    if args.json:
        _print_json({"order": jet.order,
                     "neg": [_entry_json(v) for v in jet.neg],
                     "pos": [_entry_json(v) for v in jet.pos]})
    else:
        for j in range(jet.order):
            print(f"  f^({j + 1})(0-) = {_entry_json(jet.neg[j])}    "
                  f"f^({j + 1})(0+) = {_entry_json(jet.pos[j])}")
    return EXIT_OK


def _obstruction_payload(rep):
    if rep.obstruction is None:
        return None
    o = rep.obstruction
    return {"order": o.order, "neg": _entry_json(o.neg), "pos": _entry_json(o.pos)}


def _cmd_structure(args) -> int:
    h = _germ_arg(args.h)
    g = _germ_arg(args.g)
    verdict = same_structure(h, g, args.k)

    q = compose(g, invert(h))
    rep = smoothness_at_zero(q, args.k)
    payload = {
        "same": {Tri.TRUE: "true", Tri.FALSE: "false",
                 Tri.INDETERMINATE: "indeterminate"}[verdict],
        "k": args.k,
        "max_order": rep.max_order,
        "obstruction": _obstruction_payload(rep),
    }
    try:
        rep_inv = smoothness_at_zero(invert(q), args.k)
        payload["inverse_obstruction"] = _obstruction_payload(rep_inv)
    except DomainError:
        payload["inverse_obstruction"] = None

    if args.json:
        _print_json(payload)
    else:
        print(f"same C^{args.k} structure: {payload['same']}")
        for key in ("obstruction", "inverse_obstruction"):
            o = payload[key]
            if o is not None:
                print(f"  {key} at order {o['order']}: "
                      f"{o['neg']} vs {o['pos']}")
    if verdict is Tri.TRUE:
        return EXIT_OK
    if verdict is Tri.FALSE:
        return EXIT_NEGATIVE
    return EXIT_NUMERIC


def _cmd_psi(args) -> int:
    d = psi(args.a)
    payload = {
        "a": float(args.a),
        "origin_action": d.origin_action,
        "restriction": germ_to_json(d.restriction),
        "presentations": {"a": germ_to_json(d.pres_a), "b": germ_to_json(d.pres_b)},
    }
    ok = True
    if args.selfcheck:
        root = real_sqrt(args.a)
        inv_root = 1 / root
        # pres_a is x -> -x/sqrt(a); its inverse is x -> -sqrt(a)*x, i.e. pres_b
        want_a = Germ.from_sides([(inv_root, 1)], [(-inv_root, 1)])
        square = compose_diffeo(d, d)
        checks = {
            "square_is_identity": square.is_identity(),
            "pres_a_closed_form": germ_match(d.pres_a, want_a) is Tri.TRUE,
            "pres_b_closed_form": germ_match(
                d.pres_b, invert(want_a)) is Tri.TRUE,
            "certificate": d.certificate is Tri.TRUE,
        }
        ok = all(checks.values())
        payload["selfcheck"] = checks
    if args.json:
        _print_json(payload)
    else:
        print(f"psi({args.a}): exchanges the origins, reverses orientation")
        print(f"  restriction: {_germ_text(d.restriction)}")
        print(f"  presentation a: {_germ_text(d.pres_a)}")
        print(f"  presentation b: {_germ_text(d.pres_b)}")
        if args.selfcheck:
            for name, val in payload["selfcheck"].items():
                print(f"  {name}: {'ok' if val else 'FAILED'}")
    return EXIT_OK if ok else EXIT_NEGATIVE


def _cmd_join(args) -> int:
    data = _load_json(args.spec)
    try:
        atlas, k, tol = chain_from_json(data)
    except NotJoinable:
        raise
    except DomainError as exc:
        raise _InputProblem(f"{args.spec}: {exc}") from exc
    if args.k is not None:
        k = args.k
    if args.tol is not None:
        tol = args.tol
    result = collapse_chain(atlas, k=k, tol=tol)
    payload = collapse_to_json(result, atlas)
    if args.json:
        _print_json(payload)
    else:
        a, b = result.chart.image
        cert = result.cert
        print(f"joined {len(atlas.charts)} charts onto ({a}, {b})")
        print(f"  C^{cert.order} certificate: {'passed' if cert.passed else 'FAILED'}")
        print(f"  residuals: {', '.join(f'{r:.3e}' for r in cert.residuals)}"
              f"  (tolerances {', '.join(f'{t:.0e}' for t in cert.tolerances)})")
        print(f"  min slope: {cert.min_slope:.6f}")
    return EXIT_OK if result.passed else EXIT_NEGATIVE


def _cmd_verify(args) -> int:
    data = _load_json(args.map)
    try:
        nd = NumericDiffeo.from_json(data)
    except DomainError as exc:
        raise _InputProblem(f"{args.map}: {exc}") from exc
    cert = verify_ck_numeric(nd, args.k, args.tol)
    if args.json:
        _print_json(cert.to_json())
    else:
        print(f"C^{cert.order} certificate: {'passed' if cert.passed else 'FAILED'}")
        print(f"  residuals: {', '.join(f'{r:.3e}' for r in cert.residuals)}"
              f"  (tolerances {', '.join(f'{t:.0e}' for t in cert.tolerances)})")
        print(f"  min slope: {cert.min_slope:.6f}")
    return EXIT_OK if cert.passed else EXIT_NEGATIVE


# ---------------------------------------------------------------------------
# parser

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoorigins",
        description="Differentiable structures on the line with two origins.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_json(p):
        p.add_argument("--json", action="store_true",
                       help="canonical machine-readable output")

    p = sub.add_parser("cosets", help="double cosets in a finite group")
    p.add_argument("group", help="group JSON (elements, table, subgroups)")
    p.add_argument("--C", help="left subgroup name")
    p.add_argument("--D", required=True, help="right subgroup name")
    p.add_argument("--pm", action="store_true",
                   help="signed double cosets DhD u Dh^-1D instead of C\\H/D")
    add_json(p)
    p.set_defaults(func=_cmd_cosets)

    p = sub.add_parser("classify", help="symmetry cells between w_a and w_b")
    p.add_argument("--a", type=_rational, required=True)
    p.add_argument("--b", type=_rational, required=True)
    p.add_argument("--k", type=int, default=1)
    add_json(p)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("germ", help="germ algebra on JSON germs")
    gsub = p.add_subparsers(dest="germ_op", required=True)
    pc = gsub.add_parser("compose", help="g after h")
    pc.add_argument("--g", required=True)
    pc.add_argument("--h", required=True)
    add_json(pc)
    pc.set_defaults(func=_cmd_germ)
    pi = gsub.add_parser("invert", help="inverse germ")
    pi.add_argument("--h", required=True)
    add_json(pi)
    pi.set_defaults(func=_cmd_germ)
    pj = gsub.add_parser("jet", help="one-sided derivatives at 0")
    pj.add_argument("--h", required=True)
    pj.add_argument("--order", type=int, default=1)
    add_json(pj)
    pj.set_defaults(func=_cmd_germ)

    p = sub.add_parser("structure", help="compare differentiable structures")
    ssub = p.add_subparsers(dest="structure_op", required=True)
    ps = ssub.add_parser("same", help="do h and g induce the same structure?")
    ps.add_argument("--h", required=True, help="transition germ JSON")
    ps.add_argument("--g", required=True, help="transition germ JSON")
    ps.add_argument("--k", type=int, default=1)
    add_json(ps)
    ps.set_defaults(func=_cmd_structure)

    p = sub.add_parser("psi", help="the canonical origin-exchanging involution")
    p.add_argument("--a", type=_rational, required=True)
    p.add_argument("--selfcheck", action="store_true",
                   help="verify the involution and its closed forms")
    add_json(p)
    p.set_defaults(func=_cmd_psi)

    p = sub.add_parser("join", help="collapse a chain-of-charts JSON spec")
    p.add_argument("spec", help="join spec JSON (charts, transitions, k)")
    p.add_argument("--k", type=int, default=None, help="override the spec's order")
    p.add_argument("--tol", type=float, default=None,
                   help="flat per-order tolerance override")
    add_json(p)
    p.set_defaults(func=_cmd_join)

    p = sub.add_parser("verify", help="certify a sampled map at order k")
    p.add_argument("map", help="map JSON: {samples: [[x, y], ...], seams: [...]}")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--tol", type=float, default=None)
    add_json(p)
    p.set_defaults(func=_cmd_verify)

    return parser


def run(argv) -> int:
    """Parse argv and execute; returns the exit code instead of raising."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _InputProblem as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NotJoinable as exc:
        print(f"not joinable: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except GlueInfeasible as exc:
        print(f"glue infeasible: {exc} (eps={exc.eps}, mass={exc.mass:.3e})",
              file=sys.stderr)
        return EXIT_NUMERIC
    except IncompatiblePresentations as exc:
        print(f"incompatible presentations: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except DomainError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TwoOriginsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
