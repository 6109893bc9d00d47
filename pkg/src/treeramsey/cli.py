"""Command-line interface: JSON results on stdout, logs on stderr.

Exit codes: 0 success, 1 domain error (error object on stdout), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Sequence

from . import expansion, partite, verify
from .errors import FormatError, TreeRamseyError
from .fileformat import (
    context_from_json,
    dumps,
    label,
    load_json,
    structure_from_json,
    structure_to_json,
    to_jsonable,
)
from .structures import Structure
from .viz import KINDS, emit_dot

log = logging.getLogger("treeramsey")


# ---------------------------------------------------------------- helpers


def parse_map(text: str) -> dict:
    """``{"a": "x"}`` JSON or ``a=x,b=y``."""
    text = text.strip()
    if text.startswith("{"):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid map: {exc.msg}") from None
        if not isinstance(raw, dict):
            raise FormatError("map must be a JSON object")
        return {str(k): v for k, v in raw.items()}
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        if "=" not in item:
            raise FormatError(f"map entry {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _load_structure(path: str) -> tuple[Structure, dict | None]:
    return structure_from_json(load_json(path))


def _load_context(paths: Sequence[str]):
    raws = [load_json(p) for p in paths]
    if len(raws) == 1:
        return context_from_json(raws[0])
    flat = []
    for raw in raws:
        if isinstance(raw, dict) and "forbidden" in raw:
            flat.extend(raw["forbidden"])
        else:
            flat.append(raw)
    return context_from_json(flat)


def _over_context(S: Structure, ctx) -> Structure:
    """Re-type ``S`` over the context's (expanded) signature, adding absent τ symbols as empty."""
    names = set(S.signature.names)
    allowed = set(ctx.signature.names)
    if not names <= allowed or not set(ctx.sigma.names) <= names:
        raise FormatError("structure is not over the context's signature",
                          symbols=sorted(names), expected=sorted(allowed))
    sig = ctx.signature.with_order(S.order is not None)
    return Structure(sig, S.domain, S.relations, S.order)


def _parts_for(S: Structure, raw_parts: dict | None, index: Structure, what: str) -> dict:
    if raw_parts is None:
        raise FormatError(f"{what} needs a parts map")
    by_label = {label(a): a for a in index.domain}
    try:
        return {x: by_label[str(raw_parts[label(x)])] for x in S.domain}
    except KeyError as exc:
        raise FormatError(f"{what}: parts map refers to unknown element {exc.args[0]!r}") from None



# ---------------------------------------------------------------- verbs


def cmd_pieces(args) -> tuple[Any, int]:
    ctx = _load_context([args.forest])
    pieces = []
    for (i, m), ps in ctx.pieces_by_cut.items():
        for p in ps:
            pieces.append({
                "tree": i, "cut": label(m), "class": ctx.class_of_piece(p),
                "root": label(p.root), "structure": structure_to_json(p.structure, version=False),
            })
    classes = [
        {"id": c.id, "pieces": len(c.representatives), "distinct": len(c.distinct),
         "incompatibility_size": len(c.incompatibility_key)}
        for c in ctx.classes
    ]
    return {"tau": list(ctx.tau), "pieces": pieces, "classes": classes}, 0


def cmd_expand(args):
    ctx = _load_context(args.forbid)
    A, _ = _load_structure(args.input)
    return structure_to_json(expansion.canonical_expansion(A, ctx)), 0


def _bound(args, ctx):
    return -1 if args.bound is None else args.bound


def cmd_member(args):
    ctx = _load_context(args.forbid)
    A, _ = _load_structure(args.input)
    v = expansion.is_in_C(_over_context(A, ctx), ctx, _bound(args, ctx))
    return v.to_json(), 0


def cmd_canonize(args):
    ctx = _load_context(args.forbid)
    A, _ = _load_structure(args.input)
    return structure_to_json(expansion.canonize(_over_context(A, ctx), ctx, _bound(args, ctx))), 0


def cmd_amalgamate(args):
    ctx = _load_context(args.forbid) if args.forbid else None
    A, _ = _load_structure(args.base)
    B1, _ = _load_structure(args.left)
    B2, _ = _load_structure(args.right)
    if ctx is not None:
        A, B1, B2 = (_over_context(S, ctx) for S in (A, B1, B2))
    f1, f2 = parse_map(args.embed_left), parse_map(args.embed_right)
    C, g1, g2 = expansion.free_amalgam(A, B1, B2, f1, f2, ctx)
    flat = {x: label(x) for x in C.domain}
    C = C.relabel(flat)
    return {
        "amalgam": structure_to_json(C),
        "g1": {label(k): flat[v] for k, v in g1.mapping.items()},
        "g2": {label(k): flat[v] for k, v in g2.mapping.items()},
    }, 0


def cmd_partite_lemma(args):
    ctx = _load_context(args.forbid) if args.forbid else None
    A, _ = _load_structure(args.a)
    B, b_parts = _load_structure(args.b)
    if args.parts is not None:
        b_parts = parse_map(args.parts)
    if ctx is not None:
        A, B = _over_context(A, ctx), _over_context(B, ctx)
    iota = _parts_for(B, b_parts, A, "B")
    Bp = partite.PartiteStructure(B, iota, A, partite.RECTIFIED)
    E = partite.partite_lemma(A, Bp, args.r, ctx, args.max_size)
    flat = {x: label(x) for x in E.carrier.domain}
    return {
        "sizes": E.part_sizes(),
        "E": structure_to_json(E.carrier.relabel(flat), {flat[x]: p for x, p in E.parts.items()}),
    }, 0


def _trace_json(trace) -> dict:
    out = trace.summary()
    out["embeddings"] = [{label(a): label(p) for a, p in e.items()} for e in trace.embeddings]
    for rec, s in zip(trace.steps, out["steps"]):
        s["e_k"] = {label(a): label(p) for a, p in rec.e_k.items()}
        if not rec.trivial:
            s["lambda"] = [{label(x): y for x, y in table.items()} for table in rec.lam]
    return out


def cmd_construct(args):
    ctx = _load_context(args.forbid)
    A, _ = _load_structure(args.a)
    B, _ = _load_structure(args.b)
    A, B = _over_context(A, ctx), _over_context(B, ctx)
    P = None
    if args.p:
        P, _ = _load_structure(args.p)
    C, trace = partite.partite_construction(A, B, args.r, ctx, P=P, max_size=args.max_size, budget=args.budget)
    return {"C": structure_to_json(C.carrier, C.parts), "trace": _trace_json(trace)}, 0


def cmd_verify_arrow(args):
    (C, c_parts), (B, b_parts), (A, _) = (_load_structure(p) for p in (args.c, args.b, args.a))
    if c_parts is not None and b_parts is not None:
        C = partite.PartiteStructure(C, _parts_for(C, c_parts, A, "C"), A, partite.RECTIFIED)
        B = partite.PartiteStructure(B, _parts_for(B, b_parts, A, "B"), A, partite.RECTIFIED)
    v = verify.arrow_check(verify.ArrowInstance(C, B, A, args.r), budget=args.budget)
    return v.to_json(), 0


def cmd_suite(args):
    report = verify.run_property_suite(args.name, args.scale, args.fault)
    return to_jsonable(report), 0 if report["status"] == "pass" else 1


def cmd_viz(args):
    A, parts = _load_structure(args.input)
    return emit_dot(A, args.graph, parts), 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="treeramsey", description="Forbidden-tree classes and their Ramsey expansions.")
    ap.add_argument("--quiet", action="store_true", help="suppress log output on stderr")
    sub = ap.add_subparsers(dest="verb", required=True)

    def verb(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        return p

    def forbid(p, required=True):
        p.add_argument("--forbid", nargs="+", required=required, metavar="FILE",
                       help="context file or forbidden tree files")

    p = verb("pieces", cmd_pieces, "list pieces and their classes")
    p.add_argument("--forest", required=True, metavar="FILE")

    p = verb("expand", cmd_expand, "canonical expansion of an F-free structure")
    forbid(p)
    p.add_argument("--input", required=True, metavar="FILE")

    for name, func in (("member", cmd_member), ("canonize", cmd_canonize)):
        p = verb(name, func, "class membership" if name == "member" else "canonical superstructure")
        forbid(p)
        p.add_argument("--input", required=True, metavar="FILE")
        p.add_argument("--bound", type=int, default=None, metavar="N", help="witness size bound")

    p = verb("amalgamate", cmd_amalgamate, "free amalgam of two structures over a common one")
    for flag in ("--base", "--left", "--right"):
        p.add_argument(flag, required=True, metavar="FILE")
    p.add_argument("--embed-left", required=True, metavar="MAP")
    p.add_argument("--embed-right", required=True, metavar="MAP")
    forbid(p, required=False)

    p = verb("partite-lemma", cmd_partite_lemma, "rectified Ramsey witness for a rectified B")
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--b", required=True, metavar="FILE")
    p.add_argument("--parts", metavar="MAP", help="part map of B (else the 'parts' key of the B file)")
    p.add_argument("-r", type=int, required=True, metavar="N")
    p.add_argument("--max-size", type=int, default=None, metavar="N")
    forbid(p, required=False)

    p = verb("construct", cmd_construct, "partite construction of a Ramsey witness")
    forbid(p)
    p.add_argument("--a", required=True, metavar="FILE")
    p.add_argument("--b", required=True, metavar="FILE")
    p.add_argument("-r", type=int, required=True, metavar="N")
    p.add_argument("--p", metavar="FILE", help="ordered partner structure P")
    p.add_argument("--max-size", type=int, default=None, metavar="N")
    p.add_argument("--budget", type=int, default=verify.DEFAULT_BUDGET, metavar="N")

    p = verb("verify-arrow", cmd_verify_arrow, "exhaustive partition-arrow check")
    for flag in ("--c", "--b", "--a"):
        p.add_argument(flag, required=True, metavar="FILE")
    p.add_argument("-r", type=int, required=True, metavar="N")
    p.add_argument("--budget", type=int, default=verify.DEFAULT_BUDGET, metavar="N")

    p = verb("suite", cmd_suite, "run a named property suite")
    p.add_argument("--name", required=True)
    p.add_argument("--scale", type=int, default=None, metavar="N")
    p.add_argument("--fault", default=None, help="inject the suite's designated corruption")

    p = verb("viz", cmd_viz, "DOT export")
    p.add_argument("--input", required=True, metavar="FILE")
    p.add_argument("--graph", required=True, choices=KINDS)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.CRITICAL + 1 if args.quiet else logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    if getattr(args, "r", 1) < 1:
        parser.print_usage(sys.stderr)
        sys.stderr.write("treeramsey: error: -r must be at least 1\n")
        return 2
    try:
        result, code = args.func(args)
    except TreeRamseyError as exc:
        log.error("%s: %s", exc.kind, exc)
        sys.stdout.write(dumps(exc.to_json()) + "\n")
        return 1
    sys.stdout.write(result if isinstance(result, str) else dumps(result) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
