"""Regenerate the expected CLI outputs from the library API (not through the CLI).

    python3 tests/golden/regen.py

Each case is ``(name, argv, expected)``; the CLI test replays ``argv`` and compares
stdout against ``<name>.out``.
"""

from __future__ import annotations

import sys
from pathlib import Path

from treeramsey import expansion, partite, verify
from treeramsey.fileformat import (
    context_from_json,
    dumps,
    label,
    load_json,
    structure_from_json,
    structure_to_json,
    to_jsonable,
)
from treeramsey.structures import Structure
from treeramsey.viz import emit_dot

HERE = Path(__file__).resolve().parent


def f(name: str) -> str:
    return str(HERE / name)


def load(name: str):
    return structure_from_json(load_json(f(name)))


def typed(name: str, ctx) -> Structure:
    S, _ = load(name)
    return Structure(ctx.signature.with_order(S.order is not None), S.domain, S.relations, S.order)


def expected_pieces():
    ctx = context_from_json(load_json(f("path.json")))
    pieces = [
        {"tree": i, "cut": label(m), "class": ctx.class_of_piece(p), "root": label(p.root),
         "structure": structure_to_json(p.structure, version=False)}
        for (i, m), ps in ctx.pieces_by_cut.items() for p in ps
    ]
    classes = [{"id": c.id, "pieces": len(c.representatives), "distinct": len(c.distinct),
                "incompatibility_size": len(c.incompatibility_key)} for c in ctx.classes]
    return {"tau": list(ctx.tau), "pieces": pieces, "classes": classes}


def expected_amalgam(ctx):
    A, B1, B2 = (typed(n, ctx) for n in ("out_vertex.json", "edge_ab.json", "edge_ac.json"))
    C, g1, g2 = expansion.free_amalgam(A, B1, B2, {"a": "a"}, {"a": "a"}, ctx)
    flat = {x: label(x) for x in C.domain}
    return {"amalgam": structure_to_json(C.relabel(flat)),
            "g1": {label(k): flat[v] for k, v in g1.mapping.items()},
            "g2": {label(k): flat[v] for k, v in g2.mapping.items()}}


def expected_partite_lemma():
    A, _ = load("point.json")
    B, parts = load("rect_b.json")
    by_label = {label(a): a for a in A.domain}
    Bp = partite.PartiteStructure(B, {x: by_label[parts[label(x)]] for x in B.domain}, A, partite.RECTIFIED)
    E = partite.partite_lemma(A, Bp, 2)
    flat = {x: label(x) for x in E.carrier.domain}
    return {"sizes": E.part_sizes(),
            "E": structure_to_json(E.carrier.relabel(flat), {flat[x]: p for x, p in E.parts.items()})}


def expected_construct(ctx):
    A, B = typed("in_vertex.json", ctx), typed("edge_expanded.json", ctx)
    P, _ = load("t3.json")
    C, trace = partite.partite_construction(A, B, 2, ctx, P=P)
    out = trace.summary()
    out["embeddings"] = [{label(a): label(p) for a, p in e.items()} for e in trace.embeddings]
    for rec, s in zip(trace.steps, out["steps"]):
        s["e_k"] = {label(a): label(p) for a, p in rec.e_k.items()}
        if not rec.trivial:
            s["lambda"] = [{label(x): y for x, y in table.items()} for table in rec.lam]
    return {"C": structure_to_json(C.carrier, C.parts), "trace": out}


def expected_arrow():
    (C, _), (B, _), (A, _) = load("points3.json"), load("points2.json"), load("point.json")
    return verify.arrow_check(verify.ArrowInstance(C, B, A, 2)).to_json()


def cases():
    ctx = context_from_json(load_json(f("context.json")))
    forbid = ["--forbid", f("context.json")]
    A_edge, _ = load("edge.json")
    yield "pieces", ["pieces", "--forest", f("path.json")], expected_pieces()
    yield "expand", ["expand", *forbid, "--input", f("edge.json")], \
        structure_to_json(expansion.canonical_expansion(A_edge, ctx))
    for name in ("edge_expanded", "both_marks"):
        yield f"member_{name}", ["member", *forbid, "--input", f(name + ".json")], \
            expansion.is_in_C(typed(name + ".json", ctx), ctx).to_json()
    yield "canonize", ["canonize", *forbid, "--input", f("in_vertex.json")], \
        structure_to_json(expansion.canonize(typed("in_vertex.json", ctx), ctx))
    yield "amalgamate", ["amalgamate", "--base", f("out_vertex.json"), "--left", f("edge_ab.json"),
                         "--right", f("edge_ac.json"), "--embed-left", "a=a", "--embed-right", "a=a",
                         *forbid], expected_amalgam(ctx)
    yield "partite_lemma", ["partite-lemma", "--a", f("point.json"), "--b", f("rect_b.json"), "-r", "2"], \
        expected_partite_lemma()
    yield "construct", ["construct", *forbid, "--a", f("in_vertex.json"), "--b", f("edge_expanded.json"),
                        "--p", f("t3.json"), "-r", "2"], expected_construct(ctx)
    yield "verify_arrow", ["verify-arrow", "--c", f("points3.json"), "--b", f("points2.json"),
                           "--a", f("point.json"), "-r", "2"], expected_arrow()
    report = to_jsonable(verify.run_property_suite("lemma-3.6"))
    report.pop("runtime_ms")
    yield "suite", ["suite", "--name", "lemma-3.6"], report
    for kind, src in (("incidence", "four_ary"), ("gaifman", "path"), ("partite", "rect_b")):
        S, parts = load(src + ".json")
        yield f"viz_{kind}", ["viz", "--input", f(src + ".json"), "--graph", kind], emit_dot(S, kind, parts)


def render(expected) -> str:
    return expected if isinstance(expected, str) else dumps(expected) + "\n"


def main() -> int:
    for name, _, expected in cases():
        (HERE / f"{name}.out").write_text(render(expected))
        print(name)
    return 0


if __name__ == "__main__":
    sys.exit(main())
