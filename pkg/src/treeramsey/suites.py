"""Named property suites.

Each suite is ``(runner, default_scale, designated_fault)``.  A runner gets
``(scale, fault, counter)``, raises ``SuiteFailure`` on the first violated
property, and increments ``counter["cases"]`` per checked case.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import networkx as nx

from .errors import TreeRamseyError
from .expansion import (
    IN_C,
    NOT_IN_C,
    ExpandedContext,
    canonical_expansion,
    forbidden_singleton,
    incompatibility_set,
    is_in_C,
    subpiece_replacement,
    subpieces,
    verify_certificate,
    free_amalgam,
    _marks,
)
from .generate import f_free_structures, members, orderings, structures_up_to, trees, up_to_iso
from .homs import EMBED, iter_maps, sorted_maps, SearchConstraint
from .partite import (
    PartiteStructure,
    build_C0,
    compose_chain,
    check_distinguished_copies,
    find_monochromatic_copy,
    is_p_partite,
    is_rectified,
    partite_construction,
    partite_embeddings,
    rectified_structure,
    rectified_substructure,
    rectify,
    satisfies_part_rectified,
    sections,
    TRANSVERSAL,
)
from .structures import (
    Signature,
    Structure,
    base_reduct,
    check_embedding,
    check_homomorphism,
    gaifman_graph,
    induced_substructure,
    is_connected,
    is_sum_decomposable,
    rooted_form,
    structure_sum,
)
from .verify import SuiteFailure, _fail, check_expansion_oracle

FLIP_TAU = "flip-tau"
DELETE_TUPLE = "delete-tuple"
BREAK_ORDER = "break-order"


# ---------------------------------------------------------------- shared fixtures


@lru_cache(maxsize=None)
def two_path_context() -> ExpandedContext:
    sig = Signature.of({"E": 2})
    F = Structure(sig, ["p", "q", "r"], {"E": [("p", "q"), ("q", "r")]})
    return ExpandedContext(sig, [F])


@lru_cache(maxsize=None)
def marked_path_context() -> ExpandedContext:
    """Forbid a directed 2-path whose last vertex carries the unary symbol U."""
    sig = Signature.of({"E": 2, "U": 1})
    F = Structure(sig, ["p", "q", "r"], {"E": [("p", "q"), ("q", "r")], "U": [("r",)]})
    return ExpandedContext(sig, [F])


def transitive_tournament(n: int) -> Structure:
    sig = Signature.of({"E": 2}, has_order=True)
    return Structure(sig, range(n), {"E": [(i, j) for i in range(n) for j in range(i + 1, n)]}, range(n))


def _delete_first_tuple(S: Structure) -> Structure:
    for name in S.signature.names:
        if S.relations[name]:
            victim = min(S.relations[name], key=repr)
            return S.replace(relations={name: S.relations[name] - {victim}})
    return S


def _flip_first_tau(S: Structure, tau) -> Structure:
    if not S.domain or not tau:
        return S
    x, s = S.domain[0], tau[0]
    return S.replace(relations={s: frozenset(set(S.relations[s]) ^ {(x,)})})


@lru_cache(maxsize=None)
def _ordered_members(max_n: int) -> tuple:
    ctx = two_path_context()
    out = []
    for S in members(ctx, max_n, min_n=1):
        out.extend(up_to_iso(orderings(S)))
    return tuple(out)


# ---------------------------------------------------------------- suites


def suite_connectivity(scale, fault, counter):
    sig = Signature.of({"E": 2, "U": 1})
    for S in structures_up_to(sig, scale):
        counter["cases"] += 1
        inc = is_connected(S)
        G = gaifman_graph(_delete_first_tuple(S) if fault == DELETE_TUPLE else S)
        gai = len(G) == 0 or nx.is_connected(G)
        dec = not is_sum_decomposable(S)
        if not inc == gai == dec:
            _fail(structure=repr(S), incidence=inc, gaifman=gai, indecomposable=dec)
    small = structures_up_to(sig, min(scale, 2))
    for S in small:
        if not S.domain or not is_connected(S):
            continue
        for A1, A2 in itertools.product(small, repeat=2):
            total = structure_sum([A1, A2])
            for f in iter_maps(S, total):
                counter["cases"] += 1
                if len({y[0] for y in f.values()}) > 1:
                    _fail(structure=repr(S), summands=[repr(A1), repr(A2)], hom=repr(f))


def suite_expansion_oracle(scale, fault, counter):
    ctx = two_path_context()
    for A in f_free_structures(ctx, scale):
        counter["cases"] += 1
        rep = check_expansion_oracle(A, ctx, fault)
        if rep["diffs"]:
            _fail(structure=repr(A), diffs=repr(rep["diffs"]))


def _tree_corpus(scale):
    corpora = [
        (Signature.of({"E": 2}), scale),
        (Signature.of({"E": 2, "U": 1}), min(scale, 4)),
        (Signature.of({"T": 3}), scale),
    ]
    for sig, n in corpora:
        for F in trees(sig, n):
            yield sig, F


def suite_forbidden_singletons(scale, fault, counter):
    for sig, F in _tree_corpus(scale):
        ctx = ExpandedContext(sig, [F])
        for i, m, _ in ctx.singletons:
            E = forbidden_singleton(F, m, ctx)
            if fault == FLIP_TAU:
                marked = [s for s in ctx.tau if (1,) in E.relations[s]]
                E = E.replace(relations={marked[0]: frozenset()})
            counter["cases"] += 1
            v = is_in_C(E, ctx)
            if v.status != NOT_IN_C or not verify_certificate(ctx, E, v):
                _fail(tree=repr(F), cut=repr(m), status=v.status)
            # anything receiving a homomorphism from E is rejected too
            bigger = Structure(ctx.signature, [1, 2], {
                **{s: [(1,)] for s in ctx.tau if (1,) in E.relations[s] or s == ctx.tau[0]},
                **{n: [(1,)] for n, a in sig.arities if a == 1},
            }, check=False)
            counter["cases"] += 1
            if fault is None and is_in_C(bigger, ctx).status != NOT_IN_C:
                _fail(tree=repr(F), cut=repr(m), superstructure=repr(bigger))


def suite_hereditary(scale, fault, counter):
    ctx = two_path_context()
    for A in members(ctx, scale):
        tau_forced = _marks(ctx, A)
        for x in A.domain:
            if not tau_forced[x] <= {s for s in ctx.tau if (x,) in A.relations[s]}:
                _fail(structure=repr(A), element=x, reason="right-to-left implication")
        for k in range(len(A) + 1):
            for sub in itertools.combinations(A.domain, k):
                S = induced_substructure(A, sub)
                if fault == FLIP_TAU:
                    S = _flip_first_tau(S, ctx.tau)
                counter["cases"] += 1
                if is_in_C(S, ctx, None, certify=False).status != IN_C:
                    _fail(structure=repr(A), substructure=repr(S))


def suite_subpiece(scale, fault, counter):
    sig = Signature.of({"E": 2})
    corpus = trees(sig, scale)
    contexts = [ExpandedContext(sig, [F]) for F in corpus if len(F) >= 3]
    contexts.append(ExpandedContext(sig, [F for F in corpus if len(F) <= min(scale, 4)]))
    nontrivial = 0
    for ctx in contexts:
        all_piece_forms = {rooted_form(p.rooted) for ps in ctx.pieces_by_cut.values() for p in ps}
        for ps in ctx.pieces_by_cut.values():
            for p in ps:
                key = tuple(sorted(incompatibility_set(p, ctx.forbidden)))
                for sub in subpieces(ctx, p):
                    cls = ctx.class_by_id(ctx.class_of_piece(sub))
                    for repl in cls.distinct:
                        M2 = subpiece_replacement(p, sub, repl)
                        if fault == DELETE_TUPLE:
                            M2 = type(M2)(_delete_first_tuple(M2.structure), M2.root)
                        counter["cases"] += 1
                        if rooted_form(repl.rooted) != rooted_form(sub.rooted):
                            nontrivial += 1
                        if rooted_form(M2) not in all_piece_forms:
                            _fail(piece=repr(p.rooted), subpiece=repr(sub.rooted), replacement=repr(repl.rooted),
                                  reason="result is not a piece")
                        if tuple(sorted(incompatibility_set(M2, ctx.forbidden))) != key:
                            _fail(piece=repr(p.rooted), subpiece=repr(sub.rooted), reason="not equivalent")
    if nontrivial == 0:
        _fail(reason="no non-trivial replacement was exercised")


def suite_amalgam(scale, fault, counter):
    ctx = two_path_context()
    ms = members(ctx, scale)
    for A in ms:
        for B1, B2 in itertools.product([B for B in ms if len(B) >= len(A)], repeat=2):
            for f1 in iter_maps(A, B1, EMBED):
                for f2 in iter_maps(A, B2, EMBED):
                    counter["cases"] += 1
                    try:
                        C, g1, g2 = free_amalgam(A, B1, B2, f1, f2, ctx, check_members=False)
                    except TreeRamseyError as exc:
                        _fail(A=repr(A), B1=repr(B1), B2=repr(B2), error=exc.kind)
                    if fault == DELETE_TUPLE:
                        C = _delete_first_tuple(C)
                    if set(C.domain) != set(g1.mapping.values()) | set(g2.mapping.values()):
                        _fail(A=repr(A), B1=repr(B1), B2=repr(B2), reason="domain is not the union")
                    for n in C.signature.names:
                        union = {tuple(g1(x) for x in t) for t in B1.relations[n]} | {
                            tuple(g2(x) for x in t) for t in B2.relations[n]}
                        if set(C.relations[n]) != union:
                            _fail(A=repr(A), B1=repr(B1), B2=repr(B2), reason=f"{n} is not the union")
                    if any(g1(f1[a]) != g2(f2[a]) for a in A.domain):
                        _fail(A=repr(A), B1=repr(B1), B2=repr(B2), reason="square does not commute")
                    if is_in_C(C, ctx, None, certify=False).status != IN_C:
                        _fail(A=repr(A), B1=repr(B1), B2=repr(B2), reason="amalgam not in class")


def suite_rectified(scale, fault, counter):
    ctx = two_path_context()
    for A in _ordered_members(2):
        for sizes in itertools.product(range(scale + 1), repeat=len(A)):
            X = rectified_structure(A, sizes, ctx)
            S = X.carrier
            if fault == DELETE_TUPLE:
                S = _delete_first_tuple(S)
            counter["cases"] += 1
            if not is_rectified(S, X.parts, A, literal=True):
                _fail(A=repr(A), sizes=list(sizes), reason="biconditional")
            if is_in_C(S, ctx, None, certify=False).status != IN_C:
                _fail(A=repr(A), sizes=list(sizes), reason="not in class")
            if not check_homomorphism(S, A, X.parts):
                _fail(A=repr(A), sizes=list(sizes), reason="part map is not a homomorphism")
            for sec in sections(X):
                e = dict(zip(A.elements_in_order(), sec))
                if not check_embedding(A, S, e):
                    _fail(A=repr(A), sizes=list(sizes), reason="section is not an embedding")
            if all(s == 1 for s in sizes) and S.relabel(lambda x: x[0]) != A:
                _fail(A=repr(A), sizes=list(sizes), reason="unit sizes do not give A")


def _partite_inputs(scale):
    """P-partite structures: the C_0 of small (P, B) pairs and the stages of one construction."""
    ctx = two_path_context()
    Ps = [transitive_tournament(n) for n in range(1, scale + 1)]
    sig = Signature.of({"E": 2}, has_order=True)
    Ps.append(Structure(sig, range(3), {"E": [(0, 1), (0, 2)]}, range(3)))
    Ps.append(Structure(sig, range(3), {"E": [(0, 2), (1, 2)]}, range(3)))
    out = []
    for P in Ps:
        for B in _ordered_members(2):
            C0, _, _ = build_C0(P, B)
            if len(C0):
                out.append((ctx, C0))
    A = next(S for S in _ordered_members(1) if (S.domain[0],) in S.relations["S1"])
    B = next(S for S in _ordered_members(2) if S.relations["E"] and S.order[0] == next(iter(S.relations["E"]))[0])
    _, trace = partite_construction(A, B, 2, ctx, P=transitive_tournament(3))
    out.extend((ctx, C) for C in trace.stages)
    mctx = marked_path_context()
    msig = Signature.of({"E": 2, "U": 1}, has_order=True)
    P = Structure(msig, range(3), {"E": [(0, 1), (0, 2), (1, 2)], "U": [(2,)]}, range(3))
    edge = Structure(msig, ["a", "b"], {"E": [("a", "b")], "U": [("b",)]}, ["a", "b"])
    Bm = canonical_expansion(edge, mctx)
    C0, _, _ = build_C0(P, Bm)
    out.append((mctx, C0))
    return out


def suite_rectification(scale, fault, counter):
    for ctx, C in _partite_inputs(scale):
        D = rectify(C, ctx)
        S = D.carrier
        if fault == FLIP_TAU:
            S = _flip_first_tau(S, ctx.tau)
        counter["cases"] += 1
        X = C.carrier
        for n in X.signature.base:
            if not X.relations[n] <= S.relations[n]:
                _fail(C=repr(X), reason=f"{n} shrank")
            if X.signature.arity(n) == 1 and X.relations[n] != S.relations[n]:
                _fail(C=repr(X), reason=f"unary {n} changed")
        for s in ctx.tau:
            if X.relations[s] != S.relations[s]:
                _fail(C=repr(X), reason=f"{s} changed")
        if S.order != X.order:
            _fail(C=repr(X), reason="order changed")
        D2 = PartiteStructure(S, D.parts, D.index)
        if not satisfies_part_rectified(D2) or rectify(D2).carrier != S:
            _fail(C=repr(X), reason="not a fixed point")
        if not is_p_partite(S, D.parts, D.index):
            _fail(C=repr(X), reason="not partite")
        if is_in_C(S, ctx, None, certify=False).status != IN_C:
            _fail(C=repr(X), reason="not in class")


def suite_rectified_substructure(scale, fault, counter):
    for ctx, C in _partite_inputs(scale):
        if ctx is not two_path_context():
            continue
        D = rectify(C)
        P = D.index
        for A in _ordered_members(2):
            for e in sorted_maps(base_reduct(A, keep_order=True), P, EMBED):
                At = PartiteStructure(A, e, P, TRANSVERSAL)
                if next(partite_embeddings(At, D), None) is None:
                    continue
                B = rectified_substructure(D, At)
                S = B.carrier
                if fault == DELETE_TUPLE:
                    S = _delete_first_tuple(S)
                counter["cases"] += 1
                if not is_rectified(S, B.parts, A, literal=len(S) <= 6):
                    _fail(D=repr(D.carrier), A=repr(A), e=repr(e))


def suite_distinguished(scale, fault, counter):
    ctx = two_path_context()
    A_opts = [S for S in _ordered_members(1)]
    B = next(S for S in _ordered_members(2) if S.relations["E"] and S.order[0] == next(iter(S.relations["E"]))[0])
    for A in A_opts:
        if not list(iter_maps(A, B, EMBED)):
            continue
        C, trace = partite_construction(A, B, 2, ctx, P=transitive_tournament(scale))
        Cs = C.carrier
        if fault == BREAK_ORDER and len(trace.distinguished):
            h = compose_chain(trace, [0] * len(trace.steps))
            a, b = (h[trace.distinguished[0][x]] for x in B.order[:2])
            order = [b if z == a else a if z == b else z for z in Cs.order]
            Cs = Cs.replace(order=order)
        trace.stages[-1] = PartiteStructure(Cs, C.parts, C.index)
        chains = [[0] * len(trace.steps), [max(len(s.G) - 1, 0) for s in trace.steps]]
        for chi in (lambda e: 0, lambda e: hash(e) % 2, lambda e: sum(map(hash, e)) % 2):
            try:
                chains.append(find_monochromatic_copy(trace, chi)["chain"])
            except TreeRamseyError:
                if fault is None:
                    raise
            counter["colorings"] += 1
        for chain in chains:
            counter["cases"] += 1
            bad = check_distinguished_copies(trace, compose_chain(trace, chain))
            if bad:
                _fail(A=repr(A), chain=chain, copies=bad)


SUITES = {
    "lemma-2.1": (suite_connectivity, 3, DELETE_TUPLE),
    "eq-3.1": (suite_expansion_oracle, 3, FLIP_TAU),
    "lemma-3.4": (suite_forbidden_singletons, 5, FLIP_TAU),
    "lemma-3.5-hereditary": (suite_hereditary, 2, FLIP_TAU),
    "lemma-3.6": (suite_subpiece, 5, DELETE_TUPLE),
    "thm-3.7-amalgam": (suite_amalgam, 3, DELETE_TUPLE),
    "prop-5.1": (suite_rectified, 2, DELETE_TUPLE),
    "lemma-6.1": (suite_rectification, 3, FLIP_TAU),
    "lemma-6.2": (suite_rectified_substructure, 3, DELETE_TUPLE),
    "distinguished-copies": (suite_distinguished, 3, BREAK_ORDER),
}
