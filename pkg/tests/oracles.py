"""Brute-force reference implementations used only by the tests.

Nothing here calls the search or canonisation code of the package: every
answer comes from enumerating all maps, all permutations or all
superstructures directly from the definitions.
"""

from __future__ import annotations

import itertools

from treeramsey.structures import Structure


def is_hom(A: Structure, B: Structure, f: dict, order: bool = True) -> bool:
    for name in A.signature.names:
        for t in A.relations[name]:
            if tuple(f[x] for x in t) not in B.relations[name]:
                return False
    if order and A.order is not None and B.order is not None:
        for x, y in itertools.combinations(A.order, 2):
            if B.order.index(f[x]) > B.order.index(f[y]):
                return False
    return True


def is_emb(A: Structure, B: Structure, f: dict) -> bool:
    if len(set(f.values())) != len(f):
        return False
    for name, arity in A.signature.arities:
        for t in itertools.product(A.domain, repeat=arity):
            if (t in A.relations[name]) != (tuple(f[x] for x in t) in B.relations[name]):
                return False
    if A.order is not None and B.order is not None:
        for x, y in itertools.combinations(A.order, 2):
            if B.order.index(f[x]) > B.order.index(f[y]):
                return False
    return True


def all_maps(A: Structure, B: Structure):
    for images in itertools.product(B.domain, repeat=len(A.domain)):
        yield dict(zip(A.domain, images))


def homs(A, B, order=True):
    return [f for f in all_maps(A, B) if is_hom(A, B, f, order)]


def embeddings(A, B):
    return [f for f in all_maps(A, B) if is_emb(A, B, f)]


def isomorphic(A: Structure, B: Structure) -> bool:
    if len(A) != len(B) or A.signature.names != B.signature.names:
        return False
    for perm in itertools.permutations(B.domain):
        f = dict(zip(A.domain, perm))
        if all({tuple(f[x] for x in t) for t in A.relations[n]} == set(B.relations[n]) for n in A.signature.names):
            if A.order is None or [f[x] for x in A.order] == list(B.order):
                return True
    return False


def rooted_isomorphic(A: Structure, a, B: Structure, b) -> bool:
    if len(A) != len(B):
        return False
    rest_a = [x for x in A.domain if x != a]
    for perm in itertools.permutations([y for y in B.domain if y != b]):
        f = dict(zip(rest_a, perm))
        f[a] = b
        if all({tuple(f[x] for x in t) for t in A.relations[n]} == set(B.relations[n]) for n in A.signature.names):
            return True
    return False


def hom_exists(A, B) -> bool:
    return any(is_hom(A, B, f, order=False) for f in all_maps(A, B))


def incidence_connected(A: Structure) -> bool:
    """Union-find over elements and tuples."""
    if not A.domain:
        return True
    parent = {("e", x): ("e", x) for x in A.domain}

    def find(u):
        while parent[u] != u:
            u = parent[u]
        return u

    for name in A.signature.names:
        for t in A.relations[name]:
            node = ("t", name, t)
            parent.setdefault(node, node)
            for x in t:
                parent[find(("e", x))] = find(node)
    return len({find(u) for u in parent}) == 1


def naive_marks(ctx, A: Structure) -> dict:
    """Marks read literally: all maps from every representative piece."""
    base = {n for n in ctx.sigma.names}
    out = {x: set() for x in A.domain}
    for cls in ctx.classes:
        for p in cls.representatives:
            M = p.structure
            for f in all_maps(M, A):
                if all(tuple(f[x] for x in t) in A.relations[n] for n in base for t in M.relations[n]):
                    out[f[p.root]].add(cls.id)
    return out


def f_free(ctx, W: Structure) -> bool:
    return not any(hom_exists(F, W) for F in ctx.forbidden)


def witness_member(ctx, A: Structure, extra: int) -> bool:
    """Is the unordered expanded ``A`` a substructure of a canonical structure with ≤ extra more elements?"""
    from treeramsey.structures import Signature

    sigma = ctx.sigma
    base_rels = {n: set(A.relations[n]) for n in sigma.names}
    marks = {x: {s for s in ctx.tau if (x,) in A.relations[s]} for x in A.domain}
    for k in range(extra + 1):
        new = [("new", i) for i in range(k)]
        dom = list(A.domain) + new
        slots = [(n, t) for n, a in sigma.arities for t in itertools.product(dom, repeat=a)
                 if any(x in new for x in t)]
        for mask in range(2 ** len(slots)):
            rels = {n: set(v) for n, v in base_rels.items()}
            for i, (n, t) in enumerate(slots):
                if mask >> i & 1:
                    rels[n].add(t)
            W = Structure(Signature(sigma.arities), dom, rels, check=False)
            if not f_free(ctx, W):
                continue
            got = naive_marks(ctx, W)
            if all(got[x] == marks[x] for x in A.domain):
                return True
    return False


def arrow_naive(C, B, A, r) -> bool:
    """Every r-colouring of binom(C, A) has a B-copy whose A-copies share one colour."""
    a_copies = [tuple(f[x] for x in A.domain) for f in embeddings(A, C)]
    inner = [f for f in embeddings(A, B)]
    copies = [[tuple(g[f[x]] for x in A.domain) for f in inner] for g in embeddings(B, C)]
    for colours in itertools.product(range(r), repeat=len(a_copies)):
        chi = dict(zip(a_copies, colours))
        if not any(len({chi[a] for a in copy}) <= 1 for copy in copies):
            return False
    return True
