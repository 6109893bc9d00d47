"""Exhaustive generators of small structures, used by the property suites and tests."""

from __future__ import annotations

import itertools
from typing import Iterable, Iterator

from .expansion import IN_C, ExpandedContext, is_in_C
from .homs import is_F_free
from .structures import Signature, Structure, canonical_form


def all_structures(sig: Signature, n: int) -> Iterator[Structure]:
    """Every structure on domain ``0..n-1`` (unordered, labelled)."""
    dom = list(range(n))
    slots = [(name, t) for name, a in sig.arities for t in itertools.product(dom, repeat=a)]
    for mask in range(2 ** len(slots)):
        rels: dict = {name: [] for name in sig.names}
        for i, (name, t) in enumerate(slots):
            if mask >> i & 1:
                rels[name].append(t)
        yield Structure(sig.with_order(False), dom, rels, None, check=False)


def up_to_iso(structures: Iterable[Structure]) -> list[Structure]:
    seen, out = set(), []
    for S in structures:
        key = canonical_form(S)
        if key not in seen:
            seen.add(key)
            out.append(S)
    return out


def structures_up_to(sig: Signature, max_n: int, min_n: int = 0) -> list[Structure]:
    out = []
    for n in range(min_n, max_n + 1):
        out.extend(up_to_iso(all_structures(sig, n)))
    return out


def trees(sig: Signature, max_n: int, unary: bool = True) -> list[Structure]:
    """All trees with at most ``max_n`` elements, up to isomorphism.

    Built by repeatedly hanging a new tuple (of arity ≥ 2) off one existing
    element; unary tuples are then added in every combination if ``unary``.
    """
    big = [(name, a) for name, a in sig.arities if a >= 2]
    small = [name for name, a in sig.arities if a == 1]
    plain = sig.with_order(False)
    frontier = {canonical_form(Structure(plain, [0], {}, None, check=False)):
                Structure(plain, [0], {}, None, check=False)}
    found = dict(frontier)
    while frontier:
        nxt = {}
        for S in frontier.values():
            n = len(S)
            for name, a in big:
                if n + a - 1 > max_n:
                    continue
                fresh = list(range(n, n + a - 1))
                for x in S.domain:
                    for pos in range(a):
                        t = tuple(fresh[:pos]) + (x,) + tuple(fresh[pos:])
                        rels = {k: set(v) for k, v in S.relations.items()}
                        rels[name].add(t)
                        T = Structure(plain, list(S.domain) + fresh, rels, None, check=False)
                        key = canonical_form(T)
                        if key not in found:
                            found[key] = T
                            nxt[key] = T
        frontier = nxt
    out = list(found.values())
    if unary and small:
        marked = {}
        for T in out:
            slots = [(name, x) for name in small for x in T.domain]
            for mask in range(2 ** len(slots)):
                rels = {k: set(v) for k, v in T.relations.items()}
                for i, (name, x) in enumerate(slots):
                    if mask >> i & 1:
                        rels[name].add((x,))
                U = Structure(plain, T.domain, rels, None, check=False)
                marked.setdefault(canonical_form(U), U)
        out = list(marked.values())
    out.sort(key=lambda T: (len(T), T.total_tuples()))
    return out


def f_free_structures(ctx: ExpandedContext, max_n: int, min_n: int = 0) -> list[Structure]:
    return [S for S in structures_up_to(ctx.sigma, max_n, min_n) if is_F_free(S, ctx.forbidden)[0]]


def expanded_structures(ctx: ExpandedContext, n: int) -> Iterator[Structure]:
    """Every labelled expanded structure on ``0..n-1`` whose base part is F-free."""
    dom = list(range(n))
    for base in all_structures(ctx.sigma, n):
        if not is_F_free(base, ctx.forbidden)[0]:
            continue
        slots = [(s, x) for s in ctx.tau for x in dom]
        for mask in range(2 ** len(slots)):
            rels = dict(base.relations)
            for s in ctx.tau:
                rels[s] = [(x,) for i, (s2, x) in enumerate(slots) if s2 == s and mask >> i & 1]
            yield Structure(ctx.signature, dom, rels, None, check=False)


def members(ctx: ExpandedContext, max_n: int, min_n: int = 0, bound: int | None = None) -> list[Structure]:
    """Class members with ``min_n..max_n`` elements, up to isomorphism."""
    out = []
    for n in range(min_n, max_n + 1):
        for S in up_to_iso(expanded_structures(ctx, n)):
            if is_in_C(S, ctx, bound, certify=False).status == IN_C:
                out.append(S)
    return out


def with_order(S: Structure, order=None) -> Structure:
    order = list(S.domain) if order is None else list(order)
    return Structure(S.signature.with_order(True), S.domain, S.relations, order, check=False)


def orderings(S: Structure) -> Iterator[Structure]:
    for perm in itertools.permutations(S.domain):
        yield with_order(S, perm)
