"""Backtracking search for homomorphisms and embeddings."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from .errors import SignatureMismatch, UnknownElement
from .structures import Morphism, RootedStructure, Structure


@dataclass(frozen=True)
class SearchConstraint:
    pins: Mapping = field(default_factory=dict)
    require_injective: bool = False
    reflect_relations: bool = False
    respect_order: bool = True
    # optional per-element candidate sets (restricts the search further)
    allowed: Mapping | None = None

    @property
    def injective(self) -> bool:
        return self.require_injective or self.reflect_relations


HOM = SearchConstraint()
EMBED = SearchConstraint(require_injective=True, reflect_relations=True)


class _Target:
    """Per-target indexes, built once per search."""

    def __init__(self, B: Structure, names: Iterable[str]):
        self.B = B
        self.by_value: dict = {}
        self.containing: dict = {y: [] for y in B.domain}
        for name in names:
            arity = B.signature.arity(name)
            idx = [dict() for _ in range(arity)]
            for s in B.relations[name]:
                for q, y in enumerate(s):
                    idx[q].setdefault(y, []).append(s)
                for y in set(s):
                    self.containing[y].append((name, s))
            self.by_value[name] = idx


def _check_signatures(A: Structure, B: Structure, reflect: bool) -> None:
    a_sym, b_sym = A.signature.symbols, B.signature.symbols
    if reflect:
        if a_sym != b_sym:
            raise SignatureMismatch("embedding requires identical signatures")
        return
    for name, arity in a_sym.items():
        if b_sym.get(name) != arity:
            raise SignatureMismatch(f"symbol {name} missing from target", symbol=name)


def _variable_order(A: Structure, pinned: Iterable) -> list:
    pinned = [x for x in A.domain if x in set(pinned)]
    neighbours: dict = {x: set() for x in A.domain}
    degree = {x: 0 for x in A.domain}
    for tuples in A.relations.values():
        for t in tuples:
            for x in set(t):
                degree[x] += 1
                neighbours[x].update(y for y in t if y != x)
    chosen = list(pinned)
    placed = set(chosen)
    remaining = [x for x in A.domain if x not in placed]
    while remaining:
        best = max(
            remaining,
            key=lambda x: (len(neighbours[x] & placed), degree[x], -A.position(x)),
        )
        chosen.append(best)
        placed.add(best)
        remaining.remove(best)
    return chosen


def iter_maps(A: Structure, B: Structure, c: SearchConstraint = HOM) -> Iterator[dict]:
    """Yield every map ``dom A → dom B`` satisfying the constraint, as dicts."""
    _check_signatures(A, B, c.reflect_relations)
    for x, y in c.pins.items():
        if x not in A:
            raise UnknownElement(f"pinned element {x!r} not in source", element=x)
        if y not in B:
            raise UnknownElement(f"pinned target {y!r} not in target", element=y)
    injective = c.injective
    if injective and len(A) > len(B):
        return
    names = A.signature.names
    tgt = _Target(B, B.signature.names if c.reflect_relations else names)
    use_order = c.respect_order and A.order is not None and B.order is not None
    order = _variable_order(A, c.pins)
    step = {x: i for i, x in enumerate(order)}

    # tuples of A touching each element, and for each element the tuples that
    # become complete when it is assigned
    touching: dict = {x: [] for x in A.domain}
    completes: dict = {x: [] for x in A.domain}
    for name in names:
        for t in A.relations[name]:
            for x in set(t):
                touching[x].append((name, t))
            completes[max(t, key=step.__getitem__)].append((name, t))

    def prefilter(x) -> list:
        if c.reflect_relations:
            ux, lx = A.unary_symbols(x), A.loop_symbols(x)
            ok = [y for y in B.domain if B.unary_symbols(y) == ux and B.loop_symbols(y) == lx]
        else:
            need = [n for n in names if (x,) * A.signature.arity(n) in A.relations[n]]
            ok = [y for y in B.domain if all((y,) * B.signature.arity(n) in B.relations[n] for n in need)]
        if c.allowed is not None and x in c.allowed:
            allowed = set(c.allowed[x])
            ok = [y for y in ok if y in allowed]
        return ok

    base = {x: prefilter(x) for x in A.domain}
    for x, y in c.pins.items():
        base[x] = [y] if y in base[x] else []
    if any(not v for v in base.values()):
        return

    f: dict = {}
    used: set = set()
    image_inv: dict = {}

    def candidates(x):
        pool = None
        for name, t in touching[x]:
            for q, z in enumerate(t):
                if z in f:
                    for p, w in enumerate(t):
                        if w == x:
                            lst = tgt.by_value[name][q].get(f[z], ())
                            vals = {s[p] for s in lst}
                            pool = vals if pool is None else pool & vals
                            if not pool:
                                return []
        if pool is None:
            return base[x]
        return [y for y in base[x] if y in pool]

    def consistent(x, y) -> bool:
        if injective and y in used:
            return False
        if use_order:
            ox = A.order_position(x)
            oy = B.order_position(y)
            for z, w in f.items():
                oz, ow = A.order_position(z), B.order_position(w)
                if oz < ox and not (ow < oy if injective else ow <= oy):
                    return False
                if oz > ox and not (ow > oy if injective else ow >= oy):
                    return False
        f[x] = y
        try:
            for name, t in completes[x]:
                if tuple(f[z] for z in t) not in B.relations[name]:
                    return False
            if c.reflect_relations:
                image_inv[y] = x
                try:
                    for name, s in tgt.containing[y]:
                        if all(w in image_inv for w in s):
                            if tuple(image_inv[w] for w in s) not in A.relations[name]:
                                return False
                finally:
                    del image_inv[y]
            return True
        finally:
            del f[x]

    def extend(i):
        if i == len(order):
            yield dict(f)
            return
        x = order[i]
        for y in candidates(x):
            if not consistent(x, y):
                continue
            f[x] = y
            if injective:
                used.add(y)
            if c.reflect_relations:
                image_inv[y] = x
            yield from extend(i + 1)
            del f[x]
            if injective:
                used.discard(y)
            if c.reflect_relations:
                del image_inv[y]

    # the variable order and candidate order are both fixed, so the stream is
    # deterministic; callers needing lexicographic order use ``sorted_maps``
    yield from extend(0)


def sorted_maps(A: Structure, B: Structure, c: SearchConstraint = HOM) -> list[dict]:
    """All maps from :func:`iter_maps`, sorted by image positions in source domain order."""
    bpos = {y: i for i, y in enumerate(B.domain)}
    return sorted(iter_maps(A, B, c), key=lambda m: tuple(bpos[m[x]] for x in A.domain))


def enumerate_homs(A: Structure, B: Structure, c: SearchConstraint = HOM) -> Iterator[Morphism]:
    kind = "embedding" if c.reflect_relations else "homomorphism"
    for m in iter_maps(A, B, c):
        yield Morphism(A, B, m, kind)


def enumerate_embeddings(A: Structure, B: Structure, pins: Mapping | None = None) -> Iterator[Morphism]:
    """All embeddings ``A ↪ B`` (the set of copies of A in B)."""
    c = SearchConstraint(pins=pins or {}, require_injective=True, reflect_relations=True)
    return enumerate_homs(A, B, c)


def find_hom(A: Structure, B: Structure, c: SearchConstraint = HOM) -> dict | None:
    for m in iter_maps(A, B, c):
        return m
    return None


def exists_hom(A: Structure, B: Structure, pins: Mapping | None = None) -> bool:
    return find_hom(A, B, SearchConstraint(pins=pins or {})) is not None


def exists_rooted_hom(M: RootedStructure, A: Structure, x) -> bool:
    if x not in A:
        raise UnknownElement(f"element {x!r} is not in the domain", element=x)
    return exists_hom(M.structure, A, {M.root: x})


def is_F_free(A: Structure, F: Iterable[Structure]) -> tuple[bool, Morphism | None]:
    """``(True, None)`` if no member of F maps to A, else ``(False, witness)``."""
    for member in F:
        _check_signatures(member, A, False)
        m = find_hom(member, A, SearchConstraint(respect_order=False))
        if m is not None:
            return False, Morphism(member, A, m)
    return True, None


def count_embeddings(A: Structure, B: Structure) -> int:
    return sum(1 for _ in iter_maps(A, B, EMBED))
