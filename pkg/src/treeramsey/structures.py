"""Finite relational structures and the elementary constructions on them.

A :class:`Structure` is immutable: a signature, an ordered tuple of distinct
element names, one frozenset of tuples per relation symbol, and optionally a
linear order given as a permutation of the domain.  Element names can be any
hashable value; the constructions below produce tagged tuples such as
``(part_index, name)`` and leave flattening to :meth:`Structure.relabel`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Any, Callable, Hashable, Iterable, Iterator, Mapping, Sequence

import networkx as nx

from .errors import (
    ArityMismatch,
    DuplicateElement,
    EmptyInput,
    InvalidOrder,
    InvalidPartition,
    SignatureMismatch,
    StructureError,
    UnknownElement,
    UnknownSymbol,
)

Element = Hashable

#: Name under which the linear order takes part in symbol sets (see ``reduct``).
ORDER = "<="


@dataclass(frozen=True)
class Signature:
    """Relation symbols with arities, split into a base part and unary expansion symbols."""

    arities: tuple[tuple[str, int], ...]
    tau: frozenset[str] = frozenset()
    has_order: bool = False

    def __post_init__(self):
        names = [name for name, _ in self.arities]
        if len(set(names)) != len(names):
            raise UnknownSymbol("duplicate symbol names", symbols=names)
        for name, arity in self.arities:
            if not isinstance(name, str) or not name or name == ORDER:
                raise UnknownSymbol(f"invalid symbol name {name!r}", symbol=name)
            if not isinstance(arity, int) or arity < 1:
                raise ArityMismatch(f"symbol {name} has non-positive arity", symbol=name, arity=arity)
        arity_of = dict(self.arities)
        for name in self.tau:
            if name not in arity_of:
                raise UnknownSymbol(f"expansion symbol {name} is not in the signature", symbol=name)
            if arity_of[name] != 1:
                raise ArityMismatch(f"expansion symbol {name} must be unary", symbol=name)

    @classmethod
    def of(cls, symbols: Mapping[str, int], tau: Iterable[str] = (), has_order: bool = False) -> "Signature":
        return cls(tuple(sorted(symbols.items())), frozenset(tau), bool(has_order))

    @property
    def symbols(self) -> dict[str, int]:
        return dict(self.arities)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.arities)

    def arity(self, name: str) -> int:
        for n, a in self.arities:
            if n == name:
                return a
        raise UnknownSymbol(f"unknown symbol {name!r}", symbol=name)

    @property
    def base(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.arities if n not in self.tau)

    @property
    def expansion(self) -> tuple[str, ...]:
        return tuple(sorted(self.tau))

    def base_signature(self, has_order: bool | None = None) -> "Signature":
        return Signature(
            tuple((n, a) for n, a in self.arities if n not in self.tau),
            frozenset(),
            self.has_order if has_order is None else has_order,
        )

    def restrict(self, keep: Iterable[str]) -> "Signature":
        keep = set(keep)
        unknown = keep - set(self.names) - {ORDER}
        if unknown:
            raise UnknownSymbol(f"unknown symbols {sorted(unknown)}", symbols=sorted(unknown))
        return Signature(
            tuple((n, a) for n, a in self.arities if n in keep),
            frozenset(self.tau & keep),
            self.has_order and ORDER in keep,
        )

    def with_order(self, flag: bool = True) -> "Signature":
        return Signature(self.arities, self.tau, flag)

    def expand(self, tau_symbols: Iterable[str]) -> "Signature":
        tau_symbols = list(tau_symbols)
        clash = set(tau_symbols) & set(self.names)
        if clash:
            raise UnknownSymbol(f"expansion symbols clash with existing ones: {sorted(clash)}")
        return Signature(
            tuple(sorted(self.arities + tuple((s, 1) for s in tau_symbols))),
            self.tau | frozenset(tau_symbols),
            self.has_order,
        )

    def compatible(self, other: "Signature") -> bool:
        return self.arities == other.arities and self.has_order == other.has_order


def _violations(signature: Signature, domain: Sequence, relations: Mapping, order) -> Iterator[StructureError]:
    seen = set()
    for x in domain:
        if x in seen:
            yield DuplicateElement(f"element {x!r} listed twice", element=x)
        seen.add(x)
    arity_of = signature.symbols
    for name, tuples in relations.items():
        if name not in arity_of:
            yield UnknownSymbol(f"unknown symbol {name!r}", symbol=name)
            continue
        for t in tuples:
            if len(t) != arity_of[name]:
                yield ArityMismatch(
                    f"tuple {t!r} of {name} has length {len(t)}, expected {arity_of[name]}",
                    symbol=name, tuple=t,
                )
            for x in t:
                if x not in seen:
                    yield UnknownElement(f"element {x!r} in {name}{t!r} is not in the domain", element=x, symbol=name)
    if order is not None:
        if not signature.has_order:
            yield InvalidOrder("order given but the signature carries no order symbol")
        elif len(order) != len(domain) or set(order) != seen:
            yield InvalidOrder("order must be a permutation of the domain", order=list(order))
    elif signature.has_order:
        yield InvalidOrder("signature carries an order but none was given")


class Structure:
    """A finite (possibly ordered) relational structure.

    Equality is mathematical: same signature, same element set, same tuple
    sets and same order.  The domain sequence only fixes a canonical
    enumeration order used by the searches.
    """

    __slots__ = ("signature", "domain", "relations", "order", "_pos", "_opos")

    def __init__(
        self,
        signature: Signature,
        domain: Iterable[Element],
        relations: Mapping[str, Iterable[Sequence[Element]]] | None = None,
        order: Sequence[Element] | None = None,
        *,
        check: bool = True,
    ):
        domain = tuple(domain)
        relations = dict(relations or {})
        rels = {name: frozenset(tuple(t) for t in relations.get(name, ())) for name in signature.names}
        order = tuple(order) if order is not None else None
        if check:
            problems = list(_violations(signature, domain, {k: [tuple(t) for t in v] for k, v in relations.items()}, order))
            if problems:
                err = problems[0]
                err.violations = problems
                raise err
        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "relations", rels)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "_pos", {x: i for i, x in enumerate(domain)})
        object.__setattr__(self, "_opos", {x: i for i, x in enumerate(order)} if order is not None else None)

    def __setattr__(self, key, value):
        raise AttributeError("Structure is immutable")

    def __len__(self) -> int:
        return len(self.domain)

    def __contains__(self, x) -> bool:
        return x in self._pos

    def __eq__(self, other) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return (
            self.signature == other.signature
            and self._pos.keys() == other._pos.keys()
            and self.relations == other.relations
            and self.order == other.order
        )

    def __hash__(self) -> int:
        return hash((self.signature, frozenset(self.domain), tuple(sorted(
            (k, hash(v)) for k, v in self.relations.items())), self.order))

    def __repr__(self) -> str:
        rels = ", ".join(f"{k}={sorted(map(repr, v))}" for k, v in self.relations.items() if v)
        extra = f", order={list(self.order)}" if self.order is not None else ""
        return f"Structure(domain={list(self.domain)}, {rels}{extra})"

    def position(self, x: Element) -> int:
        try:
            return self._pos[x]
        except KeyError:
            raise UnknownElement(f"element {x!r} is not in the domain", element=x) from None

    def order_position(self, x: Element) -> int:
        if self._opos is None:
            raise InvalidOrder("structure is not ordered")
        return self._opos[x]

    def precedes(self, x: Element, y: Element) -> bool:
        """``x ⪯ y`` in the linear order (reflexive)."""
        return self._opos[x] <= self._opos[y]

    def tuples(self, name: str) -> frozenset:
        try:
            return self.relations[name]
        except KeyError:
            raise UnknownSymbol(f"unknown symbol {name!r}", symbol=name) from None

    def unary_symbols(self, x: Element, names: Iterable[str] | None = None) -> frozenset[str]:
        names = self.signature.names if names is None else names
        return frozenset(n for n in names if self.signature.arity(n) == 1 and (x,) in self.relations[n])

    def tau_profile(self, x: Element) -> frozenset[str]:
        return frozenset(s for s in self.signature.tau if (x,) in self.relations[s])

    def loop_symbols(self, x: Element) -> frozenset[str]:
        """Symbols (any arity) holding on the constant tuple ``(x, ..., x)``."""
        return frozenset(n for n, a in self.signature.arities if (x,) * a in self.relations[n])

    def total_tuples(self, names: Iterable[str] | None = None) -> int:
        names = self.signature.names if names is None else names
        return sum(len(self.relations[n]) for n in names)

    def replace(self, *, relations=None, order=..., signature=None, domain=None, check=False) -> "Structure":
        rels = dict(self.relations)
        if relations:
            rels.update(relations)
        return Structure(
            signature or self.signature,
            self.domain if domain is None else domain,
            rels,
            self.order if order is ... else order,
            check=check,
        )

    def relabel(self, mapping: Mapping[Element, Element] | Callable[[Element], Element]) -> "Structure":
        """Rename elements through an injective mapping."""
        f = mapping if callable(mapping) else mapping.__getitem__
        names = [f(x) for x in self.domain]
        if len(set(names)) != len(names):
            raise DuplicateElement("relabelling is not injective")
        rels = {k: [tuple(f(x) for x in t) for t in v] for k, v in self.relations.items()}
        order = [f(x) for x in self.order] if self.order is not None else None
        return Structure(self.signature, names, rels, order, check=False)

    def elements_in_order(self) -> tuple:
        return self.order if self.order is not None else self.domain


@dataclass(frozen=True)
class RootedStructure:
    structure: Structure
    root: Element

    def __post_init__(self):
        if self.root not in self.structure:
            raise UnknownElement(f"root {self.root!r} is not in the domain", element=self.root)


@dataclass(frozen=True, eq=False)
class Morphism:
    """A map between structures tagged with the strongest property it was built for."""

    source: Structure
    target: Structure
    mapping: dict
    kind: str = "homomorphism"

    def __call__(self, x):
        return self.mapping[x]

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return self.mapping == other.mapping and self.source == other.source and self.target == other.target

    def __hash__(self):
        return hash(tuple(self.mapping[x] for x in self.source.domain))

    def as_tuple(self) -> tuple:
        """Images of the source elements in domain order."""
        return tuple(self.mapping[x] for x in self.source.domain)

    def compose(self, inner: "Morphism") -> "Morphism":
        """``self ∘ inner``."""
        kinds = ("homomorphism", "embedding", "isomorphism")
        kind = kinds[min(kinds.index(self.kind), kinds.index(inner.kind))]
        return Morphism(inner.source, self.target, {x: self.mapping[y] for x, y in inner.mapping.items()}, kind)


@dataclass(frozen=True)
class Partition:
    blocks: tuple[frozenset, ...]

    @classmethod
    def of(cls, blocks: Iterable[Iterable[Element]], domain: Sequence[Element]) -> "Partition":
        blocks = [frozenset(b) for b in blocks]
        covered: set = set()
        for b in blocks:
            if not b:
                raise InvalidPartition("empty block")
            if covered & b:
                raise InvalidPartition("blocks overlap", overlap=sorted(map(repr, covered & b)))
            covered |= b
        if covered != set(domain):
            raise InvalidPartition("blocks do not cover the domain")
        pos = {x: i for i, x in enumerate(domain)}
        blocks.sort(key=lambda b: min(pos[x] for x in b))
        return cls(tuple(blocks))

    @classmethod
    def singletons(cls, domain: Sequence[Element]) -> "Partition":
        return cls(tuple(frozenset([x]) for x in domain))


# ---------------------------------------------------------------- basic ops


def validate_structure(raw: Mapping[str, Any], sig: Signature) -> Structure:
    """Build a Structure from ``{"domain": [...], "R": [...], ..., "order": [...]}``.

    Relations may be given at top level or under a ``"relations"`` key.  All
    violations are collected; the first is raised with ``.violations`` set.
    """
    raw = dict(raw)
    domain = list(raw.pop("domain", []))
    order = raw.pop("order", None)
    relations = dict(raw.pop("relations", {}))
    relations.update(raw)
    relations = {k: [tuple(t) for t in v] for k, v in relations.items()}
    return Structure(sig, domain, relations, order)


def empty_structure(sig: Signature) -> Structure:
    return Structure(sig, (), {}, () if sig.has_order else None, check=False)


def induced_substructure(A: Structure, M: Iterable[Element]) -> Structure:
    keep = set(M)
    missing = keep - set(A.domain)
    if missing:
        raise UnknownElement(f"elements {sorted(map(repr, missing))} are not in the domain", elements=sorted(map(repr, missing)))
    domain = [x for x in A.domain if x in keep]
    rels = {k: [t for t in v if all(x in keep for x in t)] for k, v in A.relations.items()}
    order = [x for x in A.order if x in keep] if A.order is not None else None
    return Structure(A.signature, domain, rels, order, check=False)


def reduct(A: Structure, keep: Iterable[str]) -> Structure:
    """Forget every relation not in ``keep``; the order survives iff ``ORDER`` is kept."""
    sig = A.signature.restrict(keep)
    rels = {k: A.relations[k] for k in sig.names}
    return Structure(sig, A.domain, rels, A.order if sig.has_order else None, check=False)


def base_reduct(A: Structure, keep_order: bool = False) -> Structure:
    """The σ-reduct (optionally keeping the order)."""
    keep = list(A.signature.base) + ([ORDER] if keep_order else [])
    return reduct(A, keep)


def _require_same_signature(parts: Sequence[Structure]) -> Signature:
    sig = parts[0].signature
    for p in parts[1:]:
        if p.signature != sig:
            raise SignatureMismatch("structures do not share a signature")
    return sig


def structure_sum(parts: Sequence[Structure], signature: Signature | None = None) -> Structure:
    """Disjoint sum with elements tagged ``(part_index, name)``.

    If every part is ordered the result carries the concatenated (ordinal-sum)
    order; the coproduct property concerns the unordered reducts.
    """
    parts = list(parts)
    if not parts:
        if signature is None:
            raise EmptyInput("empty sum needs an explicit signature")
        return empty_structure(signature)
    sig = _require_same_signature(parts)
    domain = [(i, x) for i, P in enumerate(parts) for x in P.domain]
    rels = {
        name: [tuple((i, x) for x in t) for i, P in enumerate(parts) for t in P.relations[name]]
        for name in sig.names
    }
    order = [(i, x) for i, P in enumerate(parts) for x in P.order] if sig.has_order else None
    return Structure(sig, domain, rels, order, check=False)


def factor(A: Structure, p: Partition | Iterable[Iterable[Element]]) -> Structure:
    """Quotient by a partition; elements of the result are the blocks (frozensets).

    The result is unordered: a quotient of a linear order is not linear in general.
    """
    if not isinstance(p, Partition):
        p = Partition.of(p, A.domain)
    else:
        Partition.of(p.blocks, A.domain)
    block_of = {x: b for b in p.blocks for x in b}
    rels = {k: {tuple(block_of[x] for x in t) for t in v} for k, v in A.relations.items()}
    return Structure(A.signature.with_order(False), p.blocks, rels, None, check=False)


def join(parts: Sequence[RootedStructure]) -> RootedStructure:
    """Glue rooted structures at their roots.

    Elements are named as in :func:`structure_sum`; the merged root keeps the
    name ``(0, root_of_first_part)``.  Unary tuples on the roots merge.
    """
    parts = list(parts)
    if not parts:
        raise EmptyInput("join of no rooted structures")
    sig = _require_same_signature([p.structure for p in parts])
    merged = (0, parts[0].root)

    def name(i, x):
        return merged if x == parts[i].root else (i, x)

    domain = [merged] + [(i, x) for i, p in enumerate(parts) for x in p.structure.domain if x != p.root]
    rels = {
        k: {tuple(name(i, x) for x in t) for i, p in enumerate(parts) for t in p.structure.relations[k]}
        for k in sig.names
    }
    return RootedStructure(Structure(sig.with_order(False), domain, rels, None, check=False), merged)


# ---------------------------------------------------------------- graphs


def incidence_graph(A: Structure, symbols: Iterable[str] | None = None) -> nx.MultiGraph:
    """Bipartite multigraph: element nodes ``("elem", x)`` and tuple nodes ``("tuple", R, t)``.

    By default only base (non-expansion) symbols contribute tuple nodes.
    """
    names = A.signature.base if symbols is None else tuple(symbols)
    G = nx.MultiGraph()
    for x in A.domain:
        G.add_node(("elem", x), kind="element", element=x)
    for name in names:
        for t in sorted(A.relations[name], key=lambda t: tuple(A.position(x) for x in t)):
            node = ("tuple", name, t)
            G.add_node(node, kind="tuple", symbol=name, tuple=t)
            for i, x in enumerate(t):
                G.add_edge(node, ("elem", x), position=i)
    return G


def gaifman_graph(A: Structure) -> nx.Graph:
    G = nx.Graph()
    G.add_nodes_from(A.domain)
    for tuples in A.relations.values():
        for t in tuples:
            distinct = list(dict.fromkeys(t))
            G.add_edges_from(itertools.combinations(distinct, 2))
    return G


def is_connected(A: Structure) -> bool:
    """Connectivity of the incidence graph; the empty structure counts as connected."""
    if not A.domain:
        return True
    return nx.is_connected(incidence_graph(A, A.signature.names))


def is_tree(A: Structure) -> bool:
    """Whether the incidence graph is a tree (the empty structure is not a tree)."""
    if not A.domain:
        return False
    return nx.is_tree(incidence_graph(A, A.signature.names))


def gaifman_components(A: Structure, removed: Iterable[Element] = ()) -> list[list[Element]]:
    """Connected components of the Gaifman graph minus ``removed``, in domain order."""
    G = gaifman_graph(A)
    G.remove_nodes_from(list(removed))
    comps = [sorted(c, key=A.position) for c in nx.connected_components(G)]
    comps.sort(key=lambda c: A.position(c[0]))
    return comps


# ---------------------------------------------------------------- morphism checks


def check_homomorphism(A: Structure, B: Structure, f: Mapping, respect_order: bool = True) -> bool:
    """Definition-level check that ``f`` is a homomorphism ``A → B``."""
    if set(f) != set(A.domain) or any(y not in B for y in f.values()):
        return False
    for name, tuples in A.relations.items():
        target = B.relations.get(name)
        if target is None:
            return False
        for t in tuples:
            if tuple(f[x] for x in t) not in target:
                return False
    if respect_order and A.order is not None and B.order is not None:
        for x, y in zip(A.order, A.order[1:]):
            if not B.precedes(f[x], f[y]):
                return False
    return True


def check_embedding(A: Structure, B: Structure, f: Mapping) -> bool:
    """Injective, relation-reflecting, order-preserving (when both are ordered)."""
    if not A.signature.compatible(B.signature):
        return False
    if not check_homomorphism(A, B, f):
        return False
    if len(set(f.values())) != len(f):
        return False
    inverse = {y: x for x, y in f.items()}
    for name, tuples in B.relations.items():
        for t in tuples:
            if all(y in inverse for y in t) and tuple(inverse[y] for y in t) not in A.relations[name]:
                return False
    return True


# ---------------------------------------------------------------- canonical labelling


def _encode(A: Structure, lab: Mapping, root) -> tuple:
    rels = tuple(
        (name, tuple(sorted(tuple(lab[x] for x in t) for t in A.relations[name])))
        for name in A.signature.names
    )
    return (len(A.domain), rels, -1 if root is None else lab[root], A.order is not None)


def _refine(colors: dict, incid: dict) -> dict:
    n_classes = len(set(colors.values()))
    while True:
        sigs = {
            x: (colors[x], tuple(sorted((name, p, tuple(colors[y] for y in t)) for name, p, t in incid[x])))
            for x in colors
        }
        rank = {s: i for i, s in enumerate(sorted(set(sigs.values())))}
        new = {x: rank[sigs[x]] for x in colors}
        if len(rank) == n_classes:
            return new
        colors, n_classes = new, len(rank)


def _swap_is_automorphism(A: Structure, x, y) -> bool:
    def sw(z):
        return y if z == x else x if z == y else z

    for tuples in A.relations.values():
        for t in tuples:
            if (x in t or y in t) and tuple(sw(z) for z in t) not in tuples:
                return False
    return True


def canonical_labeling(A: Structure, root: Element | None = None) -> tuple[tuple, dict]:
    """Return ``(form, labelling)`` with ``form`` an isomorphism invariant that is complete.

    Ordered structures are labelled by order position.  Otherwise colour
    refinement plus individualisation is searched exhaustively; transpositions
    that are automorphisms prune twin branches.
    """
    if A.order is not None:
        lab = {x: i for i, x in enumerate(A.order)}
        return _encode(A, lab, root), lab
    if root is not None and root not in A:
        raise UnknownElement(f"root {root!r} is not in the domain", element=root)
    incid: dict = {x: [] for x in A.domain}
    for name in A.signature.names:
        for t in A.relations[name]:
            for p, x in enumerate(t):
                incid[x].append((name, p, t))
    best: list = [None, None]

    def search(colors):
        cells: dict = {}
        for x in A.domain:
            cells.setdefault(colors[x], []).append(x)
        if len(cells) == len(A.domain):
            enc = _encode(A, colors, root)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, dict(colors)
            return
        cell = cells[min(c for c, members in cells.items() if len(members) > 1)]
        tried: list = []
        for x in cell:
            if any(_swap_is_automorphism(A, x, y) for y in tried):
                continue
            tried.append(x)
            individual = {z: 2 * colors[z] + (0 if z == x else 1) for z in A.domain}
            search(_refine(individual, incid))

    start = {x: (1 if x == root else 0) for x in A.domain}
    search(_refine(start, incid) if A.domain else start)
    if best[0] is None:
        return _encode(A, {}, None), {}
    return best[0], best[1]


def canonical_form(A: Structure, root: Element | None = None) -> tuple:
    return canonical_labeling(A, root)[0]


def isomorphic(A: Structure, B: Structure, roots: tuple | None = None) -> Morphism | None:
    """An isomorphism ``A → B`` (mapping ``roots[0]`` to ``roots[1]`` if given), or None."""
    if not A.signature.compatible(B.signature) or len(A) != len(B):
        return None
    ra, rb = roots if roots is not None else (None, None)
    fa, la = canonical_labeling(A, ra)
    fb, lb = canonical_labeling(B, rb)
    if fa != fb:
        return None
    inv = {i: y for y, i in lb.items()}
    return Morphism(A, B, {x: inv[la[x]] for x in A.domain}, "isomorphism")


def rooted_form(R: RootedStructure) -> tuple:
    return canonical_form(R.structure, R.root)


def is_sum_decomposable(A: Structure) -> bool:
    """Brute force: some split into two nonempty blocks with no tuple across."""
    dom = list(A.domain)
    if len(dom) < 2:
        return False
    first, rest = dom[0], dom[1:]
    all_tuples = [t for v in A.relations.values() for t in v]
    for mask in range(0, 2 ** len(rest) - 1):
        left = {first} | {x for i, x in enumerate(rest) if mask >> i & 1}
        if all(len({x in left for x in t}) == 1 for t in all_tuples):
            return True
    return False
