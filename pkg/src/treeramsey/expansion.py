"""Forbidden trees, their pieces, and the unary expansion that makes the class amalgamable.

Given a finite set of forbidden trees over a base signature, a *piece* is one
branch of a tree hanging off a cut element.  Pieces are grouped by the set of
rooted structures that would complete them to a forbidden tree; each group
gets a fresh unary symbol ``S0, S1, ...``.  The canonical expansion of a
structure marks an element with ``S_i`` exactly when some piece of group
``i`` maps homomorphically onto it with the root landing there.

Membership of an expanded structure in the hereditary closure of the
canonical structures is decided exactly by :func:`is_in_C`:

* the problem reduces to one-element substructures and tuple traces;
* each of those small structures ``T`` is in the class iff one can hang,
  for every mark the base structure does not already force, one
  representative piece of that mark's group at the marked element, such
  that the result is still free of forbidden homomorphisms and its
  canonical expansion restricted to ``T`` reproduces ``T``'s marks.

Only finitely many such pendant choices exist, so the search terminates.
``bound`` caps the witness size; a verdict is ``Unknown`` only when some
choice was skipped because of the cap and no admissible choice was found.
"""

from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

import networkx as nx

from .errors import (
    ContextError,
    MembershipFailure,
    NotACut,
    NotATree,
    NotEmbedding,
    NotFFree,
    NotInClass,
    PremiseUnresolved,
    SignatureMismatch,
    TupleNotPresent,
    UnknownSymbol,
)
from .homs import find_hom, is_F_free, SearchConstraint
from .structures import (
    Morphism,
    RootedStructure,
    Signature,
    Structure,
    base_reduct,
    canonical_form,
    check_embedding,
    gaifman_components,
    induced_substructure,
    is_connected,
    is_tree,
    join,
    rooted_form,
)

log = logging.getLogger(__name__)

IN_C = "InC"
NOT_IN_C = "NotInC"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class Piece:
    rooted: RootedStructure
    origin: tuple  # (index of the tree, cut element)

    @property
    def structure(self) -> Structure:
        return self.rooted.structure

    @property
    def root(self):
        return self.rooted.root

    def __len__(self) -> int:
        return len(self.rooted.structure)


@dataclass(frozen=True)
class PieceClass:
    id: str
    representatives: tuple[Piece, ...]
    incompatibility_key: tuple

    @property
    def distinct(self) -> tuple[Piece, ...]:
        """Representatives up to rooted isomorphism, smallest first."""
        seen, out = set(), []
        for p in sorted(self.representatives, key=lambda p: (len(p), p.origin[0])):
            key = rooted_form(p.rooted)
            if key not in seen:
                seen.add(key)
                out.append(p)
        return tuple(out)


@dataclass
class MembershipVerdict:
    status: str
    certificate: dict = field(default_factory=dict)

    def __bool__(self) -> bool:
        return self.status == IN_C

    def to_json(self) -> dict:
        from .fileformat import certificate_to_json

        return {"status": self.status, "certificate": certificate_to_json(self.certificate)}


# ---------------------------------------------------------------- cuts and pieces


def _require_tree(F: Structure, index: int | None = None) -> None:
    if not is_tree(F):
        forest = len(F) > 0 and not is_connected(F) and all(
            is_tree(induced_substructure(F, comp)) for comp in gaifman_components(F)
        )
        what = "a forest (only trees are supported)" if forest else "not a tree"
        raise NotATree(f"forbidden structure{'' if index is None else f' #{index}'} is {what}",
                       index=index, forest=forest)


def cuts(F: Structure) -> list:
    """Vertex cuts of the Gaifman graph of a tree, in domain order.

    For a tree these are the elements lying in at least two tuples of arity
    at least two; unary tuples never separate anything.
    """
    _require_tree(F)
    count = {x: 0 for x in F.domain}
    for name, tuples in F.relations.items():
        if F.signature.arity(name) < 2:
            continue
        for t in tuples:
            for x in set(t):
                count[x] += 1
    return [x for x in F.domain if count[x] >= 2]


def pieces(F: Structure, m, origin_index: int = 0) -> list[Piece]:
    if m not in cuts(F):
        raise NotACut(f"{m!r} is not a cut", element=m)
    out = []
    for comp in gaifman_components(F, removed=[m]):
        M = induced_substructure(F, set(comp) | {m})
        out.append(Piece(RootedStructure(M, m), (origin_index, m)))
    return out


def _strip_root_unaries(R: RootedStructure) -> tuple[Structure, frozenset]:
    S = R.structure
    unary = [n for n, a in S.signature.arities if a == 1 and (R.root,) in S.relations[n]]
    rels = {n: S.relations[n] - {(R.root,)} for n in unary}
    return S.replace(relations=rels), frozenset(unary)


def _with_root_unaries(S: Structure, root, symbols: Iterable[str]) -> Structure:
    rels = {}
    for n in S.signature.names:
        if S.signature.arity(n) == 1:
            base = S.relations[n] - {(root,)}
            rels[n] = base | {(root,)} if n in symbols else base
    return S.replace(relations=rels)


def _splits(F: Structure, v):
    """All ways to split F at v into (part, rest), both containing v."""
    comps = gaifman_components(F, removed=[v])
    for mask in range(2 ** len(comps)):
        chosen = set().union(*[comps[i] for i in range(len(comps)) if mask >> i & 1]) if comps else set()
        rest = set(F.domain) - chosen
        yield induced_substructure(F, chosen | {v}), induced_substructure(F, rest)


def incompatibility_set(p: Piece | RootedStructure, F: Sequence[Structure]) -> frozenset:
    """Rooted canonical forms of every (B,b) whose join with ``p`` is a forbidden tree."""
    R = p.rooted if isinstance(p, Piece) else p
    core, root_unary = _strip_root_unaries(R)
    core_form = canonical_form(core, R.root)
    out = set()
    for member in F:
        if len(member) < len(core):
            continue
        for v in member.domain:
            v_unary = member.unary_symbols(v, [n for n, a in member.signature.arities if a == 1])
            if not root_unary <= v_unary:
                continue
            for part, rest in _splits(member, v):
                if len(part) != len(core):
                    continue
                part_core, _ = _strip_root_unaries(RootedStructure(part, v))
                if canonical_form(part_core, v) != core_form:
                    continue
                rest_core, _ = _strip_root_unaries(RootedStructure(rest, v))
                forced = v_unary - root_unary
                optional = sorted(v_unary & root_unary)
                for k in range(len(optional) + 1):
                    for extra in itertools.combinations(optional, k):
                        B = _with_root_unaries(rest_core, v, forced | set(extra))
                        out.add(canonical_form(B, v))
    return frozenset(out)


# ---------------------------------------------------------------- context


class ExpandedContext:
    """Forbidden trees plus the derived piece classes and expansion symbols."""

    def __init__(self, sigma: Signature, forbidden: Sequence[Structure]):
        if sigma.tau:
            raise ContextError("base signature must not contain expansion symbols")
        sigma = sigma.with_order(False)
        forbidden = list(forbidden)
        for i, F in enumerate(forbidden):
            if F.signature.with_order(False) != sigma:
                raise SignatureMismatch(f"forbidden structure #{i} is not over the base signature", index=i)
            _require_tree(F, i)
        self.sigma = sigma
        self.forbidden = tuple(base_reduct(F) for F in forbidden)

        by_key: dict[tuple, list[Piece]] = {}
        self.pieces_by_cut: dict[tuple, list[Piece]] = {}
        cache: dict = {}
        for i, F in enumerate(self.forbidden):
            for m in cuts(F):
                ps = pieces(F, m, i)
                self.pieces_by_cut[(i, m)] = ps
                for p in ps:
                    form = rooted_form(p.rooted)
                    if form not in cache:
                        cache[form] = tuple(sorted(incompatibility_set(p, self.forbidden)))
                    by_key.setdefault(cache[form], []).append(p)
        keys = sorted(by_key)
        self.classes: tuple[PieceClass, ...] = tuple(
            PieceClass(f"S{i}", tuple(by_key[k]), k) for i, k in enumerate(keys)
        )
        self.tau: tuple[str, ...] = tuple(c.id for c in self.classes)
        clash = set(self.tau) & set(sigma.names)
        if clash:
            raise ContextError(f"expansion symbol names clash with base symbols: {sorted(clash)}")
        self.signature = sigma.expand(self.tau)
        self.ordered_signature = self.signature.with_order(True)
        self._class_of_form = {}
        for cls in self.classes:
            for p in cls.representatives:
                self._class_of_form[rooted_form(p.rooted)] = cls.id
        self.singletons: list[tuple[int, Any, Structure]] = [
            (i, m, self._singleton(i, m)) for (i, m) in self.pieces_by_cut
        ]
        self.max_forbidden = max((len(F) for F in self.forbidden), default=1)
        self.registry: dict = {}
        self._verdicts: dict = {}
        self._lock = threading.Lock()

    # --- lookups

    def class_by_id(self, name: str) -> PieceClass:
        for c in self.classes:
            if c.id == name:
                return c
        raise UnknownSymbol(f"unknown expansion symbol {name!r}", symbol=name)

    def class_of_piece(self, p: Piece) -> str:
        return self._class_of_form[rooted_form(p.rooted)]

    def default_bound(self) -> int:
        return 2 * self.max_forbidden

    def _singleton(self, i: int, m) -> Structure:
        marks = {self.class_of_piece(p) for p in self.pieces_by_cut[(i, m)]}
        return Structure(self.signature, [1], {s: [(1,)] for s in marks}, check=False)

    def register(self, witness: Structure, x) -> None:
        """Record the one-element type of ``x`` as realised inside canonical ``witness``."""
        key = canonical_form(induced_substructure(witness, [x]))
        with self._lock:
            old = self.registry.get(key)
            if old is None or len(witness) < len(old[0]):
                self.registry[key] = (witness, x)

    def summary(self) -> dict:
        return {
            "classes": [
                {"id": c.id, "pieces": len(c.representatives), "distinct": len(c.distinct)}
                for c in self.classes
            ],
            "tau": list(self.tau),
        }


def piece_classes(sigma: Signature, F: Sequence[Structure]) -> ExpandedContext:
    return ExpandedContext(sigma, F)


# ---------------------------------------------------------------- expansion


def _marks(ctx: ExpandedContext, A: Structure, elements: Iterable | None = None) -> dict:
    """Map each element to the set of class ids realised at it by a rooted hom."""
    Astar = base_reduct(A)
    elements = list(A.domain if elements is None else elements)
    out = {x: set() for x in elements}
    for cls in ctx.classes:
        for p in cls.distinct:
            for x in elements:
                if cls.id in out[x]:
                    continue
                if find_hom(p.structure, Astar, SearchConstraint(pins={p.root: x}, respect_order=False)) is not None:
                    out[x].add(cls.id)
    return out


def _rooted_witness(ctx, A: Structure, cls_id: str, x) -> dict | None:
    Astar = base_reduct(A)
    for p in ctx.class_by_id(cls_id).distinct:
        m = find_hom(p.structure, Astar, SearchConstraint(pins={p.root: x}, respect_order=False))
        if m is not None:
            return {"piece": p, "map": m}
    return None


def _to_base(ctx: ExpandedContext, A: Structure) -> Structure:
    names = set(A.signature.names)
    base = set(ctx.sigma.names)
    if not base <= names or not names <= base | set(ctx.tau):
        raise SignatureMismatch("structure is not over the context's signature")
    for n in base:
        if A.signature.arity(n) != ctx.sigma.arity(n):
            raise SignatureMismatch(f"arity of {n} differs from the context")
    return base_reduct(A, keep_order=A.order is not None)


def canonical_expansion(A: Structure, ctx: ExpandedContext, register: bool = True) -> Structure:
    """The unique canonical expansion of a forbidden-tree-free base structure."""
    base = _to_base(ctx, A)
    free, witness = is_F_free(base_reduct(base), ctx.forbidden)
    if not free:
        raise NotFFree("structure admits a homomorphism from a forbidden tree",
                       member=ctx.forbidden.index(witness.source), hom=witness.mapping)
    marks = _marks(ctx, base)
    sig = ctx.signature.with_order(A.order is not None)
    rels = dict(base.relations)
    for s in ctx.tau:
        rels[s] = [(x,) for x in base.domain if s in marks[x]]
    out = Structure(sig, base.domain, rels, base.order, check=False)
    if register:
        unordered = out.replace(signature=ctx.signature, order=None)
        for x in out.domain:
            key = canonical_form(induced_substructure(unordered, [x]))
            if key not in ctx.registry:
                ctx.register(unordered, x)
    return out


def is_canonical(A: Structure, ctx: ExpandedContext) -> bool:
    try:
        return canonical_expansion(A, ctx, register=False).relations == A.relations
    except NotFFree:
        return False


def tuple_trace(A: Structure, t: Sequence, R: str) -> Structure:
    """One-tuple unfolding of ``t ∈ R^A``: positions 1..k, unary memberships copied."""
    sig = A.signature
    if R not in sig.names:
        raise UnknownSymbol(f"unknown symbol {R!r}", symbol=R)
    if R in sig.tau:
        raise UnknownSymbol(f"{R} is an expansion symbol; traces are taken for base symbols", symbol=R)
    t = tuple(t)
    if t not in A.relations[R]:
        raise TupleNotPresent(f"{t!r} is not in {R}", symbol=R, tuple=t)
    k = len(t)
    rels: dict = {n: [] for n in sig.names}
    rels[R] = [tuple(range(1, k + 1))]
    for n, a in sig.arities:
        if a == 1:
            rels[n] = sorted(set(rels[n]) | {(j + 1,) for j, x in enumerate(t) if (x,) in A.relations[n]})
    return Structure(sig.with_order(False), range(1, k + 1), rels, None, check=False)


def forbidden_singleton(F: Structure, m, ctx: ExpandedContext) -> Structure:
    """The one-element structure carrying exactly the marks of the pieces of F at m."""
    for i, G in enumerate(ctx.forbidden):
        if G == base_reduct(F):
            if m not in cuts(G):
                raise NotACut(f"{m!r} is not a cut", element=m)
            return ctx._singleton(i, m)
    # a tree outside the context: classify its pieces by incompatibility sets
    if m not in cuts(F):
        raise NotACut(f"{m!r} is not a cut", element=m)
    key_to_id = {c.incompatibility_key: c.id for c in ctx.classes}
    marks = set()
    for p in pieces(F, m):
        key = tuple(sorted(incompatibility_set(p, ctx.forbidden)))
        if key in key_to_id:
            marks.add(key_to_id[key])
    return Structure(ctx.signature, [1], {s: [(1,)] for s in marks}, check=False)


# ---------------------------------------------------------------- membership


def _tau_of(ctx, T: Structure, x) -> set:
    return {s for s in ctx.tau if (x,) in T.relations[s]}


def _base_unary(ctx, T: Structure, x) -> frozenset:
    return frozenset(n for n, a in ctx.sigma.arities if a == 1 and (x,) in T.relations[n])


def _glue(T: Structure, pendants: Sequence[tuple[Any, Piece]], tag: int = 0) -> Structure:
    """Base structure of T with each piece glued at its element by the root."""
    base = base_reduct(T)
    domain = list(base.domain)
    rels = {n: set(v) for n, v in base.relations.items()}
    for j, (x, p) in enumerate(pendants):
        def name(y, j=j, x=x, p=p):
            return x if y == p.root else ("+", tag, j, y)
        domain.extend(name(y) for y in p.structure.domain if y != p.root)
        for n, tuples in p.structure.relations.items():
            rels[n].update(tuple(name(y) for y in t) for t in tuples)
    return Structure(base.signature, domain, rels, None, check=False)


def _decide(ctx: ExpandedContext, T: Structure, bound: int | None) -> MembershipVerdict:
    """Exact membership of a (small) unordered expanded structure."""
    Tstar = base_reduct(T)
    free, w = is_F_free(Tstar, ctx.forbidden)
    if not free:
        return MembershipVerdict(NOT_IN_C, {
            "reason": "not-F-free", "structure": T,
            "member": ctx.forbidden.index(w.source), "map": w.mapping,
        })
    for i, m, E in ctx.singletons:
        need = _tau_of(ctx, E, 1)
        for x in T.domain:
            if need <= _tau_of(ctx, T, x):
                return MembershipVerdict(NOT_IN_C, {
                    "reason": "forbidden-singleton", "structure": T,
                    "member": i, "cut": m, "singleton": E, "map": {1: x},
                })
    forced = _marks(ctx, Tstar)
    for x in T.domain:
        extra = forced[x] - _tau_of(ctx, T, x)
        if extra:
            cls = sorted(extra)[0]
            hw = _rooted_witness(ctx, Tstar, cls, x)
            return MembershipVerdict(NOT_IN_C, {
                "reason": "missing-mark", "structure": T, "element": x, "symbol": cls,
                "piece": hw["piece"], "map": hw["map"],
            })
    target = {x: _tau_of(ctx, T, x) for x in T.domain}
    needs = [(x, s) for x in T.domain for s in sorted(target[x] - forced[x])]

    options: list[list[Piece]] = []
    for x, s in needs:
        ux = _base_unary(ctx, T, x)
        usable = []
        for p in ctx.class_by_id(s).distinct:
            if not _base_unary(ctx, p.structure, p.root) <= ux:
                continue
            X = _glue(T, [(x, p)])
            if not is_F_free(X, ctx.forbidden)[0]:
                continue
            got = _marks(ctx, X, T.domain)
            if any(not got[y] <= target[y] for y in T.domain):
                continue
            usable.append(p)
        if not usable:
            return MembershipVerdict(NOT_IN_C, {
                "reason": "no-admissible-piece", "structure": T, "element": x, "symbol": s,
            })
        options.append(usable)

    skipped = 0
    tried = 0
    for choice in itertools.product(*options):
        size = len(T) + sum(len(p) - 1 for p in choice)
        if bound is not None and size > bound:
            skipped += 1
            continue
        tried += 1
        X = _glue(T, [(x, p) for (x, _), p in zip(needs, choice)])
        if not is_F_free(X, ctx.forbidden)[0]:
            continue
        got = _marks(ctx, X, T.domain)
        if all(got[y] == target[y] for y in T.domain):
            witness = canonical_expansion(X, ctx, register=False)
            return MembershipVerdict(IN_C, {"reason": "witness", "structure": T, "witness": witness})
    if skipped:
        return MembershipVerdict(UNKNOWN, {
            "reason": "bound-exhausted", "structure": T, "bound": bound,
            "skipped": skipped, "tried": tried,
        })
    return MembershipVerdict(NOT_IN_C, {
        "reason": "exhausted", "structure": T, "needs": needs, "tried": tried,
    })


def decide_small(ctx: ExpandedContext, T: Structure, bound: int | None = None) -> MembershipVerdict:
    """Cached exact decision for a one-element substructure or a tuple trace."""
    T = T.replace(signature=ctx.signature, order=None) if T.order is not None else T
    key = (canonical_form(T), bound)
    with ctx._lock:
        hit = ctx._verdicts.get(key)
    if hit is not None:
        # the certificate may name an isomorphic copy; it carries that copy along
        return hit
    verdict = _decide(ctx, T, bound)
    with ctx._lock:
        ctx._verdicts.setdefault(key, verdict)
    if verdict.status == IN_C and len(T) == 1:
        ctx.register(verdict.certificate["witness"], T.domain[0])
    return verdict


def _parts(A: Structure):
    """One-element substructures and tuple traces (the local parts of A)."""
    for x in A.domain:
        yield ("element", x), induced_substructure(A, [x])
    for R in A.signature.base:
        for t in sorted(A.relations[R], key=lambda t: tuple(A.position(x) for x in t)):
            yield ("trace", R, t), tuple_trace(A, t, R)


def is_in_C(A: Structure, ctx: ExpandedContext, bound: int | None = -1, certify: bool = True) -> MembershipVerdict:
    """Decide membership of an expanded (possibly ordered) structure in the class.

    ``bound`` defaults to twice the largest forbidden tree; ``None`` means no cap.
    """
    if bound == -1:
        bound = ctx.default_bound()
    if set(A.signature.names) != set(ctx.signature.names):
        raise SignatureMismatch("structure is not over the expanded signature")
    U = A.replace(signature=ctx.signature, order=None) if A.order is not None or A.signature != ctx.signature else A
    unknown = None
    seen: dict = {}
    for where, T in _parts(U):
        if where[0] == "element":
            key = canonical_form(T)
            if key in ctx.registry:
                continue
        else:
            key = canonical_form(T)
        if key in seen:
            continue
        v = decide_small(ctx, T, bound)
        seen[key] = v.status
        if v.status == NOT_IN_C:
            return MembershipVerdict(NOT_IN_C, {"part": where, **v.certificate})
        if v.status == UNKNOWN and unknown is None:
            unknown = MembershipVerdict(UNKNOWN, {"part": where, **v.certificate})
    if unknown is not None:
        return unknown
    if not certify:
        return MembershipVerdict(IN_C, {"reason": "local"})
    witness = canonize(U, ctx, bound)
    return MembershipVerdict(IN_C, {"reason": "canonical-superstructure", "witness": witness})


def canonize(A: Structure, ctx: ExpandedContext, bound: int | None = -1) -> Structure:
    """Glue a canonical witness onto every element (the element names of A are kept)."""
    if bound == -1:
        bound = ctx.default_bound()
    U = A.replace(signature=ctx.signature, order=None) if A.order is not None or A.signature != ctx.signature else A
    domain = list(U.domain)
    taken = set(domain)
    rels = {n: set(v) for n, v in U.relations.items()}
    for x in U.domain:
        single = induced_substructure(U, [x])
        # the cached decision depends only on the isomorphism type, so prefer it to the registry
        v = decide_small(ctx, single, bound)
        if v.status == IN_C:
            W, w = v.certificate["witness"], v.certificate["structure"].domain[0]
        elif (key := canonical_form(single)) in ctx.registry:
            W, w = ctx.registry[key]
        else:
            raise PremiseUnresolved(f"one-element substructure at {x!r} is {v.status}",
                                    element=x, status=v.status)
        tag = 0
        while any(("+", tag, x, y) in taken for y in W.domain):
            tag += 1

        def name(y, x=x, w=w, tag=tag):
            return x if y == w else ("+", tag, x, y)

        for y in W.domain:
            if y != w:
                domain.append(name(y))
                taken.add(name(y))
        for n, tuples in W.relations.items():
            rels[n].update(tuple(name(y) for y in t) for t in tuples)
    return Structure(ctx.signature, domain, rels, None, check=False)


def verify_certificate(ctx: ExpandedContext, A: Structure, verdict: MembershipVerdict) -> bool:
    """Re-check a membership certificate without trusting the search that produced it."""
    cert = verdict.certificate
    U = A.replace(signature=ctx.signature, order=None) if A.order is not None or A.signature != ctx.signature else A
    if verdict.status == IN_C:
        W = cert.get("witness")
        if W is None:
            return False
        if not set(U.domain) <= set(W.domain) or induced_substructure(W, U.domain) != U:
            return False
        return is_canonical(W, ctx)
    if verdict.status != NOT_IN_C:
        return False
    T = cert["structure"]
    where = cert.get("part")
    if where is not None:
        if where[0] == "element":
            expected = induced_substructure(U, [where[1]])
        else:
            expected = tuple_trace(U, where[2], where[1])
        if canonical_form(expected) != canonical_form(T):
            return False
    reason = cert["reason"]
    Tstar = base_reduct(T)
    if reason == "not-F-free":
        F = ctx.forbidden[cert["member"]]
        from .structures import check_homomorphism
        return check_homomorphism(F, Tstar, cert["map"])
    if reason == "forbidden-singleton":
        from .structures import check_homomorphism
        return check_homomorphism(cert["singleton"], T, cert["map"])
    if reason == "missing-mark":
        from .structures import check_homomorphism
        p = cert["piece"]
        cls = ctx.class_of_piece(p)
        ok_hom = check_homomorphism(p.structure, Tstar, cert["map"], respect_order=False)
        return ok_hom and cert["map"][p.root] == cert["element"] and (cert["element"],) not in T.relations[cls]
    if reason in ("no-admissible-piece", "exhausted"):
        return _decide(ctx, T, None).status == NOT_IN_C
    return False


# ---------------------------------------------------------------- amalgamation


def _linear_extension(domain: Sequence, chains: Iterable[Sequence], priority) -> list:
    G = nx.DiGraph()
    G.add_nodes_from(domain)
    for chain in chains:
        G.add_edges_from(zip(chain, chain[1:]))
    if not nx.is_directed_acyclic_graph(G):
        raise MembershipFailure("orders of the two structures are inconsistent on the shared part")
    return list(nx.lexicographical_topological_sort(G, key=priority))


def free_amalgam(A: Structure, B1: Structure, B2: Structure, f1: Morphism | Mapping, f2: Morphism | Mapping,
                 ctx: ExpandedContext | None, check_members: bool = True) -> tuple[Structure, Morphism, Morphism]:
    """Free amalgam of B1 and B2 over A; elements are tagged ``(1, b)`` / ``(2, b)``."""
    m1 = f1.mapping if isinstance(f1, Morphism) else dict(f1)
    m2 = f2.mapping if isinstance(f2, Morphism) else dict(f2)
    if not check_embedding(A, B1, m1):
        raise NotEmbedding("f1 is not an embedding", side=1)
    if not check_embedding(A, B2, m2):
        raise NotEmbedding("f2 is not an embedding", side=2)
    if check_members and ctx is not None:
        for label, S in (("A", A), ("B1", B1), ("B2", B2)):
            v = is_in_C(S, ctx, None, certify=False)
            if v.status != IN_C:
                raise NotInClass(f"{label} is not in the class", which=label, status=v.status)
    shared = {m2[a]: (1, m1[a]) for a in A.domain}

    def g2name(b):
        return shared.get(b, (2, b))

    domain = [(1, b) for b in B1.domain] + [(2, b) for b in B2.domain if b not in shared]
    rels = {
        n: {tuple((1, x) for x in t) for t in B1.relations[n]} | {tuple(g2name(x) for x in t) for t in B2.relations[n]}
        for n in B1.signature.names
    }
    order = None
    if B1.order is not None and B2.order is not None:
        pos1 = {(1, b): i for i, b in enumerate(B1.order)}
        pos2 = {g2name(b): i for i, b in enumerate(B2.order)}
        key = {x: (pos1.get(x, len(pos1)), pos2.get(x, len(pos2))) for x in domain}
        order = _linear_extension(
            domain,
            [[(1, b) for b in B1.order], [g2name(b) for b in B2.order]],
            lambda x: key[x],
        )
    C = Structure(B1.signature, domain, rels, order, check=False)
    g1 = Morphism(B1, C, {b: (1, b) for b in B1.domain}, "embedding")
    g2 = Morphism(B2, C, {b: g2name(b) for b in B2.domain}, "embedding")
    if not (check_embedding(B1, C, g1.mapping) and check_embedding(B2, C, g2.mapping)):
        raise MembershipFailure("amalgam maps are not embeddings")
    if ctx is not None:
        v = is_in_C(C, ctx, None, certify=False)
        if v.status != IN_C:
            raise MembershipFailure("free amalgam is not in the class", status=v.status)
    return C, g1, g2


# ---------------------------------------------------------------- subpiece replacement


def subpieces(ctx: ExpandedContext, p: Piece) -> list[Piece]:
    """Pieces of the same tree whose structure is a substructure of ``p``."""
    i = p.origin[0]
    dom = set(p.structure.domain)
    out = []
    for (j, m), ps in ctx.pieces_by_cut.items():
        if j != i:
            continue
        for q in ps:
            if set(q.structure.domain) <= dom and (q.root == p.root or p.root not in q.structure.domain):
                out.append(q)
    return out


def subpiece_replacement(p: Piece, sub: Piece, replacement: Piece) -> RootedStructure:
    """Replace ``sub`` inside ``p`` by ``replacement``, identifying their roots."""
    M = p.structure
    keep = (set(M.domain) - set(sub.structure.domain)) | {sub.root}
    outer = RootedStructure(induced_substructure(M, keep), sub.root)
    glued = join([outer, replacement.rooted])
    # relocate the root of the result onto the element that was p's root
    if p.root == sub.root:
        new_root = glued.root
    elif p.root in keep:
        new_root = (0, p.root)
    else:
        raise ContextError("subpiece contains the root of the piece")
    return RootedStructure(glued.structure, new_root)
