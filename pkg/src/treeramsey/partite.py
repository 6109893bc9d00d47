"""Rectified and partite structures, the partite lemma and the partite construction.

Element naming conventions:

* ``rectified_structure`` names elements ``(a, i)``: the ``i``-th element of
  the part over ``a``;
* ``build_C0`` and ``partite_step`` flatten elements to consecutive ints and
  keep the provenance in tables on the step record.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Iterator, Mapping, Sequence

import networkx as nx

from .errors import (
    InvalidOrder,
    NoEmbedding,
    NotInClass,
    NotPartite,
    NotRectified,
    NotRectifiedInput,
    PartnerRefuted,
    ReplayFailure,
    SearchBudgetExhausted,
    SizeLimitExceeded,
)
from .expansion import IN_C, ExpandedContext, is_in_C
from .homs import SearchConstraint, iter_maps, sorted_maps
from .structures import Structure, base_reduct, check_embedding, induced_substructure

log = logging.getLogger(__name__)

P_PARTITE = "P-partite"
RECTIFIED = "A-rectified"
TRANSVERSAL = "transversal"


@dataclass(frozen=True, eq=False)
class PartiteStructure:
    carrier: Structure
    parts: Mapping  # element of carrier -> element of index
    index: Structure
    mode: str = P_PARTITE

    def part(self, p) -> list:
        """Elements over ``p`` in carrier order."""
        return [x for x in self.carrier.elements_in_order() if self.parts[x] == p]

    def part_sizes(self) -> list[int]:
        return [len(self.part(p)) for p in self.index.elements_in_order()]

    def __len__(self) -> int:
        return len(self.carrier)


# ---------------------------------------------------------------- predicates


def _order_compatible(X: Structure, iota: Mapping, I: Structure) -> bool:
    seq = X.elements_in_order()
    return all(I.precedes(iota[x], iota[y]) for x, y in zip(seq, seq[1:]))


def _injective_on(iota: Mapping, t) -> bool:
    return all((x == y) == (iota[x] == iota[y]) for x, y in itertools.combinations(t, 2))


def _preimage_tuples(parts_of: Mapping, a_tuple) -> Iterator[tuple]:
    """Tuples whose image is ``a_tuple`` and on which the part map is injective."""
    distinct = list(dict.fromkeys(a_tuple))
    for pick in itertools.product(*(parts_of.get(a, ()) for a in distinct)):
        chosen = dict(zip(distinct, pick))
        yield tuple(chosen[a] for a in a_tuple)


def is_rectified(X: Structure, iota: Mapping, A: Structure, literal: bool = False) -> bool:
    """The rectification biconditional for every symbol, plus order compatibility."""
    if X.signature.names != A.signature.names or set(iota) != set(X.domain):
        return False
    if X.order is not None and A.order is not None and not _order_compatible(X, iota, A):
        return False
    if literal:
        for name, arity in X.signature.arities:
            for t in itertools.product(X.domain, repeat=arity):
                lhs = t in X.relations[name]
                rhs = _injective_on(iota, t) and tuple(iota[x] for x in t) in A.relations[name]
                if lhs != rhs:
                    return False
        return True
    parts_of: dict = {}
    for x in X.domain:
        parts_of.setdefault(iota[x], []).append(x)
    for name in X.signature.names:
        rel = X.relations[name]
        for t in rel:
            if not _injective_on(iota, t) or tuple(iota[x] for x in t) not in A.relations[name]:
                return False
        expected = 0
        for a in A.relations[name]:
            for t in _preimage_tuples(parts_of, a):
                if t not in rel:
                    return False
                expected += 1
        if expected != len(rel):
            return False
    return True


def is_p_partite(X: Structure, iota: Mapping, P: Structure) -> bool:
    """Structural part of the P-partite definition (class membership is checked separately)."""
    base = X.signature.base
    if set(iota) != set(X.domain) or any(iota[x] not in P for x in X.domain):
        return False
    if X.order is None or P.order is None or not _order_compatible(X, iota, P):
        return False
    for name in base:
        for t in X.relations[name]:
            if tuple(iota[x] for x in t) not in P.relations[name]:
                return False
            if not _injective_on(iota, t):
                return False
    for x in X.domain:
        for name, arity in P.signature.arities:
            if ((x,) * arity in X.relations[name]) != ((iota[x],) * arity in P.relations[name]):
                return False
    return True


def is_transversal(X: Structure, iota: Mapping, P: Structure) -> bool:
    return is_p_partite(X, iota, P) and check_embedding(base_reduct(X, keep_order=True), P, dict(iota))


def _require_member(S: Structure, ctx: ExpandedContext | None, what: str) -> None:
    if ctx is None:
        return
    v = is_in_C(S, ctx, None, certify=False)
    if v.status != IN_C:
        raise NotInClass(f"{what} is not in the class", which=what, status=v.status)


# ---------------------------------------------------------------- rectified structures


def _sizes_list(A: Structure, sizes) -> list[int]:
    order = A.elements_in_order()
    if isinstance(sizes, Mapping):
        return [int(sizes.get(a, 0)) for a in order]
    sizes = list(sizes)
    if len(sizes) != len(order):
        raise NotRectified("one part size per element of A is required", sizes=sizes)
    return [int(s) for s in sizes]


def rectified_structure(A: Structure, part_sizes, ctx: ExpandedContext | None = None) -> PartiteStructure:
    """The A-rectified structure with the given part sizes (elements ``(a, i)``)."""
    if A.order is None:
        raise InvalidOrder("rectified structures need an ordered index structure")
    _require_member(A, ctx, "A")
    sizes = _sizes_list(A, part_sizes)
    if any(s < 0 for s in sizes):
        raise NotRectified("part sizes must be non-negative", sizes=sizes)
    order = [(a, i) for a, s in zip(A.order, sizes) for i in range(s)]
    parts_of = {a: [(a, i) for i in range(s)] for a, s in zip(A.order, sizes)}
    rels = {
        name: [t for a in A.relations[name] for t in _preimage_tuples(parts_of, a)]
        for name in A.signature.names
    }
    X = Structure(A.signature, order, rels, order, check=False)
    return PartiteStructure(X, {x: x[0] for x in order}, A, RECTIFIED)


def partite_lemma_sizes(b_sizes: Sequence[int], r: int) -> list[int]:
    """Part sizes of the partite-lemma structure for parts ``b_sizes`` (in A order) and r colours."""
    if r < 1:
        raise ValueError("r must be positive")
    if not b_sizes:
        return []
    k = max(0, r * (b_sizes[0] - 1) + 1)
    if len(b_sizes) == 1:
        return [k]
    return [k] + partite_lemma_sizes(b_sizes[1:], r ** k)


def partite_lemma(A: Structure, B: PartiteStructure, r: int, ctx: ExpandedContext | None = None,
                  max_size: int | None = None) -> PartiteStructure:
    """An A-rectified E with E → (B)^(A,id)_r for rectified embeddings."""
    if B.mode != RECTIFIED or not is_rectified(B.carrier, B.parts, A):
        raise NotRectified("B is not A-rectified")
    sizes = partite_lemma_sizes([len(B.part(a)) for a in A.elements_in_order()], r)
    total = sum(sizes)
    if max_size is not None and total > max_size:
        raise SizeLimitExceeded(f"partite lemma needs {total} elements", size=total, sizes=sizes)
    return rectified_structure(A, sizes, ctx)


def rectified_embeddings(B: PartiteStructure, E: PartiteStructure) -> Iterator[dict]:
    """Embeddings of rectified structures: order-preserving injections part by part."""
    A = E.index
    blocks = [(B.part(a), E.part(a)) for a in A.elements_in_order()]
    per_part = [list(itertools.combinations(tgt, len(src))) for src, tgt in blocks]
    for combo in itertools.product(*per_part):
        g = {}
        for (src, _), pick in zip(blocks, combo):
            g.update(zip(src, pick))
        yield g


def count_rectified_embeddings(B: PartiteStructure, E: PartiteStructure) -> int:
    return math.prod(math.comb(len(E.part(a)), len(B.part(a))) for a in E.index.elements_in_order())


def sections(E: PartiteStructure) -> Iterator[tuple]:
    """Rectified embeddings of (A, id), as tuples in A order."""
    return itertools.product(*(E.part(a) for a in E.index.elements_in_order()))


def select_monochromatic(E: PartiteStructure, B: PartiteStructure, chi: Callable[[tuple], Any], r: int) -> dict:
    """A rectified embedding of B into E on which ``chi`` is constant, by the pigeonhole recursion.

    ``chi`` colours sections of E (tuples in A order).  E must have at least
    the partite-lemma part sizes for B and r.
    """
    A = E.index
    order = list(A.elements_in_order())
    e_parts = [E.part(a) for a in order]
    b_parts = [B.part(a) for a in order]

    def pick(elements, colour_of, need):
        """``need`` elements (in order) sharing one colour."""
        if need == 0:
            return []
        buckets: dict = {}
        for c in elements:
            buckets.setdefault(colour_of(c), []).append(c)
            if len(buckets[colour_of(c)]) == need:
                return buckets[colour_of(c)]
        raise ReplayFailure("pigeonhole failed: part too small", need=need, available=len(elements))

    def solve(level: int, colour: Callable[[tuple], Any]) -> list[list]:
        """Chosen elements per part for parts ``level..``; ``colour`` takes a section suffix."""
        if level == len(order) - 1:
            return [pick(e_parts[level], lambda c: colour((c,)), len(b_parts[level]))]
        head = e_parts[level]

        def vector(suffix):
            return tuple(colour((c,) + suffix) for c in head)

        rest = solve(level + 1, vector)
        if all(rest_part for rest_part in rest):
            probe = tuple(part[0] for part in rest)
            chosen = pick(head, lambda c: colour((c,) + probe), len(b_parts[level]))
        else:
            # no section of the rest exists, so any choice is monochromatic
            chosen = head[: len(b_parts[level])]
            if len(chosen) < len(b_parts[level]):
                raise ReplayFailure("part too small", level=level)
        return [chosen] + rest

    if not order:
        return {}
    chosen = solve(0, chi)
    g = {}
    for src, tgt in zip(b_parts, chosen):
        g.update(zip(src, tgt))
    return g


# ---------------------------------------------------------------- rectification


def _profile(X: Structure, x) -> frozenset:
    return X.tau_profile(x)


def rectify(C: PartiteStructure, ctx: ExpandedContext | None = None) -> PartiteStructure:
    """Add every tuple whose trace and position-wise expansion profile match an existing one."""
    X, iota = C.carrier, C.parts
    if not is_p_partite(X, iota, C.index):
        raise NotPartite("input is not P-partite")
    _require_member(X, ctx, "C")
    by_key: dict = {}
    for x in X.domain:
        by_key.setdefault((iota[x], _profile(X, x)), []).append(x)
    rels = dict(X.relations)
    for name in X.signature.base:
        new = set(X.relations[name])
        for y in X.relations[name]:
            distinct = list(dict.fromkeys(y))
            pools = [by_key[(iota[z], _profile(X, z))] for z in distinct]
            for pick in itertools.product(*pools):
                chosen = dict(zip(distinct, pick))
                new.add(tuple(chosen[z] for z in y))
        rels[name] = frozenset(new)
    D = X.replace(relations=rels)
    return PartiteStructure(D, iota, C.index, P_PARTITE)


def satisfies_part_rectified(D: PartiteStructure) -> bool:
    return rectify(D).carrier == D.carrier


def partite_embeddings(A: PartiteStructure, D: PartiteStructure) -> Iterator[dict]:
    allowed = {a: [x for x in D.carrier.domain if D.parts[x] == A.parts[a]] for a in A.carrier.domain}
    return iter_maps(A.carrier, D.carrier, SearchConstraint(require_injective=True, reflect_relations=True,
                                                            allowed=allowed))


def rectified_substructure(D: PartiteStructure, A: PartiteStructure) -> PartiteStructure:
    """Elements of D over the trace of A whose expansion profile matches; rectified over A."""
    if not is_transversal(A.carrier, A.parts, A.index):
        raise NotRectifiedInput("A is not transversal")
    if not satisfies_part_rectified(D):
        raise NotRectifiedInput("D is not rectified")
    if next(partite_embeddings(A, D), None) is None:
        raise NoEmbedding("no partite embedding of A into D")
    back = {A.parts[a]: a for a in A.carrier.domain}
    keep = [
        x for x in D.carrier.domain
        if D.parts[x] in back and _profile(D.carrier, x) == _profile(A.carrier, back[D.parts[x]])
    ]
    B = induced_substructure(D.carrier, keep)
    iota = {x: back[D.parts[x]] for x in keep}
    return PartiteStructure(B, iota, A.carrier, RECTIFIED)


# ---------------------------------------------------------------- construction


def _star(S: Structure) -> Structure:
    return base_reduct(S, keep_order=True)


def build_C0(P: Structure, B: Structure) -> tuple[PartiteStructure, list[dict], list[dict]]:
    """Disjoint copies of B, one per embedding of its base reduct into P.

    Returns ``(C0, embeddings f, distinguished copies c_f)``; elements are ints.
    """
    fs = sorted_maps(_star(B), P, SearchConstraint(require_injective=True, reflect_relations=True))
    ppos = {p: i for i, p in enumerate(P.order)}
    bpos = {x: i for i, x in enumerate(B.order)}
    cells = [(fi, x) for fi in range(len(fs)) for x in B.domain]
    cells.sort(key=lambda c: (ppos[fs[c[0]][c[1]]], c[0], bpos[c[1]]))
    name = {c: i for i, c in enumerate(cells)}
    rels = {
        n: [tuple(name[(fi, x)] for x in t) for fi in range(len(fs)) for t in B.relations[n]]
        for n in B.signature.names
    }
    X = Structure(B.signature, range(len(cells)), rels, range(len(cells)), check=False)
    iota = {name[(fi, x)]: fs[fi][x] for fi, x in cells}
    copies = [{x: name[(fi, x)] for x in B.domain} for fi in range(len(fs))]
    return PartiteStructure(X, iota, P, P_PARTITE), fs, copies


@dataclass
class StepRecord:
    k: int
    e_k: dict
    trivial: bool
    D: PartiteStructure | None = None
    B: PartiteStructure | None = None
    E: PartiteStructure | None = None
    G: list = field(default_factory=list)
    lam: list = field(default_factory=list)  # per g: dict element of D -> element of C_k
    e_names: dict = field(default_factory=dict)  # element of E -> element of C_k

    def summary(self) -> dict:
        if self.trivial:
            return {"k": self.k, "trivial": True}
        return {
            "k": self.k,
            "trivial": False,
            "D": len(self.D),
            "B": len(self.B),
            "E": len(self.E),
            "E_parts": self.E.part_sizes(),
            "copies": len(self.G),
        }


@dataclass
class ConstructionTrace:
    A: Structure
    B: Structure
    P: Structure
    r: int
    embeddings: list  # e_1..e_N
    C0: PartiteStructure
    fs: list
    distinguished: list
    steps: list = field(default_factory=list)
    stages: list = field(default_factory=list)  # C_0 .. C_N

    @property
    def result(self) -> PartiteStructure:
        return self.stages[-1]

    def summary(self) -> dict:
        return {
            "P": len(self.P),
            "N": len(self.embeddings),
            "C0": len(self.C0),
            "C": len(self.result),
            "steps": [s.summary() for s in self.steps],
        }


def _step_size(B: PartiteStructure, E_sizes: Sequence[int], D_size: int, A: Structure) -> int:
    copies = math.prod(math.comb(e, len(B.part(a))) for a, e in zip(A.elements_in_order(), E_sizes))
    return sum(E_sizes) + copies * (D_size - len(B))


def partite_step(C_prev: PartiteStructure, e_k: Mapping, A: Structure, r: int, ctx: ExpandedContext | None,
                 k: int = 0, max_size: int | None = None) -> tuple[PartiteStructure, StepRecord]:
    P = C_prev.index
    A_part = PartiteStructure(A, dict(e_k), P, TRANSVERSAL)
    if next(partite_embeddings(A_part, C_prev), None) is None:
        return C_prev, StepRecord(k, dict(e_k), True)
    D = rectify(C_prev)
    Bk = rectified_substructure(D, A_part)
    sizes = partite_lemma_sizes([len(Bk.part(a)) for a in A.elements_in_order()], r)
    predicted = _step_size(Bk, sizes, len(D), A)
    if max_size is not None and predicted > max_size:
        raise SizeLimitExceeded(f"step {k} would produce {predicted} elements", step=k, size=predicted)
    Ek = partite_lemma(A, Bk, r)
    G = list(rectified_embeddings(Bk, Ek))

    E_order = Ek.carrier.order
    e_names = {y: i for i, y in enumerate(E_order)}
    in_B = set(Bk.carrier.domain)
    outside = [x for x in D.carrier.order if x not in in_B]
    lam = []
    nxt = len(E_order)
    for g in G:
        table = {x: e_names[g[x]] for x in Bk.carrier.domain}
        for x in outside:
            table[x] = nxt
            nxt += 1
        lam.append(table)
    domain = list(range(nxt))
    rels = {
        n: {tuple(table[x] for x in t) for table in lam for t in D.carrier.relations[n]}
        for n in D.carrier.signature.names
    }
    iota = {}
    for y, i in e_names.items():
        iota[i] = e_k[Ek.parts[y]]
    for table in lam:
        for x in outside:
            iota[table[x]] = D.parts[x]

    # order: P-parts in P order; inside a part, a linear extension of E's order
    # and of each copy's D order
    dpos = {x: i for i, x in enumerate(D.carrier.order)}
    key = {i: (-1, i) for i in e_names.values()}
    for gi, table in enumerate(lam):
        for x in outside:
            key[table[x]] = (gi, dpos[x])
    graph = nx.DiGraph()
    graph.add_nodes_from(domain)
    e_seq = [e_names[y] for y in E_order]
    graph.add_edges_from((a, b) for a, b in zip(e_seq, e_seq[1:]) if iota[a] == iota[b])
    for table in lam:
        seq = [table[x] for x in D.carrier.order]
        graph.add_edges_from((a, b) for a, b in zip(seq, seq[1:]) if iota[a] == iota[b])
    order = []
    for p in P.order:
        members = [i for i in domain if iota[i] == p]
        order.extend(nx.lexicographical_topological_sort(graph.subgraph(members), key=lambda i: key[i]))
    Ck = Structure(D.carrier.signature, domain, rels, order, check=False)
    record = StepRecord(k, dict(e_k), False, D, Bk, Ek, G, lam, e_names)
    return PartiteStructure(Ck, iota, P, P_PARTITE), record


def partite_construction(A: Structure, B: Structure, r: int, ctx: ExpandedContext,
                         P: Structure | None = None, max_size: int | None = None,
                         budget: int = 2 ** 24) -> tuple[PartiteStructure, ConstructionTrace]:
    from .verify import ArrowInstance, arrow_check, REFUTED, INFEASIBLE

    for label, S in (("A", A), ("B", B)):
        if S.order is None:
            raise InvalidOrder(f"{label} must be ordered")
        _require_member(S, ctx, label)
    A_star, B_star = _star(A), _star(B)
    if P is None:
        P = find_partner_P(A_star, B_star, r, budget=budget)
    else:
        verdict = arrow_check(ArrowInstance(P, B_star, A_star, r), budget=budget)
        if verdict.status == REFUTED:
            raise PartnerRefuted("supplied P does not satisfy the arrow", counterexample=verdict.witness)
        if verdict.status == INFEASIBLE:
            log.warning("partner structure could not be certified exhaustively (cost %s)", verdict.witness)
    C0, fs, copies = build_C0(P, B)
    es = sorted_maps(A_star, P, SearchConstraint(require_injective=True, reflect_relations=True))
    trace = ConstructionTrace(A, B, P, r, es, C0, fs, copies, [], [C0])
    C = C0
    for k, e in enumerate(es, start=1):
        C, rec = partite_step(C, e, A, r, ctx, k, max_size)
        trace.steps.append(rec)
        trace.stages.append(C)
        log.info("step %d/%d: %s", k, len(es), rec.summary())
    return C, trace


def find_partner_P(A_star: Structure, B_star: Structure, r: int, budget: int = 2 ** 24,
                   max_extra: int = 6, max_candidates: int = 64) -> Structure:
    """Search for an ordered base structure P with P → (B*)^(A*)_r, certified exhaustively."""
    from .verify import ArrowInstance, arrow_check, VERIFIED

    if r == 1:
        return B_star
    spent = 0
    n_b = len(B_star)
    for n in range(n_b, n_b + max_extra + 1):
        placements = list(itertools.combinations(range(n), n_b))
        seen: set = set()
        candidates = []

        def union(chosen):
            rels: dict = {name: set() for name in B_star.signature.names}
            for pl in chosen:
                m = dict(zip(B_star.order, pl))
                for name, tuples in B_star.relations.items():
                    rels[name].update(tuple(m[x] for x in t) for t in tuples)
            return Structure(B_star.signature, range(n), rels, range(n), check=False)

        candidates.append(union(placements))
        for drop in range(1, len(placements)):
            for omitted in itertools.combinations(range(len(placements)), drop):
                candidates.append(union([pl for i, pl in enumerate(placements) if i not in omitted]))
                if len(candidates) >= max_candidates:
                    break
            if len(candidates) >= max_candidates:
                break
        for cand in candidates:
            key = tuple(sorted((k, tuple(sorted(v))) for k, v in cand.relations.items()))
            if key in seen:
                continue
            seen.add(key)
            verdict = arrow_check(ArrowInstance(cand, B_star, A_star, r), budget=budget)
            spent += verdict.colorings_checked
            if verdict.status == VERIFIED:
                return cand
            if spent > budget:
                raise SearchBudgetExhausted("partner search exceeded its budget", size=n, colorings=spent)
    raise SearchBudgetExhausted("no partner found within the size range", size=n_b + max_extra, colorings=spent)


# ---------------------------------------------------------------- verification of the construction


def compose_chain(trace: ConstructionTrace, choice: Sequence[int]) -> dict:
    """``h = h_N ∘ … ∘ h_1`` on C_0 for the given copy index per step (ignored on trivial steps)."""
    h = {x: x for x in trace.C0.carrier.domain}
    for rec, gi in zip(trace.steps, choice):
        if rec.trivial:
            continue
        h = {x: rec.lam[gi][y] for x, y in h.items()}
    return h


def check_distinguished_copies(trace: ConstructionTrace, h: Mapping) -> list:
    """Indices of distinguished copies whose image under ``h`` is not an embedding of B."""
    C = trace.result.carrier
    bad = []
    for i, c in enumerate(trace.distinguished):
        if not check_embedding(trace.B, C, {x: h[c[x]] for x in trace.B.domain}):
            bad.append(i)
    return bad


def find_monochromatic_copy(trace: ConstructionTrace, chi: Callable[[tuple], Any]) -> dict:
    """Follow the downward induction for the colouring ``chi`` of A-copies in C.

    ``chi`` receives an embedding of A as the tuple of images in A's domain
    order.  Returns the selected chain, the final copy of B and its colour;
    raises ReplayFailure if any step's guarantee does not hold.
    """
    A, B, P, r = trace.A, trace.B, trace.P, trace.r
    a_order = list(A.elements_in_order())
    H = {x: x for x in trace.result.carrier.domain}
    chosen: list = [0] * len(trace.steps)
    colours_seen: list = [None] * len(trace.steps)
    for idx in range(len(trace.steps) - 1, -1, -1):
        rec = trace.steps[idx]
        if rec.trivial:
            continue
        Ek = rec.E

        def chi_k(section, rec=rec, H=H):
            m = dict(zip(a_order, section))
            return chi(tuple(H[rec.e_names[m[a]]] for a in A.domain))

        g = select_monochromatic(Ek, rec.B, chi_k, r)
        values = {chi_k(tuple(g[b] for b in s)) for s in sections(rec.B)}
        if len(values) > 1:
            raise ReplayFailure("selected copy is not monochromatic", step=rec.k)
        gi = rec.G.index(g)
        chosen[idx] = gi
        colours_seen[idx] = next(iter(values), None)
        H = {x: H[y] for x, y in rec.lam[gi].items()}
    h = H
    C0 = trace.C0
    chi0 = {}
    for j, e in enumerate(trace.embeddings):
        allowed = {a: [x for x in C0.carrier.domain if C0.parts[x] == e[a]] for a in A.domain}
        cols = {
            chi(tuple(h[d[a]] for a in A.domain))
            for d in iter_maps(A, C0.carrier, SearchConstraint(require_injective=True, reflect_relations=True,
                                                               allowed=allowed))
        }
        if len(cols) > 1:
            raise ReplayFailure("colour of a copy in C_0 is not determined by its trace", embedding=j)
        chi0[j] = next(iter(cols), 0)
    e_index = {tuple(e[a] for a in A.domain): j for j, e in enumerate(trace.embeddings)}
    A_star, B_star = _star(A), _star(B)
    ab = list(iter_maps(A_star, B_star, SearchConstraint(require_injective=True, reflect_relations=True)))
    for fi, f in enumerate(trace.fs):
        cols = {chi0[e_index[tuple(f[a[x]] for x in A.domain)]] for a in ab}
        if len(cols) <= 1:
            copy = {x: h[trace.distinguished[fi][x]] for x in B.domain}
            if not check_embedding(B, trace.result.carrier, copy):
                raise ReplayFailure("distinguished copy is not embedded", copy=fi)
            final = {
                chi(tuple(copy[a[x]] for x in A.domain))
                for a in iter_maps(A, B, SearchConstraint(require_injective=True, reflect_relations=True))
            }
            if len(final) > 1:
                raise ReplayFailure("final copy is not monochromatic", copy=fi)
            return {"chain": chosen, "copy": copy, "f": fi, "colour": next(iter(final), None),
                    "step_colours": colours_seen}
    raise ReplayFailure("no monochromatic copy of B in P for the induced colouring")
