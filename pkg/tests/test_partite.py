import itertools
import random

import pytest

import oracles
from conftest import E2O
from treeramsey.errors import NoEmbedding, NotInClass, NotPartite, NotRectified, SizeLimitExceeded
from treeramsey.expansion import IN_C, canonical_expansion, is_in_C
from treeramsey.homs import EMBED, iter_maps
from treeramsey.partite import (
    P_PARTITE,
    RECTIFIED,
    TRANSVERSAL,
    PartiteStructure,
    build_C0,
    check_distinguished_copies,
    compose_chain,
    count_rectified_embeddings,
    find_monochromatic_copy,
    find_partner_P,
    is_p_partite,
    is_rectified,
    partite_construction,
    partite_embeddings,
    partite_lemma,
    partite_lemma_sizes,
    partite_step,
    rectified_embeddings,
    rectified_structure,
    rectified_substructure,
    rectify,
    satisfies_part_rectified,
    sections,
    select_monochromatic,
)
from treeramsey.structures import Structure, base_reduct, check_embedding, check_homomorphism
from treeramsey.suites import transitive_tournament
from treeramsey.verify import VERIFIED, ArrowInstance, arrow_check


def ordered_points(n, names=None):
    names = list(range(n)) if names is None else list(names)
    return Structure(E2O, names, {}, names)


@pytest.fixture(scope="module")
def ordered_edge(path_ctx):
    S = canonical_expansion(Structure(E2O, "ab", {"E": [("a", "b")]}, "ab"), path_ctx)
    return S


@pytest.fixture(scope="module")
def in_vertex(path_ctx):
    return Structure(path_ctx.ordered_signature, ["v"], {"S1": ["v"]}, ["v"])


# ---------------------------------------------------------------- rectified structures


def test_unit_sizes_reproduce_A(ordered_edge, path_ctx):
    X = rectified_structure(ordered_edge, [1, 1], path_ctx)
    assert oracles.isomorphic(X.carrier, ordered_edge)
    assert len(set(X.parts.values())) == len(X)


def test_one_element_index_gives_disjoint_copies(in_vertex, path_ctx):
    X = rectified_structure(in_vertex, [4], path_ctx)
    assert len(X) == 4 and X.carrier.relations["S1"] == {(x,) for x in X.carrier.domain}
    assert not X.carrier.relations["E"] and set(X.parts.values()) == {"v"}


def test_rectified_edge_counts(ordered_edge, path_ctx):
    X = rectified_structure(ordered_edge, {"a": 2, "b": 1}, path_ctx)
    assert len(X) == 3 and len(X.carrier.relations["E"]) == 2
    assert is_rectified(X.carrier, X.parts, ordered_edge, literal=True)


def test_rectified_structure_properties(path_ctx):
    from treeramsey.suites import _ordered_members

    for A in _ordered_members(2):
        for sizes in itertools.product(range(3), repeat=len(A)):
            X = rectified_structure(A, sizes, path_ctx)
            assert is_rectified(X.carrier, X.parts, A, literal=True)
            assert is_rectified(X.carrier, X.parts, A)
            assert is_in_C(X.carrier, path_ctx, None, certify=False).status == IN_C
            assert check_homomorphism(X.carrier, A, X.parts)
            for sec in sections(X):
                assert check_embedding(A, X.carrier, dict(zip(A.elements_in_order(), sec)))


def test_rectified_structure_requires_member(path_ctx):
    bad = Structure(path_ctx.ordered_signature, ["v"], {"S0": ["v"], "S1": ["v"]}, ["v"])
    with pytest.raises(NotInClass):
        rectified_structure(bad, [2], path_ctx)


# ---------------------------------------------------------------- partite lemma


def test_partite_lemma_sizes():
    assert partite_lemma_sizes([3], 2) == [5]
    assert partite_lemma_sizes([1], 7) == [1]
    assert partite_lemma_sizes([2, 2], 2) == [3, 9]
    assert partite_lemma_sizes([1, 2], 2) == [1, 3]


def test_partite_lemma_base_case(edge_ctx):
    A = ordered_points(1)
    B = rectified_structure(A, [3])
    E = partite_lemma(A, B, 2, edge_ctx)
    assert E.part_sizes() == [5]
    v = arrow_check(ArrowInstance(E, B, A, 2))
    assert v.status == VERIFIED and v.colorings_checked == 32


def test_partite_lemma_two_parts_small(edge_ctx):
    A = ordered_points(2)
    B = rectified_structure(A, [1, 2])
    E = partite_lemma(A, B, 2, edge_ctx)
    assert E.part_sizes() == [1, 3]
    assert arrow_check(ArrowInstance(E, B, A, 2)).status == VERIFIED


def test_partite_lemma_rejects_non_rectified(edge_ctx):
    A = ordered_points(2)
    X = rectified_structure(A, [1, 1])
    extra = X.carrier.replace(relations={"E": frozenset({tuple(X.carrier.order)})})
    bad = PartiteStructure(extra, X.parts, A, RECTIFIED)
    with pytest.raises(NotRectified):
        partite_lemma(A, bad, 2)


def test_partite_lemma_size_limit():
    A = ordered_points(2)
    with pytest.raises(SizeLimitExceeded):
        partite_lemma(A, rectified_structure(A, [2, 2]), 2, max_size=5)


def test_rectified_embedding_count():
    A = ordered_points(2)
    B, E = rectified_structure(A, [1, 2]), rectified_structure(A, [3, 4])
    assert count_rectified_embeddings(B, E) == len(list(rectified_embeddings(B, E))) == 3 * 6


def test_select_monochromatic_matches_guarantee():
    A = ordered_points(2)
    B = rectified_structure(A, [2, 2])
    E = partite_lemma(A, B, 2)
    rnd = random.Random(5)
    secs = list(sections(E))
    for _ in range(40):
        colours = {s: rnd.randrange(2) for s in secs}
        g = select_monochromatic(E, B, colours.__getitem__, 2)
        images = {colours[tuple(g[b] for b in s)] for s in sections(B)}
        assert len(images) == 1
        assert g in list(rectified_embeddings(B, E))


# ---------------------------------------------------------------- rectification


def test_rectify_transversal_is_unchanged(ordered_edge):
    P = base_reduct(ordered_edge, keep_order=True)
    C = PartiteStructure(ordered_edge, {"a": "a", "b": "b"}, P)
    assert rectify(C).carrier == ordered_edge


def test_rectify_adds_cross_copy_tuples_where_profiles_match(ordered_edge, path_ctx):
    P = transitive_tournament(3)
    C0, fs, copies = build_C0(P, ordered_edge)
    D = rectify(C0, path_ctx)
    X = C0.carrier
    # naive oracle: every pair of tuples' worth of positions with equal part and profile
    want = set(X.relations["E"])
    for t in X.relations["E"]:
        for u, v in itertools.product(X.domain, repeat=2):
            if all(C0.parts[a] == C0.parts[b] and X.tau_profile(a) == X.tau_profile(b) for a, b in zip(t, (u, v))):
                want.add((u, v))
    assert D.carrier.relations["E"] == want
    assert len(want) > len(X.relations["E"])
    assert satisfies_part_rectified(D) and rectify(D).carrier == D.carrier
    for s in path_ctx.tau:
        assert D.carrier.relations[s] == X.relations[s]


def test_rectify_rejects_non_partite(ordered_edge):
    P = ordered_points(1)
    C = PartiteStructure(ordered_edge, {"a": 0, "b": 0}, P)
    with pytest.raises(NotPartite):
        rectify(C)


def test_rectified_substructure_examples(ordered_edge, path_ctx, in_vertex):
    P = base_reduct(ordered_edge, keep_order=True)
    C0, _, _ = build_C0(P, ordered_edge)
    D = rectify(C0)
    At = PartiteStructure(in_vertex, {"v": "b"}, P, TRANSVERSAL)
    B = rectified_substructure(D, At)
    assert set(B.carrier.domain) == {x for x in D.carrier.domain if D.parts[x] == "b"}
    assert is_rectified(B.carrier, B.parts, in_vertex, literal=True)
    # wrong profile: an out-vertex over part b has no matching element
    out_vertex = Structure(path_ctx.ordered_signature, ["v"], {"S0": ["v"]}, ["v"])
    with pytest.raises(NoEmbedding):
        rectified_substructure(D, PartiteStructure(out_vertex, {"v": "b"}, P, TRANSVERSAL))


# ---------------------------------------------------------------- C_0 and the steps


def test_build_C0_examples(ordered_edge):
    P = ordered_points(3)
    C0, fs, copies = build_C0(P, ordered_edge)
    assert len(C0) == 0 and fs == []
    P = base_reduct(ordered_edge, keep_order=True)
    C0, fs, copies = build_C0(P, ordered_edge)
    assert len(C0) == 2 and len(fs) == 1
    P = transitive_tournament(3)
    C0, fs, copies = build_C0(P, ordered_edge)
    assert len(fs) == 3 and len(C0) == 6
    for f, c in zip(fs, copies):
        assert check_embedding(ordered_edge, C0.carrier, c)
        assert all(C0.parts[c[x]] == f[x] for x in ordered_edge.domain)
    assert is_p_partite(C0.carrier, C0.parts, P)


def test_partite_step_without_embedding_is_identity(ordered_edge, path_ctx):
    P = transitive_tournament(3)
    C0, _, _ = build_C0(P, ordered_edge)
    isolated = Structure(path_ctx.ordered_signature, ["v"], {}, ["v"])
    C1, rec = partite_step(C0, {"v": 0}, isolated, 2, path_ctx)
    assert rec.trivial and C1 is C0


def test_partite_step_size_formula_and_embeddings(ordered_edge, in_vertex, path_ctx):
    P = transitive_tournament(3)
    C0, _, _ = build_C0(P, ordered_edge)
    C1, rec = partite_step(C0, {"v": 2}, in_vertex, 2, path_ctx)
    t = len(rec.G)
    assert len(C1) == len(rec.E) + t * (len(rec.D) - len(rec.B))
    for table in rec.lam:
        assert check_embedding(rec.D.carrier, C1.carrier, table)
        assert all(C1.parts[table[x]] == rec.D.parts[x] for x in rec.D.carrier.domain)
    assert is_p_partite(C1.carrier, C1.parts, P)
    assert is_in_C(C1.carrier, path_ctx, None, certify=False).status == IN_C


def test_single_copy_step_is_a_renaming(ordered_edge, in_vertex, path_ctx):
    P = transitive_tournament(3)
    C0, _, _ = build_C0(P, ordered_edge)
    C1, rec = partite_step(C0, {"v": 1}, in_vertex, 2, path_ctx)
    assert len(rec.G) == 1
    assert oracles.isomorphic(C1.carrier, rec.D.carrier)


# ---------------------------------------------------------------- full construction


def test_construction_on_points(edge_ctx):
    A, B = ordered_points(1), ordered_points(2)
    P = find_partner_P(A, B, 2)
    assert len(P) == 3 and oracles.arrow_naive(P, B, A, 2)
    # the construction itself outgrows desk scale at the third step; the guard reports it up front
    with pytest.raises(SizeLimitExceeded) as exc:
        partite_construction(A, B, 2, edge_ctx, max_size=10_000)
    assert exc.value.details["step"] == 3


def test_construction_without_A_copies_returns_C0(edge_ctx):
    A, B = ordered_points(2), ordered_points(1)
    P = ordered_points(1)
    C, trace = partite_construction(A, B, 1, edge_ctx, P=P)
    assert trace.embeddings == [] and C is trace.C0


def test_desk_scale_construction(ordered_edge, in_vertex, path_ctx):
    C, trace = partite_construction(in_vertex, ordered_edge, 2, path_ctx, P=transitive_tournament(3))
    assert trace.summary()["C"] == 15 and len(C0 := trace.C0) == 6
    assert is_in_C(C.carrier, path_ctx, None, certify=False).status == IN_C
    for chain in itertools.product(*(range(max(len(s.G), 1)) for s in trace.steps)):
        assert check_distinguished_copies(trace, compose_chain(trace, chain)) == []
    a_copies = [tuple(m[x] for x in in_vertex.domain) for m in iter_maps(in_vertex, C.carrier, EMBED)]
    for colours in itertools.product(range(2), repeat=len(a_copies)):
        chi = dict(zip(a_copies, colours))
        out = find_monochromatic_copy(trace, chi.__getitem__)
        assert check_embedding(ordered_edge, C.carrier, out["copy"])


def test_partner_search_examples():
    P = find_partner_P(ordered_points(1), ordered_points(3), 2)
    assert len(P) == 5
    B = Structure(E2O, "ab", {"E": [("a", "b")]}, "ab")
    assert find_partner_P(B, B, 1) == B
    P = find_partner_P(ordered_points(2), ordered_points(3), 2)
    assert arrow_check(ArrowInstance(P, ordered_points(3), ordered_points(2), 2)).status == VERIFIED
    assert len(P) == 6  # the search settles on the classical Ramsey number R(3,3)
