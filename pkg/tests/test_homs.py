import itertools

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import E2, E2O, digraph
from treeramsey.errors import SignatureMismatch
from treeramsey.generate import structures_up_to
from treeramsey.homs import (
    EMBED,
    HOM,
    SearchConstraint,
    count_embeddings,
    enumerate_embeddings,
    enumerate_homs,
    exists_rooted_hom,
    is_F_free,
    iter_maps,
    sorted_maps,
)
from treeramsey.structures import RootedStructure, Signature, Structure, check_homomorphism

PATH = digraph("pqr", [("p", "q"), ("q", "r")])
EDGE = digraph("ab", [("a", "b")])


def as_set(maps):
    return {tuple(sorted(m.items(), key=repr)) for m in maps}


def test_hom_examples():
    B = digraph("xyz", [("x", "y")])
    assert len(list(enumerate_homs(Structure(E2, ["v"], {}), B))) == 3
    assert list(enumerate_homs(PATH, EDGE)) == []
    assert len(list(enumerate_homs(EDGE, PATH))) == 2


def test_homs_match_brute_force_exhaustively():
    small = structures_up_to(E2, 3)
    for A, B in itertools.product(small, repeat=2):
        assert as_set(iter_maps(A, B)) == as_set(oracles.homs(A, B))
        assert as_set(iter_maps(A, B, EMBED)) == as_set(oracles.embeddings(A, B))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.integers(0, 3), st.data())
def test_ordered_maps_match_brute_force(n, m, data):
    sig = Signature.of({"E": 2, "U": 1}, has_order=True)

    def draw(k):
        dom = list(range(k))
        E = data.draw(st.sets(st.sampled_from(list(itertools.product(dom, repeat=2)))) if k else st.just(set()))
        U = data.draw(st.sets(st.sampled_from([(x,) for x in dom])) if k else st.just(set()))
        order = data.draw(st.permutations(dom))
        return Structure(sig, dom, {"E": E, "U": U}, order)

    A, B = draw(n), draw(m)
    assert as_set(iter_maps(A, B)) == as_set(oracles.homs(A, B))
    assert as_set(iter_maps(A, B, EMBED)) == as_set(oracles.embeddings(A, B))


def test_pinned_search_equals_filtered_search():
    small = structures_up_to(E2, 2)
    for A, B in itertools.product(small, repeat=2):
        if not A.domain or not B.domain:
            continue
        x = A.domain[0]
        for y in B.domain:
            pinned = as_set(iter_maps(A, B, SearchConstraint(pins={x: y})))
            assert pinned == as_set(f for f in iter_maps(A, B) if f[x] == y)


def test_embedding_examples():
    A = Structure(E2O, "a", {}, "a")
    assert count_embeddings(A, A) == 1
    two = Structure(E2O, "ab", {}, "ab")
    three = Structure(E2O, "xyz", {}, "xyz")
    assert count_embeddings(two, three) == 3
    loop = Structure(E2O, "a", {"E": [("a", "a")]}, "a")
    assert count_embeddings(loop, three) == 0


def test_ordered_embeddings_count_substructures():
    B = digraph("abcd", [("a", "b"), ("c", "d")], order="abcd")
    A = digraph("xy", [("x", "y")], order="xy")
    assert count_embeddings(A, B) == 2
    assert count_embeddings(B, B) == 1


def test_embeddings_are_homs_and_compose():
    C = digraph("uvwz", [("u", "v"), ("v", "w"), ("u", "z")])
    for A, B in [(EDGE, PATH)]:
        for f in enumerate_embeddings(A, B):
            assert check_homomorphism(A, B, f.mapping)
            for g in enumerate_embeddings(B, C):
                assert check_homomorphism(A, C, g.compose(f).mapping)


def test_rooted_hom_examples():
    single = RootedStructure(Structure(E2, ["m"], {}), "m")
    assert all(exists_rooted_hom(single, EDGE, x) for x in "ab")
    into = RootedStructure(digraph("pq", [("p", "q")]), "q")
    assert exists_rooted_hom(into, EDGE, "b") and not exists_rooted_hom(into, EDGE, "a")
    out = RootedStructure(digraph("qr", [("q", "r")]), "q")
    assert exists_rooted_hom(out, EDGE, "a")


def test_F_freeness_examples():
    assert is_F_free(EDGE, [PATH])[0]
    free, w = is_F_free(PATH, [PATH])
    assert not free and check_homomorphism(PATH, PATH, w.mapping)
    cycle = digraph("abc", [("a", "b"), ("b", "c"), ("c", "a")])
    assert not is_F_free(cycle, [PATH])[0]


def test_signature_mismatch():
    U = Structure(Signature.of({"U": 1}), "a", {})
    with pytest.raises(SignatureMismatch):
        list(enumerate_homs(EDGE, U))


def test_streams_are_deterministic():
    B = digraph("xyzw", [("x", "y"), ("z", "w"), ("x", "w")])
    assert list(iter_maps(EDGE, B)) == list(iter_maps(EDGE, B))
    pos = {y: i for i, y in enumerate(B.domain)}
    keys = [tuple(pos[m[x]] for x in EDGE.domain) for m in sorted_maps(EDGE, B)]
    assert keys == sorted(keys)
