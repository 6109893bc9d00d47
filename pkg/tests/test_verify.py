import itertools

import numpy as np
import pytest

import oracles
from conftest import E2O
from treeramsey.errors import TreeRamseyError, UnknownSuite
from treeramsey.generate import f_free_structures, structures_up_to
from treeramsey.partite import rectified_structure
from treeramsey.structures import Structure
from treeramsey.suites import SUITES, two_path_context
from treeramsey.verify import (
    INFEASIBLE,
    REFUTED,
    VERIFIED,
    ArrowInstance,
    arrow_check,
    check_expansion_oracle,
    reverify,
    run_property_suite,
)


def points(n):
    return Structure(E2O, range(n), {}, range(n))


def test_arrow_examples():
    B = Structure(E2O, "ab", {"E": [("a", "b")]}, "ab")
    v = arrow_check(ArrowInstance(B, B, points(1).replace(signature=E2O), 1))
    assert v.status == VERIFIED
    v = arrow_check(ArrowInstance(points(3), points(2), points(1), 2))
    assert v.status == VERIFIED and v.colorings_checked == 8
    v = arrow_check(ArrowInstance(points(2), points(2), points(1), 2))
    assert v.status == REFUTED
    colours = [c for _, c in v.witness["coloring"]]
    assert sorted(colours) == [0, 1]


def test_refutation_is_the_first_in_colex_order():
    v = arrow_check(ArrowInstance(points(4), points(3), points(1), 2))
    # colourings 0..r^n-1 with copy 0 as the lowest digit; 0b0011 is the first with two of each
    assert v.status == REFUTED and v.witness["index"] == 3


def test_infeasible_when_over_budget():
    v = arrow_check(ArrowInstance(points(6), points(3), points(2), 2), budget=1000)
    assert v.status == INFEASIBLE and v.witness["colorings"] == 2 ** 15


def test_verified_witnesses_reverify():
    inst = ArrowInstance(points(5), points(3), points(1), 2)
    v = arrow_check(inst)
    assert v.status == VERIFIED and reverify(inst, v)
    broken = type(v)(v.status, np.zeros_like(v.witness), v.colorings_checked)
    assert not reverify(inst, broken)


def test_arrow_matches_naive_enumeration():
    sig = E2O
    cases = []
    for C in [points(3), points(4), Structure(sig, range(3), {"E": [(0, 1), (1, 2), (0, 2)]}, range(3)),
              Structure(sig, range(4), {"E": [(0, 1), (2, 3), (0, 3)]}, range(4))]:
        for B in [points(2), points(3), Structure(sig, range(2), {"E": [(0, 1)]}, range(2))]:
            for A in [points(1), points(2)]:
                cases.append((C, B, A))
    for (C, B, A), r in itertools.product(cases, (1, 2, 3)):
        got = arrow_check(ArrowInstance(C, B, A, r)).status == VERIFIED
        assert got == oracles.arrow_naive(C, B, A, r), (C, B, A, r)


def test_monotone_in_colours():
    for n in range(2, 8):
        inst = [ArrowInstance(points(n), points(3), points(1), r) for r in (1, 2, 3)]
        verdicts = [arrow_check(i).status for i in inst]
        for lo, hi in zip(verdicts, verdicts[1:]):
            assert hi != VERIFIED or lo == VERIFIED


def test_partite_arrow_instance():
    A = points(1)
    B = rectified_structure(A, [2])
    for size, want in [(2, REFUTED), (3, VERIFIED)]:
        E = rectified_structure(A, [size])
        assert arrow_check(ArrowInstance(E, B, A, 2)).status == want


def test_verdict_json():
    v = arrow_check(ArrowInstance(points(2), points(2), points(1), 2))
    out = v.to_json()
    assert out["status"] == REFUTED and len(out["counterexample"]) == 2


def test_expansion_oracle_examples():
    ctx = two_path_context()
    assert check_expansion_oracle(Structure(ctx.sigma, [], {}), ctx)["diffs"] == []
    for A in f_free_structures(ctx, 3):
        assert check_expansion_oracle(A, ctx)["diffs"] == []
    edge = Structure(ctx.sigma, "ab", {"E": [("a", "b")]})
    assert check_expansion_oracle(edge, ctx, fault="flip-tau")["diffs"]


@pytest.mark.parametrize("name", sorted(SUITES))
def test_suite_passes_and_catches_its_fault(name):
    report = run_property_suite(name)
    assert report["status"] == "pass", report
    assert report["cases"] > 0
    assert set(report) >= {"suite", "scale", "status", "runtime_ms", "colorings_checked"}
    faulty = run_property_suite(name, fault=SUITES[name][2])
    assert faulty["status"] == "fail" and faulty["counterexample"]


def test_named_suite_scales():
    assert run_property_suite("lemma-2.1", scale=3)["status"] == "pass"
    assert run_property_suite("prop-5.1", scale=2)["status"] == "pass"


def test_unknown_suite_and_fault():
    with pytest.raises(UnknownSuite):
        run_property_suite("no-such-suite")
    with pytest.raises(TreeRamseyError):
        run_property_suite("lemma-2.1", fault="flip-tau")
