"""Brute-force oracles: exhaustive arrow checking, a naive expansion check, and property suites."""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import TreeRamseyError, UnknownSuite
from .homs import EMBED, iter_maps
from .partite import PartiteStructure, rectified_embeddings, sections
from .structures import Structure, check_homomorphism

VERIFIED = "Verified"
REFUTED = "Refuted"
INFEASIBLE = "Infeasible"

DEFAULT_BUDGET = 2 ** 24
_CHUNK = 1 << 15


@dataclass
class ArrowInstance:
    C: Structure | PartiteStructure
    B: Structure | PartiteStructure
    A: Structure | PartiteStructure
    r: int

    def __post_init__(self):
        if self.r < 1:
            raise ValueError("r must be positive")

    @property
    def partite(self) -> bool:
        return isinstance(self.C, PartiteStructure)


@dataclass
class ArrowVerdict:
    status: str
    witness: Any = None
    colorings_checked: int = 0
    a_embeddings: list = field(default_factory=list)
    b_copies: list = field(default_factory=list)
    relevant: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {"status": self.status, "colorings_checked": self.colorings_checked,
               "a_embeddings": len(self.a_embeddings), "b_copies": len(self.b_copies),
               "relevant": len(self.relevant)}
        if self.status == REFUTED:
            out["counterexample"] = [[list(map(str, e)), c] for e, c in self.witness["coloring"]]
            out["index"] = self.witness["index"]
        elif self.status == INFEASIBLE:
            out["cost"] = self.witness
        return out


def _embedding_lists(inst: ArrowInstance):
    """A-copies in C (as image tuples), and for each B-copy the indices of the A-copies inside it."""
    if inst.partite:
        C, B = inst.C, inst.B
        a_list = [tuple(s) for s in sections(C)]
        inner = [tuple(s) for s in sections(B)]
        copies = list(rectified_embeddings(B, C))
    else:
        C, B, A = inst.C, inst.B, inst.A
        pos = {y: i for i, y in enumerate(C.domain)}
        a_list = sorted((tuple(m[x] for x in A.domain) for m in iter_maps(A, C, EMBED)),
                        key=lambda t: tuple(pos[y] for y in t))
        inner = [tuple(m[x] for x in A.domain) for m in iter_maps(A, B, EMBED)]
        copies = list(iter_maps(B, C, EMBED))
    index = {t: i for i, t in enumerate(a_list)}
    members = [sorted({index[tuple(g[x] for x in t)] for t in inner}) for g in copies]
    return a_list, copies, members


def _digits(start: int, stop: int, n: int, r: int) -> np.ndarray:
    idx = np.arange(start, stop, dtype=np.int64)
    powers = r ** np.arange(n, dtype=np.int64)
    return ((idx[:, None] // powers[None, :]) % r).astype(np.int8)


def _mono(cols: np.ndarray, members: list[int]) -> np.ndarray:
    if len(members) <= 1:
        return np.ones(cols.shape[0], dtype=bool)
    sub = cols[:, members]
    return (sub == sub[:, :1]).all(axis=1)


def arrow_check(inst: ArrowInstance, budget: int = DEFAULT_BUDGET) -> ArrowVerdict:
    """Exhaustively decide ``C → (B)^A_r``.

    Only A-copies lying inside some B-copy influence the answer, so colourings
    range over those ("relevant") copies.  Colourings are enumerated in
    colexicographic order (copy 0 is the fastest-changing digit); the first
    refuting colouring is reported.
    """
    a_list, copies, members = _embedding_lists(inst)
    relevant = sorted(set().union(*map(set, members))) if members else []
    remap = {a: i for i, a in enumerate(relevant)}
    local = [[remap[a] for a in m] for m in members]
    n, r = len(relevant), inst.r
    total = r ** n
    if total > budget:
        return ArrowVerdict(INFEASIBLE, {"colorings": total, "relevant": n, "budget": budget},
                            0, a_list, copies, relevant)
    if not copies:
        coloring = [(a_list[a], 0) for a in relevant]
        return ArrowVerdict(REFUTED, {"index": 0, "coloring": coloring}, 1, a_list, copies, relevant)
    found_all = np.empty(total, dtype=np.int32)
    checked = 0
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        cols = _digits(start, stop, n, r)
        found = np.full(stop - start, -1, dtype=np.int32)
        for gi, m in enumerate(local):
            open_ = found < 0
            if not open_.any():
                break
            hit = open_ & _mono(cols, m)
            found[hit] = gi
        checked += stop - start
        missing = np.flatnonzero(found < 0)
        if missing.size:
            i = int(missing[0])
            coloring = [(a_list[a], int(cols[i, remap[a]])) for a in relevant]
            return ArrowVerdict(REFUTED, {"index": start + i, "coloring": coloring}, checked, a_list, copies, relevant)
        found_all[start:stop] = found
    return ArrowVerdict(VERIFIED, found_all, checked, a_list, copies, relevant)


def reverify(inst: ArrowInstance, verdict: ArrowVerdict) -> bool:
    """Re-check every stored witness of a Verified verdict without any search."""
    if verdict.status != VERIFIED:
        return False
    a_list, copies, members = _embedding_lists(inst)
    relevant = sorted(set().union(*map(set, members))) if members else []
    remap = {a: i for i, a in enumerate(relevant)}
    local = [[remap[a] for a in m] for m in members]
    n, r = len(relevant), inst.r
    total = r ** n
    wit = verdict.witness
    if len(wit) != total:
        return False
    for start in range(0, total, _CHUNK):
        stop = min(total, start + _CHUNK)
        cols = _digits(start, stop, n, r)
        chosen = wit[start:stop]
        for gi in np.unique(chosen):
            rows = chosen == gi
            if gi < 0 or gi >= len(local) or not _mono(cols[rows], local[gi]).all():
                return False
    return True


# ---------------------------------------------------------------- expansion oracle


def naive_marks(A: Structure, ctx) -> dict:
    """Marks recomputed by trying every map from every piece (no pruning)."""
    from .structures import base_reduct

    Astar = base_reduct(A)
    out = {x: set() for x in A.domain}
    for cls in ctx.classes:
        for p in cls.representatives:
            M = p.structure
            dom = list(M.domain)
            for images in itertools.product(Astar.domain, repeat=len(dom)):
                f = dict(zip(dom, images))
                if check_homomorphism(M, Astar, f, respect_order=False):
                    out[f[p.root]].add(cls.id)
    return out


def check_expansion_oracle(A: Structure, ctx, fault: str | None = None) -> dict:
    from .expansion import canonical_expansion

    X = canonical_expansion(A, ctx, register=False)
    if fault == "flip-tau" and X.domain and ctx.tau:
        x, s = X.domain[0], ctx.tau[0]
        rel = set(X.relations[s]) ^ {(x,)}
        X = X.replace(relations={s: frozenset(rel)})
    expected = naive_marks(A, ctx)
    diffs = []
    for x in A.domain:
        got = {s for s in ctx.tau if (x,) in X.relations[s]}
        if got != expected[x]:
            diffs.append({"element": x, "expected": sorted(expected[x]), "got": sorted(got)})
    return {"diffs": diffs, "elements": len(A)}


# ---------------------------------------------------------------- property suites


class SuiteFailure(Exception):
    def __init__(self, counterexample):
        super().__init__("suite failed")
        self.counterexample = counterexample


def _fail(**details):
    raise SuiteFailure(details)


def run_property_suite(name: str, scale: int | None = None, fault: str | None = None) -> dict:
    """Run one named invariant family exhaustively; return a JSON-ready report.

    ``fault`` injects the suite's designated corruption (see ``SUITES``) as a
    negative control; the suite must then fail.
    """
    from . import suites

    if name not in suites.SUITES:
        raise UnknownSuite(f"unknown suite {name!r}", known=sorted(suites.SUITES))
    runner, default_scale, designated = suites.SUITES[name]
    if fault is not None and fault != designated:
        raise TreeRamseyError(f"suite {name} injects only the {designated!r} fault", fault=fault)
    scale = default_scale if scale is None else scale
    counter = {"cases": 0, "colorings": 0}
    t0 = time.perf_counter()
    report: dict = {"suite": name, "scale": scale}
    try:
        runner(scale, fault, counter)
        report["status"] = "pass"
    except SuiteFailure as exc:
        report["status"] = "fail"
        report["counterexample"] = exc.counterexample
    report["runtime_ms"] = round((time.perf_counter() - t0) * 1000, 3)
    report["colorings_checked"] = counter["colorings"]
    report["cases"] = counter["cases"]
    if fault is not None:
        report["fault"] = fault
    return report
