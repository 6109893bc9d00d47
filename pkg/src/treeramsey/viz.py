"""DOT export of incidence graphs, Gaifman graphs and partite layouts."""

from __future__ import annotations

import itertools
from typing import Mapping

from .errors import MissingParts
from .fileformat import label
from .structures import Structure

INCIDENCE = "incidence"
GAIFMAN = "gaifman"
PARTITE = "partite"
KINDS = (INCIDENCE, GAIFMAN, PARTITE)


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _element_label(A: Structure, x) -> str:
    unary = [n for n, a in A.signature.arities if a == 1 and (x,) in A.relations[n]]
    return label(x) + (" [" + ",".join(unary) + "]" if unary else "")


def _element_lines(A: Structure, xs) -> list[str]:
    return [f"  {_q('e:' + label(x))} [shape=circle, label={_q(_element_label(A, x))}];" for x in xs]


def _sorted_tuples(A: Structure, name: str) -> list:
    return sorted(A.relations[name], key=lambda t: tuple(A.position(x) for x in t))


def emit_dot(A: Structure, which: str = INCIDENCE, parts: Mapping | None = None) -> str:
    """DOT text for ``A``.

    Unary memberships appear in element labels.  In incidence mode each tuple
    of arity at least two is a box labelled ``R#i`` with one edge per position.
    """
    if which not in KINDS:
        raise ValueError(f"unknown graph kind {which!r}")
    lines = [f"graph {which} {{"]
    if which == INCIDENCE:
        lines += _element_lines(A, A.domain)
        for name, arity in A.signature.arities:
            if arity < 2:
                continue
            for i, t in enumerate(_sorted_tuples(A, name)):
                node = _q(f"t:{name}#{i}")
                lines.append(f"  {node} [shape=box, label={_q(f'{name}#{i}')}];")
                for pos, x in enumerate(t):
                    lines.append(f"  {node} -- {_q('e:' + label(x))} [label={_q(str(pos + 1))}];")
    elif which == GAIFMAN:
        lines += _element_lines(A, A.domain)
        edges = set()
        for name in A.signature.names:
            for t in _sorted_tuples(A, name):
                for x, y in itertools.combinations(dict.fromkeys(t), 2):
                    if (y, x) not in edges:
                        edges.add((x, y))
        for x, y in sorted(edges, key=lambda e: (A.position(e[0]), A.position(e[1]))):
            lines.append(f"  {_q('e:' + label(x))} -- {_q('e:' + label(y))};")
    else:
        if parts is None:
            raise MissingParts("partite layout needs a parts map")
        index = list(dict.fromkeys(parts[x] for x in A.elements_in_order()))
        for i, p in enumerate(index):
            lines.append(f"  subgraph cluster_{i} {{")
            lines.append(f"    label={_q(label(p))};")
            lines += ["  " + ln for ln in _element_lines(A, [x for x in A.elements_in_order() if parts[x] == p])]
            lines.append("  }")
        for name, arity in A.signature.arities:
            if arity < 2:
                continue
            for t in _sorted_tuples(A, name):
                for x, y in zip(t, t[1:]):
                    lines.append(f"  {_q('e:' + label(x))} -- {_q('e:' + label(y))} [label={_q(name)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
