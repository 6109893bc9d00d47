"""JSON reading and writing for structures, contexts, certificates and traces.

Structure file::

    {"v": 1, "signature": {"E": 2}, "tau": ["S0"], "domain": ["a", "b"],
     "relations": {"E": [["a", "b"]], "S0": [["a"]]}, "order": ["a", "b"],
     "parts": {"a": "0", "b": "1"}}

``tau``, ``order`` and ``parts`` are optional; expansion symbols are unary and
need not be repeated under ``signature``.  Element names are strings; internal
names (ints, tagged tuples) are rendered with :func:`label`.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

from .errors import FormatError, TreeRamseyError
from .structures import RootedStructure, Signature, Structure

VERSION = 1
STRUCTURE_KEYS = {"v", "signature", "tau", "domain", "relations", "order", "parts"}
CONTEXT_KEYS = {"v", "sigma", "forbidden"}


def label(x: Any) -> str:
    """String name of an element: tuples render as ``(a,b)``."""
    if isinstance(x, tuple):
        return "(" + ",".join(label(y) for y in x) + ")"
    return str(x)


def _labels(S: Structure) -> dict:
    names = {x: label(x) for x in S.domain}
    if len(set(names.values())) != len(names):
        raise FormatError("element names collide when rendered as strings")
    return names


def _check_version(raw: Mapping, what: str) -> None:
    if "v" not in raw:
        raise FormatError(f"{what} file lacks the version field \"v\"")
    if raw["v"] != VERSION:
        raise FormatError(f"unsupported {what} file version {raw['v']!r}", version=raw["v"])


def _check_keys(raw: Mapping, allowed: set, what: str) -> None:
    if not isinstance(raw, Mapping):
        raise FormatError(f"{what} must be a JSON object")
    unknown = set(raw) - allowed
    if unknown:
        raise FormatError(f"unknown keys in {what}: {sorted(unknown)}", keys=sorted(unknown))


def _signature(raw_sig: Any, tau: list, has_order: bool) -> Signature:
    if not isinstance(raw_sig, Mapping) or not all(isinstance(v, int) and not isinstance(v, bool)
                                                   for v in raw_sig.values()):
        raise FormatError("signature must map symbol names to integer arities")
    if not isinstance(tau, list) or not all(isinstance(s, str) for s in tau):
        raise FormatError("tau must be a list of symbol names")
    symbols = dict(raw_sig)
    for s in tau:
        if symbols.setdefault(s, 1) != 1:
            raise FormatError(f"expansion symbol {s} must be unary", symbol=s)
    return Signature.of(symbols, tau, has_order)


def structure_from_json(raw: Mapping, require_version: bool = True) -> tuple[Structure, dict | None]:
    """Parse a structure object; returns ``(structure, parts or None)``."""
    _check_keys(raw, STRUCTURE_KEYS, "structure")
    if require_version:
        _check_version(raw, "structure")
    for key in ("signature", "domain"):
        if key not in raw:
            raise FormatError(f"structure lacks {key!r}")
    domain = raw["domain"]
    if not isinstance(domain, list) or not all(isinstance(x, str) for x in domain):
        raise FormatError("domain must be a list of strings")
    order = raw.get("order")
    sig = _signature(raw["signature"], raw.get("tau", []), order is not None)
    relations = raw.get("relations", {})
    if not isinstance(relations, Mapping):
        raise FormatError("relations must be an object")
    rels = {}
    for name, tuples in relations.items():
        if not isinstance(tuples, list) or not all(isinstance(t, list) for t in tuples):
            raise FormatError(f"relation {name} must be a list of arrays", symbol=name)
        rels[name] = [tuple(t) for t in tuples]
    S = Structure(sig, domain, rels, order)
    parts = raw.get("parts")
    if parts is not None:
        if not isinstance(parts, Mapping) or set(parts) != set(domain):
            raise FormatError("parts must map every element to a part")
        parts = dict(parts)
    return S, parts


def structure_to_json(S: Structure, parts: Mapping | None = None, version: bool = True) -> dict:
    names = _labels(S)
    out: dict = {}
    if version:
        out["v"] = VERSION
    out["signature"] = {n: a for n, a in S.signature.arities if n not in S.signature.tau}
    if S.signature.tau:
        out["tau"] = sorted(S.signature.tau)
    out["domain"] = [names[x] for x in S.domain]

    def sort_key(t):
        return tuple(S.position(x) for x in t)

    out["relations"] = {
        n: [[names[x] for x in t] for t in sorted(S.relations[n], key=sort_key)] for n in S.signature.names
    }
    if S.order is not None:
        out["order"] = [names[x] for x in S.order]
    if parts is not None:
        out["parts"] = {names[x]: label(parts[x]) for x in S.domain}
    return out


def context_from_json(raw: Any):
    """A context file, a bare structure file, or a list of structure files as forbidden trees."""
    from .expansion import ExpandedContext

    if isinstance(raw, list):
        forbidden = [structure_from_json(r, require_version=False)[0] for r in raw]
        if not forbidden:
            raise FormatError("empty list of forbidden structures")
        sigma = forbidden[0].signature
    elif isinstance(raw, Mapping) and "forbidden" in raw:
        _check_keys(raw, CONTEXT_KEYS, "context")
        _check_version(raw, "context")
        if not isinstance(raw["forbidden"], list):
            raise FormatError("forbidden must be a list of structures")
        forbidden = [structure_from_json(r, require_version=False)[0] for r in raw["forbidden"]]
        sigma = _signature(raw.get("sigma", forbidden[0].signature.symbols if forbidden else {}), [], False)
    else:
        forbidden = [structure_from_json(raw)[0]]
        sigma = forbidden[0].signature
    sigma = sigma.with_order(False)
    forbidden = [F.replace(signature=sigma, order=None) if F.order is not None else F for F in forbidden]
    return ExpandedContext(sigma, forbidden)


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc.msg})", path=path, line=exc.lineno) from None
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}", path=path) from None


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, ensure_ascii=False)


def to_jsonable(value: Any) -> Any:
    """Render nested results (structures, pieces, maps with tuple keys) as JSON data."""
    from .expansion import Piece

    if isinstance(value, Structure):
        return structure_to_json(value, version=False)
    if isinstance(value, Piece):
        return {"piece": structure_to_json(value.structure, version=False), "root": label(value.root),
                "origin": [value.origin[0], label(value.origin[1])]}
    if isinstance(value, RootedStructure):
        return {"structure": structure_to_json(value.structure, version=False), "root": label(value.root)}
    if isinstance(value, TreeRamseyError):
        return value.to_json()
    if isinstance(value, Mapping):
        return {label(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        items = [to_jsonable(v) for v in value]
        return sorted(items, key=json.dumps) if isinstance(value, (set, frozenset)) else items
    if isinstance(value, (bool, int, float)) or value is None:
        return value
    return label(value)


def certificate_to_json(cert: Mapping) -> dict:
    return to_jsonable(cert)
