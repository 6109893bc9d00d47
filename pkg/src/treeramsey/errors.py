"""Exception hierarchy.

Every domain error carries a short ``kind`` (the class name) and a ``details``
dict so the command line can print it as a JSON error object.
"""

from __future__ import annotations

from typing import Any


class TreeRamseyError(Exception):
    """Base class for all domain errors raised by this package."""

    def __init__(self, message: str = "", **details: Any):
        super().__init__(message or self.__class__.__name__)
        self.details = details

    @property
    def kind(self) -> str:
        return type(self).__name__

    def to_json(self) -> dict:
        return {
            "error": self.kind,
            "message": str(self),
            "details": {k: _jsonable(v) for k, v in self.details.items()},
        }


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in value]
    return repr(value)


# structures


class StructureError(TreeRamseyError, ValueError):
    """A structure or signature violates one of its invariants."""

    violations: list["StructureError"]


class ArityMismatch(StructureError):
    pass


class UnknownElement(StructureError):
    pass


class UnknownSymbol(StructureError):
    pass


class InvalidOrder(StructureError):
    pass


class DuplicateElement(StructureError):
    pass


class SignatureMismatch(StructureError):
    pass


class InvalidPartition(StructureError):
    pass


class EmptyInput(StructureError):
    pass


class FormatError(TreeRamseyError, ValueError):
    """Malformed JSON input (unknown keys, wrong version, bad types)."""


# expansion


class ContextError(TreeRamseyError, ValueError):
    pass


class NotATree(ContextError):
    pass


class NotACut(TreeRamseyError, ValueError):
    pass


class NotFFree(TreeRamseyError, ValueError):
    pass


class TupleNotPresent(TreeRamseyError, ValueError):
    pass


class PremiseUnresolved(TreeRamseyError, ValueError):
    pass


class NotEmbedding(TreeRamseyError, ValueError):
    pass


class MembershipFailure(TreeRamseyError, RuntimeError):
    pass


# partite machinery


class NotInClass(TreeRamseyError, ValueError):
    pass


class NotRectified(TreeRamseyError, ValueError):
    pass


class NotRectifiedInput(TreeRamseyError, ValueError):
    pass


class NotPartite(TreeRamseyError, ValueError):
    pass


class NoEmbedding(TreeRamseyError, ValueError):
    pass


class SizeLimitExceeded(TreeRamseyError, RuntimeError):
    pass


class PartnerRefuted(TreeRamseyError, ValueError):
    pass


class SearchBudgetExhausted(TreeRamseyError, RuntimeError):
    pass


# kept as the name used for the construction-level failure
PartnerSearchExhausted = SearchBudgetExhausted


class ReplayFailure(TreeRamseyError, RuntimeError):
    pass


# verification


class UnknownSuite(TreeRamseyError, LookupError):
    pass


class MissingParts(TreeRamseyError, ValueError):
    pass
