import pytest

from treeramsey.structures import Signature, Structure
from treeramsey.expansion import ExpandedContext

ACCEPTANCE: dict = {}

E2 = Signature.of({"E": 2})
E2O = Signature.of({"E": 2}, has_order=True)


def digraph(domain, edges, order=None):
    sig = E2O if order is not None else E2
    return Structure(sig, domain, {"E": edges}, order)


@pytest.fixture(scope="session")
def path_ctx():
    return ExpandedContext(E2, [digraph("pqr", [("p", "q"), ("q", "r")])])


@pytest.fixture(scope="session")
def edge_ctx():
    """Forbidding a single edge: no cuts, no expansion symbols, members are edgeless."""
    return ExpandedContext(E2, [digraph("ab", [("a", "b")])])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, text = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {text}")
