import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from oracles import DECAY, INHIBITOR, RECEPTOR, RECEPTOR_V_ROWS  # noqa: E402

from nonosc.compound import additive_compound  # noqa: E402
from nonosc.lyapunov import PWLFunction  # noqa: E402
from nonosc.netmodel import read_network  # noqa: E402
from nonosc.stoich import build_reduction, rank_one_matrices  # noqa: E402

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def receptor():
    return read_network(RECEPTOR)


@pytest.fixture(scope="session")
def inhibitor():
    return read_network(INHIBITOR)


@pytest.fixture(scope="session")
def decay():
    return read_network(DECAY)


@pytest.fixture(scope="session")
def receptor_rs(receptor):
    return build_reduction(receptor, independent=["L", "K", "P"])


@pytest.fixture(scope="session")
def inhibitor_rs(inhibitor):
    return build_reduction(inhibitor, independent=["C", "KI", "P"])


@pytest.fixture(scope="session")
def receptor_a2(receptor_rs):
    return [additive_compound(A, 2).matrix for A in rank_one_matrices(receptor_rs)]


@pytest.fixture(scope="session")
def inhibitor_a2(inhibitor_rs):
    return [additive_compound(A, 2).matrix for A in rank_one_matrices(inhibitor_rs)]


@pytest.fixture(scope="session")
def receptor_v():
    return PWLFunction.from_rows(RECEPTOR_V_ROWS)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: (int(k[2:].rstrip("ab")), k)):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{key} {'PASS' if ok else 'FAIL'} {detail}")
