import pytest

from sgtdci.harness import prepare_system


@pytest.fixture(scope="session")
def he():
    """Fully prepared He reference system (integrals, orbitals, Hamiltonian, initial state)."""
    return prepare_system("He")


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
