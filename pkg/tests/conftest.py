import pytest

from setpoint import MultiMap, dyadic_space, line_space
from setpoint.multimap import halving_map


@pytest.fixture(scope="session")
def dyad_exact():
    """DYAD with one extra level so that x -> x/2 stays exact on the domain."""
    space = dyadic_space(20, extend=True)
    return halving_map(space, range(22))


@pytest.fixture(scope="session")
def dyad():
    """DYAD truncated at 2^-20 with tolerance 1e-6 (iteration fixture)."""
    return halving_map(dyadic_space(20, tolerance=1e-6))


@pytest.fixture
def line_instance():
    """Line {0,1,2} with F(0)={0}, F(1)={0}, F(2)={0,2}."""
    return MultiMap.from_table(line_space([0, 1, 2]), {0: [0], 1: [0], 2: [0, 2]})


@pytest.fixture
def two_cycle():
    return MultiMap.from_table(line_space([0, 1]), {0: [1], 1: [0]})


ACCEPTANCE: list[str] = []


@pytest.fixture
def verdict_line():
    """Record and print one PASS/FAIL line for an acceptance criterion."""
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
