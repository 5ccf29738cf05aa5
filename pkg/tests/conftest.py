import pytest

from ldpc_floor.de_engine import ChannelCondition, EnsembleSpec
from ldpc_floor.ldpc_codes import construct_margulis
from ldpc_floor.spa_decoder import TannerGraph


@pytest.fixture(scope="session")
def ens36():
    return EnsembleSpec.regular(3, 6)


@pytest.fixture(scope="session")
def ch28():
    return ChannelCondition(2.8, 0.5)


@pytest.fixture(scope="session")
def margulis():
    return construct_margulis()


@pytest.fixture(scope="session")
def margulis_graph(margulis):
    return TannerGraph(margulis)


_REPORT: list[str] = []


@pytest.fixture(scope="session")
def acceptance_report():
    return _REPORT


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
