import pytest

from helpers import make_net


@pytest.fixture
def chain_ab():
    """A -> B with P(A=1)=0.3, P(B=1|A=0)=0.1, P(B=1|A=1)=0.8."""
    return make_net(
        [2, 2],
        {"B": ["A"]},
        {"A": [[0.7, 0.3]], "B": [[0.9, 0.1], [0.2, 0.8]]},
        ["A", "B"],
    )


@pytest.fixture
def disease_test():
    """D -> E with P(D=1)=0.1, P(E=1|D=1)=0.9, P(E=1|D=0)=0.2."""
    return make_net(
        [2, 2],
        {"E": ["D"]},
        {"D": [[0.9, 0.1]], "E": [[0.8, 0.2], [0.1, 0.9]]},
        ["D", "E"],
    )


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
