from dataclasses import replace

import pytest

from cbhrp.model import NetworkConfig, Node

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def small_config():
    return replace(NetworkConfig(), n=60, k=3, m=4, D=50.0, bs_position=(25.0, 100.0))


def make_node(i, x, y, energy=1.0, **kw):
    return Node(id=i, position=(float(x), float(y)), energy=energy, **kw)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
