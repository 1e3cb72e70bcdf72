import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from xfersim.graph import from_edges  # noqa: E402

# Toy graph: 9 vertices, 128 edges.  Vertices 0..5 form the 6-vertex subset
# (degrees 2, 4, 8, 16, 32, 2) and 6..8 the 3-vertex subset (32, 16, 16);
# each subset holds 64 edges.
TOY_DEGREES = [2, 4, 8, 16, 32, 2, 32, 16, 16]
TOY_SIX = [0, 1, 2, 3, 4, 5]
TOY_THREE = [6, 7, 8]


def make_toy9():
    src, dst = [], []
    for v, deg in enumerate(TOY_DEGREES):
        for j in range(deg):
            src.append(v)
            dst.append((v + 1 + j) % 9)
    return from_edges(src, dst, 9)


@pytest.fixture
def toy9():
    return make_toy9()


@pytest.fixture
def chain3():
    return from_edges([0, 1], [1, 2], 3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
