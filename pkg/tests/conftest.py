from __future__ import annotations

import itertools

import numpy as np
import pytest

from pqaoa.model import QuboModel, Tag, VrpInstance, build_vrp_qubo

# MaxCut figure graph: A = 0 with its triangle {0, 1, 2}; B = 3 with {3, 4, 5}
# and the pendant node 6 hanging off 5.
FIGURE_EDGES = [(0, 3), (0, 1), (0, 2), (1, 2), (3, 4), (3, 5), (4, 5), (5, 6)]


def all_bits(n: int) -> np.ndarray:
    return np.array(list(itertools.product((0, 1), repeat=n)), dtype=np.int8)


def random_qubo(rng, n: int, density: float = 0.6) -> QuboModel:
    linear = {i: float(rng.normal()) for i in range(n)}
    quadratic = {(i, j): float(rng.normal()) for i in range(n) for j in range(i + 1, n)
                 if rng.random() < density}
    return QuboModel.from_terms(n, linear, quadratic, float(rng.normal()))


def coupling_tags(model):
    return [t for t in model.tags if t.kind == "coupling"]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def tiny_instance():
    return VrpInstance(((0, 0), (3, -3), (13, 2)), A=2, seed=0)


@pytest.fixture
def tiny_model(tiny_instance):
    return build_vrp_qubo(tiny_instance)


@pytest.fixture
def coupling():
    return Tag.coupling()


# criterion number -> (verdict, title, detail); filled by test_acceptance
CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        verdict, title, detail = CRITERIA[num]
        terminalreporter.write_line(f"criterion {num:>2} {verdict}: {title}" + (f" | {detail}" if detail else ""))
