import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from ttp_surrogate import TtpInstance, parse_instance  # noqa: E402

from oracles import random_instance_arrays  # noqa: E402

TRIANGLE = """\
PROBLEM NAME: triangle
KNAPSACK DATA TYPE: bounded strongly corr
DIMENSION: 3
NUMBER OF ITEMS: 1
CAPACITY OF KNAPSACK: 10
MIN SPEED: 0.1
MAX SPEED: 1.0
RENTING RATIO: 1
EDGE_WEIGHT_TYPE: CEIL_2D
NODE_COORD_SECTION\t(INDEX, X, Y):
1\t0\t0
2\t10\t0
3\t5\t8.66
ITEMS SECTION\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER):
1\t100\t5\t2
"""


@pytest.fixture
def triangle():
    return parse_instance(TRIANGLE)


def make_random_instance(seed, n, m, dist_threshold=2000):
    rng = np.random.default_rng(seed)
    coords, city, profit, weight, capacity, rent = random_instance_arrays(rng, n, m)
    return TtpInstance(f"rand{seed}", coords, city, profit, weight, capacity, rent,
                       0.1, 1.0, dist_threshold=dist_threshold)


def random_tour(rng, n):
    from ttp_surrogate import Tour
    return Tour(np.concatenate([[0], rng.permutation(np.arange(1, n))]))


def random_plan(rng, inst):
    from ttp_surrogate import PackingPlan
    picks = np.zeros(inst.m, dtype=np.uint8)
    total = 0.0
    for j in rng.permutation(inst.m):
        if rng.random() < 0.5 and total + inst.item_weight[j] <= inst.capacity:
            picks[j] = 1
            total += inst.item_weight[j]
    return PackingPlan(picks)


# --- acceptance summary -------------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record an acceptance verdict; the summary is printed at the end of the session."""
    def record(number: int, passed: bool, detail: str):
        ACCEPTANCE_RESULTS[number] = (bool(passed), detail)
        print(f"criterion {number}: {'PASS' if passed else 'FAIL'} ({detail})")
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'} - {detail}")
