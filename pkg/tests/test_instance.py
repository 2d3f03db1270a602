import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttp_surrogate import (InfeasibleError, ItemFlip, ItemSwap, PackingPlan, ParseError,
                           Relocate, Tour, TtpInstance, TwoOpt, distance, evaluate,
                           evaluate_delta, format_instance, parse_instance)
from ttp_surrogate.instance import apply_move, tour_length

from conftest import TRIANGLE, make_random_instance, random_plan, random_tour
from oracles import objective_of


def test_parse_triangle(triangle):
    assert triangle.name == "triangle"
    assert (triangle.n, triangle.m) == (3, 1)
    assert triangle.capacity == 10 and triangle.rent == 1
    assert triangle.vmin == 0.1 and triangle.vmax == 1.0
    assert triangle.item_city.tolist() == [1]
    assert triangle.item_profit.tolist() == [100] and triangle.item_weight.tolist() == [5]


def test_parse_item_at_depot_rejected():
    bad = TRIANGLE.replace("1\t100\t5\t2", "1\t100\t5\t1")
    with pytest.raises(ParseError, match="item city out of range"):
        parse_instance(bad)


@pytest.mark.parametrize("old, new, msg", [
    ("DIMENSION: 3", "DIMENSION: three", "DIMENSION"),
    ("DIMENSION: 3", "DIMENSION: 4", "NODE_COORD_SECTION"),
    ("1\t100\t5\t2", "1\t100\t-5\t2", "weight"),
    ("1\t100\t5\t2", "1\t0\t5\t2", "profit"),
    ("1\t100\t5\t2", "1\t100\t5\t4", "item city out of range"),
    ("CEIL_2D", "EUC_2D", "EDGE_WEIGHT_TYPE"),
    ("MIN SPEED: 0.1\n", "", "MIN SPEED"),
])
def test_parse_errors_name_field(old, new, msg):
    with pytest.raises(ParseError, match=msg) as err:
        parse_instance(TRIANGLE.replace(old, new))
    assert "line" in str(err.value)


def test_parse_tolerates_whitespace_and_case():
    text = TRIANGLE.replace("DIMENSION: 3", "dimension  :   3").replace("1\t0\t0", "1   0 0")
    inst = parse_instance(text)
    assert inst.n == 3


def test_format_round_trip():
    inst = make_random_instance(3, 9, 12)
    back = parse_instance(format_instance(inst))
    np.testing.assert_array_equal(back.coords, inst.coords)
    np.testing.assert_array_equal(back.item_city, inst.item_city)
    np.testing.assert_array_equal(back.item_weight, inst.item_weight)
    assert back.rent == inst.rent and back.capacity == inst.capacity


def _two_city_coords(a, b):
    return TtpInstance("d", np.array([a, b], float), [1], [1.0], [1.0], 1.0, 0.0, 0.1, 1.0)


def test_distance_examples():
    assert distance(_two_city_coords((0, 0), (3, 4)), 0, 1) == 5
    assert distance(_two_city_coords((0, 0), (1, 1)), 0, 1) == 2
    inst = _two_city_coords((0, 0), (1, 1))
    assert distance(inst, 1, 1) == 0


def test_distance_without_matrix_matches_matrix():
    a = make_random_instance(4, 30, 5)
    b = make_random_instance(4, 30, 5, dist_threshold=10)
    assert a.dist.shape == (30, 30) and b.dist.shape == (0, 0)
    for i in range(30):
        for j in range(30):
            assert distance(a, i, j) == distance(b, i, j) == distance(b, j, i)


def test_evaluate_triangle(triangle):
    tour = Tour([0, 1, 2])
    ev = evaluate(triangle, tour, PackingPlan([0]))
    assert ev.objective == -30.0 and ev.time == 30.0 and ev.profit == 0.0
    ev = evaluate(triangle, tour, PackingPlan([1]))
    expected_t = 10 / 1.0 + 10 / 0.55 + 10 / 0.55
    assert ev.time == pytest.approx(expected_t, rel=1e-12)
    assert ev.objective == pytest.approx(100 - expected_t, rel=1e-12)
    assert ev.objective == pytest.approx(53.6364, abs=1e-4)
    assert ev.objective == ev.profit - triangle.rent * ev.time


def test_full_knapsack_last_leg_at_vmin():
    inst = TtpInstance("full", np.array([[0, 0], [0, 10], [10, 10]], float), [2], [5.0],
                       [4.0], 4.0, 1.0, 0.1, 1.0)
    ev = evaluate(inst, Tour([0, 1, 2]), PackingPlan([1]))
    # legs 10 (empty) + 10 (empty) + ceil(sqrt(200)) at vmin
    assert ev.time == pytest.approx(10 + 10 + 15 / 0.1, rel=1e-12)


def test_evaluate_rejects_overweight(triangle):
    inst = TtpInstance("o", triangle.coords, [1, 2], [1.0, 1.0], [6.0, 6.0], 10.0, 1.0,
                       0.1, 1.0)
    with pytest.raises(InfeasibleError):
        evaluate(inst, Tour([0, 1, 2]), PackingPlan([1, 1]))


def test_empty_plan_time_is_length_over_vmax():
    rng = np.random.default_rng(0)
    for seed in range(20):
        inst = make_random_instance(seed, 12, 7)
        tour = random_tour(rng, 12)
        ev = evaluate(inst, tour, PackingPlan.empty(7))
        assert ev.objective == pytest.approx(-inst.rent * tour_length(inst, tour) / inst.vmax,
                                             rel=1e-12)


def test_evaluate_matches_oracle_small():
    rng = np.random.default_rng(1)
    for seed in range(50):
        inst = make_random_instance(seed, int(rng.integers(2, 15)), int(rng.integers(1, 10)))
        tour, plan = random_tour(rng, inst.n), random_plan(rng, inst)
        g, p, t = objective_of(inst, tour.order.tolist(), plan.picks.tolist())
        ev = evaluate(inst, tour, plan)
        assert ev.objective == pytest.approx(g, rel=1e-9)
        assert ev.time == pytest.approx(t, rel=1e-9)
        assert ev.profit == p


def test_adding_an_item_never_decreases_time_or_profit():
    rng = np.random.default_rng(2)
    for seed in range(100):
        inst = make_random_instance(seed, 10, 8)
        tour, plan = random_tour(rng, 10), random_plan(rng, inst)
        before = evaluate(inst, tour, plan)
        for j in np.flatnonzero(plan.picks == 0):
            if before.final_weight + inst.item_weight[j] <= inst.capacity:
                after = evaluate(inst, tour, apply_move(tour, plan, ItemFlip(int(j)))[1])
                assert after.time >= before.time and after.profit >= before.profit


def test_tour_invariants():
    t = Tour.from_cities([1, 3, 2, 4])
    assert t.order.tolist() == [0, 2, 1, 3]
    assert all(t.order[t.pos[c]] == c for c in range(4))
    assert t.cities() == (1, 3, 2, 4)
    with pytest.raises(ValueError):
        Tour([1, 0, 2])
    with pytest.raises(ValueError):
        Tour([0, 1, 1])


# --- evaluate_delta -------------------------------------------------------------

def test_delta_identity_moves(triangle):
    tour, plan = Tour([0, 1, 2]), PackingPlan([1])
    assert evaluate_delta(triangle, tour, plan, TwoOpt(1, 1)) == 0.0
    assert evaluate_delta(triangle, tour, plan, Relocate(2, 2)) == 0.0


def test_delta_flip_triangle(triangle):
    d = evaluate_delta(triangle, Tour([0, 1, 2]), PackingPlan([0]), ItemFlip(0))
    assert d == pytest.approx(53.636363636 + 30, rel=1e-9)


def test_delta_out_of_range(triangle):
    tour, plan = Tour([0, 1, 2]), PackingPlan([0])
    for move in (TwoOpt(0, 2), TwoOpt(1, 3), Relocate(0, 1), ItemFlip(1)):
        with pytest.raises(IndexError):
            evaluate_delta(triangle, tour, plan, move)


def _random_move(rng, inst, plan):
    n, m = inst.n, inst.m
    kind = rng.integers(4)
    if kind == 0:
        i, j = sorted(rng.choice(np.arange(1, n), size=2, replace=False))
        return TwoOpt(int(i), int(j))
    if kind == 1:
        i, j = rng.choice(np.arange(1, n), size=2, replace=False)
        return Relocate(int(i), int(j))
    picked = np.flatnonzero(plan.picks)
    free = np.flatnonzero(plan.picks == 0)
    if kind == 3 and picked.size and free.size:
        return ItemSwap(int(rng.choice(picked)), int(rng.choice(free)))
    return ItemFlip(int(rng.integers(m)))


@pytest.mark.parametrize("n, m, threshold", [(5, 4, 2000), (12, 30, 2000), (40, 60, 2000),
                                             (25, 25, 10)])
def test_delta_matches_full_evaluation(n, m, threshold):
    rng = np.random.default_rng(n * 1000 + m)
    checked = 0
    for trial in range(1000):
        inst = make_random_instance(trial % 20 + n, n, m, dist_threshold=threshold)
        tour, plan = random_tour(rng, n), random_plan(rng, inst)
        move = _random_move(rng, inst, plan)
        new_tour, new_plan = apply_move(tour, plan, move)
        if new_plan.weight(inst) > inst.capacity:
            with pytest.raises(InfeasibleError):
                evaluate_delta(inst, tour, plan, move)
            continue
        before = evaluate(inst, tour, plan).objective
        after = evaluate(inst, new_tour, new_plan).objective
        delta = evaluate_delta(inst, tour, plan, move)
        assert delta == pytest.approx(after - before,
                                      abs=1e-9 * max(1.0, abs(before), abs(after)))
        checked += 1
    assert checked > 500


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 9), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_evaluate_matches_oracle_property(n, m, seed):
    inst = make_random_instance(seed, n, m)
    rng = np.random.default_rng(seed)
    tour, plan = random_tour(rng, n), random_plan(rng, inst)
    g = objective_of(inst, tour.order.tolist(), plan.picks.tolist())[0]
    assert evaluate(inst, tour, plan).objective == pytest.approx(g, rel=1e-9, abs=1e-9)
    assert math.isfinite(g)
