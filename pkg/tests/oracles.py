"""Independent reference computations used by the tests.

Nothing here imports the package's evaluation or kernel code: distances,
speeds and times are recomputed from raw numbers with plain loops.
"""

import itertools
import math

import numpy as np


def ceil_dist(p, q):
    return math.ceil(math.hypot(p[0] - q[0], p[1] - q[1]))


def objective(coords, item_city, profit, weight, capacity, rent, vmin, vmax, cities, picks):
    """Direct summation of profit - rent * time for a tour given as a city list."""
    n = len(cities)
    at_city = [0.0] * len(coords)
    total_profit = 0.0
    for j, p in enumerate(picks):
        if p:
            at_city[item_city[j]] += weight[j]
            total_profit += profit[j]
    carried = 0.0
    t = 0.0
    for k in range(n):
        carried += at_city[cities[k]]
        speed = vmax - carried * (vmax - vmin) / capacity
        t += ceil_dist(coords[cities[k]], coords[cities[(k + 1) % n]]) / speed
    return total_profit - rent * t, total_profit, t


def objective_of(inst, cities, picks):
    return objective(inst.coords.tolist(), inst.item_city.tolist(), inst.item_profit.tolist(),
                     inst.item_weight.tolist(), inst.capacity, inst.rent, inst.vmin,
                     inst.vmax, list(cities), list(picks))


def brute_force_optimum(inst):
    """Best objective over all tours (city 0 first) and all feasible plans."""
    n, m = inst.n, inst.m
    best = -math.inf
    plans = [p for p in itertools.product((0, 1), repeat=m)
             if sum(w for w, b in zip(inst.item_weight, p) if b) <= inst.capacity]
    for rest in itertools.permutations(range(1, n)):
        cities = (0,) + rest
        for p in plans:
            g = objective_of(inst, cities, p)[0]
            if g > best:
                best = g
    return best


def footrule_distance(pos_a, pos_b):
    n = len(pos_a)
    return sum(abs(int(x) - int(y)) for x, y in zip(pos_a, pos_b)) / (n * (n - 1))


def random_instance_arrays(rng, n, m):
    coords = rng.integers(0, 100, size=(n, 2)).astype(float)
    item_city = rng.integers(1, n, size=m)
    weight = rng.integers(1, 50, size=m).astype(float)
    profit = rng.integers(1, 100, size=m).astype(float)
    capacity = float(max(weight.max(), np.floor(weight.sum() * rng.uniform(0.2, 0.8))))
    rent = float(rng.uniform(0.05, 2.0))
    return coords, item_city, profit, weight, capacity, rent
