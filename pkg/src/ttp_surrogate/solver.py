"""Restart-based cooperative TTP solving.

Each restart builds an initial tour (randomised nearest neighbour followed by
length-only 2-opt), packs it greedily, and then alternates a deterministic
best-improvement tour round with a stochastic first-improvement packing round
until a full round no longer improves the objective.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from ._backend import kernels
from .instance import PackingPlan, Tour, TtpInstance, evaluate

# Moves must improve the objective by more than this (relative) amount;
# guards against accepting float noise as progress.
REL_GAIN = 1e-10

_KP_CHUNK_MIN = 1024
_KP_CHUNK_MAX = 1 << 16


class Neighborhood(enum.Enum):
    TWO_OPT = "two_opt"
    TWO_OPT_RELOCATE = "two_opt_relocate"


@dataclass
class SolverConfig:
    rng_seed: int = 0
    kp_budget: int | None = None  # None: 50 * m, capped at 100,000
    tsp_neighborhood: Neighborhood = Neighborhood.TWO_OPT_RELOCATE
    max_rounds: int = 1000

    def __post_init__(self):
        if self.kp_budget is not None and self.kp_budget < 1:
            raise ValueError("kp_budget must be >= 1")
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be >= 1")
        self.tsp_neighborhood = Neighborhood(self.tsp_neighborhood)

    def budget_for(self, inst: TtpInstance) -> int:
        if self.kp_budget is not None:
            return self.kp_budget
        return min(50 * inst.m, 100_000)

    def snapshot(self) -> dict:
        return {
            "rng_seed": self.rng_seed,
            "kp_budget": "auto" if self.kp_budget is None else self.kp_budget,
            "tsp_neighborhood": self.tsp_neighborhood.value,
            "max_rounds": self.max_rounds,
        }


@dataclass
class SolveOutcome:
    tour: Tour
    plan: PackingPlan
    g: float
    rounds_used: int
    wall_time: float


def _min_gain(g: float) -> float:
    return REL_GAIN * max(1.0, abs(g))


def _nearest_neighbour(inst: TtpInstance, start: int) -> np.ndarray:
    n = inst.n
    visited = np.zeros(n, dtype=bool)
    order = np.empty(n, dtype=np.int64)
    cur = start
    for k in range(n):
        order[k] = cur
        visited[cur] = True
        if k == n - 1:
            break
        if inst.dist.shape[0]:
            row = inst.dist[cur].copy()
        else:
            diff = inst.coords - inst.coords[cur]
            row = np.ceil(np.sqrt((diff * diff).sum(axis=1)))
        row[visited] = np.inf
        cur = int(np.argmin(row))
    return order


def build_initial_tour(inst: TtpInstance, rng: np.random.Generator) -> Tour:
    """Nearest neighbour from a random city, rotated to start at city 0, then 2-opt.

    The 2-opt scan starts at a random offset, so equal nearest-neighbour tours
    can still settle in different local optima.
    """
    n = inst.n
    start = int(rng.integers(n))
    offset = int(rng.integers(max(n - 2, 1)))
    order = _nearest_neighbour(inst, start)
    order = np.ascontiguousarray(np.roll(order, -int(np.flatnonzero(order == 0)[0])))
    kernels.length_two_opt(order, inst.coords, inst.dist, offset)
    return Tour(order)


def _tour_state(inst, tour, cityw):
    legs = kernels.tour_legs(tour.order, inst.coords, inst.dist)
    cumw = np.cumsum(cityw[tour.order])
    return legs, cumw


def build_initial_plan(inst: TtpInstance, tour: Tour) -> PackingPlan:
    """Greedy packing by profit / (weight * (1 + remaining-distance fraction)).

    Items are tried in decreasing score order and kept when they fit and
    strictly improve the objective.
    """
    legs = kernels.tour_legs(tour.order, inst.coords, inst.dist)
    length = legs.sum()
    # distance still to travel after leaving each position
    remaining = length - np.cumsum(legs) + legs
    remaining[0] = length
    k_item = tour.pos[inst.item_city]
    frac = remaining[k_item] / length if length > 0 else np.zeros(inst.m)
    score = inst.item_profit / (inst.item_weight * (1.0 + frac))
    candidates = np.argsort(-score, kind="stable")

    picks = np.zeros(inst.m, dtype=np.uint8)
    cumw = np.zeros(inst.n)
    total = 0.0
    for j in candidates:
        w = inst.item_weight[j]
        if total + w > inst.capacity:
            continue
        k = k_item[j]
        gain = inst.item_profit[j] - inst.rent * kernels.weight_delta_time(
            legs, cumw, inst.vmax, inst.nu, k, w, k, 0.0)
        if gain > 0.0:
            picks[j] = 1
            cumw[k:] += w
            total = cumw[-1]
    return PackingPlan(picks)


def tsp_round(inst: TtpInstance, tour: Tour, plan: PackingPlan,
              neighborhood: Neighborhood = Neighborhood.TWO_OPT_RELOCATE) -> Tour:
    """Apply the best tour move until none improves the objective."""
    if inst.rent == 0.0 or inst.n < 3:
        return tour
    cityw = inst.city_weights(plan)
    relocate = Neighborhood(neighborhood) is Neighborhood.TWO_OPT_RELOCATE
    order = tour.order.copy()
    legs, cumw = _tour_state(inst, tour, cityw)
    g = float(inst.item_profit @ plan.picks) - inst.rent * kernels.tour_time(
        legs, cumw, inst.vmax, inst.nu)
    min_gain = _min_gain(g)
    while True:
        kind, i, j, dt = kernels.best_tour_move(order, legs, cumw, cityw, inst.coords,
                                                inst.dist, inst.vmax, inst.nu, relocate)
        if kind == 0 or -inst.rent * dt <= min_gain:
            break
        if kind == 1:
            order[i:j + 1] = order[i:j + 1][::-1].copy()
        else:
            c = order[i]
            if j > i:
                order[i:j] = order[i + 1:j + 1].copy()
            else:
                order[j + 1:i + 1] = order[j:i].copy()
            order[j] = c
        legs = kernels.tour_legs(order, inst.coords, inst.dist)
        cumw = np.cumsum(cityw[order])
    return Tour(order)


def kp_round(inst: TtpInstance, tour: Tour, plan: PackingPlan, rng: np.random.Generator,
             budget: int | None = None) -> PackingPlan:
    """Random flips and picked/unpicked swaps, first improvement, until ``budget``
    consecutive samples fail to improve."""
    if budget is None:
        budget = min(50 * inst.m, 100_000)
    picks = plan.picks.copy()
    legs, cumw = _tour_state(inst, tour, inst.city_weights(plan))
    g = float(inst.item_profit @ picks) - inst.rent * kernels.tour_time(
        legs, cumw, inst.vmax, inst.nu)
    min_gain = _min_gain(g)
    chunk = min(max(budget, _KP_CHUNK_MIN), _KP_CHUNK_MAX)
    fails = 0
    while True:
        draws = rng.random((chunk, 3))
        _, stalled, fails = kernels.kp_search(
            tour.pos, inst.item_city, inst.item_weight, inst.item_profit, picks, legs,
            cumw, inst.vmax, inst.nu, inst.capacity, inst.rent, budget, draws,
            min_gain, fails)
        if stalled:
            break
    return PackingPlan(picks)


def solve_from(inst: TtpInstance, tour: Tour, config: SolverConfig,
               rng: np.random.Generator) -> SolveOutcome:
    """Solve one restart from ``tour``; stops when a round brings no improvement."""
    t0 = time.perf_counter()
    budget = config.budget_for(inst)
    plan = build_initial_plan(inst, tour)
    best_g = evaluate(inst, tour, plan).objective
    best = (tour, plan)
    rounds = 0
    while rounds < config.max_rounds:
        rounds += 1
        tour = tsp_round(inst, tour, plan, config.tsp_neighborhood)
        plan = kp_round(inst, tour, plan, rng, budget)
        g = evaluate(inst, tour, plan).objective
        if g > best_g + _min_gain(best_g):
            best_g = g
            best = (tour, plan)
        else:
            if g > best_g:
                best_g = g
                best = (tour, plan)
            break
    return SolveOutcome(best[0], best[1], best_g, rounds, time.perf_counter() - t0)


# --- restart loop ------------------------------------------------------------

class RestartController(Protocol):
    def propose(self, tour: Tour, restart_index: int = -1): ...

    def observe(self, tour: Tour, g: float, restart_index: int = -1): ...


@dataclass
class RestartRecord:
    index: int
    decision: str  # "solved" | "skipped"
    tour: Tour
    g: float | None = None
    predicted_n_g: float | None = None
    solve_seconds: float | None = None
    surrogate_seconds: float = 0.0


@dataclass
class RunLog:
    instance_name: str
    seed: int
    records: list[RestartRecord] = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def best_g(self) -> float:
        solved = [r.g for r in self.records if r.g is not None]
        return max(solved) if solved else -math.inf

    @property
    def solver_seconds(self) -> float:
        return sum(r.solve_seconds or 0.0 for r in self.records)

    @property
    def surrogate_seconds(self) -> float:
        return sum(r.surrogate_seconds for r in self.records)


def restart_streams(seed: int, index: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (tour, packing) generators for one restart."""
    return (np.random.default_rng([seed, index, 0]),
            np.random.default_rng([seed, index, 1]))


def run_restarts(inst: TtpInstance, count: int, config: SolverConfig,
                 controller: RestartController | None = None) -> RunLog:
    """Run ``count`` restarts, asking ``controller`` (if any) whether to solve each.

    Restart ``r`` draws from streams keyed by ``(seed, r)``, so a skipped
    restart does not shift the tours or packings of later ones.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    log = RunLog(inst.name, config.rng_seed, config=config.snapshot())
    for r in range(count):
        tour_rng, kp_rng = restart_streams(config.rng_seed, r)
        tour = build_initial_tour(inst, tour_rng)
        predicted = None
        sur = 0.0
        if controller is not None:
            t0 = time.perf_counter()
            decision = controller.propose(tour, r)
            sur += time.perf_counter() - t0
            predicted = decision.predicted_n_g
            if not decision.solve:
                log.records.append(RestartRecord(r, "skipped", tour, None, predicted, None, sur))
                continue
        out = solve_from(inst, tour, config, kp_rng)
        if controller is not None:
            t0 = time.perf_counter()
            controller.observe(tour, out.g, r)
            sur += time.perf_counter() - t0
        log.records.append(RestartRecord(r, "solved", tour, out.g, predicted,
                                         out.wall_time, sur))
    return log
