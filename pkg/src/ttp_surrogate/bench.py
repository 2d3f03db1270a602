"""Experiment harness: instance generation, restart replay and filtering statistics."""

from __future__ import annotations

import csv
import io
import math
import time
from collections import defaultdict
from dataclasses import asdict, dataclass

import numpy as np

from .controller import Controller, ControllerConfig
from .instance import PackingPlan, Tour, TtpInstance, evaluate
from .runlog import RunLogError
from .solver import RunLog, _nearest_neighbour

CATEGORIES = {
    # items per city, knapsack type label, capacity share of total item weight
    "A": (1, "bounded strongly corr", 0.25),
    "B": (5, "uncorrelated, similar weights", 0.50),
    "C": (10, "uncorrelated", 0.75),
}
_TYPE_TO_CATEGORY = {label: cat for cat, (_, label, _) in CATEGORIES.items()}

REPORT_COLUMNS = ["instance", "category", "seed", "beta", "restarts", "filtered_pct",
                  "missed_best", "best_g", "surrogate_seconds", "solver_seconds"]


def category_of(inst_or_label) -> str:
    label = getattr(inst_or_label, "knapsack_type", inst_or_label)
    return _TYPE_TO_CATEGORY.get(str(label).strip(), "")


def generate_instance(n: int, category: str, seed: int,
                      items_per_city: int | None = None) -> TtpInstance:
    """Random desk-scale instance shaped like one benchmark category.

    A: strongly correlated profits (weight + 100), small capacity.
    B: uncorrelated profits, near-equal weights, moderate capacity.
    C: uncorrelated profits and weights, large capacity.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    category = category.upper()
    if category not in CATEGORIES:
        raise ValueError(f"unknown category {category!r}")
    per_city, label, cap_share = CATEGORIES[category]
    if items_per_city is not None:
        if items_per_city < 1:
            raise ValueError("items_per_city must be >= 1")
        per_city = items_per_city
    rng = np.random.default_rng([seed, n, ord(category)])
    coords = rng.integers(0, 1000, size=(n, 2)).astype(np.float64)
    m = per_city * (n - 1)
    # items are listed layer by layer, one item per city in each layer
    city = np.tile(np.arange(1, n), per_city)
    if category == "A":
        weight = rng.integers(1, 1001, size=m).astype(np.float64)
        profit = weight + 100.0
    elif category == "B":
        weight = rng.integers(1000, 1011, size=m).astype(np.float64)
        profit = rng.integers(1, 1001, size=m).astype(np.float64)
    else:
        weight = rng.integers(1, 1001, size=m).astype(np.float64)
        profit = rng.integers(1, 1001, size=m).astype(np.float64)
    capacity = float(max(1.0, math.floor(cap_share * weight.sum())))
    vmin, vmax = 0.1, 1.0

    # break-even rent: the nearest-neighbour tour carrying a ratio-greedy
    # packing scores exactly zero
    order = np.argsort(-profit / weight, kind="stable")
    picks = np.zeros(m, dtype=np.uint8)
    picks[order[np.cumsum(weight[order]) <= capacity]] = 1
    probe = TtpInstance("probe", coords, city, profit, weight, capacity, 0.0, vmin, vmax)
    ev = evaluate(probe, Tour(_nearest_neighbour(probe, 0)), PackingPlan(picks))
    rent = round(ev.profit / ev.time, 4)
    name = f"gen{n}_{category}_s{seed}"
    return TtpInstance(name, coords, city, profit, weight, capacity, rent, vmin, vmax,
                       knapsack_type=label)


@dataclass
class ReplayReport:
    instance: str
    category: str
    seed: int
    beta: float
    restarts: int
    skipped: int
    solved: int
    filtered_pct: float
    missed_best: int
    best_g: float
    surrogate_seconds: float
    solver_seconds: float
    solver_seconds_saved: float
    fits: int
    final_phase: str
    training_size: int

    def row(self, timings: bool = False) -> dict:
        d = asdict(self)
        out = {k: d[k] for k in REPORT_COLUMNS}
        out["filtered_pct"] = f"{self.filtered_pct:.4f}"
        out["best_g"] = repr(self.best_g)
        if timings:
            out["surrogate_seconds"] = f"{self.surrogate_seconds:.6f}"
            out["solver_seconds"] = f"{self.solver_seconds:.6f}"
        else:
            out["surrogate_seconds"] = ""
            out["solver_seconds"] = ""
        return out


def replay(log: RunLog, config: ControllerConfig, category: str = "",
           event_sink=None) -> ReplayReport:
    """Feed a recorded restart stream through a fresh controller.

    Skipped tours never reach ``observe``; their recorded objective is used
    only to decide whether the run's best solution was filtered out.
    """
    if not log.records:
        raise RunLogError("empty run log")
    for k, rec in enumerate(log.records):
        if rec.index != k:
            raise RunLogError(f"record {k} has restart index {rec.index}")
        if rec.decision != "solved" or rec.g is None:
            raise RunLogError(f"restart {k} was not solved; replay needs a complete log")
    ctl = Controller(config, event_sink=event_sink)
    best_g = max(rec.g for rec in log.records)
    skipped = 0
    missed = 0
    sur = 0.0
    spent = 0.0
    saved = 0.0
    for rec in log.records:
        t0 = time.perf_counter()
        decision = ctl.propose(rec.tour, rec.index)
        sur += time.perf_counter() - t0
        if not decision.solve:
            skipped += 1
            saved += rec.solve_seconds or 0.0
            if rec.g >= best_g:
                missed = 1
            continue
        spent += rec.solve_seconds or 0.0
        t0 = time.perf_counter()
        ctl.observe(rec.tour, rec.g, rec.index)
        sur += time.perf_counter() - t0
    total = len(log.records)
    return ReplayReport(
        instance=log.instance_name,
        category=category or str(log.config.get("category", "")),
        seed=log.seed,
        beta=config.beta,
        restarts=total,
        skipped=skipped,
        solved=total - skipped,
        filtered_pct=100.0 * skipped / total,
        missed_best=missed,
        best_g=best_g,
        surrogate_seconds=sur,
        solver_seconds=spent,
        solver_seconds_saved=saved,
        fits=ctl.stats.fits,
        final_phase=ctl.phase.value,
        training_size=len(ctl.training_set),
    )


def random_baseline(filtered_fraction: float, runs: int) -> float:
    """Expected missed-best count when tours are filtered uniformly at random."""
    return filtered_fraction * runs


@dataclass
class OperatingPoint:
    group: str  # category or instance name
    beta: float
    runs: int
    filtered_pct: float
    missed_best: float  # average number of missed runs per instance
    diagonal: float

    @property
    def below_diagonal(self) -> bool:
        return self.missed_best < self.diagonal


def operating_points(reports: list[ReplayReport], by: str = "category") -> list[OperatingPoint]:
    """Average (filtered %, missed best) per group and beta.

    Missed-best counts are summed over the runs (seeds) of each instance and
    then averaged over the instances of the group, matching an "out of N
    runs" reading.
    """
    per_instance: dict[tuple, list[ReplayReport]] = defaultdict(list)
    for rep in reports:
        per_instance[(getattr(rep, by), rep.beta, rep.instance)].append(rep)
    grouped: dict[tuple, list[tuple[float, int, int]]] = defaultdict(list)
    for (group, beta, _), reps in per_instance.items():
        grouped[(group, beta)].append((float(np.mean([r.filtered_pct for r in reps])),
                                       sum(r.missed_best for r in reps), len(reps)))
    points = []
    for (group, beta), vals in sorted(grouped.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
        filtered = float(np.mean([v[0] for v in vals]))
        missed = float(np.mean([v[1] for v in vals]))
        runs = int(round(np.mean([v[2] for v in vals])))
        points.append(OperatingPoint(group, beta, runs, filtered, missed,
                                     random_baseline(filtered / 100.0, runs)))
    return points


def format_report(reports: list[ReplayReport], timings: bool = False) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for rep in sorted(reports, key=lambda r: (r.instance, r.seed, r.beta)):
        writer.writerow(rep.row(timings))
    return out.getvalue()


def format_points(points: list[OperatingPoint]) -> str:
    out = io.StringIO()
    out.write("group,beta,runs,filtered_pct,missed_best,random_diagonal\n")
    for p in points:
        out.write(f"{p.group},{p.beta},{p.runs},{p.filtered_pct:.4f},"
                  f"{p.missed_best:.4f},{p.diagonal:.4f}\n")
    return out.getvalue()
