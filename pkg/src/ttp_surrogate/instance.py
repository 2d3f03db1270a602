"""TTP instances, tours, packing plans and exact objective evaluation.

Cities and positions are 0-based throughout the Python API: city ``0`` is the
depot and always sits at position ``0`` of a tour. The benchmark file format
and the run-log CSV use 1-based city numbers; conversion happens only at
those boundaries.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ._backend import kernels

#: Instances with at most this many cities get a precomputed distance matrix.
DIST_MATRIX_THRESHOLD = 2000

_EMPTY = np.zeros((0, 0), dtype=np.float64)


class ParseError(ValueError):
    """Malformed benchmark document; the message names line and field."""


class InfeasibleError(ValueError):
    """A packing plan whose weight exceeds the knapsack capacity."""


@dataclass(frozen=True, eq=False)
class TtpInstance:
    name: str
    coords: np.ndarray  # (n, 2) float64
    item_city: np.ndarray  # (m,) int64, 0-based city of each item
    item_profit: np.ndarray  # (m,) float64
    item_weight: np.ndarray  # (m,) float64
    capacity: float
    rent: float
    vmin: float
    vmax: float
    knapsack_type: str = ""
    dist_threshold: int = DIST_MATRIX_THRESHOLD
    dist: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        coords = np.ascontiguousarray(self.coords, dtype=np.float64)
        item_city = np.ascontiguousarray(self.item_city, dtype=np.int64)
        profit = np.ascontiguousarray(self.item_profit, dtype=np.float64)
        weight = np.ascontiguousarray(self.item_weight, dtype=np.float64)
        n = coords.shape[0]
        if coords.ndim != 2 or coords.shape[1] != 2 or n < 2:
            raise ValueError("coords must be an (n, 2) array with n >= 2")
        if item_city.ndim != 1 or item_city.shape[0] < 1:
            raise ValueError("at least one item is required")
        if not (item_city.shape == profit.shape == weight.shape):
            raise ValueError("item arrays differ in length")
        if item_city.min() < 1 or item_city.max() >= n:
            raise ValueError("item city out of range")
        if (profit <= 0).any() or (weight <= 0).any():
            raise ValueError("item profits and weights must be positive")
        if not self.capacity > 0:
            raise ValueError("capacity must be positive")
        if not self.rent >= 0:
            raise ValueError("renting ratio must be non-negative")
        if not 0 < self.vmin <= self.vmax:
            raise ValueError("speeds must satisfy 0 < vmin <= vmax")
        for arr in (coords, item_city, profit, weight):
            arr.setflags(write=False)
        object.__setattr__(self, "coords", coords)
        object.__setattr__(self, "item_city", item_city)
        object.__setattr__(self, "item_profit", profit)
        object.__setattr__(self, "item_weight", weight)
        if n <= self.dist_threshold:
            diff = coords[:, None, :] - coords[None, :, :]
            dist = np.ceil(np.sqrt((diff * diff).sum(axis=2)))
            dist.setflags(write=False)
        else:
            dist = _EMPTY
        object.__setattr__(self, "dist", dist)

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def m(self) -> int:
        return self.item_city.shape[0]

    @property
    def nu(self) -> float:
        """Speed lost per unit of carried weight."""
        return (self.vmax - self.vmin) / self.capacity

    def distance(self, a: int, b: int) -> float:
        return distance(self, a, b)

    def city_weights(self, plan: PackingPlan) -> np.ndarray:
        return np.bincount(self.item_city, weights=self.item_weight * plan.picks,
                           minlength=self.n).astype(np.float64)


class Tour:
    """A cyclic tour starting at city 0, with its inverse permutation."""

    __slots__ = ("order", "pos")

    def __init__(self, order: Sequence[int] | np.ndarray):
        order = np.array(order, dtype=np.int64)
        n = order.shape[0]
        if order.ndim != 1 or n < 2:
            raise ValueError("a tour needs at least two cities")
        if order[0] != 0:
            raise ValueError("tour must start at city 0")
        pos = np.full(n, -1, dtype=np.int64)
        if order.min() < 0 or order.max() >= n:
            raise ValueError("tour is not a permutation")
        pos[order] = np.arange(n)
        if (pos < 0).any():
            raise ValueError("tour is not a permutation")
        order.setflags(write=False)
        pos.setflags(write=False)
        self.order = order
        self.pos = pos

    @classmethod
    def from_cities(cls, cities: Sequence[int]) -> Tour:
        """Build from 1-based city numbers, as written in files."""
        return cls(np.asarray(cities, dtype=np.int64) - 1)

    @property
    def n(self) -> int:
        return self.order.shape[0]

    def cities(self) -> tuple[int, ...]:
        return tuple(int(c) + 1 for c in self.order)

    def key(self) -> bytes:
        return self.order.tobytes()

    def __eq__(self, other):
        return isinstance(other, Tour) and np.array_equal(self.order, other.order)

    def __hash__(self):
        return hash(self.key())

    def __repr__(self):
        return f"Tour({self.order.tolist()})"

    def __len__(self):
        return self.n


class PackingPlan:
    __slots__ = ("picks",)

    def __init__(self, picks: Sequence[int] | np.ndarray):
        picks = np.array(picks, dtype=np.uint8)
        if picks.ndim != 1 or ((picks != 0) & (picks != 1)).any():
            raise ValueError("picks must be a 0/1 vector")
        self.picks = picks

    @classmethod
    def empty(cls, m: int) -> PackingPlan:
        return cls(np.zeros(m, dtype=np.uint8))

    def copy(self) -> PackingPlan:
        return PackingPlan(self.picks.copy())

    def weight(self, inst: TtpInstance) -> float:
        return float(inst.item_weight @ self.picks)

    def __eq__(self, other):
        return isinstance(other, PackingPlan) and np.array_equal(self.picks, other.picks)

    def __repr__(self):
        return f"PackingPlan({self.picks.tolist()})"


@dataclass(frozen=True)
class Evaluation:
    profit: float
    time: float
    objective: float
    final_weight: float


# Moves understood by evaluate_delta. Positions are 0-based tour positions.

@dataclass(frozen=True)
class TwoOpt:
    """Reverse the tour segment at positions ``i..j`` (``1 <= i < j < n``)."""
    i: int
    j: int


@dataclass(frozen=True)
class Relocate:
    """Move the city at position ``i`` so that it ends up at position ``j``."""
    i: int
    j: int


@dataclass(frozen=True)
class ItemFlip:
    item: int


@dataclass(frozen=True)
class ItemSwap:
    """Drop picked item ``out`` and pick unpicked item ``into``."""
    out: int
    into: int


Move = TwoOpt | Relocate | ItemFlip | ItemSwap


def distance(inst: TtpInstance, a: int, b: int) -> float:
    """CEIL_2D distance between cities ``a`` and ``b``."""
    if inst.dist.shape[0]:
        return float(inst.dist[a, b])
    dx, dy = inst.coords[a] - inst.coords[b]
    return float(math.ceil(math.sqrt(dx * dx + dy * dy)))


def tour_length(inst: TtpInstance, tour: Tour) -> float:
    return float(kernels.tour_legs(tour.order, inst.coords, inst.dist).sum())


def _check_tour(inst: TtpInstance, tour: Tour):
    if tour.n != inst.n:
        raise ValueError(f"tour has {tour.n} cities, instance has {inst.n}")


def _check_plan(inst: TtpInstance, plan: PackingPlan):
    if plan.picks.shape[0] != inst.m:
        raise ValueError(f"plan has {plan.picks.shape[0]} items, instance has {inst.m}")


def evaluate(inst: TtpInstance, tour: Tour, plan: PackingPlan) -> Evaluation:
    """Profit, travel time and objective ``profit - rent * time`` of a solution.

    Raises :class:`InfeasibleError` if the plan is heavier than the capacity.
    """
    _check_tour(inst, tour)
    _check_plan(inst, plan)
    weight = plan.weight(inst)
    if weight > inst.capacity:
        raise InfeasibleError(f"plan weight {weight} exceeds capacity {inst.capacity}")
    cumw = np.cumsum(inst.city_weights(plan)[tour.order])
    legs = kernels.tour_legs(tour.order, inst.coords, inst.dist)
    t = kernels.tour_time(legs, cumw, inst.vmax, inst.nu)
    profit = float(inst.item_profit @ plan.picks)
    return Evaluation(profit, t, profit - inst.rent * t, weight)


def evaluate_delta(inst: TtpInstance, tour: Tour, plan: PackingPlan, move: Move) -> float:
    """Objective change caused by ``move`` without re-evaluating the solution."""
    _check_tour(inst, tour)
    _check_plan(inst, plan)
    n, m = inst.n, inst.m
    cityw = inst.city_weights(plan)
    cumw = np.cumsum(cityw[tour.order])
    legs = kernels.tour_legs(tour.order, inst.coords, inst.dist)
    if cumw[-1] > inst.capacity:
        raise InfeasibleError("plan weight exceeds capacity")
    if isinstance(move, TwoOpt):
        if not 1 <= move.i <= move.j < n:
            raise IndexError(f"2-opt positions out of range: {move}")
        if move.i == move.j:
            return 0.0
        dt = kernels.two_opt_delta(tour.order, legs, cumw, inst.coords, inst.dist,
                                   inst.vmax, inst.nu, move.i, move.j)
        return -inst.rent * dt
    if isinstance(move, Relocate):
        if not (1 <= move.i < n and 1 <= move.j < n):
            raise IndexError(f"relocate positions out of range: {move}")
        if move.i == move.j:
            return 0.0
        dt = kernels.relocate_delta(tour.order, legs, cumw, cityw, inst.coords, inst.dist,
                                    inst.vmax, inst.nu, move.i, move.j)
        return -inst.rent * dt
    picks = plan.picks
    if isinstance(move, ItemFlip):
        j = move.item
        if not 0 <= j < m:
            raise IndexError(f"item out of range: {move}")
        sign = -1.0 if picks[j] else 1.0
        dw = sign * inst.item_weight[j]
        if cumw[-1] + dw > inst.capacity:
            raise InfeasibleError("move makes the plan infeasible")
        k = tour.pos[inst.item_city[j]]
        dt = kernels.weight_delta_time(legs, cumw, inst.vmax, inst.nu, k, dw, k, 0.0)
        return sign * inst.item_profit[j] - inst.rent * dt
    if isinstance(move, ItemSwap):
        a, b = move.out, move.into
        if not (0 <= a < m and 0 <= b < m):
            raise IndexError(f"item out of range: {move}")
        if not picks[a] or picks[b]:
            raise ValueError("swap needs a picked 'out' item and an unpicked 'into' item")
        if cumw[-1] - inst.item_weight[a] + inst.item_weight[b] > inst.capacity:
            raise InfeasibleError("move makes the plan infeasible")
        ka = tour.pos[inst.item_city[a]]
        kb = tour.pos[inst.item_city[b]]
        dt = kernels.weight_delta_time(legs, cumw, inst.vmax, inst.nu,
                                       ka, -inst.item_weight[a], kb, inst.item_weight[b])
        return inst.item_profit[b] - inst.item_profit[a] - inst.rent * dt
    raise TypeError(f"unknown move {move!r}")


def apply_move(tour: Tour, plan: PackingPlan, move: Move) -> tuple[Tour, PackingPlan]:
    """Return the solution after ``move``; the inputs are left untouched."""
    if isinstance(move, TwoOpt):
        order = tour.order.copy()
        order[move.i:move.j + 1] = order[move.i:move.j + 1][::-1]
        return Tour(order), plan
    if isinstance(move, Relocate):
        order = list(tour.order)
        c = order.pop(move.i)
        order.insert(move.j, c)
        return Tour(order), plan
    picks = plan.picks.copy()
    if isinstance(move, ItemFlip):
        picks[move.item] ^= 1
    elif isinstance(move, ItemSwap):
        picks[move.out] = 0
        picks[move.into] = 1
    else:
        raise TypeError(f"unknown move {move!r}")
    return tour, PackingPlan(picks)


# --- benchmark file format -------------------------------------------------

_HEADER_KEYS = {
    "PROBLEM NAME": "name",
    "KNAPSACK DATA TYPE": "knapsack_type",
    "DIMENSION": "n",
    "NUMBER OF ITEMS": "m",
    "CAPACITY OF KNAPSACK": "capacity",
    "MIN SPEED": "vmin",
    "MAX SPEED": "vmax",
    "RENTING RATIO": "rent",
    "EDGE_WEIGHT_TYPE": "edge_type",
}
_REQUIRED = ("n", "m", "capacity", "vmin", "vmax", "rent", "edge_type")


def _num(tok: str, lineno: int, what: str, kind=float):
    try:
        val = kind(tok)
    except ValueError:
        raise ParseError(f"line {lineno}: {what}: cannot parse {tok!r}") from None
    if kind is float and not math.isfinite(val):
        raise ParseError(f"line {lineno}: {what}: not finite")
    return val


def parse_instance(text: str, dist_threshold: int = DIST_MATRIX_THRESHOLD) -> TtpInstance:
    """Parse a document in the TTP benchmark text format."""
    lines = text.splitlines()
    header: dict[str, object] = {}
    idx = 0
    while idx < len(lines):
        raw = lines[idx].strip()
        idx += 1
        if not raw:
            continue
        if raw.upper().startswith("NODE_COORD_SECTION"):
            break
        key, sep, value = raw.partition(":")
        if not sep:
            raise ParseError(f"line {idx}: header: expected 'KEY: value', got {raw!r}")
        key = re.sub(r"\s+", " ", key.strip().upper())
        if key not in _HEADER_KEYS:
            raise ParseError(f"line {idx}: header: unknown key {key!r}")
        field_name = _HEADER_KEYS[key]
        value = value.strip()
        if field_name in ("name", "knapsack_type", "edge_type"):
            header[field_name] = value
        elif field_name in ("n", "m"):
            header[field_name] = _num(value, idx, key, int)
        else:
            header[field_name] = _num(value, idx, key)
    else:
        raise ParseError(f"line {idx}: NODE_COORD_SECTION: section missing")
    for req in _REQUIRED:
        if req not in header:
            key = next(k for k, v in _HEADER_KEYS.items() if v == req)
            raise ParseError(f"line {idx}: header: missing {key}")
    if str(header["edge_type"]).upper() != "CEIL_2D":
        raise ParseError(f"line {idx}: EDGE_WEIGHT_TYPE: unsupported {header['edge_type']!r}")
    n, m = int(header["n"]), int(header["m"])
    if n < 2:
        raise ParseError(f"line {idx}: DIMENSION: need at least 2 cities, got {n}")
    if m < 1:
        raise ParseError(f"line {idx}: NUMBER OF ITEMS: need at least 1 item, got {m}")

    def body_rows(count: int, width: int, section: str):
        nonlocal idx
        rows = []
        while len(rows) < count:
            if idx >= len(lines):
                raise ParseError(f"line {idx}: {section}: expected {count} rows, "
                                 f"found {len(rows)}")
            raw = lines[idx].strip()
            idx += 1
            if not raw:
                continue
            toks = raw.split()
            if len(toks) != width:
                raise ParseError(f"line {idx}: {section}: expected {width} fields, "
                                 f"got {len(toks)}")
            rows.append((idx, toks))
        return rows

    coords = np.empty((n, 2))
    seen = np.zeros(n, dtype=bool)
    for lineno, toks in body_rows(n, 3, "NODE_COORD_SECTION"):
        i = _num(toks[0], lineno, "node index", int)
        if not 1 <= i <= n or seen[i - 1]:
            raise ParseError(f"line {lineno}: node index: {i} out of range or repeated")
        seen[i - 1] = True
        coords[i - 1] = (_num(toks[1], lineno, "x"), _num(toks[2], lineno, "y"))

    while idx < len(lines) and not lines[idx].strip():
        idx += 1
    if idx >= len(lines) or not lines[idx].strip().upper().startswith("ITEMS SECTION"):
        raise ParseError(f"line {idx + 1}: ITEMS SECTION: dimension mismatch or section missing")
    idx += 1
    city = np.empty(m, dtype=np.int64)
    profit = np.empty(m)
    weight = np.empty(m)
    seen = np.zeros(m, dtype=bool)
    for lineno, toks in body_rows(m, 4, "ITEMS SECTION"):
        j = _num(toks[0], lineno, "item index", int)
        if not 1 <= j <= m or seen[j - 1]:
            raise ParseError(f"line {lineno}: item index: {j} out of range or repeated")
        seen[j - 1] = True
        p = _num(toks[1], lineno, "profit")
        w = _num(toks[2], lineno, "weight")
        node = _num(toks[3], lineno, "assigned node", int)
        if p <= 0:
            raise ParseError(f"line {lineno}: profit: must be positive, got {p}")
        if w <= 0:
            raise ParseError(f"line {lineno}: weight: must be positive, got {w}")
        if not 2 <= node <= n:
            raise ParseError(f"line {lineno}: assigned node: item city out of range ({node})")
        city[j - 1], profit[j - 1], weight[j - 1] = node - 1, p, w
    for raw in lines[idx:]:
        if raw.strip():
            raise ParseError(f"line {idx + 1}: trailing content: dimension mismatch")
    try:
        return TtpInstance(
            name=str(header.get("name", "")),
            coords=coords,
            item_city=city,
            item_profit=profit,
            item_weight=weight,
            capacity=float(header["capacity"]),
            rent=float(header["rent"]),
            vmin=float(header["vmin"]),
            vmax=float(header["vmax"]),
            knapsack_type=str(header.get("knapsack_type", "")),
            dist_threshold=dist_threshold,
        )
    except ValueError as exc:
        raise ParseError(f"line {idx}: header: {exc}") from None


def _fmt(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_instance(inst: TtpInstance) -> str:
    """Serialize in the benchmark text format (round-trips through parse_instance)."""
    out = [
        f"PROBLEM NAME: \t{inst.name}",
        f"KNAPSACK DATA TYPE: {inst.knapsack_type}",
        f"DIMENSION:\t{inst.n}",
        f"NUMBER OF ITEMS: \t{inst.m}",
        f"CAPACITY OF KNAPSACK: \t{_fmt(inst.capacity)}",
        f"MIN SPEED: \t{_fmt(inst.vmin)}",
        f"MAX SPEED: \t{_fmt(inst.vmax)}",
        f"RENTING RATIO: \t{_fmt(inst.rent)}",
        "EDGE_WEIGHT_TYPE:\tCEIL_2D",
        "NODE_COORD_SECTION\t(INDEX, X, Y): ",
    ]
    for i, (x, y) in enumerate(inst.coords, start=1):
        out.append(f"{i}\t{_fmt(x)}\t{_fmt(y)}")
    out.append("ITEMS SECTION\t(INDEX, PROFIT, WEIGHT, ASSIGNED NODE NUMBER): ")
    for j in range(inst.m):
        out.append(f"{j + 1}\t{_fmt(inst.item_profit[j])}\t{_fmt(inst.item_weight[j])}"
                   f"\t{inst.item_city[j] + 1}")
    return "\n".join(out) + "\n"


def load_instance(path, dist_threshold: int = DIST_MATRIX_THRESHOLD) -> TtpInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), dist_threshold=dist_threshold)
