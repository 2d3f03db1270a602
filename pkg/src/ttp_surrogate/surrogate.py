"""Support vector regression over tours.

Tours are compared by the mean normalised displacement of city positions,
and the kernel is ``exp(-gamma * distance)``. Objectives are min-max
normalised over the training set before fitting an epsilon-insensitive SVR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .instance import Tour


class FitError(ValueError):
    pass


def tour_distance(a: Tour, b: Tour) -> float:
    """Mean absolute position difference over all cities, scaled into [0, 1]."""
    n = a.n
    if b.n != n:
        raise ValueError(f"tours differ in size ({n} vs {b.n})")
    return float(np.abs(a.pos - b.pos).sum()) / (n * (n - 1))


def kernel(a: Tour, b: Tour, gamma: float = 1.0) -> float:
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    return math.exp(-gamma * tour_distance(a, b))


def positions(tours: Sequence[Tour]) -> np.ndarray:
    """Stack tour position vectors as a float matrix, one row per tour."""
    if not tours:
        return np.zeros((0, 0))
    n = tours[0].n
    out = np.empty((len(tours), n), dtype=np.float64)
    for r, t in enumerate(tours):
        if t.n != n:
            raise ValueError("tours differ in size")
        out[r] = t.pos
    return out


def gram(pa: np.ndarray, pb: np.ndarray, gamma: float) -> np.ndarray:
    """Kernel matrix between two position matrices."""
    if pa.shape[1] != pb.shape[1]:
        raise ValueError("tours differ in size")
    n = pa.shape[1]
    phi = kernels.footrule(np.ascontiguousarray(pa), np.ascontiguousarray(pb)) / (n * (n - 1))
    return np.exp(-gamma * phi)


def normalize(g: float, g_min: float, g_max: float) -> float:
    if g_max == g_min:
        return 0.5
    return (g - g_min) / (g_max - g_min)


def denormalize(n_g: float, g_min: float, g_max: float) -> float:
    return n_g * (g_max - g_min) + g_min


@dataclass(frozen=True)
class TrainingSample:
    tour: Tour
    g: float

    def key(self) -> tuple[bytes, float]:
        return self.tour.key(), self.g


class TrainingSet:
    """Ordered (tour, objective) samples with bounds kept up to date."""

    def __init__(self, samples: Iterable[TrainingSample] = ()):
        self.samples: list[TrainingSample] = []
        self._keys: set = set()
        self.g_min = math.inf
        self.g_max = -math.inf
        for s in samples:
            self.append(s)

    def append(self, sample: TrainingSample):
        self.samples.append(sample)
        self._keys.add(sample.key())
        self.g_min = min(self.g_min, sample.g)
        self.g_max = max(self.g_max, sample.g)

    def merge(self, samples: Iterable[TrainingSample]) -> int:
        """Add samples not already present; returns how many were added."""
        added = 0
        for s in samples:
            if s.key() not in self._keys:
                self.append(s)
                added += 1
        return added

    def __contains__(self, sample: TrainingSample) -> bool:
        return sample.key() in self._keys

    def __len__(self):
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)

    @property
    def t(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class SvrHyperparams:
    gamma: float = 1.0
    C: float = 10.0
    epsilon: float = 0.01
    tol: float = 1e-3
    max_passes: int = 200

    def __post_init__(self):
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.C > 0:
            raise ValueError("C must be positive")
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be non-negative")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_passes < 1:
            raise ValueError("max_passes must be >= 1")


@dataclass
class SvrModel:
    beta: np.ndarray  # alpha - alpha*, one per retained tour
    b: float
    gamma: float
    tour_positions: np.ndarray  # (t, n)
    g_min: float
    g_max: float
    targets: np.ndarray = field(default_factory=lambda: np.zeros(0))  # raw objectives
    tours: list[Tour] = field(default_factory=list)
    iterations: int = 0

    @property
    def alpha(self) -> np.ndarray:
        return np.maximum(self.beta, 0.0)

    @property
    def alpha_star(self) -> np.ndarray:
        return np.maximum(-self.beta, 0.0)

    def predict_normalized_many(self, pos: np.ndarray) -> np.ndarray:
        if pos.shape[1] != self.tour_positions.shape[1]:
            raise ValueError("tour size does not match the model")
        k = gram(self.tour_positions, pos, self.gamma)
        return self.beta @ k + self.b

    def dump(self) -> str:
        lines = [f"b {self.b!r}", f"gamma {self.gamma!r}",
                 f"g_min {self.g_min!r}", f"g_max {self.g_max!r}"]
        for r in range(self.beta.shape[0]):
            g = self.targets[r] if r < self.targets.shape[0] else float("nan")
            tour = " ".join(str(int(c) + 1) for c in np.argsort(self.tour_positions[r]))
            lines.append(f"{self.beta[r]!r} {g!r} {tour}")
        return "\n".join(lines) + "\n"


def fit(training: TrainingSet | Sequence[TrainingSample],
        hp: SvrHyperparams = SvrHyperparams()) -> SvrModel:
    """Train epsilon-SVR on normalised objectives.

    Samples are put in a canonical order (tour, then objective) first, so the
    fitted model does not depend on the order samples arrived in.
    """
    samples = list(training)
    if len(samples) < 1:
        raise FitError("empty training set")
    samples.sort(key=lambda s: (s.tour.order.tolist(), s.g))
    g = np.array([s.g for s in samples], dtype=np.float64)
    g_min, g_max = float(g.min()), float(g.max())
    pos = positions([s.tour for s in samples])
    tours = [s.tour for s in samples]
    t = len(samples)
    if g_max == g_min:
        return SvrModel(np.zeros(t), 0.5, hp.gamma, pos, g_min, g_max, g, tours)
    y = (g - g_min) / (g_max - g_min)
    if t < 2 or (pos == pos[0]).all():
        # one distinct tour: only a constant can be learned
        return SvrModel(np.zeros(t), float(np.median(y)), hp.gamma, pos, g_min, g_max, g, tours)
    K = gram(pos, pos, hp.gamma)
    beta, b, iters = kernels.smo_svr(K, y, hp.C, hp.epsilon, hp.tol, hp.max_passes * 2 * t)
    return SvrModel(np.asarray(beta), float(b), hp.gamma, pos, g_min, g_max, g, tours, int(iters))


def predict_normalized(model: SvrModel, tour: Tour) -> float:
    return float(model.predict_normalized_many(tour.pos[None, :].astype(np.float64))[0])


def predict(model: SvrModel, tour: Tour) -> float:
    return denormalize(predict_normalized(model, tour), model.g_min, model.g_max)
