"""Adaptive surrogate lifecycle: collect, train, test, then filter restarts.

Phase graph::

    INITIAL -> TRAINING -> TESTING -> APPLYING
                  ^           |           |
                  +-----------+-----------+

Training is instantaneous: it is entered and left inside a single
``observe`` call, so callers only ever see the other three phases.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .instance import Tour
from .surrogate import (SvrHyperparams, SvrModel, TrainingSample, TrainingSet, fit,
                        normalize, predict_normalized)


class Phase(enum.Enum):
    INITIAL = "initial"
    TRAINING = "training"
    TESTING = "testing"
    APPLYING = "applying"


ALLOWED_TRANSITIONS = frozenset({
    (Phase.INITIAL, Phase.TRAINING),
    (Phase.TRAINING, Phase.TESTING),
    (Phase.TESTING, Phase.TRAINING),
    (Phase.TESTING, Phase.APPLYING),
    (Phase.APPLYING, Phase.TRAINING),
})


class ControllerError(RuntimeError):
    pass


def compute_ne(n_g: float, n_g_hat: float) -> float:
    """Signed normalised error; positive means the model under-predicted."""
    return n_g - n_g_hat


def update_msne(msne_old: float, ne: float, r: int) -> float:
    """Streaming mean of squared errors after the ``r``-th observation."""
    if r < 1:
        raise ValueError("run counter must be >= 1")
    return msne_old + (ne * ne - msne_old) / r


def compute_mte(msne: float, beta: float) -> float:
    if msne < 0:
        raise ValueError("msne must be non-negative")
    return beta * math.sqrt(msne)


def filter_probability(n_g_hat: float, mte: float) -> float:
    """Chance of discarding a tour whose normalised prediction is ``n_g_hat``."""
    if mte < 0:
        raise ValueError("mte must be non-negative")
    if n_g_hat >= 1.0 - mte:
        return 0.0
    if n_g_hat < -mte:
        return 1.0
    x = n_g_hat + mte
    return math.sqrt(1.0 - x * x)


def resolve_t_init(setting: int | str, restarts: int) -> int:
    """``t_init`` from an absolute count or a ``"10%"``-style share of restarts."""
    if isinstance(setting, str):
        s = setting.strip()
        if s.endswith("%"):
            value = max(2, math.ceil(float(s[:-1]) / 100.0 * restarts))
        else:
            value = int(s)
    else:
        value = int(setting)
    if value < 2:
        raise ValueError("t_init must be >= 2")
    return value


@dataclass
class ControllerConfig:
    t_init: int = 100
    lam: float = 0.20
    error_limit: float = 0.02
    beta: float = 2.0
    svr: SvrHyperparams = field(default_factory=SvrHyperparams)
    filter_rng_seed: int = 0

    def __post_init__(self):
        if self.t_init < 2:
            raise ValueError("t_init must be >= 2")
        if not self.lam > 0:
            raise ValueError("lambda must be positive")
        if not self.error_limit > 0:
            raise ValueError("error limit must be positive")
        if not self.beta >= 0:
            raise ValueError("beta must be non-negative")


@dataclass(frozen=True)
class Decision:
    solve: bool
    predicted_n_g: float | None = None
    filter_probability: float | None = None

    @property
    def kind(self) -> str:
        return "solve" if self.solve else "skip"


@dataclass
class Stats:
    proposals: int = 0
    filtered: int = 0
    solved: int = 0
    fits: int = 0
    fit_seconds: float = 0.0
    predict_seconds: float = 0.0


class Controller:
    """Single-owner state machine driven by ``propose`` / ``observe`` calls."""

    def __init__(self, config: ControllerConfig, event_sink=None):
        self.config = config
        self.rng = np.random.default_rng(config.filter_rng_seed)
        self.phase = Phase.INITIAL
        self.training_set = TrainingSet()
        self.model: SvrModel | None = None
        self.buffer: list[TrainingSample] = []
        self.msne = 0.0
        self.r = 0
        self.testing_runs_done = 0
        self.testing_target = 0
        self.applying_large_ne = 0
        self.stats = Stats()
        self.transitions: list[tuple[Phase, Phase]] = []
        self.event_sink = event_sink
        self._pending: tuple[bytes, float] | None = None

    # -- helpers ---------------------------------------------------------------

    def _event(self, event: str, restart_index: int, **extra):
        if self.event_sink is None:
            return
        rec = {"event": event, "restart_index": restart_index, "phase": self.phase.value,
               "n_g_hat": extra.get("n_g_hat"), "p_filter": extra.get("p_filter"),
               "ne": extra.get("ne"), "msne": self.msne, "size": len(self.training_set)}
        self.event_sink(rec)

    def _set_phase(self, phase: Phase, restart_index: int):
        edge = (self.phase, phase)
        if edge not in ALLOWED_TRANSITIONS:
            raise ControllerError(f"illegal transition {edge[0].value} -> {edge[1].value}")
        self.transitions.append(edge)
        self.phase = phase
        self._event("phase_change", restart_index)

    @property
    def mte(self) -> float:
        return compute_mte(self.msne, self.config.beta)

    def _predict(self, tour: Tour) -> float:
        t0 = time.perf_counter()
        value = predict_normalized(self.model, tour)
        self.stats.predict_seconds += time.perf_counter() - t0
        return value

    def _retrain(self, restart_index: int):
        self.training_set.merge(self.buffer)
        self._set_phase(Phase.TRAINING, restart_index)
        t0 = time.perf_counter()
        self.model = fit(self.training_set, self.config.svr)
        self.stats.fit_seconds += time.perf_counter() - t0
        self.stats.fits += 1
        self._event("retrain", restart_index)
        self._set_phase(Phase.TESTING, restart_index)
        self.buffer = []
        self.msne = 0.0
        self.r = 0
        self.testing_runs_done = 0
        self.testing_target = math.ceil(self.config.lam * len(self.training_set))
        self.applying_large_ne = 0

    # -- driver interface --------------------------------------------------------

    def propose(self, tour: Tour, restart_index: int = -1, rng=None) -> Decision:
        """Decide whether ``tour`` is worth solving."""
        self.stats.proposals += 1
        if self.phase is not Phase.APPLYING:
            self._event("propose", restart_index)
            return Decision(True)
        if self.model is None:
            raise ControllerError("applying phase without a model")
        n_hat = self._predict(tour)
        p = filter_probability(n_hat, self.mte)
        u = (rng or self.rng).random()
        self._event("propose", restart_index, n_g_hat=n_hat, p_filter=p)
        if u < p:
            self.stats.filtered += 1
            self._pending = None
            return Decision(False, n_hat, p)
        self._pending = (tour.key(), n_hat)
        return Decision(True, n_hat, p)

    def observe(self, tour: Tour, g: float, restart_index: int = -1):
        """Feed back the final objective of a solved tour."""
        if not math.isfinite(g):
            raise ControllerError("objective must be finite")
        self.stats.solved += 1
        cfg = self.config
        sample = TrainingSample(tour, float(g))
        if self.phase is Phase.INITIAL:
            self.training_set.append(sample)
            self._event("observe", restart_index)
            if len(self.training_set) >= cfg.t_init:
                self._retrain(restart_index)
            return
        if self.phase not in (Phase.TESTING, Phase.APPLYING):
            raise ControllerError(f"observe during {self.phase.value}")

        pending, self._pending = self._pending, None
        if pending is not None and pending[0] == tour.key():
            n_hat = pending[1]
        else:
            n_hat = self._predict(tour)
        ts = self.training_set
        ne = compute_ne(normalize(g, ts.g_min, ts.g_max), n_hat)
        self.r += 1
        if ne > cfg.error_limit:
            self.buffer.append(sample)
            if self.phase is Phase.APPLYING:
                self.applying_large_ne += 1
        self.msne = update_msne(self.msne, ne, self.r)
        self._event("observe", restart_index, n_g_hat=n_hat, ne=ne)

        if g < ts.g_min or g > ts.g_max:
            self.buffer.append(sample)
            self._retrain(restart_index)
            return
        if self.phase is Phase.TESTING:
            self.testing_runs_done += 1
            if self.testing_runs_done >= self.testing_target:
                if self.msne > cfg.error_limit:
                    self._retrain(restart_index)
                else:
                    self._set_phase(Phase.APPLYING, restart_index)
            return
        if self.msne > cfg.error_limit or self.applying_large_ne > len(ts) / 2.0:
            self._retrain(restart_index)
