"""Model-based RL: learn the transition dynamics, plan daily, explore epsilon-greedily.

The agent stores hourly transitions in a bounded FIFO memory, refits a
small network mapping (temperature window, ambient, action power) to
the next indoor temperature once per day, and plans the next day's
action sequence on that learned model with the CEM or GA planner.
Exploration follows a harmonic schedule eps(d) = eps0 / d**x over days.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .mdp import ActionGrid, ComfortBand, ObservedState, TransitionSample
from .neural import (AdamOptimizer, MlpParams, MlpSpec, Normalizer, fit_normalizer,
                     forward_batch, train_minibatch)
from .planners import CemConfig, DynamicsModel, GaConfig, Plan, plan_cem, plan_ga

__all__ = [
    "SampleMemory",
    "ExplorationSchedule",
    "MbrlConfig",
    "TransitionModel",
    "LearnedDynamicsModel",
    "ModelBasedAgent",
    "train_transition_model",
]


class SampleMemory:
    """Bounded transition buffer with strict FIFO eviction."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._buffer: deque[TransitionSample] = deque(maxlen=capacity)

    def add(self, sample: TransitionSample) -> None:
        self._buffer.append(sample)

    def __len__(self) -> int:
        return len(self._buffer)

    def __iter__(self):
        return iter(self._buffer)

    def samples(self) -> list[TransitionSample]:
        return list(self._buffer)


@dataclass
class ExplorationSchedule:
    """Harmonic exploration decay eps(d) = initial / d**exponent, d >= 1."""

    initial: float = 0.5
    exponent: float = 0.7
    day: int = 1

    def __post_init__(self):
        if not 0.0 < self.initial <= 1.0:
            raise ValueError("initial epsilon must be in (0, 1]")
        if not self.exponent > 0.0:
            raise ValueError("decay exponent must be > 0")
        if self.day < 1:
            raise ValueError("day counter starts at 1")

    def epsilon(self) -> float:
        return self.initial / self.day ** self.exponent

    def advance(self) -> None:
        self.day += 1


@dataclass(frozen=True)
class MbrlConfig:
    history_length: int = 3
    memory_capacity: int = 4096
    epsilon_initial: float = 0.5
    epsilon_exponent: float = 0.7
    hidden: tuple[int, ...] = (32, 32)
    activation: str = "tanh"
    learning_rate: float = 1e-3
    epochs_per_update: int = 50
    batch_size: int = 256
    min_train_samples: int = 24
    holdout_fraction: float = 0.2
    planner: str = "cem"
    cem: CemConfig = field(default_factory=CemConfig)
    ga: GaConfig = field(default_factory=GaConfig)

    def __post_init__(self):
        if self.planner not in ("cem", "ga"):
            raise ValueError(f"unknown planner {self.planner!r}")
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must be in (0, 1)")
        if self.min_train_samples < 2:
            raise ValueError("min_train_samples must be >= 2")


@dataclass
class TransitionModel:
    """Next-temperature predictor: network plus frozen feature/target scaling.

    The normalizers are fitted at the first training call and kept fixed so
    that later updates resume from meaningful weights.  Before any training
    the model predicts a constant room-scale temperature.
    """

    mlp: MlpParams
    in_norm: Normalizer | None = None
    out_shift: float = 21.0
    out_scale: float = 1.0
    trained: bool = False

    @classmethod
    def create(cls, n_features: int, cfg: MbrlConfig, seed: int) -> "TransitionModel":
        spec = MlpSpec((n_features, *cfg.hidden, 1), cfg.activation, init_seed=seed)
        return cls(MlpParams.init(spec))

    def predict_batch(self, features: np.ndarray) -> np.ndarray:
        x = np.asarray(features, dtype=float)
        if self.in_norm is not None:
            x = self.in_norm.apply(x)
        y = forward_batch(self.mlp, x)[:, 0]
        return y * self.out_scale + self.out_shift


def sample_features(sample: TransitionSample, grid: ActionGrid) -> np.ndarray:
    return np.array(sample.s.indoor_history
                    + (sample.s.ambient_now, grid.levels_w[sample.a]))


def _training_matrix(memory: SampleMemory, grid: ActionGrid):
    samples = memory.samples()
    x = np.stack([sample_features(s, grid) for s in samples])
    y = np.array([s.s_next.indoor_history[0] for s in samples])
    return x, y


def train_transition_model(memory: SampleMemory, model: TransitionModel,
                           grid: ActionGrid, cfg: MbrlConfig,
                           rng: np.random.Generator) -> tuple[TransitionModel, float | None]:
    """Resume training on the memory; returns (model, holdout MAE in deg C).

    Returns MAE None as the skip signal when the memory is below the
    minimum sample count.  Deterministic for a given rng state.
    """
    if len(memory) < cfg.min_train_samples:
        return model, None

    x, y = _training_matrix(memory, grid)
    order = rng.permutation(len(y))
    n_holdout = max(1, int(round(len(y) * cfg.holdout_fraction)))
    holdout, train = order[:n_holdout], order[n_holdout:]

    if not model.trained:
        model.in_norm = fit_normalizer(x[train])
        model.out_shift = float(y[train].mean())
        model.out_scale = float(max(y[train].std(), 1e-6))
        model.trained = True

    x_train = model.in_norm.apply(x[train])
    y_train = (y[train] - model.out_shift) / model.out_scale
    optimizer = AdamOptimizer(cfg.learning_rate)
    n_train = len(train)
    for _ in range(cfg.epochs_per_update):
        perm = rng.permutation(n_train)
        for lo in range(0, n_train, cfg.batch_size):
            idx = perm[lo:lo + cfg.batch_size]
            train_minibatch(model.mlp, x_train[idx], y_train[idx, None], optimizer)

    pred = model.predict_batch(x[holdout])
    mae = float(np.mean(np.abs(pred - y[holdout])))
    return model, mae


class LearnedDynamicsModel:
    """DynamicsModel adapter around a TransitionModel (exact=False)."""

    exact = False

    def __init__(self, model: TransitionModel, grid: ActionGrid):
        self._model = model
        self._grid = grid

    def reset(self) -> None:
        pass

    def predict(self, obs: ObservedState, action_index: int,
                ambient_next_c: float) -> ObservedState:
        features = np.array(obs.indoor_history
                            + (obs.ambient_now, self._grid.levels_w[action_index]))
        t_next = float(self._model.predict_batch(features[None, :])[0])
        return ObservedState((t_next,) + obs.indoor_history[:-1], float(ambient_next_c))

    def rollout_temps(self, start: ObservedState, actions: np.ndarray,
                      ambient_window: np.ndarray) -> np.ndarray:
        actions = np.asarray(actions)
        n_seq, horizon = actions.shape
        levels = np.asarray(self._grid.levels_w)
        hist = np.tile(np.asarray(start.indoor_history), (n_seq, 1))
        out = np.empty((n_seq, horizon))
        for k in range(horizon):
            features = np.column_stack([
                hist,
                np.full(n_seq, ambient_window[k]),
                levels[actions[:, k]],
            ])
            t_next = self._model.predict_batch(features)
            out[:, k] = t_next
            hist = np.column_stack([t_next, hist[:, :-1]])
        return out


class ModelBasedAgent:
    """Daily plan-and-execute agent over a learned transition model.

    `act` serves the current day's plan (epsilon-greedy); `observe` files
    the transition; `daily_update` retrains the model, decays epsilon and
    plans the next day.  A DynamicsModel override can be injected to run
    the same loop on the exact emulator clone.
    """

    def __init__(self, cfg: MbrlConfig, grid: ActionGrid,
                 rng: np.random.Generator, seed: int = 0,
                 dynamics_override: DynamicsModel | None = None):
        self.cfg = cfg
        self.grid = grid
        self.memory = SampleMemory(cfg.memory_capacity)
        self.schedule = ExplorationSchedule(cfg.epsilon_initial, cfg.epsilon_exponent)
        n_features = cfg.history_length + 3  # temps window + ambient + action power
        self.model = TransitionModel.create(n_features, cfg, seed)
        self._rng = rng
        self._override = dynamics_override
        self._plan: tuple[int, ...] = (0,) * 24
        self._started = False
        self.mae_history: list[tuple[int, float]] = []

    def dynamics(self) -> DynamicsModel:
        if self._override is not None:
            return self._override
        return LearnedDynamicsModel(self.model, self.grid)

    def plan_day(self, obs: ObservedState, tariff_window, ambient_window,
                 band: ComfortBand, rng: np.random.Generator | None = None) -> Plan:
        rng = rng if rng is not None else self._rng
        planner = plan_cem if self.cfg.planner == "cem" else plan_ga
        planner_cfg = self.cem_or_ga()
        return planner(self.dynamics(), obs, min(24, len(tariff_window)), self.grid,
                       tariff_window, ambient_window, band, planner_cfg, rng)

    def cem_or_ga(self):
        return self.cfg.cem if self.cfg.planner == "cem" else self.cfg.ga

    def act(self, obs: ObservedState, hour_of_day: int,
            epsilon: float | None = None) -> int:
        eps = self.schedule.epsilon() if epsilon is None else epsilon
        if eps > 0.0 and self._rng.random() < eps:
            return int(self._rng.integers(len(self.grid)))
        return self._plan[hour_of_day % 24]

    def observe(self, sample: TransitionSample) -> None:
        self.memory.add(sample)

    def daily_update(self, obs: ObservedState, tariff_window, ambient_window,
                     band: ComfortBand) -> float | None:
        """Retrain on the memory, decay epsilon, and plan the coming day."""
        if self._started:
            self.schedule.advance()
        self._started = True
        self.model, mae = train_transition_model(self.memory, self.model,
                                                 self.grid, self.cfg, self._rng)
        if mae is not None:
            self.mae_history.append((self.schedule.day, mae))
        plan = self.plan_day(obs, tariff_window, ambient_window, band)
        self._plan = plan.actions + (0,) * max(0, 24 - len(plan.actions))
        return mae
